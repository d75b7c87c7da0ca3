//! Character analysis of random walks on finite abelian groups.
//!
//! A group is a product of cyclic factors `Z_{n_1} x ... x Z_{n_m}`. Elements
//! are indexed in mixed radix with the first factor most significant, which
//! is also the lexicographic order of the tuples. Characters are indexed the
//! same way; index 0 is the trivial character.
//!
//! All Fourier-side arithmetic is complex. Outputs are checked for realness
//! against `Tolerances::imaginary_discard` rather than forced real.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::closed_form::closed_cycle;
use crate::error::{invalid, HitError, Result};
use crate::graph::{abelian_cayley_graph, build_torus_diagonal, simple_walk_kernel};
use crate::hitting::{make_absorbing, moments, pmf, return_second_moment};
use crate::numeric::{DenseMatrix, Lu, Tolerances};

/// Largest group order accepted.
pub const MAX_GROUP_ORDER: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteAbelianGroup {
    factors: Vec<usize>,
    order: usize,
}

impl FiniteAbelianGroup {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() {
            return Err(invalid("group needs at least one factor"));
        }
        let mut order = 1usize;
        for &n in &factors {
            if n < 2 {
                return Err(invalid(format!("cyclic factor must be >= 2, got {n}")));
            }
            order = order
                .checked_mul(n)
                .filter(|&o| o <= MAX_GROUP_ORDER)
                .ok_or_else(|| invalid(format!("group order exceeds {MAX_GROUP_ORDER}")))?;
        }
        Ok(FiniteAbelianGroup { factors, order })
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Tuple of the element with the given index.
    pub fn element(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, &n) in out.iter_mut().zip(&self.factors).rev() {
            *slot = index % n;
            index /= n;
        }
        out
    }

    pub fn index_of(&self, element: &[usize]) -> Result<usize> {
        if element.len() != self.factors.len() {
            return Err(HitError::DimensionMismatch {
                expected: self.factors.len(),
                got: element.len(),
            });
        }
        let mut idx = 0;
        for (&g, &n) in element.iter().zip(&self.factors) {
            if g >= n {
                return Err(invalid(format!("component {g} outside Z_{n}")));
            }
            idx = idx * n + g;
        }
        Ok(idx)
    }

    pub fn add_index(&self, a: usize, b: usize) -> usize {
        let (ea, eb) = (self.element(a), self.element(b));
        let sum: Vec<usize> = ea
            .iter()
            .zip(&eb)
            .zip(&self.factors)
            .map(|((x, y), n)| (x + y) % n)
            .collect();
        self.index_of(&sum).unwrap()
    }

    pub fn neg_index(&self, a: usize) -> usize {
        let neg: Vec<usize> = self
            .element(a)
            .iter()
            .zip(&self.factors)
            .map(|(x, n)| (n - x) % n)
            .collect();
        self.index_of(&neg).unwrap()
    }

    pub fn sub_index(&self, a: usize, b: usize) -> usize {
        self.add_index(a, self.neg_index(b))
    }

    pub fn label(&self, index: usize) -> String {
        let e = self.element(index);
        if e.len() == 1 {
            e[0].to_string()
        } else {
            let parts: Vec<String> = e.iter().map(usize::to_string).collect();
            format!("({})", parts.join(","))
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Character table in closed form: `rho_a(g) = exp(2 pi i sum_l a_l g_l / n_l)`.
///
/// Phases are reduced exactly in integers modulo `lcm(n_l)` and looked up in a
/// table of roots of unity.
#[derive(Debug, Clone)]
pub struct CharacterBasis {
    group: FiniteAbelianGroup,
    elements: Vec<Vec<usize>>,
    lcm: usize,
    roots: Vec<Complex64>,
}

impl CharacterBasis {
    pub fn new(group: &FiniteAbelianGroup) -> Self {
        let lcm = group
            .factors
            .iter()
            .fold(1, |acc, &n| acc / gcd(acc, n) * n);
        let roots = (0..lcm)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / lcm as f64))
            .collect();
        let elements = (0..group.order()).map(|i| group.element(i)).collect();
        CharacterBasis {
            group: group.clone(),
            elements,
            lcm,
            roots,
        }
    }

    pub fn len(&self) -> usize {
        self.group.order()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    fn phase(&self, a: usize, g: usize) -> usize {
        let (ea, eg) = (&self.elements[a], &self.elements[g]);
        let mut k = 0usize;
        for ((x, y), n) in ea.iter().zip(eg).zip(&self.group.factors) {
            k = (k + (x * y % n) * (self.lcm / n)) % self.lcm;
        }
        k
    }

    /// `rho_a(g)`.
    pub fn value(&self, a: usize, g: usize) -> Complex64 {
        self.roots[self.phase(a, g)]
    }

    /// `rho_a(g^{-1}) = conj(rho_a(g))`.
    pub fn value_inverse(&self, a: usize, g: usize) -> Complex64 {
        let k = self.phase(a, g);
        self.roots[(self.lcm - k) % self.lcm]
    }
}

/// Increment distribution `p(g)` of a walk on the group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepLaw {
    table: Vec<f64>,
}

impl StepLaw {
    /// Validates nonnegativity, normalization and `p(e) = 0`. Symmetry is
    /// checked separately by the engines that need it.
    pub fn new(group: &FiniteAbelianGroup, table: Vec<f64>) -> Result<Self> {
        if table.len() != group.order() {
            return Err(HitError::DimensionMismatch {
                expected: group.order(),
                got: table.len(),
            });
        }
        if table.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid("step probabilities must be finite and nonnegative"));
        }
        let total: f64 = table.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("step law sums to {total}, not 1")));
        }
        if table[0] != 0.0 {
            return Err(invalid("step law puts mass on the identity (self-loop)"));
        }
        Ok(StepLaw { table })
    }

    pub fn from_pairs(group: &FiniteAbelianGroup, pairs: &[(Vec<usize>, f64)]) -> Result<Self> {
        let mut table = vec![0.0; group.order()];
        for (g, p) in pairs {
            let i = group.index_of(g)?;
            if table[i] != 0.0 {
                return Err(invalid(format!("element {g:?} listed twice")));
            }
            table[i] = *p;
        }
        Self::new(group, table)
    }

    /// Uniform law over the listed steps.
    pub fn uniform(group: &FiniteAbelianGroup, steps: &[Vec<usize>]) -> Result<Self> {
        let p = 1.0 / steps.len() as f64;
        let pairs: Vec<_> = steps.iter().map(|s| (s.clone(), p)).collect();
        Self::from_pairs(group, &pairs)
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn prob(&self, g: usize) -> f64 {
        self.table[g]
    }

    pub fn is_symmetric(&self, group: &FiniteAbelianGroup) -> bool {
        (0..group.order()).all(|g| (self.table[g] - self.table[group.neg_index(g)]).abs() <= 1e-12)
    }

    pub fn require_symmetric(&self, group: &FiniteAbelianGroup) -> Result<()> {
        if self.is_symmetric(group) {
            Ok(())
        } else {
            Err(HitError::PreconditionViolation(
                "step law is not symmetric (p(g) != p(-g))".into(),
            ))
        }
    }
}

/// Values indexed by characters.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierVector(pub Vec<Complex64>);

impl FourierVector {
    pub fn values(&self) -> &[Complex64] {
        &self.0
    }

    pub fn max_imaginary(&self) -> f64 {
        self.0.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Real parts, after checking every imaginary part is below `tol`.
    pub fn real_parts(&self, tol: f64) -> Result<Vec<f64>> {
        let im = self.max_imaginary();
        if im > tol {
            return Err(HitError::NumericalFailure(format!(
                "expected real Fourier values, imaginary part {im:e}"
            )));
        }
        Ok(self.0.iter().map(|z| z.re).collect())
    }
}

/// `f^(rho_a) = sum_g f(g) rho_a(g)`.
pub fn fourier(basis: &CharacterBasis, f: &[Complex64]) -> Result<FourierVector> {
    let n = basis.len();
    if f.len() != n {
        return Err(HitError::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    Ok(FourierVector(
        (0..n)
            .map(|a| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (g, v) in f.iter().enumerate() {
                    if *v != Complex64::new(0.0, 0.0) {
                        acc += v * basis.value(a, g);
                    }
                }
                acc
            })
            .collect(),
    ))
}

pub fn fourier_real(basis: &CharacterBasis, f: &[f64]) -> Result<FourierVector> {
    let c: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fourier(basis, &c)
}

/// `f(g) = (1/|G|) sum_a rho_a(g^{-1}) F(a)`.
pub fn inverse_fourier(basis: &CharacterBasis, big_f: &FourierVector) -> Result<Vec<Complex64>> {
    let n = basis.len();
    if big_f.0.len() != n {
        return Err(HitError::DimensionMismatch {
            expected: n,
            got: big_f.0.len(),
        });
    }
    let scale = 1.0 / n as f64;
    Ok((0..n)
        .map(|g| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, v) in big_f.0.iter().enumerate() {
                acc += basis.value_inverse(a, g) * v;
            }
            acc * scale
        })
        .collect())
}

/// `p^` for a step law, with the realness and `p^(trivial) = 1` checks.
pub fn step_transform(basis: &CharacterBasis, law: &StepLaw, tol: &Tolerances) -> Result<Vec<f64>> {
    let hat = fourier_real(basis, law.table())?;
    let re = hat.real_parts(tol.imaginary_discard)?;
    debug_assert!((re[0] - 1.0).abs() < 1e-12);
    Ok(re)
}

fn nontrivial_denominators(p_hat: &[f64]) -> Result<Vec<f64>> {
    // 1 - p^ for every nontrivial character.
    p_hat
        .iter()
        .enumerate()
        .skip(1)
        .map(|(a, &v)| {
            let d = 1.0 - v;
            if d.abs() < 1e-12 {
                Err(HitError::NotErgodic { character: a })
            } else {
                Ok(d)
            }
        })
        .collect()
}

/// Expected hitting time `h(g) = E[tau_{g,e}] = sum_{a != 0} (1 - rho_a(g)) / (1 - p^(rho_a))`.
///
/// By translation invariance this is also `E[tau_{i,j}]` for `g = i - j`.
pub fn expected_hitting_abelian(
    group: &FiniteAbelianGroup,
    law: &StepLaw,
    g: usize,
) -> Result<f64> {
    expected_hitting_abelian_with(&CharacterBasis::new(group), law, g, &Tolerances::default())
}

pub fn expected_hitting_abelian_with(
    basis: &CharacterBasis,
    law: &StepLaw,
    g: usize,
    tol: &Tolerances,
) -> Result<f64> {
    let group = basis.group();
    law.require_symmetric(group)?;
    check_element(group, g)?;
    let p_hat = step_transform(basis, law, tol)?;
    let den = nontrivial_denominators(&p_hat)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, d) in den.iter().enumerate() {
        let a = k + 1;
        acc += (Complex64::new(1.0, 0.0) - basis.value(a, g)) / d;
    }
    real_checked(acc, tol, group.order() as f64)
}

fn check_element(group: &FiniteAbelianGroup, g: usize) -> Result<()> {
    if g < group.order() {
        Ok(())
    } else {
        Err(invalid(format!(
            "element index {g} outside group of order {}",
            group.order()
        )))
    }
}

fn real_checked(z: Complex64, tol: &Tolerances, scale: f64) -> Result<f64> {
    if z.im.abs() > tol.imaginary_discard * scale.max(1.0) {
        return Err(HitError::NumericalFailure(format!(
            "character sum has imaginary part {:e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// Second moment and variance of `tau_{e,g}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbelianVariance {
    pub second_moment: f64,
    pub mean: f64,
    pub variance: f64,
    pub return_second_moment: f64,
}

/// Return second moment `q* = E[(tau_e^+)^2]` by first-step analysis on the
/// Cayley graph of `(group, law)`.
pub fn q_star(group: &FiniteAbelianGroup, law: &StepLaw) -> Result<f64> {
    let g = abelian_cayley_graph(group, law)?;
    let k = simple_walk_kernel(&g)?;
    return_second_moment(&k, 0)
}

/// Second moment via the character sum
/// `q(g) = (1/|G|) sum_{a != 0} (2|G| p^_a / (1 - p^_a)^2 + q* / (1 - p^_a)) (1 - rho_a(g^{-1}))`
/// and variance `q(g) - h(g)^2`.
pub fn variance_abelian(
    group: &FiniteAbelianGroup,
    law: &StepLaw,
    g: usize,
) -> Result<AbelianVariance> {
    let qs = q_star(group, law)?;
    variance_abelian_with(
        &CharacterBasis::new(group),
        law,
        g,
        qs,
        &Tolerances::default(),
    )
}

pub fn variance_abelian_with(
    basis: &CharacterBasis,
    law: &StepLaw,
    g: usize,
    q_star: f64,
    tol: &Tolerances,
) -> Result<AbelianVariance> {
    let group = basis.group();
    law.require_symmetric(group)?;
    check_element(group, g)?;
    let n = group.order() as f64;
    let p_hat = step_transform(basis, law, tol)?;
    let den = nontrivial_denominators(&p_hat)?;
    let mut q = Complex64::new(0.0, 0.0);
    let mut h = Complex64::new(0.0, 0.0);
    for (k, d) in den.iter().enumerate() {
        let a = k + 1;
        let w = Complex64::new(1.0, 0.0) - basis.value_inverse(a, g);
        let coeff = 2.0 * n * p_hat[a] / (d * d) + q_star / d;
        q += w * coeff;
        h += w / d;
    }
    let second = real_checked(q / n, tol, q_star.abs().max(n))?;
    let mean = real_checked(h, tol, n)?;
    let variance = second - mean * mean;
    if variance < -1e-8 * second.abs().max(1.0) {
        return Err(HitError::NumericalFailure(format!(
            "negative variance {variance:e}"
        )));
    }
    Ok(AbelianVariance {
        second_moment: second,
        mean,
        variance,
        return_second_moment: q_star,
    })
}

/// Diagonal of the fundamental matrix `Z = (I - P + 11^T/|G|)^{-1}`, and the
/// value `-1/|G| + 2/|G|^2 + Z_ee` that the character-sum literature pairs
/// with it. Reported next to the first-step `q*` for comparison only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FundamentalMatrixReport {
    pub z_diagonal: Vec<f64>,
    pub kemeny_snell_expression: f64,
    pub first_step_q_star: f64,
}

pub fn fundamental_matrix_report(
    group: &FiniteAbelianGroup,
    law: &StepLaw,
) -> Result<FundamentalMatrixReport> {
    let n = group.order();
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for (s, &p) in law.table().iter().enumerate() {
            if p != 0.0 {
                m[(i, group.add_index(i, s))] -= p;
            }
        }
        for j in 0..n {
            m[(i, j)] += 1.0 / n as f64;
        }
        m[(i, i)] += 1.0;
    }
    let lu = Lu::factor(&m)?;
    let mut diag = Vec::with_capacity(n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        diag.push(lu.solve(&e)?[j]);
        e[j] = 0.0;
    }
    let nf = n as f64;
    Ok(FundamentalMatrixReport {
        kemeny_snell_expression: -1.0 / nf + 2.0 / (nf * nf) + diag[0],
        z_diagonal: diag,
        first_step_q_star: q_star(group, law)?,
    })
}

/// `probs[n][g] = P(tau_{g,e} = n + 1)` for every group element `g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupPmfTable {
    pub horizon: usize,
    pub probs: Vec<Vec<f64>>,
    pub residual: Vec<f64>,
}

impl GroupPmfTable {
    /// `P(tau_{i,j} = n)` for `n = 1..=horizon`, using `tau_{i,j} ~ tau_{i-j,e}`.
    pub fn series(&self, group: &FiniteAbelianGroup, start: usize, target: usize) -> Vec<f64> {
        let g = group.sub_index(start, target);
        self.probs.iter().map(|row| row[g]).collect()
    }
}

/// Distribution of hitting times to the identity via the Fourier-domain
/// recurrence `v_n = diag(p^) v_{n-1} - (1/|G|) (sum_a p^_a v_{n-1,a}) 1`,
/// `v_1 = p^`, inverted back to the group each step.
pub fn fourier_pmf(
    group: &FiniteAbelianGroup,
    law: &StepLaw,
    horizon: usize,
) -> Result<GroupPmfTable> {
    fourier_pmf_with(
        &CharacterBasis::new(group),
        law,
        horizon,
        &Tolerances::default(),
    )
}

pub fn fourier_pmf_with(
    basis: &CharacterBasis,
    law: &StepLaw,
    horizon: usize,
    tol: &Tolerances,
) -> Result<GroupPmfTable> {
    let group = basis.group();
    law.require_symmetric(group)?;
    if horizon == 0 {
        return Err(invalid("horizon must be >= 1"));
    }
    let n = group.order();
    let p_hat: Vec<Complex64> = fourier_real(basis, law.table())?.0;
    let mut v = p_hat.clone();
    let mut probs = Vec::with_capacity(horizon);
    let mut cumulative = vec![0.0; n];
    for step in 1..=horizon {
        if step > 1 {
            let mut s = Complex64::new(0.0, 0.0);
            for (ph, x) in p_hat.iter().zip(&v) {
                s += ph * x;
            }
            let s = s / n as f64;
            for (x, ph) in v.iter_mut().zip(&p_hat) {
                *x = *ph * *x - s;
            }
        }
        let m = inverse_fourier(basis, &FourierVector(v.clone()))?;
        let mut row = Vec::with_capacity(n);
        for (g, z) in m.iter().enumerate() {
            if z.im.abs() > tol.imaginary_discard {
                return Err(HitError::NumericalFailure(format!(
                    "m_{step}({}) has imaginary part {:e}",
                    group.label(g),
                    z.im
                )));
            }
            if z.re < -1e-10 {
                return Err(HitError::NumericalFailure(format!(
                    "m_{step}({}) = {:e} is negative",
                    group.label(g),
                    z.re
                )));
            }
            row.push(z.re);
        }
        if row[0].abs() > 1e-10 {
            return Err(HitError::NumericalFailure(format!(
                "boundary condition m_{step}(e) = 0 violated: {:e}",
                row[0]
            )));
        }
        for (c, x) in cumulative.iter_mut().zip(&row) {
            *c += x;
        }
        probs.push(row);
    }
    let mut residual: Vec<f64> = cumulative.iter().map(|c| 1.0 - c).collect();
    residual[0] = 0.0;
    Ok(GroupPmfTable {
        horizon,
        probs,
        residual,
    })
}

/// `phi^{-1}(x, y) = (x + y, x - y) mod p`, the inverse of
/// `phi(a, b) = ((a + b)/2, (a - b)/2)` on `Z_p^2`.
pub fn diag_torus_map(p: usize, displacement: (usize, usize)) -> Result<(usize, usize)> {
    if p < 3 || p.is_multiple_of(2) {
        return Err(invalid(format!(
            "diagonal map needs an odd modulus >= 3, got {p}"
        )));
    }
    let (x, y) = (displacement.0 % p, displacement.1 % p);
    Ok(((x + y) % p, (x + p - y) % p))
}

/// `phi(a, b) = ((a + b) * 2^{-1}, (a - b) * 2^{-1}) mod p`.
pub fn diag_torus_phi(p: usize, v: (usize, usize)) -> Result<(usize, usize)> {
    if p < 3 || p.is_multiple_of(2) {
        return Err(invalid(format!(
            "diagonal map needs an odd modulus >= 3, got {p}"
        )));
    }
    let half = p.div_ceil(2);
    let (a, b) = (v.0 % p, v.1 % p);
    Ok(((a + b) * half % p, (a + p - b) * half % p))
}

/// Both the coordinate-convolution series and the direct series for a
/// diagonal-torus hitting time, side by side. Nothing here asserts that they agree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagTorusReport {
    pub modulus: usize,
    pub start: (usize, usize),
    pub target: (usize, usize),
    /// `(a', b') = phi^{-1}(start - target)`.
    pub mapped_displacement: (usize, usize),
    pub horizon: usize,
    /// `sum_{i=0}^n c_i(a') c_{n-i}(b')` for `n = 0..=horizon`.
    pub convolution: Vec<f64>,
    /// `P(tau = n)` for `n = 0..=horizon` from the absorbing-chain engine, absent
    /// when start equals target.
    pub direct: Option<Vec<f64>>,
    pub max_discrepancy: Option<f64>,
    pub degenerate: bool,
    pub note: String,
}

/// First-hit law on the `p`-cycle from 0 to `i`, with `c_0(0) = 1`.
fn cycle_first_hit(p: usize, i: usize, horizon: usize) -> Result<Vec<f64>> {
    let mut c = vec![0.0; horizon + 1];
    if i == 0 {
        c[0] = 1.0;
        return Ok(c);
    }
    for (n, slot) in c.iter_mut().enumerate().skip(1) {
        *slot = closed_cycle(p, i, n)?;
    }
    Ok(c)
}

pub fn diag_torus_convolution_report(
    p: usize,
    start: (usize, usize),
    target: (usize, usize),
    horizon: usize,
) -> Result<DiagTorusReport> {
    if start.0 >= p || start.1 >= p || target.0 >= p || target.1 >= p {
        return Err(invalid("torus coordinates must lie in 0..p"));
    }
    let disp = ((start.0 + p - target.0) % p, (start.1 + p - target.1) % p);
    let (a1, b1) = diag_torus_map(p, disp)?;
    let ca = cycle_first_hit(p, a1, horizon)?;
    let cb = cycle_first_hit(p, b1, horizon)?;
    let convolution: Vec<f64> = (0..=horizon)
        .map(|n| (0..=n).map(|i| ca[i] * cb[n - i]).sum())
        .collect();
    let degenerate = start == target;
    let (direct, max_discrepancy, note) = if degenerate {
        (
            None,
            None,
            "start equals target: the convolution puts unit mass at n = 0 while the absorbing-chain \
             engine has no non-trivial hitting time to report"
                .to_string(),
        )
    } else {
        let g = build_torus_diagonal(p)?;
        let k = simple_walk_kernel(&g)?;
        let sys = make_absorbing(&k, target.0 * p + target.1)?;
        let table = pmf(&sys, horizon.max(1))?;
        let mut d = vec![0.0];
        d.extend(
            table
                .series(start.0 * p + start.1)?
                .into_iter()
                .take(horizon),
        );
        let disc = d
            .iter()
            .zip(&convolution)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        (
            Some(d),
            Some(disc),
            "convolution of coordinate first-passage laws compared against the direct engine; \
             agreement is reported, not assumed"
                .to_string(),
        )
    };
    Ok(DiagTorusReport {
        modulus: p,
        start,
        target,
        mapped_displacement: (a1, b1),
        horizon,
        convolution,
        direct,
        max_discrepancy,
        degenerate,
        note,
    })
}

/// Cross-check helper: moments of the general engine on the Cayley graph,
/// indexed by group element (`mean[g] = E[tau_{g,e}]`).
pub fn direct_moments_by_element(
    group: &FiniteAbelianGroup,
    law: &StepLaw,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = abelian_cayley_graph(group, law)?;
    let k = simple_walk_kernel(&g)?;
    let sys = make_absorbing(&k, 0)?;
    let m = moments(&sys)?;
    let mut mean = vec![0.0; group.order()];
    let mut var = vec![0.0; group.order()];
    for (r, &orig) in sys.index_map().iter().enumerate() {
        mean[orig] = m.mean[r];
        var[orig] = m.variance[r];
    }
    Ok((mean, var))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyclic(k: usize) -> (FiniteAbelianGroup, StepLaw) {
        let g = FiniteAbelianGroup::new(vec![k]).unwrap();
        let law = StepLaw::uniform(&g, &[vec![1], vec![k - 1]]).unwrap();
        (g, law)
    }

    #[test]
    fn element_indexing_is_lexicographic() {
        let g = FiniteAbelianGroup::new(vec![2, 3]).unwrap();
        assert_eq!(g.order(), 6);
        assert_eq!(g.element(0), vec![0, 0]);
        assert_eq!(g.element(1), vec![0, 1]);
        assert_eq!(g.element(3), vec![1, 0]);
        assert_eq!(g.index_of(&[1, 2]).unwrap(), 5);
        assert_eq!(g.add_index(5, 4), g.index_of(&[0, 0]).unwrap());
        assert_eq!(g.neg_index(4), g.index_of(&[1, 2]).unwrap());
        assert!(FiniteAbelianGroup::new(vec![1]).is_err());
    }

    #[test]
    fn characters_orthogonal_and_nontrivial_sums_vanish() {
        for factors in [vec![5], vec![2, 2, 2], vec![3, 4], vec![2, 3, 5]] {
            let g = FiniteAbelianGroup::new(factors).unwrap();
            let b = CharacterBasis::new(&g);
            let n = g.order();
            assert_eq!(b.len(), n);
            for a in 0..n {
                let s: Complex64 = (0..n).map(|x| b.value(a, x)).sum();
                let expect = if a == 0 { n as f64 } else { 0.0 };
                assert!((s - Complex64::new(expect, 0.0)).norm() < 1e-10);
                for c in 0..n {
                    let ip: Complex64 = (0..n)
                        .map(|x| b.value(a, x) * b.value(c, x).conj())
                        .sum::<Complex64>()
                        / n as f64;
                    let e = if a == c { 1.0 } else { 0.0 };
                    assert!((ip - Complex64::new(e, 0.0)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn transform_examples() {
        let g = FiniteAbelianGroup::new(vec![4]).unwrap();
        let b = CharacterBasis::new(&g);
        let delta = fourier_real(&b, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(delta
            .0
            .iter()
            .all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let flat = fourier_real(&b, &[0.25; 4]).unwrap();
        assert!((flat.0[0].re - 1.0).abs() < 1e-15);
        assert!(flat.0[1..].iter().all(|z| z.norm() < 1e-15));
        let (_, law) = cyclic(4);
        let hat = step_transform(&b, &law, &Tolerances::default()).unwrap();
        for (h, e) in hat.iter().zip([1.0, 0.0, -1.0, 0.0]) {
            assert!((h - e).abs() < 1e-15);
        }
    }

    #[test]
    fn hitting_mean_on_cycles() {
        let (g, law) = cyclic(10);
        assert!((expected_hitting_abelian(&g, &law, 5).unwrap() - 25.0).abs() < 1e-10);
        assert_eq!(expected_hitting_abelian(&g, &law, 0).unwrap(), 0.0);
        for d in 1..10 {
            let e = (d * (10 - d)) as f64;
            assert!((expected_hitting_abelian(&g, &law, d).unwrap() - e).abs() < 1e-9);
        }
    }

    #[test]
    fn variance_on_triangle() {
        let (g, law) = cyclic(3);
        assert!((q_star(&g, &law).unwrap() - 11.0).abs() < 1e-12);
        let v = variance_abelian(&g, &law, 1).unwrap();
        assert!((v.second_moment - 6.0).abs() < 1e-10);
        assert!((v.variance - 2.0).abs() < 1e-10);
        let e = variance_abelian(&g, &law, 0).unwrap();
        assert_eq!((e.second_moment, e.variance), (0.0, 0.0));
    }

    #[test]
    fn variance_matches_direct_engine_on_c5() {
        let (g, law) = cyclic(5);
        let (mean, var) = direct_moments_by_element(&g, &law).unwrap();
        for x in 1..5 {
            let v = variance_abelian(&g, &law, x).unwrap();
            assert!((v.mean - mean[x]).abs() < 1e-9);
            assert!(
                (v.variance - var[x]).abs() < 1e-8,
                "{} vs {}",
                v.variance,
                var[x]
            );
        }
    }

    #[test]
    fn non_ergodic_and_asymmetric_laws_rejected() {
        // Steps of +-2 on Z_4 never leave the even coset.
        let g = FiniteAbelianGroup::new(vec![4]).unwrap();
        let law = StepLaw::uniform(&g, &[vec![2]]).unwrap();
        assert!(matches!(
            expected_hitting_abelian(&g, &law, 1),
            Err(HitError::NotErgodic { .. })
        ));
        let g5 = FiniteAbelianGroup::new(vec![5]).unwrap();
        let skew = StepLaw::from_pairs(&g5, &[(vec![1], 0.7), (vec![4], 0.3)]).unwrap();
        assert!(matches!(
            fourier_pmf(&g5, &skew, 5),
            Err(HitError::PreconditionViolation(_))
        ));
        assert!(StepLaw::from_pairs(&g5, &[(vec![0], 1.0)]).is_err());
    }

    #[test]
    fn fourier_pmf_first_step_is_step_law() {
        let (g, law) = cyclic(7);
        let t = fourier_pmf(&g, &law, 3).unwrap();
        for (x, p) in t.probs[0].iter().zip(law.table()) {
            assert!((x - p).abs() < 1e-15);
        }
        assert!(t.probs.iter().all(|row| row[0].abs() < 1e-10));
    }

    #[test]
    fn hypercube_antipode_three_steps() {
        let g = FiniteAbelianGroup::new(vec![2, 2, 2]).unwrap();
        let law = StepLaw::uniform(&g, &[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        let t = fourier_pmf(&g, &law, 3).unwrap();
        let corner = g.index_of(&[1, 1, 1]).unwrap();
        assert!((t.probs[2][corner] - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_map_examples() {
        assert_eq!(diag_torus_map(5, (0, 0)).unwrap(), (0, 0));
        assert_eq!(diag_torus_map(5, (1, 0)).unwrap(), (1, 1));
        assert_eq!(diag_torus_phi(5, (1, 1)).unwrap(), (1, 0));
        assert_eq!(diag_torus_map(3, (1, 1)).unwrap(), (2, 0));
        assert!(diag_torus_map(4, (1, 0)).is_err());
        for p in [3, 5, 7, 9] {
            for x in 0..p {
                for y in 0..p {
                    let m = diag_torus_map(p, (x, y)).unwrap();
                    assert_eq!(diag_torus_phi(p, m).unwrap(), (x, y));
                }
            }
        }
    }

    #[test]
    fn degenerate_report_is_flagged() {
        let r = diag_torus_convolution_report(3, (1, 1), (1, 1), 10).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.convolution[0], 1.0);
        assert!(r.direct.is_none());
    }

    #[test]
    fn kemeny_snell_report_exposes_both_values() {
        let (g, law) = cyclic(3);
        let r = fundamental_matrix_report(&g, &law).unwrap();
        assert_eq!(r.z_diagonal.len(), 3);
        assert!((r.first_step_q_star - 11.0).abs() < 1e-12);
        // Z for the triangle walk: eigenvalue 1/(1 - (-1/2)) = 2/3 on the
        // nontrivial space and 1 on constants, so Z_ee = 1/3 + (2/3)(2/3).
        assert!((r.z_diagonal[0] - (1.0 / 3.0 + 4.0 / 9.0)).abs() < 1e-12);
    }
}
