//! General-graph engine: the absorbing system for a target node, the
//! first-passage recurrence `P_n = Q^{n-1} P_1`, and moments.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, HitError, Result};
use crate::graph::{TransitionKernel, ROW_SUM_TOLERANCE};
use crate::numeric::{check_solution, DenseMatrix, Lu, Matrix, Tolerances};

/// Walk with the target made absorbing, restricted to the non-target nodes.
#[derive(Debug, Clone)]
pub struct AbsorbingSystem {
    target: usize,
    q: DenseMatrix,
    first_step: Vec<f64>,
    index_map: Vec<usize>,
}

impl AbsorbingSystem {
    /// Builds a system from an explicit substochastic `q` and first-step
    /// vector. `index_map[r]` is the original node of reduced index `r`.
    pub fn from_parts(
        target: usize,
        q: DenseMatrix,
        first_step: Vec<f64>,
        index_map: Vec<usize>,
    ) -> Result<Self> {
        let n = q.rows();
        if !q.is_square() || first_step.len() != n || index_map.len() != n {
            return Err(HitError::DimensionMismatch {
                expected: n,
                got: first_step.len().min(index_map.len()),
            });
        }
        if index_map.contains(&target) {
            return Err(invalid("target must not appear in the index map"));
        }
        let sys = AbsorbingSystem {
            target,
            q,
            first_step,
            index_map,
        };
        sys.validate()?;
        Ok(sys)
    }

    fn validate(&self) -> Result<()> {
        let n = self.q.rows();
        if n == 0 {
            return Err(invalid(
                "absorbing system needs at least one transient node",
            ));
        }
        for i in 0..n {
            let row = self.q.row(i);
            if row
                .iter()
                .chain(std::iter::once(&self.first_step[i]))
                .any(|x| *x < 0.0)
            {
                return Err(invalid(format!("negative probability in row {i}")));
            }
            let total = row.iter().sum::<f64>() + self.first_step[i];
            if (total - 1.0).abs() > ROW_SUM_TOLERANCE * (n as f64 + 1.0) {
                return Err(invalid(format!("row {i}: P_1 + Q 1 = {total}, expected 1")));
            }
        }
        // Spectral radius < 1: some Q^m 1 with m <= n has every entry below 1.
        let mut v = vec![1.0; n];
        for _ in 0..=n {
            v = self.q.mul_vec_unchecked(&v);
            if v.iter().all(|&x| x < 1.0 - 1e-15) {
                return Ok(());
            }
        }
        Err(HitError::NotConnected(format!(
            "target {} is unreachable from some node",
            self.target
        )))
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn first_step(&self) -> &[f64] {
        &self.first_step
    }

    pub fn index_map(&self) -> &[usize] {
        &self.index_map
    }

    pub fn dim(&self) -> usize {
        self.q.rows()
    }

    /// Reduced index of an original node.
    pub fn reduced_index(&self, node: usize) -> Result<usize> {
        self.index_map
            .iter()
            .position(|&x| x == node)
            .ok_or_else(|| invalid(format!("node {node} is the target or out of range")))
    }

    pub(crate) fn i_minus_q(&self) -> DenseMatrix {
        self.q.identity_minus_scaled(1.0)
    }
}

/// Deletes the target's row and column from the kernel.
pub fn make_absorbing(kernel: &TransitionKernel, target: usize) -> Result<AbsorbingSystem> {
    let n = kernel.node_count();
    kernel.graph().check_node(target)?;
    kernel.graph().require_connected()?;
    let index_map: Vec<usize> = (0..n).filter(|&i| i != target).collect();
    let m = kernel.matrix();
    let mut q = DenseMatrix::zeros(n - 1, n - 1);
    for (r, &i) in index_map.iter().enumerate() {
        for (c, &k) in index_map.iter().enumerate() {
            q[(r, c)] = m[(i, k)];
        }
    }
    let first_step = index_map.iter().map(|&i| m[(i, target)]).collect();
    AbsorbingSystem::from_parts(target, q, first_step, index_map)
}

/// `probs[n][r] = P(tau_{index_map[r], target} = n + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmfTable {
    pub target: usize,
    pub horizon: usize,
    pub probs: Vec<Vec<f64>>,
    /// Mass not absorbed within the horizon, `Q^horizon 1`.
    pub residual: Vec<f64>,
    pub index_map: Vec<usize>,
}

impl PmfTable {
    /// `P(tau = n)` for `n = 1..=horizon` from an original start node.
    pub fn series(&self, start: usize) -> Result<Vec<f64>> {
        let r = self
            .index_map
            .iter()
            .position(|&x| x == start)
            .ok_or_else(|| {
                invalid(format!(
                    "start {start} equals the target or is out of range"
                ))
            })?;
        Ok(self.probs.iter().map(|row| row[r]).collect())
    }

    pub fn max_residual(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }
}

/// Iterates `P_{n+1} = Q P_n` for exactly `horizon` steps.
pub fn pmf(system: &AbsorbingSystem, horizon: usize) -> Result<PmfTable> {
    pmf_impl(system, horizon, None)
}

/// Like [`pmf`] but stops as soon as every start has residual below `tail`.
pub fn pmf_until(system: &AbsorbingSystem, max_horizon: usize, tail: f64) -> Result<PmfTable> {
    pmf_impl(system, max_horizon, Some(tail))
}

fn pmf_impl(system: &AbsorbingSystem, horizon: usize, tail: Option<f64>) -> Result<PmfTable> {
    if horizon == 0 {
        return Err(invalid("horizon must be >= 1"));
    }
    let q = &system.q;
    let mut p = system.first_step.clone();
    let mut survival = vec![1.0; system.dim()];
    let mut probs = Vec::with_capacity(horizon.min(1 << 16));
    for _ in 0..horizon {
        let next = q.mul_vec_unchecked(&p);
        probs.push(std::mem::replace(&mut p, next));
        survival = q.mul_vec_unchecked(&survival);
        if let Some(t) = tail {
            if survival.iter().all(|&s| s < t) {
                break;
            }
        }
    }
    Ok(PmfTable {
        target: system.target,
        horizon: probs.len(),
        probs,
        residual: survival,
        index_map: system.index_map.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub target: usize,
    pub index_map: Vec<usize>,
    pub mean: Vec<f64>,
    pub second: Vec<f64>,
    pub variance: Vec<f64>,
}

impl MomentReport {
    pub fn at(&self, start: usize) -> Result<(f64, f64, f64)> {
        let r = self
            .index_map
            .iter()
            .position(|&x| x == start)
            .ok_or_else(|| {
                invalid(format!(
                    "start {start} equals the target or is out of range"
                ))
            })?;
        Ok((self.mean[r], self.second[r], self.variance[r]))
    }
}

/// `E[tau] = (I - Q)^{-1} 1` and `E[tau^2] = 2 Q (I - Q)^{-2} 1 + (I - Q)^{-1} 1`.
pub fn moments(system: &AbsorbingSystem) -> Result<MomentReport> {
    moments_with(system, &Tolerances::default())
}

pub fn moments_with(system: &AbsorbingSystem, tol: &Tolerances) -> Result<MomentReport> {
    let a = system.i_minus_q();
    let lu = Lu::factor(&a)?;
    let lu_solve = |b: &[f64]| -> Result<Vec<f64>> {
        let x = lu.solve(b).map_err(|e| match e {
            HitError::SingularMatrix { .. } => HitError::NotConnected("I - Q is singular".into()),
            other => other,
        })?;
        check_solution(&a, &x, b, tol)?;
        Ok(x)
    };
    let ones = vec![1.0; system.dim()];
    let mean = lu_solve(&ones)?;
    let q_ones = system.q.mul_vec_unchecked(&ones);
    let y = lu_solve(&q_ones)?;
    let z = lu_solve(&y)?;
    let second: Vec<f64> = z.iter().zip(&mean).map(|(z, m)| 2.0 * z + m).collect();
    let variance: Vec<f64> = second.iter().zip(&mean).map(|(s, m)| s - m * m).collect();
    for (v, s) in variance.iter().zip(&second) {
        if *v < -1e-9 * s.max(1.0) {
            return Err(HitError::NumericalFailure(format!(
                "negative variance {v:e}"
            )));
        }
    }
    Ok(MomentReport {
        target: system.target,
        index_map: system.index_map.clone(),
        mean,
        second,
        variance,
    })
}

/// `phi(t) = E[exp(i t tau)] = (I - e^{it} Q)^{-1} e^{it} P_1`, per start.
pub fn char_function(system: &AbsorbingSystem, t: f64) -> Result<Vec<Complex64>> {
    let z = Complex64::from_polar(1.0, t);
    let qc: Matrix<Complex64> = system.q.map(|x| Complex64::new(x, 0.0));
    let a = qc.identity_minus_scaled(z);
    let b: Vec<Complex64> = system.first_step.iter().map(|&p| z * p).collect();
    crate::numeric::solve(&a, &b).map_err(|e| match e {
        HitError::SingularMatrix { .. } => {
            HitError::NumericalFailure("I - e^{it} Q is singular".into())
        }
        other => other,
    })
}

/// `E[(tau_j^+)^2]`, the second moment of the return time to `j`, by
/// conditioning on the first step.
pub fn return_second_moment(kernel: &TransitionKernel, j: usize) -> Result<f64> {
    Ok(return_moments(kernel, j)?.1)
}

/// `(E[tau_j^+], E[(tau_j^+)^2])`.
pub fn return_moments(kernel: &TransitionKernel, j: usize) -> Result<(f64, f64)> {
    let sys = make_absorbing(kernel, j)?;
    let m = moments(&sys)?;
    let mut first = kernel.prob(j, j);
    let mut second = kernel.prob(j, j);
    for (r, &s) in sys.index_map.iter().enumerate() {
        let p = kernel.prob(j, s);
        first += p * (1.0 + m.mean[r]);
        second += p * (1.0 + 2.0 * m.mean[r] + m.second[r]);
    }
    Ok((first, second))
}

pub const BRUTE_MAX_NODES: usize = 6;
pub const BRUTE_MAX_STEPS: usize = 10;

/// Exhaustive oracle: sums the probabilities of every walk of length
/// `n <= n_max` from `start` that first touches `target` at its last step.
/// Returns `P(tau = n)` for `n = 1..=n_max`.
pub fn brute_pmf(
    kernel: &TransitionKernel,
    start: usize,
    target: usize,
    n_max: usize,
) -> Result<Vec<f64>> {
    let v = kernel.node_count();
    if v > BRUTE_MAX_NODES {
        return Err(HitError::OracleTooLarge(format!(
            "{v} nodes > {BRUTE_MAX_NODES}"
        )));
    }
    if n_max > BRUTE_MAX_STEPS {
        return Err(HitError::OracleTooLarge(format!(
            "{n_max} steps > {BRUTE_MAX_STEPS}"
        )));
    }
    kernel.graph().check_node(start)?;
    kernel.graph().check_node(target)?;
    if start == target {
        return Err(invalid("start and target coincide"));
    }
    let mut out = vec![0.0; n_max];
    fn walk(
        k: &TransitionKernel,
        node: usize,
        target: usize,
        depth: usize,
        prob: f64,
        out: &mut [f64],
    ) {
        for next in 0..k.node_count() {
            let p = k.prob(node, next);
            if p == 0.0 {
                continue;
            }
            if next == target {
                out[depth] += prob * p;
            } else if depth + 1 < out.len() {
                walk(k, next, target, depth + 1, prob * p, out);
            }
        }
    }
    if n_max > 0 {
        walk(kernel, start, target, 0, 1.0, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{
        build_complete, build_cycle, build_diamond, build_path, simple_walk_kernel,
    };

    fn diamond_system() -> AbsorbingSystem {
        make_absorbing(&simple_walk_kernel(&build_diamond().unwrap()).unwrap(), 0).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn diamond_matches_printed_q_and_p1() {
        let s = diamond_system();
        let third = 1.0 / 3.0;
        let expect = DenseMatrix::from_rows(&[
            vec![0.0, third, third],
            vec![third, 0.0, third],
            vec![0.5, 0.5, 0.0],
        ])
        .unwrap();
        assert_eq!(s.q(), &expect);
        assert_eq!(s.first_step(), &[third, third, 0.0]);
        assert_eq!(s.index_map(), &[1, 2, 3]);
    }

    #[test]
    fn k2_and_c4_systems() {
        let k2 =
            make_absorbing(&simple_walk_kernel(&build_complete(2).unwrap()).unwrap(), 1).unwrap();
        assert_eq!(k2.q().data(), &[0.0]);
        assert_eq!(k2.first_step(), &[1.0]);
        let c4 = make_absorbing(&simple_walk_kernel(&build_cycle(4).unwrap()).unwrap(), 0).unwrap();
        let expect = DenseMatrix::from_rows(&[
            vec![0.0, 0.5, 0.0],
            vec![0.5, 0.0, 0.5],
            vec![0.0, 0.5, 0.0],
        ])
        .unwrap();
        assert_eq!(c4.q(), &expect);
    }

    #[test]
    fn unreachable_target_is_rejected() {
        let q = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = AbsorbingSystem::from_parts(2, q, vec![0.0, 0.0], vec![0, 1]);
        assert!(matches!(r, Err(HitError::NotConnected(_))));
    }

    #[test]
    fn diamond_pmf_first_steps() {
        let t = pmf(&diamond_system(), 2).unwrap();
        close(&t.probs[0], &[1.0 / 3.0, 1.0 / 3.0, 0.0], 1e-16);
        close(&t.probs[1], &[1.0 / 9.0, 1.0 / 9.0, 1.0 / 3.0], 1e-16);
    }

    #[test]
    fn pmf_residual_matches_column_sums() {
        let t = pmf(&diamond_system(), 60).unwrap();
        for r in 0..3 {
            let s: f64 = t.probs.iter().map(|row| row[r]).sum();
            assert!((1.0 - s - t.residual[r]).abs() < 1e-12);
        }
    }

    #[test]
    fn pmf_until_stops_early() {
        let k2 =
            make_absorbing(&simple_walk_kernel(&build_complete(2).unwrap()).unwrap(), 0).unwrap();
        let t = pmf_until(&k2, 100, 1e-12).unwrap();
        assert_eq!(t.horizon, 1);
        assert_eq!(t.probs, vec![vec![1.0]]);
    }

    #[test]
    fn cycle_mean_from_long_pmf() {
        let sys =
            make_absorbing(&simple_walk_kernel(&build_cycle(10).unwrap()).unwrap(), 0).unwrap();
        let t = pmf(&sys, 5000).unwrap();
        let series = t.series(5).unwrap();
        let mean: f64 = series
            .iter()
            .enumerate()
            .map(|(n, p)| (n + 1) as f64 * p)
            .sum();
        assert!((mean - 25.0).abs() < 1e-6);
    }

    #[test]
    fn complete_graph_moments() {
        let sys =
            make_absorbing(&simple_walk_kernel(&build_complete(4).unwrap()).unwrap(), 0).unwrap();
        let m = moments(&sys).unwrap();
        close(&m.mean, &[3.0; 3], 1e-12);
        close(&m.variance, &[6.0; 3], 1e-12);
        let k2 =
            make_absorbing(&simple_walk_kernel(&build_complete(2).unwrap()).unwrap(), 0).unwrap();
        let m = moments(&k2).unwrap();
        assert_eq!((m.mean[0], m.second[0], m.variance[0]), (1.0, 1.0, 0.0));
    }

    #[test]
    fn cycle_variance_matches_pmf_summation() {
        let sys =
            make_absorbing(&simple_walk_kernel(&build_cycle(10).unwrap()).unwrap(), 0).unwrap();
        let m = moments(&sys).unwrap();
        let (mean, second, var) = m.at(5).unwrap();
        assert!((mean - 25.0).abs() < 1e-10);
        let series = pmf(&sys, 6000).unwrap().series(5).unwrap();
        let s2: f64 = series
            .iter()
            .enumerate()
            .map(|(n, p)| ((n + 1) as f64).powi(2) * p)
            .sum();
        assert!((s2 - second).abs() < 1e-6);
        assert!((s2 - 625.0 - var).abs() < 1e-6);
    }

    #[test]
    fn char_function_examples() {
        let sys = diamond_system();
        let at0 = char_function(&sys, 0.0).unwrap();
        assert!(at0
            .iter()
            .all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-14));
        let k2 =
            make_absorbing(&simple_walk_kernel(&build_complete(2).unwrap()).unwrap(), 0).unwrap();
        for t in [0.3, 1.0, 2.5] {
            let z = char_function(&k2, t).unwrap()[0];
            assert!((z - Complex64::from_polar(1.0, t)).norm() < 1e-14);
        }
        // Central finite difference at 0 gives i * mean.
        let h = 1e-5;
        let (plus, minus) = (
            char_function(&sys, h).unwrap(),
            char_function(&sys, -h).unwrap(),
        );
        let mean = moments(&sys).unwrap().mean;
        for r in 0..3 {
            let d = (plus[r] - minus[r]) / (2.0 * h);
            assert!((d - Complex64::new(0.0, mean[r])).norm() < 1e-6);
        }
    }

    #[test]
    fn return_moments_examples() {
        let k2 = simple_walk_kernel(&build_complete(2).unwrap()).unwrap();
        assert_eq!(return_second_moment(&k2, 0).unwrap(), 4.0);
        let c3 = simple_walk_kernel(&build_cycle(3).unwrap()).unwrap();
        assert!((return_second_moment(&c3, 0).unwrap() - 11.0).abs() < 1e-12);
        // Uniform stationary law on vertex-transitive graphs: E[tau^+] = V.
        let c7 = simple_walk_kernel(&build_cycle(7).unwrap()).unwrap();
        assert!((return_moments(&c7, 3).unwrap().0 - 7.0).abs() < 1e-10);
    }

    #[test]
    fn brute_oracle_examples() {
        let diamond = simple_walk_kernel(&build_diamond().unwrap()).unwrap();
        assert!((brute_pmf(&diamond, 1, 0, 2).unwrap()[1] - 1.0 / 9.0).abs() < 1e-16);
        let c3 = simple_walk_kernel(&build_cycle(3).unwrap()).unwrap();
        assert!((brute_pmf(&c3, 1, 0, 2).unwrap()[1] - 0.25).abs() < 1e-16);
        let k2 = simple_walk_kernel(&build_complete(2).unwrap()).unwrap();
        assert_eq!(brute_pmf(&k2, 0, 1, 1).unwrap(), vec![1.0]);
        let big = simple_walk_kernel(&build_path(7).unwrap()).unwrap();
        assert!(matches!(
            brute_pmf(&big, 1, 0, 3),
            Err(HitError::OracleTooLarge(_))
        ));
        assert!(matches!(
            brute_pmf(&k2, 0, 1, 11),
            Err(HitError::OracleTooLarge(_))
        ));
    }

    #[test]
    fn brute_matches_recurrence_on_diamond() {
        let k = simple_walk_kernel(&build_diamond().unwrap()).unwrap();
        for target in 0..4 {
            let sys = make_absorbing(&k, target).unwrap();
            let t = pmf(&sys, 8).unwrap();
            for &start in sys.index_map() {
                close(
                    &brute_pmf(&k, start, target, 8).unwrap(),
                    &t.series(start).unwrap(),
                    1e-12,
                );
            }
        }
    }
}
