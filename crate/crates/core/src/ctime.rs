//! Continuous-time walk with rate-1 exponential holding times, evaluated by
//! uniformization: `e^{-t(I-Q)} = sum_n Poisson(n; t) Q^n`.

use serde::Serialize;

use crate::error::{invalid, HitError, Result};
use crate::hitting::AbsorbingSystem;
use crate::numeric::{check_solution, Lu, Tolerances};

/// Hard cap on uniformization terms.
const MAX_TERMS: usize = 50_000_000;

/// Poisson weights for `n = 0, 1, ...` computed in log space, stopped once the
/// tail mass is provably below `tol`. Returns the weights and the tail bound.
fn poisson_weights(t: f64, tol: f64) -> Result<(Vec<f64>, f64)> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    if t == 0.0 {
        return Ok((vec![1.0], 0.0));
    }
    let ln_t = t.ln();
    let mut log_w = -t;
    let mut weights = Vec::new();
    let mut n = 0usize;
    loop {
        let w = log_w.exp();
        weights.push(w);
        // For n + 1 > t the ratio of consecutive weights is below r < 1.
        if n as f64 + 1.0 > t {
            let r = t / (n as f64 + 1.0);
            let tail = w * r / (1.0 - r);
            if tail < tol {
                return Ok((weights, tail));
            }
        }
        n += 1;
        if n > MAX_TERMS {
            return Err(HitError::NumericalFailure(format!(
                "uniformization needs more than {MAX_TERMS} terms at t = {t}"
            )));
        }
        log_w += ln_t - (n as f64).ln();
    }
}

/// `P(tau^c <= t)` per start, in reduced index order.
pub fn ct_cdf(system: &AbsorbingSystem, t: f64, tol: f64) -> Result<Vec<f64>> {
    let (weights, _) = poisson_weights(t, tol)?;
    Ok(cdf_from_weights(system, &weights))
}

// The partial sum sum_{k=1}^n Q^{k-1} P_1 is P(tau <= n).
fn cdf_from_weights(system: &AbsorbingSystem, weights: &[f64]) -> Vec<f64> {
    let q = system.q();
    let dim = system.dim();
    let mut out = vec![0.0; dim];
    let mut partial = vec![0.0; dim];
    let mut step = system.first_step().to_vec();
    for (n, w) in weights.iter().enumerate() {
        if n > 0 {
            for (s, p) in partial.iter_mut().zip(&step) {
                *s += p;
            }
            step = q.mul_vec_unchecked(&step);
        }
        for (o, s) in out.iter_mut().zip(&partial) {
            *o += w * s;
        }
    }
    out.iter().map(|x| x.clamp(0.0, 1.0)).collect()
}

/// Density of `tau^c` at `t`, `e^{-t(I-Q)} P_1`.
pub fn ct_pdf(system: &AbsorbingSystem, t: f64, tol: f64) -> Result<Vec<f64>> {
    let (weights, _) = poisson_weights(t, tol)?;
    Ok(pdf_from_weights(system, &weights))
}

fn pdf_from_weights(system: &AbsorbingSystem, weights: &[f64]) -> Vec<f64> {
    let q = system.q();
    let mut out = vec![0.0; system.dim()];
    let mut step = system.first_step().to_vec();
    for (n, w) in weights.iter().enumerate() {
        if n > 0 {
            step = q.mul_vec_unchecked(&step);
        }
        for (o, s) in out.iter_mut().zip(&step) {
            *o += w * s;
        }
    }
    out
}

/// `E[(tau^c)^k]` for `k` in {1, 2}: `(I-Q)^{-2} P_1` and `2 (I-Q)^{-3} P_1`.
pub fn ct_moments(system: &AbsorbingSystem, order: u32) -> Result<Vec<f64>> {
    ct_moments_with(system, order, &Tolerances::default())
}

pub fn ct_moments_with(system: &AbsorbingSystem, order: u32, tol: &Tolerances) -> Result<Vec<f64>> {
    if !(1..=2).contains(&order) {
        return Err(invalid(format!("moment order must be 1 or 2, got {order}")));
    }
    let a = system.i_minus_q();
    let lu = Lu::factor(&a)?;
    let mut x = system.first_step().to_vec();
    for _ in 0..=order {
        let next = lu.solve(&x).map_err(|e| match e {
            HitError::SingularMatrix { .. } => HitError::NotConnected("I - Q is singular".into()),
            other => other,
        })?;
        check_solution(&a, &next, &x, tol)?;
        x = next;
    }
    if order == 2 {
        x.iter_mut().for_each(|v| *v *= 2.0);
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CTimeEvaluation {
    pub target: usize,
    pub index_map: Vec<usize>,
    pub times: Vec<f64>,
    /// `cdf[k][r]` at `times[k]` for reduced start `r`.
    pub cdf: Vec<Vec<f64>>,
    pub pdf: Vec<Vec<f64>>,
    /// Largest Poisson tail bound over the grid.
    pub truncation: f64,
}

impl CTimeEvaluation {
    pub fn cdf_series(&self, start: usize) -> Result<Vec<f64>> {
        let r = self.column(start)?;
        Ok(self.cdf.iter().map(|row| row[r]).collect())
    }

    pub fn pdf_series(&self, start: usize) -> Result<Vec<f64>> {
        let r = self.column(start)?;
        Ok(self.pdf.iter().map(|row| row[r]).collect())
    }

    fn column(&self, start: usize) -> Result<usize> {
        self.index_map
            .iter()
            .position(|&x| x == start)
            .ok_or_else(|| {
                invalid(format!(
                    "start {start} equals the target or is out of range"
                ))
            })
    }
}

/// CDF and PDF on a time grid.
pub fn ct_evaluate(system: &AbsorbingSystem, times: &[f64], tol: f64) -> Result<CTimeEvaluation> {
    let mut cdf = Vec::with_capacity(times.len());
    let mut pdf = Vec::with_capacity(times.len());
    let mut truncation: f64 = 0.0;
    for &t in times {
        let (weights, tail) = poisson_weights(t, tol)?;
        truncation = truncation.max(tail);
        cdf.push(cdf_from_weights(system, &weights));
        pdf.push(pdf_from_weights(system, &weights));
    }
    Ok(CTimeEvaluation {
        target: system.target(),
        index_map: system.index_map().to_vec(),
        times: times.to_vec(),
        cdf,
        pdf,
        truncation,
    })
}

/// `steps + 1` evenly spaced points from `a` to `b`.
pub fn time_grid(a: f64, b: f64, steps: usize) -> Result<Vec<f64>> {
    if !(a.is_finite() && b.is_finite()) || a < 0.0 || b < a {
        return Err(invalid(format!("bad time range {a}:{b}")));
    }
    if steps == 0 {
        return Ok(vec![a]);
    }
    let h = (b - a) / steps as f64;
    Ok((0..=steps)
        .map(|k| if k == steps { b } else { a + h * k as f64 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_complete, build_cycle, simple_walk_kernel};
    use crate::hitting::{make_absorbing, moments};

    fn system(g: crate::graph::Graph, target: usize) -> AbsorbingSystem {
        make_absorbing(&simple_walk_kernel(&g).unwrap(), target).unwrap()
    }

    #[test]
    fn k2_is_exponential() {
        let s = system(build_complete(2).unwrap(), 1);
        for t in [0.0, 0.3, 1.0, 4.0, 20.0] {
            let c = ct_cdf(&s, t, 1e-14).unwrap()[0];
            let f = ct_pdf(&s, t, 1e-14).unwrap()[0];
            assert!((c - (1.0 - (-t).exp())).abs() < 1e-13, "t={t}");
            assert!((f - (-t).exp()).abs() < 1e-13, "t={t}");
        }
        assert!((ct_moments(&s, 1).unwrap()[0] - 1.0).abs() < 1e-14);
        assert!((ct_moments(&s, 2).unwrap()[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_values() {
        let s = system(build_cycle(4).unwrap(), 0);
        assert!(ct_cdf(&s, 0.0, 1e-12).unwrap().iter().all(|&x| x == 0.0));
        assert_eq!(ct_pdf(&s, 0.0, 1e-12).unwrap(), s.first_step().to_vec());
        assert!(ct_cdf(&s, -1.0, 1e-12).is_err());
        assert!(ct_moments(&s, 3).is_err());
    }

    #[test]
    fn mean_matches_discrete() {
        let s = system(build_cycle(4).unwrap(), 0);
        let m = moments(&s).unwrap();
        let ct1 = ct_moments(&s, 1).unwrap();
        let ct2 = ct_moments(&s, 2).unwrap();
        let r = s.reduced_index(2).unwrap();
        assert!((ct1[r] - 4.0).abs() < 1e-12);
        for k in 0..s.dim() {
            assert!((ct1[k] - m.mean[k]).abs() < 1e-10);
            assert!((ct2[k] - m.second[k] - m.mean[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn large_time_absorbs() {
        let s = system(build_cycle(10).unwrap(), 0);
        let c = ct_cdf(&s, 50.0 * 25.0, 1e-12).unwrap();
        assert!(c.iter().all(|&x| (x - 1.0).abs() < 1e-6));
    }

    #[test]
    fn grid_endpoints() {
        let g = time_grid(0.0, 1.0, 4).unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(time_grid(2.0, 1.0, 3).is_err());
    }
}
