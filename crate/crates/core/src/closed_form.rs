//! Closed-form first-passage laws for complete, complete bipartite, cycle
//! and path graphs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `P(tau = n) = ((k-2)/(k-1))^{n-1} / (k-1)` on `K_k`.
pub fn closed_complete(k: usize, n: usize) -> Result<f64> {
    if k < 2 {
        return Err(invalid(format!("complete graph needs k >= 2, got {k}")));
    }
    if n < 1 {
        return Err(invalid("n must be >= 1"));
    }
    let k = k as f64;
    Ok(((k - 2.0) / (k - 1.0)).powi(n as i32 - 1) / (k - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BipartiteCase {
    /// Start in the other part from the target.
    Cross,
    /// Start in the target's part.
    SameSide,
}

/// Hitting law on `K_{k1,k2}` where the target lies in the part of size `k2`.
///
/// Cross: `P(tau = 2m - 1) = (1 - 1/k2)^{m-1} / k2`, zero at even steps.
/// Same side: `P(tau = 2m) = (1 - 1/k2)^{m-1} / k2`, zero at odd steps.
pub fn closed_bipartite(k1: usize, k2: usize, case: BipartiteCase, n: usize) -> Result<f64> {
    if k1 < 1 || k2 < 1 {
        return Err(invalid(format!(
            "bipartite parts must be nonempty, got ({k1}, {k2})"
        )));
    }
    if case == BipartiteCase::SameSide && k2 < 2 {
        return Err(invalid(
            "same-side case needs at least two nodes in the target's part",
        ));
    }
    if n < 1 {
        return Err(invalid("n must be >= 1"));
    }
    let m = match case {
        BipartiteCase::Cross if n % 2 == 1 => n.div_ceil(2),
        BipartiteCase::SameSide if n.is_multiple_of(2) => n / 2,
        _ => return Ok(0.0),
    };
    let k2 = k2 as f64;
    Ok((1.0 - 1.0 / k2).powi(m as i32 - 1) / k2)
}

/// `P(tau_{i,0} = n)` on the `k`-cycle:
/// `(1/k) sum_{m=0}^{k-1} cos(m pi/k)^{n-1} (sin(m pi/k) + sin(m(k-1) pi/k)) sin(i m pi/k)`.
pub fn closed_cycle(k: usize, i: usize, n: usize) -> Result<f64> {
    if k < 2 {
        return Err(invalid(format!("cycle formula needs k >= 2, got {k}")));
    }
    if i < 1 || i >= k {
        return Err(invalid(format!("start {i} must lie in 1..{k}")));
    }
    if n < 1 {
        return Err(invalid("n must be >= 1"));
    }
    let kf = k as f64;
    let mut acc = 0.0;
    for m in 0..k {
        let theta = m as f64 * PI / kf;
        let weight = theta.sin() + (m as f64 * (kf - 1.0) * PI / kf).sin();
        acc += theta.cos().powi(n as i32 - 1) * weight * (i as f64 * theta).sin();
    }
    Ok(acc / kf)
}

/// `E[tau_{i,j}] = d (k - d)` with `d` the circular displacement.
pub fn cycle_mean(k: usize, i: usize, j: usize) -> Result<f64> {
    if k < 3 {
        return Err(invalid(format!("cycle needs k >= 3, got {k}")));
    }
    if i >= k || j >= k {
        return Err(invalid("node outside the cycle"));
    }
    let diff = i.abs_diff(j);
    let d = diff.min(k - diff);
    Ok((d * (k - d)) as f64)
}

/// First passage to endpoint 0 of the path `0 - 1 - ... - k` (`k + 1` nodes)
/// from node `i`, read off the `2k`-cycle by reflecting through the target.
pub fn path_endpoint_pmf(path_nodes: usize, i: usize, n: usize) -> Result<f64> {
    if path_nodes < 3 {
        return Err(invalid(format!(
            "reflection needs a path with at least 3 nodes, got {path_nodes}"
        )));
    }
    let k = path_nodes - 1;
    if i < 1 || i > k {
        return Err(invalid(format!("start {i} must lie in 1..={k}")));
    }
    closed_cycle(2 * k, i, n)
}
