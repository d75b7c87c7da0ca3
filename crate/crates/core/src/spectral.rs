//! Hitting-time generating functions on vertex-transitive graphs.
//!
//! On a vertex-transitive `d`-regular graph every node sees `Trace(A^k)/V`
//! closed walks of length `k`, which gives the recursion
//!
//! ```text
//! M_n = A^n / d^n - sum_{k=1}^{n} t_k M_{n-k},   t_k = Trace(A^k) / (V d^k)
//! ```
//!
//! with `(M_n)_{ij} = P(tau_{i,j} = n)`. The same data yields the rational form
//! of the generating function through minor determinants and power sums; no
//! eigenvalue is ever computed.

use serde::Serialize;

use crate::error::{invalid, HitError, Result};
use crate::graph::Graph;
use crate::numeric::{
    chebyshev_abscissae, interpolate_poly_with, series_divide, series_mul_truncated, DenseMatrix,
    Lu, Tolerances,
};

/// Default series horizon.
pub const DEFAULT_SERIES_HORIZON: usize = 120;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePowerTable {
    pub node_count: usize,
    pub degree: usize,
    /// `t_k = Trace(A^k) / (V d^k)` for `k = 0..=N`.
    pub values: Vec<f64>,
}

fn regular_unweighted(graph: &Graph) -> Result<usize> {
    let d = graph
        .regular_degree()
        .ok_or_else(|| HitError::PreconditionViolation("graph is not regular".into()))?;
    if d == 0 {
        return Err(HitError::PreconditionViolation("graph has no edges".into()));
    }
    if !graph.has_uniform_weights() {
        return Err(HitError::PreconditionViolation(
            "spectral engine needs the unweighted simple walk".into(),
        ));
    }
    Ok(d)
}

/// Normalized closed-walk counts from iterated products of `A/d`.
pub fn trace_powers(graph: &Graph, n: usize) -> Result<TracePowerTable> {
    let d = regular_unweighted(graph)?;
    let v = graph.node_count();
    let step = graph.adjacency_matrix().scale(1.0 / d as f64);
    let mut power = DenseMatrix::identity(v);
    let mut values = Vec::with_capacity(n + 1);
    values.push(1.0);
    for _ in 1..=n {
        power = power.matmul(&step)?;
        values.push(power.trace() / v as f64);
    }
    Ok(TracePowerTable {
        node_count: v,
        degree: d,
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MnSequence {
    /// `matrices[n][(i, j)] = P(tau_{i,j} = n)`, with `matrices[0] = I`.
    pub matrices: Vec<DenseMatrix>,
    pub traces: TracePowerTable,
    /// Failures of the necessary vertex-transitivity check, if any.
    pub warnings: Vec<String>,
}

/// Runs the trace recursion up to `M_n`.
pub fn mn_sequence(graph: &Graph, n: usize) -> Result<MnSequence> {
    let d = regular_unweighted(graph)?;
    let v = graph.node_count();
    let step = graph.adjacency_matrix().scale(1.0 / d as f64);
    let mut power = DenseMatrix::identity(v);
    let mut traces = vec![1.0];
    let mut matrices = vec![DenseMatrix::identity(v)];
    for k in 1..=n {
        power = power.matmul(&step)?;
        traces.push(power.trace() / v as f64);
        let mut m = power.clone();
        for j in 1..=k {
            let t = traces[j];
            if t == 0.0 {
                continue;
            }
            let prev = &matrices[k - j];
            for r in 0..v {
                for c in 0..v {
                    m[(r, c)] -= t * prev[(r, c)];
                }
            }
        }
        matrices.push(m);
    }
    let mut warnings = Vec::new();
    if !graph.is_vertex_transitive() {
        warnings.push("graph is not known to be vertex-transitive".to_string());
    }
    for (k, m) in matrices.iter().enumerate().skip(1) {
        if let Some(msg) = row_multiset_mismatch(m) {
            warnings.push(format!("M_{k}: {msg}"));
            break;
        }
    }
    Ok(MnSequence {
        matrices,
        traces: TracePowerTable {
            node_count: v,
            degree: d,
            values: traces,
        },
        warnings,
    })
}

/// Necessary condition for vertex transitivity: the rows of each `M_k`,
/// `k <= n`, share one entry multiset. Returns the first failure.
pub fn row_multiset_check(graph: &Graph, n: usize) -> Result<Option<String>> {
    let seq = mn_sequence(graph, n)?;
    Ok(seq
        .matrices
        .iter()
        .enumerate()
        .skip(1)
        .find_map(|(k, m)| row_multiset_mismatch(m).map(|msg| format!("M_{k}: {msg}"))))
}

/// On a vertex-transitive graph every row of `M_n` is a permutation of every
/// other row.
fn row_multiset_mismatch(m: &DenseMatrix) -> Option<String> {
    let sorted = |r: usize| {
        let mut row = m.row(r).to_vec();
        row.sort_by(f64::total_cmp);
        row
    };
    let first = sorted(0);
    for r in 1..m.rows() {
        let other = sorted(r);
        if first.iter().zip(&other).any(|(a, b)| (a - b).abs() > 1e-9) {
            return Some(format!("row {r} has a different entry multiset from row 0"));
        }
    }
    None
}

/// Taylor coefficients `(M_n)_{i,j}` for `n = 0..=n_max`. Uses the trace table
/// and a single column iteration of `A/d`, so memory is `O(V^2)`.
pub fn gf_series(graph: &Graph, i: usize, j: usize, n_max: usize) -> Result<Vec<f64>> {
    graph.check_node(i)?;
    graph.check_node(j)?;
    let traces = trace_powers(graph, n_max)?;
    let d = traces.degree as f64;
    let a = graph.adjacency_matrix();
    // (A^n / d^n)_{ij} via repeated products with e_j.
    let mut col = vec![0.0; graph.node_count()];
    col[j] = 1.0;
    let mut walk = Vec::with_capacity(n_max + 1);
    walk.push(col[i]);
    for _ in 1..=n_max {
        col = a.mul_vec(&col)?.into_iter().map(|x| x / d).collect();
        walk.push(col[i]);
    }
    let t = &traces.values;
    let mut out: Vec<f64> = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut x = walk[n];
        for k in 1..=n {
            x -= t[k] * out[n - k];
        }
        out.push(x);
    }
    Ok(out)
}

/// Max violation of `sum_{k=0}^n t_k M_{n-k} = A^n / d^n` over all entries and `n`.
pub fn cauchy_identity_residual(graph: &Graph, seq: &MnSequence) -> Result<f64> {
    let d = seq.traces.degree as f64;
    let v = graph.node_count();
    let step = graph.adjacency_matrix().scale(1.0 / d);
    let mut power = DenseMatrix::identity(v);
    let mut worst: f64 = 0.0;
    for n in 0..seq.matrices.len() {
        if n > 0 {
            power = power.matmul(&step)?;
        }
        for r in 0..v {
            for c in 0..v {
                let s: f64 = (0..=n)
                    .map(|k| seq.traces.values[k] * seq.matrices[n - k][(r, c)])
                    .sum();
                worst = worst.max((s - power[(r, c)]).abs());
            }
        }
    }
    Ok(worst)
}

/// `sum_n P(tau_{i,j} = n) t^n = numerator(t) / denominator(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalGF {
    pub start: usize,
    pub target: usize,
    pub node_count: usize,
    pub degree: usize,
    /// `V (-1)^{i+j} det_{j,i}(I - (t/d) A)`, ascending powers.
    pub numerator: Vec<f64>,
    /// `sum_l prod_{m != l} (1 - (t/d) lambda_m)`, ascending powers.
    pub denominator: Vec<f64>,
    /// Max interpolation residual over both polynomial fits.
    pub fit_residual: f64,
}

impl RationalGF {
    pub fn expand(&self, terms: usize) -> Result<Vec<f64>> {
        series_divide(&self.numerator, &self.denominator, terms)
    }
}

/// Upper end of the sample interval, inside the disk `|t lambda / d| < 1`.
const SAMPLE_UPPER: f64 = 1.0 / 1.05;
const TRIM: f64 = 1e-10;

fn trim(mut p: Vec<f64>) -> Vec<f64> {
    for c in &mut p {
        if c.abs() < TRIM {
            *c = 0.0;
        }
    }
    while p.len() > 1 && *p.last().unwrap() == 0.0 {
        p.pop();
    }
    p
}

/// Recovers the rational generating function by sampling determinants at
/// Chebyshev abscissae and interpolating.
pub fn rational_gf(graph: &Graph, i: usize, j: usize) -> Result<RationalGF> {
    rational_gf_with(graph, i, j, &Tolerances::default())
}

pub fn rational_gf_with(graph: &Graph, i: usize, j: usize, tol: &Tolerances) -> Result<RationalGF> {
    graph.check_node(i)?;
    graph.check_node(j)?;
    let d = regular_unweighted(graph)?;
    let v = graph.node_count();
    if v > 40 {
        return Err(invalid(format!(
            "rational form interpolation is limited to 40 nodes, got {v}"
        )));
    }
    let a = graph.adjacency_matrix();
    let sign = if (i + j).is_multiple_of(2) { 1.0 } else { -1.0 };
    let num_samples: Vec<(f64, f64)> = chebyshev_abscissae(v + 1, 0.0, SAMPLE_UPPER)
        .into_iter()
        .map(|t| {
            let m = a.identity_minus_scaled(t / d as f64);
            let cof = if v == 1 {
                1.0
            } else {
                Lu::factor(&m.minor(j, i))?.determinant()
            };
            Ok((t, v as f64 * sign * cof))
        })
        .collect::<Result<_>>()?;
    let num_fit = interpolate_poly_with(&num_samples, v.saturating_sub(1), tol)?;
    let char_samples: Vec<(f64, f64)> = chebyshev_abscissae(v + 2, 0.0, SAMPLE_UPPER)
        .into_iter()
        .map(|t| {
            Ok((
                t,
                Lu::factor(&a.identity_minus_scaled(t / d as f64))?.determinant(),
            ))
        })
        .collect::<Result<_>>()?;
    let char_fit = interpolate_poly_with(&char_samples, v, tol)?;
    // sum_l prod_{m != l}(1 - x lambda_m) = c(x) * sum_l 1/(1 - x lambda_m)
    //                                  = c(x) * sum_k V t_k x^k, truncated at degree V-1.
    let traces = trace_powers(graph, v)?;
    let power_sums: Vec<f64> = traces.values.iter().map(|t| t * v as f64).collect();
    let den = series_mul_truncated(&char_fit.coeffs, &power_sums, v - 1);
    Ok(RationalGF {
        start: i,
        target: j,
        node_count: v,
        degree: d,
        numerator: trim(num_fit.coeffs),
        denominator: trim(den),
        fit_residual: num_fit.residual.max(char_fit.residual),
    })
}
