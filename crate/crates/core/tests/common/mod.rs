//! Reference computations written independently of the library engines.
//! They only read the graph's neighbor lists.

#![allow(dead_code, clippy::needless_range_loop)]

use hitwalk::Graph;

/// Row-stochastic step list: `steps[i] = [(k, P(i -> k))]`.
pub fn walk(graph: &Graph) -> Vec<Vec<(usize, f64)>> {
    (0..graph.node_count())
        .map(|i| {
            let total: f64 = graph.neighbors(i).iter().map(|&(_, w)| w).sum();
            graph
                .neighbors(i)
                .iter()
                .map(|&(k, w)| (k, w / total))
                .collect()
        })
        .collect()
}

/// `P(tau = n)` for `n = 1..=n_max` by pushing the walker's mass forward and
/// collecting whatever lands on the target.
pub fn forward_pmf(graph: &Graph, start: usize, target: usize, n_max: usize) -> Vec<f64> {
    let steps = walk(graph);
    let mut mass = vec![0.0; graph.node_count()];
    mass[start] = 1.0;
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        let mut next = vec![0.0; mass.len()];
        for (i, &m) in mass.iter().enumerate() {
            if m == 0.0 || i == target {
                continue;
            }
            for &(k, p) in &steps[i] {
                next[k] += m * p;
            }
        }
        out.push(next[target]);
        next[target] = 0.0;
        mass = next;
    }
    out
}

/// Sums path probabilities over every walk of length `<= n_max` that avoids
/// the target until its last step.
pub fn enumerate_paths(graph: &Graph, start: usize, target: usize, n_max: usize) -> Vec<f64> {
    fn go(
        steps: &[Vec<(usize, f64)>],
        at: usize,
        target: usize,
        depth: usize,
        p: f64,
        out: &mut [f64],
    ) {
        if depth == out.len() {
            return;
        }
        for &(k, q) in &steps[at] {
            if k == target {
                out[depth] += p * q;
            } else {
                go(steps, k, target, depth + 1, p * q, out);
            }
        }
    }
    let steps = walk(graph);
    let mut out = vec![0.0; n_max];
    go(&steps, start, target, 0, 1.0, &mut out);
    out
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Mean and second moment of the hitting time from every node via first-step
/// equations `m = 1 + P m`, `s = 1 + 2 P m + P s` with `m = s = 0` at the target.
pub fn first_step_moments(graph: &Graph, target: usize) -> (Vec<f64>, Vec<f64>) {
    let steps = walk(graph);
    let n = graph.node_count();
    let system = |rhs: &dyn Fn(usize) -> f64| {
        let mut a = vec![vec![0.0; n]; n];
        let mut b = vec![0.0; n];
        for i in 0..n {
            a[i][i] = 1.0;
            if i == target {
                continue;
            }
            for &(k, p) in &steps[i] {
                if k != target {
                    a[i][k] -= p;
                }
            }
            b[i] = rhs(i);
        }
        gauss_solve(a, b)
    };
    let mean = system(&|_| 1.0);
    let pm = |i: usize| -> f64 { steps[i].iter().map(|&(k, p)| p * mean[k]).sum() };
    let second = system(&|i| 1.0 + 2.0 * pm(i));
    (mean, second)
}

pub type Dense = Vec<Vec<f64>>;

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = b[0].len();
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            if a[i][k] == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

pub fn identity(n: usize) -> Dense {
    (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect()
}

/// `A / d` for a regular unweighted graph.
pub fn normalized_adjacency(graph: &Graph) -> Dense {
    let n = graph.node_count();
    let d = graph.degree(0) as f64;
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for &(k, _) in graph.neighbors(i) {
            a[i][k] = 1.0 / d;
        }
    }
    a
}

/// `exp(m)` by scaling and squaring a 30-term Taylor series.
pub fn expm(m: &Dense) -> Dense {
    let n = m.len();
    let norm = m
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.5 {
        s += 1;
    }
    let scale = 2f64.powi(s);
    let a: Dense = m
        .iter()
        .map(|r| r.iter().map(|x| x / scale).collect())
        .collect();
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..30 {
        term = matmul(&term, &a);
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        result = matmul(&result, &result);
    }
    result
}

/// Absolute-or-relative closeness.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
