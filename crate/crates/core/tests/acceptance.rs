//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{
    close, enumerate_paths, expm, first_step_moments, forward_pmf, matmul, normalized_adjacency,
};
use hitwalk::abelian::{expected_hitting_abelian, fourier_pmf, variance_abelian};
use hitwalk::cli::{self, Command, Payload, Request};
use hitwalk::closed_form::{
    closed_bipartite, closed_complete, closed_cycle, path_endpoint_pmf, BipartiteCase,
};
use hitwalk::ctime::{ct_cdf, ct_moments, ct_pdf};
use hitwalk::graph::{
    build_cayley_d8, build_cayley_s3, build_cayley_s3_transpositions, build_complete,
    build_complete_bipartite, build_cycle, build_diamond, build_hypercube, build_path,
    build_torus_standard,
};
use hitwalk::graph_spec::GraphSpec;
use hitwalk::hitting::pmf_until;
use hitwalk::montecarlo::{simulate, SimConfig};
use hitwalk::spectral::{gf_series, mn_sequence, rational_gf};
use hitwalk::{make_absorbing, moments, pmf, simple_walk_kernel, Graph};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn series_matches(got: &[f64], want: &[(usize, f64)], tol: f64) -> Result<(), String> {
    for &(n, w) in want {
        ensure!(
            (got[n] - w).abs() <= tol,
            "t^{n}: got {:.17e}, want {:.17e}",
            got[n],
            w
        );
    }
    Ok(())
}

fn odd_series(got: &[f64], odd: &[f64], tol: f64) -> Result<(), String> {
    let want: Vec<(usize, f64)> = odd
        .iter()
        .enumerate()
        .map(|(k, &v)| (2 * k + 1, v))
        .collect();
    series_matches(got, &want, tol)?;
    for n in (0..got.len()).step_by(2) {
        ensure!(got[n].abs() <= tol, "even order t^{n} is {:e}", got[n]);
    }
    Ok(())
}

fn hypercube_series() -> Outcome {
    let q3 = build_hypercube(3).unwrap();
    let s = gf_series(&q3, 0, 7, 11).unwrap();
    odd_series(
        &s,
        &[
            0.0,
            2.0 / 9.0,
            14.0 / 81.0,
            98.0 / 729.0,
            686.0 / 6561.0,
            4802.0 / 59049.0,
        ],
        1e-12,
    )?;
    Ok(format!(
        "t^3..t^11 = {:.6}, {:.6}, {:.6}, {:.6}, {:.6}",
        s[3], s[5], s[7], s[9], s[11]
    ))
}

fn s3_series() -> Outcome {
    let g = build_cayley_s3().unwrap();
    let e = g.resolve_node("e").unwrap();
    let t = g.resolve_node("(13)").unwrap();
    let s = gf_series(&g, e, t, 8).unwrap();
    let want = [
        1.0 / 3.0,
        0.0,
        4.0 / 27.0,
        2.0 / 27.0,
        20.0 / 243.0,
        44.0 / 729.0,
        116.0 / 2187.0,
        280.0 / 6561.0,
    ];
    let want: Vec<(usize, f64)> = want.iter().enumerate().map(|(k, &v)| (k + 1, v)).collect();
    series_matches(&s, &want, 1e-12)?;
    Ok(format!(
        "e -> (13), t^1..t^8 within 1e-12, t^8 = {:.8}",
        s[8]
    ))
}

fn d8_series() -> Outcome {
    let g = build_cayley_d8().unwrap();
    let e = g.resolve_node("e").unwrap();
    let t = g.resolve_node("(14)(23)").unwrap();
    let s = gf_series(&g, e, t, 11).unwrap();
    odd_series(
        &s,
        &[
            1.0 / 3.0,
            4.0 / 27.0,
            28.0 / 243.0,
            196.0 / 2187.0,
            1372.0 / 19683.0,
            9604.0 / 177147.0,
        ],
        1e-12,
    )?;
    Ok("e -> (14)(23), odd orders to t^11 within 1e-12, even orders 0".to_string())
}

/// Exact mean and variance, Monte Carlo bands, and where the published sample
/// statistics fall.
fn intro_experiment(
    g: &Graph,
    start: usize,
    target: usize,
    mean_want: f64,
    paper: (f64, f64),
    seed: u64,
) -> Outcome {
    let k = simple_walk_kernel(g).unwrap();
    let m = moments(&make_absorbing(&k, target).unwrap()).unwrap();
    let (mean, _, var) = m.at(start).unwrap();
    ensure!(
        (mean - mean_want).abs() < 1e-10,
        "exact mean {mean}, want {mean_want}"
    );
    let (om, os) = first_step_moments(g, target);
    let ovar = os[start] - om[start] * om[start];
    ensure!(
        close(var, ovar, 1e-9),
        "variance {var} disagrees with first-step oracle {ovar}"
    );
    let trials = 10_000u64;
    let s = simulate(&k, start, target, &SimConfig::new(trials, seed)).unwrap();
    let se = (var / trials as f64).sqrt();
    ensure!(s.capped_count == 0, "{} capped trials", s.capped_count);
    ensure!(
        (s.mean - mean).abs() <= 4.0 * se,
        "sample mean {} outside {mean} +- 4*{se}",
        s.mean
    );
    ensure!(
        (s.variance - var).abs() <= 0.15 * var,
        "sample variance {} not within 15% of {var}",
        s.variance
    );
    ensure!(
        (paper.0 - mean).abs() <= 4.0 * se,
        "published mean {} outside the band",
        paper.0
    );
    ensure!(
        (paper.1 - var).abs() <= 0.15 * var,
        "published variance {} outside the band",
        paper.1
    );
    Ok(format!(
        "exact mean {mean:.10}, exact variance {var:.10}; seed {seed}: sample mean {:.4} ({:+.2} se), sample variance {:.2}",
        s.mean,
        (s.mean - mean) / se,
        s.variance
    ))
}

fn cycle_experiment() -> Outcome {
    intro_experiment(&build_cycle(10).unwrap(), 0, 5, 25.0, (25.0306, 410.0), 42)
}

fn hypercube_experiment() -> Outcome {
    intro_experiment(&build_hypercube(3).unwrap(), 0, 7, 10.0, (10.0, 63.0), 42)
}

fn direct_series(g: &Graph, start: usize, target: usize, horizon: usize) -> Vec<f64> {
    let k = simple_walk_kernel(g).unwrap();
    pmf(&make_absorbing(&k, target).unwrap(), horizon)
        .unwrap()
        .series(start)
        .unwrap()
}

fn closed_forms() -> Outcome {
    let tol = 1e-10;
    let horizon = 100;
    let mut checked = 0usize;
    let mut zeros = 0usize;
    for k in 2..=8 {
        let d = direct_series(&build_complete(k).unwrap(), 1, 0, horizon);
        for n in 1..=horizon {
            let c = closed_complete(k, n).unwrap();
            ensure!(
                (d[n - 1] - c).abs() <= tol,
                "K_{k}, n={n}: {} vs {c}",
                d[n - 1]
            );
            checked += 1;
        }
    }
    for k1 in 1..=5 {
        for k2 in 1..=5 {
            let g = build_complete_bipartite(k1, k2).unwrap();
            // Target k1 sits in the part of size k2.
            let target = k1;
            for start in 0..k1 + k2 {
                if start == target {
                    continue;
                }
                let case = if start >= k1 {
                    BipartiteCase::SameSide
                } else {
                    BipartiteCase::Cross
                };
                let d = direct_series(&g, start, target, horizon);
                for n in 1..=horizon {
                    let c = closed_bipartite(k1, k2, case, n).unwrap();
                    ensure!(
                        (d[n - 1] - c).abs() <= tol,
                        "K_({k1},{k2}) {start}->{target}, n={n}"
                    );
                    let wrong_parity = (case == BipartiteCase::Cross) == (n % 2 == 0);
                    if wrong_parity {
                        ensure!(
                            d[n - 1] == 0.0 && c == 0.0,
                            "wrong-parity mass at n={n} is not exactly 0"
                        );
                        zeros += 1;
                    }
                    checked += 1;
                }
            }
        }
    }
    for k in 3..=12 {
        let g = build_cycle(k).unwrap();
        for i in 1..k {
            let d = direct_series(&g, i, 0, horizon);
            for n in 1..=horizon {
                let c = closed_cycle(k, i, n).unwrap();
                ensure!(
                    (d[n - 1] - c).abs() <= tol,
                    "C_{k} from {i}, n={n}: {} vs {c}",
                    d[n - 1]
                );
                checked += 1;
            }
        }
    }
    for nodes in 3..=7 {
        let g = build_path(nodes).unwrap();
        for i in 1..nodes {
            let d = direct_series(&g, i, 0, horizon);
            for n in 1..=horizon {
                let c = path_endpoint_pmf(nodes, i, n).unwrap();
                ensure!((d[n - 1] - c).abs() <= tol, "path {nodes} from {i}, n={n}");
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{checked} values within 1e-10, {zeros} exact wrong-parity zeros"
    ))
}

fn cross_engine() -> Outcome {
    let horizon = 200;
    let mut graphs: Vec<(String, Graph)> = (3..=12)
        .map(|k| (format!("C_{k}"), build_cycle(k).unwrap()))
        .collect();
    graphs.push(("Z_3 x Z_3".into(), build_torus_standard(3).unwrap()));
    graphs.push(("Z_2^3".into(), build_hypercube(3).unwrap()));
    let mut worst_pmf: f64 = 0.0;
    let mut worst_moment: f64 = 0.0;
    for (name, g) in &graphs {
        let a = g.abelian_structure().expect("abelian preset");
        let (group, law) = (&a.group, &a.step_law);
        let f = fourier_pmf(group, law, horizon).unwrap();
        let seq = mn_sequence(g, horizon).unwrap();
        let k = simple_walk_kernel(g).unwrap();
        for target in 0..g.node_count() {
            let sys = make_absorbing(&k, target).unwrap();
            let table = pmf(&sys, horizon).unwrap();
            let m = moments(&sys).unwrap();
            for start in 0..g.node_count() {
                if start == target {
                    continue;
                }
                let d = table.series(start).unwrap();
                let fs = f.series(group, start, target);
                for n in 1..=horizon {
                    let s = seq.matrices[n][(start, target)];
                    let diff = (d[n - 1] - fs[n - 1])
                        .abs()
                        .max((d[n - 1] - s).abs())
                        .max((fs[n - 1] - s).abs());
                    worst_pmf = worst_pmf.max(diff);
                    ensure!(
                        diff <= 1e-10,
                        "{name} {start}->{target} n={n}: {} {} {s}",
                        d[n - 1],
                        fs[n - 1]
                    );
                }
                let g_el = group.sub_index(start, target);
                let h = expected_hitting_abelian(group, law, g_el).unwrap();
                let v = variance_abelian(group, law, g_el).unwrap();
                let (mean, _, var) = m.at(start).unwrap();
                let dm = (h - mean)
                    .abs()
                    .max((v.variance - var).abs() / var.max(1.0));
                worst_moment = worst_moment.max(dm);
                ensure!(
                    close(h, mean, 1e-8) && close(v.variance, var, 1e-8),
                    "{name} {start}->{target}: mean {h} vs {mean}, variance {} vs {var}",
                    v.variance
                );
            }
        }
    }
    Ok(format!(
        "{} graphs, all pairs, n <= {horizon}: pmf spread {worst_pmf:.1e}, moment spread {worst_moment:.1e}",
        graphs.len()
    ))
}

fn small_presets() -> Vec<(String, Graph)> {
    let mut v: Vec<(String, Graph)> = Vec::new();
    for k in 3..=6 {
        v.push((format!("cycle:{k}"), build_cycle(k).unwrap()));
    }
    for k in 2..=6 {
        v.push((format!("path:{k}"), build_path(k).unwrap()));
        v.push((format!("complete:{k}"), build_complete(k).unwrap()));
    }
    for k1 in 1..=5 {
        for k2 in 1..=(6 - k1) {
            if k1 + k2 >= 2 {
                v.push((
                    format!("bipartite:{k1},{k2}"),
                    build_complete_bipartite(k1, k2).unwrap(),
                ));
            }
        }
    }
    v.push(("hypercube:1".into(), build_hypercube(1).unwrap()));
    v.push(("hypercube:2".into(), build_hypercube(2).unwrap()));
    v.push(("cayley_s3".into(), build_cayley_s3().unwrap()));
    v.push((
        "cayley_s3_transpositions".into(),
        build_cayley_s3_transpositions().unwrap(),
    ));
    v.push(("diamond".into(), build_diamond().unwrap()));
    v
}

fn moment_correction() -> Outcome {
    let mut pairs = 0;
    let mut windows = 0;
    let mut worst: f64 = 0.0;
    for (name, g) in small_presets() {
        let k = simple_walk_kernel(&g).unwrap();
        for target in 0..g.node_count() {
            let sys = make_absorbing(&k, target).unwrap();
            let m = moments(&sys).unwrap();
            // Run until the unabsorbed mass is negligible against n^2 growth.
            let table = pmf_until(&sys, 1_000_000, 1e-15).unwrap();
            ensure!(
                table.max_residual() < 1e-9,
                "{name}: residual {}",
                table.max_residual()
            );
            for start in 0..g.node_count() {
                if start == target {
                    continue;
                }
                let p = table.series(start).unwrap();
                let summed: f64 = p
                    .iter()
                    .enumerate()
                    .map(|(i, x)| ((i + 1) * (i + 1)) as f64 * x)
                    .sum();
                let (_, second, _) = m.at(start).unwrap();
                worst = worst.max((second - summed).abs());
                ensure!(
                    (second - summed).abs() <= 1e-6,
                    "{name} {start}->{target}: {second} vs sum {summed}"
                );
                pairs += 1;
                if g.node_count() <= 5 {
                    let brute = enumerate_paths(&g, start, target, 8);
                    let p = pmf(&sys, 8).unwrap().series(start).unwrap();
                    for n in 0..8 {
                        ensure!(
                            (brute[n] - p[n]).abs() <= 1e-12,
                            "{name} {start}->{target} n={}: enumeration {} vs {}",
                            n + 1,
                            brute[n],
                            p[n]
                        );
                    }
                    windows += 1;
                }
            }
        }
    }
    let k2 = build_complete(2).unwrap();
    let m = moments(&make_absorbing(&simple_walk_kernel(&k2).unwrap(), 1).unwrap()).unwrap();
    ensure!(m.second[0] == 1.0, "K_2 second moment {}", m.second[0]);
    Ok(format!(
        "{pairs} pairs, worst |E[tau^2] - sum n^2 p_n| = {worst:.1e}; {windows} enumeration windows; K_2 second moment = 1"
    ))
}

fn continuous_time() -> Outcome {
    let mut graphs = small_presets();
    graphs.push(("cycle:10".into(), build_cycle(10).unwrap()));
    graphs.push(("hypercube:3".into(), build_hypercube(3).unwrap()));
    graphs.push(("torus_std:3".into(), build_torus_standard(3).unwrap()));
    graphs.push(("cayley_d8".into(), build_cayley_d8().unwrap()));
    let tol = 1e-13;
    let mut worst_fd: f64 = 0.0;
    let mut worst_closed: f64 = 0.0;
    for (name, g) in &graphs {
        let k = simple_walk_kernel(g).unwrap();
        let sys = make_absorbing(&k, 0).unwrap();
        let m = moments(&sys).unwrap();
        let c1 = ct_moments(&sys, 1).unwrap();
        let c2 = ct_moments(&sys, 2).unwrap();
        for r in 0..sys.dim() {
            ensure!(
                (c1[r] - m.mean[r]).abs() <= 1e-10 * m.mean[r].max(1.0),
                "{name}: ct mean"
            );
            ensure!(
                (c2[r] - m.second[r] - m.mean[r]).abs() <= 1e-10 * c2[r].max(1.0),
                "{name}: ct second {} vs {} + {}",
                c2[r],
                m.second[r],
                m.mean[r]
            );
        }
        let top = m.mean.iter().copied().fold(0.0, f64::max);
        let far = ct_cdf(&sys, 50.0 * top, tol).unwrap();
        ensure!(
            far.iter().all(|&x| (x - 1.0).abs() <= 1e-6),
            "{name}: CDF at 50 * mean is {far:?}"
        );
        let mut prev = vec![0.0; sys.dim()];
        for i in 0..=100 {
            let t = 4.0 * top * i as f64 / 100.0;
            let c = ct_cdf(&sys, t, tol).unwrap();
            for (a, b) in c.iter().zip(&prev) {
                ensure!(
                    *a >= *b && (0.0..=1.0).contains(a),
                    "{name}: CDF not monotone at t={t}"
                );
            }
            prev = c;
        }
        let h = 1e-3;
        for t in [0.5, 1.0, 2.5, top] {
            let up = ct_cdf(&sys, t + h, tol).unwrap();
            let down = ct_cdf(&sys, t - h, tol).unwrap();
            let f = ct_pdf(&sys, t, tol).unwrap();
            for r in 0..sys.dim() {
                let fd = (up[r] - down[r]) / (2.0 * h);
                worst_fd = worst_fd.max((fd - f[r]).abs());
                ensure!(
                    (fd - f[r]).abs() <= 1e-6,
                    "{name}: pdf {} vs difference {fd} at t={t}",
                    f[r]
                );
            }
        }
        // (I - Q)^{-1} (I - e^{-t(I-Q)}) P_1 through an independent matrix exponential.
        let n = sys.dim();
        let q = sys.q();
        let t = 0.7 * top;
        let neg: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| -t * (f64::from(u8::from(i == j)) - q[(i, j)]))
                    .collect()
            })
            .collect();
        let e = expm(&neg);
        let p1 = sys.first_step();
        let rhs: Vec<f64> = (0..n)
            .map(|i| p1[i] - (0..n).map(|j| e[i][j] * p1[j]).sum::<f64>())
            .collect();
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| f64::from(u8::from(i == j)) - q[(i, j)])
                    .collect()
            })
            .collect();
        let closed = common::gauss_solve(a, rhs);
        let c = ct_cdf(&sys, t, tol).unwrap();
        for r in 0..n {
            worst_closed = worst_closed.max((closed[r] - c[r]).abs());
            ensure!(
                (closed[r] - c[r]).abs() <= 1e-9,
                "{name}: CDF {} vs closed form {}",
                c[r],
                closed[r]
            );
        }
    }
    Ok(format!(
        "{} graphs; finite-difference gap {worst_fd:.1e}, closed-form gap {worst_closed:.1e}",
        graphs.len()
    ))
}

fn spectral_internals() -> Outcome {
    let graphs = [
        ("Q_3", build_hypercube(3).unwrap()),
        ("C_8", build_cycle(8).unwrap()),
        ("S_3", build_cayley_s3().unwrap()),
        ("D_8", build_cayley_d8().unwrap()),
    ];
    let horizon = 60;
    let mut worst_cauchy: f64 = 0.0;
    let mut worst_rational: f64 = 0.0;
    for (name, g) in &graphs {
        let seq = mn_sequence(g, horizon).unwrap();
        ensure!(seq.warnings.is_empty(), "{name}: {:?}", seq.warnings);
        let step = normalized_adjacency(g);
        let v = g.node_count();
        let mut powers = vec![common::identity(v)];
        for _ in 0..horizon {
            powers.push(matmul(powers.last().unwrap(), &step));
        }
        let t: Vec<f64> = powers
            .iter()
            .map(|p| (0..v).map(|i| p[i][i]).sum::<f64>() / v as f64)
            .collect();
        for n in 0..=horizon {
            for i in 0..v {
                for j in 0..v {
                    let s: f64 = (0..=n).map(|k| t[k] * seq.matrices[n - k][(i, j)]).sum();
                    worst_cauchy = worst_cauchy.max((s - powers[n][i][j]).abs());
                    ensure!(
                        (s - powers[n][i][j]).abs() <= 1e-10,
                        "{name}: trace identity at n={n}"
                    );
                }
            }
        }
        for j in 1..v {
            let r = rational_gf(g, 0, j).unwrap();
            let e = r.expand(31).unwrap();
            let s = gf_series(g, 0, j, 30).unwrap();
            let o = forward_pmf(g, 0, j, 30);
            for n in 0..=30 {
                worst_rational = worst_rational.max((e[n] - s[n]).abs());
                ensure!(
                    (e[n] - s[n]).abs() <= 1e-8,
                    "{name} 0->{j} n={n}: rational {} vs series {}",
                    e[n],
                    s[n]
                );
                if n > 0 {
                    ensure!(
                        (s[n] - o[n - 1]).abs() <= 1e-12,
                        "{name} 0->{j} n={n}: series vs forward oracle"
                    );
                }
            }
        }
    }
    Ok(format!(
        "trace identity gap {worst_cauchy:.1e} for n <= {horizon}; rational expansion gap {worst_rational:.1e} through n = 30"
    ))
}

fn diagonal_torus() -> Outcome {
    let mut lines = Vec::new();
    for p in [3usize, 5] {
        let mut req = Request::new(
            Command::Compare,
            GraphSpec::preset("torus_diag", &[p]).unwrap(),
        );
        req.horizon = 40;
        req.trials = 100_000;
        req.seed = 7;
        req.to = Some("0".into());
        let doc = cli::run(&req).map_err(|e| e.to_string())?;
        let Payload::Compare(report) = &doc.payload else {
            return Err("compare did not return a comparison".into());
        };
        let d = report
            .diag_torus
            .as_ref()
            .ok_or("no diagonal-torus section")?;
        ensure!(
            d.convolution.len() == 41,
            "convolution length {}",
            d.convolution.len()
        );
        let direct = d.direct.as_ref().ok_or("no direct series")?;
        ensure!(direct.len() == 41, "direct length {}", direct.len());
        let gap = d.max_discrepancy.ok_or("no discrepancy")?;
        let mc = &report.monte_carlo;
        ensure!(mc.trials == 100_000, "trials {}", mc.trials);
        ensure!(
            mc.max_abs_z <= 4.0,
            "p={p}: a bin deviates by {:.2} standard errors",
            mc.max_abs_z
        );
        ensure!(
            mc.mean_z.abs() <= 4.0,
            "p={p}: mean off by {:.2} standard errors",
            mc.mean_z
        );
        lines.push(format!(
            "p={p}: convolution vs direct max gap {gap:.4} (reported), Monte Carlo max |z| {:.2} over {} bins",
            mc.max_abs_z,
            mc.bins.len()
        ));
    }
    Ok(lines.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("hypercube generating-function series", hypercube_series),
        ("S_3 generating-function series", s3_series),
        ("D_8 generating-function series", d8_series),
        ("cycle C_10 experiment", cycle_experiment),
        ("hypercube Q_3 experiment", hypercube_experiment),
        ("closed-form equivalence", closed_forms),
        ("direct / fourier / trace-recursion agreement", cross_engine),
        (
            "second moments against summation and enumeration",
            moment_correction,
        ),
        ("continuous time", continuous_time),
        ("trace identity and rational form", spectral_internals),
        ("diagonal torus report", diagonal_torus),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
