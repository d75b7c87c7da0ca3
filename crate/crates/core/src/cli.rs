//! Command implementations behind the `hitwalk` binary.
//!
//! Every command returns an [`OutputDocument`] whose metadata carries the full
//! [`Request`], so `run(&doc.metadata.request)` reproduces the payload exactly.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::abelian::{
    diag_torus_convolution_report, expected_hitting_abelian_with, fourier_pmf_with, q_star,
    variance_abelian_with, CharacterBasis, DiagTorusReport,
};
use crate::closed_form::{
    closed_bipartite, closed_complete, closed_cycle, path_endpoint_pmf, BipartiteCase,
};
use crate::ctime::{ct_evaluate, ct_moments_with, time_grid};
use crate::error::{invalid, HitError, Result};
use crate::graph::{simple_walk_kernel, Graph, GraphFamily, TransitionKernel};
use crate::graph_spec::GraphSpec;
use crate::hitting::{make_absorbing, moments_with, pmf, return_moments, AbsorbingSystem};
use crate::montecarlo::{empirical_vs_exact, simulate, GoodnessBin, SampleSummary, SimConfig};
use crate::numeric::Tolerances;
use crate::spectral::{gf_series, rational_gf_with, row_multiset_check, RationalGF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Pmf,
    Moments,
    Ctime,
    Simulate,
    Compare,
    Gf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Auto,
    Direct,
    Fourier,
    Spectral,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Auto => "auto",
            Engine::Direct => "direct",
            Engine::Fourier => "fourier",
            Engine::Spectral => "spectral",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

pub const DEFAULT_HORIZON: usize = 50;
pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_CT_TOL: f64 = 1e-12;

/// Everything needed to run a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub command: Command,
    #[serde(serialize_with = "ser_spec", deserialize_with = "de_spec")]
    pub graph: GraphSpec,
    pub from: Option<String>,
    pub to: Option<String>,
    pub horizon: usize,
    pub engine: Engine,
    pub format: Format,
    pub seed: u64,
    pub trials: u64,
    pub workers: usize,
    pub t_grid: Option<String>,
    pub tol: f64,
}

fn ser_spec<S: Serializer>(spec: &GraphSpec, s: S) -> std::result::Result<S::Ok, S::Error> {
    spec.serialize(s)
}

fn de_spec<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<GraphSpec, D::Error> {
    let v = serde_json::Value::deserialize(d)?;
    GraphSpec::from_value(v).map_err(serde::de::Error::custom)
}

impl Request {
    pub fn new(command: Command, graph: GraphSpec) -> Self {
        Request {
            command,
            graph,
            from: None,
            to: None,
            horizon: DEFAULT_HORIZON,
            engine: Engine::Auto,
            format: Format::Json,
            seed: 0,
            trials: DEFAULT_TRIALS,
            workers: 1,
            t_grid: None,
            tol: DEFAULT_CT_TOL,
        }
    }

    pub fn from_to(mut self, from: impl Into<String>, to: impl Into<String>) -> Self {
        self.from = Some(from.into());
        self.to = Some(to.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeRef {
    pub index: usize,
    pub label: String,
}

impl NodeRef {
    fn new(graph: &Graph, index: usize) -> Self {
        NodeRef {
            index,
            label: graph.label(index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub request: Request,
    pub graph_hash: String,
    pub node_count: usize,
    pub engine: String,
    pub tolerances: Tolerances,
    pub target: NodeRef,
    pub start: Option<NodeRef>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub start: usize,
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineSeries {
    pub engine: String,
    /// `P(tau = n)` for `n = 1..=horizon`.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineMoments {
    pub engine: String,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub engine: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloCheck {
    pub trials: u64,
    pub seed: u64,
    pub mean: f64,
    pub variance: f64,
    pub standard_error: f64,
    pub mean_z: f64,
    pub capped_count: u64,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub max_abs_z: f64,
    pub bins: Vec<GoodnessBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub horizon: usize,
    pub engines: Vec<String>,
    pub series: Vec<EngineSeries>,
    /// `discrepancy[a][b]` is the largest `|P_a(tau = n) - P_b(tau = n)|`.
    pub discrepancy: Vec<Vec<f64>>,
    pub moments: Vec<EngineMoments>,
    pub monte_carlo: MonteCarloCheck,
    pub skipped: Vec<Skipped>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diag_torus: Option<DiagTorusReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Distribution {
        starts: Vec<usize>,
        n: Vec<usize>,
        /// `probabilities[s][k]` is `P(tau = n[k])` from `starts[s]`.
        probabilities: Vec<Vec<f64>>,
        /// Mass not absorbed by the horizon, per start.
        residual: Vec<f64>,
    },
    Moments {
        rows: Vec<MomentRow>,
        return_mean: f64,
        return_second_moment: f64,
    },
    Ctime {
        starts: Vec<usize>,
        times: Vec<f64>,
        cdf: Vec<Vec<f64>>,
        pdf: Vec<Vec<f64>>,
        truncation: f64,
        mean: Vec<f64>,
        second_moment: Vec<f64>,
    },
    Simulation {
        summary: SampleSummary,
        exact_mean: f64,
        exact_variance: f64,
        standard_error: f64,
        mean_z: f64,
    },
    Series {
        /// `P(tau = n)` for `n = 0..=horizon`.
        coefficients: Vec<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        rational: Option<RationalGF>,
        #[serde(skip_serializing_if = "Option::is_none")]
        rational_max_deviation: Option<f64>,
    },
    Compare(Box<CompareReport>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputDocument {
    pub metadata: Metadata,
    pub payload: Payload,
}

struct Context {
    graph: Graph,
    kernel: TransitionKernel,
    target: usize,
    tol: Tolerances,
    warnings: Vec<String>,
}

pub fn run(req: &Request) -> Result<OutputDocument> {
    if req.horizon == 0 {
        return Err(invalid("horizon must be >= 1"));
    }
    if !(req.tol > 0.0 && req.tol < 1.0) {
        return Err(invalid(format!(
            "--tol must lie in (0, 1), got {}",
            req.tol
        )));
    }
    let graph = req.graph.build()?;
    graph.require_connected()?;
    let kernel = simple_walk_kernel(&graph)?;
    let target = match &req.to {
        Some(s) => graph.resolve_node(s)?,
        None => 0,
    };
    let mut ctx = Context {
        graph,
        kernel,
        target,
        tol: Tolerances::default(),
        warnings: Vec::new(),
    };
    let system = make_absorbing(&ctx.kernel, target)?;
    let start = match &req.from {
        Some(s) => {
            let i = ctx.graph.resolve_node(s)?;
            if i == target {
                return Err(invalid("--from must differ from --to"));
            }
            Some(i)
        }
        None => None,
    };
    let (engine, payload, start_used) = match req.command {
        Command::Pmf => {
            let (engine, payload) = cmd_pmf(&mut ctx, &system, req, start)?;
            (engine, payload, start)
        }
        Command::Moments => {
            let (engine, payload) = cmd_moments(&mut ctx, &system, req, start)?;
            (engine, payload, start)
        }
        Command::Ctime => (
            Engine::Direct,
            cmd_ctime(&mut ctx, &system, req, start)?,
            start,
        ),
        Command::Simulate => {
            let s = start_or_farthest(&ctx, &system, start)?;
            (
                Engine::Direct,
                cmd_simulate(&ctx, &system, req, s)?,
                Some(s),
            )
        }
        Command::Compare => {
            let s = start_or_farthest(&ctx, &system, start)?;
            (
                Engine::Auto,
                cmd_compare(&mut ctx, &system, req, s)?,
                Some(s),
            )
        }
        Command::Gf => {
            let s = start_or_farthest(&ctx, &system, start)?;
            (Engine::Spectral, cmd_gf(&mut ctx, req, s)?, Some(s))
        }
    };
    let engine_name = if req.command == Command::Compare {
        "all".to_string()
    } else {
        engine.name().to_string()
    };
    Ok(OutputDocument {
        metadata: Metadata {
            tool: "hitwalk",
            version: env!("CARGO_PKG_VERSION"),
            request: req.clone(),
            graph_hash: req.graph.hash(),
            node_count: ctx.graph.node_count(),
            engine: engine_name,
            tolerances: ctx.tol,
            target: NodeRef::new(&ctx.graph, target),
            start: start_used.map(|s| NodeRef::new(&ctx.graph, s)),
            warnings: ctx.warnings,
        },
        payload,
    })
}

/// Default start: the node with the largest expected hitting time, lowest index on ties.
fn start_or_farthest(
    ctx: &Context,
    system: &AbsorbingSystem,
    start: Option<usize>,
) -> Result<usize> {
    if let Some(s) = start {
        return Ok(s);
    }
    let m = moments_with(system, &ctx.tol)?;
    let mut best = 0;
    for r in 1..m.mean.len() {
        if m.mean[r] > m.mean[best] + 1e-9 * m.mean[best].max(1.0) {
            best = r;
        }
    }
    Ok(system.index_map()[best])
}

fn fourier_applicable(graph: &Graph) -> Result<()> {
    match graph.abelian_structure() {
        Some(a) if a.step_law.is_symmetric(&a.group) => Ok(()),
        Some(_) => Err(HitError::PreconditionViolation(
            "fourier engine needs a symmetric step law".into(),
        )),
        None => Err(HitError::PreconditionViolation(
            "fourier engine needs a Cayley graph of a finite abelian group (a preset such as cycle, complete, \
             hypercube, torus_std, torus_diag, or a {\"factors\", \"step_law\"} spec)"
                .into(),
        )),
    }
}

/// Regular, unweighted, and vertex-transitive either by construction or by
/// passing the row-multiset test; the latter adds a warning.
fn spectral_applicable(graph: &Graph, horizon: usize) -> Result<Option<String>> {
    if graph.regular_degree().is_none() {
        return Err(HitError::PreconditionViolation(
            "spectral engine needs a regular graph".into(),
        ));
    }
    if !graph.has_uniform_weights() {
        return Err(HitError::PreconditionViolation(
            "spectral engine needs unit edge weights".into(),
        ));
    }
    if graph.is_vertex_transitive() {
        return Ok(None);
    }
    let depth = horizon.min(2 * graph.node_count()).max(1);
    match row_multiset_check(graph, depth)? {
        Some(msg) => Err(HitError::PreconditionViolation(format!(
            "spectral engine needs a vertex-transitive graph; {msg}"
        ))),
        None => Ok(Some(format!(
            "vertex transitivity not established; rows of M_1..M_{depth} passed the multiset test"
        ))),
    }
}

fn resolve_engine(ctx: &mut Context, requested: Engine, horizon: usize) -> Result<Engine> {
    match requested {
        Engine::Auto => {
            if fourier_applicable(&ctx.graph).is_ok() {
                Ok(Engine::Fourier)
            } else if ctx.graph.is_vertex_transitive()
                && spectral_applicable(&ctx.graph, horizon).is_ok()
            {
                Ok(Engine::Spectral)
            } else {
                Ok(Engine::Direct)
            }
        }
        Engine::Direct => Ok(Engine::Direct),
        Engine::Fourier => fourier_applicable(&ctx.graph).map(|_| Engine::Fourier),
        Engine::Spectral => {
            if let Some(w) = spectral_applicable(&ctx.graph, horizon)? {
                ctx.warnings.push(w);
            }
            Ok(Engine::Spectral)
        }
    }
}

fn all_starts(system: &AbsorbingSystem, start: Option<usize>) -> Vec<usize> {
    match start {
        Some(s) => vec![s],
        None => system.index_map().to_vec(),
    }
}

/// Series `P(tau = n)`, `n = 1..=horizon`, for each start, plus residual mass.
fn engine_distribution(
    ctx: &Context,
    system: &AbsorbingSystem,
    engine: Engine,
    starts: &[usize],
    horizon: usize,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    match engine {
        Engine::Direct | Engine::Auto => {
            let table = pmf(system, horizon)?;
            let mut probs = Vec::new();
            let mut residual = Vec::new();
            for &s in starts {
                probs.push(table.series(s)?);
                residual.push(table.residual[system.reduced_index(s)?]);
            }
            Ok((probs, residual))
        }
        Engine::Fourier => {
            let a = ctx
                .graph
                .abelian_structure()
                .expect("checked by resolve_engine");
            let basis = CharacterBasis::new(&a.group);
            let table = fourier_pmf_with(&basis, &a.step_law, horizon, &ctx.tol)?;
            let probs: Vec<Vec<f64>> = starts
                .iter()
                .map(|&s| table.series(&a.group, s, ctx.target))
                .collect();
            Ok((probs.clone(), probs.iter().map(|p| unabsorbed(p)).collect()))
        }
        Engine::Spectral => {
            let mut probs = Vec::new();
            for &s in starts {
                let mut c = gf_series(&ctx.graph, s, ctx.target, horizon)?;
                c.remove(0);
                probs.push(c);
            }
            Ok((probs.clone(), probs.iter().map(|p| unabsorbed(p)).collect()))
        }
    }
}

fn unabsorbed(p: &[f64]) -> f64 {
    (1.0 - p.iter().sum::<f64>()).max(0.0)
}

fn cmd_pmf(
    ctx: &mut Context,
    system: &AbsorbingSystem,
    req: &Request,
    start: Option<usize>,
) -> Result<(Engine, Payload)> {
    let engine = resolve_engine(ctx, req.engine, req.horizon)?;
    let starts = all_starts(system, start);
    let (probabilities, residual) = engine_distribution(ctx, system, engine, &starts, req.horizon)?;
    Ok((
        engine,
        Payload::Distribution {
            starts,
            n: (1..=req.horizon).collect(),
            probabilities,
            residual,
        },
    ))
}

fn cmd_moments(
    ctx: &mut Context,
    system: &AbsorbingSystem,
    req: &Request,
    start: Option<usize>,
) -> Result<(Engine, Payload)> {
    let starts = all_starts(system, start);
    let engine = match req.engine {
        Engine::Auto | Engine::Direct => Engine::Direct,
        Engine::Fourier => {
            fourier_applicable(&ctx.graph)?;
            Engine::Fourier
        }
        Engine::Spectral => {
            return Err(invalid(
                "moments are computed by the direct or fourier engine",
            ));
        }
    };
    let rows = match engine {
        Engine::Fourier => {
            let a = ctx.graph.abelian_structure().expect("checked above");
            let basis = CharacterBasis::new(&a.group);
            let qs = q_star(&a.group, &a.step_law)?;
            starts
                .iter()
                .map(|&s| {
                    let g = a.group.sub_index(s, ctx.target);
                    let mean = expected_hitting_abelian_with(&basis, &a.step_law, g, &ctx.tol)?;
                    let v = variance_abelian_with(&basis, &a.step_law, g, qs, &ctx.tol)?;
                    Ok(MomentRow {
                        start: s,
                        mean,
                        second_moment: v.second_moment,
                        variance: v.second_moment - mean * mean,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        _ => {
            let m = moments_with(system, &ctx.tol)?;
            starts
                .iter()
                .map(|&s| {
                    let (mean, second, variance) = m.at(s)?;
                    Ok(MomentRow {
                        start: s,
                        mean,
                        second_moment: second,
                        variance,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let (return_mean, return_second_moment) = return_moments(&ctx.kernel, ctx.target)?;
    Ok((
        engine,
        Payload::Moments {
            rows,
            return_mean,
            return_second_moment,
        },
    ))
}

/// Parses `a:b:steps`.
pub fn parse_t_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(HitError::Parse(format!(
            "--t-grid expects a:b:steps, got {s:?}"
        )));
    }
    let a: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| HitError::Parse(format!("bad grid start {:?}", parts[0])))?;
    let b: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| HitError::Parse(format!("bad grid end {:?}", parts[1])))?;
    let steps: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| HitError::Parse(format!("bad grid step count {:?}", parts[2])))?;
    time_grid(a, b, steps)
}

fn cmd_ctime(
    ctx: &mut Context,
    system: &AbsorbingSystem,
    req: &Request,
    start: Option<usize>,
) -> Result<Payload> {
    let mean = ct_moments_with(system, 1, &ctx.tol)?;
    let second = ct_moments_with(system, 2, &ctx.tol)?;
    let times = match &req.t_grid {
        Some(g) => parse_t_grid(g)?,
        None => {
            let top = mean.iter().copied().fold(0.0, f64::max);
            ctx.warnings
                .push(format!("no --t-grid given; using 0:{}:100", 4.0 * top));
            time_grid(0.0, 4.0 * top, 100)?
        }
    };
    let eval = ct_evaluate(system, &times, req.tol)?;
    let starts = all_starts(system, start);
    let mut cdf = Vec::new();
    let mut pdf = Vec::new();
    let mut m1 = Vec::new();
    let mut m2 = Vec::new();
    for &s in &starts {
        let r = system.reduced_index(s)?;
        cdf.push(eval.cdf_series(s)?);
        pdf.push(eval.pdf_series(s)?);
        m1.push(mean[r]);
        m2.push(second[r]);
    }
    Ok(Payload::Ctime {
        starts,
        times,
        cdf,
        pdf,
        truncation: eval.truncation,
        mean: m1,
        second_moment: m2,
    })
}

fn sim_config(req: &Request) -> SimConfig {
    SimConfig::new(req.trials, req.seed).with_workers(req.workers.max(1))
}

fn cmd_simulate(
    ctx: &Context,
    system: &AbsorbingSystem,
    req: &Request,
    start: usize,
) -> Result<Payload> {
    let summary = simulate(&ctx.kernel, start, ctx.target, &sim_config(req))?;
    let (exact_mean, _, exact_variance) = moments_with(system, &ctx.tol)?.at(start)?;
    let standard_error = summary.standard_error();
    let mean_z = z_score(summary.mean - exact_mean, standard_error);
    Ok(Payload::Simulation {
        summary,
        exact_mean,
        exact_variance,
        standard_error,
        mean_z,
    })
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff.abs() < 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Closed-form law for the families that have one, `n = 1..=horizon`.
fn closed_form_series(
    graph: &Graph,
    start: usize,
    target: usize,
    horizon: usize,
) -> Option<Result<Vec<f64>>> {
    let each =
        |f: &dyn Fn(usize) -> Result<f64>| (1..=horizon).map(f).collect::<Result<Vec<f64>>>();
    match *graph.family() {
        GraphFamily::Complete(k) => Some(each(&|n| closed_complete(k, n))),
        GraphFamily::CompleteBipartite(k1, k2) => {
            let (target_part, other_part, same) = if target < k1 {
                (k1, k2, start < k1)
            } else {
                (k2, k1, start >= k1)
            };
            let case = if same {
                BipartiteCase::SameSide
            } else {
                BipartiteCase::Cross
            };
            Some(each(&|n| {
                closed_bipartite(other_part, target_part, case, n)
            }))
        }
        GraphFamily::Cycle(k) => {
            let d = (start + k - target) % k;
            Some(each(&|n| closed_cycle(k, d, n)))
        }
        GraphFamily::Path(k) if k >= 3 && (target == 0 || target == k - 1) => {
            let i = start.abs_diff(target);
            Some(each(&|n| path_endpoint_pmf(k, i, n)))
        }
        _ => None,
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn cmd_compare(
    ctx: &mut Context,
    system: &AbsorbingSystem,
    req: &Request,
    start: usize,
) -> Result<Payload> {
    let horizon = req.horizon;
    let mut series = Vec::new();
    let mut skipped = Vec::new();
    let mut moments_out = Vec::new();

    let (direct, _) = engine_distribution(ctx, system, Engine::Direct, &[start], horizon)?;
    series.push(EngineSeries {
        engine: "direct".into(),
        values: direct[0].clone(),
    });
    let m = moments_with(system, &ctx.tol)?;
    let (exact_mean, _, exact_var) = m.at(start)?;
    moments_out.push(EngineMoments {
        engine: "direct".into(),
        mean: exact_mean,
        variance: exact_var,
    });

    match fourier_applicable(&ctx.graph) {
        Ok(()) => {
            let (f, _) = engine_distribution(ctx, system, Engine::Fourier, &[start], horizon)?;
            series.push(EngineSeries {
                engine: "fourier".into(),
                values: f[0].clone(),
            });
            let a = ctx.graph.abelian_structure().expect("checked");
            let basis = CharacterBasis::new(&a.group);
            let g = a.group.sub_index(start, ctx.target);
            let mean = expected_hitting_abelian_with(&basis, &a.step_law, g, &ctx.tol)?;
            let qs = q_star(&a.group, &a.step_law)?;
            let v = variance_abelian_with(&basis, &a.step_law, g, qs, &ctx.tol)?;
            moments_out.push(EngineMoments {
                engine: "fourier".into(),
                mean,
                variance: v.second_moment - mean * mean,
            });
        }
        Err(e) => skipped.push(Skipped {
            engine: "fourier".into(),
            reason: e.to_string(),
        }),
    }

    match spectral_applicable(&ctx.graph, horizon) {
        Ok(warning) => {
            if let Some(w) = warning {
                ctx.warnings.push(w);
            }
            let (s, _) = engine_distribution(ctx, system, Engine::Spectral, &[start], horizon)?;
            series.push(EngineSeries {
                engine: "spectral".into(),
                values: s[0].clone(),
            });
        }
        Err(e) => skipped.push(Skipped {
            engine: "spectral".into(),
            reason: e.to_string(),
        }),
    }

    match closed_form_series(&ctx.graph, start, ctx.target, horizon) {
        Some(r) => series.push(EngineSeries {
            engine: "closed_form".into(),
            values: r?,
        }),
        None => skipped.push(Skipped {
            engine: "closed_form".into(),
            reason: "no closed form for this graph family".into(),
        }),
    }

    let config = sim_config(req);
    let report = empirical_vs_exact(&ctx.kernel, start, ctx.target, &config, horizon)?;
    let trials = report.summary.trials as f64;
    let empirical: Vec<f64> = (1..=horizon as u64)
        .map(|n| report.summary.empirical_pmf.get(&n).copied().unwrap_or(0) as f64 / trials)
        .collect();
    series.push(EngineSeries {
        engine: "montecarlo".into(),
        values: empirical,
    });
    let se = report.summary.standard_error();
    let monte_carlo = MonteCarloCheck {
        trials: report.trials,
        seed: req.seed,
        mean: report.summary.mean,
        variance: report.summary.variance,
        standard_error: se,
        mean_z: z_score(report.summary.mean - exact_mean, se),
        capped_count: report.summary.capped_count,
        chi_square: report.chi_square,
        degrees_of_freedom: report.degrees_of_freedom,
        max_abs_z: report.max_abs_z,
        bins: report.bins,
    };
    if let Some(w) = &report.summary.warning {
        ctx.warnings.push(w.clone());
    }

    let discrepancy = series
        .iter()
        .map(|a| {
            series
                .iter()
                .map(|b| max_abs_diff(&a.values, &b.values))
                .collect()
        })
        .collect();

    let diag_torus = match *ctx.graph.family() {
        GraphFamily::TorusDiagonal(p) => Some(diag_torus_convolution_report(
            p,
            (start / p, start % p),
            (ctx.target / p, ctx.target % p),
            horizon,
        )?),
        _ => None,
    };

    Ok(Payload::Compare(Box::new(CompareReport {
        horizon,
        engines: series.iter().map(|s| s.engine.clone()).collect(),
        series,
        discrepancy,
        moments: moments_out,
        monte_carlo,
        skipped,
        diag_torus,
    })))
}

fn cmd_gf(ctx: &mut Context, req: &Request, start: usize) -> Result<Payload> {
    if !matches!(req.engine, Engine::Auto | Engine::Spectral) {
        return Err(invalid("gf is produced by the spectral engine"));
    }
    if let Some(w) = spectral_applicable(&ctx.graph, req.horizon)? {
        ctx.warnings.push(w);
    }
    let coefficients = gf_series(&ctx.graph, start, ctx.target, req.horizon)?;
    let (rational, rational_max_deviation) = if ctx.graph.node_count() <= 40 {
        match rational_gf_with(&ctx.graph, start, ctx.target, &ctx.tol) {
            Ok(r) => {
                let e = r.expand(coefficients.len())?;
                let dev = max_abs_diff(&e, &coefficients);
                (Some(r), Some(dev))
            }
            Err(HitError::ConditioningFailure {
                residual,
                tolerance,
            }) => {
                ctx.warnings.push(format!(
                    "rational form skipped: interpolation residual {residual:e} exceeds {tolerance:e}"
                ));
                (None, None)
            }
            Err(e) => return Err(e),
        }
    } else {
        ctx.warnings
            .push("rational form skipped for graphs above 40 nodes".into());
        (None, None)
    };
    Ok(Payload::Series {
        coefficients,
        rational,
        rational_max_deviation,
    })
}

// ---------------------------------------------------------------------------
// Rendering

/// Shortest decimal that parses back to the same `f64`; the JSON and CSV
/// writers both use it.
pub fn fmt_num(x: f64) -> String {
    serde_json::to_string(&x).expect("f64 serializes")
}

impl OutputDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    /// One or more CSV tables separated by blank lines, each headed by a
    /// `# name` line. The first line holds the metadata as JSON.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# metadata {}\n",
            serde_json::to_string(&self.metadata).expect("metadata serializes")
        );
        let row = |cells: Vec<String>| cells.join(",") + "\n";
        match &self.payload {
            Payload::Distribution {
                starts,
                n,
                probabilities,
                residual,
            } => {
                out += "# distribution\n";
                let mut head = vec!["n".to_string()];
                head.extend(starts.iter().map(|s| format!("from_{s}")));
                out += &row(head);
                for (k, nn) in n.iter().enumerate() {
                    let mut cells = vec![nn.to_string()];
                    cells.extend(probabilities.iter().map(|p| fmt_num(p[k])));
                    out += &row(cells);
                }
                out += "\n# residual\nstart,residual\n";
                for (s, r) in starts.iter().zip(residual) {
                    out += &row(vec![s.to_string(), fmt_num(*r)]);
                }
            }
            Payload::Moments {
                rows,
                return_mean,
                return_second_moment,
            } => {
                out += "# moments\nstart,mean,second_moment,variance\n";
                for r in rows {
                    out += &row(vec![
                        r.start.to_string(),
                        fmt_num(r.mean),
                        fmt_num(r.second_moment),
                        fmt_num(r.variance),
                    ]);
                }
                out += "\n# return\nreturn_mean,return_second_moment\n";
                out += &row(vec![fmt_num(*return_mean), fmt_num(*return_second_moment)]);
            }
            Payload::Ctime {
                starts,
                times,
                cdf,
                pdf,
                truncation,
                mean,
                second_moment,
            } => {
                out += "# ctime\n";
                let mut head = vec!["t".to_string()];
                head.extend(starts.iter().map(|s| format!("cdf_{s}")));
                head.extend(starts.iter().map(|s| format!("pdf_{s}")));
                out += &row(head);
                for (k, t) in times.iter().enumerate() {
                    let mut cells = vec![fmt_num(*t)];
                    cells.extend(cdf.iter().map(|c| fmt_num(c[k])));
                    cells.extend(pdf.iter().map(|p| fmt_num(p[k])));
                    out += &row(cells);
                }
                out += "\n# moments\nstart,mean,second_moment\n";
                for (i, s) in starts.iter().enumerate() {
                    out += &row(vec![
                        s.to_string(),
                        fmt_num(mean[i]),
                        fmt_num(second_moment[i]),
                    ]);
                }
                out += &format!("\n# truncation\ntruncation\n{}\n", fmt_num(*truncation));
            }
            Payload::Simulation {
                summary,
                exact_mean,
                exact_variance,
                standard_error,
                mean_z,
            } => {
                out += "# summary\nfield,value\n";
                for (k, v) in [
                    ("trials", summary.trials.to_string()),
                    ("completed", summary.completed.to_string()),
                    ("capped_count", summary.capped_count.to_string()),
                    ("mean", fmt_num(summary.mean)),
                    ("variance", fmt_num(summary.variance)),
                    ("min", summary.min.to_string()),
                    ("max", summary.max.to_string()),
                    ("exact_mean", fmt_num(*exact_mean)),
                    ("exact_variance", fmt_num(*exact_variance)),
                    ("standard_error", fmt_num(*standard_error)),
                    ("mean_z", fmt_num(*mean_z)),
                ] {
                    out += &row(vec![k.to_string(), v]);
                }
                out += "\n# histogram\nn,count\n";
                for (n, c) in &summary.empirical_pmf {
                    out += &row(vec![n.to_string(), c.to_string()]);
                }
            }
            Payload::Series {
                coefficients,
                rational,
                rational_max_deviation,
            } => {
                out += "# series\nn,coefficient\n";
                for (n, c) in coefficients.iter().enumerate() {
                    out += &row(vec![n.to_string(), fmt_num(*c)]);
                }
                if let Some(r) = rational {
                    out += "\n# rational\npower,numerator,denominator\n";
                    for k in 0..r.numerator.len().max(r.denominator.len()) {
                        let cell = |v: &[f64]| v.get(k).map_or(String::new(), |x| fmt_num(*x));
                        out += &row(vec![
                            k.to_string(),
                            cell(&r.numerator),
                            cell(&r.denominator),
                        ]);
                    }
                }
                if let Some(d) = rational_max_deviation {
                    out += &format!("\n# rational_max_deviation\nvalue\n{}\n", fmt_num(*d));
                }
            }
            Payload::Compare(c) => {
                out += "# series\n";
                let mut head = vec!["n".to_string()];
                head.extend(c.engines.iter().cloned());
                out += &row(head);
                for k in 0..c.horizon {
                    let mut cells = vec![(k + 1).to_string()];
                    cells.extend(c.series.iter().map(|s| fmt_num(s.values[k])));
                    out += &row(cells);
                }
                out += "\n# discrepancy\n";
                let mut head = vec!["engine".to_string()];
                head.extend(c.engines.iter().cloned());
                out += &row(head);
                for (e, r) in c.engines.iter().zip(&c.discrepancy) {
                    let mut cells = vec![e.clone()];
                    cells.extend(r.iter().map(|x| fmt_num(*x)));
                    out += &row(cells);
                }
                out += "\n# moments\nengine,mean,variance\n";
                for m in &c.moments {
                    out += &row(vec![m.engine.clone(), fmt_num(m.mean), fmt_num(m.variance)]);
                }
                let mc = &c.monte_carlo;
                out += "\n# monte_carlo\nfield,value\n";
                for (k, v) in [
                    ("trials", mc.trials.to_string()),
                    ("seed", mc.seed.to_string()),
                    ("mean", fmt_num(mc.mean)),
                    ("variance", fmt_num(mc.variance)),
                    ("standard_error", fmt_num(mc.standard_error)),
                    ("mean_z", fmt_num(mc.mean_z)),
                    ("capped_count", mc.capped_count.to_string()),
                    ("chi_square", fmt_num(mc.chi_square)),
                    ("degrees_of_freedom", mc.degrees_of_freedom.to_string()),
                    ("max_abs_z", fmt_num(mc.max_abs_z)),
                ] {
                    out += &row(vec![k.to_string(), v]);
                }
                out += "\n# goodness\nn,observed,expected,z\n";
                for b in &mc.bins {
                    out += &row(vec![
                        b.n.to_string(),
                        b.observed.to_string(),
                        fmt_num(b.expected),
                        fmt_num(b.z),
                    ]);
                }
                if !c.skipped.is_empty() {
                    out += "\n# skipped\nengine,reason\n";
                    for s in &c.skipped {
                        out += &row(vec![
                            s.engine.clone(),
                            format!("\"{}\"", s.reason.replace('"', "\"\"")),
                        ]);
                    }
                }
                if let Some(d) = &c.diag_torus {
                    out += "\n# diag_torus\nn,convolution,direct\n";
                    for (n, conv) in d.convolution.iter().enumerate() {
                        let direct = d.direct.as_ref().map_or(String::new(), |v| fmt_num(v[n]));
                        out += &row(vec![n.to_string(), fmt_num(*conv), direct]);
                    }
                    if let Some(m) = d.max_discrepancy {
                        out += &format!("\n# diag_torus_max_discrepancy\nvalue\n{}\n", fmt_num(m));
                    }
                }
            }
        }
        out
    }
}
