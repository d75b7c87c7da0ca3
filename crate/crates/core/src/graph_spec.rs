//! Graph-spec files and preset strings.
//!
//! Four JSON shapes are accepted, each with a fixed key set:
//!
//! ```json
//! {"nodes": 4, "edges": [[0, 1], [1, 2, 0.5]], "labels": ["a", "b", "c", "d"]}
//! {"preset": "hypercube", "params": [3]}
//! {"factors": [3, 3], "step_law": [[[1, 0], 0.25], [[2, 0], 0.25], ...]}
//! {"degree": 3, "generators": ["(123)", "(132)", "(13)"], "weights": [...], "size_bound": 10080}
//! ```
//!
//! On the command line a preset is written `name:arg,arg` (or `name:arg:arg`).

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::abelian::{FiniteAbelianGroup, StepLaw};
use crate::error::{HitError, Result};
use crate::graph::{
    abelian_cayley_graph, build_cayley, build_cayley_d8, build_cayley_s3,
    build_cayley_s3_transpositions, build_complete, build_complete_bipartite, build_cycle,
    build_diamond, build_hypercube, build_path, build_torus_diagonal, build_torus_standard, Graph,
    Permutation, PermutationGroupSpec, DEFAULT_GROUP_BOUND,
};

/// Preset names with their parameter counts.
pub const PRESETS: [(&str, usize); 11] = [
    ("cycle", 1),
    ("path", 1),
    ("complete", 1),
    ("bipartite", 2),
    ("hypercube", 1),
    ("torus_std", 1),
    ("torus_diag", 1),
    ("cayley_s3", 0),
    ("cayley_s3_transpositions", 0),
    ("cayley_d8", 0),
    ("diamond", 0),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeSpec {
    Plain(usize, usize),
    Weighted(usize, usize, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSpec {
    pub nodes: usize,
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetSpec {
    pub preset: String,
    #[serde(default)]
    pub params: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbelianSpec {
    pub factors: Vec<usize>,
    pub step_law: Vec<(Vec<usize>, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermutationSpec {
    pub degree: usize,
    /// Cycle notation on `1..=degree`.
    pub generators: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_bound: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum GraphSpec {
    Explicit(ExplicitSpec),
    Preset(PresetSpec),
    Abelian(AbelianSpec),
    Permutation(PermutationSpec),
}

fn parse_err(e: impl std::fmt::Display) -> HitError {
    HitError::Parse(e.to_string())
}

impl GraphSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(parse_err)?;
        Self::from_value(v)
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| HitError::Parse("graph spec must be a JSON object".into()))?;
        let spec = if obj.contains_key("preset") {
            GraphSpec::Preset(serde_json::from_value(v).map_err(parse_err)?)
        } else if obj.contains_key("nodes") {
            GraphSpec::Explicit(serde_json::from_value(v).map_err(parse_err)?)
        } else if obj.contains_key("factors") {
            GraphSpec::Abelian(serde_json::from_value(v).map_err(parse_err)?)
        } else if obj.contains_key("generators") {
            GraphSpec::Permutation(serde_json::from_value(v).map_err(parse_err)?)
        } else {
            return Err(HitError::Parse(
                "graph spec needs one of the keys preset, nodes, factors, generators".into(),
            ));
        };
        if let GraphSpec::Preset(p) = &spec {
            check_preset(p)?;
        }
        Ok(spec)
    }

    /// Parses `name`, `name:3` or `name:2,3`, with an optional `preset:` prefix.
    pub fn from_preset_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let s = s.strip_prefix("preset:").unwrap_or(s);
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let params = rest
            .split([',', ':'])
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                t.trim().parse::<usize>().map_err(|_| {
                    HitError::Parse(format!(
                        "preset parameter {t:?} is not a nonnegative integer"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let p = PresetSpec {
            preset: name.trim().to_string(),
            params,
        };
        check_preset(&p)?;
        Ok(GraphSpec::Preset(p))
    }

    pub fn preset(name: &str, params: &[usize]) -> Result<Self> {
        let p = PresetSpec {
            preset: name.to_string(),
            params: params.to_vec(),
        };
        check_preset(&p)?;
        Ok(GraphSpec::Preset(p))
    }

    /// Compact JSON with fixed key order.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("graph spec serializes")
    }

    /// Lowercase hex SHA-256 of [`GraphSpec::canonical_json`].
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Explicit(e) => {
                let edges: Vec<(usize, usize, f64)> = e
                    .edges
                    .iter()
                    .map(|x| match *x {
                        EdgeSpec::Plain(u, v) => (u, v, 1.0),
                        EdgeSpec::Weighted(u, v, w) => (u, v, w),
                    })
                    .collect();
                let g = Graph::new(e.nodes, &edges)?;
                match &e.labels {
                    Some(l) => g.with_labels(l.clone()),
                    None => Ok(g),
                }
            }
            GraphSpec::Preset(p) => build_preset(&p.preset, &p.params),
            GraphSpec::Abelian(a) => {
                let group = FiniteAbelianGroup::new(a.factors.clone())?;
                let law = StepLaw::from_pairs(&group, &a.step_law)?;
                abelian_cayley_graph(&group, &law)
            }
            GraphSpec::Permutation(p) => {
                let gens = p
                    .generators
                    .iter()
                    .map(|c| Permutation::parse_cycles(c, p.degree))
                    .collect::<Result<Vec<_>>>()?;
                let mut spec = PermutationGroupSpec::new(p.degree, gens);
                if let Some(w) = &p.weights {
                    spec = spec.with_weights(w.clone());
                }
                spec.size_bound = p.size_bound.unwrap_or(DEFAULT_GROUP_BOUND);
                build_cayley(&spec)
            }
        }
    }
}

fn check_preset(p: &PresetSpec) -> Result<()> {
    let (_, arity) = PRESETS
        .iter()
        .find(|(n, _)| *n == p.preset)
        .ok_or_else(|| {
            let names: Vec<_> = PRESETS.iter().map(|(n, _)| *n).collect();
            HitError::Parse(format!(
                "unknown preset {:?}; known: {}",
                p.preset,
                names.join(", ")
            ))
        })?;
    if p.params.len() != *arity {
        return Err(HitError::Parse(format!(
            "preset {} takes {} parameter(s), got {}",
            p.preset,
            arity,
            p.params.len()
        )));
    }
    Ok(())
}

fn build_preset(name: &str, params: &[usize]) -> Result<Graph> {
    match (name, params) {
        ("cycle", [k]) => build_cycle(*k),
        ("path", [k]) => build_path(*k),
        ("complete", [k]) => build_complete(*k),
        ("bipartite", [a, b]) => build_complete_bipartite(*a, *b),
        ("hypercube", [d]) => build_hypercube(*d),
        ("torus_std", [p]) => build_torus_standard(*p),
        ("torus_diag", [p]) => build_torus_diagonal(*p),
        ("cayley_s3", []) => build_cayley_s3(),
        ("cayley_s3_transpositions", []) => build_cayley_s3_transpositions(),
        ("cayley_d8", []) => build_cayley_d8(),
        ("diamond", []) => build_diamond(),
        _ => Err(HitError::Parse(format!(
            "bad preset {name} with {params:?}"
        ))),
    }
}
