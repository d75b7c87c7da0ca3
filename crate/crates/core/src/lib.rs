//! Hitting-time distributions of random walks on graphs.
//!
//! Engines: a general absorbing-chain engine ([`hitting`]), a Fourier engine
//! for Cayley graphs of finite abelian groups ([`abelian`]), a trace-recursion
//! engine for vertex-transitive graphs ([`spectral`]), continuous time
//! ([`ctime`]) and a seeded simulator ([`montecarlo`]).

pub mod abelian;
pub mod cli;
pub mod closed_form;
pub mod ctime;
pub mod error;
pub mod graph;
pub mod graph_spec;
pub mod hitting;
pub mod montecarlo;
pub mod numeric;
pub mod spectral;

pub use error::{ErrorClass, HitError, Result};
pub use graph::{simple_walk_kernel, Graph, TransitionKernel};
pub use hitting::{make_absorbing, moments, pmf, AbsorbingSystem, MomentReport, PmfTable};
pub use numeric::Tolerances;
