//! Exact and approximate solvers for sparse principal component analysis
//! and rank-one sparse singular value decomposition.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: dense eigen/singular primitives and the Gram factor.
//! * [`problem`]: instances, selections, objective evaluation, generators.
//! * [`oracle`]: exhaustive enumeration for small instances.
//! * [`heuristics`]: greedy, 1-swap and s-swap local search.
//! * [`bounds`]: Benders cuts, the relaxed dual and the saddle-point bound.
//! * [`bnb`]: best-first branch-and-bound.
//! * [`ssvd`]: the rank-one sparse SVD reductions and heuristics.
//! * [`milp`]: an ε-accurate mixed-integer linear model and LP writer.
//! * [`io`]: CSV / Matrix Market ingestion and the bundled Pitprops data.

pub mod bnb;
pub mod bounds;
pub mod error;
pub mod heuristics;
pub mod io;
pub mod milp;
pub mod oracle;
pub mod problem;
pub mod spectral;
pub mod ssvd;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/heuristics.md")]
    mod heuristics {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/exact.md")]
    mod exact {}
    #[doc = include_str!("../../../book/src/ssvd.md")]
    mod ssvd {}
    #[doc = include_str!("../../../book/src/milp.md")]
    mod milp {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
