//! Manifold matching: embed several disparate dissimilarity spaces into one
//! low-dimensional Euclidean space and test whether new observations match.
//!
//! Three matchers are provided behind a common interface:
//!
//! * `pm`   – separate raw-stress MDS per condition followed by orthogonal Procrustes,
//! * `cca`  – full-dimensional classical MDS followed by canonical correlation,
//! * `jofc` – raw-stress MDS of a weighted omnibus matrix that jointly trades off
//!   within-condition fidelity against between-condition commensurability.
//!
//! The [`harness`] module runs the Monte Carlo power studies, hold-out and
//! ranking experiments, and the Grassmannian diagnostic on top of the
//! generators in [`simgen`].

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod align;
pub mod dissim;
pub mod error;
pub mod exec;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod mds;
pub mod omnibus;
pub mod pipelines;
pub mod seed;
pub mod simgen;

pub use error::{Error, Result};
