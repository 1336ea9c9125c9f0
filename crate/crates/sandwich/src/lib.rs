//! Sandwiching random graphs with given degree sequences between binomial
//! random graphs.
//!
//! The crate provides, bottom to top:
//!
//! - [`graphs`]: graph/degree-sequence types, file formats, pseudorandomness
//!   and spectral diagnostics;
//! - [`oracle`]: exact t-factor counting, exact containment probabilities and
//!   exactly uniform factor sampling (big-integer/big-rational arithmetic);
//! - [`beta`]: the saddle-point (β-model) system and its Newton solver;
//! - [`asymptotic`]: the quadratic model Q, Gaussian-moment corrections and
//!   the closed-form enumeration and subgraph-probability estimates;
//! - [`coupling`]: the sequential coupling and independent-sampling
//!   procedures, parameter selection, and the two-sided sandwich assembly;
//! - [`harness`]: tail bounds and the statistical verification of every
//!   marginal and containment claim at desk scale;
//! - [`cli`]: the `gsandwich` command-line frontend.
//!
//! The user guide under `book/` walks through the same material with runnable
//! examples; its chapters are embedded as the [`guide`] module so the code
//! blocks run as doc-tests.

pub mod asymptotic;
pub mod beta;
pub mod cli;
pub mod coupling;
pub mod graphs;
pub mod guide;
pub mod harness;
pub mod oracle;
pub mod stream;
