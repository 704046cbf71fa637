//! Upper and lower bounds on the error exponent of distributed hypothesis
//! testing with a rate-limited link.
//!
//! A sender observes `X^n`, compresses it at rate `R` nats per symbol, and a
//! detector holding `Y^n` decides between `P_XY` and `Q_XY`. This crate
//! evaluates single-letter bounds on the best type-II exponent:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`prob`] | finite distributions, kernels, joint tables, KL and mutual information |
//! | [`inner`] | the inner maximisation `f` over reference input laws, and its coupling cap |
//! | [`optim`] | multi-start rate-constrained search over test channels `P_{U|X}` |
//! | [`bounds`] | add-and-subtract bound, auxiliary-receiver bounds, lower bound, chains |
//! | [`gaussian`] | closed forms for the bivariate Gaussian pair |
//!
//! All information quantities are in nats.

pub mod bounds;
pub mod error;
pub mod ext;
pub mod gaussian;
pub mod inner;
pub mod optim;
pub mod prob;

pub use error::{Error, Result};
pub use ext::ExtReal;
