//! Max-min planning in POMDPs whose initial state is chosen by an adversary
//! from a finite list of environments.
//!
//! The optimal value over `k` steps is achieved by a randomized mixture of
//! deterministic policies. [`frontier`] builds the non-dominated set of
//! payoff vectors those policies reach, [`mixture`] picks the best mixture
//! with a small linear program, and [`exactspace`] holds the exhaustive
//! exact-arithmetic routines that serve as oracles. [`bench`] generates the
//! benchmark families and [`harness`] runs them.

pub mod bench;
pub mod error;
pub mod exactspace;
pub mod frontier;
pub mod harness;
pub mod mixture;
pub mod model;
pub mod scalar;

pub use error::{Error, Result};
pub use model::{MultiEnvPomdp, PayoffVector, PolicyTree, Pomdp};
pub use scalar::{Rational, Scalar, SmallRational};
