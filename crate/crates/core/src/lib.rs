//! Szász-Mirakjan-Durrmeyer type operators on `[0, ∞)`.
//!
//! For a scale `n > 0` and an integer shift `j`, the operator acts on a
//! function `f` of at most exponential growth as
//!
//! ```text
//! (S_{n,j} f)(x) = f(0) Σ_{k=0}^{j-1} s_{n,k}(x)
//!                 + Σ_{k=j}^{∞} s_{n,k}(x) · n ∫_0^∞ s_{n,k-j}(t) f(t) dt,
//! ```
//!
//! where `s_{n,k}(x) = (nx)^k e^{-nx} / k!` (and `s_{n,k} = 0` for `k < 0`).
//! The shift selects the classical Durrmeyer form (`j = 0`), the genuine
//! "Phillips" form (`j = 1`) and Kantorovich-type modifications (`j ≤ -1`).
//!
//! The crate provides two engines and a verification layer on top:
//!
//! * [`algebra`] — an exact engine over the class `span{ x^a e^{bx} }` with
//!   rational coefficients, closed under the operators and under
//!   differentiation; every identity the family satisfies (composition of
//!   scales, commutativity, iterate collapse, commutation with the
//!   associated differential operators) can be checked as exact term-wise
//!   equality.
//! * [`operator`] — a floating-point engine for black-box functions with a
//!   declared growth bound, using certified series truncation and
//!   Gauss-Laguerre quadrature matched to the kernel weight.
//! * [`diffop`], [`spectral`], [`semigroup`], [`asymptotics`] — the second
//!   order differential operators attached to the family, their iterates,
//!   eigenfunctions of both the operators and the differential operators,
//!   and convergence-order estimation for the small-`1/n` expansion.
//! * [`suites`] and [`report`] — named verification suites producing
//!   machine-readable reports, consumed by the `durrmeyer-lab` CLI.

pub mod algebra;
pub mod asymptotics;
pub mod builtins;
pub mod diffop;
pub mod error;
pub mod kernel;
pub mod operator;
pub mod quadrature;
pub mod rational;
pub mod report;
pub mod semigroup;
pub mod spectral;
pub mod suites;

pub use error::{Error, Result};
pub use kernel::{GrowthClass, OperatorParams};
pub use rational::Rat;
