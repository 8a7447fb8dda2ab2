//! Finite-level computations around free groups with rational and p-adic
//! exponents: Magnus expansions, nontriviality certificates, finite
//! p-quotients, Fox calculus, and mod-p Betti number approximation.
//!
//! The algebra is generic over the coefficient type through
//! [`scalars::Scalar`]; the aliases below fix the three domains used in
//! practice.

pub mod extcheck;
pub mod foxrank;
pub mod magnus;
pub mod pquot;
pub mod scalars;
pub mod series;
pub mod wordexpr;

pub use scalars::{Exponent, Fp, Padic, PadicRing, PrimeField, Rational, RationalField, Scalar};
pub use series::{Monomial, TruncatedSeries};
pub use wordexpr::{parse, Letter, WordExpr};

/// Series over the rationals.
pub type QSeries = TruncatedSeries<Rational>;
/// Series over `F_p`.
pub type FpSeries = TruncatedSeries<Fp>;
/// Series over `Z/p^k`.
pub type ZpkSeries = TruncatedSeries<Padic>;

pub type QMagnusContext = magnus::MagnusContext<Rational>;
pub type FpMagnusContext = magnus::MagnusContext<Fp>;
pub type ZpkMagnusContext = magnus::MagnusContext<Padic>;

pub type FpGroupRingElem = foxrank::GroupRingElem<Fp>;
pub type QGroupRingElem = foxrank::GroupRingElem<Rational>;
