//! Splitting shapes and common index divisors for nonic trinomials.
//!
//! For `F(x) = x^9 + ax + b` (with `ab != 0`, irreducible over `Q`) and
//! `K = Q(theta)` the field it generates, this crate computes the shape of the
//! factorization of `p Z_K` for `p` in `{2, 3, 5, 7}`, decides whether `p` is a
//! common index divisor of `K`, and reports the resulting monogenicity
//! obstruction.
//!
//! Two independent routes are cross-checked on every query:
//!
//! * an algorithmic engine built from phi-adic Newton polygons, residual
//!   polynomials, and (for the wildly ramified 2-adic families) second-order
//!   polygons ([`ore`], [`polygon`], [`order2`]);
//! * a congruence-table classifier that decides the case from `(a, b)` residues
//!   and valuations alone ([`verdict`]).

pub mod arith;
pub mod finfield;
pub mod order2;
pub mod ore;
pub mod polygon;
pub mod verdict;

pub use arith::{Trinomial, Valuation};
pub use order2::{complete_analysis, order2_resolve, resolve_seed, ResolveOptions};
pub use ore::{analyze, Analysis, AnalysisStatus, SplittingShape};
