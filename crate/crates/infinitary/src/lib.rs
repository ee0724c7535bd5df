//! Infinitary λ-calculus with non-idempotent intersection types.
//!
//! * [`term`]: finite and regular 001-terms as rooted graphs.
//! * [`reduction`]: positional β, head / leftmost / hereditary head
//!   strategies, recorded paths and Böhm-tree prefixes.
//! * [`r0`]: the multiset system with weighted subject reduction.
//! * [`stype`], [`sderiv`]: the rigid track-indexed system.
//! * [`dynamics`]: residuals, deterministic proof reduction, expansion.
//! * [`approx`]: the approximation order and infinitary expansion.
//! * [`nf`]: typing normal forms by natural extension.

pub mod nf;
pub mod pos;
pub mod r0;
pub mod reduction;
pub mod approx;
pub mod dynamics;
pub mod fixtures;
pub mod json;
pub mod sderiv;
pub mod stype;
pub mod term;
pub mod track;
