//! Component groups of modular Jacobians at a prime `q` of multiplicative
//! reduction, with the full Hecke action.
//!
//! For a prime `q >= 5` and a level `N` prime to `q`, the component group of
//! the Jacobian of `X_0(Nq)` at `q` is a finite abelian group that admits two
//! independent descriptions:
//!
//! * a presentation by generators and relations indexed by supersingular
//!   points in characteristic `q`, solved exactly by Smith normal form
//!   ([`compgroup::presented_group`]);
//! * a closed-form decomposition into a cyclic part and elementary 2- and
//!   3-groups, with explicit generators and the `T_q`-action on them
//!   ([`compgroup::closed_form`]).
//!
//! The crate computes both, cross-validates them, realizes every Hecke
//! operator on the group ([`hecke`]), computes Eisenstein-ideal kernels, and
//! checks the counting layer against an enumeration of supersingular
//! j-invariants in characteristic `q` ([`ssoracle`]).
//!
//! Batch sweeps over `(N, q)` pairs run data-parallel with rayon when the
//! default `parallel` feature is enabled; disabling it falls back to the
//! sequential path ([`pipeline`]).

pub mod abelian;
pub mod arith;
pub mod compgroup;
pub mod hecke;
pub mod levels;
pub mod pipeline;
pub mod ssoracle;

pub use levels::{factorize, level_invariants, CaseTag, LevelInvariants};
