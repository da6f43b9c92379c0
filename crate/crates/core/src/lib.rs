//! Forested graph complex for the rational homology of `Out(F_n)`.
//!
//! The crate enumerates admissible graphs, builds bases of oriented forested
//! graphs up to automorphism, assembles the contraction and removal
//! differentials as sparse integer matrices and computes ranks and
//! nullspaces exactly over prime fields or the rationals. The dimension of
//! `H_p` is read off as `b_p - c_p - c_{p+1}`, where `b_p` is the nullity of
//! the contraction differential on the degree-`p` part and `c_p` is the rank
//! of the removal differential restricted to that nullspace.

pub mod chain;
pub mod cycleio;
pub mod enumerator;
pub mod error;
pub mod exactla;
pub mod forests;
pub mod multigraph;
pub mod pipeline;

pub use error::{ForestError, GraphError};
pub use multigraph::{
    canonical_form, canonical_labeling, classify, contract_edges, CanonicalKey, Classification,
    GraphClass, Multigraph,
};
