//! Symbolic machinery for ordinal-ranked trees: Cantor-normal-form ordinal
//! arithmetic, well-founded blossomed trees with transfinite derivations and
//! ranks, the coarse wedge topology and its Cantor-Bendixson derivative,
//! exact-rational tree operators and norms, operator factorization witnesses,
//! a symbolic Szlenk-derivation simulator on tree-dual systems, and
//! finite-dimensional numeric checks for the quantitative lemmas.

pub mod factor;
pub mod fdlab;
pub mod ordinal;
pub mod rat;
pub mod szlenk;
pub mod topology;
pub mod tree;
pub mod vectors;
pub mod verify;

pub use ordinal::{Ordinal, OrdinalClass, OrdinalError};
pub use tree::{blossom, DerivedView, FinTree, NodeId, TreeError, TreeExpr};
