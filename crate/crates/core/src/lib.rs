//! Directed graphs with multiplicities in `ℕ ∪ {∞}`: structural predicates,
//! moves with replayable traces, canonical forms, ideal lattices, a calculus
//! of projection coefficient systems, corner and unitization graphs, and
//! Smith-normal-form K-theory used to check every transformation.

pub mod error;
pub mod ext_nat;
pub mod canonical;
pub mod corners;
pub mod corpus;
pub mod dot;
pub mod graph;
pub mod ideals;
pub mod ktheory;
pub mod moves;
pub mod projcalc;

pub use error::{Error, Result};
pub use ext_nat::{ExtNat, INF};
pub use graph::{CycleCount, EdgeRef, Graph, VertexClass, VertexId, VertexKind, VertexSet};
pub use moves::{EdgeClass, Move, MoveRecord, Partition};
pub use corners::CornerGraph;
pub use projcalc::{CoefficientSystem, MultiplicityVector, ProjectionSequence};

use num_bigint::BigInt;

pub type IntMatrix = ktheory::Matrix<BigInt>;
pub type SmithForm = ktheory::SmithForm<BigInt>;
pub type KTheoryPair = ktheory::KGroups<BigInt>;
pub type K0Class = ktheory::K0ClassOf<BigInt>;
pub type K0Reducer = ktheory::K0Reducer<BigInt>;

pub fn reg_matrix(g: &Graph) -> IntMatrix {
    ktheory::reg_matrix_in(g)
}

pub fn smith_normal_form(m: &IntMatrix) -> SmithForm {
    ktheory::smith_normal_form(m)
}

pub fn k_groups(g: &Graph) -> KTheoryPair {
    ktheory::k_groups_in(g)
}

pub fn k0_reduce(g: &Graph, x: &[BigInt]) -> K0Class {
    ktheory::k0_reduce_in(g, x)
}
