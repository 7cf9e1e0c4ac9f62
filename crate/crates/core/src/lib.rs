//! Reconciliation of event-labeled gene trees with species networks
//! and MUL-trees: axiom verifiers, constructive pipelines, foldings
//! and unfoldings, rooted-triple machinery, and text formats.

pub mod axioms;
pub mod construct;
pub mod digraph;
pub mod error;
pub mod gen;
pub mod io;
pub mod phylo;
pub mod triples;
pub mod unfold;

pub use axioms::{
    alpha_to_mu, check_bitreenet, check_folding, check_mul, check_relaxed_tree, check_treenet,
    exists_mul_map, exists_treenet_map, AlphaEvent, AxiomReport, AxiomViolation, BiTreeNetMap,
    FoldingMap, ReconMap, SearchLimits, TargetKind,
};
pub use construct::{
    associate_mul, build_mu_star, compose_reconciliation, eliminate_multiarcs,
    fold_mul_to_network, lift_kappa_to_subdivision, network_from_triples, pipeline, star_sets,
    FoldArtifacts, NstarMap, PipelineResult, StarSets,
};
pub use digraph::{ArcId, Digraph, DigraphBuilder, Item, Path, SubdivisionMap, VertexId};
pub use error::{Error, Result};
pub use phylo::{
    is_well_behaved, mul_isomorphic, simple_subdivision, validate_gene_tree, validate_mul_tree,
    validate_network, Event, GeneTree, MULTree, Network, SimpleSubdivision, Triple,
};
pub use triples::{
    displayed_triples, displays, informative_triples, is_compatible, reconcile_to_tree,
    star_of_triples, DisplayLimits, TripleSet,
};
pub use unfold::{
    lift_mu, roundtrip_check, suppress_d1, unfold, unfold_star, universal_folding,
    RoundtripOutcome, Unfolding,
};

/// Default cap on the number of path vertices when unfolding.
pub const DEFAULT_UNFOLD_LIMIT: usize = 100_000;
