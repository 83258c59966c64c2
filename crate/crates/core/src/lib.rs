//! Rotational horseshoe networks on closed hyperbolic surfaces.
//!
//! The crate works on finite combinatorial data: horseshoes labelled by
//! deck-transformation words, Markovian connections between them, and
//! periodic-orbit proxies. From that it computes rotation polytopes, the
//! graph rotation set, chaotic-class partitions, the class order and the
//! graph of classes, and it synthesizes symbolic orbits with certified
//! rotation-vector convergence.

pub mod exact;
pub mod surface_group;
pub mod hyperbolic;
pub mod class_partition;
pub mod horseshoe_graph;
pub mod leaf_space;
pub mod rotation_polytopes;
pub mod markov_rect;
pub mod orbit_realization;
pub mod cli_io;
