//! graphsynth: a schema-driven synthetic property-graph generator.
//!
//! Users declare node and edge types, property distributions, structure
//! generators and a scale directive in a small DSL. The tool then
//! deterministically generates property tables and edge tables, and matches
//! property values to graph-structure nodes so that a user-supplied joint
//! probability distribution over the property values of connected nodes is
//! reproduced.

pub mod experiment;
pub mod matcher;
pub mod params;
pub mod pipeline;
pub mod propgen;
pub mod registry;
pub mod rng;
pub mod schema;
pub mod store;
pub mod structgen;
