//! Desk-scale machinery for rainbow clique subdivisions: expander extraction,
//! random-walk mixing analysis, exact closed-walk counting, good-pair
//! detection, and greedy assembly of rainbow K_m-subdivisions and r-blow-ups,
//! together with verifiers and lower-bound instance generators.

pub mod blowup;
pub mod expander;
pub mod generators;
pub mod graph;
pub mod io;
pub mod params;
pub mod paths;
pub mod spectral;
pub mod subdivision;
pub mod walkcount;

pub use graph::{Bipartition, ColouredGraph, Graph, GraphError};
