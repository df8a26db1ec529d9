pub mod bits;
pub mod coupling;
pub mod poly;
pub mod rng;
pub mod spec;
pub mod state;

pub use bits::{binomial, ln_binomial, ln_factorial, hamming_class_members, BitString, WeightSector};
pub use coupling::{outcome_index_sets, sample_coupling, CouplingMatrix};
pub use poly::{equidistant_nodes, Polynomial, Sample, SampleSet};
pub use rng::Rng;
pub use spec::{HamiltonianSpec, ModelClass, ModelKind, ZFields};
pub use state::{Basis, StateVector};
