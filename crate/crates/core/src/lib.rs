pub mod arithmetic;
pub mod caps;
pub mod circle_maps;
pub mod error;
pub mod localization;
pub mod operators;
pub mod potentials;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use arithmetic::{Alpha, ContinuedFraction, IrrationalSpec};
pub use circle_maps::{CircleMap, ConjugacySpec, MapKind, MapSpec, Phase};
pub use operators::{Boundary, BoxOperator, Model, Side};
pub use potentials::{Potential, PotentialSpec};
