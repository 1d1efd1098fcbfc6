//! Shared fixtures for the kernel benchmarks.

use csl_core::{CircleMap, IrrationalSpec, MapSpec, Model, Phase, Potential, Side};

/// Sawtooth potential over the golden rotation.
pub fn golden_model(lambda: f64) -> Model {
    let map = CircleMap::new(&MapSpec::rotation(IrrationalSpec::golden())).expect("golden rotation");
    Model::new(lambda, Potential::sawtooth(), map).expect("valid model")
}

/// Diagonal of an `n`-site box starting at phase 0.1.
pub fn diagonal(model: &Model, n: usize) -> Vec<f64> {
    model.site_values(Phase::from_unit(0.1), n, Side::Right)
}
