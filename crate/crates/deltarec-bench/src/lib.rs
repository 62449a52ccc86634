//! Benchmark-only crate; see `benches/engine.rs`.
//!
//! Shared fixtures for the benchmarks live here so the bench target stays
//! small.

use deltarec::hazard::HazardTable;
use deltarec::{DiscreteModel, Sampler};
use std::sync::Arc;

pub fn geometric_fixture() -> (Arc<HazardTable>, Sampler) {
    let model = DiscreteModel::geometric(0.5).expect("valid parameter");
    let table = HazardTable::build(&model, -1).expect("valid table");
    let sampler = Sampler::new(&model);
    (table, sampler)
}

pub fn zeta_fixture() -> (Arc<HazardTable>, Sampler) {
    let model = DiscreteModel::zeta(2.0).expect("valid parameter");
    let table = HazardTable::build_with_depth(&model, -1, 4096).expect("valid table");
    let sampler = Sampler::new(&model);
    (table, sampler)
}
