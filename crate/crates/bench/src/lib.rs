//! Inputs shared by the benchmarks.

use plopt_core::io::{load_assessment, load_catalog, load_model};
use plopt_core::testkit::{self, random_instance, GainKind, Instance, Shape};
use plopt_core::{Catalog, IrrelevancePolicy, ResolvedAssessment};
use std::path::PathBuf;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/case-study")
}

/// The bundled case-study catalog and its resolved baseline.
pub fn case_study() -> (Catalog, ResolvedAssessment) {
    let dir = fixture_dir();
    let model = load_model(&dir.join("model.json")).expect("fixture model");
    let matrix = load_assessment(&dir.join("assessment.json")).expect("fixture assessment");
    let catalog = load_catalog(&dir.join("modifications.json")).expect("fixture catalog");
    let baseline = ResolvedAssessment::resolve(&model, &matrix, IrrelevancePolicy::Perfect)
        .expect("fixture resolves");
    (catalog, baseline)
}

/// A reproducible random instance with `modifications` options.
pub fn synthetic(modifications: usize, gains: GainKind, seed: u64) -> Instance {
    let mut rng = testkit::rng(seed);
    random_instance(
        &mut rng,
        &Shape {
            modifications,
            products: 5,
            conflict_density: 0.1,
            gains,
        },
    )
}
