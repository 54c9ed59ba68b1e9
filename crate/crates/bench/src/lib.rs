//! Fixtures shared by the criterion benchmarks under `benches/`.

use qjc_core::coherent::YMode;
use qjc_core::povm::{AtlasConfig, PovmAtlas};
use qjc_core::{Model, ModelParams};

/// Model at the default parameter point with truncation `n_max`.
pub fn model(n_max: usize) -> Model {
    Model::new(ModelParams::new(1.0, 0.5, 0.2, n_max).expect("valid parameters")).expect("model builds")
}

pub fn atlas(model: &Model, y_mode: YMode) -> PovmAtlas {
    let config = AtlasConfig {
        y_mode,
        ..AtlasConfig::default()
    };
    PovmAtlas::build(model, &config).expect("atlas builds")
}
