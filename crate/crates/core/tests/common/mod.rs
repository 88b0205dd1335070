#![allow(dead_code)]

use num_complex::Complex64;
use vpcollapse::initializer::SlitSpec;
use vpcollapse::model::{DetectorModel, Epochs, ExperimentGeometry, TimeGrid};

pub fn epochs() -> Epochs {
    Epochs::new(0.0, 1.0, 2.0, 4.0).unwrap()
}

/// 64 atoms over [-2, 2] on a screen 10 units away: fringe period 0.5.
pub fn screen64() -> ExperimentGeometry {
    ExperimentGeometry::uniform_screen(64, -2.0, 2.0, 10.0, 1.0, 0.2, epochs()).unwrap()
}

pub fn slits() -> SlitSpec {
    SlitSpec {
        wavelength: 0.05,
        slit_separation: 1.0,
        slit_width: 0.2,
        screen_distance: 10.0,
    }
}

pub fn small_screen(count: usize, half_width: f64) -> (ExperimentGeometry, DetectorModel) {
    let g = ExperimentGeometry::uniform_screen(count, -half_width, half_width, 10.0, 1.0, 0.2, epochs()).unwrap();
    let det = DetectorModel::position(&g);
    (g, det)
}

pub fn grid(intervals: usize) -> TimeGrid {
    TimeGrid::for_epochs(&epochs(), intervals).unwrap()
}

pub fn real(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

use vpcollapse::ensemble::RunConfig;

/// The 64-atom layout as a run configuration; `edit` patches the JSON
/// before parsing.
pub fn run_config(edit: impl FnOnce(&mut serde_json::Value)) -> RunConfig {
    let mut v = serde_json::json!({
        "schema_version": 1,
        "geometry": {
            "screen_distance": 10.0,
            "slit_separation": 1.0,
            "slit_width": 0.2,
            "epochs": { "t_i": 0.0, "t_a": 1.0, "t_b": 2.0, "t_f": 4.0 },
            "atoms": { "uniform": { "count": 64, "y_min": -2.0, "y_max": 2.0 } }
        },
        "slits": { "wavelength": 0.05 },
        "detector": { "kind": "position" },
        "grid": { "intervals": 64 },
        "optimizer": { "mode": "born_conditioned", "preconditioner_shift": 10.0 },
        "ensemble_size": 10,
        "base_seed": 1,
        "workers": 1,
        "output_dir": "unused"
    });
    edit(&mut v);
    RunConfig::from_json_str(&v.to_string()).unwrap()
}
