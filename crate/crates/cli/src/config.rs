//! Run configuration: a flat JSON document, overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qjc_core::coherent::{Precision, YMode, DEFAULT_SERIES_DEPTH, PRECISION_ENV};
use qjc_core::operator::DEFAULT_RANK_TOL;
use qjc_core::povm::{AtlasConfig, DEFAULT_QUAD_ORDER, DEFAULT_Y_POINTS, INTERIOR_TOL};
use qjc_core::ModelParams;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub omega_f: f64,
    pub omega_s: f64,
    pub kappa: f64,
    pub n_max: usize,
    pub quad_order: usize,
    pub series_depth: usize,
    pub y_mode: YMode,
    pub y_points: usize,
    pub interior_tol: f64,
    pub rank_tol: f64,
    pub seed: u64,
    /// Resolved from the environment at load time; a value in the file is
    /// replaced when the environment variable is set.
    pub precision_bits: u32,
    /// Output path. Not echoed in reports, so moving the output does not
    /// change the report bytes.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega_f: 1.0,
            omega_s: 0.5,
            kappa: 0.2,
            n_max: 40,
            quad_order: DEFAULT_QUAD_ORDER,
            series_depth: DEFAULT_SERIES_DEPTH,
            y_mode: YMode::ExactMean,
            y_points: DEFAULT_Y_POINTS,
            interior_tol: INTERIOR_TOL,
            rank_tol: DEFAULT_RANK_TOL,
            seed: 0,
            precision_bits: Precision::default().bits(),
            out: None,
        }
    }
}

/// Flag values that replace file values when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub omega_f: Option<f64>,
    pub omega_s: Option<f64>,
    pub kappa: Option<f64>,
    pub n_max: Option<usize>,
    pub quad_order: Option<usize>,
    pub series_depth: Option<usize>,
    pub y_mode: Option<YMode>,
    pub y_points: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// File (or defaults), then flags, then the precision environment
    /// variable; the result is validated.
    pub fn resolve(file: Option<&Path>, o: &Overrides) -> Result<Self, CliError> {
        let mut c = match file {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        macro_rules! apply {
            ($($f:ident),*) => { $( if let Some(v) = o.$f.clone() { c.$f = v; } )* };
        }
        apply!(
            omega_f,
            omega_s,
            kappa,
            n_max,
            quad_order,
            series_depth,
            y_mode,
            y_points,
            seed
        );
        if o.out.is_some() {
            c.out = o.out.clone();
        }
        if std::env::var_os(PRECISION_ENV).is_some() {
            c.precision_bits = Precision::from_env()
                .map_err(|e| CliError::Config(e.to_string()))?
                .bits();
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        ModelParams::new(self.omega_f, self.omega_s, self.kappa, self.n_max)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Precision::new(self.precision_bits).map_err(|e| CliError::Config(e.to_string()))?;
        for (name, v) in [("interior_tol", self.interior_tol), ("rank_tol", self.rank_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.quad_order == 0 {
            return Err(CliError::Config("quad_order must be >= 1".into()));
        }
        if self.series_depth == 0 {
            return Err(CliError::Config("series_depth must be >= 1".into()));
        }
        if self.y_mode == YMode::FiniteGrid && self.y_points < 2 {
            return Err(CliError::Config(format!(
                "y_points must be >= 2 in grid mode, got {}",
                self.y_points
            )));
        }
        Ok(())
    }

    pub fn params(&self) -> ModelParams {
        ModelParams::new(self.omega_f, self.omega_s, self.kappa, self.n_max).expect("validated at resolve time")
    }

    pub fn atlas_config(&self) -> AtlasConfig {
        AtlasConfig {
            quad_order: self.quad_order,
            series_depth: self.series_depth,
            y_mode: self.y_mode,
            y_points: self.y_points,
            precision: Precision::new(self.precision_bits).expect("validated at resolve time"),
        }
    }
}
