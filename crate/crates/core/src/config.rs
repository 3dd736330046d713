//! Pipeline configuration, loaded from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frostman::ETA_STRICT;
use crate::generators::{DomainSpec, MIN_CHANNEL_CELLS};
use crate::space::{PoincareParams, WeightFn};
use crate::trace::TestFunction;

/// `"auto-deepest"` or explicit coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Z0Choice {
    Auto(AutoDeepest),
    Coords([f64; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutoDeepest {
    #[serde(rename = "auto-deepest")]
    AutoDeepest,
}

impl Default for Z0Choice {
    fn default() -> Self {
        Z0Choice::Auto(AutoDeepest::AutoDeepest)
    }
}

/// Sample grids. Scales are geometric with ratio 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadiiGrid {
    /// Boundary windows `w` sampled for the lower content assumption.
    pub lower_windows: usize,
    /// Number of scales `ρ` per window, halving from `lower_max`.
    pub lower_scales: usize,
    /// Largest `ρ`, as a fraction of `d_Ω(z0)`.
    pub lower_max: f64,
    /// Trace averages use radii `trace_min_cells · h · 2^j`, `j < trace_scales`.
    pub trace_scales: usize,
    pub trace_min_cells: f64,
    /// Extra random boundary centers in the growth-bound check.
    pub frostman_extra_centers: usize,
    /// Maximal-function radii in proof mode, in cells.
    pub maximal_cells: Vec<f64>,
}

impl Default for RadiiGrid {
    fn default() -> Self {
        Self {
            lower_windows: 8,
            lower_scales: 3,
            lower_max: 0.5,
            trace_scales: 4,
            trace_min_cells: 2.0,
            frostman_extra_centers: 50,
            maximal_cells: vec![2.0, 4.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub domain: DomainSpec,
    /// Expected cell size; checked against the generator when present.
    pub h: Option<f64>,
    pub weight: WeightFn,
    /// Codimension of the lower content assumption.
    pub t: f64,
    pub p: f64,
    /// Auxiliary exponent of the visibility argument, `t < q < p`.
    pub q: f64,
    /// Trace exponent, `p < q_hat < q_trace`.
    pub q_trace: f64,
    pub q_hat: f64,
    /// John constant used for `Ω_{z0}(c)` and the trace estimates.
    pub c: f64,
    pub eta: f64,
    pub depth: usize,
    pub strict_mode: bool,
    pub z0: Z0Choice,
    pub radii: RadiiGrid,
    pub test_functions: Vec<TestFunction>,
    /// Also evaluate the maximal-function gradient of the trace proof.
    pub proof_mode: bool,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::Disk { cells: 70 },
            h: None,
            weight: WeightFn::default(),
            t: 1.0,
            p: 1.5,
            q: 1.25,
            q_trace: 3.0,
            q_hat: 2.0,
            c: 2.0,
            eta: 0.125,
            depth: 2,
            strict_mode: false,
            z0: Z0Choice::default(),
            radii: RadiiGrid::default(),
            test_functions: TestFunction::suite(),
            proof_mode: false,
            seed: 7,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Cell size a generator will use, when it can be known without building.
fn generator_h(spec: &DomainSpec) -> Option<f64> {
    match spec {
        DomainSpec::Disk { cells }
        | DomainSpec::Annulus { cells, .. }
        | DomainSpec::SlitDisk { cells }
        | DomainSpec::Comb { cells, .. }
        | DomainSpec::PuncturedDisk { cells }
        | DomainSpec::KochFlakeInterior { cells, .. } => Some(1.0 / *cells as f64),
        DomainSpec::MaskFile { h, .. } => Some(*h),
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(vec![e.to_string()]))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(vec![e.to_string()]))
    }

    /// Load by extension: `.json` is JSON, anything else TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn poincare(&self) -> PoincareParams {
        PoincareParams::new(self.p, self.q, self.q_hat)
    }

    /// Every violated constraint, in a fixed order.
    pub fn problems(&self) -> Vec<String> {
        let mut errs = self.poincare().check_visibility(self.t);
        errs.extend(PoincareParams::new(self.p, self.q_trace, self.q_hat).check_trace(self.t));
        if !(self.c > 1.0) {
            errs.push(format!("John constant c must exceed 1, got {}", self.c));
        }
        if !(self.eta > 0.0 && self.eta < 0.5) {
            errs.push(format!("eta must lie in (0, 1/2), got {}", self.eta));
        }
        if self.strict_mode && self.eta >= ETA_STRICT {
            errs.push(format!(
                "strict mode requires eta < 1/168, got {}",
                self.eta
            ));
        }
        match &self.domain {
            DomainSpec::Disk { cells }
            | DomainSpec::SlitDisk { cells }
            | DomainSpec::PuncturedDisk { cells }
            | DomainSpec::Annulus { cells, .. }
            | DomainSpec::KochFlakeInterior { cells, .. }
                if *cells < 2 =>
            {
                errs.push(format!(
                    "domain needs at least 2 cells per unit, got {cells}"
                ));
            }
            DomainSpec::Annulus { inner, .. } if !(*inner > 0.0 && *inner < 1.0) => {
                errs.push(format!("annulus inner radius {inner} not in (0, 1)"));
            }
            DomainSpec::Comb { cells, teeth } => {
                if *teeth < 2 {
                    errs.push(format!("comb needs at least 2 teeth, got {teeth}"));
                } else {
                    let n = *teeth as f64;
                    let width = *cells as f64 / (n * (n - 1.0));
                    if width < MIN_CHANNEL_CELLS {
                        errs.push(format!(
                            "teeth-unresolved: channel width {width:.2} cells is below {MIN_CHANNEL_CELLS}"
                        ));
                    }
                }
            }
            DomainSpec::MaskFile { path, h } => {
                if !(*h > 0.0) {
                    errs.push(format!("mask cell size must be positive, got {h}"));
                }
                if !path.exists() {
                    errs.push(format!("mask file {} does not exist", path.display()));
                }
            }
            _ => {}
        }
        if let (Some(h), Some(gh)) = (self.h, generator_h(&self.domain)) {
            if (h - gh).abs() > 1e-9 * gh {
                errs.push(format!(
                    "declared h = {h} differs from the generator cell size {gh}"
                ));
            }
        }
        let r = &self.radii;
        if r.lower_windows == 0 || r.lower_scales == 0 {
            errs.push(
                "the lower content assumption needs at least one window and one scale".into(),
            );
        }
        if !(r.lower_max > 0.0 && r.lower_max <= 1.0) {
            errs.push(format!("lower_max must lie in (0, 1], got {}", r.lower_max));
        }
        if r.trace_scales == 0 {
            errs.push("trace needs at least one radius".into());
        }
        if !(r.trace_min_cells >= 2.0) {
            errs.push(format!(
                "trace radii start at two cells or more, got {}",
                r.trace_min_cells
            ));
        }
        if r.maximal_cells.iter().any(|&x| !(x > 0.0)) {
            errs.push("maximal-function radii must be positive".into());
        }
        if self.depth == 0 {
            errs.push("generation depth must be at least 1".into());
        }
        if let Z0Choice::Coords(p) = self.z0 {
            if !p.iter().all(|x| x.is_finite()) {
                errs.push("z0 coordinates must be finite".into());
            }
        }
        for f in &self.test_functions {
            match f {
                TestFunction::Coordinate { axis } if *axis > 1 => {
                    errs.push(format!("coordinate axis {axis} out of range"))
                }
                TestFunction::DistancePower { beta } if !(*beta > 0.0) => {
                    errs.push(format!("d_omega exponent must be positive, got {beta}"))
                }
                TestFunction::Potential { q, plate } if !(*q > 1.0 && *plate > 0.0) => errs.push(
                    format!("potential needs q > 1 and plate > 0, got q={q}, plate={plate}"),
                ),
                _ => {}
            }
        }
        errs
    }

    /// All problems at once; then, in strict mode, the resolution guard:
    /// the first child radius `η r` with `r <= 1` must span two cells.
    pub fn validate(&self) -> Result<()> {
        let errs = self.problems();
        if !errs.is_empty() {
            return Err(Error::InvalidConfig(errs));
        }
        if self.strict_mode {
            if let Some(h) = generator_h(&self.domain) {
                if self.eta < 2.0 * h {
                    return Err(Error::EtaUnresolvable(format!(
                        "eta = {} gives child balls below two cells (h = {h})",
                        self.eta
                    )));
                }
            }
        }
        Ok(())
    }
}
