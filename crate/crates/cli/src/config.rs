//! Experiment configuration (TOML).

use std::fs;
use std::path::{Path, PathBuf};

use pucp_core::field::io::{read_field, AnyField};
use pucp_core::field::{DiskGrid, RealField, VectorField2};
use pucp_core::solver::{
    manufactured_instance, BoundaryData, ManufacturedKind, PLaplaceProblem, Variant,
};
use pucp_core::ucp::{Branch, CalibratedConstants, Provenance};
use pucp_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub equation: Variant,
    pub p: f64,
    #[serde(default)]
    pub q: Option<f64>,
    pub branch: Branch,
    pub grid: GridSpec,
    pub coefficient: CoefficientSpec,
    /// Required unless the coefficient fixture brings its own data.
    #[serde(default)]
    pub boundary: Option<BoundarySpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    /// Rescale the solution to meet the chain normalization.
    #[serde(default)]
    pub rescale: bool,
    pub calibration: CalibrationTable,
    #[serde(default)]
    pub negative_control: Option<NegativeControl>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_radii() -> Vec<f64> {
    (1..=7).map(|j| 0.5_f64.powi(j)).collect()
}

fn default_output() -> PathBuf {
    PathBuf::from("pucp-out")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub domain_radius: f64,
    pub embed_side: f64,
}

/// Drift `W` or weight `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    /// `W = 0`.
    None,
    /// The drifted manufactured fixture, with its own boundary data and
    /// regularization.
    Drifted,
    /// `A = 1 + amplitude sin(kx x) cos(ky y)`.
    SinusoidalWeight { amplitude: f64, kx: f64, ky: f64 },
    ConstantWeight { value: f64 },
    /// A `.pucp` field: real for a weight, complex `Wx + i Wy` for a drift.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    /// `a x + b y + c`
    Linear {
        a: f64,
        b: f64,
        #[serde(default)]
        c: f64,
    },
    /// `Re z^degree`
    Monomial { degree: u32 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
    /// Regularization; defaults to the grid spacing.
    #[serde(default)]
    pub epsilon: Option<f64>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
            epsilon: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaggedValue {
    pub value: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTable {
    pub three_circle_c: TaggedValue,
    pub e: TaggedValue,
    pub e_prime: TaggedValue,
    pub trudinger_c: TaggedValue,
    pub conjugate_c: TaggedValue,
}

impl CalibrationTable {
    pub fn constants(&self) -> CalibratedConstants {
        CalibratedConstants {
            three_circle_c: self.three_circle_c.value,
            e: self.e.value,
            e_prime: self.e_prime.value,
            trudinger_c: self.trudinger_c.value,
            conjugate_c: self.conjugate_c.value,
        }
    }

    pub fn from_constants(c: &CalibratedConstants) -> Self {
        let tag = |value| TaggedValue {
            value,
            provenance: Provenance::Calibrated,
        };
        Self {
            three_circle_c: tag(c.three_circle_c),
            e: tag(c.e),
            e_prime: tag(c.e_prime),
            trudinger_c: tag(c.trudinger_c),
            conjugate_c: tag(c.conjugate_c),
        }
    }

    fn entries(&self) -> [(&'static str, TaggedValue); 5] {
        [
            ("three_circle_c", self.three_circle_c),
            ("e", self.e),
            ("e_prime", self.e_prime),
            ("trudinger_c", self.trudinger_c),
            ("conjugate_c", self.conjugate_c),
        ]
    }
}

/// Multiplies `ω` by `omega_factor` before tracing, leaving `f` alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegativeControl {
    pub omega_factor: f64,
}

/// Command-line overrides, applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub branch: Option<Branch>,
    pub n: Option<usize>,
    pub tol: Option<f64>,
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, applies overrides and validates. Relative paths inside the
    /// config, the output directory included, resolve against its directory.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| schema(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| schema(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        if let CoefficientSpec::File { path } = &mut self.coefficient {
            fix(path);
        }
        if let Some(BoundarySpec::File { path }) = &mut self.boundary {
            fix(path);
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if let Some(b) = o.branch {
            self.branch = b;
        }
        if let Some(n) = o.n {
            self.grid.n = n;
        }
        if let Some(t) = o.tol {
            self.solver.tol = t;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.grid()?;
        self.branch
            .check_exponents(self.p, self.q)
            .map_err(|e| schema(e.to_string()))?;
        let drift_branch = matches!(self.branch, Branch::DriftLq | Branch::DriftL2);
        if drift_branch != (self.equation == Variant::Drift) {
            return Err(schema(format!(
                "branch {} does not apply to the {:?} equation",
                self.branch.name(),
                self.equation
            )));
        }
        if !drift_branch && self.q.is_some() {
            return Err(schema("q is only meaningful for drift branches"));
        }
        match (&self.coefficient, self.equation) {
            (CoefficientSpec::None | CoefficientSpec::Drifted, Variant::Drift)
            | (CoefficientSpec::SinusoidalWeight { .. } | CoefficientSpec::ConstantWeight { .. }, Variant::Weighted)
            | (CoefficientSpec::File { .. }, _) => {}
            (c, v) => return Err(schema(format!("coefficient {c:?} does not fit the {v:?} equation"))),
        }
        match &self.coefficient {
            CoefficientSpec::Drifted if self.boundary.is_some() => {
                return Err(schema("the drifted fixture carries its own boundary data"));
            }
            CoefficientSpec::Drifted => {}
            _ if self.boundary.is_none() => return Err(schema("boundary data is required")),
            CoefficientSpec::SinusoidalWeight { amplitude, kx, ky } => {
                if !(amplitude.abs() < 1.0 && kx.is_finite() && ky.is_finite()) {
                    return Err(schema("sinusoidal weight needs |amplitude| < 1"));
                }
            }
            CoefficientSpec::ConstantWeight { value } if !(*value > 0.0 && value.is_finite()) => {
                return Err(schema("constant weight must be positive"));
            }
            _ => {}
        }
        if let Some(BoundarySpec::Monomial { degree: 0 }) = self.boundary {
            return Err(schema("monomial degree must be positive"));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(schema("solver tolerance and iteration cap must be positive"));
        }
        if self.solver.epsilon.is_some_and(|e| !(e > 0.0)) {
            return Err(schema("solver epsilon must be positive"));
        }
        if self.radii.is_empty() || self.radii.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(schema("radii must be a nonempty list in (0, 1]"));
        }
        for (name, c) in self.calibration.entries() {
            if !(c.value > 0.0 && c.value.is_finite()) {
                return Err(schema(format!("calibration constant {name} must be positive")));
            }
        }
        if !(self.calibration.e_prime.value > 1.0) {
            return Err(schema("calibration constant e_prime must exceed 1"));
        }
        if let Some(nc) = self.negative_control {
            if !nc.omega_factor.is_finite() {
                return Err(schema("omega_factor must be finite"));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<DiskGrid, CliError> {
        DiskGrid::new(self.grid.n, self.grid.domain_radius, self.grid.embed_side)
            .map_err(|e| schema(e.to_string()))
    }

    /// Builds the boundary-value problem described by the config.
    pub fn problem(&self) -> Result<PLaplaceProblem, CliError> {
        let grid = self.grid()?;
        let c = grid.center();
        if let CoefficientSpec::Drifted = self.coefficient {
            return Ok(manufactured_instance(ManufacturedKind::Drifted, self.p, grid)?.problem);
        }
        let boundary = match self.boundary.as_ref().expect("validated") {
            &BoundarySpec::Linear { a, b, c: c0 } => BoundaryData::analytic(move |z: Complex64| {
                let d = z - c;
                a * d.re + b * d.im + c0
            }),
            &BoundarySpec::Monomial { degree } => {
                BoundaryData::analytic(move |z: Complex64| (z - c).powu(degree).re)
            }
            BoundarySpec::File { path } => BoundaryData::Field(read_real_input(path, &grid)?),
        };
        let eps = self.solver.epsilon;
        let problem = match (&self.coefficient, self.equation) {
            (CoefficientSpec::None, _) => {
                PLaplaceProblem::drift(grid, self.p, VectorField2::zeros(grid), boundary, eps)
            }
            (&CoefficientSpec::SinusoidalWeight { amplitude, kx, ky }, _) => {
                let a = RealField::from_fn_everywhere(grid, move |z| {
                    let d = z - c;
                    1.0 + amplitude * (kx * d.re).sin() * (ky * d.im).cos()
                });
                PLaplaceProblem::weighted(grid, self.p, a, boundary, eps)
            }
            (&CoefficientSpec::ConstantWeight { value }, _) => {
                PLaplaceProblem::weighted(grid, self.p, RealField::from_fn_everywhere(grid, |_| value), boundary, eps)
            }
            (CoefficientSpec::File { path }, Variant::Drift) => {
                let w = match read_field(path).map_err(CliError::input)? {
                    AnyField::Complex(w) => w,
                    AnyField::Real(_) => return Err(schema("a drift file must hold a complex field")),
                };
                if !w.grid().same_layout(&grid) {
                    return Err(schema("drift file grid differs from the config grid"));
                }
                PLaplaceProblem::drift(grid, self.p, VectorField2::from_components(&w.re(), &w.im())?, boundary, eps)
            }
            (CoefficientSpec::File { path }, Variant::Weighted) => {
                PLaplaceProblem::weighted(grid, self.p, read_real_input(path, &grid)?, boundary, eps)
            }
            (CoefficientSpec::Drifted, _) => unreachable!(),
        };
        problem.map_err(|e| schema(e.to_string()))
    }
}

fn read_real_input(path: &Path, grid: &DiskGrid) -> Result<RealField, CliError> {
    let f = pucp_core::field::io::read_real(path).map_err(CliError::input)?;
    if !f.grid().same_layout(grid) {
        return Err(schema(format!("{} is not on the config grid", path.display())));
    }
    Ok(f)
}
