//! Scenario files: a single TOML document describing the potential, field,
//! window, detector, sweep and verification setup, with every length and
//! time expressed in units of the window timescale T. Artifact writers are
//! deterministic (fixed float formatting, atomic file replacement).

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{LocfieldError, Result};
use crate::kernel::FieldSpec;
use crate::oracle::EquivalenceScenario;
use crate::perturbation::{CouplingConfig, QuadControls};
use crate::smearing::{build_lambda_redshifted, compact_window, gaussian_window, Smearing, Window};
use crate::spectrum::{box_modes, quadratic_modes_at, solve_modes_fd, ModeBasis};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "LOCFIELD_OUT";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub potential: PotentialSection,
    pub field: FieldSection,
    pub window: WindowSection,
    pub detector: DetectorSection,
    #[serde(default)]
    pub sweep: SweepSection,
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub verify: Option<VerifySection>,
    #[serde(default)]
    pub quad: QuadSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum PotentialSection {
    Box {
        d: f64,
        n_max: usize,
        #[serde(default)]
        mass: f64,
    },
    Quadratic {
        ell: f64,
        n_max: usize,
        #[serde(default)]
        mass: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    Tabulated1d {
        grid: Vec<f64>,
        values: Vec<f64>,
        count: usize,
        #[serde(default)]
        mass: f64,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    #[serde(default)]
    pub mass: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum WindowSection {
    Gaussian { t_width: f64 },
    Compact { t0: f64, t1: f64 },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    /// index into the frequency-sorted mode list
    pub accessible: usize,
    #[serde(default = "one")]
    pub gamma: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// detector gaps to sweep; empty means spectra only
    #[serde(default)]
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub box_d: f64,
    pub field_cap: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSection {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub path_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path)?;
        let scenario: Scenario = toml::from_str(&text)
            .map_err(|e| LocfieldError::Scenario(format!("{}: {e}", path.display())))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(LocfieldError::Scenario("lambdas must be non-empty".into()));
        }
        if self.lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(LocfieldError::Scenario(
                "lambdas must be finite and non-negative".into(),
            ));
        }
        let mut sorted = self.sweep.gaps.clone();
        sorted.sort_by(f64::total_cmp);
        if self.sweep.gaps.iter().any(|g| !g.is_finite()) || sorted != self.sweep.gaps {
            return Err(LocfieldError::Scenario(
                "sweep gaps must be finite and sorted".into(),
            ));
        }
        Ok(())
    }

    pub fn build_basis(&self) -> Result<ModeBasis> {
        match &self.potential {
            PotentialSection::Box { d, n_max, mass } => box_modes(*d, *mass, *n_max),
            PotentialSection::Quadratic { ell, n_max, mass, center } => {
                quadratic_modes_at(*ell, *mass, *n_max, *center)
            }
            PotentialSection::Tabulated1d { grid, values, count, mass } => {
                solve_modes_fd(grid.clone(), values.clone(), *mass, *count)
            }
        }
    }

    pub fn build_window(&self) -> Result<Window> {
        match self.window {
            WindowSection::Gaussian { t_width } => gaussian_window(t_width),
            WindowSection::Compact { t0, t1 } => compact_window(t0, t1),
        }
    }

    pub fn build_field(&self) -> Result<FieldSpec> {
        FieldSpec::new(self.field.mass, self.field.epsilon)
    }

    pub fn build_smearing(&self) -> Result<Smearing> {
        let basis = self.build_basis()?;
        let mode = basis.modes.get(self.detector.accessible).ok_or_else(|| {
            LocfieldError::Scenario(format!(
                "accessible index {} out of range for {} modes",
                self.detector.accessible,
                basis.modes.len()
            ))
        })?;
        Ok(build_lambda_redshifted(self.build_window()?, mode, self.detector.gamma))
    }

    pub fn quad_controls(&self) -> QuadControls {
        let mut quad = QuadControls::default();
        if let Some(v) = self.quad.abs_tol {
            quad.abs_tol = v;
        }
        if let Some(v) = self.quad.rel_tol {
            quad.rel_tol = v;
        }
        if let Some(v) = self.quad.path_tol {
            quad.path_tol = v;
        }
        quad
    }

    pub fn coupling_config(&self, lambda: f64) -> Result<CouplingConfig> {
        Ok(CouplingConfig {
            lambda,
            smearing: self.build_smearing()?,
            field: self.build_field()?,
            quad: self.quad_controls(),
        })
    }

    pub fn equivalence_scenario(&self) -> Result<EquivalenceScenario> {
        let verify = self.verify.as_ref().ok_or_else(|| {
            LocfieldError::Scenario("scenario has no [verify] section".into())
        })?;
        let probe_basis = self.build_basis()?;
        let field_basis = box_modes(verify.box_d, self.field.mass, verify.field_cap)?;
        Ok(EquivalenceScenario {
            probe_basis,
            field_basis,
            box_d: verify.box_d,
            window: self.build_window()?,
            accessible: self.detector.accessible,
            steps: verify.steps,
        })
    }

    /// Characteristic confinement length, reported alongside sweep rows.
    pub fn length_scale(&self) -> f64 {
        match &self.potential {
            PotentialSection::Box { d, .. } => *d,
            PotentialSection::Quadratic { ell, .. } => *ell,
            PotentialSection::Tabulated1d { grid, .. } => grid[grid.len() - 1] - grid[0],
        }
    }

    /// Output directory: explicit override, then the scenario file, then the
    /// environment default, then the current directory.
    pub fn output_dir(&self, cli_override: Option<&str>) -> PathBuf {
        if let Some(dir) = cli_override {
            return PathBuf::from(dir);
        }
        if let Some(dir) = &self.output.dir {
            return PathBuf::from(dir);
        }
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir);
            }
        }
        PathBuf::from(".")
    }
}

/// Write a file atomically: write a sibling temporary, then rename over the
/// destination, so readers never observe a partial artifact.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact")
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Deterministic float formatting shared by all artifacts.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
