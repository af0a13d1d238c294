//! Run configuration: one TOML file plus `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::TruncationSpec;
use crate::dynamics::{IntegratorConfig, SuddenMode};
use crate::eigensolver::SolverConfig;
use crate::error::{Error, Result};
use crate::hamiltonian::ModelParams;
use crate::metrology::{ProtocolConfig, Readout, DEFAULT_GAMMA_MAX, DEFAULT_OMEGA_START};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub n_particles: usize,
    /// `gN/6`; ignored when `g` is set.
    pub gn6: f64,
    pub g: Option<f64>,
    pub anisotropy: f64,
    /// Defaults to `N + 4`.
    pub l_max: Option<u32>,
    pub n_ll_max: u32,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            n_particles: 12,
            gn6: 1.0,
            g: None,
            anisotropy: 0.03,
            l_max: None,
            n_ll_max: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageSection {
    pub omega_start: f64,
    pub delta_omega: f64,
    pub p01: f64,
    pub gamma_max: f64,
    pub tau: f64,
    /// Critical frequency; located from `omega_c_range` when absent.
    pub omega_c: Option<f64>,
    pub omega_c_range: [f64; 2],
    pub omega_ext_half_width: f64,
    pub omega_ext_points: usize,
    pub sudden: SuddenMode,
    /// Simulated switch-off duration; infinitely slow when absent.
    pub switch_off_duration: Option<f64>,
    /// Simulate the preparation ramp instead of diagonalising at `Ω_c`.
    pub simulate_preparation: bool,
}

impl Default for StageSection {
    fn default() -> Self {
        StageSection {
            omega_start: DEFAULT_OMEGA_START,
            delta_omega: 0.01,
            p01: 0.01,
            gamma_max: DEFAULT_GAMMA_MAX,
            tau: 10.0,
            omega_c: None,
            omega_c_range: [0.6, 0.9999],
            omega_ext_half_width: 0.005,
            omega_ext_points: 21,
            sudden: SuddenMode::Ramped,
            switch_off_duration: None,
            simulate_preparation: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    pub levels: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        SpectrumSection {
            omega_min: 0.6,
            omega_max: 0.99,
            points: 40,
            levels: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub dense_threshold: usize,
    pub max_basis: usize,
    pub max_matvecs: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverConfig::default();
        let i = IntegratorConfig::default();
        SolverSection {
            tol: s.tol,
            dense_threshold: s.dense_threshold,
            max_basis: s.max_basis,
            max_matvecs: s.max_matvecs,
            rtol: i.rtol,
            atol: i.atol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CacheSection {
    pub enable: bool,
    pub path: PathBuf,
}

impl Default for CacheSection {
    fn default() -> Self {
        CacheSection {
            enable: true,
            path: PathBuf::from("cache"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub stage: StageSection,
    pub spectrum: SpectrumSection,
    pub solver: SolverSection,
    pub output: OutputSection,
    pub cache: CacheSection,
}

fn config_err(msg: impl std::fmt::Display) -> Error {
    Error::Config(msg.to_string())
}

/// Parse a literal as TOML, falling back to a bare string.
fn parse_literal(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Apply `section.key=value` to a parsed document.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(config_err(format!("override key `{path}` is malformed")));
    }
    let mut table = doc;
    for k in &keys[..keys.len() - 1] {
        let entry = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| {
            config_err(format!("override key `{path}` crosses a non-table value"))
        })?;
    }
    table.insert(keys[keys.len() - 1].to_string(), parse_literal(raw.trim()));
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text.parse().map_err(config_err)?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(doc).try_into().map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| config_err(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        self.model_params().map_err(|e| config_err(e))?;
        let s = &self.stage;
        let positive = [
            ("stage.delta_omega", s.delta_omega),
            ("stage.gamma_max", s.gamma_max),
            ("solver.tol", self.solver.tol),
            ("solver.rtol", self.solver.rtol),
            ("solver.atol", self.solver.atol),
        ];
        for (k, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(config_err(format!("{k} = {v} must be positive")));
            }
        }
        if !(s.p01 > 0.0 && s.p01 < 1.0) {
            return Err(config_err(format!(
                "stage.p01 = {} must lie in (0, 1)",
                s.p01
            )));
        }
        if !(s.tau >= 0.0) {
            return Err(config_err(format!("stage.tau = {} must be >= 0", s.tau)));
        }
        if !(s.omega_c_range[0] < s.omega_c_range[1]) {
            return Err(config_err("stage.omega_c_range must be increasing"));
        }
        if let Some(w) = s.omega_c {
            if !(w > 0.0 && w < 1.0) {
                return Err(config_err(format!(
                    "stage.omega_c = {w} must lie in (0, 1)"
                )));
            }
        }
        if s.omega_ext_points < 3 {
            return Err(config_err("stage.omega_ext_points must be at least 3"));
        }
        if !(s.omega_ext_half_width > 0.0) {
            return Err(config_err("stage.omega_ext_half_width must be positive"));
        }
        if let Some(d) = s.switch_off_duration {
            if !(d > 0.0) {
                return Err(config_err("stage.switch_off_duration must be positive"));
            }
        }
        let sp = &self.spectrum;
        if !(sp.omega_min < sp.omega_max) || sp.points < 2 || sp.levels == 0 {
            return Err(config_err(
                "spectrum needs omega_min < omega_max, points >= 2, levels >= 1",
            ));
        }
        Ok(())
    }

    pub fn truncation(&self) -> Result<TruncationSpec> {
        let m = &self.model;
        TruncationSpec::new(
            m.n_particles,
            m.l_max.unwrap_or(m.n_particles as u32 + 4),
            m.n_ll_max,
            true,
        )
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let spec = self.truncation()?;
        match self.model.g {
            Some(g) => ModelParams::new(g, self.model.anisotropy, spec),
            None => ModelParams::from_gn6(self.model.gn6, self.model.anisotropy, spec),
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.solver.tol,
            dense_threshold: self.solver.dense_threshold,
            max_basis: self.solver.max_basis,
            max_matvecs: self.solver.max_matvecs,
        }
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            rtol: self.solver.rtol,
            atol: self.solver.atol,
            ..IntegratorConfig::default()
        }
    }

    pub fn protocol_config(&self, omega_c: f64) -> ProtocolConfig {
        let s = &self.stage;
        let mut p = ProtocolConfig::new(
            omega_c,
            s.tau,
            crate::metrology::symmetric_grid(s.omega_ext_half_width, s.omega_ext_points),
        );
        p.omega_start = s.omega_start;
        p.gamma_max = s.gamma_max;
        p.sudden = s.sudden;
        p.delta_omega = s.delta_omega;
        p.p01 = s.p01;
        p.readout = match s.switch_off_duration {
            Some(duration) => Readout::Simulated { duration },
            None => Readout::Adiabatic,
        };
        if s.simulate_preparation {
            p.preparation = crate::metrology::Preparation::Ramp;
        }
        p.integrator = self.integrator_config();
        p.solver = self.solver_config();
        p
    }

    /// SHA-256 over the canonical JSON form of the resolved configuration.
    pub fn hash_hex(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        let digest = Sha256::digest(&json);
        crate::hamiltonian::hex(&digest)
    }
}
