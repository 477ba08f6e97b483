//! Plain-text configuration files.
//!
//! The format is line-oriented `key = value` pairs grouped into `[model]`,
//! `[solver]` and `[sweep]` sections.  `#` starts a comment, blank lines are
//! ignored, and every numeric value is parsed as a decimal floating-point
//! number.  The `MEMBEC_CONFIG` environment variable can point at a default
//! config path.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::params::{self, ModelParams};

/// Environment variable consulted when no explicit config path is given.
pub const CONFIG_ENV_VAR: &str = "MEMBEC_CONFIG";

pub type Section = BTreeMap<String, String>;

/// A parsed config file: raw sections plus typed accessors.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    sections: BTreeMap<String, Section>,
}

/// Numerical settings shared by the solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    /// Grid points of the periodic single-site grid.
    pub grid_points: usize,
    /// Imaginary-time step.
    pub dtau: f64,
    /// Iteration cap for imaginary-time propagation.
    pub imag_max_steps: usize,
    /// Stop when the energy change per imaginary-time step falls below this.
    pub imag_energy_tol: f64,
    /// Optional extra stopping rule on the per-step wavefunction change.
    pub imag_psi_tol: Option<f64>,
    /// Initial displacement of the imaginary-time seed Gaussian.
    pub seed_offset: f64,
    /// Real-time split-step size; `None` chooses `1e-4 / omega_R`.
    pub gpe_dt: Option<f64>,
    /// Variational leapfrog step; `None` chooses `1e-3 / Omega_m`.
    pub var_dt: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            grid_points: 256,
            dtau: 1e-4,
            imag_max_steps: 500_000,
            imag_energy_tol: 1e-12,
            imag_psi_tol: None,
            seed_offset: 0.01,
            gpe_dt: None,
            var_dt: None,
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| cfg_err(lineno, "unterminated section header"))?
                    .trim()
                    .to_string();
                if name.is_empty() {
                    return Err(cfg_err(lineno, "empty section name"));
                }
                sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(lineno, "expected `key = value`"))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(cfg_err(lineno, "empty key"));
            }
            let section = current
                .as_ref()
                .ok_or_else(|| cfg_err(lineno, "key outside of any [section]"))?;
            sections.get_mut(section).unwrap().insert(key, value);
        }
        Ok(ConfigFile { sections })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Path from the `MEMBEC_CONFIG` environment variable, if set.
    pub fn env_path() -> Option<PathBuf> {
        std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.get(name)
    }

    /// Model parameters from the `[model]` section.  A `preset` key selects
    /// the starting point (default `paper-default`); any other key overrides
    /// one field.
    pub fn model_params(&self) -> Result<ModelParams> {
        self.apply_model_params(ModelParams::paper_default())
    }

    /// Like [`Self::model_params`] but layered over a caller-supplied base
    /// (a `preset` key in the file still replaces the base).
    pub fn apply_model_params(&self, base: ModelParams) -> Result<ModelParams> {
        let empty = Section::new();
        let section = self.section("model").unwrap_or(&empty);
        let mut p = match section.get("preset") {
            Some(name) => params::from_preset(name)?,
            None => base,
        };
        for (key, value) in section {
            match key.as_str() {
                "preset" => {}
                "omega_R" => p.omega_r = parse_float(key, value)?,
                "V" => p.lattice_depth = parse_float(key, value)?,
                "Omega_m" => p.omega_m = parse_float(key, value)?,
                "gamma" => p.gamma = parse_float(key, value)?,
                "gN" => p.g_n = parse_float(key, value)?,
                "Lambda" => p.lambda = parse_float(key, value)?,
                "N_atoms" => p.n_atoms = parse_float(key, value)?,
                other => {
                    return Err(Error::Config(format!("unknown [model] key `{other}`")));
                }
            }
        }
        p.validate()
            .map_err(|e| Error::Config(format!("invalid [model] section: {e}")))?;
        Ok(p)
    }

    /// Solver settings from the `[solver]` section, with defaults for any
    /// missing key.
    pub fn solver_settings(&self) -> Result<SolverSettings> {
        let mut s = SolverSettings::default();
        let empty = Section::new();
        let section = self.section("solver").unwrap_or(&empty);
        for (key, value) in section {
            match key.as_str() {
                "grid_points" => s.grid_points = parse_count(key, value)?,
                "dtau" => s.dtau = parse_float(key, value)?,
                "imag_max_steps" => s.imag_max_steps = parse_count(key, value)?,
                "imag_energy_tol" => s.imag_energy_tol = parse_float(key, value)?,
                "imag_psi_tol" => s.imag_psi_tol = Some(parse_float(key, value)?),
                "seed_offset" => s.seed_offset = parse_float(key, value)?,
                "gpe_dt" => s.gpe_dt = Some(parse_float(key, value)?),
                "var_dt" => s.var_dt = Some(parse_float(key, value)?),
                other => {
                    return Err(Error::Config(format!("unknown [solver] key `{other}`")));
                }
            }
        }
        Ok(s)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn cfg_err(lineno: usize, msg: &str) -> Error {
    Error::Config(format!("line {}: {msg}", lineno + 1))
}

/// All numbers in config files are decimal floating point.
pub fn parse_float(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("key `{key}`: `{value}` is not a number")))
}

/// Counts are floats constrained to non-negative integers.
pub fn parse_count(key: &str, value: &str) -> Result<usize> {
    let x = parse_float(key, value)?;
    if x < 0.0 || x.fract() != 0.0 || x > usize::MAX as f64 {
        return Err(Error::Config(format!(
            "key `{key}`: `{value}` is not a non-negative integer"
        )));
    }
    Ok(x as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
# run configuration
[model]
preset = paper-default
Lambda = 50.0      # coupling knob
gN = 2.5

[solver]
grid_points = 128
dtau = 2e-4
imag_psi_tol = 1e-13

[sweep]
axis = Lambda
start = 0
stop = 150
count = 61
";

    #[test]
    fn parses_sections_and_overrides() {
        let cfg = ConfigFile::parse(SAMPLE).unwrap();
        let p = cfg.model_params().unwrap();
        assert_eq!(p.lattice_depth, 200.0);
        assert_eq!(p.lambda, 50.0);
        assert_eq!(p.g_n, 2.5);
        let s = cfg.solver_settings().unwrap();
        assert_eq!(s.grid_points, 128);
        assert_eq!(s.dtau, 2e-4);
        assert_eq!(s.imag_psi_tol, Some(1e-13));
        assert!(cfg.section("sweep").is_some());
    }

    #[test]
    fn defaults_without_sections() {
        let cfg = ConfigFile::parse("").unwrap();
        let p = cfg.model_params().unwrap();
        assert_eq!(p, ModelParams::paper_default());
        let s = cfg.solver_settings().unwrap();
        assert_eq!(s.grid_points, 256);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(ConfigFile::parse("[model]\njust words\n").is_err());
        assert!(ConfigFile::parse("key = 1\n").is_err(), "key outside section");
        assert!(ConfigFile::parse("[model\n").is_err());
        let cfg = ConfigFile::parse("[model]\nV = abc\n").unwrap();
        assert!(cfg.model_params().is_err());
        let cfg = ConfigFile::parse("[model]\nwhatever = 1\n").unwrap();
        assert!(cfg.model_params().is_err());
        let cfg = ConfigFile::parse("[solver]\ngrid_points = 1.5\n").unwrap();
        assert!(cfg.solver_settings().is_err());
    }

    #[test]
    fn unknown_preset_propagates() {
        let cfg = ConfigFile::parse("[model]\npreset = bogus\n").unwrap();
        let err = cfg.model_params().unwrap_err().to_string();
        assert!(err.contains("bogus"));
        assert!(err.contains("paper-default"));
    }
}
