//! Model parameters, experimental presets and derived constants.
//!
//! Every rate is measured in units of the atomic recoil frequency.  The
//! membrane coupling is stored pre-multiplied by the square root of the atom
//! number (`Lambda = sqrt(N) * lambda`), and the contact interaction as the
//! product `g * N`; these are the only combinations the mean-field equations
//! contain, so storing them removes a redundant knob from sweeps.  The bare
//! atom count only enters the absolute normalization of momentum
//! distributions.

use crate::error::{Error, Result};

/// All model constants in recoil units.  Immutable by convention: sweep
/// workers copy it freely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Recoil frequency; fixed to 1 by convention but kept explicit.
    pub omega_r: f64,
    /// Optical lattice depth `V`.
    pub lattice_depth: f64,
    /// Membrane mode frequency `Omega_m`.
    pub omega_m: f64,
    /// Membrane damping rate `gamma`.
    pub gamma: f64,
    /// Scaled contact interaction `g * N`.
    pub g_n: f64,
    /// Scaled atom-membrane coupling `Lambda = sqrt(N) * lambda`.
    pub lambda: f64,
    /// Atom count; only used to normalize momentum distributions.
    pub n_atoms: f64,
}

impl ModelParams {
    /// Caption parameter set of the main figures: `V = 200`, `Omega_m = 100`,
    /// `gamma = 20`, `g N = 0` (all in recoil units).
    pub fn paper_default() -> Self {
        ModelParams {
            omega_r: 1.0,
            lattice_depth: 200.0,
            omega_m: 100.0,
            gamma: 20.0,
            g_n: 0.0,
            lambda: 0.0,
            n_atoms: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.omega_r > 0.0, "omega_R must be > 0"),
            (self.lattice_depth > 0.0, "V must be > 0"),
            (self.omega_m > 0.0, "Omega_m must be > 0"),
            (self.gamma >= 0.0, "gamma must be >= 0"),
            (self.g_n >= 0.0, "gN must be >= 0"),
            (self.lambda >= 0.0, "Lambda must be >= 0"),
            (self.n_atoms >= 1.0, "N_atoms must be >= 1"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidInput(msg.into()));
            }
        }
        if !self.all_finite() {
            return Err(Error::InvalidInput("non-finite model parameter".into()));
        }
        Ok(())
    }

    fn all_finite(&self) -> bool {
        [
            self.omega_r,
            self.lattice_depth,
            self.omega_m,
            self.gamma,
            self.g_n,
            self.lambda,
            self.n_atoms,
        ]
        .iter()
        .all(|x| x.is_finite())
    }

    /// Effective membrane frequency `Omega_m + gamma^2 / Omega_m` that
    /// governs the static response of the damped mode.
    pub fn effective_omega_m(&self) -> f64 {
        self.omega_m + self.gamma * self.gamma / self.omega_m
    }

    /// Lattice-pinning coupling scale `Lambda_{c,V} = sqrt(Omega_m_eff * V) / 2`.
    ///
    /// Symmetry breaking is only possible above this value; the true critical
    /// coupling lies slightly higher (see [`crate::variational::critical_coupling`]).
    pub fn lambda_cv(&self) -> f64 {
        (self.effective_omega_m() * self.lattice_depth).sqrt() / 2.0
    }

    /// Copy with a different membrane coupling; convenient in sweeps.
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_lattice_depth(mut self, v: f64) -> Self {
        self.lattice_depth = v;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_g_n(mut self, g_n: f64) -> Self {
        self.g_n = g_n;
        self
    }
}

/// Raw laboratory rates of one experimental platform, all in Hz (the common
/// `2 pi` prefactors cancel in every ratio).  Dividing by the recoil
/// frequency converts to [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalPreset {
    pub name: &'static str,
    pub membrane_frequency_hz: f64,
    pub membrane_damping_hz: f64,
    pub laser_frequency_hz: f64,
    pub recoil_frequency_hz: f64,
    pub atom_count: f64,
    /// One-dimensional interaction strength range, Hz times Bohr radii.
    pub interaction_1d_hz_bohr: (f64, f64),
}

impl PhysicalPreset {
    /// Membrane-in-the-middle setup of the Zhong et al. apparatus:
    /// a 263.8 kHz membrane mode with 24.4 mHz damping coupled to a cloud of
    /// 2e6 Rb-87 atoms at a recoil frequency of 3.8 kHz.
    pub fn zhong2017() -> Self {
        PhysicalPreset {
            name: "zhong2017",
            membrane_frequency_hz: 263.8e3,
            membrane_damping_hz: 24.4e-3,
            laser_frequency_hz: 384.0e12,
            recoil_frequency_hz: 3.8e3,
            atom_count: 2.0e6,
            interaction_1d_hz_bohr: (11.4e3, 16.6e3),
        }
    }

    /// Convert to recoil units.  The lattice depth and coupling are free
    /// experimental knobs (set by laser power and cavity finesse), so they
    /// default to the figure-caption lattice `V = 200` and `Lambda = 0`; the
    /// interaction is left at zero because the preset only pins a range for
    /// it.
    pub fn to_model_params(&self) -> ModelParams {
        let w = self.recoil_frequency_hz;
        ModelParams {
            omega_r: 1.0,
            lattice_depth: 200.0,
            omega_m: self.membrane_frequency_hz / w,
            gamma: self.membrane_damping_hz / w,
            g_n: 0.0,
            lambda: 0.0,
            n_atoms: self.atom_count,
        }
    }

    /// Rescale a rate given in recoil units back to Hz.
    pub fn rate_to_hz(&self, rate_recoil: f64) -> f64 {
        rate_recoil * self.recoil_frequency_hz
    }
}

pub const KNOWN_PRESETS: [&str; 2] = ["paper-default", "zhong2017"];

/// Look up a named parameter set.
pub fn from_preset(name: &str) -> Result<ModelParams> {
    match name {
        "paper-default" => Ok(ModelParams::paper_default()),
        "zhong2017" => Ok(PhysicalPreset::zhong2017().to_model_params()),
        _ => Err(Error::UnknownPreset {
            name: name.into(),
            known: KNOWN_PRESETS.join(", "),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn paper_default_matches_figure_captions() {
        let p = from_preset("paper-default").unwrap();
        assert_eq!(p.lattice_depth, 200.0);
        assert_eq!(p.omega_m, 100.0);
        assert_eq!(p.gamma, 20.0);
        assert_eq!(p.g_n, 0.0);
        p.validate().unwrap();
    }

    #[test]
    fn zhong2017_rates_in_recoil_units() {
        let p = from_preset("zhong2017").unwrap();
        assert_relative_eq!(p.omega_m, 263.8 / 3.8, max_relative = 1e-12);
        assert_relative_eq!(p.gamma, 24.4e-3 / 3.8e3, max_relative = 1e-12);
        p.validate().unwrap();
    }

    #[test]
    fn unknown_preset_lists_known_names() {
        let err = from_preset("nope").unwrap_err().to_string();
        assert!(err.contains("paper-default"));
        assert!(err.contains("zhong2017"));
    }

    #[test]
    fn effective_frequency_examples() {
        let p = ModelParams::paper_default();
        assert_relative_eq!(p.effective_omega_m(), 104.0, max_relative = 1e-14);

        let p0 = p.with_gamma(0.0);
        assert_eq!(p0.effective_omega_m(), 100.0);

        let mut z = from_preset("zhong2017").unwrap();
        z.omega_m = 69.42;
        z.gamma = 6.42e-6;
        assert_relative_eq!(z.effective_omega_m(), 69.42, max_relative = 1e-10);
    }

    #[test]
    fn effective_frequency_monotone_in_gamma() {
        let p = ModelParams::paper_default();
        let mut prev = p.with_gamma(0.0).effective_omega_m();
        for i in 1..50 {
            let cur = p.with_gamma(i as f64).effective_omega_m();
            assert!(cur > prev);
            prev = cur;
        }
    }

    #[test]
    fn lambda_cv_examples() {
        let p = ModelParams::paper_default();
        assert_relative_eq!(p.lambda_cv(), (104.0f64 * 200.0).sqrt() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(p.lambda_cv(), 72.11102550927978, max_relative = 1e-12);

        let shallow = p.with_lattice_depth(20.0);
        assert_relative_eq!(shallow.lambda_cv(), (104.0f64 * 20.0).sqrt() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(shallow.lambda_cv(), 22.803508501982758, max_relative = 1e-12);

        let vanishing = p.with_lattice_depth(1e-300);
        assert!(vanishing.lambda_cv() < 1e-140);
    }

    #[test]
    fn lambda_cv_scales_as_sqrt_v() {
        // At fixed effective frequency the ratio Lambda_cv / sqrt(V) is a constant.
        let p = ModelParams::paper_default();
        let base = p.lambda_cv() / p.lattice_depth.sqrt();
        for v in [10.0, 20.0, 50.0, 120.0, 400.0, 1000.0] {
            let r = p.with_lattice_depth(v).lambda_cv() / v.sqrt();
            assert_relative_eq!(r, base, max_relative = 1e-13);
        }
    }

    #[test]
    fn physical_preset_round_trip() {
        let preset = PhysicalPreset::zhong2017();
        let p = preset.to_model_params();
        assert_relative_eq!(
            preset.rate_to_hz(p.omega_m),
            preset.membrane_frequency_hz,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            preset.rate_to_hz(p.gamma),
            preset.membrane_damping_hz,
            max_relative = 1e-12
        );
    }
}
