//! Declarative scenario configs: JSON with a versioned schema. Parsing is
//! strict (unknown fields are rejected) and resolution fills every default in
//! place, so the config echoed into CSV headers is complete and can be fed
//! back unchanged.
//!
//! Units: beam dimensions in meters, axial positions in Rayleigh ranges,
//! radii in waist units, angles in radians.

use serde::{Deserialize, Serialize};

use qmask::mask;
use qmask::modes::{BeamGeometry, ModeIndex};
use qmask::numerics::QuadratureSpec;
use qmask::Complex64;

use crate::errors::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub beam: BeamConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<MaskConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<InputConfig>,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<ModePair>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub amplitudes: Vec<AmplitudeConfig>,
    /// Default output directory; `--out` overrides it and neither is echoed
    /// into the CSV body, so runs into different directories stay identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// Beam waist and/or Rayleigh range in meters. Giving one fills in the other;
/// giving both requires consistency with the wavelength.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rayleigh_range: Option<f64>,
    pub wavelength: f64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self { w0: None, rayleigh_range: None, wavelength: 795e-9 }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum MaskKind {
    Iris,
}

/// The mask: a hard circular iris at one axial position (or a sweep of
/// positions/radii, depending on the subcommand). The radius is given exactly
/// one way: directly in waist units, or as the fundamental-mode power
/// transmission, or as a sweep list.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MaskConfig {
    #[serde(rename = "type")]
    pub kind: MaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_over_w0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transmission_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_sweep: Option<Vec<f64>>,
    #[serde(rename = "z0_over_zR", default, skip_serializing_if = "Option::is_none")]
    pub z0_over_zr: Option<f64>,
    /// Axial sweep, in Rayleigh ranges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModePair {
    pub l: i32,
    pub p: u32,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeConfig {
    pub l: i32,
    pub p: u32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// One input mode and the state fed into it.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
pub struct InputConfig {
    pub l: i32,
    pub p: u32,
    #[serde(flatten)]
    pub state: StateConfig,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum StateConfig {
    Vacuum,
    Squeezed {
        r: f64,
        #[serde(default)]
        theta: f64,
        #[serde(default)]
        alpha_re: f64,
        #[serde(default)]
        alpha_im: f64,
    },
    Fock {
        n: u8,
    },
}

impl InputConfig {
    pub fn mode(&self) -> ModeIndex {
        ModeIndex::new(self.l, self.p)
    }

    /// Gaussian reading of the input; `fock` inputs are not Gaussian.
    pub fn squeeze_spec(&self) -> Result<qmask::gaussian::SqueezeSpec, CliError> {
        match self.state {
            StateConfig::Vacuum => Ok(qmask::gaussian::SqueezeSpec::vacuum()),
            StateConfig::Squeezed { r, theta, alpha_re, alpha_im } => {
                Ok(qmask::gaussian::SqueezeSpec { r, theta, alpha: Complex64::new(alpha_re, alpha_im) })
            }
            StateConfig::Fock { n } => Err(CliError::config(format!(
                "input on mode ({}, {}) is a Fock state |{n}>, which the Gaussian engine cannot represent",
                self.l, self.p
            ))),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    /// Signal basis: all modes with |l| <= basis_l_max and p <= basis_p_max.
    pub basis_l_max: u32,
    pub basis_p_max: u32,
    /// Total-photon cutoff of the Fock engine.
    pub cutoff: u32,
    /// Squeezed-vacuum expansion order (even); defaults to the cutoff.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u32>,
    pub seed: u64,
    /// Multistart count, start box half-width, and per-start iteration cap
    /// for the coincidence-probability minimization.
    pub starts: usize,
    pub box_half_width: f64,
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    pub max_subdivisions: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            basis_l_max: 0,
            basis_p_max: 1,
            cutoff: 24,
            n_max: None,
            seed: 0,
            starts: 24,
            box_half_width: 2.0,
            max_iterations: 2000,
            relative_tolerance: 1e-12,
            absolute_tolerance: 1e-13,
            max_subdivisions: 2000,
        }
    }
}

impl EngineConfig {
    pub fn basis(&self) -> Vec<ModeIndex> {
        mask::rectangular_basis(self.basis_l_max, self.basis_p_max)
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            relative_tolerance: self.relative_tolerance,
            absolute_tolerance: self.absolute_tolerance,
            max_subdivisions: self.max_subdivisions,
        }
    }

    pub fn ch_settings(&self) -> qmask::fock::ChSettings {
        qmask::fock::ChSettings {
            starts: self.starts,
            seed: self.seed,
            box_half_width: self.box_half_width,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn require_increasing(name: &str, list: &[f64]) -> Result<(), CliError> {
    if list.is_empty() {
        return Err(bad(format!("{name} must not be empty")));
    }
    if list.iter().any(|v| !v.is_finite()) {
        return Err(bad(format!("{name} contains a non-finite value")));
    }
    if list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| bad(format!("config does not match the schema: {e}")))
    }

    /// Validate the global invariants and fill every default in place. After
    /// this the config is self-contained: serializing it yields an equivalent
    /// config that resolves identically.
    pub fn resolve(&mut self) -> Result<BeamGeometry, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!(
                "schema_version {} is not supported (this binary speaks {SCHEMA_VERSION})",
                self.schema_version
            )));
        }

        let wl = self.beam.wavelength;
        if !(wl.is_finite() && wl > 0.0) {
            return Err(bad(format!("wavelength must be positive, got {wl}")));
        }
        let g = match (self.beam.w0, self.beam.rayleigh_range) {
            (Some(w0), _) if !(w0.is_finite() && w0 > 0.0) => {
                return Err(bad(format!("beam w0 must be positive, got {w0}")));
            }
            (_, Some(zr)) if !(zr.is_finite() && zr > 0.0) => {
                return Err(bad(format!("beam rayleigh_range must be positive, got {zr}")));
            }
            (Some(w0), Some(zr)) => {
                let implied = std::f64::consts::PI * w0 * w0 / wl;
                if (implied - zr).abs() > 1e-9 * zr {
                    return Err(bad(format!(
                        "beam over-determined: w0 = {w0} implies rayleigh_range = {implied}, config says {zr}"
                    )));
                }
                BeamGeometry::from_waist(w0, wl)
            }
            (Some(w0), None) => BeamGeometry::from_waist(w0, wl),
            (None, Some(zr)) => BeamGeometry::from_rayleigh(zr, wl),
            (None, None) => BeamGeometry::from_rayleigh(0.025, wl),
        };
        self.beam.w0 = Some(g.w0);
        self.beam.rayleigh_range = Some(g.rayleigh_range);

        if let Some(m) = &mut self.mask {
            let radius_fields = usize::from(m.radius_over_w0.is_some())
                + usize::from(m.transmission_fraction.is_some())
                + usize::from(m.radius_sweep.is_some());
            if radius_fields != 1 {
                return Err(bad(
                    "mask takes exactly one of radius_over_w0, transmission_fraction, or radius_sweep",
                ));
            }
            if let Some(r) = m.radius_over_w0 {
                if !(r.is_finite() && r > 0.0) {
                    return Err(bad(format!("mask radius_over_w0 must be positive, got {r}")));
                }
            }
            if let Some(f) = m.transmission_fraction {
                if !(f > 0.0 && f < 1.0) {
                    return Err(bad(format!(
                        "mask transmission_fraction must lie strictly inside (0, 1), got {f}"
                    )));
                }
            }
            if let Some(radii) = &m.radius_sweep {
                require_increasing("mask radius_sweep", radii)?;
                if radii[0] <= 0.0 {
                    return Err(bad("mask radius_sweep values must be positive"));
                }
            }
            if m.z0_over_zr.is_some() && m.sweep.is_some() {
                return Err(bad("mask has both z0_over_zR and an axial sweep; pick one"));
            }
            if let Some(z0s) = &m.sweep {
                require_increasing("mask sweep", z0s)?;
            } else if m.z0_over_zr.is_none() {
                m.z0_over_zr = Some(0.0);
            }
            if let Some(z0) = m.z0_over_zr {
                if !z0.is_finite() {
                    return Err(bad(format!("mask z0_over_zR must be finite, got {z0}")));
                }
            }
        }

        let e = &mut self.engine;
        if e.basis_p_max > 30 || e.basis_l_max > 30 {
            return Err(bad("engine basis bounds above 30 are not supported"));
        }
        if e.cutoff > 254 {
            return Err(bad(format!(
                "engine cutoff {} exceeds the occupation-number storage limit of 254",
                e.cutoff
            )));
        }
        let n_max = e.n_max.unwrap_or(e.cutoff + e.cutoff % 2);
        if n_max % 2 != 0 {
            return Err(bad(format!(
                "engine n_max must be even (squeezed vacuum holds photon pairs), got {n_max}"
            )));
        }
        if n_max > 254 {
            return Err(bad(format!("engine n_max {n_max} exceeds the storage limit of 254")));
        }
        e.n_max = Some(n_max);
        if e.starts == 0 {
            return Err(bad("engine starts must be at least 1"));
        }
        if e.max_iterations == 0 {
            return Err(bad("engine max_iterations must be at least 1"));
        }
        if !(e.box_half_width.is_finite() && e.box_half_width > 0.0) {
            return Err(bad(format!("engine box_half_width must be positive, got {}", e.box_half_width)));
        }
        if !(e.relative_tolerance > 0.0) || !(e.absolute_tolerance > 0.0) || e.max_subdivisions == 0 {
            return Err(bad("engine quadrature tolerances must be positive and max_subdivisions nonzero"));
        }

        for w in &self.modes {
            if w.l.unsigned_abs() > 30 || w.p > 30 {
                return Err(bad(format!("mode (l = {}, p = {}) is outside the supported range", w.l, w.p)));
            }
        }
        for i in 0..self.inputs.len() {
            for j in i + 1..self.inputs.len() {
                if self.inputs[i].mode() == self.inputs[j].mode() {
                    return Err(bad(format!("two inputs target the same mode {}", self.inputs[i].mode())));
                }
            }
        }
        if let Some(grid) = &self.grid {
            if let Some(hw) = grid.half_width {
                if !(hw.is_finite() && hw > 0.0) {
                    return Err(bad(format!("grid half_width must be positive, got {hw}")));
                }
            }
            if let Some(n) = grid.samples {
                if !(2..=4096).contains(&n) {
                    return Err(bad(format!("grid samples must lie in 2..=4096, got {n}")));
                }
            }
        }

        Ok(g)
    }

    fn mask_ref(&self) -> Result<&MaskConfig, CliError> {
        self.mask.as_ref().ok_or_else(|| bad("this subcommand needs a mask section"))
    }

    /// Fixed iris radius in meters.
    pub fn fixed_radius(&self, g: &BeamGeometry) -> Result<f64, CliError> {
        let m = self.mask_ref()?;
        if let Some(r) = m.radius_over_w0 {
            return Ok(r * g.w0);
        }
        if let Some(f) = m.transmission_fraction {
            return mask::radius_from_transmission(g, f).map_err(crate::errors::numerical);
        }
        Err(bad("this subcommand needs a fixed mask radius, not a radius_sweep"))
    }

    /// Swept iris radii in waist units.
    pub fn radius_sweep(&self) -> Result<&[f64], CliError> {
        self.mask_ref()?
            .radius_sweep
            .as_deref()
            .ok_or_else(|| bad("this subcommand needs a mask radius_sweep"))
    }

    /// Fixed axial position in meters.
    pub fn fixed_z0(&self, g: &BeamGeometry) -> Result<f64, CliError> {
        let m = self.mask_ref()?;
        if m.sweep.is_some() {
            return Err(bad("this subcommand needs a fixed mask z0_over_zR, not an axial sweep"));
        }
        Ok(m.z0_over_zr.unwrap_or(0.0) * g.rayleigh_range)
    }

    /// Swept axial positions in Rayleigh ranges.
    pub fn axial_sweep(&self) -> Result<&[f64], CliError> {
        self.mask_ref()?
            .sweep
            .as_deref()
            .ok_or_else(|| bad("this subcommand needs a mask axial sweep"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> ScenarioConfig {
        ScenarioConfig::parse(r#"{"schema_version": 1}"#).unwrap()
    }

    #[test]
    fn defaults_resolve_to_the_reference_beam() {
        let mut cfg = minimal();
        let g = cfg.resolve().unwrap();
        assert!((g.rayleigh_range - 0.025).abs() < 1e-15);
        assert!((g.w0 - 79.5e-6).abs() < 1e-6);
        assert_eq!(cfg.engine.n_max, Some(24));
    }

    #[test]
    fn resolved_config_reparses_and_resolves_identically() {
        let mut cfg = ScenarioConfig::parse(
            r#"{
                "schema_version": 1,
                "beam": {"w0": 100e-6},
                "mask": {"type": "iris", "radius_over_w0": 0.8339},
                "inputs": [{"l": 0, "p": 0, "state": "squeezed", "r": 1.0}],
                "engine": {"cutoff": 16}
            }"#,
        )
        .unwrap();
        let g = cfg.resolve().unwrap();

        let echoed = serde_json::to_string(&cfg).unwrap();
        let mut again = ScenarioConfig::parse(&echoed).unwrap();
        let g2 = again.resolve().unwrap();
        assert_eq!(g.w0, g2.w0);
        assert_eq!(g.rayleigh_range, g2.rayleigh_range);
        assert_eq!(serde_json::to_string(&again).unwrap(), echoed);
        assert_eq!(again.mask.unwrap().z0_over_zr, Some(0.0));
    }

    #[test]
    fn schema_violations_are_rejected() {
        for text in [
            r#"{"schema_version": 2}"#,
            r#"{"schema_version": 1, "unknown_field": 3}"#,
            r#"{"schema_version": 1, "beam": {"w0": 1e-4, "rayleigh_range": 0.025}}"#,
            r#"{"schema_version": 1, "mask": {"type": "iris"}}"#,
            r#"{"schema_version": 1, "mask": {"type": "iris", "radius_over_w0": 0.8, "transmission_fraction": 0.5}}"#,
            r#"{"schema_version": 1, "mask": {"type": "iris", "radius_over_w0": 0.8, "sweep": [0.0, 0.0]}}"#,
            r#"{"schema_version": 1, "mask": {"type": "slit", "radius_over_w0": 0.8}}"#,
            r#"{"schema_version": 1, "engine": {"n_max": 3}}"#,
            r#"{"schema_version": 1, "inputs": [{"l":0,"p":0,"state":"vacuum"},{"l":0,"p":0,"state":"vacuum"}]}"#,
        ] {
            let err = ScenarioConfig::parse(text).and_then(|mut c| c.resolve().map(|_| ()));
            assert!(err.is_err(), "accepted: {text}");
        }
    }

    #[test]
    fn transmission_fraction_resolves_to_the_matching_radius() {
        let mut cfg = ScenarioConfig::parse(
            r#"{"schema_version": 1, "mask": {"type": "iris", "transmission_fraction": 0.5}}"#,
        )
        .unwrap();
        let g = cfg.resolve().unwrap();
        let a = cfg.fixed_radius(&g).unwrap();
        // 1 - exp(-2 a^2 / w0^2) = 1/2
        assert!((1.0 - (-2.0 * a * a / (g.w0 * g.w0)).exp() - 0.5).abs() < 1e-12);
    }
}
