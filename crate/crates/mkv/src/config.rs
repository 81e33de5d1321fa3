//! TOML run configuration with CLI-override precedence.
//!
//! Precedence: command-line flag > config file > built-in default. Defaults
//! reproduce the two-band heat-map run: double-well preset, `σ = 0.2`,
//! `γ = 10⁻²`, `s = 0.75`, `Δt = 10⁻²`, `t_max = 3·10⁴`, `J = 128`,
//! `u₀ = (1/π) sin²x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{InitialCondition, SimConfig};
use crate::model::{ModelSpec, Preset, TrigSeries};
use crate::observables::ModeDetection;

#[derive(Clone, Debug, Deserialize, Serialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub simulation: SimSection,
    pub analysis: AnalysisSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// `double_well` or `four_well`; ignored when custom harmonics are given.
    pub preset: String,
    /// Confining potential `V` as `[harmonic, cos, sin]` rows; overrides the preset.
    pub v_harmonics: Option<Vec<(u32, f64, f64)>>,
    /// Interaction potential `F`, same layout.
    pub f_harmonics: Option<Vec<(u32, f64, f64)>>,
    pub sigma: f64,
    pub gamma: f64,
    pub s: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            preset: "double_well".into(),
            v_harmonics: None,
            f_harmonics: None,
            sigma: 0.2,
            gamma: 1e-2,
            s: 0.75,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub j: usize,
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
    pub snapshot_stride: usize,
    /// `sin_squared`, `uniform`, or a `[[k, re, im], ...]` coefficient list.
    pub initial: InitialSpec,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            j: 128,
            dt: 1e-2,
            t_max: 3e4,
            seed: 42,
            snapshot_stride: 100,
            initial: InitialSpec::Name("sin_squared".into()),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Name(String),
    Coeffs(Vec<(i64, f64, f64)>),
}

impl InitialSpec {
    pub fn build(&self) -> Result<InitialCondition> {
        match self {
            InitialSpec::Name(n) => match n.as_str() {
                "sin_squared" => Ok(InitialCondition::SinSquared),
                "uniform" => Ok(InitialCondition::Uniform),
                other => Err(Error::Config(format!(
                    "simulation.initial: unknown preset '{other}' \
                     (expected sin_squared, uniform, or a coefficient list)"
                ))),
            },
            InitialSpec::Coeffs(list) => Ok(InitialCondition::Coeffs(list.clone())),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Fraction of the series discarded before mode detection.
    pub burn_in: f64,
    pub peak_threshold: f64,
    pub occupancy_threshold: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            burn_in: 0.2,
            peak_threshold: 0.05,
            occupancy_threshold: 0.02,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    /// Spatial columns of the heat map raster.
    pub heatmap_cols: usize,
    /// Snapshot rows are thinned to at most this many heat-map rows.
    pub max_heatmap_rows: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "out".into(),
            heatmap_cols: 256,
            max_heatmap_rows: 2000,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Stable fingerprint of the effective configuration, embedded in every
    /// output file so artifacts can be traced to their settings.
    /// Hash of the physics-relevant sections only: two runs that differ just
    /// in where they write their artifacts produce identical data files.
    pub fn hash(&self) -> u64 {
        let mut canonical = self.clone();
        canonical.output = OutputSection::default();
        let text = toml::to_string(&canonical).expect("config serializes");
        fnv1a64(text.as_bytes())
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let m = &self.model;
        match (&m.v_harmonics, &m.f_harmonics) {
            (None, None) => {
                let preset: Preset = m.preset.parse()?;
                ModelSpec::preset(preset, m.sigma, m.gamma, m.s, self.simulation.j)
            }
            (v, f) => {
                let preset: Preset = m.preset.parse()?;
                let (pv, pf) = preset.potentials();
                let v = v.as_ref().map(|h| TrigSeries::new(h.clone())).unwrap_or(pv);
                let f = f.as_ref().map(|h| TrigSeries::new(h.clone())).unwrap_or(pf);
                ModelSpec::new(v, f, m.sigma, m.gamma, m.s, self.simulation.j)
            }
        }
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let s = &self.simulation;
        let config = SimConfig {
            dt: s.dt,
            t_max: s.t_max,
            j: s.j,
            seed: s.seed,
            snapshot_stride: s.snapshot_stride,
            initial: s.initial.build()?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn mode_detection(&self) -> Result<ModeDetection> {
        let a = &self.analysis;
        if !(0.0..1.0).contains(&a.burn_in) {
            return Err(Error::Config(format!(
                "analysis.burn_in must be in [0, 1), got {}",
                a.burn_in
            )));
        }
        let mut params = ModeDetection::default();
        params.peak_threshold = a.peak_threshold;
        params.occupancy_threshold = a.occupancy_threshold;
        Ok(params)
    }
}

/// 64-bit FNV-1a, enough to fingerprint configs in file comments.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_run() {
        let c = RunConfig::default();
        assert_eq!(c.model.sigma, 0.2);
        assert_eq!(c.model.gamma, 1e-2);
        assert_eq!(c.model.s, 0.75);
        assert_eq!(c.simulation.j, 128);
        assert_eq!(c.simulation.dt, 1e-2);
        assert_eq!(c.simulation.t_max, 3e4);
        assert!(c.model_spec().is_ok());
        assert!(c.sim_config().is_ok());
    }

    #[test]
    fn toml_round_trip_and_overrides() {
        let text = r#"
            [model]
            preset = "four_well"
            sigma = 0.6

            [simulation]
            j = 64
            t_max = 100.0
            initial = "uniform"
        "#;
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.model.preset, "four_well");
        assert_eq!(c.model.sigma, 0.6);
        assert_eq!(c.model.gamma, 1e-2); // default survives partial sections
        assert_eq!(c.simulation.j, 64);
        assert!(matches!(c.sim_config().unwrap().initial, InitialCondition::Uniform));
    }

    #[test]
    fn unknown_keys_are_named_in_the_error() {
        let err = RunConfig::from_toml("[model]\nsigmaa = 0.3\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("sigmaa"), "error should name the bad key: {msg}");
    }

    #[test]
    fn bad_initial_preset_rejected() {
        let c = RunConfig::from_toml("[simulation]\ninitial = \"gaussian\"\n").unwrap();
        assert!(c.sim_config().is_err());
    }

    #[test]
    fn coefficient_initial_condition_parses() {
        let c = RunConfig::from_toml(
            "[simulation]\ninitial = [[0, 0.3989, 0.0], [1, 0.1, -0.05]]\n",
        )
        .unwrap();
        match c.sim_config().unwrap().initial {
            InitialCondition::Coeffs(v) => assert_eq!(v.len(), 2),
            other => panic!("expected coefficient list, got {other:?}"),
        }
    }

    #[test]
    fn custom_harmonics_override_preset() {
        let c = RunConfig::from_toml(
            "[model]\nv_harmonics = [[1, 1.0, 0.0]]\nf_harmonics = [[1, -0.5, 0.0]]\n",
        )
        .unwrap();
        let spec = c.model_spec().unwrap();
        assert_eq!(spec.potential_v().max_harmonic(), 1);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.model.sigma = 0.21;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn fnv_known_vector() {
        // FNV-1a test vector: empty input hashes to the offset basis.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }
}
