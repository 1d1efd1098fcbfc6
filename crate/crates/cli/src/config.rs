use serde::{Deserialize, Serialize};

use csl_core::arithmetic::IrrationalSpec;
use csl_core::circle_maps::{CircleMap, ConjugacySpec, MapKind, MapSpec};
use csl_core::localization::StudyParams;
use csl_core::operators::Model;
use csl_core::potentials::{Potential, PotentialSpec};
use csl_core::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub kind: MapKind,
    #[serde(default)]
    pub conjugacy: ConjugacySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnergyGrid {
    List(Vec<f64>),
    Range(EnergyRange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl EnergyGrid {
    /// Cell midpoints for a range, so no energy lands on the range ends.
    pub fn values(&self) -> Vec<f64> {
        match self {
            EnergyGrid::List(v) => v.clone(),
            EnergyGrid::Range(r) => (0..r.count)
                .map(|j| r.lo + (r.hi - r.lo) * (j as f64 + 0.5) / r.count as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub curve_slack: f64,
    pub gap_slack: f64,
    pub oracle_relative: f64,
    pub unimodular: f64,
    pub free_lyapunov: f64,
    pub lyapunov_sigmas: f64,
    pub thouless_gap: f64,
    pub ids_extra: f64,
    pub poisson: f64,
    pub deviation_slack: f64,
    pub min_fit_quality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            curve_slack: 1e-8,
            gap_slack: 1e-10,
            oracle_relative: 1e-9,
            unimodular: 1e-10,
            free_lyapunov: 1e-4,
            lyapunov_sigmas: 3.0,
            thouless_gap: 0.05,
            ids_extra: 1e-3,
            poisson: 1e-7,
            deviation_slack: 1e-6,
            min_fit_quality: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSettings {
    /// Uniform phases on top of the per-interval samples.
    pub grid: usize,
    /// Base phases for the horizontal comparison.
    pub horizontal_bases: usize,
    /// ε of the sinusoidal conjugacy used as the second map model.
    pub conjugated_epsilon: f64,
}

impl Default for CurveSettings {
    fn default() -> Self {
        CurveSettings {
            grid: 256,
            horizontal_bases: 16,
            conjugated_epsilon: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdtSettings {
    pub energy: Option<f64>,
    pub delta: Option<f64>,
    pub c0: Option<f64>,
    pub cells_per_q: usize,
    pub levels: Vec<usize>,
}

impl Default for LdtSettings {
    fn default() -> Self {
        LdtSettings {
            energy: None,
            delta: None,
            c0: None,
            cells_per_q: 16,
            levels: vec![7, 8, 9, 10],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    pub cf_depth: usize,
    pub gap_levels: Vec<usize>,
    pub oracle_boxes: usize,
    pub unimodular_max_n: usize,
    pub lyapunov_n: usize,
    pub lyapunov_energies: usize,
    pub ids_n: usize,
    pub ids_free_energies: usize,
    pub ids_pairs: usize,
    pub ids_lipschitz_n: usize,
    pub thouless_n: usize,
    pub thouless_energies: usize,
    pub thouless_bins: usize,
    pub window_count_limit: u64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            cf_depth: 20,
            gap_levels: (2..=10).collect(),
            oracle_boxes: 200,
            unimodular_max_n: 1000,
            lyapunov_n: 100_000,
            lyapunov_energies: 20,
            ids_n: 4096,
            ids_free_energies: 41,
            ids_pairs: 50,
            ids_lipschitz_n: 2048,
            thouless_n: 4096,
            thouless_energies: 10,
            thouless_bins: 4096,
            window_count_limit: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub alpha: IrrationalSpec,
    pub map: MapConfig,
    pub potential: PotentialSpec,
    pub lambda: f64,
    /// Continued-fraction levels `k`.
    pub scales: Vec<usize>,
    pub sizes: Vec<usize>,
    pub energies: EnergyGrid,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub curves: CurveSettings,
    #[serde(default)]
    pub ldt: LdtSettings,
    #[serde(default)]
    pub localization: StudyParams,
    #[serde(default)]
    pub verify: VerifySettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            alpha: IrrationalSpec::golden(),
            map: MapConfig {
                kind: MapKind::PureRotation,
                conjugacy: ConjugacySpec::Identity,
            },
            potential: PotentialSpec::Sawtooth,
            lambda: 10.0,
            scales: vec![8, 9, 10],
            sizes: vec![4096],
            energies: EnergyGrid::Range(EnergyRange {
                lo: -2.5,
                hi: 12.5,
                count: 10,
            }),
            samples: 32,
            seed: 42,
            output: None,
            tolerances: Tolerances::default(),
            curves: CurveSettings::default(),
            ldt: LdtSettings::default(),
            localization: StudyParams::default(),
            verify: VerifySettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::InvalidInput(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidInput("lambda must be finite and ≥ 0".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidInput("samples must be positive".into()));
        }
        if let EnergyGrid::Range(r) = &self.energies {
            if r.count == 0 || !(r.lo < r.hi) {
                return Err(Error::InvalidInput("energy range needs lo < hi and count ≥ 1".into()));
            }
        }
        Ok(())
    }

    pub fn map_spec(&self) -> MapSpec {
        MapSpec {
            kind: self.map.kind,
            alpha: self.alpha.clone(),
            conjugacy: self.map.conjugacy.clone(),
        }
    }

    pub fn circle_map(&self) -> Result<CircleMap> {
        CircleMap::new(&self.map_spec())
    }

    pub fn model(&self) -> Result<Model> {
        self.model_with(self.lambda)
    }

    pub fn model_with(&self, lambda: f64) -> Result<Model> {
        Model::new(lambda, Potential::new(self.potential.clone())?, self.circle_map()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&ExperimentConfig::default().to_json()).unwrap();
        v["colour"] = serde_json::json!("blue");
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&ExperimentConfig::default().to_json()).unwrap();
        v["verify"]["extra"] = serde_json::json!(1);
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn version_is_checked() {
        let mut cfg = ExperimentConfig::default();
        cfg.version = 7;
        assert!(ExperimentConfig::from_json(&cfg.to_json()).is_err());
    }

    #[test]
    fn energy_grids() {
        let g = EnergyGrid::Range(EnergyRange { lo: 0.0, hi: 1.0, count: 2 });
        assert_eq!(g.values(), vec![0.25, 0.75]);
        let g: EnergyGrid = serde_json::from_str("[1.0, 2.0]").unwrap();
        assert_eq!(g.values(), vec![1.0, 2.0]);
    }
}
