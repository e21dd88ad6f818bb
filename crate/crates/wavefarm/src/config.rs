//! Run configuration: presets, JSON config files, and dotted-path
//! `--set key=value` overrides. Unknown keys are rejected.

use crate::error::{Error, Result};
use crate::farm::YearAggregation;
use crate::hydro::TrainingRanges;
use crate::neural::TrainConfig;
use crate::optim::{Bounds, EvalConfig, OptimConfig};
use crate::surrogate::BundleTrainConfig;
use crate::waves::{BandwidthPolicy, ClimateBox, FrequencyGrid};
use serde::{Deserialize, Serialize};

pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Small data and budgets; minutes of wall time on a desktop.
    Desk,
    /// Published protocol scale: full sample counts, epochs, and bounds.
    Paper,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::Config(format!("unknown preset {other:?} (desk|paper)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub n_w: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum BandwidthSection {
    Silverman,
    Fixed { hs: f64, tp: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClimateSection {
    pub n_gq: usize,
    pub n_yr: usize,
    /// Synthetic scatter samples per year when no wave file is supplied.
    pub samples_per_year: usize,
    /// Measured (year, Hs, Tp) scatter file; synthetic samples when null.
    pub waves_path: Option<String>,
    pub hs_lo: f64,
    pub hs_hi: f64,
    pub tp_lo: f64,
    pub tp_hi: f64,
    pub bandwidth: BandwidthSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub r_lo: f64,
    pub r_hi: f64,
    pub d_lo: f64,
    pub d_hi: f64,
    pub dist_max: f64,
    pub aspect_lo: f64,
    pub aspect_hi: f64,
    pub n_s1: usize,
    pub n_s2: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub hidden_1body: usize,
    pub hidden_2body: usize,
    pub hidden_scale: usize,
    pub spike_tau: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub lr0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub n_wec: usize,
    pub budget: usize,
    /// 15 + n_wec when null.
    pub pop_size: Option<usize>,
    pub diff_weight: f64,
    pub crossover: f64,
    pub penalty_weight: f64,
    pub year_agg: YearAggregation,
    pub r_lo: f64,
    pub r_hi: f64,
    pub d_lo: f64,
    pub d_hi: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    /// Farm box half-width; derived from n_wec when null.
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub preset: Preset,
    pub seed: u64,
    /// Worker cap; 0 keeps the library default.
    pub threads: usize,
    pub rho: f64,
    pub g: f64,
    pub depth: f64,
    pub grid: GridSection,
    pub climate: ClimateSection,
    pub data: DataSection,
    pub train: TrainSection,
    pub optimize: OptimizeSection,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Desk => Self {
                format_version: CONFIG_FORMAT_VERSION,
                preset,
                seed: 1,
                threads: 0,
                rho: 1025.0,
                g: 9.81,
                depth: 50.0,
                grid: GridSection {
                    omega_lo: 0.1,
                    omega_hi: 7.0,
                    n_w: 25,
                },
                climate: ClimateSection {
                    n_gq: 6,
                    n_yr: 30,
                    samples_per_year: 40,
                    waves_path: None,
                    hs_lo: 0.25,
                    hs_hi: 8.0,
                    tp_lo: 2.0,
                    tp_hi: 20.0,
                    bandwidth: BandwidthSection::Silverman,
                },
                data: DataSection {
                    r_lo: 0.8,
                    r_hi: 1.2,
                    d_lo: 4.0,
                    d_hi: 8.0,
                    dist_max: 18.0,
                    aspect_lo: 0.1,
                    aspect_hi: 10.0,
                    n_s1: 60,
                    n_s2: 200,
                },
                train: TrainSection {
                    hidden_1body: 32,
                    hidden_2body: 64,
                    hidden_scale: 16,
                    spike_tau: 5.0,
                    max_epochs: 6000,
                    patience: 800,
                    lr0: 0.05,
                },
                optimize: OptimizeSection {
                    n_wec: 3,
                    budget: 300,
                    pop_size: None,
                    diff_weight: 0.7,
                    crossover: 0.9,
                    penalty_weight: 1.0e6,
                    year_agg: YearAggregation::Mean,
                    r_lo: 0.8,
                    r_hi: 1.2,
                    d_lo: 4.0,
                    d_hi: 8.0,
                    k_min: -1.0e6,
                    k_max: 1.0e6,
                    b_min: 0.0,
                    b_max: 1.0e6,
                    half_width: None,
                },
            },
            Preset::Paper => {
                let mut cfg = Self::preset(Preset::Desk);
                cfg.preset = Preset::Paper;
                cfg.grid.n_w = 50;
                cfg.climate.n_gq = 20;
                cfg.climate.samples_per_year = 200;
                cfg.data = DataSection {
                    r_lo: 0.5,
                    r_hi: 20.0,
                    d_lo: 0.5,
                    d_hi: 20.0,
                    dist_max: 1000.0,
                    aspect_lo: 0.1,
                    aspect_hi: 10.0,
                    n_s1: 225,
                    n_s2: 1000,
                };
                cfg.train.max_epochs = 30_000;
                cfg.train.patience = 10_000;
                cfg.optimize = OptimizeSection {
                    n_wec: 3,
                    budget: 300,
                    pop_size: None,
                    diff_weight: 0.7,
                    crossover: 0.9,
                    penalty_weight: 1.0e6,
                    year_agg: YearAggregation::Mean,
                    r_lo: 0.5,
                    r_hi: 10.0,
                    d_lo: 0.5,
                    d_hi: 10.0,
                    k_min: -3.0e8,
                    k_max: 3.0e8,
                    b_min: 0.0,
                    b_max: 3.0e8,
                    half_width: None,
                };
                cfg
            }
        }
    }

    /// Layer a partial JSON document over this configuration, then apply
    /// dotted-path overrides like `optimize.budget=100`.
    pub fn merged(&self, file_json: Option<&str>, sets: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(self)?;
        if let Some(text) = file_json {
            let overlay: serde_json::Value =
                serde_json::from_str(text).map_err(|e| Error::Config(format!("config JSON: {e}")))?;
            merge_values(&mut value, overlay);
        }
        for set in sets {
            let (path, raw) = set
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got {set:?}")))?;
            let leaf: serde_json::Value = serde_json::from_str(raw)
                .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            set_path(&mut value, path, leaf)?;
        }
        let cfg: RunConfig = serde_json::from_value(value)
            .map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
        if cfg.format_version != CONFIG_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported config format_version {}",
                cfg.format_version
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.n_w < 2 || self.grid.omega_lo <= 0.0 || self.grid.omega_hi <= self.grid.omega_lo
        {
            return Err(Error::Config("invalid frequency grid section".into()));
        }
        if self.climate.n_gq == 0 || self.climate.n_yr == 0 {
            return Err(Error::Config("climate needs n_gq >= 1 and n_yr >= 1".into()));
        }
        if self.optimize.n_wec == 0 {
            return Err(Error::Config("optimize.n_wec must be >= 1".into()));
        }
        self.bounds().validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn frequency_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::even(self.grid.omega_lo, self.grid.omega_hi, self.grid.n_w)
    }

    pub fn training_ranges(&self) -> TrainingRanges {
        TrainingRanges {
            r: (self.data.r_lo, self.data.r_hi),
            draft: (self.data.d_lo, self.data.d_hi),
            dist_max: self.data.dist_max,
            aspect: (self.data.aspect_lo, self.data.aspect_hi),
            depth: self.depth,
            g: self.g,
            rho: self.rho,
        }
    }

    pub fn climate_box(&self) -> ClimateBox {
        ClimateBox {
            hs_lo: self.climate.hs_lo,
            hs_hi: self.climate.hs_hi,
            tp_lo: self.climate.tp_lo,
            tp_hi: self.climate.tp_hi,
        }
    }

    pub fn bandwidth_policy(&self) -> BandwidthPolicy {
        match self.climate.bandwidth {
            BandwidthSection::Silverman => BandwidthPolicy::Silverman,
            BandwidthSection::Fixed { hs, tp } => BandwidthPolicy::Fixed(hs, tp),
        }
    }

    pub fn bundle_train_config(&self) -> BundleTrainConfig {
        BundleTrainConfig {
            hidden_1body: self.train.hidden_1body,
            hidden_2body: self.train.hidden_2body,
            hidden_scale: self.train.hidden_scale,
            spike_tau: self.train.spike_tau,
            net: TrainConfig {
                max_epochs: self.train.max_epochs,
                patience: self.train.patience,
                lr0: self.train.lr0,
                split: (0.7, 0.15, 0.15),
                seed: self.seed,
            },
        }
    }

    pub fn bounds(&self) -> Bounds {
        let o = &self.optimize;
        Bounds {
            r: (o.r_lo, o.r_hi),
            draft: (o.d_lo, o.d_hi),
            stiffness: (o.k_min, o.k_max),
            damping: (o.b_min, o.b_max),
            half_width: o
                .half_width
                .unwrap_or_else(|| 0.5 * (2.0 * o.n_wec as f64 * 1.0e4).sqrt()),
        }
    }

    pub fn optim_config(&self) -> OptimConfig {
        OptimConfig {
            budget: self.optimize.budget,
            seed: self.seed,
            pop_size: self.optimize.pop_size,
            diff_weight: self.optimize.diff_weight,
            crossover: self.optimize.crossover,
            eval: EvalConfig {
                eff: Default::default(),
                year_agg: self.optimize.year_agg,
                penalty_weight: self.optimize.penalty_weight,
                residual_tol: 1.0e-9,
            },
        }
    }
}

fn merge_values(base: &mut serde_json::Value, overlay: serde_json::Value) {
    match (base, overlay) {
        (serde_json::Value::Object(base_map), serde_json::Value::Object(overlay_map)) => {
            for (k, v) in overlay_map {
                match base_map.get_mut(&k) {
                    Some(slot) => merge_values(slot, v),
                    None => {
                        // unknown key: keep it so strict deserialization names it
                        base_map.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(value: &mut serde_json::Value, path: &str, leaf: serde_json::Value) -> Result<()> {
    let mut cursor = value;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = cursor
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("--set path {path:?}: {part:?} is not a section")))?;
        if i + 1 == parts.len() {
            map.insert(part.to_string(), leaf);
            return Ok(());
        }
        cursor = map
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    Err(Error::Config(format!("--set path {path:?} is empty")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        RunConfig::preset(Preset::Desk).validate().unwrap();
        let paper = RunConfig::preset(Preset::Paper);
        paper.validate().unwrap();
        assert_eq!(paper.data.n_s1, 225);
        assert_eq!(paper.data.n_s2, 1000);
        assert_eq!(paper.grid.n_w, 50);
        assert_eq!(paper.climate.n_gq, 20);
        assert_eq!(paper.climate.n_yr, 30);
        assert_eq!(paper.train.max_epochs, 30_000);
        assert_eq!(paper.train.patience, 10_000);
        assert_eq!(paper.optimize.k_max, 3.0e8);
        // farm box half-width for 3 devices: 0.5 sqrt(6e4) ~ 122.47 m
        let hw = paper.bounds().half_width;
        assert!((hw - 0.5 * (6.0e4f64).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn merge_and_overrides() {
        let base = RunConfig::preset(Preset::Desk);
        let file = r#"{"optimize": {"budget": 120}, "seed": 42}"#;
        let cfg = base
            .merged(Some(file), &["grid.n_w=31".into(), "optimize.n_wec=5".into()])
            .unwrap();
        assert_eq!(cfg.optimize.budget, 120);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.grid.n_w, 31);
        assert_eq!(cfg.optimize.n_wec, 5);
        // untouched fields keep preset values
        assert_eq!(cfg.data.n_s1, 60);
    }

    #[test]
    fn unknown_keys_rejected() {
        let base = RunConfig::preset(Preset::Desk);
        let err = base.merged(Some(r#"{"optimise": {"budget": 1}}"#), &[]).unwrap_err();
        assert!(err.to_string().contains("optimise"), "{err}");
        let err = base
            .merged(Some(r#"{"optimize": {"budgets": 1}}"#), &[])
            .unwrap_err();
        assert!(err.to_string().contains("budgets"), "{err}");
    }

    #[test]
    fn version_mismatch_rejected() {
        let base = RunConfig::preset(Preset::Desk);
        let err = base.merged(Some(r#"{"format_version": 99}"#), &[]).unwrap_err();
        assert!(err.to_string().contains("format_version"), "{err}");
    }

    #[test]
    fn bad_set_syntax() {
        let base = RunConfig::preset(Preset::Desk);
        assert!(base.merged(None, &["grid.n_w".into()]).is_err());
    }
}
