//! Pipeline configuration file (TOML). Every field has a default; command
//! line flags override whatever the file sets.
//!
//! ```toml
//! seed = 42
//! holdout_frac = 0.2
//!
//! [paths]
//! log = "events.csv"
//! stats = "stats.json"
//! profiles = "profiles.bin"
//!
//! [label]
//! noise_floor_s = 5.0
//! light_user_clicks = 7
//!
//! [ndt]
//! source = "solved"
//!
//! [train]
//! objective = "vr_ndt"
//! epochs = 3
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dwell_stats::DwellStats;
use crate::error::{Error, Result};
use crate::labeler::LabelConfig;
use crate::ndt::{NdtParams, DEFAULT_PRECISION, DEFAULT_T_MAX};
use crate::simgen::SimConfig;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub sim_config: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub sidecar: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    pub histogram: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub labeled: Option<PathBuf>,
    pub composition: Option<PathBuf>,
    pub ndt: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub loss_trace: Option<PathBuf>,
    pub baseline_checkpoint: Option<PathBuf>,
    pub eval: Option<PathBuf>,
    pub baseline_log: Option<PathBuf>,
    pub treatment_log: Option<PathBuf>,
    pub migration: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSettings {
    pub has_header: bool,
    pub bad_line_budget: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NdtSource {
    /// offset 15 s, tau 20 s.
    #[default]
    PaperDefault,
    /// offset at the fitted x_l, tau solved against x_h.
    Solved,
}

impl std::str::FromStr for NdtSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper_default" => Ok(NdtSource::PaperDefault),
            "solved" => Ok(NdtSource::Solved),
            _ => Err(Error::InvalidArgument(format!("unknown ndt source {s:?}"))),
        }
    }
}

impl NdtSource {
    pub fn as_str(self) -> &'static str {
        match self {
            NdtSource::PaperDefault => "paper_default",
            NdtSource::Solved => "solved",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NdtSettings {
    pub source: NdtSource,
    pub precision: f64,
    pub t_max: f64,
}

impl Default for NdtSettings {
    fn default() -> Self {
        NdtSettings {
            source: NdtSource::PaperDefault,
            precision: DEFAULT_PRECISION,
            t_max: DEFAULT_T_MAX,
        }
    }
}

impl NdtSettings {
    pub fn params(&self, stats: &DwellStats) -> Result<NdtParams> {
        match self.source {
            NdtSource::PaperDefault => Ok(NdtParams::paper_default()),
            NdtSource::Solved => NdtParams::solved(stats, self.precision, self.t_max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub base_auc: Option<f64>,
    pub boundaries: Option<[u64; 6]>,
    pub global_deciles: bool,
    pub delta_pct: bool,
    pub histogram_bins: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            base_auc: None,
            boundaries: None,
            global_deciles: false,
            delta_pct: false,
            histogram_bins: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Single source of randomness for simulation and training.
    pub seed: Option<u64>,
    /// Share of labeled events, latest first, held out from training and
    /// used for evaluation.
    pub holdout_frac: f64,
    pub paths: Paths,
    pub scan: ScanSettings,
    pub label: LabelConfig,
    pub ndt: NdtSettings,
    pub train: TrainConfig,
    pub eval: EvalSettings,
    pub sim: Option<SimConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: None,
            holdout_frac: 0.2,
            paths: Paths::default(),
            scan: ScanSettings::default(),
            label: LabelConfig::default(),
            ndt: NdtSettings::default(),
            train: TrainConfig::default(),
            eval: EvalSettings::default(),
            sim: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput { name: "config", path: path.to_path_buf() });
        }
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.holdout_frac) {
            return Err(Error::InvalidArgument(format!("holdout_frac {} not in [0, 1)", self.holdout_frac)));
        }
        if !(self.label.noise_floor_s >= 0.0) || self.label.window_s <= 0 {
            return Err(Error::InvalidArgument("label.noise_floor_s must be >= 0 and window_s > 0".into()));
        }
        if !(self.ndt.precision > 0.0 && self.ndt.precision < self.ndt.t_max) {
            return Err(Error::InvalidArgument("ndt.precision must be in (0, t_max)".into()));
        }
        if self.eval.histogram_bins == 0 {
            return Err(Error::InvalidArgument("eval.histogram_bins must be >= 1".into()));
        }
        if let Some(b) = self.eval.base_auc {
            if !(b > 0.5 && b <= 1.0) {
                return Err(Error::InvalidArgument(format!("eval.base_auc {b} not in (0.5, 1]")));
            }
        }
        self.train.validate()?;
        if let Some(sim) = &self.sim {
            sim.validate()?;
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::Objective;

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(PipelineConfig::from_toml_str("").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn sections_parse() {
        let cfg = PipelineConfig::from_toml_str(
            "seed = 5\n[paths]\nlog = \"a.csv\"\n[ndt]\nsource = \"solved\"\n[train]\nobjective = \"single_ctr\"\nepochs = 2\n[label]\nmin_records_t3 = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.seed(), 5);
        assert_eq!(cfg.paths.log.as_deref(), Some(Path::new("a.csv")));
        assert_eq!(cfg.ndt.source, NdtSource::Solved);
        assert_eq!(cfg.train.objective, Objective::SingleCtr);
        assert_eq!(cfg.train.epochs, 2);
        assert_eq!(cfg.label.min_records_t3, 3);
        assert_eq!(cfg.label.light_user_clicks, 7);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_toml_str("holdout_frac = 1.5").is_err());
        assert!(PipelineConfig::from_toml_str("[eval]\nbase_auc = 0.5").is_err());
        assert!(PipelineConfig::from_toml_str("[train]\nepochs = 0").is_err());
        assert!(PipelineConfig::from_toml_str("[paths]\nunknown = \"x\"").is_err());
    }
}
