//! Run configuration and the per-dataset hyperparameter profiles.

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::distill::{DistillConfig, DistillMode};
use crate::error::{invalid, Result};
use crate::gcn::GcnConfig;
use crate::pathofilter::{FilterConfig, SelectionScope};
use crate::rng::derive_seed;
use crate::svm::{Gamma, SvmParams};

/// Named hyperparameter presets for the four reference datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Adni,
    Ppmi,
    Abide,
    Adhd200,
}

impl Profile {
    pub const ALL: [Profile; 4] = [Profile::Adni, Profile::Ppmi, Profile::Abide, Profile::Adhd200];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Adni => "adni",
            Profile::Ppmi => "ppmi",
            Profile::Abide => "abide",
            Profile::Adhd200 => "adhd200",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    /// Defaults with this profile's k, ρ, depth, width and community count.
    pub fn config(self) -> RunConfig {
        let (k, rho, communities, layers, hidden) = match self {
            Profile::Adni => (2, 0.6, None, 4, 128),
            Profile::Ppmi => (1, 0.5, None, 2, 32),
            Profile::Abide => (1, 0.6, Some(7), 2, 128),
            Profile::Adhd200 => (3, 0.6, Some(5), 2, 64),
        };
        let base = RunConfig::default();
        RunConfig {
            profile: Some(self),
            k,
            rho,
            communities: communities.unwrap_or(base.communities),
            gcn: GcnSection { layers, hidden, ..base.gcn },
            ..base
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GcnSection {
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub weight_decay: f64,
}

impl Default for GcnSection {
    fn default() -> Self {
        let g = GcnConfig::default();
        Self {
            layers: g.layers,
            hidden: g.hidden,
            dropout: g.dropout,
            learning_rate: g.learning_rate,
            epochs: g.epochs,
            weight_decay: g.weight_decay,
        }
    }
}

/// Every stage toggle and hyperparameter of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub profile: Option<Profile>,
    pub filter: bool,
    pub distill: bool,
    pub k: usize,
    pub rho: f64,
    pub p_t: f64,
    pub c: f64,
    pub gamma: Gamma,
    /// Inner cross-validation folds for α and β.
    pub svm_folds: usize,
    pub retrain_per_subgraph: bool,
    /// Spectral-clustering community count, used when no atlas is given.
    pub communities: usize,
    pub selection_scope: SelectionScope,
    pub mode: DistillMode,
    pub gcn: GcnSection,
    /// Outer evaluation folds.
    pub folds: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: None,
            filter: true,
            distill: true,
            k: 1,
            rho: 0.6,
            p_t: 0.7,
            c: 1.0,
            gamma: Gamma::SCALE,
            svm_folds: 5,
            retrain_per_subgraph: false,
            communities: 5,
            selection_scope: SelectionScope::TrainOnly,
            mode: DistillMode::Inductive,
            gcn: GcnSection::default(),
            folds: 5,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(invalid!("rho must be a nonnegative number, got {}", self.rho));
        }
        if !(0.0..=1.0).contains(&self.p_t) {
            return Err(invalid!("p_t must lie in [0, 1], got {}", self.p_t));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(invalid!("SVM C must be positive, got {}", self.c));
        }
        if let Gamma::Value(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(invalid!("gamma must be positive or \"scale\", got {g}"));
            }
        }
        if self.svm_folds < 2 || self.folds < 2 {
            return Err(invalid!("fold counts must be at least 2"));
        }
        if self.communities < 2 {
            return Err(invalid!("communities must be at least 2"));
        }
        self.gcn_config(0).validate()
    }

    pub fn filter_config(&self, seed: u64) -> FilterConfig {
        FilterConfig {
            svm: SvmParams { c: self.c, gamma: self.gamma, ..SvmParams::default() },
            folds: self.svm_folds,
            seed,
            scope: self.selection_scope,
            retrain_per_subgraph: self.retrain_per_subgraph,
        }
    }

    pub fn distill_config(&self, seed: u64) -> DistillConfig {
        DistillConfig { k: self.k, rho: self.rho, p_t: self.p_t, mode: self.mode, seed }
    }

    pub fn gcn_config(&self, seed: u64) -> GcnConfig {
        let g = self.gcn;
        GcnConfig {
            layers: g.layers,
            hidden: g.hidden,
            dropout: g.dropout,
            learning_rate: g.learning_rate,
            epochs: g.epochs,
            weight_decay: g.weight_decay,
            seed,
        }
    }

    /// Seed of the named substream for outer fold `fold`.
    pub fn stage_seed(&self, stage: &str, fold: usize) -> u64 {
        derive_seed(self.seed, stage, fold as u64)
    }

    /// Short human-readable label of the enabled stages.
    pub fn variant(&self) -> String {
        String::from(match (self.filter, self.distill) {
            (true, true) => "filter+distill",
            (true, false) => "filter",
            (false, true) => "distill",
            (false, false) => "plain",
        })
    }
}
