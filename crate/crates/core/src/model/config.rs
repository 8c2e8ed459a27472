use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::hetero::DEFAULT_SAMPLER_SIZES;
use crate::motif::DEFAULT_VOCAB_SIZE;
use crate::spectra::M_MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    MomsGcn,
    MomsGin,
    GcnOnly,
    GinOnly,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::GcnOnly, Variant::GinOnly, Variant::MomsGcn, Variant::MomsGin];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::MomsGcn => "moms_gcn",
            Variant::MomsGin => "moms_gin",
            Variant::GcnOnly => "gcn_only",
            Variant::GinOnly => "gin_only",
        }
    }

    /// Whether the molecule branch uses GIN layers instead of GCN.
    pub fn molecule_gin(self) -> bool {
        matches!(self, Variant::MomsGin | Variant::GinOnly)
    }

    /// Whether the motif graph branch and the motif prior are present.
    pub fn uses_motifs(self) -> bool {
        matches!(self, Variant::MomsGcn | Variant::MomsGin)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown model variant {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid config: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MoMSConfig {
    pub variant: Variant,
    pub vocab_size: usize,
    pub sampler_sizes: Vec<usize>,
    pub hidden: usize,
    pub gnn_layers: usize,
    pub hetero_layers: usize,
    pub head_layers: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub m_max: usize,
    /// Feed the motif-spectrum prior to the head (motif variants only).
    pub motif_prior: bool,
    pub split_fractions: [f64; 3],
}

impl Default for MoMSConfig {
    fn default() -> Self {
        MoMSConfig {
            variant: Variant::MomsGcn,
            vocab_size: DEFAULT_VOCAB_SIZE,
            sampler_sizes: DEFAULT_SAMPLER_SIZES.to_vec(),
            hidden: 128,
            gnn_layers: 3,
            hetero_layers: 3,
            head_layers: 2,
            lr: 1e-3,
            batch_size: 32,
            epochs: 100,
            patience: 10,
            seed: 0,
            m_max: M_MAX,
            motif_prior: true,
            split_fractions: [0.7, 0.2, 0.1],
        }
    }
}

impl MoMSConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("vocab_size", self.vocab_size),
            ("hidden", self.hidden),
            ("gnn_layers", self.gnn_layers),
            ("hetero_layers", self.hetero_layers),
            ("head_layers", self.head_layers),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("patience", self.patience),
            ("m_max", self.m_max),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(ConfigError(format!("{name} must be positive")));
        }
        if self.sampler_sizes.is_empty() || self.sampler_sizes.contains(&0) {
            return Err(ConfigError("sampler_sizes must be nonempty and positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(ConfigError("lr must be positive".into()));
        }
        let f = self.split_fractions;
        if f.iter().any(|x| !(0.0..=1.0).contains(x)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(ConfigError("split_fractions must be in [0, 1] and sum to 1".into()));
        }
        Ok(())
    }
}
