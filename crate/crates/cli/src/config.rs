use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use moms_core::model::MoMSConfig;
use serde::{Deserialize, Serialize};

/// Everything `moms train` needs. Relative paths resolve against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: MoMSConfig,
    /// `id<TAB>SMILES` corpus.
    pub corpus: PathBuf,
    /// MSP library keyed by compound id.
    pub spectra: PathBuf,
    /// Pre-mined vocabulary; mined from the training molecules when absent.
    #[serde(default)]
    pub vocab: Option<PathBuf>,
    pub checkpoint: PathBuf,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("{}: invalid run config", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.corpus);
        resolve(&mut cfg.spectra);
        resolve(&mut cfg.checkpoint);
        resolve(&mut cfg.output_dir);
        if let Some(v) = cfg.vocab.as_mut() {
            resolve(v);
        }
        cfg.model
            .validate()
            .with_context(|| format!("{}: invalid model section", path.display()))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_schema() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.json");
        fs::write(
            &p,
            r#"{"corpus":"c.tsv","spectra":"s.msp","checkpoint":"ck","output_dir":"out","model":{"hidden":16}}"#,
        )
        .unwrap();
        let cfg = RunConfig::load(&p).unwrap();
        assert_eq!(cfg.model.hidden, 16);
        assert_eq!(cfg.corpus, dir.path().join("c.tsv"));
        assert!(cfg.vocab.is_none());

        fs::write(
            &p,
            r#"{"corpus":"c","spectra":"s","checkpoint":"k","output_dir":"o","extra":1}"#,
        )
        .unwrap();
        assert!(RunConfig::load(&p).is_err());
        fs::write(
            &p,
            r#"{"corpus":"c","spectra":"s","checkpoint":"k","output_dir":"o","model":{"lr_typo":1}}"#,
        )
        .unwrap();
        assert!(RunConfig::load(&p).is_err());
        fs::write(
            &p,
            r#"{"corpus":"c","spectra":"s","checkpoint":"k","output_dir":"o","model":{"hidden":0}}"#,
        )
        .unwrap();
        assert!(RunConfig::load(&p).is_err());
    }
}
