//! Device profiles: model id to the magic header that precedes ov2 records.
//!
//! ```toml
//! [profiles.AF7DE92B]
//! ov2_header = "0a0b0c0d"
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct Profile {
    pub ov2_header: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct Config {
    #[serde(default)]
    pub profiles: BTreeMap<String, Profile>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).context("invalid config")?;
        for (model, p) in &cfg.profiles {
            hex::decode(&p.ov2_header)
                .with_context(|| format!("profile {model}: ov2_header is not hex"))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    /// Header bytes for a model id, matched case-insensitively.
    pub fn ov2_header(&self, model_id: &str) -> Option<Vec<u8>> {
        self.profiles
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(model_id))
            .and_then(|(_, p)| hex::decode(&p.ov2_header).ok())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles() {
        let cfg = Config::parse("[profiles.AF7DE92B]\nov2_header = \"0A0b\"\n").unwrap();
        assert_eq!(cfg.ov2_header("af7de92b"), Some(vec![0x0a, 0x0b]));
        assert_eq!(cfg.ov2_header("00000000"), None);
        assert_eq!(Config::parse("").unwrap(), Config::default());
        assert!(Config::parse("[profiles.X]\nov2_header = \"zz\"\n").is_err());
    }
}
