//! Flat key-value configuration files.
//!
//! Format: one `key = value` pair per line, `#` starts a comment, blank
//! lines ignored. Unknown keys are permitted so a single file can drive
//! every subcommand. Every field of the model, training, split and
//! synthetic-data configurations has a key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::data::SplitSpec;
use crate::model::ModelConfig;
use crate::synth::SyntheticSpec;
use crate::train::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        FileConfig::default()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_string(),
                line: lineno + 1,
                msg: format!("expected 'key = value', got '{raw}'"),
            })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { entries })
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), value);
    }

    pub fn get_raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                Error::Config(format!("bad value '{v}' for key '{key}'"))
            }),
        }
    }

    fn fill<T: std::str::FromStr>(&self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    /// Model configuration with file overrides applied on top of defaults.
    pub fn model_config(&self) -> Result<ModelConfig> {
        let mut c = ModelConfig::default();
        self.fill("d", &mut c.d)?;
        self.fill("feature_dim", &mut c.feature_dim)?;
        self.fill("r_views", &mut c.r_views)?;
        self.fill("attn_hidden", &mut c.attn_hidden)?;
        self.fill("encoder_hidden", &mut c.encoder_hidden)?;
        self.fill("leaky_slope", &mut c.leaky_slope)?;
        self.fill("enable_item_prop", &mut c.enable_item_prop)?;
        self.fill("enable_item_to_outfit", &mut c.enable_item_to_outfit)?;
        self.fill("enable_outfit_to_user", &mut c.enable_outfit_to_user)?;
        self.fill("init_seed", &mut c.init_seed)?;
        Ok(c)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let mut c = TrainConfig::default();
        self.fill("lr_rec", &mut c.lr_rec)?;
        self.fill("lr_com", &mut c.lr_com)?;
        self.fill("reg_lambda", &mut c.reg_lambda)?;
        self.fill("batch_rec", &mut c.batch_rec)?;
        self.fill("batch_com", &mut c.batch_com)?;
        self.fill("epochs", &mut c.epochs)?;
        self.fill("rng_seed", &mut c.rng_seed)?;
        self.fill("adam_beta1", &mut c.adam.beta1)?;
        self.fill("adam_beta2", &mut c.adam.beta2)?;
        self.fill("adam_eps", &mut c.adam.eps)?;
        self.fill("neg_resample_per_epoch", &mut c.neg_resample_per_epoch)?;
        Ok(c)
    }

    pub fn split_spec(&self) -> Result<SplitSpec> {
        let mut c = SplitSpec::default();
        self.fill("train_frac", &mut c.train_frac)?;
        self.fill("val_frac", &mut c.val_frac)?;
        self.fill("split_seed", &mut c.seed)?;
        Ok(c)
    }

    pub fn synthetic_spec(&self) -> Result<SyntheticSpec> {
        let mut c = SyntheticSpec::default();
        self.fill("users", &mut c.users)?;
        self.fill("outfits", &mut c.outfits)?;
        self.fill("items", &mut c.items)?;
        self.fill("categories", &mut c.categories)?;
        self.fill("style_dim", &mut c.style_dim)?;
        self.fill("outfit_len_min", &mut c.outfit_len_min)?;
        self.fill("outfit_len_max", &mut c.outfit_len_max)?;
        self.fill("interactions_per_user", &mut c.interactions_per_user)?;
        self.fill("fitb_holdout", &mut c.fitb_holdout)?;
        self.fill("noise", &mut c.noise)?;
        self.fill("synth_seed", &mut c.seed)?;
        Ok(c)
    }
}

/// Renders a config file with every recognized key and its default, for
/// `--write-default-config` style tooling and documentation.
pub fn default_config_text() -> String {
    let m = ModelConfig::default();
    let t = TrainConfig::default();
    let s = SplitSpec::default();
    let g = SyntheticSpec::default();
    let mut out = String::new();
    let _ = writeln!(out, "# model");
    let _ = writeln!(out, "d = {}", m.d);
    let _ = writeln!(out, "feature_dim = {}", m.feature_dim);
    let _ = writeln!(out, "r_views = {}", m.r_views);
    let _ = writeln!(out, "attn_hidden = {}", m.attn_hidden);
    let _ = writeln!(out, "encoder_hidden = {}", m.encoder_hidden);
    let _ = writeln!(out, "leaky_slope = {:?}", m.leaky_slope);
    let _ = writeln!(out, "enable_item_prop = {}", m.enable_item_prop);
    let _ = writeln!(out, "enable_item_to_outfit = {}", m.enable_item_to_outfit);
    let _ = writeln!(out, "enable_outfit_to_user = {}", m.enable_outfit_to_user);
    let _ = writeln!(out, "init_seed = {}", m.init_seed);
    let _ = writeln!(out, "\n# training");
    let _ = writeln!(out, "lr_rec = {:?}", t.lr_rec);
    let _ = writeln!(out, "lr_com = {:?}", t.lr_com);
    let _ = writeln!(out, "reg_lambda = {:?}", t.reg_lambda);
    let _ = writeln!(out, "batch_rec = {}", t.batch_rec);
    let _ = writeln!(out, "batch_com = {}", t.batch_com);
    let _ = writeln!(out, "epochs = {}", t.epochs);
    let _ = writeln!(out, "rng_seed = {}", t.rng_seed);
    let _ = writeln!(out, "adam_beta1 = {:?}", t.adam.beta1);
    let _ = writeln!(out, "adam_beta2 = {:?}", t.adam.beta2);
    let _ = writeln!(out, "adam_eps = {:?}", t.adam.eps);
    let _ = writeln!(out, "neg_resample_per_epoch = {}", t.neg_resample_per_epoch);
    let _ = writeln!(out, "\n# split");
    let _ = writeln!(out, "train_frac = {:?}", s.train_frac);
    let _ = writeln!(out, "val_frac = {:?}", s.val_frac);
    let _ = writeln!(out, "split_seed = {}", s.seed);
    let _ = writeln!(out, "\n# synthetic data");
    let _ = writeln!(out, "users = {}", g.users);
    let _ = writeln!(out, "outfits = {}", g.outfits);
    let _ = writeln!(out, "items = {}", g.items);
    let _ = writeln!(out, "categories = {}", g.categories);
    let _ = writeln!(out, "style_dim = {}", g.style_dim);
    let _ = writeln!(out, "outfit_len_min = {}", g.outfit_len_min);
    let _ = writeln!(out, "outfit_len_max = {}", g.outfit_len_max);
    let _ = writeln!(out, "interactions_per_user = {}", g.interactions_per_user);
    let _ = writeln!(out, "fitb_holdout = {}", g.fitb_holdout);
    let _ = writeln!(out, "noise = {:?}", g.noise);
    let _ = writeln!(out, "synth_seed = {}", g.seed);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_overrides_and_ignores_comments() {
        let cfg = FileConfig::parse(
            "# comment\nd = 16\nlr_rec = 0.005 # inline\n\nusers=50\n",
            "test",
        )
        .unwrap();
        assert_eq!(cfg.model_config().unwrap().d, 16);
        assert_eq!(cfg.train_config().unwrap().lr_rec, 0.005);
        assert_eq!(cfg.synthetic_spec().unwrap().users, 50);
        // untouched fields keep defaults
        assert_eq!(cfg.model_config().unwrap().r_views, 4);
    }

    #[test]
    fn bad_value_names_the_key() {
        let cfg = FileConfig::parse("d = banana\n", "test").unwrap();
        let err = cfg.model_config().unwrap_err();
        assert!(err.to_string().contains("'d'"), "{err}");
    }

    #[test]
    fn malformed_line_reports_location() {
        let err = FileConfig::parse("just-some-words\n", "cfg.kv").unwrap_err();
        assert!(err.to_string().contains("cfg.kv:1"), "{err}");
    }

    #[test]
    fn default_text_round_trips() {
        let text = default_config_text();
        let cfg = FileConfig::parse(&text, "defaults").unwrap();
        assert_eq!(cfg.model_config().unwrap(), ModelConfig::default());
        assert_eq!(cfg.train_config().unwrap(), TrainConfig::default());
        assert_eq!(cfg.split_spec().unwrap(), SplitSpec::default());
        assert_eq!(cfg.synthetic_spec().unwrap(), SyntheticSpec::default());
    }
}
