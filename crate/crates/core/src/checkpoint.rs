//! Versioned checkpoint container.
//!
//! Layout: a text header of tab-separated key-value lines (format version,
//! model config, entity counts, epoch and seeds), an `arrays` count line,
//! then one `array NAME ROWS COLS` line per parameter immediately followed
//! by its row-major little-endian `f64` payload, and a final `end` line.
//! Round-trips are bit-exact.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::data::SplitSpec;
use crate::graph::EntityCounts;
use crate::model::{CategoryEncoder, ModelConfig, ModelParams};
use crate::tensor::Tensor;
use crate::{Error, Result};

const MAGIC: &str = "hfgn-checkpoint";
const VERSION: u32 = 1;

/// Everything stored alongside the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointMeta {
    pub model: ModelConfig,
    pub counts: EntityCounts,
    pub epoch: usize,
    pub rng_seed: u64,
    pub split: SplitSpec,
}

pub fn save_checkpoint(path: &Path, params: &ModelParams, meta: &CheckpointMeta) -> Result<()> {
    let named = params.named();
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{MAGIC} {VERSION}")?;
    let m = &meta.model;
    writeln!(w, "d\t{}", m.d)?;
    writeln!(w, "feature_dim\t{}", m.feature_dim)?;
    writeln!(w, "r_views\t{}", m.r_views)?;
    writeln!(w, "attn_hidden\t{}", m.attn_hidden)?;
    writeln!(w, "encoder_hidden\t{}", m.encoder_hidden)?;
    writeln!(w, "leaky_slope\t{:?}", m.leaky_slope)?;
    writeln!(w, "enable_item_prop\t{}", m.enable_item_prop)?;
    writeln!(w, "enable_item_to_outfit\t{}", m.enable_item_to_outfit)?;
    writeln!(w, "enable_outfit_to_user\t{}", m.enable_outfit_to_user)?;
    writeln!(w, "init_seed\t{}", m.init_seed)?;
    writeln!(w, "users\t{}", meta.counts.users)?;
    writeln!(w, "outfits\t{}", meta.counts.outfits)?;
    writeln!(w, "items\t{}", meta.counts.items)?;
    writeln!(w, "categories\t{}", meta.counts.categories)?;
    writeln!(w, "epoch\t{}", meta.epoch)?;
    writeln!(w, "rng_seed\t{}", meta.rng_seed)?;
    writeln!(w, "train_frac\t{:?}", meta.split.train_frac)?;
    writeln!(w, "val_frac\t{:?}", meta.split.val_frac)?;
    writeln!(w, "split_seed\t{}", meta.split.seed)?;
    writeln!(w, "arrays\t{}", named.len())?;
    for (name, tensor) in named {
        writeln!(w, "array\t{name}\t{}\t{}", tensor.rows(), tensor.cols())?;
        for v in tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    writeln!(w, "end")?;
    w.flush()?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    path: String,
}

impl<'a> Cursor<'a> {
    fn line(&mut self) -> Result<&'a str> {
        let start = self.pos;
        while self.pos < self.buf.len() && self.buf[self.pos] != b'\n' {
            self.pos += 1;
        }
        if self.pos >= self.buf.len() {
            return Err(Error::Checkpoint(format!("{}: truncated file", self.path)));
        }
        let line = std::str::from_utf8(&self.buf[start..self.pos])
            .map_err(|_| Error::Checkpoint(format!("{}: non-text header", self.path)))?;
        self.pos += 1;
        Ok(line)
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint(format!("{}: truncated file", self.path)));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
}

fn header_value<'a>(cursor: &mut Cursor<'a>, key: &str) -> Result<&'a str> {
    let line = cursor.line()?;
    let (k, v) = line
        .split_once('\t')
        .ok_or_else(|| Error::Checkpoint(format!("{}: malformed header line '{line}'", cursor.path)))?;
    if k != key {
        return Err(Error::Checkpoint(format!(
            "{}: expected header key '{key}', found '{k}'",
            cursor.path
        )));
    }
    Ok(v)
}

fn parse<T: std::str::FromStr>(path: &str, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Checkpoint(format!("{path}: bad value '{v}' for '{key}'")))
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelParams, CheckpointMeta)> {
    let buf = fs::read(path)
        .map_err(|e| Error::Checkpoint(format!("cannot open {}: {e}", path.display())))?;
    let mut cursor = Cursor {
        buf: &buf,
        pos: 0,
        path: path.display().to_string(),
    };
    let p = cursor.path.clone();

    let magic = cursor.line()?;
    let mut parts = magic.split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(Error::Checkpoint(format!("{p}: unrecognized checkpoint")));
    }
    let version: u32 = parse(&p, "version", parts.next().unwrap_or(""))?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "{p}: unsupported checkpoint version {version} (expected {VERSION})"
        )));
    }

    let model = ModelConfig {
        d: parse(&p, "d", header_value(&mut cursor, "d")?)?,
        feature_dim: parse(&p, "feature_dim", header_value(&mut cursor, "feature_dim")?)?,
        r_views: parse(&p, "r_views", header_value(&mut cursor, "r_views")?)?,
        attn_hidden: parse(&p, "attn_hidden", header_value(&mut cursor, "attn_hidden")?)?,
        encoder_hidden: parse(&p, "encoder_hidden", header_value(&mut cursor, "encoder_hidden")?)?,
        leaky_slope: parse(&p, "leaky_slope", header_value(&mut cursor, "leaky_slope")?)?,
        enable_item_prop: parse(&p, "enable_item_prop", header_value(&mut cursor, "enable_item_prop")?)?,
        enable_item_to_outfit: parse(
            &p,
            "enable_item_to_outfit",
            header_value(&mut cursor, "enable_item_to_outfit")?,
        )?,
        enable_outfit_to_user: parse(
            &p,
            "enable_outfit_to_user",
            header_value(&mut cursor, "enable_outfit_to_user")?,
        )?,
        init_seed: parse(&p, "init_seed", header_value(&mut cursor, "init_seed")?)?,
    };
    let counts = EntityCounts {
        users: parse(&p, "users", header_value(&mut cursor, "users")?)?,
        outfits: parse(&p, "outfits", header_value(&mut cursor, "outfits")?)?,
        items: parse(&p, "items", header_value(&mut cursor, "items")?)?,
        categories: parse(&p, "categories", header_value(&mut cursor, "categories")?)?,
    };
    let epoch = parse(&p, "epoch", header_value(&mut cursor, "epoch")?)?;
    let rng_seed = parse(&p, "rng_seed", header_value(&mut cursor, "rng_seed")?)?;
    let split = SplitSpec {
        train_frac: parse(&p, "train_frac", header_value(&mut cursor, "train_frac")?)?,
        val_frac: parse(&p, "val_frac", header_value(&mut cursor, "val_frac")?)?,
        seed: parse(&p, "split_seed", header_value(&mut cursor, "split_seed")?)?,
    };

    let expected = ModelParams::expected_shapes(&model, &counts);
    let array_count: usize = parse(&p, "arrays", header_value(&mut cursor, "arrays")?)?;
    if array_count != expected.len() {
        return Err(Error::Checkpoint(format!(
            "{p}: expected {} arrays for this config, found {array_count}",
            expected.len()
        )));
    }

    let mut tensors = Vec::with_capacity(array_count);
    for (name, (rows, cols)) in &expected {
        let line = cursor.line()?;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 || fields[0] != "array" {
            return Err(Error::Checkpoint(format!("{p}: malformed array line '{line}'")));
        }
        if fields[1] != name {
            return Err(Error::Checkpoint(format!(
                "{p}: expected array '{name}', found '{}'",
                fields[1]
            )));
        }
        let r: usize = parse(&p, "rows", fields[2])?;
        let c: usize = parse(&p, "cols", fields[3])?;
        if (r, c) != (*rows, *cols) {
            return Err(Error::Checkpoint(format!(
                "{p}: array '{name}' has shape {r}x{c}, config requires {rows}x{cols}"
            )));
        }
        let raw = cursor.bytes(r * c * 8)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        tensors.push(Tensor::from_vec(r, c, data));
    }
    if cursor.line()? != "end" {
        return Err(Error::Checkpoint(format!("{p}: missing end marker")));
    }

    // reassemble in canonical order: 8 shared tensors then 4 per category
    let mut it = tensors.into_iter();
    let mut next = || it.next().expect("length checked above");
    let params = ModelParams {
        embedding: next(),
        item_prop: next(),
        outfit_agg: next(),
        user_agg: next(),
        attn_views: next(),
        attn_proj: next(),
        score_views: next(),
        score_proj: next(),
        encoders: (0..counts.categories)
            .map(|_| CategoryEncoder {
                hidden_w: next(),
                hidden_b: next(),
                out_w: next(),
                out_b: next(),
            })
            .collect(),
    };

    Ok((
        params,
        CheckpointMeta {
            model,
            counts,
            epoch,
            rng_seed,
            split,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (ModelParams, CheckpointMeta) {
        let config = ModelConfig {
            d: 6,
            feature_dim: 3,
            r_views: 2,
            attn_hidden: 4,
            encoder_hidden: 5,
            leaky_slope: 0.2,
            init_seed: 99,
            ..ModelConfig::default()
        };
        let counts = EntityCounts {
            users: 4,
            outfits: 3,
            items: 7,
            categories: 2,
        };
        let params = ModelParams::init(&config, &counts).unwrap();
        let meta = CheckpointMeta {
            model: config,
            counts,
            epoch: 12,
            rng_seed: 5,
            split: SplitSpec::default(),
        };
        (params, meta)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (params, meta) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &params, &meta).unwrap();
        let (loaded, loaded_meta) = load_checkpoint(&path).unwrap();
        assert_eq!(loaded, params);
        assert_eq!(loaded_meta, meta);
    }

    #[test]
    fn wrong_magic_is_unrecognized() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bogus.ckpt");
        fs::write(&path, b"something else\n").unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("unrecognized checkpoint"), "{err}");
    }

    #[test]
    fn shape_mismatch_names_the_array() {
        let (params, meta) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &params, &meta).unwrap();
        // rewrite the header's d line ("d\t6" -> "d\t8") so the stored
        // arrays no longer match the declared config
        let mut text = fs::read(&path).unwrap();
        let needle = b"d\t6\n";
        let pos = text
            .windows(needle.len())
            .position(|w| w == needle)
            .unwrap();
        text[pos + 2] = b'8';
        fs::write(&path, text).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("embedding"), "{err}");
    }

    #[test]
    fn truncated_file_is_detected() {
        let (params, meta) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &params, &meta).unwrap();
        let data = fs::read(&path).unwrap();
        fs::write(&path, &data[..data.len() / 2]).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }
}
