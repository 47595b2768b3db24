//! The secret sidecar written by `randomize` and read by `reconstruct`.
//!
//! Plain text, one `field = value` per line:
//!
//! ```text
//! key_i = 4
//! seed = 42
//! w = 3/2
//! l = 2
//! length_model = uniform
//! n = 5
//! ```
//!
//! `length_model` is `uniform` or `normal <mean> <variance>`. Rationals are
//! written exactly (`3/2`) and may be read back as decimals too.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::randomizer::{LengthModel, RandomizationParams};
use crate::ratio::{self, Rational};

const FIELDS: [&str; 6] = ["key_i", "seed", "w", "l", "length_model", "n"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyFile {
    pub params: RandomizationParams,
    /// Catalog size at distortion time.
    pub n: usize,
}

impl KeyFile {
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let p = &self.params;
        writeln!(
            out,
            "# secret: do not ship this file with the mixed database"
        )?;
        writeln!(out, "key_i = {}", p.key_i)?;
        writeln!(out, "seed = {}", p.seed)?;
        writeln!(out, "w = {}", ratio::format_exact(&p.w))?;
        writeln!(out, "l = {}", p.l)?;
        match &p.length_model {
            LengthModel::Uniform => writeln!(out, "length_model = uniform")?,
            LengthModel::Normal { mean, variance } => writeln!(
                out,
                "length_model = normal {} {}",
                ratio::format_exact(mean),
                ratio::format_exact(variance)
            )?,
        }
        writeln!(out, "n = {}", self.n)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut fields: BTreeMap<String, String> = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected field = value", i + 1)))?;
            let key = key.trim();
            if !FIELDS.contains(&key) {
                return Err(bad(format!("line {}: unknown field {key:?}", i + 1)));
            }
            if fields
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(bad(format!("line {}: duplicate field {key:?}", i + 1)));
            }
        }
        let get = |key: &str| {
            fields
                .get(key)
                .map(String::as_str)
                .ok_or_else(|| bad(format!("missing field {key:?}")))
        };
        let int = |key: &str| -> Result<u64> {
            get(key)?
                .parse()
                .map_err(|_| bad(format!("{key} must be a non-negative integer")))
        };
        let rational = |key: &str, text: &str| -> Result<Rational> {
            ratio::parse_rational(text).map_err(|_| bad(format!("{key}: not a number: {text:?}")))
        };

        let length_model = {
            let text = get("length_model")?;
            let mut parts = text.split_whitespace();
            match parts.next() {
                Some("uniform") if parts.next().is_none() => LengthModel::Uniform,
                Some("normal") => {
                    let (Some(mean), Some(var), None) = (parts.next(), parts.next(), parts.next())
                    else {
                        return Err(bad("length_model normal needs <mean> <variance>".into()));
                    };
                    LengthModel::Normal {
                        mean: rational("length_model mean", mean)?,
                        variance: rational("length_model variance", var)?,
                    }
                }
                _ => return Err(bad(format!("unknown length_model {text:?}"))),
            }
        };
        let params = RandomizationParams {
            w: rational("w", get("w")?)?,
            l: int("l")? as usize,
            key_i: int("key_i")?,
            seed: int("seed")?,
            length_model,
        };
        let n = int("n")? as usize;
        params.validate(n).map_err(|e| bad(e.to_string()))?;
        Ok(KeyFile { params, n })
    }
}

fn bad(message: String) -> Error {
    Error::KeyFile(message)
}
