//! Network config files.
//!
//! ```text
//! # comment
//! name dcgan
//! layer deconv in=4x4x1024 k=5x5 out=512 stride=2
//! layer deconv in=8x8x512 k=4x4 out=256 stride=2 crop=1
//! layer conv in=32x32x64 k=3x3 out=3 stride=1
//! ```
//!
//! `k=5` is shorthand for `k=5x5`; `stride` defaults to 1 and `crop` to 0.
//! Keys may appear in any order. The writer always emits the long form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sdconv::{Error, LayerKind, LayerSpec, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NetworkConfig {
    pub name: String,
    pub layers: Vec<LayerSpec>,
}

impl NetworkConfig {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = NetworkConfig::default();
        let mut named = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            match keyword {
                "name" => {
                    if named {
                        return Err(err("duplicate `name`".into()));
                    }
                    let name = rest.trim();
                    if name.is_empty() {
                        return Err(err("`name` needs a value".into()));
                    }
                    cfg.name = name.to_string();
                    named = true;
                }
                "layer" => cfg.layers.push(parse_layer(rest).map_err(err)?),
                other => return Err(err(format!("unknown keyword `{other}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.name.is_empty() {
            let _ = writeln!(out, "name {}", self.name);
        }
        for l in &self.layers {
            let _ = write!(
                out,
                "layer {} in={}x{}x{} k={}x{} out={} stride={}",
                l.kind, l.in_h, l.in_w, l.in_c, l.kh, l.kw, l.out_c, l.stride
            );
            if l.crop > 0 {
                let _ = write!(out, " crop={}", l.crop);
            }
            out.push('\n');
        }
        out
    }

    /// Checks that every layer consumes exactly what the previous one produces.
    pub fn check_chained(&self) -> Result<()> {
        for (i, pair) in self.layers.windows(2).enumerate() {
            let (out, next) = (pair[0].out_dims(), pair[1].in_dims());
            if out != next {
                return Err(Error::Shape(format!(
                    "layer {} outputs {}x{}x{} but layer {} expects {}x{}x{}",
                    i,
                    out.0,
                    out.1,
                    out.2,
                    i + 1,
                    next.0,
                    next.1,
                    next.2
                )));
            }
        }
        Ok(())
    }

    /// Label for report titles.
    pub fn title(&self) -> &str {
        if self.name.is_empty() {
            "network"
        } else {
            &self.name
        }
    }
}

fn parse_layer(rest: &str) -> std::result::Result<LayerSpec, String> {
    let mut tokens = rest.split_whitespace();
    let kind = match tokens.next() {
        Some("deconv") => LayerKind::Deconv,
        Some("conv") => LayerKind::Conv,
        Some(other) => return Err(format!("unknown layer kind `{other}`")),
        None => return Err("`layer` needs a kind".into()),
    };
    let (mut input, mut kernel, mut out, mut stride, mut crop) = (None, None, None, None, None);
    for tok in tokens {
        let (key, value) = tok.split_once('=').ok_or_else(|| format!("expected key=value, found `{tok}`"))?;
        let slot_taken = match key {
            "in" => input.replace(dims::<3>(value, key)?).is_some(),
            "k" => kernel.replace(kernel_dims(value)?).is_some(),
            "out" => out.replace(number(value, key)?).is_some(),
            "stride" => stride.replace(number(value, key)?).is_some(),
            "crop" => crop.replace(number(value, key)?).is_some(),
            other => return Err(format!("unknown key `{other}`")),
        };
        if slot_taken {
            return Err(format!("duplicate key `{key}`"));
        }
    }
    let [in_h, in_w, in_c] = input.ok_or("missing `in=HxWxC`")?;
    let [kh, kw] = kernel.ok_or("missing `k=KHxKW`")?;
    let out_c = out.ok_or("missing `out=OC`")?;
    let spec =
        LayerSpec { kind, in_h, in_w, in_c, kh, kw, out_c, stride: stride.unwrap_or(1), crop: crop.unwrap_or(0) };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn number(value: &str, key: &str) -> std::result::Result<usize, String> {
    value.parse().map_err(|_| format!("`{key}` expects a non-negative integer, found `{value}`"))
}

fn dims<const N: usize>(value: &str, key: &str) -> std::result::Result<[usize; N], String> {
    let parts: Vec<&str> = value.split('x').collect();
    if parts.len() != N {
        return Err(format!("`{key}` expects {N} dimensions separated by `x`, found `{value}`"));
    }
    let mut out = [0; N];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = number(p, key)?;
    }
    Ok(out)
}

fn kernel_dims(value: &str) -> std::result::Result<[usize; 2], String> {
    if value.contains('x') {
        dims::<2>(value, "k")
    } else {
        let k = number(value, "k")?;
        Ok([k, k])
    }
}
