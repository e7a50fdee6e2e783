use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::conv::Padding;

/// One layer of a sequential architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv { filters: usize, kernel_h: usize, kernel_w: usize, stride: usize, padding: Padding },
    Relu,
    MaxPool { pool_h: usize, pool_w: usize, stride: usize },
    Flatten,
    Dense { units: usize },
    Softmax,
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LayerSpec::Conv { filters, kernel_h, kernel_w, stride, padding } => {
                let pad = match padding {
                    Padding::Same => "same",
                    Padding::Valid => "valid",
                };
                write!(f, "conv {filters} {kernel_h} {kernel_w} {stride} {pad}")
            }
            LayerSpec::Relu => f.write_str("relu"),
            LayerSpec::MaxPool { pool_h, pool_w, stride } => write!(f, "maxpool {pool_h} {pool_w} {stride}"),
            LayerSpec::Flatten => f.write_str("flatten"),
            LayerSpec::Dense { units } => write!(f, "dense {units}"),
            LayerSpec::Softmax => f.write_str("softmax"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct SpecParseError {
    pub line: usize,
    pub message: String,
}

fn positive(tok: Option<&str>, what: &str, line: usize) -> Result<usize, SpecParseError> {
    let err = |message: String| SpecParseError { line, message };
    let tok = tok.ok_or_else(|| err(alloc::format!("missing {what}")))?;
    match tok.parse::<usize>() {
        Ok(0) => Err(err(alloc::format!("{what} must be at least 1"))),
        Ok(v) => Ok(v),
        Err(_) => Err(err(alloc::format!("{what} is not a positive integer: {tok:?}"))),
    }
}

impl LayerSpec {
    /// Parses one non-comment line of the layer file format.
    pub fn parse_line(text: &str, line: usize) -> Result<Self, SpecParseError> {
        let mut toks = text.split_whitespace();
        let kind = toks.next().unwrap_or("");
        let spec = match kind {
            "conv" => {
                let filters = positive(toks.next(), "filters", line)?;
                let kernel_h = positive(toks.next(), "kernel height", line)?;
                let kernel_w = positive(toks.next(), "kernel width", line)?;
                let stride = positive(toks.next(), "stride", line)?;
                let padding = match toks.next() {
                    Some("same") => Padding::Same,
                    Some("valid") => Padding::Valid,
                    other => {
                        return Err(SpecParseError { line, message: alloc::format!("padding must be same or valid, got {other:?}") })
                    }
                };
                LayerSpec::Conv { filters, kernel_h, kernel_w, stride, padding }
            }
            "relu" => LayerSpec::Relu,
            "maxpool" => LayerSpec::MaxPool {
                pool_h: positive(toks.next(), "pool height", line)?,
                pool_w: positive(toks.next(), "pool width", line)?,
                stride: positive(toks.next(), "stride", line)?,
            },
            "flatten" => LayerSpec::Flatten,
            "dense" => LayerSpec::Dense { units: positive(toks.next(), "units", line)? },
            "softmax" => LayerSpec::Softmax,
            other => return Err(SpecParseError { line, message: alloc::format!("unknown layer kind {other:?}") }),
        };
        if let Some(extra) = toks.next() {
            return Err(SpecParseError { line, message: alloc::format!("unexpected token {extra:?}") });
        }
        Ok(spec)
    }
}

/// Parses a layer file: one layer per line, `#` starts a comment, blank lines ignored.
pub fn parse_layer_specs(text: &str) -> Result<Vec<LayerSpec>, SpecParseError> {
    let mut specs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        specs.push(LayerSpec::parse_line(body, i + 1)?);
    }
    Ok(specs)
}

pub fn specs_to_text(specs: &[LayerSpec]) -> String {
    let mut out = String::new();
    for s in specs {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    out
}

fn preset(stem: usize, blocks: &[usize], classes: usize) -> Vec<LayerSpec> {
    let conv = |filters| LayerSpec::Conv { filters, kernel_h: 3, kernel_w: 3, stride: 1, padding: Padding::Same };
    let mut specs = alloc::vec![conv(stem), LayerSpec::Relu];
    for &f in blocks {
        specs.extend([conv(f), LayerSpec::Relu, LayerSpec::MaxPool { pool_h: 2, pool_w: 2, stride: 2 }]);
    }
    specs.extend([LayerSpec::Flatten, LayerSpec::Dense { units: classes }, LayerSpec::Softmax]);
    specs
}

/// Stem convolution of 32 filters, then four conv/ReLU/max-pool blocks of
/// 64, 512, 512 and 256 filters, a dense classifier and softmax.
pub fn paper_preset(classes: usize) -> Vec<LayerSpec> {
    preset(32, &[64, 512, 512, 256], classes)
}

/// [`paper_preset`] scaled down to 8, 16, 16 and 8 filters with an
/// 8-filter stem, small enough to train on one CPU core.
pub fn desk_preset(classes: usize) -> Vec<LayerSpec> {
    preset(8, &[8, 16, 16, 8], classes)
}
