//! Textual network description, e.g.
//! `conv3d(3x3x3,16) -> relu -> max_pool3d(1x2x2) -> flatten -> dense(classes) -> softmax`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Units {
    Fixed(usize),
    /// Resolved to the number of classes when the network is built.
    Classes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LayerSpec {
    Conv3d { kernel: [usize; 3], filters: usize, stride: [usize; 3] },
    Relu,
    BatchNorm,
    MaxPool3d { pool: [usize; 3] },
    Flatten,
    Dense { units: Units },
    /// `None` takes the rate from the training configuration.
    Dropout { rate: Option<f64> },
    Softmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layers: Vec<LayerSpec>,
}

/// Default architecture for full-size inputs.
pub const DEFAULT_SPEC: &str = "conv3d(3x3x3,16) -> relu -> max_pool3d(1x2x2) -> conv3d(3x3x3,32) -> relu -> \
     max_pool3d(2x2x2) -> flatten -> dense(128) -> relu -> dropout -> dense(classes) -> softmax";

/// Lighter architecture sized for single-core desk runs.
pub const DESK_SPEC: &str = "conv3d(2x4x4,8,stride=2x2x2) -> batch_norm -> relu -> max_pool3d(1x2x2) -> \
     conv3d(2x3x3,16) -> batch_norm -> relu -> max_pool3d(1x2x2) -> flatten -> dense(32) -> relu -> dropout -> \
     dense(classes) -> softmax";

fn triple(s: &str) -> Result<[usize; 3]> {
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("expected TxHxW, got {s:?}")));
    }
    let mut out = [0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| Error::Config(format!("bad dimension {p:?} in {s:?}")))?;
        if *o == 0 {
            return Err(Error::Config(format!("zero dimension in {s:?}")));
        }
    }
    Ok(out)
}

fn positive(s: &str) -> Result<usize> {
    match s.trim().parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::Config(format!("expected a positive integer, got {s:?}"))),
    }
}

fn parse_layer(token: &str) -> Result<LayerSpec> {
    let token = token.trim();
    let (name, args) = match token.find('(') {
        Some(i) if token.ends_with(')') => (&token[..i], Some(&token[i + 1..token.len() - 1])),
        Some(_) => return Err(Error::Config(format!("unbalanced parentheses in {token:?}"))),
        None => (token, None),
    };
    let args: Vec<&str> = args.map(|a| a.split(',').map(str::trim).collect()).unwrap_or_default();
    let no_args = |spec: LayerSpec| {
        if args.is_empty() {
            Ok(spec)
        } else {
            Err(Error::Config(format!("{name} takes no arguments")))
        }
    };
    match name.trim() {
        "conv3d" => {
            let (kernel, filters) = match args.as_slice() {
                [k, f] | [k, f, _] => (triple(k)?, positive(f)?),
                _ => return Err(Error::Config(format!("conv3d needs (TxHxW,filters[,stride=TxHxW]): {token:?}"))),
            };
            let stride = match args.get(2) {
                Some(s) => triple(s.strip_prefix("stride=").ok_or_else(|| Error::Config(format!("bad conv3d option {s:?}")))?)?,
                None => [1, 1, 1],
            };
            Ok(LayerSpec::Conv3d { kernel, filters, stride })
        }
        "max_pool3d" | "maxpool3d" | "maxpool" => match args.as_slice() {
            [p] => Ok(LayerSpec::MaxPool3d { pool: triple(p)? }),
            _ => Err(Error::Config(format!("max_pool3d needs (TxHxW): {token:?}"))),
        },
        "dense" => match args.as_slice() {
            ["classes"] => Ok(LayerSpec::Dense { units: Units::Classes }),
            [u] => Ok(LayerSpec::Dense { units: Units::Fixed(positive(u)?) }),
            _ => Err(Error::Config(format!("dense needs (units): {token:?}"))),
        },
        "dropout" => match args.as_slice() {
            [] => Ok(LayerSpec::Dropout { rate: None }),
            [r] => {
                let rate: f64 = r.parse().map_err(|_| Error::Config(format!("bad dropout rate {r:?}")))?;
                if !(0.0..1.0).contains(&rate) {
                    return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
                }
                Ok(LayerSpec::Dropout { rate: Some(rate) })
            }
            _ => Err(Error::Config(format!("dropout takes at most one argument: {token:?}"))),
        },
        "relu" => no_args(LayerSpec::Relu),
        "batch_norm" | "batchnorm" => no_args(LayerSpec::BatchNorm),
        "flatten" => no_args(LayerSpec::Flatten),
        "softmax" => no_args(LayerSpec::Softmax),
        other => Err(Error::Config(format!("unknown layer {other:?}"))),
    }
}

impl NetworkSpec {
    /// Structural checks that do not need the input shape.
    pub fn validate(&self) -> Result<()> {
        let softmaxes = self.layers.iter().filter(|l| matches!(l, LayerSpec::Softmax)).count();
        if softmaxes != 1 || !matches!(self.layers.last(), Some(LayerSpec::Softmax)) {
            return Err(Error::Config("network needs exactly one softmax, as the last layer".into()));
        }
        let n = self.layers.len();
        if n < 2 || !matches!(self.layers[n - 2], LayerSpec::Dense { .. }) {
            return Err(Error::Config("softmax must follow a dense layer".into()));
        }
        let mut flat = false;
        for l in &self.layers {
            match l {
                LayerSpec::Conv3d { .. } | LayerSpec::MaxPool3d { .. } if flat => {
                    return Err(Error::Config("volume layers cannot follow flatten".into()))
                }
                LayerSpec::Dense { .. } if !flat => {
                    return Err(Error::Config("dense layers need a preceding flatten".into()))
                }
                LayerSpec::Flatten if flat => return Err(Error::Config("flatten appears twice".into())),
                LayerSpec::Flatten => flat = true,
                _ => {}
            }
        }
        Ok(())
    }

    pub fn uses_dropout(&self) -> bool {
        self.layers.iter().any(|l| matches!(l, LayerSpec::Dropout { .. }))
    }
}

impl FromStr for NetworkSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Err(invalid("empty network spec"));
        }
        let layers = s.split("->").map(parse_layer).collect::<Result<Vec<_>>>()?;
        let spec = NetworkSpec { layers };
        spec.validate()?;
        Ok(spec)
    }
}

fn fmt_triple(t: &[usize; 3]) -> String {
    format!("{}x{}x{}", t[0], t[1], t[2])
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Conv3d { kernel, filters, stride } if *stride == [1, 1, 1] => {
                write!(f, "conv3d({},{filters})", fmt_triple(kernel))
            }
            LayerSpec::Conv3d { kernel, filters, stride } => {
                write!(f, "conv3d({},{filters},stride={})", fmt_triple(kernel), fmt_triple(stride))
            }
            LayerSpec::Relu => write!(f, "relu"),
            LayerSpec::BatchNorm => write!(f, "batch_norm"),
            LayerSpec::MaxPool3d { pool } => write!(f, "max_pool3d({})", fmt_triple(pool)),
            LayerSpec::Flatten => write!(f, "flatten"),
            LayerSpec::Dense { units: Units::Fixed(u) } => write!(f, "dense({u})"),
            LayerSpec::Dense { units: Units::Classes } => write!(f, "dense(classes)"),
            LayerSpec::Dropout { rate: None } => write!(f, "dropout"),
            LayerSpec::Dropout { rate: Some(r) } => write!(f, "dropout({r})"),
            LayerSpec::Softmax => write!(f, "softmax"),
        }
    }
}

impl fmt::Display for NetworkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.layers.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(" -> "))
    }
}
