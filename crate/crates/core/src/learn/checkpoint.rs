//! Binary network files: magic, header text (spec, input dims, classes),
//! then little-endian f32 tensors in layer order. A JSON sidecar holds the
//! training configuration.

use std::fs;
use std::path::{Path, PathBuf};

use super::network::{Layer, Network};
use super::spec::{LayerSpec, NetworkSpec};
use super::train::{TrainConfig, TrainState};
use crate::error::{io_err, Error, Result};

pub const MAGIC: &[u8; 8] = b"TACGNET1";

fn resolved_spec(net: &Network<f32>) -> NetworkSpec {
    let mut layers = net.spec.layers.clone();
    for (l, actual) in layers.iter_mut().zip(&net.layers) {
        if let (LayerSpec::Dropout { rate }, Layer::Dropout(r)) = (l, actual) {
            *rate = Some(*r);
        }
    }
    NetworkSpec { layers }
}

pub fn encode_network(net: &Network<f32>) -> Vec<u8> {
    let [t, h, w, c] = net.input;
    let header = format!("{}\ninput={t}x{h}x{w}x{c}\nclasses={}\n", resolved_spec(net), net.classes);
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    let state = net.state();
    out.extend_from_slice(&(state.len() as u32).to_le_bytes());
    for tensor in &state {
        out.extend_from_slice(&(tensor.len() as u32).to_le_bytes());
        for v in tensor {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("truncated network file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }
}

fn header_value<'a>(lines: &[&'a str], key: &str) -> Result<&'a str> {
    lines
        .iter()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::Format(format!("network header lacks {key}")))
}

pub fn decode_network(bytes: &[u8]) -> Result<Network<f32>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Format("not a network file (bad magic)".into()));
    }
    let hlen = r.u32()?;
    let header = std::str::from_utf8(r.take(hlen)?).map_err(|_| Error::Format("header is not UTF-8".into()))?;
    let lines: Vec<&str> = header.lines().collect();
    let spec: NetworkSpec = lines
        .first()
        .ok_or_else(|| Error::Format("empty network header".into()))?
        .parse()
        .map_err(|e| Error::Format(format!("bad spec in network file: {e}")))?;
    let dims: Vec<usize> = header_value(&lines, "input")?
        .split('x')
        .map(|d| d.parse().map_err(|_| Error::Format("bad input dims".into())))
        .collect::<Result<_>>()?;
    let input: [usize; 4] = dims.try_into().map_err(|_| Error::Format("input needs 4 dims".into()))?;
    let classes: usize = header_value(&lines, "classes")?
        .parse()
        .map_err(|_| Error::Format("bad class count".into()))?;
    let mut net = Network::<f32>::build(&spec, input, classes, 0.0, 1.0, 0)
        .map_err(|e| Error::Format(format!("network file describes an invalid network: {e}")))?;
    let count = r.u32()?;
    let mut state = Vec::with_capacity(count);
    for _ in 0..count {
        let n = r.u32()?;
        let raw = r.take(n.checked_mul(4).ok_or_else(|| Error::Format("tensor too large".into()))?)?;
        state.push(raw.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect());
    }
    if r.pos != bytes.len() {
        return Err(Error::Format("trailing bytes in network file".into()));
    }
    net.load_state(&state).map_err(|e| Error::Format(e.to_string()))?;
    Ok(net)
}

pub fn config_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

pub fn resume_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".resume.json");
    PathBuf::from(s)
}

pub fn save_network(path: &Path, net: &Network<f32>, cfg: &TrainConfig) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, encode_network(net)).map_err(io_err(path))?;
    let side = config_sidecar(path);
    fs::write(&side, serde_json::to_string_pretty(cfg)? + "\n").map_err(io_err(&side))?;
    Ok(())
}

pub fn load_network(path: &Path) -> Result<(Network<f32>, Option<TrainConfig>)> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let net = decode_network(&bytes)?;
    let side = config_sidecar(path);
    let cfg = match fs::read_to_string(&side) {
        Ok(text) => Some(serde_json::from_str(&text)?),
        Err(_) => None,
    };
    Ok((net, cfg))
}

pub fn save_train_state(path: &Path, state: &TrainState) -> Result<()> {
    let side = resume_sidecar(path);
    fs::write(&side, serde_json::to_string(state)?).map_err(io_err(&side))
}

pub fn load_train_state(path: &Path) -> Result<TrainState> {
    let side = resume_sidecar(path);
    let text = fs::read_to_string(&side).map_err(io_err(&side))?;
    Ok(serde_json::from_str(&text)?)
}
