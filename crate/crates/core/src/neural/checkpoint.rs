//! `UDBF` checkpoint files. The byte layout is described in
//! `docs/FORMATS.md`.

use std::path::Path;

use super::network::{Mode, Network, NetworkConfig};
use crate::error::{Error, Result};

pub const UDBF_MAGIC: &[u8; 4] = b"UDBF";
pub const UDBF_VERSION: u16 = 1;

/// A trained network with the scale factors applied to its inputs and
/// outputs and the loss history that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: Network<f32>,
    /// Multiplies aligned channel samples before they enter the network.
    pub input_scale: f32,
    /// Network outputs are divided by this to recover I/Q in RF units.
    pub output_scale: f32,
    pub epoch_losses: Vec<f64>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .ok_or_else(|| Error::DimensionOverflow("checkpoint offset".into()))?;
        if end > self.bytes.len() {
            return Err(Error::Truncated {
                expected: end as u64,
                found: self.bytes.len() as u64,
            });
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f32s(&mut self, out: &mut [f32]) -> Result<()> {
        let raw = self.take(out.len() * 4)?;
        for (v, b) in out.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes(b.try_into().expect("4 bytes"));
        }
        Ok(())
    }
}

fn u32_field(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::DimensionOverflow(format!("checkpoint field {v}")))
}

impl Checkpoint {
    pub fn encode(&self) -> Result<Vec<u8>> {
        let c = self.network.config();
        let mut out = Vec::new();
        out.extend_from_slice(UDBF_MAGIC);
        out.extend_from_slice(&UDBF_VERSION.to_le_bytes());
        for v in [
            c.num_conv_layers,
            c.hidden_channels,
            c.input_channels,
            c.output_channels,
            c.input_height,
            c.input_width,
            c.skip_concat_at,
        ] {
            out.extend_from_slice(&u32_field(v)?.to_le_bytes());
        }
        out.push(c.relu as u8);
        out.extend_from_slice(&c.batchnorm_epsilon.to_le_bytes());
        out.extend_from_slice(&self.input_scale.to_le_bytes());
        out.extend_from_slice(&self.output_scale.to_le_bytes());
        out.extend_from_slice(&u32_field(self.epoch_losses.len())?.to_le_bytes());
        for l in &self.epoch_losses {
            out.extend_from_slice(&l.to_le_bytes());
        }
        let blobs = self.blobs();
        let count: usize = blobs.iter().map(|b| b.len()).sum();
        out.extend_from_slice(&(count as u64).to_le_bytes());
        for blob in blobs {
            for v in blob {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    /// Parameter blobs in file order.
    fn blobs(&self) -> Vec<&[f32]> {
        let mut out = Vec::new();
        for layer in &self.network.layers {
            out.push(layer.conv.weight.as_slice());
            out.push(layer.conv.bias.as_slice());
            if let Some(bn) = &layer.bn {
                out.extend([
                    bn.gamma.as_slice(),
                    bn.beta.as_slice(),
                    bn.running_mean.as_slice(),
                    bn.running_var.as_slice(),
                ]);
            }
        }
        out
    }

    /// Decodes a checkpoint; the network comes back in evaluation mode.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != UDBF_MAGIC {
            return Err(Error::Format("not a UDBF checkpoint (bad magic)".into()));
        }
        let version = r.u16()?;
        if version != UDBF_VERSION {
            return Err(Error::Format(format!("unsupported UDBF version {version}")));
        }
        let mut dims = [0usize; 7];
        for d in &mut dims {
            *d = r.u32()? as usize;
        }
        let relu = match r.u8()? {
            0 => false,
            1 => true,
            other => return Err(Error::Format(format!("bad relu flag {other}"))),
        };
        let config = NetworkConfig {
            num_conv_layers: dims[0],
            hidden_channels: dims[1],
            input_channels: dims[2],
            output_channels: dims[3],
            input_height: dims[4],
            input_width: dims[5],
            skip_concat_at: dims[6],
            batchnorm_epsilon: r.f64()?,
            relu,
        };
        config
            .validate()
            .map_err(|e| Error::Format(format!("checkpoint config invalid: {e}")))?;
        let input_scale = r.f32()?;
        let output_scale = r.f32()?;
        if !(input_scale.is_finite() && input_scale > 0.0 && output_scale.is_finite() && output_scale > 0.0) {
            return Err(Error::Format("checkpoint scales must be positive and finite".into()));
        }
        let epochs = r.u32()? as usize;
        let mut epoch_losses = Vec::with_capacity(epochs.min(1 << 16));
        for _ in 0..epochs {
            epoch_losses.push(r.f64()?);
        }
        let count = r.u64()?;
        let expected = config
            .num_parameters()
            .checked_add(2 * config.hidden_channels * (config.num_conv_layers - 1))
            .ok_or_else(|| Error::DimensionOverflow("checkpoint parameter count".into()))?;
        if count != expected as u64 {
            return Err(Error::Format(format!(
                "checkpoint holds {count} values, config needs {expected}"
            )));
        }
        let mut network = Network::<f32>::zeros(config)?;
        for layer in &mut network.layers {
            r.f32s(&mut layer.conv.weight)?;
            r.f32s(&mut layer.conv.bias)?;
            if let Some(bn) = &mut layer.bn {
                r.f32s(&mut bn.gamma)?;
                r.f32s(&mut bn.beta)?;
                r.f32s(&mut bn.running_mean)?;
                r.f32s(&mut bn.running_var)?;
                if bn.running_var.iter().any(|&v| !(v > 0.0)) {
                    return Err(Error::Format("checkpoint running variance must be positive".into()));
                }
            }
        }
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after checkpoint",
                bytes.len() - r.pos
            )));
        }
        if !network.is_finite() {
            return Err(Error::Format("checkpoint contains non-finite parameters".into()));
        }
        network.set_mode(Mode::Eval);
        Ok(Self {
            network,
            input_scale,
            output_scale,
            epoch_losses,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}
