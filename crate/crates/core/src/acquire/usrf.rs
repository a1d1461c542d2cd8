//! `USRF` binary container for one RF frame.
//!
//! ```text
//! offset  size       field
//! 0       4          magic "USRF"
//! 4       2          format version (u16 LE), currently 1
//! 6       4 * 3      L, J, N (u32 LE)
//! 18      8 * 10     probe scalars (f64 LE) in declaration order:
//!                    carrier_freq_hz, sampling_freq_hz, num_elements,
//!                    num_tx_elements, num_te_events, num_rx_active, pitch_m,
//!                    element_width_m, sound_speed_m_s, num_depth_samples
//! 98      4 * L*J*N  samples (f32 LE) in [l][j][n] order
//! ```

use std::path::Path;

use super::{ProbeConfig, RFFrame};
use crate::error::{Error, Result};

pub const USRF_MAGIC: &[u8; 4] = b"USRF";
pub const USRF_VERSION: u16 = 1;

const HEADER_LEN: usize = 4 + 2 + 3 * 4 + 10 * 8;

pub fn encode_rf(frame: &RFFrame) -> Vec<u8> {
    let p = frame.probe();
    let (nl, nj, nn) = frame.dims();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * frame.data().len());
    out.extend_from_slice(USRF_MAGIC);
    out.extend_from_slice(&USRF_VERSION.to_le_bytes());
    for d in [nl, nj, nn] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    let scalars = [
        p.carrier_freq_hz,
        p.sampling_freq_hz,
        p.num_elements as f64,
        p.num_tx_elements as f64,
        p.num_te_events as f64,
        p.num_rx_active as f64,
        p.pitch_m,
        p.element_width_m,
        p.sound_speed_m_s,
        p.num_depth_samples as f64,
    ];
    for s in scalars {
        out.extend_from_slice(&s.to_le_bytes());
    }
    for v in frame.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn read_f64(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

fn as_count(v: f64, name: &str) -> Result<usize> {
    if v.fract() != 0.0 || !(0.0..=u32::MAX as f64).contains(&v) {
        return Err(Error::Format(format!("probe field {name} is not a count: {v}")));
    }
    Ok(v as usize)
}

pub fn decode_rf(bytes: &[u8]) -> Result<RFFrame> {
    if bytes.len() < 4 || &bytes[..4] != USRF_MAGIC {
        return Err(Error::Format("missing USRF magic".into()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != USRF_VERSION {
        return Err(Error::Format(format!("unsupported USRF version {version}")));
    }
    let nl = read_u32(bytes, 6) as u64;
    let nj = read_u32(bytes, 10) as u64;
    let nn = read_u32(bytes, 14) as u64;
    let payload = nl
        .checked_mul(nj)
        .and_then(|v| v.checked_mul(nn))
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(HEADER_LEN as u64))
        .filter(|&v| usize::try_from(v).is_ok())
        .ok_or_else(|| Error::DimensionOverflow(format!("frame of {nl} x {nj} x {nn} samples")))?;
    if (bytes.len() as u64) < payload {
        return Err(Error::Truncated {
            expected: payload,
            found: bytes.len() as u64,
        });
    }
    if (bytes.len() as u64) > payload {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            bytes.len() as u64 - payload
        )));
    }

    let f = |i: usize| read_f64(bytes, 18 + 8 * i);
    let probe = ProbeConfig {
        carrier_freq_hz: f(0),
        sampling_freq_hz: f(1),
        num_elements: as_count(f(2), "num_elements")?,
        num_tx_elements: as_count(f(3), "num_tx_elements")?,
        num_te_events: as_count(f(4), "num_te_events")?,
        num_rx_active: as_count(f(5), "num_rx_active")?,
        pitch_m: f(6),
        element_width_m: f(7),
        sound_speed_m_s: f(8),
        num_depth_samples: as_count(f(9), "num_depth_samples")?,
    };
    if (
        probe.num_te_events as u64,
        probe.num_rx_active as u64,
        probe.num_depth_samples as u64,
    ) != (nl, nj, nn)
    {
        return Err(Error::Format(format!(
            "header dimensions {nl} x {nj} x {nn} disagree with probe block"
        )));
    }
    probe
        .validate()
        .map_err(|e| Error::Format(format!("probe block: {e}")))?;

    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    RFFrame::new(probe, data)
}

pub fn write_rf(frame: &RFFrame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_rf(frame)).map_err(|e| Error::io(path, e))
}

pub fn read_rf(path: impl AsRef<Path>) -> Result<RFFrame> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_rf(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_frame() -> RFFrame {
        let probe = ProbeConfig {
            num_te_events: 2,
            num_rx_active: 3,
            num_depth_samples: 4,
            ..ProbeConfig::default()
        };
        let data = (0..24).map(|i| i as f32 * 0.5 - 3.0).collect();
        RFFrame::new(probe, data).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = encode_rf(&tiny_frame());
        assert_eq!(&bytes[..4], b"USRF");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(read_u32(&bytes, 6), 2);
        assert_eq!(read_u32(&bytes, 10), 3);
        assert_eq!(read_u32(&bytes, 14), 4);
        assert_eq!(read_f64(&bytes, 18), 8.48e6);
        assert_eq!(bytes.len(), HEADER_LEN + 24 * 4);
        assert_eq!(&bytes[HEADER_LEN..HEADER_LEN + 4], &(-3.0f32).to_le_bytes());
    }

    #[test]
    fn bad_magic_is_a_format_error() {
        let mut bytes = encode_rf(&tiny_frame());
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_rf(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn short_payload_is_a_truncation_error() {
        let bytes = encode_rf(&tiny_frame());
        let cut = &bytes[..bytes.len() - 5];
        assert!(matches!(
            decode_rf(cut),
            Err(Error::Truncated { expected, found }) if expected == bytes.len() as u64 && found == cut.len() as u64
        ));
        assert!(matches!(decode_rf(&bytes[..10]), Err(Error::Truncated { .. })));
    }

    #[test]
    fn huge_dimensions_overflow() {
        let mut bytes = encode_rf(&tiny_frame());
        for at in [6, 10, 14] {
            bytes[at..at + 4].copy_from_slice(&u32::MAX.to_le_bytes());
        }
        let err = decode_rf(&bytes).unwrap_err();
        if usize::BITS == 64 {
            // u32::MAX^3 * 4 overflows u64.
            assert!(matches!(err, Error::DimensionOverflow(_)), "{err}");
        }
    }

    #[test]
    fn inconsistent_probe_block_is_rejected() {
        let mut bytes = encode_rf(&tiny_frame());
        // num_te_events lives in probe scalar 4.
        bytes[18 + 32..18 + 40].copy_from_slice(&5.0f64.to_le_bytes());
        assert!(matches!(decode_rf(&bytes), Err(Error::Format(_))));
    }
}
