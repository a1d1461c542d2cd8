//! Receive-channel subsampling masks.
//!
//! Both schemes always keep the two channels straddling the scan line axis
//! and draw the rest uniformly at random. The variable scheme redraws the
//! pattern for every depth plane; the fixed scheme uses one pattern for all.

use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beamform::TimeAlignedCube;
use crate::error::{Error, Result};

/// Channel counts evaluated by default.
pub const STANDARD_RATES: [usize; 6] = [64, 32, 24, 16, 8, 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Variable,
    Fixed,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Variable => "variable",
            Scheme::Fixed => "fixed",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variable" => Ok(Scheme::Variable),
            "fixed" => Ok(Scheme::Fixed),
            other => Err(Error::InvalidArgument(format!("unknown sampling scheme {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingMask {
    scheme: Scheme,
    num_rx: usize,
    num_depth: usize,
    n_keep: usize,
    /// `[n][j]` for the variable scheme, `[j]` for the fixed one.
    keep: Vec<bool>,
}

impl SamplingMask {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn num_rx(&self) -> usize {
        self.num_rx
    }

    pub fn num_depth(&self) -> usize {
        self.num_depth
    }

    pub fn n_keep(&self) -> usize {
        self.n_keep
    }

    #[inline]
    pub fn keep(&self, n: usize, j: usize) -> bool {
        match self.scheme {
            Scheme::Variable => self.keep[n * self.num_rx + j],
            Scheme::Fixed => self.keep[j],
        }
    }

    /// Pattern of depth plane `n`.
    pub fn plane(&self, n: usize) -> &[bool] {
        match self.scheme {
            Scheme::Variable => &self.keep[n * self.num_rx..(n + 1) * self.num_rx],
            Scheme::Fixed => &self.keep,
        }
    }

    /// One line of `0`/`1` characters per depth plane.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.num_depth * (self.num_rx + 1));
        for n in 0..self.num_depth {
            for &k in self.plane(n) {
                out.push(if k { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`SamplingMask::to_text`] output. Identical planes are read
    /// back as a fixed mask.
    pub fn from_text(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if rows.is_empty() {
            return Err(Error::Format("mask text is empty".into()));
        }
        let num_rx = rows[0].trim().len();
        let mut keep = Vec::with_capacity(rows.len() * num_rx);
        let mut n_keep = None;
        for (n, row) in rows.iter().enumerate() {
            let row = row.trim();
            if row.len() != num_rx {
                return Err(Error::Format(format!("mask row {n} has {} channels", row.len())));
            }
            let mut count = 0;
            for c in row.chars() {
                match c {
                    '1' => {
                        keep.push(true);
                        count += 1;
                    }
                    '0' => keep.push(false),
                    other => return Err(Error::Format(format!("bad mask character {other:?}"))),
                }
            }
            match n_keep {
                None => n_keep = Some(count),
                Some(k) if k != count => {
                    return Err(Error::Format(format!("mask row {n} keeps {count} channels, not {k}")))
                }
                _ => {}
            }
        }
        let num_depth = rows.len();
        let fixed = keep.chunks(num_rx).all(|r| r == &keep[..num_rx]);
        if fixed {
            keep.truncate(num_rx);
        }
        Ok(Self {
            scheme: if fixed { Scheme::Fixed } else { Scheme::Variable },
            num_rx,
            num_depth,
            n_keep: n_keep.unwrap_or(0),
            keep,
        })
    }
}

fn draw_plane(rng: &mut ChaCha8Rng, num_rx: usize, n_keep: usize, out: &mut Vec<bool>) {
    let (c0, c1) = (num_rx / 2 - 1, num_rx / 2);
    let start = out.len();
    out.resize(start + num_rx, false);
    let plane = &mut out[start..];
    plane[c0] = true;
    plane[c1] = true;
    for pick in index::sample(rng, num_rx - 2, n_keep - 2).into_iter() {
        // Skip over the two centre channels.
        let j = if pick >= c0 { pick + 2 } else { pick };
        plane[j] = true;
    }
}

pub fn make_mask(scheme: Scheme, n_keep: usize, num_rx: usize, num_depth: usize, seed: u64) -> Result<SamplingMask> {
    if num_rx < 2 || n_keep < 2 || n_keep > num_rx {
        return Err(Error::InvalidArgument(format!(
            "cannot keep {n_keep} of {num_rx} channels (need 2 <= n_keep <= J)"
        )));
    }
    if num_depth == 0 {
        return Err(Error::InvalidArgument("mask needs at least one depth plane".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planes = match scheme {
        Scheme::Variable => num_depth,
        Scheme::Fixed => 1,
    };
    let mut keep = Vec::with_capacity(planes * num_rx);
    for _ in 0..planes {
        draw_plane(&mut rng, num_rx, n_keep, &mut keep);
    }
    Ok(SamplingMask {
        scheme,
        num_rx,
        num_depth,
        n_keep,
        keep,
    })
}

/// Zeroes the channels the mask drops, keeping the full channel layout.
pub fn apply_mask(cube: &TimeAlignedCube, mask: &SamplingMask) -> Result<TimeAlignedCube> {
    let (nl, nj, nn) = cube.dims();
    if mask.num_rx != nj || (mask.scheme == Scheme::Variable && mask.num_depth != nn) {
        return Err(Error::DimensionMismatch(format!(
            "mask is {} planes x {} channels, cube has {nn} x {nj}",
            mask.num_depth, mask.num_rx
        )));
    }
    let mut out = cube.clone();
    let data = out.data_mut();
    for l in 0..nl {
        for j in 0..nj {
            let ch = &mut data[(l * nj + j) * nn..(l * nj + j + 1) * nn];
            for (n, v) in ch.iter_mut().enumerate() {
                if !mask.keep(n, j) {
                    *v = 0.0;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_rate_keeps_everything() {
        let m = make_mask(Scheme::Variable, 64, 64, 10, 3).unwrap();
        assert!((0..10).all(|n| m.plane(n).iter().all(|&k| k)));
    }

    #[test]
    fn four_channels_always_include_centre_pair() {
        for scheme in [Scheme::Variable, Scheme::Fixed] {
            let m = make_mask(scheme, 4, 64, 50, 11).unwrap();
            for n in 0..50 {
                assert_eq!(m.plane(n).iter().filter(|&&k| k).count(), 4);
                assert!(m.keep(n, 31) && m.keep(n, 32));
            }
        }
    }

    #[test]
    fn variable_planes_differ_fixed_do_not() {
        let v = make_mask(Scheme::Variable, 8, 64, 20, 5).unwrap();
        assert!((1..20).any(|n| v.plane(n) != v.plane(0)));
        let f = make_mask(Scheme::Fixed, 8, 64, 20, 5).unwrap();
        assert!((1..20).all(|n| f.plane(n) == f.plane(0)));
    }

    #[test]
    fn rejects_out_of_range_counts() {
        assert!(make_mask(Scheme::Fixed, 1, 64, 1, 0).is_err());
        assert!(make_mask(Scheme::Fixed, 65, 64, 1, 0).is_err());
        assert!(make_mask(Scheme::Fixed, 2, 64, 0, 0).is_err());
    }

    #[test]
    fn centre_only_mask_on_ones_sums_to_two() {
        let cube = TimeAlignedCube::from_fn(3, 8, 4, |_, _, _| 1.0).unwrap();
        let m = make_mask(Scheme::Variable, 2, 8, 4, 0).unwrap();
        let out = apply_mask(&cube, &m).unwrap();
        for l in 0..3 {
            for n in 0..4 {
                let s: f32 = (0..8).map(|j| out.get(l, j, n)).sum();
                assert_eq!(s, 2.0);
            }
        }
    }

    #[test]
    fn fixed_mask_broadcasts_over_any_depth() {
        let cube = TimeAlignedCube::from_fn(1, 8, 7, |_, j, n| (j + n) as f32 + 1.0).unwrap();
        let m = make_mask(Scheme::Fixed, 4, 8, 1, 9).unwrap();
        let out = apply_mask(&cube, &m).unwrap();
        for j in 0..8 {
            for n in 0..7 {
                let expected = if m.keep(0, j) { cube.get(0, j, n) } else { 0.0 };
                assert_eq!(out.get(0, j, n), expected);
            }
        }
    }

    #[test]
    fn mismatched_mask_is_rejected() {
        let cube = TimeAlignedCube::from_fn(1, 8, 7, |_, _, _| 1.0).unwrap();
        let m = make_mask(Scheme::Variable, 4, 8, 6, 9).unwrap();
        assert!(apply_mask(&cube, &m).is_err());
        let m = make_mask(Scheme::Fixed, 4, 16, 7, 9).unwrap();
        assert!(apply_mask(&cube, &m).is_err());
    }

    #[test]
    fn text_round_trip() {
        let v = make_mask(Scheme::Variable, 5, 12, 6, 2).unwrap();
        let text = v.to_text();
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().all(|l| l.len() == 12));
        assert_eq!(SamplingMask::from_text(&text).unwrap(), v);
        let f = make_mask(Scheme::Fixed, 5, 12, 6, 2).unwrap();
        assert_eq!(SamplingMask::from_text(&f.to_text()).unwrap(), f);
        assert!(SamplingMask::from_text("0110\n01x0\n").is_err());
    }
}
