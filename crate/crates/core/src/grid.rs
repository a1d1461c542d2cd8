use crate::error::{Error, Result};

/// Real-valued image indexed `[l][n]` (scan line, depth sample).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    num_lines: usize,
    num_depth: usize,
    values: Vec<f64>,
}

impl Grid {
    pub fn new(num_lines: usize, num_depth: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_lines * num_depth {
            return Err(Error::DimensionMismatch(format!(
                "grid holds {} values, expected {num_lines} x {num_depth}",
                values.len()
            )));
        }
        Ok(Self {
            num_lines,
            num_depth,
            values,
        })
    }

    pub fn from_fn(num_lines: usize, num_depth: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(num_lines * num_depth);
        for l in 0..num_lines {
            for n in 0..num_depth {
                values.push(f(l, n));
            }
        }
        Self {
            num_lines,
            num_depth,
            values,
        }
    }

    /// `(L, N)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.num_lines, self.num_depth)
    }

    #[inline]
    pub fn get(&self, l: usize, n: usize) -> f64 {
        self.values[l * self.num_depth + n]
    }

    pub fn set(&mut self, l: usize, n: usize, v: f64) {
        self.values[l * self.num_depth + n] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn line(&self, l: usize) -> &[f64] {
        &self.values[l * self.num_depth..(l + 1) * self.num_depth]
    }

    /// Sub-image over depth samples `n0..n1`.
    pub fn crop_depth(&self, n0: usize, n1: usize) -> Result<Self> {
        if n0 >= n1 || n1 > self.num_depth {
            return Err(Error::InvalidArgument(format!(
                "depth crop {n0}..{n1} outside 0..{}",
                self.num_depth
            )));
        }
        Ok(Self::from_fn(self.num_lines, n1 - n0, |l, n| self.get(l, n + n0)))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            num_lines: self.num_lines,
            num_depth: self.num_depth,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}
