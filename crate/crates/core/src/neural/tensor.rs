use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::error::{Error, Result};

/// Floating point element type of network tensors.
///
/// Training runs in `f32`; gradient checks run the same code in `f64` so that
/// finite differences are not swamped by rounding.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Send + Sync + Sum + AddAssign + SubAssign + MulAssign + 'static
{
    /// `c = a * b (+ c)` on dense row-major matrices, `a` is `m x k` (or its
    /// transpose when `trans_a`), `b` is `k x n` (or its transpose).
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: &[Self],
        trans_a: bool,
        b: &[Self],
        trans_b: bool,
        c: &mut [Self],
        accumulate: bool,
    );

    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("representable")
    }
}

fn gemm_strides(rows: usize, cols: usize, trans: bool) -> (isize, isize) {
    // Strides of the logical (rows x cols) matrix.
    if trans {
        (1, rows as isize)
    } else {
        (cols as isize, 1)
    }
}

macro_rules! impl_real {
    ($t:ty, $kernel:path) => {
        impl Real for $t {
            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                a: &[Self],
                trans_a: bool,
                b: &[Self],
                trans_b: bool,
                c: &mut [Self],
                accumulate: bool,
            ) {
                assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
                if m == 0 || n == 0 {
                    return;
                }
                let (rsa, csa) = gemm_strides(m, k, trans_a);
                let (rsb, csb) = gemm_strides(k, n, trans_b);
                let beta = if accumulate { 1.0 } else { 0.0 };
                // SAFETY: the slices cover every element addressed by the
                // given dimensions and strides (checked above).
                unsafe {
                    $kernel(
                        m,
                        k,
                        n,
                        1.0,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        beta,
                        c.as_mut_ptr(),
                        n as isize,
                        1,
                    );
                }
            }
        }
    };
}

impl_real!(f32, matrixmultiply::sgemm);
impl_real!(f64, matrixmultiply::dgemm);

/// Dense tensor stored channel-major as `[c][b][h][w]`.
///
/// Keeping channels outermost lets a convolution over the whole batch run
/// as one matrix product and keeps each batch-norm channel contiguous. With
/// `batch == 1` the layout is the usual `[c][h][w]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub channels: usize,
    pub batch: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(channels: usize, batch: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            batch,
            height,
            width,
            data: vec![T::zero(); channels * batch * height * width],
        }
    }

    pub fn from_vec(channels: usize, batch: usize, height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if channels == 0 || batch == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidArgument("tensor dimensions must be positive".into()));
        }
        if data.len() != channels * batch * height * width {
            return Err(Error::DimensionMismatch(format!(
                "tensor of {channels}x{batch}x{height}x{width} given {} values",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            batch,
            height,
            width,
            data,
        })
    }

    /// `(channels, batch, height, width)`.
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.channels, self.batch, self.height, self.width)
    }

    /// Elements per channel, `batch * height * width`.
    pub fn plane_len(&self) -> usize {
        self.batch * self.height * self.width
    }

    pub fn channel(&self, c: usize) -> &[T] {
        let p = self.plane_len();
        &self.data[c * p..(c + 1) * p]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [T] {
        let p = self.plane_len();
        &mut self.data[c * p..(c + 1) * p]
    }

    #[inline]
    pub fn at(&self, c: usize, b: usize, y: usize, x: usize) -> T {
        self.data[((c * self.batch + b) * self.height + y) * self.width + x]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Stacks single-sample tensors (`batch == 1`) into one batch.
    pub fn stack(samples: &[&Tensor<T>]) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot stack an empty batch".into()))?;
        let (c, _, h, w) = first.shape();
        if samples.iter().any(|s| s.shape() != (c, 1, h, w)) {
            return Err(Error::DimensionMismatch("stacked samples differ in shape".into()));
        }
        let hw = h * w;
        let b = samples.len();
        let mut data = Vec::with_capacity(c * b * hw);
        for ch in 0..c {
            for s in samples {
                data.extend_from_slice(&s.data[ch * hw..(ch + 1) * hw]);
            }
        }
        Self::from_vec(c, b, h, w, data)
    }

    /// Sample `b` as a single-sample tensor.
    pub fn sample(&self, b: usize) -> Self {
        let hw = self.height * self.width;
        let mut data = Vec::with_capacity(self.channels * hw);
        for c in 0..self.channels {
            let start = (c * self.batch + b) * hw;
            data.extend_from_slice(&self.data[start..start + hw]);
        }
        Self {
            channels: self.channels,
            batch: 1,
            height: self.height,
            width: self.width,
            data,
        }
    }

    /// Channel-wise concatenation; batch and spatial sizes must agree.
    pub fn concat_channels(&self, other: &Self) -> Result<Self> {
        if (self.batch, self.height, self.width) != (other.batch, other.height, other.width) {
            return Err(Error::DimensionMismatch("concatenated tensors differ in size".into()));
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(Self {
            channels: self.channels + other.channels,
            batch: self.batch,
            height: self.height,
            width: self.width,
            data,
        })
    }

    /// Splits off the first `channels` channels; the inverse of
    /// [`Tensor::concat_channels`].
    pub fn split_channels(mut self, channels: usize) -> (Self, Self) {
        let p = self.plane_len();
        let rest = self.data.split_off(channels * p);
        let tail = Self {
            channels: self.channels - channels,
            batch: self.batch,
            height: self.height,
            width: self.width,
            data: rest,
        };
        self.channels = channels;
        (self, tail)
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            channels: self.channels,
            batch: self.batch,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}
