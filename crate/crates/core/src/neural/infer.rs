use super::checkpoint::Checkpoint;
use super::network::{Mode, WINDOW_DEPTH};
use super::tensor::Tensor;
use crate::beamform::TimeAlignedCube;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::postproc::IQImage;

/// Windows pushed through the network per forward call.
const INFER_BATCH: usize = 64;

/// Start depths of the 3-deep windows covering `0..num_depth`: stride 3,
/// last window clamped to the end.
pub fn window_starts(num_depth: usize) -> Result<Vec<usize>> {
    if num_depth < WINDOW_DEPTH {
        return Err(Error::InvalidArgument(format!(
            "need at least {WINDOW_DEPTH} depth samples, got {num_depth}"
        )));
    }
    let mut starts: Vec<usize> = (0..=num_depth - WINDOW_DEPTH).step_by(WINDOW_DEPTH).collect();
    let last = num_depth - WINDOW_DEPTH;
    if *starts.last().expect("at least one window") != last {
        starts.push(last);
    }
    Ok(starts)
}

/// Network input for depths `n0..n0 + 3`: channel `j`, row `r`, column `l`
/// holds `scale * cube[l][j][n0 + r]`.
pub fn window_input(cube: &TimeAlignedCube, n0: usize, scale: f32) -> Result<Tensor<f32>> {
    let (nl, nj, nn) = cube.dims();
    if n0 + WINDOW_DEPTH > nn {
        return Err(Error::InvalidArgument(format!("window at {n0} runs past depth {nn}")));
    }
    let mut t = Tensor::zeros(nj, 1, WINDOW_DEPTH, nl);
    for l in 0..nl {
        for j in 0..nj {
            let ch = &cube.channel(l, j)[n0..n0 + WINDOW_DEPTH];
            for (r, &v) in ch.iter().enumerate() {
                t.data[(j * WINDOW_DEPTH + r) * nl + l] = scale * v;
            }
        }
    }
    Ok(t)
}

/// Training target for depths `n0..n0 + 3`: channels I and Q.
pub fn window_target(iq: &IQImage, n0: usize, scale: f32) -> Result<Tensor<f32>> {
    let (nl, nn) = iq.dims();
    if n0 + WINDOW_DEPTH > nn {
        return Err(Error::InvalidArgument(format!("window at {n0} runs past depth {nn}")));
    }
    let mut t = Tensor::zeros(2, 1, WINDOW_DEPTH, nl);
    for (c, g) in [&iq.i, &iq.q].into_iter().enumerate() {
        for l in 0..nl {
            for r in 0..WINDOW_DEPTH {
                t.data[(c * WINDOW_DEPTH + r) * nl + l] = scale * g.get(l, n0 + r) as f32;
            }
        }
    }
    Ok(t)
}

/// Reconstructs a full I/Q frame from an aligned (possibly masked) cube.
/// Windows run in depth order, so where the clamped last window overlaps
/// its predecessor the later one wins.
pub fn infer_frame(model: &Checkpoint, cube: &TimeAlignedCube) -> Result<IQImage> {
    let (nl, nj, nn) = cube.dims();
    let c = model.network.config();
    if nj != c.input_channels || nl != c.input_width {
        return Err(Error::DimensionMismatch(format!(
            "cube has {nl} lines x {nj} channels, network expects {} x {}",
            c.input_width, c.input_channels
        )));
    }
    let starts = window_starts(nn)?;
    let mut net = model.network.clone();
    net.set_mode(Mode::Eval);
    let out_scale = 1.0 / model.output_scale as f64;
    let mut i = vec![0.0; nl * nn];
    let mut q = vec![0.0; nl * nn];
    for chunk in starts.chunks(INFER_BATCH) {
        let windows = chunk
            .iter()
            .map(|&n0| window_input(cube, n0, model.input_scale))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Tensor<f32>> = windows.iter().collect();
        let y = net.forward(&Tensor::stack(&refs)?)?;
        for (b, &n0) in chunk.iter().enumerate() {
            for r in 0..WINDOW_DEPTH {
                for l in 0..nl {
                    i[l * nn + n0 + r] = y.at(0, b, r, l) as f64 * out_scale;
                    q[l * nn + n0 + r] = y.at(1, b, r, l) as f64 * out_scale;
                }
            }
        }
    }
    IQImage::new(Grid::new(nl, nn, i)?, Grid::new(nl, nn, q)?)
}
