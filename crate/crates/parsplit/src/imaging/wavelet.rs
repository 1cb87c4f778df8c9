//! CDF 9/7 biorthogonal wavelet frame via lifting.
//!
//! The analysis transform is the classical four-step lifting factorization
//! with whole-sample symmetric boundary extension, followed by the
//! scaling step and de-interleaving into approximation/detail halves.
//! Because the 9/7 pair is biorthogonal, the adjoint of the analysis map
//! is *not* its inverse; both are provided (the adjoint drives the
//! primal-dual iteration, the inverse validates the lifting scheme).

use crate::error::{Error, Result};
use crate::linop::LinearMap;

const ALPHA: f64 = -1.586134342059924;
const BETA: f64 = -0.052980118572961;
const GAMMA: f64 = 0.882911075530934;
const DELTA: f64 = 0.443506852043971;
const ZETA: f64 = 1.149604398860241;

/// Lifting step updating odd samples from even neighbors, with the
/// symmetric reflection `x[n] -> x[n-2]` folded into the last sample.
fn lift_odd(x: &mut [f64], c: f64) {
    let n = x.len();
    let mut i = 1;
    while i + 1 < n {
        x[i] += c * (x[i - 1] + x[i + 1]);
        i += 2;
    }
    // n even: last sample n-1 is odd, mirrored neighbor is x[n-2]
    x[n - 1] += 2.0 * c * x[n - 2];
}

/// Lifting step updating even samples from odd neighbors, with the
/// reflection `x[-1] -> x[1]` folded into the first sample.
fn lift_even(x: &mut [f64], c: f64) {
    let n = x.len();
    x[0] += 2.0 * c * x[1];
    let mut i = 2;
    while i + 1 < n {
        x[i] += c * (x[i - 1] + x[i + 1]);
        i += 2;
    }
}

/// Transpose of [`lift_odd`]: evens gather from odd neighbors, the
/// mirrored boundary contribution doubling the last odd sample.
fn lift_odd_adj(x: &mut [f64], c: f64) {
    let n = x.len();
    let snapshot: Vec<f64> = x.iter().copied().collect();
    x[0] += c * snapshot[1];
    let mut j = 2;
    while j + 1 < n {
        x[j] += c * (snapshot[j - 1] + snapshot[j + 1]);
        j += 2;
    }
    if n >= 2 {
        x[n - 2] += c * snapshot[n - 1]; // second term of the pair (j-1, j+1) at j = n-2
    }
}

/// Transpose of [`lift_even`]: odds gather from even neighbors, the
/// boundary factor 2 landing on the first even sample.
fn lift_even_adj(x: &mut [f64], c: f64) {
    let n = x.len();
    let snapshot: Vec<f64> = x.iter().copied().collect();
    x[1] += c * (2.0 * snapshot[0] + snapshot[2]);
    let mut j = 3;
    while j + 1 < n {
        x[j] += c * (snapshot[j - 1] + snapshot[j + 1]);
        j += 2;
    }
    x[n - 1] += c * snapshot[n - 2];
}

fn scale(x: &mut [f64]) {
    for (i, v) in x.iter_mut().enumerate() {
        if i % 2 == 0 {
            *v *= ZETA;
        } else {
            *v /= ZETA;
        }
    }
}

fn unscale(x: &mut [f64]) {
    for (i, v) in x.iter_mut().enumerate() {
        if i % 2 == 0 {
            *v /= ZETA;
        } else {
            *v *= ZETA;
        }
    }
}

fn deinterleave(x: &[f64], out: &mut [f64]) {
    let half = x.len() / 2;
    for i in 0..half {
        out[i] = x[2 * i];
        out[half + i] = x[2 * i + 1];
    }
}

fn interleave(x: &[f64], out: &mut [f64]) {
    let half = x.len() / 2;
    for i in 0..half {
        out[2 * i] = x[i];
        out[2 * i + 1] = x[half + i];
    }
}

/// One level of 1-D analysis in place (`scratch` same length as `x`).
pub fn analysis_1d(x: &mut [f64], scratch: &mut [f64]) {
    lift_odd(x, ALPHA);
    lift_even(x, BETA);
    lift_odd(x, GAMMA);
    lift_even(x, DELTA);
    scale(x);
    deinterleave(x, scratch);
    x.copy_from_slice(scratch);
}

/// Adjoint of [`analysis_1d`]: transposed steps in reverse order.
pub fn analysis_adjoint_1d(x: &mut [f64], scratch: &mut [f64]) {
    interleave(x, scratch);
    x.copy_from_slice(scratch);
    scale(x); // the scaling step is diagonal, hence self-adjoint
    lift_even_adj(x, DELTA);
    lift_odd_adj(x, GAMMA);
    lift_even_adj(x, BETA);
    lift_odd_adj(x, ALPHA);
}

/// Exact inverse of [`analysis_1d`] (synthesis with the dual filters).
pub fn synthesis_1d(x: &mut [f64], scratch: &mut [f64]) {
    interleave(x, scratch);
    x.copy_from_slice(scratch);
    unscale(x);
    lift_even(x, -DELTA);
    lift_odd(x, -GAMMA);
    lift_even(x, -BETA);
    lift_odd(x, -ALPHA);
}

/// Applies `f` to the leading `rows x cols` block of a column-major
/// `height`-stride image, first down every column, then along every row.
fn for_each_line(
    pixels: &mut [f64],
    height: usize,
    rows: usize,
    cols: usize,
    mut f: impl FnMut(&mut [f64], &mut [f64]),
    row_major_first: bool,
) {
    let mut line = vec![0.0; rows.max(cols)];
    let mut scratch = vec![0.0; rows.max(cols)];
    let order: [bool; 2] = if row_major_first {
        [true, false]
    } else {
        [false, true]
    };
    for along_rows in order {
        if along_rows {
            for i in 0..rows {
                for j in 0..cols {
                    line[j] = pixels[j * height + i];
                }
                f(&mut line[..cols], &mut scratch[..cols]);
                for j in 0..cols {
                    pixels[j * height + i] = line[j];
                }
            }
        } else {
            for j in 0..cols {
                let col = &mut pixels[j * height..j * height + rows];
                f(col, &mut scratch[..rows]);
            }
        }
    }
}

/// Multilevel 2-D analysis of a column-major image, in place.
pub fn analysis_2d(pixels: &mut [f64], width: usize, height: usize, levels: usize) {
    for lev in 0..levels {
        let rows = height >> lev;
        let cols = width >> lev;
        for_each_line(pixels, height, rows, cols, |l, s| analysis_1d(l, s), false);
    }
}

/// Adjoint of [`analysis_2d`]: levels in reverse, each level undone by
/// adjoint row pass then adjoint column pass.
pub fn analysis_adjoint_2d(pixels: &mut [f64], width: usize, height: usize, levels: usize) {
    for lev in (0..levels).rev() {
        let rows = height >> lev;
        let cols = width >> lev;
        for_each_line(
            pixels,
            height,
            rows,
            cols,
            |l, s| analysis_adjoint_1d(l, s),
            true,
        );
    }
}

/// Exact inverse of [`analysis_2d`].
pub fn synthesis_2d(pixels: &mut [f64], width: usize, height: usize, levels: usize) {
    for lev in (0..levels).rev() {
        let rows = height >> lev;
        let cols = width >> lev;
        for_each_line(pixels, height, rows, cols, |l, s| synthesis_1d(l, s), true);
    }
}

fn check_dims(levels: usize, width: usize, height: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::InvalidArgument(
            "wavelet: levels must be >= 1".into(),
        ));
    }
    let div = 1usize << levels;
    if width % div != 0 || height % div != 0 || width / div == 0 || height / div == 0 {
        return Err(Error::InvalidArgument(format!(
            "wavelet: {width}x{height} not divisible into {levels} levels"
        )));
    }
    Ok(())
}

/// Decomposition depth keeping the coarse band at least 8x8, capped at 4.
pub fn default_levels(width: usize, height: usize) -> usize {
    let mut levels = 0;
    let mut side = width.min(height);
    while levels < 4 && side % 2 == 0 && side / 2 >= 8 {
        side /= 2;
        levels += 1;
    }
    levels.max(1)
}

/// The analysis operator as a matrix-free linear map on column-major
/// images (square transform, `N -> N`).
pub fn wavelet_map(levels: usize, width: usize, height: usize) -> Result<LinearMap> {
    check_dims(levels, width, height)?;
    let n = width * height;
    Ok(LinearMap::new(
        n,
        n,
        format!("wavelet-9/7-{levels}"),
        move |x| {
            let mut p = x.to_vec();
            analysis_2d(&mut p, width, height, levels);
            p
        },
        move |u| {
            let mut p = u.to_vec();
            analysis_adjoint_2d(&mut p, width, height, levels);
            p
        },
    ))
}

/// Per-coefficient weights for a weighted frame: `weights[lev]` scales
/// every detail coefficient introduced at level `lev`, `approx_weight`
/// scales the coarse band.  Uniform weight 1 recovers [`wavelet_map`].
pub fn weighted_wavelet_map(
    levels: usize,
    width: usize,
    height: usize,
    detail_weights: &[f64],
    approx_weight: f64,
) -> Result<LinearMap> {
    check_dims(levels, width, height)?;
    if detail_weights.len() != levels {
        return Err(Error::InvalidArgument(format!(
            "wavelet: {} detail weights for {levels} levels",
            detail_weights.len()
        )));
    }
    let n = width * height;
    let mask = coefficient_mask(width, height, detail_weights, approx_weight);
    let mask2 = mask.clone();
    Ok(LinearMap::new(
        n,
        n,
        format!("weighted-wavelet-9/7-{levels}"),
        move |x| {
            let mut p = x.to_vec();
            analysis_2d(&mut p, width, height, levels);
            for (v, w) in p.iter_mut().zip(&mask) {
                *v *= w;
            }
            p
        },
        move |u| {
            let mut p: Vec<f64> = u.iter().zip(&mask2).map(|(v, w)| v * w).collect();
            analysis_adjoint_2d(&mut p, width, height, levels);
            p
        },
    ))
}

fn coefficient_mask(
    width: usize,
    height: usize,
    detail_weights: &[f64],
    approx_weight: f64,
) -> Vec<f64> {
    let mut mask = vec![approx_weight; width * height];
    // details introduced at level `lev` occupy the L-shaped region of the
    // (width >> lev) x (height >> lev) block outside its top-left quadrant
    for (lev, &w) in detail_weights.iter().enumerate() {
        let rows = height >> lev;
        let cols = width >> lev;
        for j in 0..cols {
            for i in 0..rows {
                if i >= rows / 2 || j >= cols / 2 {
                    mask[j * height + i] = w;
                }
            }
        }
    }
    mask
}
