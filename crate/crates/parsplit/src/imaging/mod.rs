//! Image-restoration operators and metrics: first/second-order finite
//! differences, motion blur, the 9/7 wavelet frame, the degradation model,
//! and PSNR/SSIM.
//!
//! Images are stored column-major: pixel `(i, j)` (row `i`, column `j`)
//! lives at index `j * height + i`, matching the convention of stacking
//! matrix columns into a vector.

pub mod io;
pub mod synth;
pub mod wavelet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linop::LinearMap;
use crate::vecmath;

/// Grayscale image, column-major, values nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height || width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image: {width}x{height} with {} pixels",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0.0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pixels[j * self.height + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.pixels[j * self.height + i] = v;
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// Blur direction for a 1-D point-spread function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// A 1-D point-spread function applied along one image axis.
#[derive(Debug, Clone)]
pub struct Psf {
    pub taps: Vec<f64>,
    /// Index of the tap aligned with the output pixel.
    pub anchor: usize,
    pub orientation: Orientation,
}

impl Psf {
    pub fn new(taps: Vec<f64>, anchor: usize, orientation: Orientation) -> Result<Self> {
        if taps.is_empty() || anchor >= taps.len() {
            return Err(Error::InvalidArgument(
                "psf: empty taps or anchor out of range".into(),
            ));
        }
        Ok(Self {
            taps,
            anchor,
            orientation,
        })
    }

    /// Uniform horizontal motion blur of the given length (weights `1/len`).
    pub fn motion(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidArgument("psf: zero-length motion".into()));
        }
        Self::new(
            vec![1.0 / len as f64; len],
            len / 2,
            Orientation::Horizontal,
        )
    }

    /// Single-tap identity PSF.
    pub fn identity() -> Self {
        Self {
            taps: vec![1.0],
            anchor: 0,
            orientation: Orientation::Horizontal,
        }
    }

    /// Parses `motion:N` (uniform horizontal N-tap) or a comma-separated
    /// tap list `taps:w1,w2,...` anchored at the middle.
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(n) = spec.strip_prefix("motion:") {
            let len: usize = n
                .parse()
                .map_err(|_| Error::Parse(format!("psf spec `{spec}`")))?;
            return Self::motion(len);
        }
        if let Some(list) = spec.strip_prefix("taps:") {
            let taps: std::result::Result<Vec<f64>, _> =
                list.split(',').map(str::parse::<f64>).collect();
            let taps = taps.map_err(|_| Error::Parse(format!("psf spec `{spec}`")))?;
            let anchor = taps.len() / 2;
            return Self::new(taps, anchor, Orientation::Horizontal);
        }
        Err(Error::Parse(format!("psf spec `{spec}`")))
    }
}

// --- first differences (forward, zero last column/row) -------------------

fn dh(x: &[f64], h: usize, w: usize, out: &mut [f64]) {
    for j in 0..w {
        for i in 0..h {
            out[j * h + i] = if j + 1 < w {
                x[(j + 1) * h + i] - x[j * h + i]
            } else {
                0.0
            };
        }
    }
}

fn dh_adj(u: &[f64], h: usize, w: usize, out: &mut [f64]) {
    out.fill(0.0);
    for j in 0..w - 1 {
        for i in 0..h {
            let v = u[j * h + i];
            out[(j + 1) * h + i] += v;
            out[j * h + i] -= v;
        }
    }
}

fn dv(x: &[f64], h: usize, w: usize, out: &mut [f64]) {
    for j in 0..w {
        for i in 0..h {
            out[j * h + i] = if i + 1 < h {
                x[j * h + i + 1] - x[j * h + i]
            } else {
                0.0
            };
        }
    }
}

fn dv_adj(u: &[f64], h: usize, w: usize, out: &mut [f64]) {
    out.fill(0.0);
    for j in 0..w {
        for i in 0..h - 1 {
            let v = u[j * h + i];
            out[j * h + i + 1] += v;
            out[j * h + i] -= v;
        }
    }
}

// --- second-family differences (backward, with the boundary convention
//     first column passes through and last column negates its left
//     neighbor) ----------------------------------------------------------

fn dth(x: &[f64], h: usize, w: usize, out: &mut [f64]) {
    for j in 0..w {
        for i in 0..h {
            out[j * h + i] = if j == 0 {
                x[i]
            } else if j + 1 < w {
                x[j * h + i] - x[(j - 1) * h + i]
            } else {
                -x[(j - 1) * h + i]
            };
        }
    }
}

fn dth_adj(u: &[f64], h: usize, w: usize, out: &mut [f64]) {
    out.fill(0.0);
    for i in 0..h {
        out[i] += u[i];
    }
    for j in 1..w - 1 {
        for i in 0..h {
            let v = u[j * h + i];
            out[j * h + i] += v;
            out[(j - 1) * h + i] -= v;
        }
    }
    for i in 0..h {
        out[(w - 2) * h + i] -= u[(w - 1) * h + i];
    }
}

fn dtv(x: &[f64], h: usize, w: usize, out: &mut [f64]) {
    for j in 0..w {
        for i in 0..h {
            out[j * h + i] = if i == 0 {
                x[j * h]
            } else if i + 1 < h {
                x[j * h + i] - x[j * h + i - 1]
            } else {
                -x[j * h + i - 1]
            };
        }
    }
}

fn dtv_adj(u: &[f64], h: usize, w: usize, out: &mut [f64]) {
    out.fill(0.0);
    for j in 0..w {
        out[j * h] += u[j * h];
        for i in 1..h - 1 {
            let v = u[j * h + i];
            out[j * h + i] += v;
            out[j * h + i - 1] -= v;
        }
        out[j * h + h - 2] -= u[j * h + h - 1];
    }
}

/// First-order difference analysis map `N -> 2N`: horizontal differences
/// stacked over vertical ones (each with a zero last column/row), so the
/// vector `l1,2` norm of the output is the isotropic total variation.
pub fn tv_map(width: usize, height: usize) -> Result<LinearMap> {
    if width < 2 || height < 2 {
        return Err(Error::InvalidArgument(format!(
            "tv: image {width}x{height} too small"
        )));
    }
    let n = width * height;
    Ok(LinearMap::new(
        n,
        2 * n,
        "tv",
        move |x| {
            let mut out = vec![0.0; 2 * n];
            dh(x, height, width, &mut out[..n]);
            dv(x, height, width, &mut out[n..]);
            out
        },
        move |u| {
            let mut out = vec![0.0; n];
            let mut tmp = vec![0.0; n];
            dh_adj(&u[..n], height, width, &mut out);
            dv_adj(&u[n..], height, width, &mut tmp);
            vecmath::axpy(&mut out, 1.0, &tmp);
            out
        },
    ))
}

/// Second-order difference map `N -> 3N`: channels
/// (horizontal-horizontal, symmetrized mixed / sqrt(2), vertical-vertical).
pub fn d2_map(width: usize, height: usize) -> Result<LinearMap> {
    if width < 3 || height < 3 {
        return Err(Error::InvalidArgument(format!(
            "d2: image {width}x{height} too small"
        )));
    }
    let n = width * height;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    Ok(LinearMap::new(
        n,
        3 * n,
        "d2",
        move |x| {
            let mut a = vec![0.0; n]; // Dh x
            let mut b = vec![0.0; n]; // Dv x
            dh(x, height, width, &mut a);
            dv(x, height, width, &mut b);
            let mut out = vec![0.0; 3 * n];
            dth(&a, height, width, &mut out[..n]);
            let mut t1 = vec![0.0; n];
            let mut t2 = vec![0.0; n];
            dth(&b, height, width, &mut t1);
            dtv(&a, height, width, &mut t2);
            for k in 0..n {
                out[n + k] = (t1[k] + t2[k]) * inv_sqrt2;
            }
            dtv(&b, height, width, &mut out[2 * n..]);
            out
        },
        move |u| {
            // transpose of the composition: route each channel back
            // through the transposed second-family op, then through the
            // transposed first difference
            let mut a_acc = vec![0.0; n]; // adjoint input to Dh
            let mut b_acc = vec![0.0; n]; // adjoint input to Dv
            let mut tmp = vec![0.0; n];
            dth_adj(&u[..n], height, width, &mut a_acc);
            dtv_adj(&u[n..2 * n], height, width, &mut tmp);
            vecmath::axpy(&mut a_acc, inv_sqrt2, &tmp);
            dth_adj(&u[n..2 * n], height, width, &mut tmp);
            vecmath::scale_in_place(&mut tmp, inv_sqrt2);
            dtv_adj(&u[2 * n..], height, width, &mut b_acc);
            vecmath::axpy(&mut b_acc, 1.0, &tmp);
            let mut out = vec![0.0; n];
            dh_adj(&a_acc, height, width, &mut out);
            dv_adj(&b_acc, height, width, &mut tmp);
            vecmath::axpy(&mut out, 1.0, &tmp);
            out
        },
    ))
}

/// Same-size linear convolution with zero padding outside the image.
pub fn blur_map(psf: &Psf, width: usize, height: usize) -> Result<LinearMap> {
    let extent = match psf.orientation {
        Orientation::Horizontal => width,
        Orientation::Vertical => height,
    };
    if psf.taps.len() > extent {
        return Err(Error::InvalidArgument(format!(
            "blur: {}-tap kernel longer than image extent {extent}",
            psf.taps.len()
        )));
    }
    let n = width * height;
    let psf_f = psf.clone();
    let psf_a = psf.clone();
    Ok(LinearMap::new(
        n,
        n,
        "blur",
        move |x| convolve(x, height, width, &psf_f, false),
        move |u| convolve(u, height, width, &psf_a, true),
    ))
}

fn convolve(x: &[f64], h: usize, w: usize, psf: &Psf, adjoint: bool) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    let len = psf.taps.len() as isize;
    let anchor = psf.anchor as isize;
    for j in 0..w as isize {
        for i in 0..h as isize {
            let mut acc = 0.0;
            for t in 0..len {
                // forward: output gathers x at offset (t - anchor);
                // adjoint: gather at the negated offset (reversed kernel)
                let off = if adjoint { anchor - t } else { t - anchor };
                let (ii, jj) = match psf.orientation {
                    Orientation::Horizontal => (i, j + off),
                    Orientation::Vertical => (i + off, j),
                };
                if ii >= 0 && ii < h as isize && jj >= 0 && jj < w as isize {
                    acc += psf.taps[t as usize] * x[(jj * h as isize + ii) as usize];
                }
            }
            out[(j * h as isize + i) as usize] = acc;
        }
    }
    out
}

/// Signal-dependent noise scale: `sigma = ||T x|| / (sqrt(N) 10^{snr/20})`,
/// zero at or above 300 dB (the noiseless sentinel).
pub fn noise_sigma(blurred: &[f64], snr_db: f64) -> f64 {
    if snr_db >= 300.0 {
        return 0.0;
    }
    vecmath::norm(blurred) / ((blurred.len() as f64).sqrt() * 10f64.powf(snr_db / 20.0))
}

/// Applies the degradation model `y = T x + w` with seeded i.i.d. Gaussian
/// noise calibrated to the requested signal-to-noise ratio (in dB).
/// Returns the degraded image and the noise scale used.
pub fn degrade(x: &Image, psf: &Psf, snr_db: f64, seed: u64) -> Result<(Image, f64)> {
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument("degrade: snr must be finite".into()));
    }
    let t = blur_map(psf, x.width, x.height)?;
    let mut y = t.apply(&x.pixels)?;
    let sigma = noise_sigma(&y, snr_db);
    if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).expect("sigma > 0");
        for v in &mut y {
            *v += normal.sample(&mut rng);
        }
    }
    Ok((Image::new(x.width, x.height, y)?, sigma))
}

/// Peak signal-to-noise ratio in dB, peak taken over the reference;
/// `+inf` when the images coincide.
pub fn psnr(reference: &Image, estimate: &Image) -> Result<f64> {
    if reference.width != estimate.width || reference.height != estimate.height {
        return Err(Error::DimensionMismatch {
            tag: "psnr".into(),
            expected: reference.len(),
            got: estimate.len(),
        });
    }
    let err: f64 = reference
        .pixels
        .iter()
        .zip(&estimate.pixels)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = reference.pixels.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    Ok(10.0 * ((reference.len() as f64) * peak * peak / err).log10())
}

/// Structural similarity over valid 11x11 windows (Gaussian weights,
/// sigma 1.5, dynamic range 1).
pub fn ssim(reference: &Image, estimate: &Image) -> Result<f64> {
    if reference.width != estimate.width || reference.height != estimate.height {
        return Err(Error::DimensionMismatch {
            tag: "ssim".into(),
            expected: reference.len(),
            got: estimate.len(),
        });
    }
    const WIN: usize = 11;
    if reference.width < WIN || reference.height < WIN {
        return Err(Error::InvalidArgument(format!(
            "ssim: image {}x{} smaller than the {WIN}x{WIN} window",
            reference.width, reference.height
        )));
    }
    let c1 = (0.01f64).powi(2);
    let c2 = (0.03f64).powi(2);
    // separable Gaussian window, normalized to unit mass
    let mut g = [0.0f64; WIN];
    for (k, v) in g.iter_mut().enumerate() {
        let d = k as f64 - (WIN as f64 - 1.0) / 2.0;
        *v = (-d * d / (2.0 * 1.5 * 1.5)).exp();
    }
    let gsum: f64 = g.iter().sum();
    for v in &mut g {
        *v /= gsum;
    }

    let (w, h) = (reference.width, reference.height);
    let mut total = 0.0;
    let mut count = 0usize;
    for j0 in 0..=w - WIN {
        for i0 in 0..=h - WIN {
            let mut mx = 0.0;
            let mut my = 0.0;
            let mut mxx = 0.0;
            let mut myy = 0.0;
            let mut mxy = 0.0;
            for dj in 0..WIN {
                for di in 0..WIN {
                    let wgt = g[di] * g[dj];
                    let a = reference.get(i0 + di, j0 + dj);
                    let b = estimate.get(i0 + di, j0 + dj);
                    mx += wgt * a;
                    my += wgt * b;
                    mxx += wgt * a * a;
                    myy += wgt * b * b;
                    mxy += wgt * a * b;
                }
            }
            let vx = mxx - mx * mx;
            let vy = myy - my * my;
            let cov = mxy - mx * my;
            let s = ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            total += s;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// The `l1,2` value of a stacked difference field (`channels` blocks of
/// length `n` each): sum over pixels of the Euclidean norm across
/// channels.
pub fn l12_value(stacked: &[f64], channels: usize) -> f64 {
    let n = stacked.len() / channels;
    (0..n)
        .map(|k| {
            (0..channels)
                .map(|c| stacked[c * n + k].powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .sum()
}
