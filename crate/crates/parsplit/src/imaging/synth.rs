//! Deterministic synthetic test images: a piecewise-constant cartoon for
//! desk-scale runs and a larger natural-looking scene mixing smooth
//! shading, sharp edges, and mild texture.  Both are pure functions of
//! the pixel coordinates, so the bundled assets can be regenerated
//! bit-for-bit.

use crate::imaging::Image;

/// 64x64 piecewise-constant cartoon: flat background, two rectangles and
/// a disk at distinct gray levels.
pub fn piecewise64() -> Image {
    let (w, h) = (64usize, 64usize);
    let mut img = Image::zeros(w, h);
    for j in 0..w {
        for i in 0..h {
            let mut v = 0.15;
            if (8..30).contains(&i) && (6..26).contains(&j) {
                v = 0.85;
            }
            if (36..58).contains(&i) && (20..44).contains(&j) {
                v = 0.45;
            }
            let (di, dj) = (i as f64 - 22.0, j as f64 - 46.0);
            if di * di + dj * dj <= 13.0 * 13.0 {
                v = 0.65;
            }
            img.set(i, j, v);
        }
    }
    img
}

/// 256x256 natural-like scene: vignetted gradient background, smooth
/// radially shaded disks, a dark bar, and low-amplitude sinusoidal
/// texture.
pub fn natural256() -> Image {
    let (w, h) = (256usize, 256usize);
    let mut img = Image::zeros(w, h);
    for j in 0..w {
        for i in 0..h {
            let x = j as f64 / (w - 1) as f64;
            let y = i as f64 / (h - 1) as f64;

            // sloped background with a gentle vignette
            let mut v = 0.35 + 0.25 * x + 0.10 * y;
            let (cx, cy) = (x - 0.5, y - 0.5);
            v -= 0.15 * (cx * cx + cy * cy);

            // big softly shaded disk (smooth interior, sharp rim)
            let d1 = ((x - 0.32).powi(2) + (y - 0.38).powi(2)).sqrt();
            if d1 < 0.22 {
                v = 0.78 - 0.9 * d1 * d1;
            }

            // small bright disk
            let d2 = ((x - 0.72).powi(2) + (y - 0.24).powi(2)).sqrt();
            if d2 < 0.10 {
                v = 0.92 - 1.5 * d2;
            }

            // dark diagonal bar
            let t = (x - 0.15) - 0.85 * (y - 0.55);
            if y > 0.55 && t.abs() < 0.05 {
                v = 0.12;
            }

            // mid-gray rectangle with a ramp
            if (0.62..0.92).contains(&x) && (0.58..0.86).contains(&y) {
                v = 0.40 + 0.25 * (x - 0.62) / 0.30;
            }

            // striped field (sharp vertical edges, heavily hurt by blur)
            if (0.05..0.45).contains(&x) && (0.68..0.95).contains(&y) {
                v = if ((x * 64.0) as usize) % 2 == 0 {
                    0.75
                } else {
                    0.25
                };
            }

            // dotted lattice over the large disk
            if d1 < 0.22 {
                let (gx, gy) = ((x * 48.0).fract(), (y * 48.0).fract());
                if (gx - 0.5).abs() < 0.22 && (gy - 0.5).abs() < 0.22 {
                    v -= 0.30;
                }
            }

            // thin bright vertical lines
            for lx in [0.55f64, 0.60, 0.65] {
                if (x - lx).abs() < 0.004 && y < 0.45 {
                    v = 0.95;
                }
            }

            // multi-frequency texture so SSIM has structure to track
            v += 0.05 * (40.0 * x).sin() * (34.0 * y).cos()
                + 0.04 * (93.0 * x + 17.0 * y).sin()
                + 0.03 * (71.0 * y - 12.0 * x).cos();

            img.set(i, j, v.clamp(0.02, 0.98));
        }
    }
    img
}
