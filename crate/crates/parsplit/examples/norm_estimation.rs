//! Estimates operator norms of the imaging maps by power iteration and, at
//! a size where a dense matrix is feasible, compares against the exact
//! spectral norm.
//!
//! ```sh
//! cargo run --release --example norm_estimation
//! ```

use nalgebra::DMatrix;
use parsplit::imaging::{blur_map, d2_map, tv_map, wavelet, Psf};
use parsplit::linop::{estimate_norm_default, LinearMap};

fn dense_norm(l: &LinearMap) -> parsplit::Result<f64> {
    let (rows, cols) = (l.out_dim(), l.in_dim());
    let mut m = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        let mut e = vec![0.0; cols];
        e[j] = 1.0;
        for (i, v) in l.apply(&e)?.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m.svd(false, false).singular_values[0])
}

fn main() -> parsplit::Result<()> {
    let (w, h) = (16usize, 16usize);
    let ops = vec![
        tv_map(w, h)?,
        d2_map(w, h)?,
        blur_map(&Psf::motion(7)?, w, h)?,
        wavelet::wavelet_map(2, w, h)?,
    ];
    println!(
        "{:<14} {:>12} {:>12} {:>12}",
        "operator", "estimate", "exact", "rel err"
    );
    for l in &ops {
        let est = estimate_norm_default(l, 7)?;
        let exact = dense_norm(l)?;
        println!(
            "{:<14} {:>12.8} {:>12.8} {:>12.2e}",
            l.tag(),
            est.value,
            exact,
            (est.value - exact).abs() / exact
        );
        assert!(
            est.upper_bound >= exact * (1.0 - 1e-6),
            "upper bound must dominate the true norm"
        );
    }
    Ok(())
}
