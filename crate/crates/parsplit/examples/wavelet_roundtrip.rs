//! Exercises the biorthogonal 9/7 lifting transform: analysis/synthesis
//! round trip on the bundled test image, energy split between the coarse
//! and detail bands, and the adjoint inner-product identity.
//!
//! ```sh
//! cargo run --release --example wavelet_roundtrip
//! ```

use parsplit::imaging::{io, wavelet};
use parsplit::vecmath;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> parsplit::Result<()> {
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let img = io::read_pgm(manifest.join("assets/piecewise64.pgm"))?;
    let (w, h) = (img.width, img.height);
    let levels = wavelet::default_levels(w, h);
    let map = wavelet::wavelet_map(levels, w, h)?;

    // analysis then synthesis reproduces the image exactly
    let coeffs = map.apply(&img.pixels)?;
    let mut back = coeffs.clone();
    wavelet::synthesis_2d(&mut back, w, h, levels);
    println!("{levels}-level transform of a {w}x{h} image");
    println!("round-trip error {:.3e}", vecmath::dist(&back, &img.pixels));

    // the coarse band is the top-left (w >> levels) x (h >> levels) block
    let (cw, ch) = (w >> levels, h >> levels);
    let total: f64 = coeffs.iter().map(|v| v * v).sum();
    let coarse: f64 = (0..cw)
        .flat_map(|j| (0..ch).map(move |i| (i, j)))
        .map(|(i, j)| coeffs[j * h + i].powi(2))
        .sum();
    println!(
        "coarse band holds {:.2}% of the energy (piecewise-constant input)",
        100.0 * coarse / total
    );

    // adjoint identity <Wx, u> = <x, W'u> on random probes
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x: Vec<f64> = (0..w * h).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..w * h).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs = vecmath::dot(&map.apply(&x)?, &u);
        let rhs = vecmath::dot(&x, &map.adjoint(&u)?);
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }
    println!("worst adjoint defect over 20 probes: {worst:.3e}");
    Ok(())
}
