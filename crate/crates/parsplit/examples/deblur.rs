//! End-to-end image restoration: blur and noise the bundled 64x64 test
//! image, restore it, and report quality metrics. Outputs land in
//! `target/deblur-demo/`.
//!
//! ```sh
//! cargo run --release --example deblur
//! ```

use parsplit::imaging::{degrade, io, psnr, ssim, Psf};
use parsplit::restore::{restore, RestoreParams};

fn main() -> parsplit::Result<()> {
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let truth = io::read_pgm(manifest.join("assets/piecewise64.pgm"))?;

    let psf = Psf::motion(7)?;
    let (degraded, sigma) = degrade(&truth, &psf, 45.0, 1)?;
    println!("degraded with motion:7 at 45 dB (sigma {sigma:.3e})");

    let params = RestoreParams {
        psf,
        max_iter: 500,
        rtol: 0.0,
        ..RestoreParams::default()
    };
    let out = restore(&degraded, &params)?;

    println!(
        "psnr {:.2} -> {:.2} dB, ssim {:.3} -> {:.3} in {} iterations ({:.1}s)",
        psnr(&truth, &degraded)?,
        psnr(&truth, &out.image)?,
        ssim(&truth, &degraded)?,
        ssim(&truth, &out.image)?,
        out.stats.iterations,
        out.stats.elapsed_secs
    );

    let dir = manifest.join("../../target/deblur-demo");
    std::fs::create_dir_all(&dir)?;
    io::write_pgm(dir.join("degraded.pgm"), &degraded)?;
    io::write_pgm(dir.join("restored.pgm"), &out.image)?;
    println!("wrote {}", dir.display());
    Ok(())
}
