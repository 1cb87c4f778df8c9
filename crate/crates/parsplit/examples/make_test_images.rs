//! Regenerates the bundled test images in `assets/`.  Both generators are
//! deterministic, so the output is bit-for-bit reproducible.
//!
//! ```sh
//! cargo run --example make_test_images
//! ```

use parsplit::imaging::{io, synth};

fn main() -> parsplit::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("assets");
    std::fs::create_dir_all(&dir)?;
    io::write_pgm(dir.join("piecewise64.pgm"), &synth::piecewise64())?;
    io::write_pgm(dir.join("natural256.pgm"), &synth::natural256())?;
    println!("wrote {}", dir.display());
    Ok(())
}
