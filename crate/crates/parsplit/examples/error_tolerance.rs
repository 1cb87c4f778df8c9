//! Demonstrates tolerance to inexact updates: every internal update of the
//! iteration is perturbed by a vector of norm 1/(n+1)² (a summable series),
//! and the perturbed run still lands on the exact run's limit.
//!
//! ```sh
//! cargo run --example error_tolerance
//! ```

use parsplit::coupled::{IterationConfig, Site};
use parsplit::linop::LinearMap;
use parsplit::parsum::{ParallelSumProblem, Term};
use parsplit::prox::{ProxFunction, SmoothTerm};
use parsplit::vecmath;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem(b: &[f64]) -> parsplit::Result<ParallelSumProblem> {
    let dim = b.len();
    Ok(ParallelSumProblem {
        dim,
        z: b.to_vec(),
        f: ProxFunction::zero(dim),
        smooth: SmoothTerm::new(dim, 1.0, |x: &[f64]| x.to_vec()),
        terms: vec![Term::new(
            ProxFunction::l1(dim, 0.5),
            ProxFunction::zero_indicator(dim),
            LinearMap::identity(dim),
            LinearMap::identity(dim),
        )?
        .with_norms(1.0, 1.0)],
    })
}

fn main() -> parsplit::Result<()> {
    let b = vec![1.5, -0.8, 0.3, 2.2];
    let config = IterationConfig {
        max_iter: 4000,
        rtol: 0.0,
        ..IterationConfig::default()
    };

    let (exact, _) = problem(&b)?.solve_inclusion(&config, 0, None)?;

    let mut rng = ChaCha8Rng::seed_from_u64(0xE77);
    let mut injector = |_site: Site, n: usize, len: usize| {
        let mut dir: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = vecmath::dot(&dir, &dir).sqrt().max(1e-30);
        vecmath::scale_in_place(&mut dir, 1.0 / ((n + 1) as f64).powi(2) / norm);
        Some(dir)
    };
    let (noisy, _) = problem(&b)?.solve_inclusion(&config, 0, Some(&mut injector))?;

    println!("exact limit      {:?}", exact.x);
    println!("perturbed limit  {:?}", noisy.x);
    println!("difference       {:.3e}", vecmath::dist(&exact.x, &noisy.x));
    Ok(())
}
