//! Solves the lasso `min ½‖x − b‖² + w‖x‖₁` with the splitting solver and
//! compares the limit against the closed-form soft threshold of `b`.
//!
//! ```sh
//! cargo run --example lasso
//! ```

use parsplit::coupled::IterationConfig;
use parsplit::parsum::ParallelSumProblem;
use parsplit::prox::{ProxFunction, SmoothTerm};
use parsplit::vecmath;

fn main() -> parsplit::Result<()> {
    let b = vec![3.0, -0.4, 1.2, 0.05, -2.5];
    let weight = 0.5;
    let dim = b.len();

    // pose as the inclusion 0 ∈ ∂(w‖·‖₁)(x) + (x − b): the shift carries b,
    // the smooth part is the identity gradient, and there are no terms
    let problem = ParallelSumProblem {
        dim,
        z: b.clone(),
        f: ProxFunction::l1(dim, weight),
        smooth: SmoothTerm::new(dim, 1.0, |x: &[f64]| x.to_vec())
            .with_value(|x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>()),
        terms: vec![],
    };
    let config = IterationConfig {
        gamma: Some(0.5),
        max_iter: 2000,
        rtol: 1e-12,
        ..IterationConfig::default()
    };
    let (sol, objective, stats) = problem.solve_min(&config, 0)?;

    let exact: Vec<f64> = b
        .iter()
        .map(|&v| v.signum() * (v.abs() - weight).max(0.0))
        .collect();
    println!("iterations        {}", stats.iterations);
    println!("converged         {}", stats.converged);
    println!("objective         {:?}", objective);
    println!("solution          {:?}", sol.x);
    println!("soft threshold    {exact:?}");
    println!("max difference    {:.3e}", vecmath::dist(&sol.x, &exact));
    println!("kkt residual      {:.3e}", sol.kkt_residual);
    Ok(())
}
