//! Assembles and solves a problem described as a JSON document against the
//! built-in prox/operator registry (see `docs/problem-schema.md`).
//!
//! ```sh
//! cargo run --example problem_from_json
//! ```

use parsplit::coupled::IterationConfig;
use parsplit::schema::problem_from_json;

fn main() -> parsplit::Result<()> {
    // box-constrained least squares on a 2x2 grid: the limit clamps the
    // data to [0, 1] coordinatewise
    let text = r#"{
        "width": 2, "height": 2,
        "f": {"kind": "box", "lo": 0.0, "hi": 1.0},
        "smooth": {"kind": "quadratic_data",
                   "op": {"kind": "identity"},
                   "data": [0.2, -0.5, 0.7, 1.4]},
        "terms": [
            {"g": {"kind": "l1", "weight": 0.05},
             "h": {"kind": "zero_indicator"},
             "l": {"kind": "identity"},
             "m": {"kind": "identity"}}
        ]
    }"#;
    let problem = problem_from_json(text)?;
    println!(
        "assembled: dim {}, {} coupling term(s), step bound beta = {:.4}",
        problem.dim,
        problem.r(),
        problem.beta_bound(0)?
    );

    let config = IterationConfig {
        max_iter: 5000,
        rtol: 1e-11,
        ..IterationConfig::default()
    };
    let (sol, objective, stats) = problem.solve_min(&config, 0)?;
    println!(
        "solved in {} iterations (converged: {})",
        stats.iterations, stats.converged
    );
    println!("x = {:?}", sol.x);
    println!(
        "objective = {objective:?}, kkt residual = {:.3e}",
        sol.kkt_residual
    );
    Ok(())
}
