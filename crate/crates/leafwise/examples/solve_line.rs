//! Solve `u + u' = v` on the real line with the truncated weighted-integral
//! operator and check the solution against its closed form.
//!
//! ```bash
//! cargo run --example solve_line
//! ```

use leafwise::catalog::{LeafFunction, TrigTerm};
use leafwise::operator::{ode_residual, solve_on_line, truncation_bound, OperatorConfig};

fn main() -> leafwise::Result<()> {
    let cfg = OperatorConfig::default();
    let grid: Vec<f64> = (0..201).map(|k| -2.0 + 0.02 * k as f64).collect();

    // v = 1 is absorbed: u = 1.
    let one = LeafFunction::constant(1.0)?;
    let u = solve_on_line(&one, &grid, &cfg)?;
    let worst = u
        .values()
        .iter()
        .fold(0.0_f64, |m, x| m.max((x - 1.0).abs()));
    println!("v = 1:      max |u - 1|        = {worst:.3e}");
    println!(
        "            truncation depth L = {:.4} (bound ln(4M/eps) = {:.4})",
        u.truncation_used(),
        truncation_bound(1.0, cfg.epsilon)?
    );

    // v = sin has the bounded solution (sin - cos)/2.
    let sine = LeafFunction::trig(
        2.0 * std::f64::consts::PI,
        0.0,
        vec![TrigTerm {
            harmonic: 1,
            cos_coeff: 0.0,
            sin_coeff: 1.0,
        }],
    )?;
    let u = solve_on_line(&sine, &grid, &cfg)?;
    let worst = u.iter().fold(0.0_f64, |m, (x, v)| {
        m.max((v - 0.5 * (x.sin() - x.cos())).abs())
    });
    println!("v = sin:    max closed-form err = {worst:.3e}");
    println!(
        "            ode residual        = {:.3e}",
        ode_residual(&u, &sine)?
    );

    println!("\n  x            u(x)");
    for (x, value) in u.iter().step_by(25) {
        println!("  {x:+.4}      {value:+.12}");
    }
    Ok(())
}
