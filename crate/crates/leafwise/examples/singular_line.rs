//! A vector field with a zero: the clamped-linear profile on the line makes
//! the naive equations unsolvable in bounded functions, while the
//! `x e^|x|`-weighted equation solves with matched branches and a removable
//! singularity at the origin.
//!
//! ```bash
//! cargo run --example singular_line
//! ```

use leafwise::catalog::LeafFunction;
use leafwise::singular::{naive_singular_demos, singular_line_residual, singular_line_solve};

fn main() -> leafwise::Result<()> {
    println!("rejected formulations for v = 1:");
    for attempt in naive_singular_demos() {
        println!(
            "  {:<24} {:<44} max |u| = {:.3e}",
            attempt.label, attempt.formula, attempt.max_abs
        );
    }

    let v = LeafFunction::constant(1.0)?;
    let grid: Vec<f64> = (0..=2000).map(|k| -50.0 + 0.05 * k as f64).collect();
    let solution = singular_line_solve(&v, &grid)?;

    println!("\nweighted equation phi(x) (x e^|x| u)' = x e^|x| v, v = 1:");
    println!("  junction gaps |u1(0)-u3(0)|, |u1(1)-u2(1)|, |u3(-1)-u4(-1)|:");
    for gap in solution.junction_gaps {
        println!("    {gap:.3e}");
    }
    println!(
        "  sup |u| on [-50, 50]  = {:.9} (bounded by 3)",
        solution.sup_abs()
    );
    // The residual carries the x e^|x| weight, so measure it on a moderate
    // span where that scale is O(10).
    let near_grid: Vec<f64> = (0..401).map(|k| -2.0 + 0.01 * k as f64).collect();
    let near = singular_line_solve(&v, &near_grid)?;
    println!(
        "  weighted residual on [-2, 2] = {:.3e}",
        singular_line_residual(&near, &v)?
    );

    println!("\n  x          u(x)");
    for &x in &[-50.0, -1.0, -0.5, 0.0, 0.5, 1.0, 50.0] {
        if let Some(u) = solution.value_at(x) {
            println!("  {x:+6.2}     {u:.9}");
        }
    }
    Ok(())
}
