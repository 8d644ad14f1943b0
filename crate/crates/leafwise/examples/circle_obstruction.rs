//! On the circle the field `sin(theta) d/dtheta` has zeros, and no weight
//! family `f(theta + 2 pi) = C f(theta)` admits a periodic solution: the
//! full-period integral of `f v / sin` diverges or fails to vanish. This
//! example measures that obstruction on shrinking arc cutoffs.
//!
//! ```bash
//! cargo run --example circle_obstruction
//! ```

use leafwise::catalog::{LeafFunction, TrigTerm};
use leafwise::singular::{circle_obstruction, CocycleWeight, DEFAULT_CUTOFFS};

fn main() -> leafwise::Result<()> {
    let weight = CocycleWeight::identity();

    let one = LeafFunction::constant(1.0)?;
    let report = circle_obstruction(&one, &weight, &DEFAULT_CUTOFFS)?;
    println!("v = 1 (multiplier C = {}):", report.multiplier);
    println!("  eta         arc (eta, pi-eta)     arc (pi+eta, 2pi-eta)");
    for (eta, (a, b)) in report.cutoffs.iter().zip(&report.arc_integrals) {
        println!("  {eta:.0e}       {a:+.9}         {b:+.9}");
    }
    println!(
        "  log-slope {:+.4} vs csc prediction -2: divergent = {}",
        report.log_slopes.0, report.divergent
    );

    let sine = LeafFunction::trig(
        2.0 * std::f64::consts::PI,
        0.0,
        vec![TrigTerm {
            harmonic: 1,
            cos_coeff: 0.0,
            sin_coeff: 1.0,
        }],
    )?;
    let report = circle_obstruction(&sine, &weight, &DEFAULT_CUTOFFS)?;
    println!("\nv = sin (f v / sin = 1): arc integrals converge to arc lengths");
    println!(
        "  defect = {:.9} (nonzero: no periodic solution, 2 pi = {:.9})",
        report.defect,
        2.0 * std::f64::consts::PI
    );

    let zero = LeafFunction::constant(0.0)?;
    let report = circle_obstruction(&zero, &weight, &DEFAULT_CUTOFFS)?;
    println!("\nv = 0: defect = {:.3e} (u = 0 closes up)", report.defect);
    Ok(())
}
