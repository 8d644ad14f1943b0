//! Solve along a leaf of the irrational linear flow on the torus and verify
//! that the solution descends to the torus (period 1 in the first
//! coordinate).
//!
//! ```bash
//! cargo run --example torus_leaf
//! ```

use leafwise::geometry::{
    torus_periodicity_defect, torus_solve, TorusFlow, TorusFunction, TorusTerm, Wave,
};
use leafwise::operator::OperatorConfig;

fn main() -> leafwise::Result<()> {
    let cfg = OperatorConfig::default();
    let flow = TorusFlow::new(0.3);
    let grid: Vec<f64> = (0..101).map(|k| 0.01 * k as f64).collect();

    // v(x, y) = cos(2 pi x) restricted to any leaf is cos(2 pi t).
    let v = TorusFunction::new(vec![TorusTerm {
        coeff: 1.0,
        x_wave: Wave::Cos(1),
        y_wave: Wave::One,
    }])?;
    let u = torus_solve(&v, &flow, &grid, &cfg)?;

    let two_pi = 2.0 * std::f64::consts::PI;
    let worst = u.iter().fold(0.0_f64, |m, (t, value)| {
        let closed = ((two_pi * t).cos() + two_pi * (two_pi * t).sin()) / (1.0 + two_pi * two_pi);
        m.max((value - closed).abs())
    });
    println!("leaf through (0, {}): slope sqrt(2)", flow.offset);
    println!("max closed-form error  = {worst:.3e}");

    let mut defect: f64 = 0.0;
    for &t in grid.iter().step_by(20) {
        defect = defect.max(torus_periodicity_defect(&v, &flow, t, &cfg)?);
    }
    println!(
        "max |U(x+1,y) - U(x,y)| = {defect:.3e} (tolerance 2 eps = {:.1e})",
        2.0 * cfg.epsilon
    );

    println!("\n  t          torus point                u(t)");
    for (t, value) in u.iter().step_by(20) {
        let (x, y) = flow.point_at(t);
        println!("  {t:.2}      ({x:.4}, {y:.4})      {value:+.9}");
    }
    Ok(())
}
