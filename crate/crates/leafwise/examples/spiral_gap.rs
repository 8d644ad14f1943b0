//! The spiral foliation of the annulus: chart transforms, the induced
//! tangent field, and the solution gap between a spiral and the circle it
//! accumulates on.
//!
//! ```bash
//! cargo run --example spiral_gap
//! ```

use leafwise::geometry::{
    asymptotic_gap, cartesian_to_chart, chart_to_cartesian, induced_field_at, spiral_radius,
    AnnulusFunction, AnnulusTerm, Wave,
};
use leafwise::operator::OperatorConfig;

fn main() -> leafwise::Result<()> {
    // Chart round trip.
    let (theta, s) = (4.2, -1.3);
    let (x, y) = chart_to_cartesian(theta, s);
    let (theta2, s2) = cartesian_to_chart(x, y)?;
    println!("chart roundtrip ({theta}, {s}) -> ({x:.6}, {y:.6}) -> ({theta2:.12}, {s2:.12})");

    // Induced leaf-tangent field at a few points.
    println!("\n  point                    (F, G)                  |(F,G)|");
    for (theta, s) in [(0.0, 0.0), (-3.0, 1.0), (6.0, -2.0)] {
        let (x, y) = chart_to_cartesian(theta, s);
        let (f, g) = induced_field_at(x, y)?;
        println!(
            "  ({x:+.4}, {y:+.4})      ({f:+.6}, {g:+.6})      {:.6}",
            f.hypot(g)
        );
    }

    // v = (r - 1) cos(theta) vanishes on the inner circle; the gap between
    // the spiral solution and the circle solution decays like 1/|theta|
    // with an oscillating phase factor.
    let v = AnnulusFunction::new(vec![AnnulusTerm {
        coeff: 1.0,
        radial: vec![-1.0, 1.0],
        angular: Wave::Cos(1),
    }])?;
    let cfg = OperatorConfig::default();
    println!("\n  theta      r(theta,0) - 1      gap to inner circle");
    for &theta in &[-5.0, -10.0, -15.0, -20.0, -50.0, -150.0, -300.0] {
        let gap = asymptotic_gap(&v, 0.0, theta, &cfg)?;
        let excess = spiral_radius(theta, 0.0) - 1.0;
        println!("  {theta:+7.1}      {excess:.6e}      {gap:.6e}");
    }
    Ok(())
}
