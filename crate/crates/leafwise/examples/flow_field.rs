//! General foliations from a vector field: Runge-Kutta flow map, the
//! along-the-flow solution `U(x) = int_{-inf}^0 e^w V(Phi(x,w)) dw`, and its
//! derivatives by differentiation under the integral.
//!
//! ```bash
//! cargo run --example flow_field
//! ```

use leafwise::flow::{
    smoothness_order_check, solve_field, solve_field_derivative, FlowField, FlowMap, Region,
    ScalarField,
};
use leafwise::operator::OperatorConfig;

fn main() -> leafwise::Result<()> {
    let cfg = OperatorConfig::default();

    // X = d/dx on the line; V(x) = x gives U(x) = x - 1 exactly.
    let line = FlowMap::new(FlowField::new(
        vec![ScalarField::Constant(1.0)],
        Region::new(vec![-40.0], vec![10.0])?,
        1e-3,
        0.5,
    )?);
    let v = ScalarField::Coordinate {
        axis: 0,
        scale: 1.0,
    };
    println!("X = d/dx, V(x) = x:");
    for x in [-1.0, 0.0, 1.0] {
        let u = solve_field(&v, &line, &[x], &cfg)?;
        println!("  U({x:+.1}) = {u:+.9}   (closed form {:+.1})", x - 1.0);
    }

    // Rotation field: quarter turn of (1, 0).
    let rotation = FlowMap::new(FlowField::new(
        vec![
            ScalarField::Coordinate {
                axis: 1,
                scale: -1.0,
            },
            ScalarField::Coordinate {
                axis: 0,
                scale: 1.0,
            },
        ],
        Region::new(vec![-3.0, -3.0], vec![3.0, 3.0])?
            .with_hole(vec![-0.25, -0.25], vec![0.25, 0.25])?,
        1e-3,
        0.2,
    )?);
    let end = rotation.flow(&[1.0, 0.0], std::f64::consts::FRAC_PI_2)?;
    println!(
        "\nrotation quarter turn: (1, 0) -> ({:+.2e}, {:+.9})",
        end[0], end[1]
    );

    // Derivatives of U for V = sin x along the line flow.
    let sine = ScalarField::Wave {
        axis: 0,
        freq: 1.0,
        amp: 1.0,
        phase: 0.0,
    };
    let x = [0.5];
    let direct = solve_field_derivative(&sine, &line, &x, 0, 1e-4, &cfg)?;
    println!(
        "\nV = sin x: dU/dx({}) = {direct:+.9} (closed form {:+.9})",
        x[0],
        0.5 * (x[0].cos() + x[0].sin())
    );

    let report = smoothness_order_check(&sine, &line, &x, 0, 3, 1e-3, &cfg)?;
    println!("\n  order    under-integral     FD of U (h)       discrepancy    conv. order");
    for check in &report.orders {
        println!(
            "  {}        {:+.9}      {:+.9}     {:.3e}      {:.3}{}",
            check.order,
            check.reference,
            check.fd_coarse,
            check.discrepancy_coarse,
            check.richardson_order,
            if check.noise_flagged {
                "  (noise floor)"
            } else {
                ""
            }
        );
    }
    Ok(())
}
