//! Line bundles over foliated sets: cocycle verification of box covers and
//! gluing of per-box trivialized solutions into a global section.
//!
//! ```bash
//! cargo run --example bundle_glue
//! ```

use leafwise::bundle::{circle_bundle_solve, glue_general, verify_cocycle, BundleCover};
use leafwise::catalog::{LeafFunction, TrigTerm};
use leafwise::operator::OperatorConfig;

fn main() -> leafwise::Result<()> {
    // Every shipped cover satisfies the cocycle identities.
    for (name, cover) in [
        ("circle", BundleCover::circle()),
        ("torus-leaf", BundleCover::torus_leaf()),
        ("annulus", BundleCover::annulus()),
    ] {
        let report = verify_cocycle(&cover)?;
        println!(
            "cover {name:<11} checks = {:>2}  max deviation = {:.3e}  consistent = {}",
            report.checks,
            report.max_deviation,
            report.consistent()
        );
    }
    let bad = verify_cocycle(&BundleCover::inconsistent_triple())?;
    println!(
        "cover {:<11} flagged {} violation(s), worst deviation = {}",
        "bad-triple",
        bad.violations.len(),
        bad.violations
            .iter()
            .map(|v| v.deviation)
            .fold(0.0_f64, f64::max)
    );

    // Glue the circle bundle for v~ = cos(theta): every box gets
    // (cos + sin)/2 and the wrap-around overlap matches through the
    // holonomy factor e^(-2 pi).
    let cfg = OperatorConfig::default();
    let cosine = LeafFunction::trig(
        2.0 * std::f64::consts::PI,
        0.0,
        vec![TrigTerm {
            harmonic: 1,
            cos_coeff: 1.0,
            sin_coeff: 0.0,
        }],
    )?;
    let section = circle_bundle_solve(&cosine, 65, &cfg)?;
    println!("\ncircle bundle, v~ = cos:");
    for mismatch in &section.mismatches {
        println!(
            "  overlap {} <-> {}: sup |u~_i - u~_j| = {:.3e}",
            mismatch.i, mismatch.j, mismatch.sup
        );
    }

    // General gluing over the unit-period leaf cover with drop factor e.
    let unit = LeafFunction::trig(
        1.0,
        0.0,
        vec![TrigTerm {
            harmonic: 1,
            cos_coeff: 1.0,
            sin_coeff: 0.0,
        }],
    )?;
    let cover = BundleCover::torus_leaf();
    let section = glue_general(&cover, &[unit.clone(), unit], 65, &cfg)?;
    println!("\ntorus-leaf cover, v~ = cos(2 pi t):");
    println!("  max overlap mismatch = {:.3e}", section.max_mismatch());
    let frame = section.local_frame(0);
    println!(
        "  untrivialized frame on box {}: u(lo) = {:.6}, u(hi) = {:.6}",
        section.profiles[0].id,
        frame.first().unwrap(),
        frame.last().unwrap()
    );
    Ok(())
}
