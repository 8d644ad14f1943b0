//! Named invariant batteries for every module, shared by the `verify` CLI
//! subcommand and the test suite. Each check recomputes its quantities from
//! scratch and reports one pass/fail line.

use std::f64::consts::PI;

use crate::bundle::{
    circle_bundle_solve, glue_general, verify_cocycle, BoxChart, BundleCover, Overlap, WeightTag,
};
use crate::catalog::{LeafFn, LeafFunction, TrigTerm};
use crate::error::Result;
use crate::flow::{solve_field, solve_field_derivative, FlowField, FlowMap, Region, ScalarField};
use crate::geometry::{
    asymptotic_gap, cartesian_to_chart, chart_to_cartesian, induced_field_at, spiral_radius,
    torus_periodicity_defect, AnnulusFunction, AnnulusTerm, TorusFlow, TorusFunction, TorusTerm,
    Wave,
};
use crate::operator::{solve_on_line, solve_periodic, OperatorConfig};
use crate::singular::{
    circle_obstruction, naive_singular_demos, singular_line_residual, singular_line_solve,
    CocycleWeight, DEFAULT_CUTOFFS,
};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub const SUITES: [&str; 5] = ["operator", "geometry", "flow", "singular", "bundle"];

fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn catalog_fixtures() -> Vec<(&'static str, LeafFunction)> {
    let two_pi = 2.0 * PI;
    vec![
        ("constant", LeafFunction::constant(1.0).unwrap()),
        (
            "sine",
            LeafFunction::trig(
                two_pi,
                0.0,
                vec![TrigTerm {
                    harmonic: 1,
                    cos_coeff: 0.0,
                    sin_coeff: 1.0,
                }],
            )
            .unwrap(),
        ),
        (
            "cosine",
            LeafFunction::trig(
                two_pi,
                0.0,
                vec![TrigTerm {
                    harmonic: 1,
                    cos_coeff: 1.0,
                    sin_coeff: 0.0,
                }],
            )
            .unwrap(),
        ),
        (
            "cubic",
            LeafFunction::polynomial(vec![1.0, 0.5, -0.25, 0.125], -3.0, 3.0).unwrap(),
        ),
        (
            "fourier2",
            LeafFunction::trig(
                two_pi,
                0.0,
                vec![
                    TrigTerm {
                        harmonic: 1,
                        cos_coeff: 0.5,
                        sin_coeff: 0.0,
                    },
                    TrigTerm {
                        harmonic: 2,
                        cos_coeff: 0.0,
                        sin_coeff: 0.1,
                    },
                ],
            )
            .unwrap(),
        ),
    ]
}

fn check<F>(name: &str, body: F) -> CheckOutcome
where
    F: FnOnce() -> Result<(bool, String)>,
{
    match body() {
        Ok((passed, detail)) => CheckOutcome {
            name: name.to_string(),
            passed,
            detail,
        },
        Err(err) => CheckOutcome {
            name: name.to_string(),
            passed: false,
            detail: format!("error: {err}"),
        },
    }
}

fn operator_checks() -> Vec<CheckOutcome> {
    let cfg = OperatorConfig::default();
    let grid = uniform_grid(-2.0, 2.0, 81);
    let mut out = Vec::new();

    out.push(check("operator/identity_absorption", || {
        let mut worst: f64 = 0.0;
        for c in [1.0, -2.5, 0.3] {
            let v = LeafFunction::constant(c)?;
            let u = solve_on_line(&v, &grid, &cfg)?;
            for &value in u.values() {
                worst = worst.max((value - c).abs());
            }
        }
        Ok((worst <= cfg.epsilon, format!("max |u - c| = {worst:.3e}")))
    }));

    out.push(check("operator/linearity", || {
        let fixtures = catalog_fixtures();
        let (alpha, beta) = (1.7, -0.6);
        let a = &fixtures[1].1;
        let b = &fixtures[4].1;
        let combo = {
            let mut terms = vec![
                TrigTerm {
                    harmonic: 1,
                    cos_coeff: beta * 0.5,
                    sin_coeff: alpha,
                },
                TrigTerm {
                    harmonic: 2,
                    cos_coeff: 0.0,
                    sin_coeff: beta * 0.1,
                },
            ];
            terms.retain(|t| t.cos_coeff != 0.0 || t.sin_coeff != 0.0);
            LeafFunction::trig(2.0 * PI, 0.0, terms)?
        };
        let ua = solve_on_line(a, &grid, &cfg)?;
        let ub = solve_on_line(b, &grid, &cfg)?;
        let uc = solve_on_line(&combo, &grid, &cfg)?;
        let mut worst: f64 = 0.0;
        for i in 0..grid.len() {
            worst =
                worst.max((alpha * ua.values()[i] + beta * ub.values()[i] - uc.values()[i]).abs());
        }
        Ok((
            worst <= 2.0 * cfg.epsilon,
            format!("max linearity defect = {worst:.3e}"),
        ))
    }));

    out.push(check("operator/truncation_certificate", || {
        let mut worst: f64 = 0.0;
        for (_, v) in catalog_fixtures() {
            let base = solve_on_line(&v, &grid, &cfg)?;
            let doubled_cfg = cfg.clone().with_truncation(2.0 * base.truncation_used());
            let doubled = solve_on_line(&v, &grid, &doubled_cfg)?;
            for (a, b) in base.values().iter().zip(doubled.values()) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok((
            worst <= 0.5 * cfg.epsilon,
            format!("max change under 2L = {worst:.3e}"),
        ))
    }));

    out.push(check("operator/periodic_consistency", || {
        let mut worst: f64 = 0.0;
        for (name, v) in catalog_fixtures() {
            if name == "cubic" {
                continue;
            }
            if v.is_constant() {
                continue;
            }
            let periodic = solve_periodic(&v, &grid, &cfg)?;
            let truncated = solve_on_line(&v, &grid, &cfg)?;
            for (a, b) in periodic.values().iter().zip(truncated.values()) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok((
            worst <= 2.0 * cfg.epsilon,
            format!("max periodic vs truncated = {worst:.3e}"),
        ))
    }));

    out.push(check("operator/residual_regression", || {
        // Frozen regression constant: residual <= C (h_grid^2 + eps).
        let c_frozen = 2.0;
        let dense = uniform_grid(0.0, 0.8, 401);
        let spacing = dense[1] - dense[0];
        let mut worst_ratio: f64 = 0.0;
        for (_, v) in catalog_fixtures() {
            let u = solve_on_line(&v, &dense, &cfg)?;
            let r = u.residual_sup().unwrap_or(f64::INFINITY);
            worst_ratio = worst_ratio.max(r / (spacing * spacing + cfg.epsilon));
        }
        Ok((
            worst_ratio <= c_frozen,
            format!("max residual / (h^2 + eps) = {worst_ratio:.3}"),
        ))
    }));

    out.push(check("operator/boundedness", || {
        let mut ok = true;
        let mut detail = String::new();
        for (name, v) in catalog_fixtures() {
            let u = solve_on_line(&v, &grid, &cfg)?;
            let sup_u = u.values().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let sup_v = (0..2000)
                .map(|k| v.value(-30.0 + 0.032 * k as f64).abs())
                .fold(0.0_f64, f64::max);
            if sup_u > sup_v + 1e-12 {
                ok = false;
                detail = format!("{name}: sup|u| = {sup_u} > sup|v| = {sup_v}");
            }
        }
        if detail.is_empty() {
            detail = "sup|u| <= sup|v| for all fixtures".into();
        }
        Ok((ok, detail))
    }));

    out
}

fn geometry_checks() -> Vec<CheckOutcome> {
    let cfg = OperatorConfig::default();
    let mut out = Vec::new();

    out.push(check("geometry/chart_inversion", || {
        let mut worst: f64 = 0.0;
        for i in 0..40 {
            for j in 0..20 {
                let theta = -6.0 * PI + 12.0 * PI * i as f64 / 39.0;
                let s = -PI + 0.01 + (2.0 * PI - 0.02) * j as f64 / 19.0;
                let (x, y) = chart_to_cartesian(theta, s);
                let (t2, s2) = cartesian_to_chart(x, y)?;
                worst = worst.max((t2 - theta).abs()).max((s2 - s).abs());
            }
        }
        Ok((
            worst <= 1e-10,
            format!("max roundtrip deviation = {worst:.3e}"),
        ))
    }));

    out.push(check("geometry/torus_periodicity", || {
        let fixtures = [
            TorusFunction::constant(1.0)?,
            TorusFunction::new(vec![TorusTerm {
                coeff: 1.0,
                x_wave: Wave::Cos(1),
                y_wave: Wave::One,
            }])?,
            TorusFunction::new(vec![
                TorusTerm {
                    coeff: 0.5,
                    x_wave: Wave::Sin(1),
                    y_wave: Wave::Cos(1),
                },
                TorusTerm {
                    coeff: 0.25,
                    x_wave: Wave::One,
                    y_wave: Wave::Sin(2),
                },
            ])?,
        ];
        let flow = TorusFlow::new(0.25);
        let mut worst: f64 = 0.0;
        for v in &fixtures {
            for t in [0.0, 0.3, 0.8] {
                worst = worst.max(torus_periodicity_defect(v, &flow, t, &cfg)?);
            }
        }
        Ok((
            worst <= 2.0 * cfg.epsilon,
            format!("max |U(x+1,y) - U(x,y)| = {worst:.3e}"),
        ))
    }));

    out.push(check("geometry/spiral_confinement", || {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..=2000 {
            let theta = -1e6 + 1e3 * k as f64;
            let r = spiral_radius(theta, 0.4);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        Ok((
            lo > 1.0 && hi < 2.0,
            format!("radius range [{lo:.8}, {hi:.8}]"),
        ))
    }));

    out.push(check("geometry/tangency", || {
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for (theta, s) in [(0.0, 0.0), (-4.0, 2.0), (7.0, -1.5)] {
            let (x, y) = chart_to_cartesian(theta, s);
            let (f, g) = induced_field_at(x, y)?;
            let (xp, yp) = chart_to_cartesian(theta + h, s);
            let (xm, ym) = chart_to_cartesian(theta - h, s);
            let (tx, ty) = ((xp - xm) / (2.0 * h), (yp - ym) / (2.0 * h));
            let cross = (f * ty - g * tx).abs();
            let scale = (f.hypot(g)) * (tx.hypot(ty));
            worst = worst.max(cross / scale);
        }
        Ok((
            worst <= 1e-6,
            format!("max relative tangency defect = {worst:.3e}"),
        ))
    }));

    out.push(check("geometry/asymptotic_decay", || {
        // Per-fixture threshold for v = (r - 1) cos(theta): the envelope is
        // sqrt(2)/(2 pi |theta|), which drops below 1e-3 by theta = -300.
        let v = AnnulusFunction::new(vec![AnnulusTerm {
            coeff: 1.0,
            radial: vec![-1.0, 1.0],
            angular: Wave::Cos(1),
        }])?;
        let far = asymptotic_gap(&v, 0.0, -300.0, &cfg)?;
        let near = asymptotic_gap(&v, 0.0, -30.0, &cfg)?;
        Ok((
            far < 1e-3 && far < near,
            format!("gap(-300) = {far:.3e}, gap(-30) = {near:.3e}"),
        ))
    }));

    out
}

fn flow_checks() -> Vec<CheckOutcome> {
    let cfg = OperatorConfig::default();
    let mut out = Vec::new();

    let line_map = || -> Result<FlowMap> {
        let region = Region::new(vec![-40.0], vec![10.0])?;
        Ok(FlowMap::new(FlowField::new(
            vec![ScalarField::Constant(1.0)],
            region,
            1e-3,
            0.5,
        )?))
    };
    let rotation_map = || -> Result<FlowMap> {
        let region = Region::new(vec![-3.0, -3.0], vec![3.0, 3.0])?
            .with_hole(vec![-0.25, -0.25], vec![0.25, 0.25])?;
        Ok(FlowMap::new(FlowField::new(
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
            region,
            1e-3,
            0.2,
        )?))
    };

    out.push(check("flow/identity_at_zero", || {
        let map = rotation_map()?;
        let x = vec![1.1, -0.7];
        let y = map.flow(&x, 0.0)?;
        Ok((x == y, "Phi(x, 0) == x bitwise".into()))
    }));

    out.push(check("flow/inverse", || {
        let map = rotation_map()?;
        let x = vec![0.9, 0.5];
        let mut worst: f64 = 0.0;
        for a in [0.5, 2.0, 5.0] {
            let fwd = map.flow(&x, a)?;
            let back = map.flow(&fwd, -a)?;
            let err = ((back[0] - x[0]).powi(2) + (back[1] - x[1]).powi(2)).sqrt();
            worst = worst.max(err);
        }
        Ok((
            worst <= 1e-8,
            format!("max |Phi(Phi(x,a),-a) - x| = {worst:.3e}"),
        ))
    }));

    out.push(check("flow/bounded_by_input", || {
        let map = rotation_map()?;
        let v = ScalarField::Wave {
            axis: 0,
            freq: 1.0,
            amp: 0.7,
            phase: 0.3,
        };
        let mut worst: f64 = 0.0;
        for point in [[1.0, 0.0], [0.0, 1.5], [-1.1, 0.9]] {
            worst = worst.max(solve_field(&v, &map, &point, &cfg)?.abs());
        }
        Ok((worst <= 0.7 + 1e-9, format!("max |U| = {worst:.6}")))
    }));

    out.push(check("flow/directional_residual", || {
        let map = line_map()?;
        let v = ScalarField::Wave {
            axis: 0,
            freq: 1.0,
            amp: 1.0,
            phase: 0.0,
        };
        let x = [0.5];
        let residual_at = |h: f64| -> Result<f64> {
            let ahead = map.flow(&x, h)?;
            let u_ahead = solve_field(&v, &map, &ahead, &cfg)?;
            let u_here = solve_field(&v, &map, &x, &cfg)?;
            Ok(((u_ahead - u_here) / h + u_here - v.value(&x)).abs())
        };
        let coarse = residual_at(1e-1)?;
        let fine = residual_at(1e-3)?;
        Ok((
            fine < coarse && fine < 2e-3,
            format!("residual {coarse:.3e} -> {fine:.3e}"),
        ))
    }));

    out.push(check("flow/derivative_consistency", || {
        let map = line_map()?;
        let v = ScalarField::Wave {
            axis: 0,
            freq: 1.0,
            amp: 1.0,
            phase: 0.0,
        };
        let x = [0.5];
        let h = 1e-4;
        let direct = solve_field_derivative(&v, &map, &x, 0, h, &cfg)?;
        let up = solve_field(&v, &map, &[x[0] + h], &cfg)?;
        let down = solve_field(&v, &map, &[x[0] - h], &cfg)?;
        let fd = (up - down) / (2.0 * h);
        let defect = (direct - fd).abs();
        Ok((
            defect <= 1e-8,
            format!("|under-integral - FD(U)| = {defect:.3e}"),
        ))
    }));

    out
}

fn singular_checks() -> Vec<CheckOutcome> {
    let mut out = Vec::new();

    out.push(check("singular/junction_continuity", || {
        let grid = uniform_grid(-2.0, 2.0, 401);
        let mut worst: f64 = 0.0;
        for (_, v) in catalog_fixtures() {
            let sol = singular_line_solve(&v, &grid)?;
            for gap in sol.junction_gaps {
                worst = worst.max(gap);
            }
        }
        Ok((worst <= 1e-6, format!("max junction gap = {worst:.3e}")))
    }));

    out.push(check("singular/removable_singularity", || {
        let v = LeafFunction::constant(1.0)?;
        let mut grid = uniform_grid(-2.0, 2.0, 41);
        grid.extend_from_slice(&[1e-6, -1e-6]);
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let sol = singular_line_solve(&v, &grid)?;
        let err = (sol.value_at(1e-6).unwrap() - 1.0)
            .abs()
            .max((sol.value_at(-1e-6).unwrap() - 1.0).abs());
        Ok((err <= 1e-5, format!("|u(+-1e-6) - v(0)| = {err:.3e}")))
    }));

    out.push(check("singular/bounded_by_three", || {
        let v = LeafFunction::constant(1.0)?;
        let grid = uniform_grid(-50.0, 50.0, 2001);
        let sol = singular_line_solve(&v, &grid)?;
        let sup = sol.sup_abs();
        Ok((sup <= 3.0 + 1e-6, format!("sup |u| = {sup:.6}")))
    }));

    out.push(check("singular/residual_quadratic", || {
        let grid = uniform_grid(-2.0, 2.0, 401);
        let spacing = grid[1] - grid[0];
        let mut worst_ratio: f64 = 0.0;
        for (_, v) in catalog_fixtures() {
            let sol = singular_line_solve(&v, &grid)?;
            let r = singular_line_residual(&sol, &v)?;
            worst_ratio = worst_ratio.max(r / (spacing * spacing));
        }
        Ok((
            worst_ratio <= 40.0,
            format!("max residual / h^2 = {worst_ratio:.3}"),
        ))
    }));

    out.push(check("singular/obstruction_divergence", || {
        let one = LeafFunction::constant(1.0)?;
        let report = circle_obstruction(&one, &CocycleWeight::identity(), &DEFAULT_CUTOFFS)?;
        let slope_ok = (report.log_slopes.0 - -2.0).abs() <= 0.4;
        let zero = LeafFunction::constant(0.0)?;
        let zero_report = circle_obstruction(&zero, &CocycleWeight::identity(), &DEFAULT_CUTOFFS)?;
        Ok((
            report.divergent && slope_ok && zero_report.defect <= 1e-12,
            format!(
                "slope = {:.4}, zero-input defect = {:.3e}",
                report.log_slopes.0, zero_report.defect
            ),
        ))
    }));

    out.push(check("singular/naive_attempts_diverge", || {
        let attempts = naive_singular_demos();
        let ok = attempts[0].max_abs > 10.0
            && attempts[1].max_abs >= 500.0
            && attempts[2].max_abs > 1e11;
        Ok((
            ok,
            format!(
                "divergence measures {:.3e}, {:.3e}, {:.3e}",
                attempts[0].max_abs, attempts[1].max_abs, attempts[2].max_abs
            ),
        ))
    }));

    out
}

fn bundle_checks() -> Vec<CheckOutcome> {
    let cfg = OperatorConfig::default();
    let mut out = Vec::new();

    out.push(check("bundle/cocycle_closure", || {
        let mut worst: f64 = 0.0;
        for cover in [
            BundleCover::circle(),
            BundleCover::torus_leaf(),
            BundleCover::annulus(),
        ] {
            let report = verify_cocycle(&cover)?;
            if !report.consistent() {
                return Ok((false, format!("violations: {:?}", report.violations)));
            }
            worst = worst.max(report.max_deviation);
        }
        Ok((worst <= 1e-12, format!("max deviation = {worst:.3e}")))
    }));

    out.push(check("bundle/inconsistent_cover_flagged", || {
        let report = verify_cocycle(&BundleCover::inconsistent_triple())?;
        Ok((
            !report.consistent(),
            format!("flagged {} violations", report.violations.len()),
        ))
    }));

    out.push(check("bundle/glued_periodicity", || {
        let mut worst: f64 = 0.0;
        for (name, v) in catalog_fixtures() {
            if name == "cubic" {
                continue;
            }
            let section = circle_bundle_solve(&v, 33, &cfg)?;
            worst = worst.max(section.max_mismatch());
        }
        Ok((worst <= 2e-9, format!("max overlap mismatch = {worst:.3e}")))
    }));

    out.push(check("bundle/trivialization_roundtrip", || {
        let v = catalog_fixtures().remove(2).1;
        let section = circle_bundle_solve(&v, 17, &cfg)?;
        let mut worst: f64 = 0.0;
        for k in 0..section.profiles.len() {
            let frame = section.local_frame(k);
            for ((&t, &tilde), &u) in section.profiles[k]
                .grid
                .iter()
                .zip(&section.profiles[k].values)
                .zip(&frame)
            {
                worst = worst.max((u / t.exp() - tilde).abs() / (1.0 + tilde.abs()));
            }
        }
        Ok((worst <= 1e-14, format!("max roundtrip error = {worst:.3e}")))
    }));

    out.push(check("bundle/frame_independence", || {
        let delta = 0.4;
        let cover = BundleCover::new(
            vec![
                BoxChart {
                    id: "left".into(),
                    lo: 0.0,
                    hi: 1.0,
                    weight: WeightTag::Exp,
                },
                BoxChart {
                    id: "right".into(),
                    lo: 0.8 + delta,
                    hi: 2.0 + delta,
                    weight: WeightTag::Exp,
                },
            ],
            vec![Overlap {
                i: 0,
                j: 1,
                lo: 0.8,
                hi: 1.0,
                transition: delta.exp(),
            }],
        )?;
        let global = LeafFunction::trig(
            1.0,
            0.2,
            vec![TrigTerm {
                harmonic: 1,
                cos_coeff: 0.6,
                sin_coeff: -0.2,
            }],
        )?;
        let local = [global.clone(), global.shifted(delta)];
        let section = glue_general(&cover, &local, 17, &cfg)?;
        let worst = section.max_mismatch();
        Ok((
            worst <= 2.0 * cfg.epsilon,
            format!("max trivialized mismatch = {worst:.3e}"),
        ))
    }));

    out
}

/// Runs one named suite, or all of them for `"all"`.
pub fn run_suite(suite: &str) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let want = |name: &str| suite == "all" || suite == name;
    if want("operator") {
        out.extend(operator_checks());
    }
    if want("geometry") {
        out.extend(geometry_checks());
    }
    if want("flow") {
        out.extend(flow_checks());
    }
    if want("singular") {
        out.extend(singular_checks());
    }
    if want("bundle") {
        out.extend(bundle_checks());
    }
    if out.is_empty() {
        return Err(crate::error::Error::Config(format!(
            "unknown suite {suite}; expected all or one of {SUITES:?}"
        )));
    }
    Ok(out)
}
