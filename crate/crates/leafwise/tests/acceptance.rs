//! Acceptance suite: every headline behavior of the crate, one pass/fail
//! line per criterion, with pinned tolerances and runtime budgets. Runs as a
//! single test so the criteria execute in order and the total wall time is
//! meaningful.

use std::f64::consts::PI;
use std::time::Instant;

use leafwise::bundle::{circle_bundle_solve, parse_cover, verify_cocycle, BundleCover};
use leafwise::catalog::{LeafFunction, TrigTerm};
use leafwise::flow::{
    smoothness_order_check, solve_field, solve_field_derivative, FlowField, FlowMap, Region,
    ScalarField,
};
use leafwise::geometry::{
    asymptotic_gap, cartesian_to_chart, chart_to_cartesian, spiral_solve, torus_periodicity_defect,
    torus_solve, AnnulusFunction, AnnulusTerm, TorusFlow, TorusFunction, TorusTerm, Wave,
};
use leafwise::operator::{solve_on_line, solve_periodic, OperatorConfig};
use leafwise::singular::{circle_obstruction, singular_line_solve, CocycleWeight};

struct Criterion {
    name: &'static str,
    passed: bool,
    detail: String,
    seconds: f64,
}

fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn leaf_catalog() -> Vec<(&'static str, LeafFunction)> {
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

fn line_flow_map() -> FlowMap {
    FlowMap::new(
        FlowField::new(
            vec![ScalarField::Constant(1.0)],
            Region::new(vec![-40.0], vec![10.0]).unwrap(),
            1e-3,
            0.5,
        )
        .unwrap(),
    )
}

fn run(
    name: &'static str,
    body: impl FnOnce() -> Result<(bool, String), leafwise::Error>,
) -> Criterion {
    let started = Instant::now();
    let (passed, detail) = match body() {
        Ok(outcome) => outcome,
        Err(err) => (false, format!("error: {err}")),
    };
    Criterion {
        name,
        passed,
        detail,
        seconds: started.elapsed().as_secs_f64(),
    }
}

fn criterion_constant_absorption() -> Criterion {
    run("01 constant_absorption", || {
        let started = Instant::now();
        let cfg = OperatorConfig::default();
        let tol = 1e-9;
        let mut worst: f64 = 0.0;

        let one = LeafFunction::constant(1.0)?;
        let u = solve_on_line(&one, &uniform_grid(-2.0, 2.0, 101), &cfg)?;
        worst = u
            .values()
            .iter()
            .fold(worst, |m, &x| m.max((x - 1.0).abs()));

        let torus_one = TorusFunction::constant(1.0)?;
        let u = torus_solve(
            &torus_one,
            &TorusFlow::new(0.3),
            &uniform_grid(0.0, 1.0, 101),
            &cfg,
        )?;
        worst = u
            .values()
            .iter()
            .fold(worst, |m, &x| m.max((x - 1.0).abs()));

        let annulus_one = AnnulusFunction::constant(1.0)?;
        let u = spiral_solve(&annulus_one, 0.0, &uniform_grid(-5.0, 5.0, 101), &cfg)?;
        worst = u
            .values()
            .iter()
            .fold(worst, |m, &x| m.max((x - 1.0).abs()));

        let circle_one = LeafFunction::trig(2.0 * PI, 1.0, vec![])?;
        let u = solve_periodic(&circle_one, &uniform_grid(0.0, 2.0 * PI, 101), &cfg)?;
        worst = u
            .values()
            .iter()
            .fold(worst, |m, &x| m.max((x - 1.0).abs()));

        let map = line_flow_map();
        for x in [-1.5, -0.5, 0.0, 0.7, 2.0] {
            let u = solve_field(&ScalarField::Constant(1.0), &map, &[x], &cfg)?;
            worst = worst.max((u - 1.0).abs());
        }

        let elapsed = started.elapsed().as_secs_f64();
        let passed = worst <= tol && elapsed < 1.0;
        Ok((
            passed,
            format!("max |u - 1| = {worst:.3e} (tol {tol:.0e}), runtime {elapsed:.2} s (< 1 s)"),
        ))
    })
}

fn criterion_ode_residual() -> Criterion {
    run("02 ode_residual_catalog", || {
        let started = Instant::now();
        let cfg = OperatorConfig::new(1e-9).with_quad_step(1e-2);
        let grid = uniform_grid(0.0, 0.8, 401);
        let tol = 1e-6;
        let mut worst: f64 = 0.0;
        let mut detail = String::new();
        for (name, v) in leaf_catalog() {
            let u = solve_on_line(&v, &grid, &cfg)?;
            let r = u.residual_sup().unwrap();
            worst = worst.max(r);
            if !detail.is_empty() {
                detail.push_str(", ");
            }
            detail.push_str(&format!("{name} {r:.2e}"));
        }
        let elapsed = started.elapsed().as_secs_f64();
        let passed = worst <= tol && elapsed < 5.0;
        Ok((passed, format!("{detail}; runtime {elapsed:.2} s (< 5 s)")))
    })
}

fn criterion_periodicity() -> Criterion {
    run("03 periodicity", || {
        let cfg = OperatorConfig::default();
        let tol = 2e-9;
        let mut worst_torus: f64 = 0.0;
        let torus_fixtures = [
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
        let flow = TorusFlow::new(0.3);
        for v in &torus_fixtures {
            for &t in &[0.0, 0.2, 0.5, 0.8] {
                worst_torus = worst_torus.max(torus_periodicity_defect(v, &flow, t, &cfg)?);
            }
        }

        let mut worst_bundle: f64 = 0.0;
        for (name, v) in leaf_catalog() {
            if name == "cubic" {
                continue;
            }
            let section = circle_bundle_solve(&v, 65, &cfg)?;
            worst_bundle = worst_bundle.max(section.max_mismatch());
        }
        let passed = worst_torus <= tol && worst_bundle <= tol;
        Ok((
            passed,
            format!("torus defect {worst_torus:.3e}, circle-bundle mismatch {worst_bundle:.3e} (tol {tol:.0e})"),
        ))
    })
}

fn criterion_truncation_certificate() -> Criterion {
    run("04 truncation_certificate", || {
        let cfg = OperatorConfig::default();
        let grid = uniform_grid(-2.0, 2.0, 101);
        let mut worst: f64 = 0.0;
        for (_, v) in leaf_catalog() {
            let base = solve_on_line(&v, &grid, &cfg)?;
            let doubled = solve_on_line(
                &v,
                &grid,
                &cfg.clone().with_truncation(2.0 * base.truncation_used()),
            )?;
            for (a, b) in base.values().iter().zip(doubled.values()) {
                worst = worst.max((a - b).abs());
            }
        }
        let tol = 0.5 * cfg.epsilon;
        Ok((
            worst <= tol,
            format!("max change under 2L = {worst:.3e} (tol {tol:.1e})"),
        ))
    })
}

fn criterion_smoothness() -> Criterion {
    run("05 smoothness_derivatives", || {
        let cfg = OperatorConfig::default();
        let map = line_flow_map();
        let x = [0.5];

        // Derivative under the integral vs finite differences of U itself,
        // both at h_fd = 1e-4.
        let h = 1e-4;
        let mut worst_agreement: f64 = 0.0;
        let fixtures = [
            ScalarField::Wave {
                axis: 0,
                freq: 1.0,
                amp: 1.0,
                phase: 0.0,
            },
            ScalarField::Wave {
                axis: 0,
                freq: 2.0,
                amp: 1.0,
                phase: 0.0,
            },
            ScalarField::Coordinate {
                axis: 0,
                scale: 1.0,
            },
        ];
        for v in &fixtures {
            let direct = solve_field_derivative(v, &map, &x, 0, h, &cfg)?;
            let up = solve_field(v, &map, &[x[0] + h], &cfg)?;
            let down = solve_field(v, &map, &[x[0] - h], &cfg)?;
            worst_agreement = worst_agreement.max((direct - (up - down) / (2.0 * h)).abs());
        }

        // Richardson convergence orders 1 and 2 at steps {1e-3, 5e-4}.
        let smooth = ScalarField::Wave {
            axis: 0,
            freq: 2.0,
            amp: 1.0,
            phase: 0.0,
        };
        let report = smoothness_order_check(&smooth, &map, &x, 0, 2, 1e-3, &cfg)?;
        let orders: Vec<f64> = report.orders.iter().map(|c| c.richardson_order).collect();
        let orders_ok = orders.iter().all(|o| (1.7..=2.3).contains(o));

        let passed = worst_agreement <= 1e-5 && orders_ok;
        Ok((
            passed,
            format!(
                "max |dU - FD(U)| = {worst_agreement:.3e} (tol 1e-5), richardson orders {orders:.3?} (in [1.7, 2.3])"
            ),
        ))
    })
}

fn criterion_singular_line() -> Criterion {
    run("06 singular_line", || {
        let v = LeafFunction::constant(1.0)?;
        let mut grid = uniform_grid(-50.0, 50.0, 2001);
        grid.extend_from_slice(&[1e-6, -1e-6]);
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let solution = singular_line_solve(&v, &grid)?;

        let sup = solution.sup_abs();
        let near = (solution.value_at(1e-6).unwrap() - 1.0)
            .abs()
            .max((solution.value_at(-1e-6).unwrap() - 1.0).abs());
        let worst_gap = solution
            .junction_gaps
            .iter()
            .fold(0.0_f64, |m, g| m.max(*g));

        let passed = sup <= 3.0 + 1e-6 && near <= 1e-5 && worst_gap <= 1e-6;
        Ok((
            passed,
            format!(
                "sup|u| = {sup:.6} (<= 3+1e-6), |u(+-1e-6) - 1| = {near:.3e} (tol 1e-5), junction gaps <= {worst_gap:.3e} (tol 1e-6)"
            ),
        ))
    })
}

fn criterion_circle_obstruction() -> Criterion {
    run("07 circle_obstruction", || {
        let cutoffs = [1e-2, 1e-3, 1e-4];
        let one = LeafFunction::constant(1.0)?;
        let report = circle_obstruction(&one, &CocycleWeight::identity(), &cutoffs)?;
        let slope = report.log_slopes.0;
        let slope_ok = report.divergent && (slope - -2.0).abs() <= 0.2 * 2.0;

        let zero = LeafFunction::constant(0.0)?;
        let zero_report = circle_obstruction(&zero, &CocycleWeight::identity(), &cutoffs)?;
        let zero_ok = zero_report.defect <= 1e-12;

        Ok((
            slope_ok && zero_ok,
            format!(
                "csc-fit slope = {slope:.4} (within 20% of -2), zero-input defect = {:.1e} (tol 1e-12)",
                zero_report.defect
            ),
        ))
    })
}

fn criterion_cocycle_closure() -> Criterion {
    run("08 cocycle_closure", || {
        let mut worst: f64 = 0.0;
        let covers_dir = concat!(env!("CARGO_MANIFEST_DIR"), "/covers");
        for (cover, file) in [
            (BundleCover::circle(), "circle.cover"),
            (BundleCover::torus_leaf(), "torus-leaf.cover"),
            (BundleCover::annulus(), "annulus.cover"),
        ] {
            let report = verify_cocycle(&cover)?;
            if !report.consistent() {
                return Ok((false, format!("{file} counterpart inconsistent")));
            }
            worst = worst.max(report.max_deviation);
            // The shipped file parses to an equally consistent cover.
            let text = std::fs::read_to_string(format!("{covers_dir}/{file}"))?;
            let parsed = parse_cover(&text)?;
            let report = verify_cocycle(&parsed)?;
            if !report.consistent() {
                return Ok((false, format!("shipped {file} inconsistent")));
            }
            worst = worst.max(report.max_deviation);
        }

        let bad = verify_cocycle(&BundleCover::inconsistent_triple())?;
        let bad_file = parse_cover(&std::fs::read_to_string(format!(
            "{covers_dir}/inconsistent3.cover"
        ))?)?;
        let bad_file_report = verify_cocycle(&bad_file)?;
        let flagged = !bad.consistent() && !bad_file_report.consistent();

        Ok((
            worst <= 1e-12 && flagged,
            format!("shipped deviation = {worst:.3e} (tol 1e-12), inconsistent fixture flagged = {flagged}"),
        ))
    })
}

fn criterion_asymptotic_matching() -> Criterion {
    run("09 asymptotic_matching", || {
        // Fixture v = (r - 1) cos(theta), spiral s = 0, gaps against the
        // inner circle at theta in {-5, -10, -15, -20}.
        let v = AnnulusFunction::new(vec![AnnulusTerm {
            coeff: 1.0,
            radial: vec![-1.0, 1.0],
            angular: Wave::Cos(1),
        }])?;
        let cfg = OperatorConfig::default();
        let thetas = [-5.0, -10.0, -15.0, -20.0];
        let mut gaps = Vec::new();
        for &theta in &thetas {
            gaps.push(asymptotic_gap(&v, 0.0, theta, &cfg)?);
        }
        let below = gaps[3] < 1e-3;
        let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
        Ok((
            below && monotone,
            format!(
                "gaps at {thetas:?} = [{:.3e}, {:.3e}, {:.3e}, {:.3e}]; gap(-20) < 1e-3: {below}, monotone: {monotone}",
                gaps[0], gaps[1], gaps[2], gaps[3]
            ),
        ))
    })
}

fn criterion_chart_round_trip() -> Criterion {
    run("10 chart_round_trip", || {
        let mut worst: f64 = 0.0;
        for i in 0..100 {
            for j in 0..100 {
                let theta = -6.0 * PI + 12.0 * PI * i as f64 / 99.0;
                let s = (-PI + 0.01) + (2.0 * PI - 0.02) * j as f64 / 99.0;
                let (x, y) = chart_to_cartesian(theta, s);
                let (theta2, s2) = cartesian_to_chart(x, y)?;
                worst = worst.max((theta2 - theta).abs()).max((s2 - s).abs());
            }
        }
        Ok((
            worst <= 1e-10,
            format!("max deviation over 10^4 lattice = {worst:.3e} (tol 1e-10)"),
        ))
    })
}

#[test]
fn acceptance_criteria() {
    let suite_started = Instant::now();
    let criteria = vec![
        criterion_constant_absorption(),
        criterion_ode_residual(),
        criterion_periodicity(),
        criterion_truncation_certificate(),
        criterion_smoothness(),
        criterion_singular_line(),
        criterion_circle_obstruction(),
        criterion_cocycle_closure(),
        criterion_asymptotic_matching(),
        criterion_chart_round_trip(),
    ];
    let total = suite_started.elapsed().as_secs_f64();

    for c in &criteria {
        println!(
            "criterion {}: {} ({}; {:.2} s)",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail,
            c.seconds
        );
    }
    println!("acceptance suite total runtime: {total:.2} s (< 60 s)");

    let mut failures: Vec<String> = criteria
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.to_string())
        .collect();
    if total >= 60.0 {
        failures.push("suite runtime >= 60 s".into());
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
