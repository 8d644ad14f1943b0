//! Vector fields with zeros: the solvable weighted equation on the real
//! line, and the circle case where no weight family admits periodic
//! solutions.
//!
//! On the line the velocity profile is the clamped-linear
//!
//! ```text
//! phi(x) = 1 (x >= 1),   x (-1 < x < 1),   -1 (x <= -1)
//! ```
//!
//! with its only zero at the origin, and the equation solved is
//! `phi(x) (x e^|x| u(x))' = x e^|x| v(x)`. Anchoring the four branch
//! integrals at 0, 1, 0, -1 removes every free constant, the junction values
//! match, and the 0/0 point at the origin is removable with value `v(0)`.
//!
//! On the circle the field `sin(theta) d/dtheta` has zeros every half turn.
//! A weight `f` with `f(theta + 2 pi) = C f(theta)` turns the equation into
//! `(f u)' = f v / sin`, but the full-period integral of `f v / sin` either
//! diverges at the zeros or fails to vanish, so `u` cannot close up; the
//! report quantifies that obstruction on shrinking arc cutoffs.

use std::f64::consts::PI;

use crate::catalog::{LeafFn, LeafFunction};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_graded, integrate_with_breaks};

/// The clamped-linear velocity profile with a single zero at the origin.
pub fn phi(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Widest span the exponential weights tolerate before overflowing.
const MAX_SPAN: f64 = 690.0;
/// Internal quadrature panel width for the branch integrals.
const BRANCH_QUAD_STEP: f64 = 1e-3;
/// Evaluations this close to the origin use the series of the removable
/// singularity instead of dividing the integral by `x`.
const SERIES_RADIUS: f64 = 1e-4;
/// Junction points must appear in the caller's grid within this tolerance.
const JUNCTION_SNAP: f64 = 1e-9;

/// One branch of the piecewise solution.
#[derive(Debug, Clone)]
pub struct BranchProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// The four-branch solution of the weighted singular equation with its
/// junction matching report.
#[derive(Debug, Clone)]
pub struct PiecewiseSolution {
    /// `u1` on [0, 1].
    pub inner_right: BranchProfile,
    /// `u2` on [1, x_max].
    pub outer_right: BranchProfile,
    /// `u3` on [-1, 0].
    pub inner_left: BranchProfile,
    /// `u4` on [x_min, -1].
    pub outer_left: BranchProfile,
    /// Gaps `|u1(0)-u3(0)|`, `|u1(1)-u2(1)|`, `|u3(-1)-u4(-1)|`.
    pub junction_gaps: [f64; 3],
}

impl PiecewiseSolution {
    /// Solution value at `x`, read from whichever branch owns it.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        let lookup = |branch: &BranchProfile| {
            branch
                .grid
                .iter()
                .position(|&g| (g - x).abs() <= 1e-12)
                .map(|i| branch.values[i])
        };
        if x >= 1.0 {
            lookup(&self.outer_right)
        } else if x >= 0.0 {
            lookup(&self.inner_right)
        } else if x >= -1.0 {
            lookup(&self.inner_left)
        } else {
            lookup(&self.outer_left)
        }
    }

    pub fn branches(&self) -> [&BranchProfile; 4] {
        [
            &self.inner_right,
            &self.outer_right,
            &self.inner_left,
            &self.outer_left,
        ]
    }

    pub fn sup_abs(&self) -> f64 {
        self.branches()
            .iter()
            .flat_map(|b| b.values.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Series coefficients of `(int_0^x e^{sign t} v) / x` around the origin:
/// `sum_k coeff_k x^k / (k+1)` with `coeff_k = sum_j sign^{k-j} v_j / (j! (k-j)!)`.
fn origin_series(v: &LeafFunction, sign: f64) -> [f64; 4] {
    let derivs: Vec<f64> = (0..4).map(|j| v.derivative_at(0.0, j)).collect();
    let factorial = [1.0, 1.0, 2.0, 6.0];
    let mut coeffs = [0.0; 4];
    for (k, c) in coeffs.iter_mut().enumerate() {
        for (j, d) in derivs.iter().enumerate().take(k + 1) {
            *c += sign.powi((k - j) as i32) * d / (factorial[j] * factorial[k - j]);
        }
    }
    coeffs
}

fn series_value(coeffs: &[f64; 4], x: f64) -> f64 {
    coeffs[0] + coeffs[1] * x / 2.0 + coeffs[2] * x * x / 3.0 + coeffs[3] * x * x * x / 4.0
}

/// Solves `phi(x) (x e^|x| u)' = x e^|x| v` on a grid spanning at least
/// [-2, 2] and containing the junctions -1, 0, 1.
pub fn singular_line_solve(v: &LeafFunction, grid: &[f64]) -> Result<PiecewiseSolution> {
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "grid must be strictly increasing with >= 2 points".into(),
        ));
    }
    let (x_min, x_max) = (grid[0], grid[grid.len() - 1]);
    if x_min > -2.0 || x_max < 2.0 {
        return Err(Error::Config(format!(
            "grid [{x_min}, {x_max}] must span at least [-2, 2]"
        )));
    }
    if x_min < -MAX_SPAN || x_max > MAX_SPAN {
        return Err(Error::Config(format!(
            "grid span exceeds the exponential weight range +-{MAX_SPAN}"
        )));
    }
    for junction in [-1.0, 0.0, 1.0] {
        if !grid.iter().any(|&g| (g - junction).abs() <= JUNCTION_SNAP) {
            return Err(Error::Config(format!(
                "grid is missing the junction {junction}"
            )));
        }
    }

    let breaks = v.breakpoints();

    let interior = |lo: f64, hi: f64| -> Vec<f64> {
        grid.iter()
            .copied()
            .filter(|&g| g > lo + JUNCTION_SNAP && g < hi - JUNCTION_SNAP)
            .collect()
    };

    // u1 on [0, 1]: x e^x u1 = int_0^x e^t v.
    let series_right = origin_series(v, 1.0);
    let mut inner_right = BranchProfile {
        grid: std::iter::once(0.0)
            .chain(interior(0.0, 1.0))
            .chain(std::iter::once(1.0))
            .collect(),
        values: Vec::new(),
    };
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &x in &inner_right.grid {
        acc += integrate_with_breaks(
            |t| Ok(t.exp() * v.value(t)),
            prev,
            x,
            BRANCH_QUAD_STEP,
            &breaks,
        )?;
        prev = x;
        let u = if x.abs() < SERIES_RADIUS {
            (-x).exp() * series_value(&series_right, x)
        } else {
            (-x).exp() * acc / x
        };
        inner_right.values.push(u);
    }
    let u1_at_1 = *inner_right.values.last().unwrap();

    // u2 on [1, x_max]: x e^x u2 = int_1^x t e^t v + e u1(1).
    let mut outer_right = BranchProfile {
        grid: std::iter::once(1.0)
            .chain(interior(1.0, x_max + 1.0))
            .collect(),
        values: Vec::new(),
    };
    if (x_max - 1.0).abs() > JUNCTION_SNAP {
        outer_right.grid.push(x_max);
    }
    let carry_right = 1.0_f64.exp() * u1_at_1;
    let mut acc = 0.0;
    let mut prev = 1.0;
    for &x in &outer_right.grid {
        acc += integrate_with_breaks(
            |t| Ok(t * t.exp() * v.value(t)),
            prev,
            x,
            BRANCH_QUAD_STEP,
            &breaks,
        )?;
        prev = x;
        outer_right
            .values
            .push((-x).exp() * (acc + carry_right) / x);
    }

    // u3 on [-1, 0]: x e^{-x} u3 = int_0^x e^{-t} v (descending from 0).
    let series_left = origin_series(v, -1.0);
    let mut down: Vec<f64> = std::iter::once(0.0)
        .chain(interior(-1.0, 0.0).into_iter().rev())
        .chain(std::iter::once(-1.0))
        .collect();
    let mut values_down = Vec::with_capacity(down.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &x in &down {
        acc -= integrate_with_breaks(
            |t| Ok((-t).exp() * v.value(t)),
            x,
            prev,
            BRANCH_QUAD_STEP,
            &breaks,
        )?;
        prev = x;
        let u = if x.abs() < SERIES_RADIUS {
            x.exp() * series_value(&series_left, x)
        } else {
            x.exp() * acc / x
        };
        values_down.push(u);
    }
    down.reverse();
    values_down.reverse();
    let inner_left = BranchProfile {
        grid: down,
        values: values_down,
    };
    let u3_at_minus_1 = inner_left.values[0];

    // u4 on [x_min, -1]: x e^{-x} u4 = -int_{-1}^x t e^{-t} v - e u3(-1),
    // the orientation flip coming from phi = -1 on this branch.
    let mut down: Vec<f64> = std::iter::once(-1.0)
        .chain(interior(x_min - 1.0, -1.0).into_iter().rev())
        .collect();
    if (x_min + 1.0).abs() > JUNCTION_SNAP {
        down.push(x_min);
    }
    let carry_left = 1.0_f64.exp() * u3_at_minus_1;
    let mut values_down = Vec::with_capacity(down.len());
    let mut acc = 0.0;
    let mut prev = -1.0;
    for &x in &down {
        acc -= integrate_with_breaks(
            |t| Ok(t * (-t).exp() * v.value(t)),
            x,
            prev,
            BRANCH_QUAD_STEP,
            &breaks,
        )?;
        prev = x;
        values_down.push(x.exp() * (-acc - carry_left) / x);
    }
    down.reverse();
    values_down.reverse();
    let outer_left = BranchProfile {
        grid: down,
        values: values_down,
    };

    let junction_gaps = [
        (inner_right.values[0] - *inner_left.values.last().unwrap()).abs(),
        (u1_at_1 - outer_right.values[0]).abs(),
        (u3_at_minus_1 - *outer_left.values.last().unwrap()).abs(),
    ];

    Ok(PiecewiseSolution {
        inner_right,
        outer_right,
        inner_left,
        outer_left,
        junction_gaps,
    })
}

/// `sup |phi(x) (x e^|x| u)' - x e^|x| v(x)|` over branch-interior points,
/// the derivative by central differences, skipping a one-spacing
/// neighborhood of the junctions where the weight has a kink.
pub fn singular_line_residual(solution: &PiecewiseSolution, v: &LeafFunction) -> Result<f64> {
    let mut sup: f64 = 0.0;
    let mut checked = 0usize;
    for branch in solution.branches() {
        if branch.grid.len() < 5 {
            continue;
        }
        let weighted: Vec<f64> = branch
            .grid
            .iter()
            .zip(&branch.values)
            .map(|(&x, &u)| x * x.abs().exp() * u)
            .collect();
        for i in 1..branch.grid.len() - 1 {
            let x = branch.grid[i];
            let hl = x - branch.grid[i - 1];
            let hr = branch.grid[i + 1] - x;
            let spacing = hl.max(hr);
            if [-1.0, 0.0, 1.0]
                .iter()
                .any(|j| (x - j).abs() < spacing * (1.0 + 1e-9))
            {
                continue;
            }
            let dw = -hr / (hl * (hl + hr)) * weighted[i - 1]
                + (hr - hl) / (hl * hr) * weighted[i]
                + hl / (hr * (hl + hr)) * weighted[i + 1];
            let r = (phi(x) * dw - x * x.abs().exp() * v.value(x)).abs();
            sup = sup.max(r);
            checked += 1;
        }
    }
    if checked == 0 {
        return Err(Error::Domain(
            "branch grids have too few interior points for the residual".into(),
        ));
    }
    Ok(sup)
}

/// One rejected formulation of the singular-line equation, evaluated where
/// it blows up.
#[derive(Debug, Clone)]
pub struct NaiveAttempt {
    pub label: &'static str,
    pub formula: &'static str,
    pub samples: Vec<(f64, f64)>,
    pub max_abs: f64,
}

/// Evaluates the three unweighted / underweighted formulations for `v = 1`
/// on widening grids, recording the measured divergence that motivates the
/// `x e^|x|` weight.
pub fn naive_singular_demos() -> Vec<NaiveAttempt> {
    let mut attempts = Vec::new();

    // phi u' = 1 on (0, 1): u = ln x, unbounded at the zero of phi.
    let near_zero: Vec<(f64, f64)> = (1..=6)
        .map(|k| {
            let x = 10f64.powi(-k);
            (x, x.ln())
        })
        .collect();
    let max_abs = near_zero.iter().fold(0.0_f64, |m, &(_, u)| m.max(u.abs()));
    attempts.push(NaiveAttempt {
        label: "unweighted",
        formula: "u(x) = ln x on (0, 1)",
        samples: near_zero,
        max_abs,
    });

    // phi (x u)' = x: u = x/2 for x >= 1, unbounded at infinity.
    let far: Vec<(f64, f64)> = [1.0, 10.0, 100.0, 1000.0]
        .iter()
        .map(|&x| (x, 0.5 * x))
        .collect();
    let max_abs = far.iter().fold(0.0_f64, |m, &(_, u)| m.max(u.abs()));
    attempts.push(NaiveAttempt {
        label: "linear-weight",
        formula: "u(x) = x/2 for x >= 1",
        samples: far,
        max_abs,
    });

    // phi (x e^x u)' = x e^x: u = (x e^x - e^x + 1)/(x e^x), which for
    // x <= -1 is dominated by 1/(x e^x) and blows up toward -infinity.
    let negative: Vec<(f64, f64)> = [-1.0, -5.0, -10.0, -20.0, -30.0f64]
        .iter()
        .map(|&x| {
            let w = x * x.exp();
            (x, (w - x.exp() + 1.0) / w)
        })
        .collect();
    let max_abs = negative.iter().fold(0.0_f64, |m, &(_, u)| m.max(u.abs()));
    attempts.push(NaiveAttempt {
        label: "one-sided-exponential",
        formula: "u(x) = (x e^x - e^x + 1)/(x e^x) for x <= -1",
        samples: negative,
        max_abs,
    });

    attempts
}

// ---------------------------------------------------------------------------
// Circle obstruction
// ---------------------------------------------------------------------------

/// A weight `f(theta) = amplitude * e^{rate * theta}`, the exponential
/// family with `f(theta + 2 pi) = C f(theta)`, `C = e^{2 pi rate}`.
#[derive(Debug, Clone, Copy)]
pub struct CocycleWeight {
    pub amplitude: f64,
    pub rate: f64,
}

impl CocycleWeight {
    pub fn identity() -> Self {
        CocycleWeight {
            amplitude: 1.0,
            rate: 0.0,
        }
    }

    pub fn exponential(rate: f64) -> Self {
        CocycleWeight {
            amplitude: 1.0,
            rate,
        }
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.amplitude * (self.rate * theta).exp()
    }

    /// The constant `C` in `f(theta + 2 pi) = C f(theta)`.
    pub fn multiplier(&self) -> f64 {
        (2.0 * PI * self.rate).exp()
    }
}

/// Arc sample of the local primitive `u = (1/f) int f v / sin`.
#[derive(Debug, Clone)]
pub struct ArcProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// Measured obstruction to a periodic solution of
/// `sin(theta) (f u)' = f v` on the circle.
///
/// `u(theta + 2 pi) - u(theta) = (int_0^{2 pi} f v / sin) / (C f(theta))`
/// for every `theta`, so the full-period integral is the periodicity
/// defect up to the positive factor `C f`. It is probed on the arcs
/// `(eta, pi - eta)` and `(pi + eta, 2 pi - eta)` for shrinking `eta`;
/// either the arc integrals diverge (logarithmically for generic `v`) or
/// they converge and their sum is the finite defect.
#[derive(Debug, Clone)]
pub struct ObstructionReport {
    /// `C = f(theta + 2 pi)/f(theta)`.
    pub multiplier: f64,
    pub cutoffs: Vec<f64>,
    /// Per cutoff: integrals over `(eta, pi - eta)` and `(pi + eta, 2 pi - eta)`.
    pub arc_integrals: Vec<(f64, f64)>,
    /// Fitted `d I / d ln(eta)` per arc; +-2 signals the csc-type divergence.
    pub log_slopes: (f64, f64),
    pub divergent: bool,
    /// Infinite when divergent; otherwise the full-period integral at the
    /// smallest cutoff (recomputed from the arc values, never asserted).
    pub defect: f64,
    pub arc_one: ArcProfile,
    pub arc_two: ArcProfile,
}

/// Cutoffs used when the caller does not supply any.
pub const DEFAULT_CUTOFFS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Slope magnitude beyond which the arc integrals are declared divergent.
const DIVERGENCE_SLOPE: f64 = 0.1;

pub fn circle_obstruction(
    v: &LeafFunction,
    weight: &CocycleWeight,
    cutoffs: &[f64],
) -> Result<ObstructionReport> {
    let periodic = v.is_constant() || v.period().is_some_and(|p| (p - 2.0 * PI).abs() < 1e-12);
    if !periodic {
        return Err(Error::NotPeriodic("circle_obstruction"));
    }
    if cutoffs.len() < 2
        || cutoffs
            .iter()
            .any(|&e| !(e.is_finite() && e > 0.0 && e < 1.0))
    {
        return Err(Error::Domain("need >= 2 cutoffs in (0, 1)".into()));
    }
    let integrand =
        |theta: f64| -> Result<f64> { Ok(weight.value(theta) * v.value(theta) / theta.sin()) };
    let mut arc_integrals = Vec::with_capacity(cutoffs.len());
    for &eta in cutoffs {
        let one = integrate_graded(integrand, eta, PI - eta, 1e-2, 0.5 * eta)?;
        let two = integrate_graded(integrand, PI + eta, 2.0 * PI - eta, 1e-2, 0.5 * eta)?;
        arc_integrals.push((one, two));
    }

    let slope = |pick: fn(&(f64, f64)) -> f64| -> f64 {
        let xs: Vec<f64> = cutoffs.iter().map(|e| e.ln()).collect();
        let ys: Vec<f64> = arc_integrals.iter().map(pick).collect();
        let n = xs.len() as f64;
        let xm = xs.iter().sum::<f64>() / n;
        let ym = ys.iter().sum::<f64>() / n;
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
        let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
        num / den
    };
    let log_slopes = (slope(|p| p.0), slope(|p| p.1));
    let divergent = log_slopes.0.abs() > DIVERGENCE_SLOPE || log_slopes.1.abs() > DIVERGENCE_SLOPE;

    let smallest = cutoffs
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let defect = if divergent {
        f64::INFINITY
    } else {
        let (one, two) = arc_integrals[smallest];
        (one + two).abs()
    };

    // Arc primitives anchored mid-arc, sampled at the widest cutoff.
    let eta0 = cutoffs.iter().copied().fold(f64::MIN, f64::max);
    let arc_profile = |lo: f64, hi: f64, anchor: f64| -> Result<ArcProfile> {
        let n = 101;
        let grid: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        let mut values = Vec::with_capacity(n);
        for &theta in &grid {
            let (a, b) = if theta < anchor {
                (theta, anchor)
            } else {
                (anchor, theta)
            };
            let stretch = integrate_graded(integrand, a, b, 1e-2, 0.5 * eta0)?;
            let signed = if theta < anchor { -stretch } else { stretch };
            values.push(signed / weight.value(theta));
        }
        Ok(ArcProfile { grid, values })
    };
    let arc_one = arc_profile(eta0, PI - eta0, 0.5 * PI)?;
    let arc_two = arc_profile(PI + eta0, 2.0 * PI - eta0, 1.5 * PI)?;

    Ok(ObstructionReport {
        multiplier: weight.multiplier(),
        cutoffs: cutoffs.to_vec(),
        arc_integrals,
        log_slopes,
        divergent,
        defect,
        arc_one,
        arc_two,
    })
}
