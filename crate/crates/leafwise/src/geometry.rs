//! Concrete foliated geometries: the linear irrational flow on the torus,
//! the spiral between two concentric circles, and the full annulus foliation
//! with its chart transforms and induced tangent field.
//!
//! The annulus is foliated by the circles `r = 1`, `r = 2` and the spirals
//!
//! ```text
//! r(theta, s) = 3/2 + arctan(theta + s) / pi,   s in [-pi, pi]
//! ```
//!
//! which stay strictly between the circles and accumulate on them as
//! `theta -> -inf / +inf`. The `1/pi` normalization is what keeps
//! `r in (1, 2)` and makes the inverse chart
//! `theta + s = tan(pi (sqrt(x^2+y^2) - 3/2))` exact.

use std::f64::consts::PI;

use crate::catalog::{BoundedFn, LeafFn, LeafFunction, TrigTerm};
use crate::error::{Error, Result};
use crate::operator::{
    periodic_reduction_value, solve_on_line, solve_periodic, OperatorConfig, SolutionProfile,
};

/// An angular factor `1`, `cos(k theta)` or `sin(k theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wave {
    One,
    Cos(u32),
    Sin(u32),
}

impl Wave {
    pub fn eval(&self, angle: f64) -> f64 {
        match self {
            Wave::One => 1.0,
            Wave::Cos(k) => (*k as f64 * angle).cos(),
            Wave::Sin(k) => (*k as f64 * angle).sin(),
        }
    }
}

// ---------------------------------------------------------------------------
// Torus
// ---------------------------------------------------------------------------

/// The linear flow `t -> (t, slope t + offset)` on the unit torus; the
/// canonical instance has irrational slope sqrt(2), so each leaf is dense.
#[derive(Debug, Clone, Copy)]
pub struct TorusFlow {
    pub slope: f64,
    pub offset: f64,
}

impl TorusFlow {
    /// Leaf with slope sqrt(2) through `(0, offset)`.
    pub fn new(offset: f64) -> Self {
        TorusFlow {
            slope: std::f64::consts::SQRT_2,
            offset,
        }
    }

    pub fn with_slope(slope: f64, offset: f64) -> Self {
        TorusFlow { slope, offset }
    }

    /// The torus point at leaf parameter `t`, folded into the unit square.
    pub fn point_at(&self, t: f64) -> (f64, f64) {
        (
            t.rem_euclid(1.0),
            (self.slope * t + self.offset).rem_euclid(1.0),
        )
    }
}

/// One product term `coeff * wx(2 pi x) * wy(2 pi y)` of a torus function.
#[derive(Debug, Clone, Copy)]
pub struct TorusTerm {
    pub coeff: f64,
    pub x_wave: Wave,
    pub y_wave: Wave,
}

/// A function on the unit torus, 1-periodic in both arguments by
/// construction, with the certified bound `sum |coeff|`.
#[derive(Debug, Clone)]
pub struct TorusFunction {
    terms: Vec<TorusTerm>,
    bound: f64,
}

impl TorusFunction {
    pub fn new(terms: Vec<TorusTerm>) -> Result<Self> {
        if terms.iter().any(|t| !t.coeff.is_finite()) {
            return Err(Error::Domain(
                "torus term coefficients must be finite".into(),
            ));
        }
        let bound = terms.iter().map(|t| t.coeff.abs()).sum();
        Ok(TorusFunction { terms, bound })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(vec![TorusTerm {
            coeff: c,
            x_wave: Wave::One,
            y_wave: Wave::One,
        }])
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let (ax, ay) = (2.0 * PI * x, 2.0 * PI * y);
        self.terms
            .iter()
            .map(|t| t.coeff * t.x_wave.eval(ax) * t.y_wave.eval(ay))
            .sum()
    }

    pub fn sup_bound(&self) -> f64 {
        self.bound
    }

    /// Restriction to the leaf `t -> (t, slope t + offset)`; the waves are
    /// analytically periodic, so no folding is needed.
    fn on_leaf<'a>(&'a self, flow: &TorusFlow) -> impl LeafFn + 'a {
        let flow = *flow;
        BoundedFn {
            f: move |t: f64| self.value(t, flow.slope * t + flow.offset),
            bound: self.bound,
        }
    }
}

/// Solves `u + du/dt = v` along one torus leaf and checks that the result
/// descends to the torus: `U(x + 1, y) = U(x, y)` within `2 epsilon`.
///
/// The point `(x + 1, y)` lies on the leaf with offset shifted by `-slope`,
/// so the check compares this leaf's solve with the shifted leaf's.
pub fn torus_solve(
    v: &TorusFunction,
    flow: &TorusFlow,
    grid: &[f64],
    cfg: &OperatorConfig,
) -> Result<SolutionProfile> {
    let leaf = v.on_leaf(flow);
    let profile = solve_on_line(&leaf, grid, cfg)?;
    let tol = (2.0 * cfg.epsilon).max(1e-11 * (1.0 + v.sup_bound()));
    let stride = grid.len().div_ceil(8).max(1);
    for (k, &t) in grid.iter().enumerate().step_by(stride) {
        let defect = torus_periodicity_defect_at(v, flow, t, profile.values()[k], cfg)?;
        if defect > tol {
            return Err(Error::Invariant(format!(
                "torus solution failed to descend: |U(x+1,y) - U(x,y)| = {defect} at t = {t}"
            )));
        }
    }
    Ok(profile)
}

fn torus_periodicity_defect_at(
    v: &TorusFunction,
    flow: &TorusFlow,
    t: f64,
    value_here: f64,
    cfg: &OperatorConfig,
) -> Result<f64> {
    let shifted_flow = TorusFlow {
        slope: flow.slope,
        offset: flow.offset - flow.slope,
    };
    let shifted_leaf = v.on_leaf(&shifted_flow);
    let truncation = cfg.truncation_for(v.sup_bound());
    let shifted_value =
        crate::operator::weighted_tail_integral(&shifted_leaf, t + 1.0, truncation, cfg.quad_step)?;
    Ok((shifted_value - value_here).abs())
}

/// `|U(x+1, y) - U(x, y)|` at leaf parameter `t`: both sides solved
/// independently on their own leaves.
pub fn torus_periodicity_defect(
    v: &TorusFunction,
    flow: &TorusFlow,
    t: f64,
    cfg: &OperatorConfig,
) -> Result<f64> {
    cfg.validate()?;
    let leaf = v.on_leaf(flow);
    let truncation = cfg.truncation_for(v.sup_bound());
    let here = crate::operator::weighted_tail_integral(&leaf, t, truncation, cfg.quad_step)?;
    torus_periodicity_defect_at(v, flow, t, here, cfg)
}

// ---------------------------------------------------------------------------
// Spiral chart
// ---------------------------------------------------------------------------

/// One spiral leaf of the annulus foliation, labeled by `s` in [-pi, pi].
#[derive(Debug, Clone, Copy)]
pub struct SpiralChart {
    s: f64,
}

impl SpiralChart {
    pub fn new(s: f64) -> Result<Self> {
        if !(-PI..=PI).contains(&s) {
            return Err(Error::Domain(format!(
                "leaf label {s} must lie in [-pi, pi]"
            )));
        }
        Ok(SpiralChart { s })
    }

    pub fn label(&self) -> f64 {
        self.s
    }

    pub fn radius(&self, theta: f64) -> f64 {
        spiral_radius(theta, self.s)
    }

    pub fn point(&self, theta: f64) -> (f64, f64) {
        chart_to_cartesian(theta, self.s)
    }

    /// Chart-side leaf tangent `(dx/dtheta, dy/dtheta)`.
    pub fn tangent(&self, theta: f64) -> (f64, f64) {
        let r = self.radius(theta);
        let dr = spiral_radius_derivative(theta, self.s);
        (
            theta.cos() * dr - r * theta.sin(),
            theta.sin() * dr + r * theta.cos(),
        )
    }
}

/// Radius of the spiral with leaf label `s` at angle parameter `theta`.
pub fn spiral_radius(theta: f64, s: f64) -> f64 {
    1.5 + (theta + s).atan() / PI
}

/// Derivative `dr/dtheta` of the radius law.
pub fn spiral_radius_derivative(theta: f64, s: f64) -> f64 {
    let z = theta + s;
    1.0 / (PI * (1.0 + z * z))
}

/// The plane point of chart coordinates `(theta, s)`.
pub fn chart_to_cartesian(theta: f64, s: f64) -> (f64, f64) {
    let r = spiral_radius(theta, s);
    (r * theta.cos(), r * theta.sin())
}

/// Chart coordinates of a plane point strictly inside the annulus: the
/// unique `(theta, s)` with `s in [-pi, pi]`, `theta` being the polar angle
/// lifted by the winding that puts `s` in range.
///
/// ```
/// use leafwise::geometry::{cartesian_to_chart, chart_to_cartesian};
///
/// let (x, y) = chart_to_cartesian(7.25, -0.4);
/// let (theta, s) = cartesian_to_chart(x, y).unwrap();
/// assert!((theta - 7.25).abs() < 1e-10 && (s - -0.4).abs() < 1e-10);
/// ```
pub fn cartesian_to_chart(x: f64, y: f64) -> Result<(f64, f64)> {
    let radius = (x * x + y * y).sqrt();
    if !(radius > 1.0 && radius < 2.0) {
        return Err(Error::OutOfAnnulus { x, y, radius });
    }
    // theta + s inverts the radius law exactly.
    let total = (PI * (radius - 1.5)).tan();
    let base_angle = y.atan2(x);
    let raw_s = total - base_angle;
    let winding = (raw_s / (2.0 * PI)).round();
    let s = raw_s - 2.0 * PI * winding;
    let theta = base_angle + 2.0 * PI * winding;
    Ok((theta, s))
}

/// The leaf-tangent vector `(F, G)` of the spiral foliation at a plane point:
/// the pushforward of `d/dtheta` through the chart,
/// `F = cos(theta) dr/dtheta - r sin(theta)`,
/// `G = sin(theta) dr/dtheta + r cos(theta)`.
pub fn induced_field_at(x: f64, y: f64) -> Result<(f64, f64)> {
    let (theta, s) = cartesian_to_chart(x, y)?;
    let r = spiral_radius(theta, s);
    let dr = spiral_radius_derivative(theta, s);
    let (c, sn) = (theta.cos(), theta.sin());
    Ok((c * dr - r * sn, sn * dr + r * c))
}

// ---------------------------------------------------------------------------
// Annulus functions
// ---------------------------------------------------------------------------

/// One term `coeff * p(r) * wave(theta)` of an annulus function; `p` is a
/// polynomial evaluated on `[1, 2]`.
#[derive(Debug, Clone)]
pub struct AnnulusTerm {
    pub coeff: f64,
    pub radial: Vec<f64>,
    pub angular: Wave,
}

/// A continuous function on the closed annulus built from radial polynomials
/// and angular harmonics. Because every term depends on `theta` only through
/// `cos/sin(k theta)` and on `r` continuously, its restrictions to spirals
/// converge to the circle restrictions as `theta -> -inf / +inf`.
#[derive(Debug, Clone)]
pub struct AnnulusFunction {
    terms: Vec<AnnulusTerm>,
    bound: f64,
}

impl AnnulusFunction {
    pub fn new(terms: Vec<AnnulusTerm>) -> Result<Self> {
        let mut bound = 0.0;
        for term in &terms {
            if !term.coeff.is_finite() || term.radial.iter().any(|c| !c.is_finite()) {
                return Err(Error::Domain(
                    "annulus term coefficients must be finite".into(),
                ));
            }
            if term.radial.is_empty() {
                return Err(Error::Domain(
                    "annulus radial polynomial must be nonempty".into(),
                ));
            }
            bound += term.coeff.abs() * poly_sup_on(&term.radial, 1.0, 2.0);
        }
        Ok(AnnulusFunction { terms, bound })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(vec![AnnulusTerm {
            coeff: c,
            radial: vec![1.0],
            angular: Wave::One,
        }])
    }

    pub fn value(&self, r: f64, theta: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * eval_poly(&t.radial, r) * t.angular.eval(theta))
            .sum()
    }

    pub fn sup_bound(&self) -> f64 {
        self.bound
    }

    /// Restriction to the spiral with label `s`.
    pub(crate) fn on_spiral<'a>(&'a self, s: f64) -> impl LeafFn + 'a {
        BoundedFn {
            f: move |theta: f64| self.value(spiral_radius(theta, s), theta),
            bound: self.bound,
        }
    }

    /// Restriction to the circle `r = radius`, re-expressed as an exactly
    /// 2 pi periodic trigonometric catalog function.
    pub fn on_circle(&self, radius: f64) -> Result<LeafFunction> {
        let mut mean = 0.0;
        let mut cos_coeffs: std::collections::BTreeMap<u32, f64> = Default::default();
        let mut sin_coeffs: std::collections::BTreeMap<u32, f64> = Default::default();
        for term in &self.terms {
            let amp = term.coeff * eval_poly(&term.radial, radius);
            match term.angular {
                Wave::One => mean += amp,
                Wave::Cos(k) => *cos_coeffs.entry(k).or_insert(0.0) += amp,
                Wave::Sin(k) => *sin_coeffs.entry(k).or_insert(0.0) += amp,
            }
        }
        let harmonics: std::collections::BTreeSet<u32> = cos_coeffs
            .keys()
            .chain(sin_coeffs.keys())
            .copied()
            .collect();
        let terms = harmonics
            .into_iter()
            .map(|k| TrigTerm {
                harmonic: k,
                cos_coeff: cos_coeffs.get(&k).copied().unwrap_or(0.0),
                sin_coeff: sin_coeffs.get(&k).copied().unwrap_or(0.0),
            })
            .collect();
        LeafFunction::trig(2.0 * PI, mean, terms)
    }
}

/// Solves the damped transport equation along the spiral with label `s`.
pub fn spiral_solve(
    v: &AnnulusFunction,
    s: f64,
    theta_grid: &[f64],
    cfg: &OperatorConfig,
) -> Result<SolutionProfile> {
    let leaf = v.on_spiral(s);
    solve_on_line(&leaf, theta_grid, cfg)
}

/// Solves along the boundary circle `r = radius` (1 or 2) via the periodic
/// reduction.
pub fn circle_solve(
    v: &AnnulusFunction,
    radius: f64,
    theta_grid: &[f64],
    cfg: &OperatorConfig,
) -> Result<SolutionProfile> {
    let restriction = v.on_circle(radius)?;
    solve_periodic(&restriction, theta_grid, cfg)
}

/// `|u(r(theta, s), theta) - u(circle, theta)|`: the solution gap between the
/// spiral leaf and the circle it accumulates on (inner for `theta < 0`,
/// outer for `theta >= 0`), both solved by the weighted-integral operator.
pub fn asymptotic_gap(
    v: &AnnulusFunction,
    s: f64,
    theta: f64,
    cfg: &OperatorConfig,
) -> Result<f64> {
    cfg.validate()?;
    let leaf = v.on_spiral(s);
    let truncation = cfg.truncation_for(v.sup_bound());
    let on_spiral =
        crate::operator::weighted_tail_integral(&leaf, theta, truncation, cfg.quad_step)?;
    let radius = if theta < 0.0 { 1.0 } else { 2.0 };
    let restriction = v.on_circle(radius)?;
    let on_circle = if restriction.is_constant() {
        restriction.value(theta)
    } else {
        periodic_reduction_value(&restriction, 2.0 * PI, theta, cfg.quad_step)?
    };
    let gap = (on_spiral - on_circle).abs();
    if !gap.is_finite() {
        return Err(Error::Eval { point: theta });
    }
    Ok(gap)
}

fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Certified sup of |p| on [lo, hi]: dense samples plus a derivative-bound
/// correction.
fn poly_sup_on(coeffs: &[f64], lo: f64, hi: f64) -> f64 {
    let radius = lo.abs().max(hi.abs()).max(1.0);
    let deriv_bound: f64 = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| i as f64 * c.abs() * radius.powi(i as i32 - 1))
        .sum();
    let samples = 256;
    let step = (hi - lo) / samples as f64;
    let mut max_sample: f64 = 0.0;
    for k in 0..=samples {
        max_sample = max_sample.max(eval_poly(coeffs, lo + k as f64 * step).abs());
    }
    max_sample + 0.5 * step * deriv_bound
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::test_oracles::simpson_operator_value;

    fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn spiral_radius_values() {
        assert_eq!(spiral_radius(0.0, 0.0), 1.5);
        assert_eq!(spiral_radius(1.0, -1.0), 1.5);
        // Confined strictly between the circles even far out.
        for z in [-1e6, -1e3, 0.0, 1e3, 1e6] {
            let r = spiral_radius(z, 0.0);
            assert!(r > 1.0 && r < 2.0, "r({z}) = {r}");
        }
        assert!((spiral_radius(1e6, 0.0) - 2.0).abs() < 1e-5);
        assert!((spiral_radius(-1e6, 0.0) - 1.0).abs() < 1e-5);
        // Monotone in theta.
        assert!(spiral_radius(0.1, 0.3) > spiral_radius(0.0, 0.3));
    }

    #[test]
    fn chart_maps_are_mutually_inverse() {
        let (x, y) = chart_to_cartesian(0.0, 0.0);
        assert!((x - 1.5).abs() < 1e-15 && y.abs() < 1e-15);
        let (theta, s) = cartesian_to_chart(1.5, 0.0).unwrap();
        assert!(theta.abs() < 1e-12 && s.abs() < 1e-12);

        for &theta in &[-6.0 * PI, -3.7, -0.4, 0.0, 1.3, 2.9 * PI, 6.0 * PI] {
            for &s in &[-PI + 0.01, -1.0, 0.0, 2.2, PI - 0.01] {
                let (x, y) = chart_to_cartesian(theta, s);
                let (t2, s2) = cartesian_to_chart(x, y).unwrap();
                assert!(
                    (t2 - theta).abs() < 1e-10 && (s2 - s).abs() < 1e-10,
                    "roundtrip ({theta}, {s}) -> ({t2}, {s2})"
                );
            }
        }
    }

    #[test]
    fn chart_point_on_the_vertical_axis() {
        // At theta = pi/2 the point sits straight up at radius
        // 3/2 + arctan(pi/2)/pi.
        let (x, y) = chart_to_cartesian(std::f64::consts::FRAC_PI_2, 0.0);
        let radius = 1.5 + std::f64::consts::FRAC_PI_2.atan() / PI;
        assert!(x.abs() < 1e-15);
        assert!((y - radius).abs() < 1e-15);
    }

    #[test]
    fn chart_inverse_on_the_positive_axis() {
        // r = 1.75 on the positive x axis: s = tan(pi/4) = 1 with theta = 0.
        let (theta, s) = cartesian_to_chart(1.75, 0.0).unwrap();
        assert!(theta.abs() < 1e-12);
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chart_rejects_points_outside_the_open_annulus() {
        for (x, y) in [(0.5, 0.0), (2.5, 0.0), (1.0, 0.0), (2.0, 0.0), (0.0, 0.0)] {
            assert!(matches!(
                cartesian_to_chart(x, y),
                Err(Error::OutOfAnnulus { .. })
            ));
        }
    }

    #[test]
    fn induced_field_reference_point() {
        let (f, g) = induced_field_at(1.5, 0.0).unwrap();
        assert!((f - 1.0 / PI).abs() < 1e-12);
        assert!((g - 1.5).abs() < 1e-12);
    }

    #[test]
    fn spiral_chart_handle_matches_free_functions() {
        let leaf = SpiralChart::new(0.7).unwrap();
        assert_eq!(leaf.radius(2.0), spiral_radius(2.0, 0.7));
        assert_eq!(leaf.point(2.0), chart_to_cartesian(2.0, 0.7));
        let (x, y) = leaf.point(-1.0);
        let (f, g) = induced_field_at(x, y).unwrap();
        let (tx, ty) = leaf.tangent(-1.0);
        assert!((f - tx).abs() < 1e-12 && (g - ty).abs() < 1e-12);
        assert!(SpiralChart::new(4.0).is_err());
    }

    #[test]
    fn induced_field_is_tangent_to_the_leaf() {
        let h = 1e-5;
        for &(theta, s) in &[(0.0, 0.0), (-2.0, 1.0), (3.5, -0.7), (9.0, 2.0)] {
            let (x, y) = chart_to_cartesian(theta, s);
            let (f, g) = induced_field_at(x, y).unwrap();
            let (xp, yp) = chart_to_cartesian(theta + h, s);
            let (xm, ym) = chart_to_cartesian(theta - h, s);
            let (tx, ty) = ((xp - xm) / (2.0 * h), (yp - ym) / (2.0 * h));
            let cross = (f * ty - g * tx).abs();
            let scale = (f * f + g * g).sqrt() * (tx * tx + ty * ty).sqrt();
            assert!(cross / scale < 1e-6, "cross = {cross} at ({theta}, {s})");
        }
    }

    #[test]
    fn induced_field_never_dips_below_unit_speed() {
        // |(F, G)|^2 = (dr/dtheta)^2 + r^2 > 1; confirm on a grid.
        let mut min_norm = f64::INFINITY;
        for i in 0..60 {
            for j in 0..20 {
                let theta = -15.0 + i as f64 * 0.5;
                let s = -3.0 + j as f64 * 0.3;
                let (x, y) = chart_to_cartesian(theta, s);
                let (f, g) = induced_field_at(x, y).unwrap();
                min_norm = min_norm.min((f * f + g * g).sqrt());
            }
        }
        assert!(min_norm > 1.0, "min |(F,G)| = {min_norm}");
    }

    #[test]
    fn torus_constant_is_absorbed_on_every_leaf() {
        let v = TorusFunction::constant(1.0).unwrap();
        let cfg = OperatorConfig::default();
        for offset in [0.0, 0.3, -1.2] {
            let flow = TorusFlow::new(offset);
            let u = torus_solve(&v, &flow, &uniform_grid(0.0, 1.0, 11), &cfg).unwrap();
            assert!(u.values().iter().all(|&x| (x - 1.0).abs() < cfg.epsilon));
        }
    }

    #[test]
    fn torus_zero_gives_zero() {
        let v = TorusFunction::constant(0.0).unwrap();
        let u = torus_solve(
            &v,
            &TorusFlow::new(0.5),
            &uniform_grid(0.0, 1.0, 5),
            &OperatorConfig::default(),
        )
        .unwrap();
        assert!(u.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn torus_cosine_matches_closed_form() {
        // v(x, y) = cos(2 pi x) restricted to any leaf is cos(2 pi t), and
        // u + u' = cos(2 pi t) has the bounded solution
        // (cos(2 pi t) + 2 pi sin(2 pi t)) / (1 + 4 pi^2).
        let v = TorusFunction::new(vec![TorusTerm {
            coeff: 1.0,
            x_wave: Wave::Cos(1),
            y_wave: Wave::One,
        }])
        .unwrap();
        let cfg = OperatorConfig::default();
        let flow = TorusFlow::new(0.7);
        let grid = uniform_grid(0.0, 1.0, 21);
        let u = torus_solve(&v, &flow, &grid, &cfg).unwrap();
        let two_pi = 2.0 * PI;
        for (t, value) in u.iter() {
            let closed =
                ((two_pi * t).cos() + two_pi * (two_pi * t).sin()) / (1.0 + two_pi * two_pi);
            assert!((value - closed).abs() < 2e-9, "t = {t}");
        }
        // Cross-check one point against the Simpson oracle.
        let oracle = simpson_operator_value(|t| (two_pi * t).cos(), 0.3, 45.0, 400_000);
        let t0_index = 6; // grid[6] = 0.3
        assert!((grid[t0_index] - 0.3).abs() < 1e-12);
        assert!((u.values()[t0_index] - oracle).abs() < 2e-9);
    }

    #[test]
    fn torus_periodicity_defect_is_tiny() {
        let v = TorusFunction::new(vec![
            TorusTerm {
                coeff: 0.8,
                x_wave: Wave::Cos(1),
                y_wave: Wave::One,
            },
            TorusTerm {
                coeff: 0.3,
                x_wave: Wave::Sin(1),
                y_wave: Wave::Cos(1),
            },
        ])
        .unwrap();
        let cfg = OperatorConfig::default();
        let flow = TorusFlow::new(0.2);
        for t in [0.0, 0.4, 0.9] {
            let defect = torus_periodicity_defect(&v, &flow, t, &cfg).unwrap();
            assert!(defect <= 2.0 * cfg.epsilon, "defect {defect} at t = {t}");
        }
    }

    #[test]
    fn annulus_constant_has_zero_gap() {
        let v = AnnulusFunction::constant(1.0).unwrap();
        let cfg = OperatorConfig::default();
        for theta in [-8.0, -3.0, 2.0, 7.0] {
            let gap = asymptotic_gap(&v, 0.0, theta, &cfg).unwrap();
            assert!(gap < 1e-9, "gap {gap} at theta = {theta}");
        }
    }

    #[test]
    fn annulus_gap_is_bounded_by_radius_excess() {
        // v = (r - 1) cos(theta): on the inner circle v = 0, so the gap is
        // the spiral solution itself, bounded by sup over the averaged past
        // of (r - 1), i.e. by r(theta, s) - 1 since r is increasing.
        let v = AnnulusFunction::new(vec![AnnulusTerm {
            coeff: 1.0,
            radial: vec![-1.0, 1.0],
            angular: Wave::Cos(1),
        }])
        .unwrap();
        let cfg = OperatorConfig::default();
        let s = 0.0;
        let theta = -20.0;
        let gap = asymptotic_gap(&v, s, theta, &cfg).unwrap();
        let excess = spiral_radius(theta, s) - 1.0;
        assert!(gap <= excess + 1e-9, "gap {gap} vs excess {excess}");
    }

    #[test]
    fn annulus_gap_decays_far_down_the_spiral() {
        // The envelope of the gap for v = (r - 1) cos(theta) decays like
        // 1/|theta|; by theta = -300 it is safely below 1e-3 for every leaf.
        let v = AnnulusFunction::new(vec![AnnulusTerm {
            coeff: 1.0,
            radial: vec![-1.0, 1.0],
            angular: Wave::Cos(1),
        }])
        .unwrap();
        let cfg = OperatorConfig::default();
        for s in [-3.0, 0.0, 3.0] {
            let far = asymptotic_gap(&v, s, -300.0, &cfg).unwrap();
            assert!(far < 1e-3, "gap {far} at s = {s}");
            let near = asymptotic_gap(&v, s, -30.0, &cfg).unwrap();
            assert!(far < near, "no decay: {far} !< {near}");
        }
    }

    #[test]
    fn circle_restriction_is_exact_trig() {
        let v = AnnulusFunction::new(vec![
            AnnulusTerm {
                coeff: 2.0,
                radial: vec![0.0, 1.0],
                angular: Wave::Cos(2),
            },
            AnnulusTerm {
                coeff: -1.0,
                radial: vec![1.0],
                angular: Wave::One,
            },
        ])
        .unwrap();
        let circle = v.on_circle(2.0).unwrap();
        for theta in [-1.0, 0.0, 0.7] {
            assert!((circle.value(theta) - v.value(2.0, theta)).abs() < 1e-14);
        }
    }

    #[test]
    fn circle_solve_matches_periodic_closed_form() {
        let v = AnnulusFunction::new(vec![AnnulusTerm {
            coeff: 1.0,
            radial: vec![1.0],
            angular: Wave::Cos(1),
        }])
        .unwrap();
        let cfg = OperatorConfig::default();
        let grid = uniform_grid(0.0, 2.0 * PI, 33);
        let u = circle_solve(&v, 1.0, &grid, &cfg).unwrap();
        for (theta, value) in u.iter() {
            let closed = 0.5 * (theta.cos() + theta.sin());
            assert!((value - closed).abs() < 1e-12);
        }
    }
}
