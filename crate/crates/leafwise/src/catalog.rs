//! Catalog of leaf functions with certified sup-norm bounds.
//!
//! Every input to the solution operators comes from this fixed catalog
//! (constants, trigonometric sums, polynomials restricted to an interval,
//! interpolated samples) instead of arbitrary expressions. The point is the
//! bound: each instance carries an `M` with `|v(t)| <= M` everywhere it can
//! be evaluated, and the truncation depth `L = ln(4M/eps)` of the operators
//! is only a guarantee because `M` is certified at construction.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{Error, Result};

/// A bounded real function of one leaf parameter.
///
/// `sup_bound` must dominate `|value(t)|` for every `t` the solvers visit;
/// implementations certify this at construction.
pub trait LeafFn {
    fn value(&self, t: f64) -> f64;
    fn sup_bound(&self) -> f64;

    /// Points where the function loses smoothness (clamp edges, sample
    /// knots); quadrature places panel boundaries there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// One harmonic of a trigonometric sum: `a cos(2 pi k t / P) + b sin(...)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub harmonic: u32,
    pub cos_coeff: f64,
    pub sin_coeff: f64,
}

#[derive(Debug, Clone)]
pub enum LeafKind {
    Constant {
        value: f64,
    },
    /// `mean + sum_k a_k cos(2 pi k t / period) + b_k sin(2 pi k t / period)`;
    /// exactly `period`-periodic by construction.
    Trig {
        period: f64,
        mean: f64,
        terms: Vec<TrigTerm>,
    },
    /// Polynomial in `t` evaluated with the argument clamped to `[lo, hi]`.
    Polynomial {
        coeffs: Vec<f64>,
        lo: f64,
        hi: f64,
    },
    /// Interpolated samples (linear or local cubic), clamped outside the grid.
    Samples {
        grid: Vec<f64>,
        values: Vec<f64>,
        cubic: bool,
    },
}

/// A catalog function together with its certified bound.
#[derive(Debug)]
pub struct LeafFunction {
    kind: LeafKind,
    bound: f64,
    clamped: AtomicBool,
}

impl Clone for LeafFunction {
    fn clone(&self) -> Self {
        LeafFunction {
            kind: self.kind.clone(),
            bound: self.bound,
            clamped: AtomicBool::new(self.clamped.load(Ordering::Relaxed)),
        }
    }
}

const DENSE_CHECK_SAMPLES: usize = 1024;

impl LeafFunction {
    pub fn constant(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Domain("constant value must be finite".into()));
        }
        Self::with_bound(LeafKind::Constant { value }, value.abs())
    }

    pub fn trig(period: f64, mean: f64, terms: Vec<TrigTerm>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Domain(format!("period {period} must be positive")));
        }
        if !mean.is_finite()
            || terms
                .iter()
                .any(|t| !(t.cos_coeff.is_finite() && t.sin_coeff.is_finite()))
        {
            return Err(Error::Domain("trig coefficients must be finite".into()));
        }
        if terms.iter().any(|t| t.harmonic == 0) {
            return Err(Error::Domain(
                "harmonics must be >= 1; fold harmonic 0 into the mean".into(),
            ));
        }
        let bound = mean.abs()
            + terms
                .iter()
                .map(|t| t.cos_coeff.abs() + t.sin_coeff.abs())
                .sum::<f64>();
        Self::with_bound(
            LeafKind::Trig {
                period,
                mean,
                terms,
            },
            bound,
        )
    }

    /// Polynomial `c0 + c1 t + ...` clamped to `[lo, hi]`.
    pub fn polynomial(coeffs: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("polynomial needs finite coefficients".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!(
                "bad polynomial interval [{lo}, {hi}]"
            )));
        }
        // Certified sup over [lo, hi]: dense sampling plus a mean-value
        // correction with a coefficient bound on |p'|.
        let radius = lo.abs().max(hi.abs()).max(1.0);
        let deriv_bound: f64 = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| i as f64 * c.abs() * radius.powi(i as i32 - 1))
            .sum();
        let step = (hi - lo) / DENSE_CHECK_SAMPLES as f64;
        let mut max_sample: f64 = 0.0;
        for k in 0..=DENSE_CHECK_SAMPLES {
            let t = lo + k as f64 * step;
            max_sample = max_sample.max(eval_poly(&coeffs, t).abs());
        }
        let bound = max_sample + 0.5 * step * deriv_bound;
        Self::with_bound(LeafKind::Polynomial { coeffs, lo, hi }, bound)
    }

    /// Interpolated samples on a strictly increasing grid; `cubic` selects
    /// local 4-point interpolation, otherwise linear.
    pub fn samples(grid: Vec<f64>, values: Vec<f64>, cubic: bool) -> Result<Self> {
        if grid.len() != values.len() || grid.len() < 2 {
            return Err(Error::Domain(
                "samples need matching grid/values with >= 2 points".into(),
            ));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(
                "sample grid must be strictly increasing".into(),
            ));
        }
        if grid.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Domain("sample data must be finite".into()));
        }
        let bound = if cubic {
            // Each panel is a cubic; its sup is attained at a panel end or a
            // root of the derivative, all computable exactly.
            let mut sup: f64 = 0.0;
            for i in 0..grid.len() - 1 {
                sup = sup.max(cubic_panel_sup(&grid, &values, i));
            }
            sup
        } else {
            values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        };
        Self::with_bound(
            LeafKind::Samples {
                grid,
                values,
                cubic,
            },
            bound,
        )
    }

    fn with_bound(kind: LeafKind, bound: f64) -> Result<Self> {
        let f = LeafFunction {
            kind,
            bound,
            clamped: AtomicBool::new(false),
        };
        f.dense_check()?;
        Ok(f)
    }

    /// Dense-sampling check of the bound invariant `M >= sup |v|`.
    fn dense_check(&self) -> Result<()> {
        let (lo, hi) = match &self.kind {
            LeafKind::Constant { .. } => (0.0, 1.0),
            LeafKind::Trig { period, .. } => (0.0, *period),
            LeafKind::Polynomial { lo, hi, .. } => (*lo, *hi),
            LeafKind::Samples { grid, .. } => (grid[0], grid[grid.len() - 1]),
        };
        let clamped_before = self.clamped.load(Ordering::Relaxed);
        let step = (hi - lo) / DENSE_CHECK_SAMPLES as f64;
        for k in 0..=DENSE_CHECK_SAMPLES {
            let t = lo + k as f64 * step;
            let v = self.value(t);
            if !v.is_finite() {
                return Err(Error::Eval { point: t });
            }
            if v.abs() > self.bound * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::Invariant(format!(
                    "bound {} does not dominate |v({t})| = {}",
                    self.bound,
                    v.abs()
                )));
            }
        }
        self.clamped.store(clamped_before, Ordering::Relaxed);
        Ok(())
    }

    pub fn kind(&self) -> &LeafKind {
        &self.kind
    }

    /// The period for kinds that are genuinely periodic.
    pub fn period(&self) -> Option<f64> {
        match &self.kind {
            LeafKind::Trig { period, .. } => Some(*period),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, LeafKind::Constant { .. })
    }

    /// Whether any evaluation so far fell outside the stated domain and was
    /// clamped (polynomial and sample kinds only).
    pub fn evaluations_clamped(&self) -> bool {
        self.clamped.load(Ordering::Relaxed)
    }

    /// Exact derivative of order `order` at `t` (0 <= order <= 4).
    ///
    /// For clamped kinds the derivative of the constant extension (zero) is
    /// returned outside the stated domain.
    pub fn derivative_at(&self, t: f64, order: usize) -> f64 {
        assert!(order <= 4, "derivatives supported up to order 4");
        if order == 0 {
            return self.value(t);
        }
        match &self.kind {
            LeafKind::Constant { .. } => 0.0,
            LeafKind::Trig { period, terms, .. } => {
                let mut acc = 0.0;
                for term in terms {
                    let omega = 2.0 * std::f64::consts::PI * term.harmonic as f64 / period;
                    // One derivative maps (a, b) -> (omega b, -omega a).
                    let (mut a, mut b) = (term.cos_coeff, term.sin_coeff);
                    for _ in 0..order {
                        let (na, nb) = (omega * b, -omega * a);
                        a = na;
                        b = nb;
                    }
                    let phase = omega * t;
                    acc += a * phase.cos() + b * phase.sin();
                }
                acc
            }
            LeafKind::Polynomial { coeffs, lo, hi } => {
                if t < *lo || t > *hi {
                    return 0.0;
                }
                let mut c = coeffs.clone();
                for _ in 0..order {
                    c = differentiate_poly(&c);
                }
                eval_poly(&c, t)
            }
            LeafKind::Samples {
                grid,
                values,
                cubic,
            } => {
                let n = grid.len();
                if t.is_nan() || t <= grid[0] || t >= grid[n - 1] {
                    return 0.0;
                }
                let i = segment_index(grid, t);
                if *cubic {
                    let (xs, ys) = cubic_stencil(grid, values, i);
                    let c = lagrange_cubic_coeffs(&xs, &ys);
                    let mut c = c.to_vec();
                    for _ in 0..order {
                        c = differentiate_poly(&c);
                    }
                    eval_poly(&c, t)
                } else if order == 1 {
                    (values[i + 1] - values[i]) / (grid[i + 1] - grid[i])
                } else {
                    0.0
                }
            }
        }
    }

    /// The function `t -> v(t - delta)`, exactly re-expressed in the catalog.
    pub fn shifted(&self, delta: f64) -> Self {
        let kind = match &self.kind {
            LeafKind::Constant { value } => LeafKind::Constant { value: *value },
            LeafKind::Trig {
                period,
                mean,
                terms,
            } => {
                let shifted = terms
                    .iter()
                    .map(|term| {
                        let omega = 2.0 * std::f64::consts::PI * term.harmonic as f64 / period;
                        let (c, s) = ((omega * delta).cos(), (omega * delta).sin());
                        TrigTerm {
                            harmonic: term.harmonic,
                            cos_coeff: term.cos_coeff * c - term.sin_coeff * s,
                            sin_coeff: term.cos_coeff * s + term.sin_coeff * c,
                        }
                    })
                    .collect();
                LeafKind::Trig {
                    period: *period,
                    mean: *mean,
                    terms: shifted,
                }
            }
            LeafKind::Polynomial { coeffs, lo, hi } => LeafKind::Polynomial {
                coeffs: shift_poly(coeffs, delta),
                lo: lo + delta,
                hi: hi + delta,
            },
            LeafKind::Samples {
                grid,
                values,
                cubic,
            } => LeafKind::Samples {
                grid: grid.iter().map(|g| g + delta).collect(),
                values: values.clone(),
                cubic: *cubic,
            },
        };
        LeafFunction {
            kind,
            bound: self.bound,
            clamped: AtomicBool::new(false),
        }
    }

    /// The function `t -> factor * v(t)`.
    pub fn scaled(&self, factor: f64) -> Self {
        let kind = match &self.kind {
            LeafKind::Constant { value } => LeafKind::Constant {
                value: factor * value,
            },
            LeafKind::Trig {
                period,
                mean,
                terms,
            } => LeafKind::Trig {
                period: *period,
                mean: factor * mean,
                terms: terms
                    .iter()
                    .map(|t| TrigTerm {
                        harmonic: t.harmonic,
                        cos_coeff: factor * t.cos_coeff,
                        sin_coeff: factor * t.sin_coeff,
                    })
                    .collect(),
            },
            LeafKind::Polynomial { coeffs, lo, hi } => LeafKind::Polynomial {
                coeffs: coeffs.iter().map(|c| factor * c).collect(),
                lo: *lo,
                hi: *hi,
            },
            LeafKind::Samples {
                grid,
                values,
                cubic,
            } => LeafKind::Samples {
                grid: grid.clone(),
                values: values.iter().map(|v| factor * v).collect(),
                cubic: *cubic,
            },
        };
        LeafFunction {
            kind,
            bound: self.bound * factor.abs(),
            clamped: AtomicBool::new(false),
        }
    }
}

impl LeafFn for LeafFunction {
    fn value(&self, t: f64) -> f64 {
        match &self.kind {
            LeafKind::Constant { value } => *value,
            LeafKind::Trig {
                period,
                mean,
                terms,
            } => {
                let mut acc = *mean;
                for term in terms {
                    let phase = 2.0 * std::f64::consts::PI * term.harmonic as f64 * t / period;
                    acc += term.cos_coeff * phase.cos() + term.sin_coeff * phase.sin();
                }
                acc
            }
            LeafKind::Polynomial { coeffs, lo, hi } => {
                let x = if t < *lo {
                    self.clamped.store(true, Ordering::Relaxed);
                    *lo
                } else if t > *hi {
                    self.clamped.store(true, Ordering::Relaxed);
                    *hi
                } else {
                    t
                };
                eval_poly(coeffs, x)
            }
            LeafKind::Samples {
                grid,
                values,
                cubic,
            } => {
                if t.is_nan() {
                    return f64::NAN;
                }
                let n = grid.len();
                if t <= grid[0] {
                    if t < grid[0] {
                        self.clamped.store(true, Ordering::Relaxed);
                    }
                    return values[0];
                }
                if t >= grid[n - 1] {
                    if t > grid[n - 1] {
                        self.clamped.store(true, Ordering::Relaxed);
                    }
                    return values[n - 1];
                }
                let i = segment_index(grid, t);
                if *cubic {
                    let (xs, ys) = cubic_stencil(grid, values, i);
                    let c = lagrange_cubic_coeffs(&xs, &ys);
                    eval_poly(&c, t)
                } else {
                    let w = (t - grid[i]) / (grid[i + 1] - grid[i]);
                    values[i] * (1.0 - w) + values[i + 1] * w
                }
            }
        }
    }

    fn sup_bound(&self) -> f64 {
        self.bound
    }

    fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            LeafKind::Constant { .. } | LeafKind::Trig { .. } => Vec::new(),
            LeafKind::Polynomial { lo, hi, .. } => vec![*lo, *hi],
            LeafKind::Samples { grid, .. } => grid.clone(),
        }
    }
}

/// A closure with a caller-asserted bound; crate-internal plumbing for leaf
/// restrictions whose bounds are certified by their own constructors.
pub(crate) struct BoundedFn<F: Fn(f64) -> f64> {
    pub f: F,
    pub bound: f64,
}

impl<F: Fn(f64) -> f64> LeafFn for BoundedFn<F> {
    fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }
    fn sup_bound(&self) -> f64 {
        self.bound
    }
}

fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn differentiate_poly(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.len() <= 1 {
        return vec![0.0];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| i as f64 * c)
        .collect()
}

/// Coefficients of `p(x - delta)` given those of `p(x)`.
fn shift_poly(coeffs: &[f64], delta: f64) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.len()];
    for (i, &c) in coeffs.iter().enumerate() {
        // c * (x - delta)^i expanded by the binomial theorem.
        let mut binom = 1.0;
        for j in 0..=i {
            out[i - j] += c * binom * (-delta).powi(j as i32);
            binom = binom * (i - j) as f64 / (j + 1) as f64;
        }
    }
    out
}

fn segment_index(grid: &[f64], t: f64) -> usize {
    match grid.binary_search_by(|g| g.partial_cmp(&t).unwrap()) {
        Ok(i) => i.min(grid.len() - 2),
        Err(i) => i - 1,
    }
}

fn cubic_stencil(grid: &[f64], values: &[f64], segment: usize) -> ([f64; 4], [f64; 4]) {
    let n = grid.len();
    let start = if segment == 0 {
        0
    } else if segment + 2 >= n {
        n - 4
    } else {
        segment - 1
    };
    let start = start.min(n.saturating_sub(4));
    if n < 4 {
        // Fewer than 4 samples: pad by repeating ends (degenerates to lower
        // degree through the Lagrange weights of distinct points only).
        let xs = [
            grid[0],
            grid[1.min(n - 1)],
            grid[(n - 1).min(2)],
            grid[n - 1],
        ];
        let ys = [
            values[0],
            values[1.min(n - 1)],
            values[(n - 1).min(2)],
            values[n - 1],
        ];
        return (xs, ys);
    }
    (
        [
            grid[start],
            grid[start + 1],
            grid[start + 2],
            grid[start + 3],
        ],
        [
            values[start],
            values[start + 1],
            values[start + 2],
            values[start + 3],
        ],
    )
}

/// Exact sup of the local interpolating cubic over panel `segment`: the
/// extrema are the panel ends and any derivative roots inside it.
fn cubic_panel_sup(grid: &[f64], values: &[f64], segment: usize) -> f64 {
    let (xs, ys) = cubic_stencil(grid, values, segment);
    let c = lagrange_cubic_coeffs(&xs, &ys);
    let (lo, hi) = (grid[segment], grid[segment + 1]);
    let mut sup = eval_poly(&c, lo).abs().max(eval_poly(&c, hi).abs());
    // Roots of 3 c3 x^2 + 2 c2 x + c1.
    let (a, b, k) = (3.0 * c[3], 2.0 * c[2], c[1]);
    if a.abs() < 1e-300 {
        if b.abs() > 1e-300 {
            let root = -k / b;
            if root > lo && root < hi {
                sup = sup.max(eval_poly(&c, root).abs());
            }
        }
    } else {
        let disc = b * b - 4.0 * a * k;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for root in [(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)] {
                if root > lo && root < hi {
                    sup = sup.max(eval_poly(&c, root).abs());
                }
            }
        }
    }
    sup
}

/// Monomial coefficients of the Lagrange cubic through 4 distinct points.
fn lagrange_cubic_coeffs(xs: &[f64; 4], ys: &[f64; 4]) -> [f64; 4] {
    let mut coeffs = [0.0; 4];
    for i in 0..4 {
        // Basis polynomial prod_{j != i} (x - x_j) / (x_i - x_j).
        let mut basis = [1.0, 0.0, 0.0, 0.0];
        let mut denom = 1.0;
        let mut degree = 0;
        for j in 0..4 {
            if j == i {
                continue;
            }
            denom *= xs[i] - xs[j];
            // Multiply basis by (x - x_j).
            let mut next = [0.0; 4];
            for (k, b) in basis.iter().enumerate().take(degree + 1) {
                next[k + 1] += b;
                next[k] -= b * xs[j];
            }
            basis = next;
            degree += 1;
        }
        let scale = ys[i] / denom;
        for k in 0..4 {
            coeffs[k] += scale * basis[k];
        }
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_is_exactly_periodic_and_bounded() {
        let v = LeafFunction::trig(
            2.0 * std::f64::consts::PI,
            0.25,
            vec![TrigTerm {
                harmonic: 1,
                cos_coeff: 0.5,
                sin_coeff: -1.0,
            }],
        )
        .unwrap();
        assert_eq!(v.period(), Some(2.0 * std::f64::consts::PI));
        assert!((v.sup_bound() - 1.75).abs() < 1e-15);
        for t in [-3.0, 0.0, 1.7] {
            let p = v.period().unwrap();
            assert!((v.value(t + p) - v.value(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn polynomial_clamps_and_records_flag() {
        let v = LeafFunction::polynomial(vec![1.0, 0.5, -0.25, 0.125], -3.0, 3.0).unwrap();
        assert!(!v.evaluations_clamped());
        let inside = v.value(2.0);
        assert!((inside - (1.0 + 1.0 - 1.0 + 1.0)).abs() < 1e-14);
        let outside = v.value(10.0);
        assert_eq!(outside, v.value(3.0));
        assert!(v.evaluations_clamped());
    }

    #[test]
    fn polynomial_bound_dominates() {
        let v = LeafFunction::polynomial(vec![0.0, 0.0, 0.0, 1.0], -2.0, 2.0).unwrap();
        assert!(v.sup_bound() >= 8.0);
        assert!(v.sup_bound() < 8.2);
    }

    #[test]
    fn samples_interpolate_and_clamp() {
        let grid = vec![0.0, 1.0, 2.0, 3.0];
        let values = vec![0.0, 1.0, 4.0, 9.0]; // t^2 on the grid
        let lin = LeafFunction::samples(grid.clone(), values.clone(), false).unwrap();
        assert!((lin.value(0.5) - 0.5).abs() < 1e-14);
        let cub = LeafFunction::samples(grid, values, true).unwrap();
        // The cubic through t^2 samples reproduces t^2 exactly.
        assert!((cub.value(0.5) - 0.25).abs() < 1e-12);
        assert!((cub.value(2.5) - 6.25).abs() < 1e-12);
        assert_eq!(cub.value(5.0), 9.0);
        assert!(cub.evaluations_clamped());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let v = LeafFunction::trig(
            1.0,
            0.0,
            vec![TrigTerm {
                harmonic: 2,
                cos_coeff: 1.0,
                sin_coeff: 0.5,
            }],
        )
        .unwrap();
        let t = 0.3;
        let h = 1e-6;
        let fd = (v.value(t + h) - v.value(t - h)) / (2.0 * h);
        assert!((v.derivative_at(t, 1) - fd).abs() < 1e-7);

        let p = LeafFunction::polynomial(vec![1.0, -2.0, 0.0, 4.0], -1.0, 1.0).unwrap();
        assert!((p.derivative_at(0.5, 2) - 24.0 * 0.5).abs() < 1e-12);
        assert!((p.derivative_at(0.5, 3) - 24.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_trig_is_exact() {
        let v = LeafFunction::trig(
            2.0 * std::f64::consts::PI,
            0.1,
            vec![TrigTerm {
                harmonic: 1,
                cos_coeff: 1.0,
                sin_coeff: 0.0,
            }],
        )
        .unwrap();
        let s = v.shifted(0.7);
        for t in [-1.0, 0.0, 2.5] {
            assert!((s.value(t) - v.value(t - 0.7)).abs() < 1e-14);
        }
    }

    #[test]
    fn shifted_polynomial_is_exact() {
        let v = LeafFunction::polynomial(vec![1.0, 2.0, 3.0], -1.0, 1.0).unwrap();
        let s = v.shifted(-0.4);
        for t in [-1.2, -0.5, 0.3] {
            assert!((s.value(t) - v.value(t + 0.4)).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(LeafFunction::trig(-1.0, 0.0, vec![]).is_err());
        assert!(LeafFunction::polynomial(vec![], 0.0, 1.0).is_err());
        assert!(LeafFunction::samples(vec![0.0, 0.0], vec![1.0, 2.0], false).is_err());
        assert!(LeafFunction::constant(f64::NAN).is_err());
    }
}
