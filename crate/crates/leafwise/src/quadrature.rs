//! Composite Gauss-Legendre quadrature used by every solver in the crate.
//!
//! All integrands we meet are smooth on each panel, so a fixed 5-point rule
//! on panels of width at most `max_step` is effectively exact next to the
//! truncation error the configuration already budgets for. The graded
//! variant refines geometrically toward the interval ends for integrands
//! with a singularity just outside the interval (the `1/sin` weights of the
//! circle obstruction).

use crate::error::{Error, Result};

/// 5-point Gauss-Legendre nodes on [-1, 1].
const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];

/// Matching weights; they sum to 2.
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// Integrates `f` over one panel [a, b].
fn panel<F>(f: &mut F, a: f64, b: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (node, weight) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
        let t = mid + half * node;
        let value = f(t)?;
        if !value.is_finite() {
            return Err(Error::Eval { point: t });
        }
        acc += weight * value;
    }
    Ok(acc * half)
}

/// Integrates `f` over [a, b] with uniform panels of width <= `max_step`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, max_step: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    integrate_piece(&mut f, a, b, max_step)
}

fn integrate_piece<F>(f: &mut F, a: f64, b: f64, max_step: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::Domain(format!(
            "bad integration interval [{a}, {b}]"
        )));
    }
    if max_step <= 0.0 {
        return Err(Error::Config(format!(
            "quadrature step {max_step} must be positive"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let panels = ((b - a) / max_step).ceil() as usize;
    let width = (b - a) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * width;
        let hi = if k + 1 == panels { b } else { lo + width };
        acc += panel(f, lo, hi)?;
    }
    Ok(acc)
}

/// Like [`integrate`], but panel boundaries are additionally placed at every
/// breakpoint inside (a, b), so integrands that lose smoothness at known
/// points (clamped polynomials, sample knots) keep full panel accuracy.
pub fn integrate_with_breaks<F>(
    mut f: F,
    a: f64,
    b: f64,
    max_step: f64,
    breaks: &[f64],
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&c| c > a && c < b).collect();
    if cuts.is_empty() {
        return integrate_piece(&mut f, a, b, max_step);
    }
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    let mut acc = 0.0;
    let mut lo = a;
    for cut in cuts {
        acc += integrate_piece(&mut f, lo, cut, max_step)?;
        lo = cut;
    }
    acc += integrate_piece(&mut f, lo, b, max_step)?;
    Ok(acc)
}

/// Integrates `f` over [a, b] with panels that start at `edge_step` next to
/// both endpoints and double until they reach `max_step`.
///
/// Designed for integrands that blow up like `1/(t - c)` at a point `c` a
/// distance `~2 * edge_step` outside the interval: each panel then spans
/// less than one octave of the singular factor.
pub fn integrate_graded<F>(mut f: F, a: f64, b: f64, max_step: f64, edge_step: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::Domain(format!(
            "bad integration interval [{a}, {b}]"
        )));
    }
    if max_step <= 0.0 || edge_step <= 0.0 {
        return Err(Error::Config(
            "graded quadrature steps must be positive".into(),
        ));
    }
    if a == b {
        return Ok(0.0);
    }
    let mid = 0.5 * (a + b);
    // Gentle geometric growth keeps each panel well under an octave of a
    // 1/(t - c) factor just outside the interval.
    let growth = 2.0_f64.powf(0.25);

    let boundaries = |from: f64, toward_right: bool| -> Vec<f64> {
        let mut out = vec![from];
        let mut t = from;
        let mut w = edge_step.min(max_step);
        loop {
            let next = if toward_right { t + w } else { t - w };
            let done = if toward_right {
                next >= mid
            } else {
                next <= mid
            };
            if done {
                out.push(mid);
                return out;
            }
            out.push(next);
            t = next;
            if w < max_step {
                w = (growth * w).min(max_step);
            }
        }
    };

    let mut acc = 0.0;
    let left = boundaries(a, true);
    for pair in left.windows(2) {
        acc += panel(&mut f, pair[0], pair[1])?;
    }
    let right = boundaries(b, false);
    for pair in right.windows(2) {
        acc += panel(&mut f, pair[1], pair[0])?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        // GL5 integrates degree-9 polynomials exactly on each panel.
        let value = integrate(|t| Ok(t.powi(9) - 3.0 * t.powi(4) + 1.0), 0.0, 2.0, 0.5).unwrap();
        let exact = 2.0_f64.powi(10) / 10.0 - 3.0 * 2.0_f64.powi(5) / 5.0 + 2.0;
        assert!((value - exact).abs() < 1e-12, "got {value}, want {exact}");
    }

    #[test]
    fn exponential_panel_accuracy() {
        let value = integrate(|t| Ok(t.exp()), -20.0, 0.0, 1e-2).unwrap();
        let exact = 1.0 - (-20.0_f64).exp();
        assert!((value - exact).abs() < 1e-13);
    }

    #[test]
    fn non_finite_integrand_names_the_point() {
        let err =
            integrate(|t| Ok(if t > 0.3 { f64::NAN } else { 1.0 }), 0.0, 1.0, 0.5).unwrap_err();
        match err {
            Error::Eval { point } => assert!(point > 0.3 && point <= 1.0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn breakpoints_restore_panel_accuracy_at_kinks() {
        // |t| has a kink at 0; splitting there recovers the exact value.
        let value = integrate_with_breaks(|t: f64| Ok(t.abs()), -1.0, 1.0, 0.3, &[0.0]).unwrap();
        assert!((value - 1.0).abs() < 1e-14, "got {value}");
    }

    #[test]
    fn graded_handles_near_singular_csc() {
        // int_eta^{pi-eta} csc = -2 ln tan(eta/2)
        let eta = 1e-4;
        let value = integrate_graded(
            |t| Ok(1.0 / t.sin()),
            eta,
            std::f64::consts::PI - eta,
            1e-2,
            0.5 * eta,
        )
        .unwrap();
        let exact = -2.0 * (0.5 * eta).tan().ln();
        assert!(
            (value - exact).abs() < 1e-9 * exact.abs(),
            "got {value}, want {exact}"
        );
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(|_| Ok(1.0), 1.0, 1.0, 0.1).unwrap(), 0.0);
    }
}
