//! Rank-1 bundles over foliated sets: box covers with multiplicative
//! transition constants, cocycle verification, and gluing of per-box
//! solutions into a global section.
//!
//! Each box carries its own chart coordinate `t` (arc length along the
//! leaves, with a per-box origin) and the local weight `f_B(t) = e^t`. On an
//! overlap the charts are related additively, `t_j = t_i + ln C_ij`, while
//! fiber data transports multiplicatively, `u_j = C_ij u_i`. Dividing by the
//! weight, `u~ = u / e^t`, cancels the transition exactly, so trivialized
//! data is frame independent and each box solves the same damped equation
//! `(e^t u~)' = e^t v~`. Holonomy survives as the product of the constants
//! around a closed chain: the circle cover carries `e^{-2 pi}` around its
//! two overlaps, the unit-period leaf cover carries `e^{-1}`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::catalog::{LeafFn, LeafFunction};
use crate::error::{Error, Result};
use crate::geometry::{asymptotic_gap, circle_solve, spiral_solve, AnnulusFunction};
use crate::operator::{
    periodic_reduction_value, weighted_tail_integral, OperatorConfig, SolutionProfile,
};

/// Local weights available to boxes; `Exp` is `f_B(t) = e^t` in the box
/// chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightTag {
    Exp,
}

impl WeightTag {
    pub fn name(&self) -> &'static str {
        match self {
            WeightTag::Exp => "exp",
        }
    }
}

/// One box of a cover: an id, a chart interval, and the local weight.
#[derive(Debug, Clone)]
pub struct BoxChart {
    pub id: String,
    pub lo: f64,
    pub hi: f64,
    pub weight: WeightTag,
}

impl BoxChart {
    pub fn weight_at(&self, t: f64) -> f64 {
        match self.weight {
            WeightTag::Exp => t.exp(),
        }
    }
}

/// An overlap record: the interval is expressed in box `i`'s chart, and the
/// transition constant fixes both the fiber map `u_j = C u_i` and the chart
/// shift `t_j = t_i + ln C`.
#[derive(Debug, Clone)]
pub struct Overlap {
    pub i: usize,
    pub j: usize,
    pub lo: f64,
    pub hi: f64,
    pub transition: f64,
}

#[derive(Debug, Clone)]
pub struct BundleCover {
    pub boxes: Vec<BoxChart>,
    pub overlaps: Vec<Overlap>,
}

/// One failed cocycle identity.
#[derive(Debug, Clone)]
pub struct CocycleViolation {
    pub description: String,
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct CocycleReport {
    pub checks: usize,
    pub max_deviation: f64,
    pub violations: Vec<CocycleViolation>,
}

impl CocycleReport {
    pub fn consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

const COCYCLE_TOL: f64 = 1e-12;

impl BundleCover {
    pub fn new(boxes: Vec<BoxChart>, overlaps: Vec<Overlap>) -> Result<Self> {
        let cover = BundleCover { boxes, overlaps };
        cover.validate()?;
        Ok(cover)
    }

    fn validate(&self) -> Result<()> {
        if self.boxes.is_empty() {
            return Err(Error::Structural("cover has no boxes".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for b in &self.boxes {
            if !(b.lo.is_finite() && b.hi.is_finite() && b.lo < b.hi) {
                return Err(Error::Structural(format!(
                    "box {} has a bad chart interval",
                    b.id
                )));
            }
            if !seen.insert(b.id.clone()) {
                return Err(Error::Structural(format!("duplicate box id {}", b.id)));
            }
        }
        for (k, o) in self.overlaps.iter().enumerate() {
            if o.i >= self.boxes.len() || o.j >= self.boxes.len() {
                return Err(Error::Structural(format!(
                    "overlap {k} references a missing box"
                )));
            }
            if !(o.lo.is_finite() && o.hi.is_finite() && o.lo < o.hi) {
                return Err(Error::Structural(format!("overlap {k} has a bad interval")));
            }
            if !(o.transition.is_finite() && o.transition > 0.0) {
                return Err(Error::Structural(format!(
                    "overlap {k} is missing a positive transition constant"
                )));
            }
            let (bi, bj) = (&self.boxes[o.i], &self.boxes[o.j]);
            let slack = 1e-9;
            if o.lo < bi.lo - slack || o.hi > bi.hi + slack {
                return Err(Error::Structural(format!(
                    "overlap {k} interval [{}, {}] leaves box {} chart",
                    o.lo, o.hi, bi.id
                )));
            }
            let shift = o.transition.ln();
            if o.lo + shift < bj.lo - slack || o.hi + shift > bj.hi + slack {
                return Err(Error::Structural(format!(
                    "overlap {k} mapped interval leaves box {} chart",
                    bj.id
                )));
            }
        }
        Ok(())
    }

    pub fn box_index(&self, id: &str) -> Option<usize> {
        self.boxes.iter().position(|b| b.id == id)
    }

    /// Transports a fiber value across overlap `k` from its `i` side to its
    /// `j` side: one multiplication by the transition constant.
    pub fn transport(&self, overlap_index: usize, value: f64) -> f64 {
        value * self.overlaps[overlap_index].transition
    }

    /// The standard two-box circle cover with the holonomy factor
    /// `e^{-2 pi}` on the wrap-around overlap.
    pub fn circle() -> Self {
        let n = 0.05 * PI; // overlap half-width: 10 percent of a box length
        BundleCover::new(
            vec![
                BoxChart {
                    id: "upper".into(),
                    lo: -n,
                    hi: PI + n,
                    weight: WeightTag::Exp,
                },
                BoxChart {
                    id: "lower".into(),
                    lo: PI - n,
                    hi: 2.0 * PI + n,
                    weight: WeightTag::Exp,
                },
            ],
            vec![
                Overlap {
                    i: 0,
                    j: 1,
                    lo: PI - n,
                    hi: PI + n,
                    transition: 1.0,
                },
                Overlap {
                    i: 1,
                    j: 0,
                    lo: 2.0 * PI - n,
                    hi: 2.0 * PI + n,
                    transition: (-2.0 * PI).exp(),
                },
            ],
        )
        .expect("circle cover is structurally valid")
    }

    /// Two-box cover of a unit-period leaf with the drop factor `e` on the
    /// wrap-around overlap.
    pub fn torus_leaf() -> Self {
        BundleCover::new(
            vec![
                BoxChart {
                    id: "a".into(),
                    lo: -0.05,
                    hi: 0.55,
                    weight: WeightTag::Exp,
                },
                BoxChart {
                    id: "b".into(),
                    lo: 0.45,
                    hi: 1.05,
                    weight: WeightTag::Exp,
                },
            ],
            vec![
                Overlap {
                    i: 0,
                    j: 1,
                    lo: 0.45,
                    hi: 0.55,
                    transition: 1.0,
                },
                Overlap {
                    i: 1,
                    j: 0,
                    lo: 0.95,
                    hi: 1.05,
                    transition: (-1.0f64).exp(),
                },
            ],
        )
        .expect("torus leaf cover is structurally valid")
    }

    /// Two half-annulus boxes in the angular chart; same combinatorics and
    /// constants as the circle cover.
    pub fn annulus() -> Self {
        let n = 0.05 * PI;
        BundleCover::new(
            vec![
                BoxChart {
                    id: "upper-annulus".into(),
                    lo: -n,
                    hi: PI + n,
                    weight: WeightTag::Exp,
                },
                BoxChart {
                    id: "lower-annulus".into(),
                    lo: PI - n,
                    hi: 2.0 * PI + n,
                    weight: WeightTag::Exp,
                },
            ],
            vec![
                Overlap {
                    i: 0,
                    j: 1,
                    lo: PI - n,
                    hi: PI + n,
                    transition: 1.0,
                },
                Overlap {
                    i: 1,
                    j: 0,
                    lo: 2.0 * PI - n,
                    hi: 2.0 * PI + n,
                    transition: (-2.0 * PI).exp(),
                },
            ],
        )
        .expect("annulus cover is structurally valid")
    }

    /// A deliberately inconsistent three-box fixture: the declared triple
    /// `C_12 = 2, C_23 = 3, C_13 = 5` violates `C_12 C_23 = C_13` by 1.
    pub fn inconsistent_triple() -> Self {
        let ln2 = 2.0f64.ln();
        BundleCover::new(
            vec![
                BoxChart {
                    id: "b1".into(),
                    lo: 0.0,
                    hi: 1.0,
                    weight: WeightTag::Exp,
                },
                BoxChart {
                    id: "b2".into(),
                    lo: ln2,
                    hi: ln2 + 1.0,
                    weight: WeightTag::Exp,
                },
                BoxChart {
                    id: "b3".into(),
                    lo: 1.5,
                    hi: 3.0,
                    weight: WeightTag::Exp,
                },
            ],
            vec![
                Overlap {
                    i: 0,
                    j: 1,
                    lo: 0.0,
                    hi: 0.2,
                    transition: 2.0,
                },
                Overlap {
                    i: 1,
                    j: 2,
                    lo: ln2,
                    hi: ln2 + 0.2,
                    transition: 3.0,
                },
                Overlap {
                    i: 0,
                    j: 2,
                    lo: 0.0,
                    hi: 0.2,
                    transition: 5.0,
                },
            ],
        )
        .expect("fixture is structurally valid")
    }

    /// Serializes the cover in the text format accepted by [`parse_cover`].
    pub fn to_text(&self) -> String {
        let mut out = String::from("# bundle cover description\n");
        for b in &self.boxes {
            let _ = writeln!(
                out,
                "box {} {:.16e} {:.16e} {}",
                b.id,
                b.lo,
                b.hi,
                b.weight.name()
            );
        }
        for o in &self.overlaps {
            let _ = writeln!(
                out,
                "overlap {} {} {:.16e} {:.16e} {:.16e}",
                self.boxes[o.i].id, self.boxes[o.j].id, o.lo, o.hi, o.transition
            );
        }
        out
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Parses the cover description format:
///
/// ```text
/// box <id> <lo> <hi> <weight-tag>
/// overlap <id_i> <id_j> <lo> <hi> <C_ij>
/// ```
///
/// Lines starting with `#` and blank lines are ignored. Overlap intervals
/// are in the first box's chart.
pub fn parse_cover(text: &str) -> Result<BundleCover> {
    let mut boxes: Vec<BoxChart> = Vec::new();
    let mut raw_overlaps: Vec<(String, String, f64, f64, f64)> = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {}: bad number {s}", line_no + 1)))
        };
        match fields[0] {
            "box" => {
                if fields.len() != 5 {
                    return Err(Error::Parse(format!(
                        "line {}: box needs <id> <lo> <hi> <weight>",
                        line_no + 1
                    )));
                }
                let weight = match fields[4] {
                    "exp" => WeightTag::Exp,
                    other => {
                        return Err(Error::Parse(format!(
                            "line {}: unknown weight tag {other}",
                            line_no + 1
                        )))
                    }
                };
                boxes.push(BoxChart {
                    id: fields[1].to_string(),
                    lo: num(fields[2])?,
                    hi: num(fields[3])?,
                    weight,
                });
            }
            "overlap" => {
                if fields.len() != 6 {
                    return Err(Error::Parse(format!(
                        "line {}: overlap needs <id_i> <id_j> <lo> <hi> <C>",
                        line_no + 1
                    )));
                }
                raw_overlaps.push((
                    fields[1].to_string(),
                    fields[2].to_string(),
                    num(fields[3])?,
                    num(fields[4])?,
                    num(fields[5])?,
                ));
            }
            other => {
                return Err(Error::Parse(format!(
                    "line {}: unknown record {other}",
                    line_no + 1
                )));
            }
        }
    }
    let find = |id: &str| -> Result<usize> {
        boxes
            .iter()
            .position(|b| b.id == id)
            .ok_or_else(|| Error::Structural(format!("overlap references unknown box {id}")))
    };
    let overlaps = raw_overlaps
        .into_iter()
        .map(|(i, j, lo, hi, c)| {
            Ok(Overlap {
                i: find(&i)?,
                j: find(&j)?,
                lo,
                hi,
                transition: c,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BundleCover::new(boxes, overlaps)
}

pub fn read_cover(path: &Path) -> Result<BundleCover> {
    parse_cover(&std::fs::read_to_string(path)?)
}

/// Checks identity transitions, inverse symmetry and every triple product
/// whose overlap intervals share a common chart region.
pub fn verify_cocycle(cover: &BundleCover) -> Result<CocycleReport> {
    cover.validate()?;

    // Directed edges including the reciprocal of each declared record, with
    // intervals expressed in the source box's chart.
    struct Edge {
        from: usize,
        to: usize,
        lo: f64,
        hi: f64,
        c: f64,
    }
    let mut edges = Vec::new();
    for o in &cover.overlaps {
        edges.push(Edge {
            from: o.i,
            to: o.j,
            lo: o.lo,
            hi: o.hi,
            c: o.transition,
        });
        let shift = o.transition.ln();
        edges.push(Edge {
            from: o.j,
            to: o.i,
            lo: o.lo + shift,
            hi: o.hi + shift,
            c: 1.0 / o.transition,
        });
    }

    let mut checks = 0usize;
    let mut max_deviation: f64 = 0.0;
    let mut violations = Vec::new();
    let mut record = |description: String, deviation: f64, scale: f64| {
        checks += 1;
        max_deviation = max_deviation.max(deviation);
        if deviation > COCYCLE_TOL * scale.max(1.0) {
            violations.push(CocycleViolation {
                description,
                deviation,
            });
        }
    };

    // Self-overlaps must carry the identity.
    for o in &cover.overlaps {
        if o.i == o.j {
            record(
                format!("self overlap on {} must have C = 1", cover.boxes[o.i].id),
                (o.transition - 1.0).abs(),
                1.0,
            );
        }
    }

    // Chained edges against a third edge (or the implicit identity when the
    // chain returns to its starting box).
    for e1 in &edges {
        for e2 in &edges {
            if e1.to != e2.from {
                continue;
            }
            // e2's interval mapped into e1.from's chart.
            let shift = e1.c.ln();
            let lo = e1.lo.max(e2.lo - shift);
            let hi = e1.hi.min(e2.hi - shift);
            if lo >= hi {
                continue;
            }
            let product = e1.c * e2.c;
            if e1.from == e2.to {
                record(
                    format!(
                        "cycle {} -> {} -> {} must multiply to 1",
                        cover.boxes[e1.from].id, cover.boxes[e1.to].id, cover.boxes[e2.to].id
                    ),
                    (product - 1.0).abs(),
                    1.0,
                );
            } else {
                for e3 in &edges {
                    if e3.from != e1.from || e3.to != e2.to {
                        continue;
                    }
                    if e3.hi <= lo || e3.lo >= hi {
                        continue;
                    }
                    record(
                        format!(
                            "triple {} -> {} -> {} vs direct transition",
                            cover.boxes[e1.from].id, cover.boxes[e1.to].id, cover.boxes[e2.to].id
                        ),
                        (product - e3.c).abs(),
                        e3.c.abs(),
                    );
                }
            }
        }
    }

    Ok(CocycleReport {
        checks,
        max_deviation,
        violations,
    })
}

/// Trivialized profile on one box chart.
#[derive(Debug, Clone)]
pub struct BoxProfile {
    pub id: String,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct OverlapMismatch {
    pub i: String,
    pub j: String,
    pub sup: f64,
}

/// Per-box trivialized solutions plus the recomputed overlap mismatch table.
#[derive(Debug, Clone)]
pub struct GluedSection {
    pub cover: BundleCover,
    pub profiles: Vec<BoxProfile>,
    pub mismatches: Vec<OverlapMismatch>,
}

impl GluedSection {
    /// The untrivialized local frame `u_i = u~_i e^{t_i}` on box `k`.
    pub fn local_frame(&self, k: usize) -> Vec<f64> {
        let weight = &self.cover.boxes[k];
        self.profiles[k]
            .grid
            .iter()
            .zip(&self.profiles[k].values)
            .map(|(&t, &u)| u * weight.weight_at(t))
            .collect()
    }

    pub fn max_mismatch(&self) -> f64 {
        self.mismatches.iter().fold(0.0_f64, |m, e| m.max(e.sup))
    }
}

fn chart_grid(b: &BoxChart, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| b.lo + (b.hi - b.lo) * k as f64 / (points - 1) as f64)
        .collect()
}

const OVERLAP_SAMPLES: usize = 33;

fn overlap_samples(o: &Overlap) -> impl Iterator<Item = f64> + '_ {
    (0..OVERLAP_SAMPLES)
        .map(move |k| o.lo + (o.hi - o.lo) * k as f64 / (OVERLAP_SAMPLES - 1) as f64)
}

/// Solves the circle equation through the standard two-box cover: the
/// periodic data is trivialized per box, solved by the periodic reduction,
/// and the overlap mismatches of the glued section are recomputed.
pub fn circle_bundle_solve(
    v: &LeafFunction,
    points_per_box: usize,
    cfg: &OperatorConfig,
) -> Result<GluedSection> {
    cfg.validate()?;
    let periodic = v.is_constant() || v.period().is_some_and(|p| (p - 2.0 * PI).abs() < 1e-12);
    if !periodic {
        return Err(Error::NotPeriodic("circle_bundle_solve"));
    }
    if points_per_box < 3 {
        return Err(Error::Config("points_per_box must be >= 3".into()));
    }
    let cover = BundleCover::circle();
    let solved_value = |theta: f64| -> Result<f64> {
        if v.is_constant() {
            Ok(v.value(theta))
        } else {
            periodic_reduction_value(v, 2.0 * PI, theta, cfg.quad_step)
        }
    };
    let mut profiles = Vec::new();
    for b in &cover.boxes {
        let grid = chart_grid(b, points_per_box);
        let values = grid
            .iter()
            .map(|&t| solved_value(t))
            .collect::<Result<Vec<_>>>()?;
        profiles.push(BoxProfile {
            id: b.id.clone(),
            grid,
            values,
        });
    }
    let mut mismatches = Vec::new();
    for o in &cover.overlaps {
        let shift = o.transition.ln();
        let mut sup: f64 = 0.0;
        for t in overlap_samples(o) {
            let here = solved_value(t)?;
            let there = solved_value(t + shift)?;
            sup = sup.max((here - there).abs());
        }
        mismatches.push(OverlapMismatch {
            i: cover.boxes[o.i].id.clone(),
            j: cover.boxes[o.j].id.clone(),
            sup,
        });
    }
    Ok(GluedSection {
        cover,
        profiles,
        mismatches,
    })
}

/// Glues per-box trivialized data over an arbitrary cover: verifies the data
/// agrees on overlaps (in the common frame), solves the damped equation on
/// each box by the truncated weighted integral, and recomputes the overlap
/// mismatch table.
///
/// `local_v[k]` is the trivialized right-hand side on box `k`, expressed in
/// the box chart; its catalog extension supplies the lookback history, so
/// data that agrees globally (not just on the overlaps) glues to machine
/// precision.
pub fn glue_general(
    cover: &BundleCover,
    local_v: &[LeafFunction],
    points_per_box: usize,
    cfg: &OperatorConfig,
) -> Result<GluedSection> {
    cfg.validate()?;
    cover.validate()?;
    if local_v.len() != cover.boxes.len() {
        return Err(Error::Config(format!(
            "need one local function per box ({} != {})",
            local_v.len(),
            cover.boxes.len()
        )));
    }
    if points_per_box < 3 {
        return Err(Error::Config("points_per_box must be >= 3".into()));
    }

    let bound_max = local_v
        .iter()
        .map(|f| f.sup_bound())
        .fold(0.0_f64, f64::max);
    let compat_tol = (1e-8_f64).max(10.0 * cfg.epsilon) * (1.0 + bound_max);
    for o in &cover.overlaps {
        let shift = o.transition.ln();
        let mut sup: f64 = 0.0;
        for t in overlap_samples(o) {
            let delta = (local_v[o.i].value(t) - local_v[o.j].value(t + shift)).abs();
            sup = sup.max(delta);
        }
        if sup > compat_tol {
            return Err(Error::IncompatibleOverlap {
                i: cover.boxes[o.i].id.clone(),
                j: cover.boxes[o.j].id.clone(),
                delta: sup,
            });
        }
    }

    let truncation = cfg.truncation_for(bound_max.max(f64::MIN_POSITIVE));
    if cfg.quad_step >= truncation {
        return Err(Error::Config(format!(
            "quad_step {} must be smaller than the truncation depth {truncation}",
            cfg.quad_step
        )));
    }
    let solved = |k: usize, t: f64| -> Result<f64> {
        weighted_tail_integral(&local_v[k], t, truncation, cfg.quad_step)
    };
    let mut profiles = Vec::new();
    for (k, b) in cover.boxes.iter().enumerate() {
        let grid = chart_grid(b, points_per_box);
        let values = grid
            .iter()
            .map(|&t| solved(k, t))
            .collect::<Result<Vec<_>>>()?;
        profiles.push(BoxProfile {
            id: b.id.clone(),
            grid,
            values,
        });
    }
    let mut mismatches = Vec::new();
    for o in &cover.overlaps {
        let shift = o.transition.ln();
        let mut sup: f64 = 0.0;
        for t in overlap_samples(o) {
            let here = solved(o.i, t)?;
            let there = solved(o.j, t + shift)?;
            sup = sup.max((here - there).abs());
        }
        mismatches.push(OverlapMismatch {
            i: cover.boxes[o.i].id.clone(),
            j: cover.boxes[o.j].id.clone(),
            sup,
        });
    }
    Ok(GluedSection {
        cover: cover.clone(),
        profiles,
        mismatches,
    })
}

/// Trivialized solutions over the annulus foliation: one profile per sampled
/// spiral plus both boundary circles, with inter-leaf continuity deltas and
/// boundary gap samples.
#[derive(Debug, Clone)]
pub struct AnnulusSection {
    pub spirals: Vec<(f64, SolutionProfile)>,
    pub inner_circle: SolutionProfile,
    pub outer_circle: SolutionProfile,
    /// `(s, s', sup |u~_s - u~_s'|)` for consecutive sampled leaves.
    pub leaf_deltas: Vec<(f64, f64, f64)>,
    /// `(s, theta, gap)` against the inner circle at the most negative grid
    /// angle (when it is negative).
    pub inner_gaps: Vec<(f64, f64, f64)>,
    /// Same against the outer circle at the most positive grid angle.
    pub outer_gaps: Vec<(f64, f64, f64)>,
}

impl AnnulusSection {
    pub fn max_leaf_delta(&self) -> f64 {
        self.leaf_deltas.iter().fold(0.0_f64, |m, d| m.max(d.2))
    }
}

/// Solves the trivialized equation on every sampled spiral and on both
/// boundary circles, reporting inter-leaf continuity and boundary gaps.
pub fn annulus_bundle_solve(
    v: &AnnulusFunction,
    s_samples: &[f64],
    theta_grid: &[f64],
    cfg: &OperatorConfig,
) -> Result<AnnulusSection> {
    cfg.validate()?;
    if s_samples.is_empty() {
        return Err(Error::Config("need at least one spiral label".into()));
    }
    if s_samples.iter().any(|s| !(-PI..=PI).contains(s)) {
        return Err(Error::Domain("spiral labels must lie in [-pi, pi]".into()));
    }
    let mut spirals = Vec::with_capacity(s_samples.len());
    for &s in s_samples {
        spirals.push((s, spiral_solve(v, s, theta_grid, cfg)?));
    }
    let inner_circle = circle_solve(v, 1.0, theta_grid, cfg)?;
    let outer_circle = circle_solve(v, 2.0, theta_grid, cfg)?;

    let mut leaf_deltas = Vec::new();
    for pair in spirals.windows(2) {
        let sup = pair[0]
            .1
            .values()
            .iter()
            .zip(pair[1].1.values())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        leaf_deltas.push((pair[0].0, pair[1].0, sup));
    }

    let theta_min = theta_grid[0];
    let theta_max = theta_grid[theta_grid.len() - 1];
    let mut inner_gaps = Vec::new();
    let mut outer_gaps = Vec::new();
    for &s in s_samples {
        if theta_min < 0.0 {
            inner_gaps.push((s, theta_min, asymptotic_gap(v, s, theta_min, cfg)?));
        }
        if theta_max > 0.0 {
            outer_gaps.push((s, theta_max, asymptotic_gap(v, s, theta_max, cfg)?));
        }
    }

    Ok(AnnulusSection {
        spirals,
        inner_circle,
        outer_circle,
        leaf_deltas,
        inner_gaps,
        outer_gaps,
    })
}
