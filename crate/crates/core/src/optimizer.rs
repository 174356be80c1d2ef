//! IES sizing.
//!
//! With a switching delay, a small IES means many switches and a large one
//! means long charge phases; the standby-regime bound
//! `n (q/(p_r - p_b) + t_d)(q_c/q + 1)` is convex in `q` with minimiser
//! `sqrt(t_d q_c (p_r - p_b))`. The exact charge time is a zig-zag in `q`
//! (its cycle count jumps), so it is scanned on a grid instead.

use rayon::prelude::*;

use crate::analytic::{phase_durations, t_oc_analytic, FormulaId};
use crate::error::{Error, Result};
use crate::model::{validate_spec, Receiver, ScenarioSpec, ValidatedScenario};
use crate::sim::run_event_sim;

/// Relative bracket width at which the golden-section search stops.
pub const GOLDEN_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    GoldenSection,
    GridScan,
}

/// How a grid scan evaluates the charge time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluator {
    Analytic,
    EventSim,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub q_ies: f64,
    pub t_oc: f64,
    /// Closed form used, for analytic scans.
    pub formula: Option<FormulaId>,
    pub k_l: u64,
    /// Simulated standby total, for simulated scans.
    pub total_standby: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub q_star: f64,
    pub t_star: f64,
    pub method: Method,
    pub curve: Option<Vec<CurvePoint>>,
    /// The unconstrained optimum lies outside `(0, q_c)` and was clamped.
    pub at_boundary: bool,
}

/// Bound minimum computed two independent ways.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundOptimum {
    pub closed_form: OptimizationResult,
    pub golden_section: OptimizationResult,
}

impl BoundOptimum {
    /// Relative gap between the two minimisers.
    pub fn disagreement(&self) -> f64 {
        (self.golden_section.q_star - self.closed_form.q_star).abs() / self.closed_form.q_star
    }
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (l0, l1) = (lo.ln(), hi.ln());
            (0..count)
                .map(|k| {
                    if k == count - 1 {
                        hi
                    } else {
                        (l0 + (l1 - l0) * k as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// 400 log-spaced IES sizes from `q_c * 1e-7` to `q_c / 2`.
pub fn default_grid(q_c: f64) -> Vec<f64> {
    log_grid(q_c * 1e-7, q_c * 0.5, 400)
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Minimises the standby-regime bound over the IES capacity.
pub fn minimize_bound(r: &Receiver, n: usize) -> Result<BoundOptimum> {
    if r.t_d == 0.0 {
        return Err(Error::DegenerateObjective(
            "with zero switching delay the bound decreases monotonically as q_ies -> 0".into(),
        ));
    }
    let bound_at = |q: f64| bound_for(r, n, q);

    let unclamped = (r.t_d * r.q_c * (r.p_r - r.p_b)).sqrt();
    let upper = default_grid(r.q_c).last().copied().unwrap_or(r.q_c * 0.5);
    let at_boundary = unclamped >= r.q_c;
    let q_closed = if at_boundary { upper } else { unclamped };
    let closed_form = OptimizationResult {
        q_star: q_closed,
        t_star: bound_at(q_closed),
        method: Method::ClosedForm,
        curve: None,
        at_boundary,
    };

    // Search in log(q) so the relative tolerance is uniform.
    let lo = (r.q_c * 1e-12).ln();
    let hi = if at_boundary {
        upper.ln()
    } else {
        (r.q_c * (1.0 - 1e-12)).ln()
    };
    let (log_q, t_star) = golden_section(|lq| bound_at(lq.exp()), lo, hi, GOLDEN_REL_TOL);
    let golden_section = OptimizationResult {
        q_star: log_q.exp(),
        t_star,
        method: Method::GoldenSection,
        curve: None,
        at_boundary,
    };
    Ok(BoundOptimum {
        closed_form,
        golden_section,
    })
}

// Bound evaluated at an arbitrary capacity without re-validating.
fn bound_for(r: &Receiver, n: usize, q_ies: f64) -> f64 {
    n as f64 * (q_ies / (r.p_r - r.p_b) + r.t_d) * (r.q_c / q_ies + 1.0)
}

fn with_q_ies(s: &ValidatedScenario, q_ies: f64) -> Result<ValidatedScenario> {
    let base = s.spec();
    validate_spec(ScenarioSpec {
        receiver: crate::model::ReceiverSpec {
            q_ies,
            ..base.receiver
        },
        ..base
    })
}

/// Evaluates the charge time at every grid capacity and returns the best one
/// together with the whole curve.
pub fn grid_search_qies(
    s: &ValidatedScenario,
    q_grid: &[f64],
    evaluator: Evaluator,
) -> Result<OptimizationResult> {
    let q_c = s.receiver().q_c;
    if q_grid.is_empty() {
        return Err(Error::InvalidGrid("grid is empty".into()));
    }
    if q_grid.iter().any(|&q| !(q > 0.0 && q < q_c)) {
        return Err(Error::InvalidGrid(format!(
            "grid values must lie in (0, {q_c})"
        )));
    }
    if q_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "grid must be strictly increasing".into(),
        ));
    }
    if evaluator == Evaluator::Analytic && !s.profile().is_constant() {
        return Err(Error::Unsupported(
            "closed-form charge times need a constant profile".into(),
        ));
    }

    let curve = q_grid
        .par_iter()
        .map(|&q| {
            let v = with_q_ies(s, q)?;
            let k_l = phase_durations(v.receiver()).k_l;
            Ok(match evaluator {
                Evaluator::Analytic => {
                    let t = t_oc_analytic(v.receiver(), v.n());
                    CurvePoint {
                        q_ies: q,
                        t_oc: t.t_oc,
                        formula: Some(t.formula_id),
                        k_l,
                        total_standby: None,
                    }
                }
                Evaluator::EventSim => {
                    let r = run_event_sim(&v, false)?;
                    CurvePoint {
                        q_ies: q,
                        t_oc: r.t_oc,
                        formula: None,
                        k_l,
                        total_standby: Some(r.total_standby),
                    }
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // First minimum wins on ties.
    let best = curve
        .iter()
        .fold(None::<&CurvePoint>, |acc, p| match acc {
            Some(b) if b.t_oc <= p.t_oc => Some(b),
            _ => Some(p),
        })
        .copied()
        .expect("grid is non-empty");
    Ok(OptimizationResult {
        q_star: best.q_ies,
        t_star: best.t_oc,
        method: Method::GridScan,
        curve: Some(curve),
        at_boundary: false,
    })
}

/// The bound curve itself, for plotting alongside a scan.
pub fn bound_curve(r: &Receiver, n: usize, q_grid: &[f64]) -> Vec<(f64, f64)> {
    q_grid.iter().map(|&q| (q, bound_for(r, n, q))).collect()
}

/// Shape of a charge-time curve split into blocks of equal `k_l`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ZigZag {
    pub blocks: usize,
    /// Blocks that contain a decreasing stretch.
    pub blocks_with_descent: usize,
    /// Blocks whose runs go up, down, then up again.
    pub full_teeth: usize,
    /// Blocks whose runs are not a subsequence of up, down, up.
    pub malformed: Vec<u64>,
}

impl ZigZag {
    pub fn is_zigzag(&self) -> bool {
        self.malformed.is_empty() && self.blocks_with_descent >= 2
    }
}

/// Splits `points` (sorted by capacity) into blocks of constant `k_l` and
/// checks each block rises, falls and rises again.
pub fn zigzag_shape(points: &[CurvePoint]) -> ZigZag {
    let mut out = ZigZag::default();
    let mut start = 0;
    while start < points.len() {
        let k = points[start].k_l;
        let end = points[start..]
            .iter()
            .position(|p| p.k_l != k)
            .map_or(points.len(), |o| start + o);
        let mut runs: Vec<i8> = Vec::new();
        for w in points[start..end].windows(2) {
            let d = w[1].t_oc - w[0].t_oc;
            if d.abs() <= 1e-12 * w[0].t_oc.abs().max(1.0) {
                continue;
            }
            let sign = if d > 0.0 { 1 } else { -1 };
            if runs.last() != Some(&sign) {
                runs.push(sign);
            }
        }
        out.blocks += 1;
        if runs.contains(&-1) {
            out.blocks_with_descent += 1;
        }
        if runs == [1, -1, 1] {
            out.full_teeth += 1;
        }
        let mut pattern = [1i8, -1, 1].iter();
        if !runs.iter().all(|r| pattern.any(|p| p == r)) {
            out.malformed.push(k);
        }
        start = end;
    }
    out
}
