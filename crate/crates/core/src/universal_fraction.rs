//! The largest fraction `ξ*` of the known-channel exponent that a single universal
//! decoder achieves for every member of a finite channel family.
//!
//! The decoder uses the metric `f(x, y) = max_θ exp{n[ξE₁(θ) + T]} W_θ(y|x)`, whose
//! single-letter form is `G(Q) = max_θ {ξE₁(θ) + T + E_Q log W_θ}`. A fraction `ξ` is
//! achievable iff two conditions (A and B below) hold for every member.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{ChannelFamily, ExponentTable};
use crate::info_math::{dbin, expected_log_w, gv_distance, h, JointDist, LN2};
use crate::inner::{a_slice, b_slice, floored_log, minimize_over_qy, Pieces};
use crate::known_exponents::MAX_ALPHABET;
use crate::optim::golden_min;
use crate::transport::{Geometry, Slice};

/// Tolerance on the condition left-hand sides.
pub const CONDITION_TOL: f64 = 1e-6;
pub const DEFAULT_XI_STEP: f64 = 1e-3;
pub const DEFAULT_Q_STEP: f64 = 5e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActiveCondition {
    A,
    B,
    #[serde(rename = "both")]
    Both,
}

impl std::fmt::Display for ActiveCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ActiveCondition::A => "A",
            ActiveCondition::B => "B",
            ActiveCondition::Both => "both",
        })
    }
}

/// Outcome of the `ξ*` search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionResult {
    pub xi: f64,
    pub active_condition: ActiveCondition,
    /// Family index of the member attaining the active condition's maximum.
    pub argmax_theta: usize,
    pub slack_a: f64,
    pub slack_b: f64,
    /// Largest `ξ` satisfying condition A alone, and condition B alone.
    pub xi_a: f64,
    pub xi_b: f64,
    /// No grid `ξ` satisfied both conditions, or some exponent is infinite.
    pub degenerate: bool,
    /// The bisection inside the bracketing grid cell was skipped because probing
    /// found more than one crossing.
    pub multiple_crossings: bool,
    /// Family members left out because their exponent is zero.
    pub dropped: Vec<usize>,
}

/// Maximum over members of one condition's left-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionValue {
    pub lhs: f64,
    pub argmax: usize,
}

fn fold_max(vals: impl Iterator<Item = (usize, f64)>) -> ConditionValue {
    let mut best = ConditionValue {
        lhs: f64::NEG_INFINITY,
        argmax: 0,
    };
    for (i, v) in vals {
        if v > best.lhs || (best.lhs == f64::NEG_INFINITY && i < best.argmax) {
            best = ConditionValue { lhs: v, argmax: i };
        }
    }
    best
}

fn check_table(family: &ChannelFamily, table: &ExponentTable) -> Result<()> {
    if table.e1.len() != family.len() {
        return Err(Error::Family(format!(
            "exponent table has {} entries for {} members",
            table.e1.len(),
            family.len()
        )));
    }
    Ok(())
}

/// `G(Q̃) = max_θ {ξE₁(θ) + T + E_Q̃ log W_θ}` over the active members. Terms equal to
/// `−∞` drop out unless all are `−∞`.
pub fn g_value(
    xi: f64,
    family: &ChannelFamily,
    table: &ExponentTable,
    qt: &JointDist,
) -> Result<f64> {
    check_table(family, table)?;
    let mut g = f64::NEG_INFINITY;
    for &i in &table.active {
        let e = expected_log_w(qt, &family.channels[i])?;
        g = g.max(xi * table.e1[i] + table.t + e);
    }
    Ok(g)
}

/// `Ω(Q, Q̃) = G(Q̃) − G(Q) − T`.
pub fn omega_universal(
    xi: f64,
    family: &ChannelFamily,
    table: &ExponentTable,
    q: &JointDist,
    qt: &JointDist,
) -> Result<f64> {
    let a = g_value(xi, family, table, qt)?;
    let b = g_value(xi, family, table, q)?;
    if a == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(a - b - table.t)
}

/// Shared data for the general conditions.
struct General<'a> {
    family: &'a ChannelFamily,
    table: &'a ExponentTable,
    logs: Vec<Vec<f64>>,
    geo: Geometry,
}

impl<'a> General<'a> {
    fn new(family: &'a ChannelFamily, table: &'a ExponentTable) -> Result<Self> {
        check_table(family, table)?;
        if family.nx() > MAX_ALPHABET || family.ny() > MAX_ALPHABET {
            return Err(Error::Unsupported(format!(
                "{}x{} alphabets exceed the solver limit",
                family.nx(),
                family.ny()
            )));
        }
        Ok(Self {
            family,
            table,
            logs: family.channels.iter().map(floored_log).collect(),
            geo: Geometry::new(family.nx(), family.ny()),
        })
    }

    fn pieces(&self, xi: f64) -> Pieces<'_> {
        Pieces {
            l: self
                .table
                .active
                .iter()
                .map(|&i| self.logs[i].as_slice())
                .collect(),
            b: self
                .table
                .active
                .iter()
                .map(|&i| xi * self.table.e1[i])
                .collect(),
        }
    }

    fn cond_a(&self, xi: f64) -> ConditionValue {
        let (r, t) = (self.table.r, self.table.t);
        let pieces = self.pieces(xi);
        let vals: Vec<(usize, f64)> = self
            .table
            .active
            .par_iter()
            .map(|&i| {
                let lt = &self.logs[i];
                let mut f = |qy: &[f64]| {
                    let sl = Slice::new(&self.family.px, qy);
                    a_slice(&sl, &self.geo, lt, &pieces, r, t).0
                };
                let (_, m) = minimize_over_qy(self.family.ny(), &mut f);
                (i, lhs_term(xi, self.table.e1[i], m))
            })
            .collect();
        fold_max(vals.into_iter())
    }

    fn cond_b(&self, xi: f64) -> ConditionValue {
        let (r, t) = (self.table.r, self.table.t);
        let pieces = self.pieces(xi);
        let vals: Vec<(usize, f64)> = self
            .table
            .active
            .par_iter()
            .map(|&i| {
                let lt = &self.logs[i];
                let mut f = |qy: &[f64]| {
                    let sl = Slice::new(&self.family.px, qy);
                    b_slice(&sl, lt, &pieces, r, t).0
                };
                let (_, m) = minimize_over_qy(self.family.ny(), &mut f);
                (i, lhs_term(xi, self.table.e1[i], m))
            })
            .collect();
        fold_max(vals.into_iter())
    }
}

/// `ξE₁ − m` with an infeasible inner minimum contributing `−∞`.
fn lhs_term(xi: f64, e1: f64, m: f64) -> f64 {
    if m == f64::INFINITY {
        f64::NEG_INFINITY
    } else {
        xi * e1 - m
    }
}

/// Condition A: `max_θ { ξE₁(θ) − min_{(Q,Q̃) ∈ 𝒬} [D(Q̃‖P_X×W_θ) + I(Q) − R] }` with
/// `𝒬 = {I(Q) ≥ R, Ω(Q, Q̃) ≤ 0}`. `ξ` is achievable only if this is `≤ 0`.
pub fn condition_a_lhs(
    xi: f64,
    family: &ChannelFamily,
    table: &ExponentTable,
) -> Result<ConditionValue> {
    Ok(General::new(family, table)?.cond_a(xi))
}

/// Condition B: `max_θ { ξE₁(θ) − min_{Q̃ ∈ ℒ} D(Q̃‖P_X×W_θ) }` with
/// `ℒ = {G(Q̃) ≤ R + T + max_{I(Q) ≤ R} [G(Q) − I(Q)]}`.
pub fn condition_b_lhs(
    xi: f64,
    family: &ChannelFamily,
    table: &ExponentTable,
) -> Result<ConditionValue> {
    Ok(General::new(family, table)?.cond_b(xi))
}

/// Both condition values at one `ξ`; `None` for a condition that was not requested.
#[derive(Debug, Clone, Copy)]
struct Eval {
    a: Option<ConditionValue>,
    b: Option<ConditionValue>,
}

fn holds(v: Option<ConditionValue>) -> bool {
    v.map_or(true, |c| c.lhs <= CONDITION_TOL)
}

/// Refine a threshold inside `(lo, lo + step)` where `pred(lo)` holds and
/// `pred(lo + step)` fails. Returns the refined value and whether probing saw a single crossing.
fn refine(lo: f64, step: f64, pred: &mut impl FnMut(f64) -> bool) -> (f64, bool) {
    let probes: Vec<bool> = (1..=10)
        .map(|j| pred(lo + step * j as f64 / 11.0))
        .collect();
    let first_fail = probes.iter().position(|&p| !p).unwrap_or(10);
    if probes[first_fail..].iter().any(|&p| p) {
        return (lo, false);
    }
    let mut a = lo + step * first_fail as f64 / 11.0;
    let mut b = lo + step * (first_fail + 1) as f64 / 11.0;
    while b - a > 1e-7 {
        let m = 0.5 * (a + b);
        if pred(m) {
            a = m;
        } else {
            b = m;
        }
    }
    (a, true)
}

/// Descending line search over `ξ ∈ {1, 1 − step, …, 0}` followed by in-cell refinement.
fn line_search(
    step: f64,
    dropped: Vec<usize>,
    eval: &mut impl FnMut(f64, bool, bool) -> Eval,
) -> FractionResult {
    let n = (1.0 / step).round() as usize;
    let grid = |i: usize| (1.0 - i as f64 * step).max(0.0);
    let (mut ia, mut ib, mut star) = (None, None, None);
    let mut seen = Vec::new();
    for i in 0..=n {
        let e = eval(grid(i), true, true);
        let (ha, hb) = (holds(e.a), holds(e.b));
        seen.push((ha, hb));
        if ha && ia.is_none() {
            ia = Some(i);
        }
        if hb && ib.is_none() {
            ib = Some(i);
        }
        if ha && hb {
            star = Some(i);
            break;
        }
    }
    let mut single = true;
    let mut thresh = |idx: Option<usize>, want_a: bool, want_b: bool, single: &mut bool| -> f64 {
        match idx {
            None => 0.0,
            Some(0) => 1.0,
            Some(i) => {
                let mut pred = |x: f64| {
                    let e = eval(x, want_a, want_b);
                    holds(e.a) && holds(e.b)
                };
                let (v, ok) = refine(grid(i), step, &mut pred);
                *single &= ok;
                v
            }
        }
    };
    let xi_a = thresh(ia, true, false, &mut single);
    let xi_b = thresh(ib, false, true, &mut single);
    let degenerate = star.is_none();
    let xi = match star {
        // reuse a single-condition threshold when the other condition also held at the
        // upper end of the cell
        Some(i) if i > 0 && Some(i) == ia && Some(i) == ib => xi_a.min(xi_b),
        Some(i) if i > 0 && Some(i) == ia && seen[i - 1].1 => xi_a,
        Some(i) if i > 0 && Some(i) == ib && seen[i - 1].0 => xi_b,
        _ => thresh(star, true, true, &mut single),
    };
    let at = eval(xi, true, true);
    let (ca, cb) = (at.a.unwrap(), at.b.unwrap());
    let active = if xi >= 1.0 {
        if (ca.lhs - cb.lhs).abs() <= CONDITION_TOL {
            ActiveCondition::Both
        } else if ca.lhs > cb.lhs {
            ActiveCondition::A
        } else {
            ActiveCondition::B
        }
    } else if (xi_a - xi_b).abs() <= 1e-6 {
        ActiveCondition::Both
    } else if xi_a < xi_b {
        ActiveCondition::A
    } else {
        ActiveCondition::B
    };
    let argmax_theta = match active {
        ActiveCondition::B => cb.argmax,
        _ => ca.argmax,
    };
    FractionResult {
        xi,
        active_condition: active,
        argmax_theta,
        slack_a: ca.lhs,
        slack_b: cb.lhs,
        xi_a,
        xi_b,
        degenerate,
        multiple_crossings: !single,
        dropped,
    }
}

fn check_step(xi_step: f64) -> Result<()> {
    if !(xi_step > 0.0 && xi_step <= 0.01) {
        return Err(Error::Domain {
            name: "xi_step",
            value: xi_step,
            expected: "(0, 0.01]",
        });
    }
    Ok(())
}

fn degenerate_result(table: &ExponentTable) -> FractionResult {
    FractionResult {
        xi: 0.0,
        active_condition: ActiveCondition::Both,
        argmax_theta: table
            .active
            .iter()
            .copied()
            .find(|&i| table.e1[i].is_infinite())
            .unwrap_or(0),
        slack_a: f64::INFINITY,
        slack_b: f64::INFINITY,
        xi_a: 0.0,
        xi_b: 0.0,
        degenerate: true,
        multiple_crossings: false,
        dropped: table.dropped.clone(),
    }
}

/// `ξ*(R, T)` for a general finite family of DMCs.
pub fn xi_star(
    family: &ChannelFamily,
    table: &ExponentTable,
    xi_step: f64,
) -> Result<FractionResult> {
    check_step(xi_step)?;
    let g = General::new(family, table)?;
    if table.has_infinite() {
        return Ok(degenerate_result(table));
    }
    let mut eval = |xi: f64, a: bool, b: bool| Eval {
        a: a.then(|| g.cond_a(xi)),
        b: b.then(|| g.cond_b(xi)),
    };
    Ok(line_search(xi_step, table.dropped.clone(), &mut eval))
}

/// Piecewise-linear `Φ(q) = max_k (a_k − q β_k)` of a uniform-input BSC family, where
/// `a_k = ξE₁(θ_k) + log(1 − θ_k)`; on symmetric joints `G = T + Φ(q)`.
#[derive(Debug, Clone)]
struct BscPieces {
    a: Vec<f64>,
    beta: Vec<f64>,
    theta: Vec<f64>,
}

impl BscPieces {
    fn new(xi: f64, family: &ChannelFamily, table: &ExponentTable) -> Self {
        let idx = &table.active;
        let theta: Vec<f64> = idx.iter().map(|&i| family.thetas[i]).collect();
        Self {
            a: idx
                .iter()
                .zip(&theta)
                .map(|(&i, &th)| xi * table.e1[i] + (1.0 - th).ln())
                .collect(),
            beta: theta.iter().map(|&th| ((1.0 - th) / th).ln()).collect(),
            theta,
        }
    }

    fn phi(&self, q: f64) -> f64 {
        self.a
            .iter()
            .zip(&self.beta)
            .map(|(a, b)| a - q * b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Exact `(q₁*, q₂*)`: `Ω ≤ 0` holds exactly for `q ≤ q₁*` or `q ≥ q₂*`.
    fn boundaries(&self, qt: f64, t: f64) -> (f64, f64) {
        let c = self.phi(qt) - t;
        let (mut q1, mut q2) = (f64::NEG_INFINITY, f64::INFINITY);
        for (a, b) in self.a.iter().zip(&self.beta) {
            if *b > 0.0 {
                q1 = q1.max((a - c) / b);
            } else if *b < 0.0 {
                q2 = q2.min((a - c) / b);
            } else if *a >= c {
                return (f64::INFINITY, f64::NEG_INFINITY);
            }
        }
        (q1, q2)
    }

    /// `|log 2 − R − g(q₁*, q₂*)|⁺`, or `+∞` when no `q` is feasible.
    fn penalty(&self, qt: f64, r: f64, t: f64) -> f64 {
        let (q1, q2) = self.boundaries(qt, t);
        let g = g_of_boundaries(q1, q2);
        if g == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            (LN2 - r - g).max(0.0)
        }
    }
}

/// `g(q₁*, q₂*)`: the largest binary entropy over the feasible set `q ≤ q₁*` or `q ≥ q₂*`
/// within `[0, 1]`; `log 2` when the set contains 1/2, `−∞` when it is empty.
pub fn g_of_boundaries(q1: f64, q2: f64) -> f64 {
    if q1 >= 0.5 || q2 <= 0.5 {
        return LN2;
    }
    let g1 = if q1 >= 0.0 { h(q1) } else { f64::NEG_INFINITY };
    let g2 = if q2 <= 1.0 { h(q2) } else { f64::NEG_INFINITY };
    g1.max(g2)
}

fn check_uniform_bsc(family: &ChannelFamily, table: &ExponentTable) -> Result<()> {
    check_table(family, table)?;
    if !family.is_uniform_bsc() {
        return Err(Error::Unsupported(
            "the scalar BSC path needs a bsc_grid family with uniform inputs; use xi_star".into(),
        ));
    }
    Ok(())
}

/// Boundaries `(q₁*, q₂*)` of the feasible `q` set found by testing membership on a grid
/// of `q_grid` points: `q` is feasible iff some member satisfies
/// `ξE₁(θ′) + log(1−θ′) − β(θ′) q ≥ Φ(q̃) − T` (no division by `β`).
///
/// `q₁*` is the end of the feasible run starting at `q = 0` (`−∞` if 0 is infeasible),
/// `q₂*` the start of the run ending at `q = 1` (`+∞` if 1 is infeasible).
pub fn bsc_feasible_q_set(
    xi: f64,
    family: &ChannelFamily,
    table: &ExponentTable,
    qtilde: f64,
    q_grid: usize,
) -> Result<(f64, f64)> {
    check_uniform_bsc(family, table)?;
    let p = BscPieces::new(xi, family, table);
    let c = p.phi(qtilde) - table.t;
    let n = q_grid.max(2);
    let q = |i: usize| i as f64 / (n - 1) as f64;
    let member = |qq: f64| p.a.iter().zip(&p.beta).any(|(a, b)| a - b * qq >= c);
    let mut q1 = f64::NEG_INFINITY;
    for i in 0..n {
        if member(q(i)) {
            q1 = q(i);
        } else {
            break;
        }
    }
    let mut q2 = f64::INFINITY;
    for i in (0..n).rev() {
        if member(q(i)) {
            q2 = q(i);
        } else {
            break;
        }
    }
    Ok((q1, q2))
}

/// Exact boundaries from the half-lines of `Φ`, the reference for [`bsc_feasible_q_set`].
pub fn bsc_boundaries(
    xi: f64,
    family: &ChannelFamily,
    table: &ExponentTable,
    qtilde: f64,
) -> Result<(f64, f64)> {
    check_uniform_bsc(family, table)?;
    Ok(BscPieces::new(xi, family, table).boundaries(qtilde, table.t))
}

/// Scalar condition evaluator for uniform-input BSC families.
struct BscConditions<'a> {
    family: &'a ChannelFamily,
    table: &'a ExponentTable,
    q_step: f64,
    delta: f64,
}

impl<'a> BscConditions<'a> {
    fn cond_a(&self, xi: f64) -> ConditionValue {
        let (r, t) = (self.table.r, self.table.t);
        let p = BscPieces::new(xi, self.family, self.table);
        let n = (1.0 / self.q_step).round() as usize + 1;
        let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let pen: Vec<f64> = grid.iter().map(|&q| p.penalty(q, r, t)).collect();
        let vals = self.table.active.iter().map(|&i| {
            let th = self.family.thetas[i];
            let obj: Vec<f64> = grid
                .iter()
                .zip(&pen)
                .map(|(&q, &pe)| dbin(q, th) + pe)
                .collect();
            let j = (0..n).min_by(|&a, &b| obj[a].total_cmp(&obj[b])).unwrap();
            let mut m = obj[j];
            if m.is_finite() {
                let lo = grid[j.saturating_sub(1)];
                let hi = grid[(j + 1).min(n - 1)];
                let mut f = |q: f64| dbin(q, th) + p.penalty(q, r, t);
                m = m.min(golden_min(&mut f, lo, hi, 1e-12).1);
            }
            (i, lhs_term(xi, self.table.e1[i], m))
        });
        fold_max(vals)
    }

    /// `ℒ_BSC = {q̃ : Φ(q̃) ≤ K}` with `K = R + T + max_k max_{q ∈ [δ, 1−δ]} [a_k − qβ_k + h(q) − log 2]`.
    fn l_interval(&self, p: &BscPieces) -> Option<(f64, f64)> {
        let (r, t, d) = (self.table.r, self.table.t, self.delta);
        let k = r
            + t
            + p.a
                .iter()
                .zip(&p.beta)
                .zip(&p.theta)
                .map(|((a, b), th)| {
                    let q = th.clamp(d, 1.0 - d);
                    a - q * b + h(q) - LN2
                })
                .fold(f64::NEG_INFINITY, f64::max);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for (a, b) in p.a.iter().zip(&p.beta) {
            if *b > 0.0 {
                lo = lo.max((a - k) / b);
            } else if *b < 0.0 {
                hi = hi.min((a - k) / b);
            } else if *a > k {
                return None;
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    fn cond_b(&self, xi: f64) -> ConditionValue {
        let p = BscPieces::new(xi, self.family, self.table);
        let iv = self.l_interval(&p);
        let vals = self.table.active.iter().map(|&i| {
            let th = self.family.thetas[i];
            let m = match iv {
                None => f64::INFINITY,
                Some((lo, _)) if th < lo => dbin(lo, th),
                Some((_, hi)) if th > hi => dbin(hi, th),
                Some(_) => 0.0,
            };
            (i, lhs_term(xi, self.table.e1[i], m))
        });
        fold_max(vals)
    }
}

/// `ξ*(R, T)` for a BSC grid with uniform inputs via the scalar conditions.
pub fn xi_star_bsc(
    family: &ChannelFamily,
    table: &ExponentTable,
    xi_step: f64,
    q_step: f64,
) -> Result<FractionResult> {
    check_step(xi_step)?;
    check_uniform_bsc(family, table)?;
    if !(q_step > 0.0 && q_step <= 5e-4) {
        return Err(Error::Domain {
            name: "q_step",
            value: q_step,
            expected: "(0, 5e-4]",
        });
    }
    if table.has_infinite() {
        return Ok(degenerate_result(table));
    }
    let c = BscConditions {
        family,
        table,
        q_step,
        delta: gv_distance(table.r.min(LN2))?,
    };
    let mut eval = |xi: f64, a: bool, b: bool| Eval {
        a: a.then(|| c.cond_a(xi)),
        b: b.then(|| c.cond_b(xi)),
    };
    Ok(line_search(xi_step, table.dropped.clone(), &mut eval))
}

/// Scalar condition values at one `ξ` (uniform-input BSC families).
pub fn conditions_bsc(
    xi: f64,
    family: &ChannelFamily,
    table: &ExponentTable,
    q_step: f64,
) -> Result<(ConditionValue, ConditionValue)> {
    check_uniform_bsc(family, table)?;
    let c = BscConditions {
        family,
        table,
        q_step,
        delta: gv_distance(table.r.min(LN2))?,
    };
    Ok((c.cond_a(xi), c.cond_b(xi)))
}
