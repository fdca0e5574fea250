//! Exact erasure/list exponents of Forney's decoder for a known channel.
//!
//! `E₁ = min{E_a, E_b}` for fixed-composition random codes, and `E₂ = E₁ + T`.
//! General DMCs go through the transport-slice solver in [`crate::inner`]; the
//! BSC with uniform inputs has one-dimensional reductions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info_math::{beta, dbin, gv_distance, h, Dmc, JointDist, LN2, SUM_TOL};
use crate::inner::{a_slice, b_slice, floored_log, minimize_over_qy, Pieces};
use crate::optim::grid_golden_min;
use crate::transport::{Geometry, Slice};

/// Largest alphabet handled by the general solver.
pub const MAX_ALPHABET: usize = 4;

/// Rate, threshold, channel and input composition of one exponent evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentQuery {
    pub r: f64,
    pub t: f64,
    pub channel: Dmc,
    pub px: Vec<f64>,
}

impl ExponentQuery {
    pub fn new(r: f64, t: f64, channel: Dmc, px: Vec<f64>) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::Domain {
                name: "r",
                value: r,
                expected: "[0, ∞)",
            });
        }
        if !t.is_finite() {
            return Err(Error::Domain {
                name: "t",
                value: t,
                expected: "a finite real",
            });
        }
        check_px(&px, channel.nx)?;
        Ok(Self { r, t, channel, px })
    }

    /// BSC with crossover `theta` and uniform inputs.
    pub fn bsc(r: f64, t: f64, theta: f64) -> Result<Self> {
        Self::new(r, t, Dmc::bsc(theta)?, vec![0.5, 0.5])
    }

    fn check_scale(&self) -> Result<()> {
        if self.channel.nx > MAX_ALPHABET || self.channel.ny > MAX_ALPHABET {
            return Err(Error::Unsupported(format!(
                "{}x{} alphabets exceed the {MAX_ALPHABET}x{MAX_ALPHABET} solver limit",
                self.channel.nx, self.channel.ny
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_px(px: &[f64], nx: usize) -> Result<()> {
    if px.len() != nx {
        return Err(Error::Shape(format!(
            "input distribution of length {} for {nx} inputs",
            px.len()
        )));
    }
    if px.iter().any(|&v| !(v >= 0.0)) || (px.iter().sum::<f64>() - 1.0).abs() > SUM_TOL {
        return Err(Error::Distribution("input distribution".into()));
    }
    Ok(())
}

/// Which expression attains `E₁ = min{E_a, E_b}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    A,
    B,
}

/// A pair `(Q, Q̃)` with `Q_X = Q̃_X = P_X` and `Q_Y = Q̃_Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalPair {
    pub q: JointDist,
    pub qt: JointDist,
}

impl MarginalPair {
    pub fn new(q: JointDist, qt: JointDist, px: &[f64]) -> Result<Self> {
        if q.nx != qt.nx || q.ny != qt.ny || px.len() != q.nx {
            return Err(Error::Shape("pair shapes".into()));
        }
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9);
        if !close(&q.marginal_x(), px) || !close(&qt.marginal_x(), px) {
            return Err(Error::Distribution("X-marginal differs from P_X".into()));
        }
        if !close(&q.marginal_y(), &qt.marginal_y()) {
            return Err(Error::Distribution("Y-marginals differ".into()));
        }
        Ok(Self { q, qt })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentResult {
    pub e1: f64,
    pub e2: f64,
    pub branch: Branch,
    pub e_a: f64,
    pub e_b: f64,
    /// Minimizing `Q` of the attaining branch (for branch B, the inner maximizer).
    pub minimizer_q: Option<JointDist>,
    pub minimizer_qt: Option<JointDist>,
}

impl ExponentResult {
    fn assemble(
        t: f64,
        e_a: f64,
        e_b: f64,
        pair_a: (Option<JointDist>, Option<JointDist>),
        pair_b: (Option<JointDist>, Option<JointDist>),
    ) -> Self {
        let (branch, e1, (q, qt)) = if e_a <= e_b {
            (Branch::A, e_a, pair_a)
        } else {
            (Branch::B, e_b, pair_b)
        };
        Self {
            e1,
            e2: e2_from_e1(e1, t),
            branch,
            e_a,
            e_b,
            minimizer_q: q,
            minimizer_qt: qt,
        }
    }
}

/// `Ω̂(Q, Q̃) = E_Q̃ log W − E_Q log W − T`.
pub fn omega_hat(q: &JointDist, qt: &JointDist, w: &Dmc, t: f64) -> Result<f64> {
    let a = crate::info_math::expected_log_w(qt, w)?;
    let b = crate::info_math::expected_log_w(q, w)?;
    if a == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(a - b - t)
}

/// `E₂ = E₁ + T`.
pub fn e2_from_e1(e1: f64, t: f64) -> f64 {
    e1 + t
}

fn joint(nx: usize, ny: usize, p: Vec<f64>) -> JointDist {
    JointDist::from_raw(nx, ny, p)
}

/// `E_a`: minimum of `D(Q̃‖P_X×W) + I(Q) − R` over pairs with `I(Q) ≥ R` and `Ω̂ ≤ 0`.
pub fn e_a_general(query: &ExponentQuery) -> Result<(f64, Option<MarginalPair>)> {
    query.check_scale()?;
    let w = &query.channel;
    let lw = floored_log(w);
    let pieces = Pieces {
        l: vec![&lw],
        b: vec![0.0],
    };
    let geo = Geometry::new(w.nx, w.ny);
    let mut best_pair = None;
    let mut best = f64::INFINITY;
    let mut f = |qy: &[f64]| {
        let sl = Slice::new(&query.px, qy);
        let (v, pair) = a_slice(&sl, &geo, &lw, &pieces, query.r, query.t);
        if v < best {
            best = v;
            best_pair = pair;
        }
        v
    };
    let (_, v) = minimize_over_qy(w.ny, &mut f);
    let pair = best_pair.map(|(q, qt)| MarginalPair {
        q: joint(w.nx, w.ny, q),
        qt: joint(w.nx, w.ny, qt),
    });
    Ok((v, if v.is_finite() { pair } else { None }))
}

/// `E_b`: minimum of `D(Q̃‖P_X×W)` over `L̂`.
pub fn e_b_general(query: &ExponentQuery) -> Result<(f64, Option<JointDist>)> {
    query.check_scale()?;
    let w = &query.channel;
    let lw = floored_log(w);
    let pieces = Pieces {
        l: vec![&lw],
        b: vec![0.0],
    };
    let mut best_qt = None;
    let mut best = f64::INFINITY;
    let mut f = |qy: &[f64]| {
        let sl = Slice::new(&query.px, qy);
        let (v, qt) = b_slice(&sl, &lw, &pieces, query.r, query.t);
        if v < best {
            best = v;
            best_qt = qt;
        }
        v
    };
    let (_, v) = minimize_over_qy(w.ny, &mut f);
    let qt = best_qt.map(|p| joint(w.nx, w.ny, p));
    Ok((v, if v.is_finite() { qt } else { None }))
}

/// `E₁ = min{E_a, E_b}` for a general DMC.
pub fn e1_general(query: &ExponentQuery) -> Result<ExponentResult> {
    let (e_a, pa) = e_a_general(query)?;
    let (e_b, qb) = e_b_general(query)?;
    let pa = match pa {
        Some(p) => (Some(p.q), Some(p.qt)),
        None => (None, None),
    };
    Ok(ExponentResult::assemble(query.t, e_a, e_b, pa, (None, qb)))
}

fn check_bsc(r: f64, theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain {
            name: "theta",
            value: theta,
            expected: "(0, 1)",
        });
    }
    if !(0.0..=LN2).contains(&r) {
        return Err(Error::Domain {
            name: "r",
            value: r,
            expected: "[0, log 2]",
        });
    }
    Ok(())
}

const FLAT_BETA: f64 = 1e-9;

/// Scalar `E_a` for θ < 1/2 with the minimizing off-diagonal masses `(q, q̃)`.
///
/// Symmetric pairs with off-diagonal masses `q`, `q̃` give `I(Q) = log 2 − h(q)` and
/// `Ω̂ ≤ 0 ⇔ q ≤ q̃ + T/β`; maximizing `h(q)` for each `q̃` leaves a convex scalar problem.
fn e_a_bsc_lower(r: f64, t: f64, theta: f64) -> (f64, f64, f64) {
    let b = beta(theta).unwrap();
    let delta = gv_distance(r).unwrap();
    let u = t / b;
    if theta + u >= delta {
        return (0.0, delta.min(theta + u), theta);
    }
    let lo = theta.max(-u);
    let hi = (delta - u).min(1.0);
    if lo > hi {
        return (f64::INFINITY, f64::NAN, f64::NAN);
    }
    let mut f = |qt: f64| dbin(qt, theta) + LN2 - r - h((qt + u).clamp(0.0, 1.0));
    let (qt, v) = grid_golden_min(&mut f, lo, hi, 2001, 1, 1e-10);
    (v.max(0.0), (qt + u).clamp(0.0, 1.0), qt)
}

/// `E_a` for the BSC with uniform inputs.
///
/// Returns 0 when `θ + T/β ≥ δ_GV(R)`: the pair `Q̃ = P_X × W`, `q = δ_GV(R)` is then feasible.
pub fn e_a_bsc(r: f64, t: f64, theta: f64) -> Result<f64> {
    check_bsc(r, theta)?;
    if beta(theta)?.abs() < FLAT_BETA {
        return Ok(e_a_general(&ExponentQuery::bsc(r, t, theta)?)?.0);
    }
    Ok(e_a_bsc_lower(r, t, theta.min(1.0 - theta)).0)
}

/// The interval form `min_{q̃ ∈ [θ, δ_GV(R) − T/β]} D(q̃‖θ) − h(q̃ + T/β) + log 2 − R`,
/// `+∞` on an empty interval. Agrees with [`e_a_bsc`] whenever the interval is
/// nonempty and `q̃ + T/β ≥ 0` on it.
pub fn e_a_bsc_interval_form(r: f64, t: f64, theta: f64) -> Result<f64> {
    check_bsc(r, theta)?;
    let b = beta(theta)?;
    if b.abs() < FLAT_BETA {
        return Err(Error::Domain {
            name: "theta",
            value: theta,
            expected: "θ ≠ 1/2 (β = 0)",
        });
    }
    let delta = gv_distance(r)?;
    let u = t / b;
    let hi = delta - u;
    if theta > hi {
        return Ok(f64::INFINITY);
    }
    let mut f = |qt: f64| {
        let v = dbin(qt, theta) - h(qt + u) + LN2 - r;
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let (_, v) = grid_golden_min(&mut f, theta, hi.min(1.0), 2001, 1, 1e-10);
    Ok(v)
}

/// Scalar `E_b` for any θ ∈ (0,1), β ≠ 0, with `(q, q̃)`.
fn e_b_bsc_inner(r: f64, t: f64, theta: f64) -> (f64, f64, f64) {
    let b = beta(theta).unwrap();
    let delta = gv_distance(r).unwrap();
    let q = theta.clamp(delta, 1.0 - delta);
    let k = r + t + (1.0 - theta).ln() - q * b + h(q) - LN2;
    // E_Q̃ log W = log(1−θ) − q̃β ≤ K
    let edge = ((1.0 - theta).ln() - k) / b;
    let (lo, hi) = if b > 0.0 {
        (edge, f64::INFINITY)
    } else {
        (f64::NEG_INFINITY, edge)
    };
    if lo > 1.0 || hi < 0.0 {
        return (f64::INFINITY, q, f64::NAN);
    }
    if theta >= lo && theta <= hi {
        return (0.0, q, theta);
    }
    let qt = if theta < lo { lo } else { hi };
    (dbin(qt, theta), q, qt)
}

/// `E_b` for the BSC with uniform inputs. The inner maximizer over `I(Q) ≤ R` is
/// `q = clamp(θ, δ_GV(R), 1 − δ_GV(R))`.
pub fn e_b_bsc(r: f64, t: f64, theta: f64) -> Result<f64> {
    check_bsc(r, theta)?;
    if beta(theta)?.abs() < FLAT_BETA {
        return Ok(e_b_general(&ExponentQuery::bsc(r, t, theta)?)?.0);
    }
    Ok(e_b_bsc_inner(r, t, theta).0)
}

/// `E₁` for the BSC with uniform inputs; minimizers are reported as symmetric joints.
pub fn e1_bsc(r: f64, t: f64, theta: f64) -> Result<ExponentResult> {
    check_bsc(r, theta)?;
    if beta(theta)?.abs() < FLAT_BETA {
        return e1_general(&ExponentQuery::bsc(r, t, theta)?);
    }
    let mirror = theta > 0.5;
    let th = if mirror { 1.0 - theta } else { theta };
    let sym = |m: f64| -> Option<JointDist> {
        if m.is_nan() {
            return None;
        }
        let m = if mirror { 1.0 - m } else { m };
        JointDist::symmetric_binary(m.clamp(0.0, 1.0)).ok()
    };
    let (e_a, qa, qta) = e_a_bsc_lower(r, t, th);
    let (e_b, qb, qtb) = e_b_bsc_inner(r, t, th);
    Ok(ExponentResult::assemble(
        t,
        e_a,
        e_b,
        (sym(qa), sym(qta)),
        (sym(qb), sym(qtb)),
    ))
}
