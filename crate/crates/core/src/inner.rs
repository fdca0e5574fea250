//! Inner problems at a fixed output marginal `Q_Y`.
//!
//! Both the known-channel exponents and the universal conditions share one shape:
//! a set of affine "pieces" `b_k + E_Q log W_k(Y|X)` and a reference channel `W_θ`.
//! The known-channel case is a single piece with `b = 0` and `W_k = W_θ`.
//!
//! With `Q_Y` fixed, each problem below is convex apart from the constraint
//! `I(Q) ≥ R`, which is handled by checking the relaxed optimum and otherwise
//! moving to the boundary `I(Q) = R`.

use nalgebra::DMatrix;

use crate::info_math::Dmc;
use crate::optim::{grid_golden_min, maximize_orthant, simplex_min, Local};
use crate::transport::{Coupling, Geometry, Slice};

/// `log W` with zero transitions floored so that dual multipliers stay finite.
pub(crate) fn floored_log(w: &Dmc) -> Vec<f64> {
    w.w.iter().map(|&v| v.max(1e-300).ln()).collect()
}

/// Affine pieces `b_k + E_Q ℓ_k` whose maximum is the metric `G(Q)`.
#[derive(Debug, Clone)]
pub(crate) struct Pieces<'a> {
    pub l: Vec<&'a [f64]>,
    pub b: Vec<f64>,
}

fn combo(base: &[f64], coef: f64, dirs: &[&[f64]], mu: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = base.iter().map(|v| coef * v).collect();
    for (d, &m) in dirs.iter().zip(mu) {
        if m != 0.0 {
            for (a, b) in s.iter_mut().zip(d.iter()) {
                *a -= m * b;
            }
        }
    }
    s
}

/// `φ(v) = min { D(Q̃ ‖ P_X × W_θ) : b_j + E_Q̃ ℓ_j ≤ v for all j }` over `Π(P_X, Q_Y)`.
///
/// Returns `+∞` when the constraint set is empty, together with the minimizer otherwise.
pub(crate) fn phi(sl: &Slice, lt: &[f64], pieces: &Pieces, v: f64) -> (f64, Option<Vec<f64>>) {
    let k = pieces.l.len();
    let mut eval = |mu: &[f64]| -> Option<Local> {
        let c = sl.psi(&combo(lt, 1.0, &pieces.l, mu));
        if !c.value.is_finite() {
            return None;
        }
        let mut value = sl.hp - c.value;
        let mut grad = vec![0.0; k];
        for j in 0..k {
            value += mu[j] * (pieces.b[j] - v);
            grad[j] = sl.lin(&c.q, pieces.l[j]) + pieces.b[j] - v;
        }
        let hess = -sl.hess_forms(&c, &pieces.l);
        Some(Local { value, grad, hess })
    };
    let res = maximize_orthant(&mut eval, &vec![0.0; k]);
    if res.unbounded || !res.value.is_finite() {
        return (f64::INFINITY, None);
    }
    let c = sl.psi(&combo(lt, 1.0, &pieces.l, &res.x));
    // the dual value is a lower bound; report the primal divergence when it is feasible
    (res.value.max(0.0), Some(c.q))
}

/// The coupling `Q_λ = argmax λ E_Q ℓ + H(Q)` with `I(Q_λ) = R`, searched on `λ ∈ [0, hi]`.
/// `None` if `I(Q_hi) < R`.
pub(crate) fn lagrange_point(sl: &Slice, l: &[f64], r: f64, hi: f64) -> Option<(f64, Coupling)> {
    let at = |lam: f64| {
        let s: Vec<f64> = l.iter().map(|v| lam * v).collect();
        let c = sl.psi(&s);
        let i = sl.mi(&c.q);
        (c, i)
    };
    if r <= 0.0 {
        return Some((0.0, at(0.0).0));
    }
    let (c_hi, i_hi) = at(hi);
    if i_hi < r {
        return None;
    }
    if (i_hi - r).abs() < 1e-14 {
        return Some((hi, c_hi));
    }
    let (mut lo, mut up) = (0.0_f64, hi);
    let mut lam = 0.5 * hi;
    let mut best = (hi, c_hi);
    for _ in 0..200 {
        let (c, i) = at(lam);
        let err = i - r;
        if err > 0.0 {
            up = lam;
        } else {
            lo = lam;
        }
        let slope = lam * sl.hess_forms(&c, &[l])[(0, 0)];
        best = (lam, c);
        if err.abs() < 1e-14 || up - lo < 1e-15 * up.max(1.0) {
            break;
        }
        let newton = if slope > 0.0 {
            lam - err / slope
        } else {
            f64::NAN
        };
        lam = if newton > lo && newton < up {
            newton
        } else {
            0.5 * (lo + up)
        };
    }
    Some(best)
}

/// `V = max { E_Q ℓ − I(Q) : I(Q) ≤ R }` over the slice.
pub(crate) fn capped_gain(sl: &Slice, l: &[f64], r: f64) -> f64 {
    let c1 = sl.psi(l);
    if sl.mi(&c1.q) <= r {
        return c1.value - sl.hp - sl.hq;
    }
    match lagrange_point(sl, l, r, 1.0) {
        Some((_, c)) => sl.lin(&c.q, l) - r,
        // unreachable for r ≥ 0 since I(Q_0) = 0, kept as a safe fallback
        None => c1.value - sl.hp - sl.hq,
    }
}

/// `max { E_Q ℓ : I(Q) = R }` over the slice with its maximizer; `None` if no coupling
/// reaches information `R`.
pub(crate) fn boundary_max(
    sl: &Slice,
    geo: &Geometry,
    l: &[f64],
    r: f64,
) -> Option<(f64, Vec<f64>)> {
    let verts = sl.vertices(geo);
    let vals: Vec<f64> = verts.iter().map(|v| sl.lin(v, l)).collect();
    let infos: Vec<f64> = verts.iter().map(|v| sl.mi(v)).collect();
    let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = 1e-12 * top.abs().max(1.0);
    let top_reaches = (0..verts.len()).any(|i| vals[i] >= top - scale && infos[i] >= r);
    if top_reaches {
        // the optimal face reaches I ≥ R; the boundary max is the Lagrange point
        // unless the face itself crosses the level set
        return match lagrange_point(sl, l, r, 1e4) {
            Some((_, c)) => Some((sl.lin(&c.q, l), c.q)),
            None => {
                let i = (0..verts.len())
                    .filter(|&i| vals[i] >= top - scale && infos[i] >= r)
                    .max_by(|&a, &b| infos[a].total_cmp(&infos[b]))
                    .unwrap();
                Some((top, verts[i].clone()))
            }
        };
    }
    // Every maximizer of the linear form has I < R: the constrained maximum lies on
    // an edge of the polytope where I crosses R.
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut offer = |val: f64, q: Vec<f64>| {
        if best.as_ref().map_or(true, |b| val > b.0) {
            best = Some((val, q));
        }
    };
    for i in 0..verts.len() {
        if infos[i] < r {
            continue;
        }
        offer(vals[i], verts[i].clone());
        for j in 0..verts.len() {
            if infos[j] >= r || vals[j] <= vals[i] {
                continue;
            }
            // bisect t ∈ [0,1] along verts[i] → verts[j] for I = R
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            let mut pt = verts[i].clone();
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                for (p, (a, b)) in pt.iter_mut().zip(verts[i].iter().zip(&verts[j])) {
                    *p = a + mid * (b - a);
                }
                if sl.mi(&pt) >= r {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
            for (p, (a, b)) in pt.iter_mut().zip(verts[i].iter().zip(&verts[j])) {
                *p = a + lo * (b - a);
            }
            offer(sl.lin(&pt, l), pt);
        }
    }
    best
}

/// Minimizers of a slice problem: `(Q, Q̃)`.
pub(crate) type PairOpt = Option<(Vec<f64>, Vec<f64>)>;

/// Piece `k` of condition A:
/// `min D(Q̃‖P_X×W_θ) + I(Q) − R` over `I(Q) ≥ R`, `b_j + E_Q̃ ℓ_j ≤ T + b_k + E_Q ℓ_k ∀j`.
pub(crate) fn a_piece(
    sl: &Slice,
    geo: &Geometry,
    lt: &[f64],
    pieces: &Pieces,
    k: usize,
    r: f64,
    t: f64,
) -> (f64, PairOpt) {
    let kk = pieces.l.len();
    let lk = pieces.l[k];
    let shift = t + pieces.b[k];
    let mut eval = |mu: &[f64]| -> Option<Local> {
        let s: f64 = mu.iter().sum();
        let ct = sl.psi(&combo(lt, 1.0, &pieces.l, mu));
        let cq = sl.psi(&lk.iter().map(|v| s * v).collect::<Vec<_>>());
        if !ct.value.is_finite() || !cq.value.is_finite() {
            return None;
        }
        let eq = sl.lin(&cq.q, lk);
        let mut value = (sl.hp - ct.value) + (sl.hp + sl.hq - cq.value) - s * shift - r;
        let mut grad = vec![0.0; kk];
        for j in 0..kk {
            value += mu[j] * pieces.b[j];
            grad[j] = sl.lin(&ct.q, pieces.l[j]) + pieces.b[j] - eq - shift;
        }
        let mut hess: DMatrix<f64> = -sl.hess_forms(&ct, &pieces.l);
        let curv = sl.hess_forms(&cq, &[lk])[(0, 0)];
        hess.add_scalar_mut(-curv);
        Some(Local { value, grad, hess })
    };
    let res = maximize_orthant(&mut eval, &vec![0.0; kk]);
    if res.unbounded {
        return (f64::INFINITY, None);
    }
    let s: f64 = res.x.iter().sum();
    let cq = sl.psi(&lk.iter().map(|v| s * v).collect::<Vec<_>>());
    if sl.mi(&cq.q) >= r - 1e-12 && res.value.is_finite() {
        let ct = sl.psi(&combo(lt, 1.0, &pieces.l, &res.x));
        return (res.value.max(0.0), Some((cq.q, ct.q)));
    }
    // the relaxed optimum violates I(Q) ≥ R, so the optimum sits on I(Q) = R
    match boundary_max(sl, geo, lk, r) {
        None => (f64::INFINITY, None),
        Some((c, q)) => {
            let (v, qt) = phi(sl, lt, pieces, shift + c);
            (v, qt.map(|qt| (q, qt)))
        }
    }
}

/// Condition-A value at one slice: the minimum over pieces.
pub(crate) fn a_slice(
    sl: &Slice,
    geo: &Geometry,
    lt: &[f64],
    pieces: &Pieces,
    r: f64,
    t: f64,
) -> (f64, PairOpt) {
    let mut best = (f64::INFINITY, None);
    for k in 0..pieces.l.len() {
        let cand = a_piece(sl, geo, lt, pieces, k, r, t);
        if cand.0 < best.0 {
            best = cand;
        }
    }
    best
}

/// Condition-B value at one slice: `φ(R + T + max_k [b_k + V_k])`.
pub(crate) fn b_slice(
    sl: &Slice,
    lt: &[f64],
    pieces: &Pieces,
    r: f64,
    t: f64,
) -> (f64, Option<Vec<f64>>) {
    let cap = (0..pieces.l.len())
        .map(|k| pieces.b[k] + capped_gain(sl, pieces.l[k], r))
        .fold(f64::NEG_INFINITY, f64::max);
    phi(sl, lt, pieces, r + t + cap)
}

/// Minimize a function of the output marginal `Q_Y` over the simplex.
pub(crate) fn minimize_over_qy(ny: usize, f: &mut impl FnMut(&[f64]) -> f64) -> (Vec<f64>, f64) {
    match ny {
        1 => {
            let v = f(&[1.0]);
            (vec![1.0], v)
        }
        2 => {
            let mut g = |a: f64| f(&[a, 1.0 - a]);
            let (a, v) = grid_golden_min(&mut g, 0.0, 1.0, 201, 3, 1e-10);
            (vec![a, 1.0 - a], v)
        }
        3 => simplex_min(f, 3, 20, 1e-7),
        _ => simplex_min(f, ny, 10, 1e-6),
    }
}
