//! The competitive-minimax lower bound `ξ_L(R, T)` and a comparison of its saddle-point
//! problem with the relaxed problem that characterizes `ξ*`.
//!
//! ```text
//! ξ_L = min_{(θ,θ″)} max_{0 ≤ s ≤ ρ ≤ 1} [E(θ,θ″,s,ρ) − ρR − sT] / [(1−s)E₁(θ) + sE₁(θ″)]
//! E(θ,θ″,s,ρ) = min_{Q_Y} [F(Q_Y, 1−s, θ) + ρF(Q_Y, s/ρ, θ″) − H(Q_Y)]
//! F(Q_Y, λ, θ) = min_{Q_{X|Y}} [I(Q) − λ E_Q log W_θ]
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{ChannelFamily, ExponentTable};
use crate::info_math::{
    expected_log_w, joint_divergence, mutual_information, Dmc, JointDist, LN2, SUM_TOL,
};
use crate::inner::{floored_log, minimize_over_qy};
use crate::known_exponents::check_px;
use crate::transport::Slice;

/// Smallest `ρ` at which `s/ρ` is evaluated.
const RHO_FLOOR: f64 = 1e-6;

/// Upper end of the `s` range searched in the relaxed problem.
pub const RELAXED_S_MAX: f64 = 4.0;

/// Resolution of the `(s, ρ)` searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Points per axis of the initial grid.
    pub n: usize,
    /// Final step of the local search that follows the grid.
    pub tol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 201, tol: 1e-9 }
    }
}

/// Maximizers and values of the constrained (`s ≤ ρ`, `θ′ = θ`) and relaxed saddle problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleDiagnostics {
    /// Family indices of the minimizing pair.
    pub theta_star: usize,
    pub theta_dprime_star: usize,
    pub s_star: f64,
    pub rho_star: f64,
    /// Value of the constrained problem (the ratio itself for [`xi_lower`]).
    pub constrained_value: f64,
    /// Relaxed problem at the same `ξ`; `None` when only the ratio was computed.
    pub relaxed: Option<RelaxedSaddle>,
    /// Pairs left out because both exponents vanish.
    pub skipped_pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedSaddle {
    pub theta_star: usize,
    pub theta_prime_star: usize,
    pub theta_dprime_star: usize,
    pub s: f64,
    pub rho: f64,
    pub value: f64,
    /// `s > ρ` at the relaxed optimum, so the cap `s ≤ ρ` binds in the constrained problem.
    pub constraint_active: bool,
}

fn check_qy(qy: &[f64], ny: usize) -> Result<()> {
    if qy.len() != ny {
        return Err(Error::Shape(format!(
            "output distribution of length {} for {ny} outputs",
            qy.len()
        )));
    }
    if qy.iter().any(|&v| !(v >= 0.0)) || (qy.iter().sum::<f64>() - 1.0).abs() > SUM_TOL {
        return Err(Error::Distribution("output distribution".into()));
    }
    Ok(())
}

/// `F(Q_Y, λ, θ) = min I(Q) − λ E_Q log W_θ` over joints with marginals `P_X` and `Q_Y`.
pub fn f_term(qy: &[f64], lam: f64, channel: &Dmc, px: &[f64]) -> Result<f64> {
    check_px(px, channel.nx)?;
    check_qy(qy, channel.ny)?;
    let sl = Slice::new(px, qy);
    let l: Vec<f64> = floored_log(channel).iter().map(|v| lam * v).collect();
    Ok(sl.hp + sl.hq - sl.psi(&l).value)
}

fn scaled(l: &[f64], c: f64) -> Vec<f64> {
    l.iter().map(|v| c * v).collect()
}

/// `E(θ, θ″, s, ρ)` for two channels on the same alphabets, minimized over `Q_Y`.
pub fn e_gallager(w: &Dmc, w2: &Dmc, s: f64, rho: f64, px: &[f64]) -> Result<f64> {
    if w.nx != w2.nx || w.ny != w2.ny {
        return Err(Error::Shape("channels on different alphabets".into()));
    }
    check_px(px, w.nx)?;
    if !(0.0..=1.0).contains(&rho) || !(s >= 0.0) || s > rho.max(0.0) + 1e-15 && rho == 0.0 {
        return Err(Error::Domain {
            name: "rho",
            value: rho,
            expected: "(0, 1] when s > 0",
        });
    }
    let l1 = scaled(&floored_log(w), 1.0 - s);
    let l2 = if rho > 0.0 {
        scaled(&floored_log(w2), s / rho)
    } else {
        vec![0.0; w.nx * w.ny]
    };
    let mut f = |qy: &[f64]| {
        let sl = Slice::new(px, qy);
        (1.0 + rho) * sl.hp + rho * sl.hq - sl.psi(&l1).value - rho * sl.psi(&l2).value
    };
    Ok(minimize_over_qy(w.ny, &mut f).1)
}

/// `log(θ^λ + (1−θ)^λ)`.
fn log_z(theta: f64, lam: f64) -> f64 {
    let (a, b) = (lam * theta.ln(), lam * (1.0 - theta).ln());
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Closed form of [`e_gallager`] for two BSCs under uniform inputs, where the uniform
/// `Q_Y` is optimal by symmetry and convexity.
pub fn e_gallager_bsc(theta: f64, theta_dprime: f64, s: f64, rho: f64) -> f64 {
    let second = if rho > 0.0 {
        rho * (LN2 - log_z(theta_dprime, s / rho))
    } else {
        0.0
    };
    (LN2 - log_z(theta, 1.0 - s)) + second - LN2
}

/// Arguments of the saddle function `Ψ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiPoint {
    pub theta: usize,
    pub theta_prime: usize,
    pub theta_dprime: usize,
    pub rho: f64,
    pub s: f64,
    pub xi: f64,
}

/// `Ψ = D(Q̃‖P_X×W_θ) + ρ[I(Q) − R] + s[E_Q̃ log W_θ′ + ξE₁(θ′) − E_Q log W_θ″ − ξE₁(θ″) − T] − ξE₁(θ)`.
pub fn psi(
    family: &ChannelFamily,
    table: &ExponentTable,
    at: &PsiPoint,
    q: &JointDist,
    qt: &JointDist,
) -> Result<f64> {
    let ch = &family.channels;
    let e1 = &table.e1;
    let d = joint_divergence(qt, &family.px, &ch[at.theta])?;
    let i = mutual_information(q);
    let bracket = if at.s == 0.0 {
        0.0
    } else {
        expected_log_w(qt, &ch[at.theta_prime])? + at.xi * e1[at.theta_prime]
            - expected_log_w(q, &ch[at.theta_dprime])?
            - at.xi * e1[at.theta_dprime]
            - table.t
    };
    Ok(d + at.rho * (i - table.r) + at.s * bracket - at.xi * e1[at.theta])
}

/// Grid search followed by a pattern search with step halving, for a
/// function on `[0, s_max] × [0, 1]`, optionally restricted to `s ≤ ρ`. The objectives here
/// are concave or quasi-concave with narrow ridges, which a fixed zoom window can miss.
/// The pattern search also starts from each point of `seeds` that lies in the domain.
/// Returns `(value, s, ρ)` of the best point; `None` if `f` was `NaN` everywhere.
fn grid_max(
    f: &mut impl FnMut(f64, f64) -> f64,
    s_max: f64,
    triangle: bool,
    spec: GridSpec,
    seeds: &[(f64, f64)],
) -> Option<(f64, f64, f64)> {
    let n = spec.n.max(2);
    let inside = |s: f64, rho: f64| {
        (0.0..=s_max).contains(&s) && (0.0..=1.0).contains(&rho) && !(triangle && s > rho)
    };
    let mut best: Option<(f64, f64, f64)> = None;
    let hs = s_max / (n - 1) as f64;
    let hr = 1.0 / (n - 1) as f64;
    for j in 0..n {
        let rho = j as f64 * hr;
        for i in 0..n {
            let s = i as f64 * hs;
            if !inside(s, rho) {
                break;
            }
            let v = f(s, rho);
            if !v.is_nan() && best.map_or(true, |b| v > b.0) {
                best = Some((v, s, rho));
            }
        }
    }
    let mut starts: Vec<(f64, f64, f64)> = best.into_iter().collect();
    for &(s, rho) in seeds.iter().filter(|p| inside(p.0, p.1)) {
        let v = f(s, rho);
        if !v.is_nan() {
            starts.push((v, s, rho));
        }
    }
    starts
        .into_iter()
        .map(|p| climb(f, p, hs.min(hr), spec.tol, &inside))
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
}

/// Pattern search from `start` over sixteen primitive directions with equal steps on both
/// axes. Before the step is halved, 64 evenly spaced directions are also tried: near a
/// corner the objectives are close to homogeneous of degree one, and the ascent cone can
/// fall between the primitive directions.
fn climb(
    f: &mut impl FnMut(f64, f64) -> f64,
    start: (f64, f64, f64),
    step: f64,
    tol: f64,
    inside: &impl Fn(f64, f64) -> bool,
) -> (f64, f64, f64) {
    let dirs: Vec<(f64, f64)> = (-2..=2_i32)
        .flat_map(|a| (-2..=2_i32).map(move |b| (a, b)))
        .filter(|&(a, b)| {
            (a, b) != (0, 0) && !(a.abs() == 2 && b.abs() != 1) && !(b.abs() == 2 && a.abs() != 1)
        })
        .map(|(a, b)| (a as f64, b as f64))
        .collect();
    let fine: Vec<(f64, f64)> = (0..64)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / 64.0;
            (a.cos(), a.sin())
        })
        .collect();
    let (mut v, mut s, mut rho) = start;
    let mut d = step;
    let mut try_dirs = |dirs: &[(f64, f64)], d: f64, v: &mut f64, s: &mut f64, rho: &mut f64| {
        let mut moved = false;
        for &(a, b) in dirs {
            let (s2, r2) = (*s + a * d, *rho + b * d);
            if !inside(s2, r2) {
                continue;
            }
            let v2 = f(s2, r2);
            if v2 > *v {
                (*v, *s, *rho) = (v2, s2, r2);
                moved = true;
            }
        }
        moved
    };
    while d > tol {
        if !try_dirs(&dirs, d, &mut v, &mut s, &mut rho)
            && !try_dirs(&fine, d, &mut v, &mut s, &mut rho)
        {
            d *= 0.5;
        }
    }
    (v, s, rho)
}

/// `E(θ_i, θ_j, s, ρ)` for members `i`, `j`, using the closed form when it applies.
struct Gallager<'a> {
    family: &'a ChannelFamily,
    bsc: bool,
}

impl Gallager<'_> {
    fn e(&self, i: usize, j: usize, s: f64, rho: f64) -> f64 {
        if self.bsc {
            e_gallager_bsc(self.family.thetas[i], self.family.thetas[j], s, rho)
        } else {
            let ch = &self.family.channels;
            e_gallager(&ch[i], &ch[j], s, rho, &self.family.px).unwrap_or(f64::NAN)
        }
    }
}

/// Family indices `(θ, θ″)`.
type Pair = (usize, usize);

/// A pair's maximum `(value, s, ρ)`, or `None` when the pair is skipped.
type PairMax = (Pair, Option<(f64, f64, f64)>);

fn active_pairs(table: &ExponentTable) -> Vec<(usize, usize)> {
    let a = &table.active;
    a.iter()
        .flat_map(|&i| a.iter().map(move |&j| (i, j)))
        .collect()
}

/// Minimum over pairs of a per-pair maximum; `None` entries are skipped pairs.
fn min_over_pairs(results: Vec<PairMax>) -> Result<(SaddleDiagnostics, f64)> {
    let mut skipped = Vec::new();
    let mut best: Option<(Pair, (f64, f64, f64))> = None;
    for (pair, r) in results {
        match r {
            None => skipped.push(pair),
            Some(v) => {
                if best.map_or(true, |b| v.0 < b.1 .0 - 1e-12) {
                    best = Some((pair, v));
                }
            }
        }
    }
    let ((i, j), (v, s, rho)) =
        best.ok_or_else(|| Error::Family("every pair has a zero denominator".into()))?;
    Ok((
        SaddleDiagnostics {
            theta_star: i,
            theta_dprime_star: j,
            s_star: s,
            rho_star: rho,
            constrained_value: v,
            relaxed: None,
            skipped_pairs: skipped,
        },
        v,
    ))
}

/// `ξ_L(R, T)`: for every pair the ratio is maximized over the triangle `0 ≤ s ≤ ρ ≤ 1`,
/// then minimized over pairs of active members. Pairs whose denominator vanishes on the
/// whole triangle are skipped and listed.
pub fn xi_lower(
    family: &ChannelFamily,
    table: &ExponentTable,
    grid: GridSpec,
) -> Result<(f64, SaddleDiagnostics)> {
    if table.e1.len() != family.len() {
        return Err(Error::Family(
            "exponent table does not match the family".into(),
        ));
    }
    let (r, t, e1) = (table.r, table.t, &table.e1);
    let g = Gallager {
        family,
        bsc: family.is_uniform_bsc(),
    };
    let results: Vec<_> = active_pairs(table)
        .into_par_iter()
        .map(|(i, j)| {
            let mut ratio = |s: f64, rho: f64| {
                let den = (1.0 - s) * e1[i] + s * e1[j];
                if !(den > 1e-12) {
                    return f64::NAN;
                }
                (g.e(i, j, s, rho) - rho * r - s * t) / den
            };
            ((i, j), grid_max(&mut ratio, 1.0, true, grid, &[]))
        })
        .collect();
    let (diag, v) = min_over_pairs(results)?;
    Ok((v, diag))
}

/// Saddle values at `ξ`: the constrained problem `min_pairs max_{s ≤ ρ} [E − ρR − sT − ξ(…)]`
/// and the relaxed one with `s ∈ [0, RELAXED_S_MAX]` unrestricted by `ρ` and a free `θ′`.
pub fn gap_diagnostics(
    family: &ChannelFamily,
    table: &ExponentTable,
    xi: f64,
) -> Result<SaddleDiagnostics> {
    let mut diag = constrained_at(family, table, xi, GridSpec { n: 201, tol: 1e-9 })?;
    diag.relaxed = Some(relaxed_at(
        family,
        table,
        xi,
        GridSpec { n: 41, tol: 1e-9 },
    )?);
    Ok(diag)
}

fn constrained_at(
    family: &ChannelFamily,
    table: &ExponentTable,
    xi: f64,
    grid: GridSpec,
) -> Result<SaddleDiagnostics> {
    let g = Gallager {
        family,
        bsc: family.is_uniform_bsc(),
    };
    let results: Vec<_> = active_pairs(table)
        .into_par_iter()
        .map(|(i, j)| ((i, j), constrained_pair(&g, table, xi, i, j, grid)))
        .collect();
    Ok(min_over_pairs(results)?.0)
}

/// `max_{s ≤ ρ} [E(θ, θ″, s, ρ) − ρR − sT − ξ((1 − s)E₁(θ) + sE₁(θ″))]` for one pair.
fn constrained_pair(
    g: &Gallager,
    table: &ExponentTable,
    xi: f64,
    i: usize,
    j: usize,
    grid: GridSpec,
) -> Option<(f64, f64, f64)> {
    let (r, t, e1) = (table.r, table.t, &table.e1);
    let mut f = |s: f64, rho: f64| {
        g.e(i, j, s, rho) - rho * r - s * t - xi * ((1.0 - s) * e1[i] + s * e1[j])
    };
    grid_max(&mut f, 1.0, true, grid, &[])
}

/// `min_{Q,Q̃} Ψ` over joints with a common output marginal, for fixed `(θ, θ′, θ″, s, ρ)`.
fn relaxed_inner(family: &ChannelFamily, i: usize, k: usize, j: usize, s: f64, rho: f64) -> f64 {
    if family.is_uniform_bsc() {
        let (th, tp, td) = (family.thetas[i], family.thetas[k], family.thetas[j]);
        let first = -(th * (-s * tp.ln()).exp() + (1.0 - th) * (-s * (1.0 - tp).ln()).exp()).ln();
        let second = if s > 0.0 {
            rho * (LN2 - log_z(td, s / rho))
        } else {
            rho * (LN2 - log_z(td, 0.0))
        };
        return first + second;
    }
    let ch = &family.channels;
    let (li, lk, lj) = (
        floored_log(&ch[i]),
        floored_log(&ch[k]),
        floored_log(&ch[j]),
    );
    let a: Vec<f64> = li.iter().zip(&lk).map(|(x, y)| x - s * y).collect();
    let b = scaled(&lj, if s > 0.0 { s / rho } else { 0.0 });
    let px = &family.px;
    let mut f = |qy: &[f64]| {
        let sl = Slice::new(px, qy);
        (sl.hp - sl.psi(&a).value) + rho * (sl.hp + sl.hq) - rho * sl.psi(&b).value
    };
    minimize_over_qy(family.ny(), &mut f).1
}

fn relaxed_at(
    family: &ChannelFamily,
    table: &ExponentTable,
    xi: f64,
    grid: GridSpec,
) -> Result<RelaxedSaddle> {
    let (r, t, e1) = (table.r, table.t, &table.e1);
    let active = &table.active;
    let g = Gallager {
        family,
        bsc: family.is_uniform_bsc(),
    };
    let per_pair: Vec<_> = active_pairs(table)
        .into_par_iter()
        .map(|(i, j)| {
            // With θ′ = θ and s ≤ ρ the relaxed objective is the constrained one, so its
            // maximizer is a starting point that keeps relaxed ≥ constrained.
            let warm: Vec<(f64, f64)> = constrained_pair(&g, table, xi, i, j, grid)
                .map(|(_, s, rho)| (s, rho))
                .into_iter()
                .collect();
            let mut best: Option<(f64, usize, f64, f64)> = None;
            for &k in active {
                let mut f = |s: f64, rho: f64| {
                    let rho = if s > 0.0 { rho.max(RHO_FLOOR) } else { rho };
                    relaxed_inner(family, i, k, j, s, rho) - rho * r
                        + s * (xi * e1[k] - xi * e1[j] - t)
                        - xi * e1[i]
                };
                if let Some((v, s, rho)) = grid_max(
                    &mut f,
                    RELAXED_S_MAX,
                    false,
                    grid,
                    if k == i { &warm } else { &[] },
                ) {
                    if best.map_or(true, |b| v > b.0) {
                        best = Some((v, k, s, rho));
                    }
                }
            }
            ((i, j), best)
        })
        .collect();
    let ((i, j), (v, k, s, rho)) = per_pair
        .into_iter()
        .filter_map(|(p, b)| b.map(|b| (p, b)))
        .reduce(|a, b| if b.1 .0 < a.1 .0 - 1e-12 { b } else { a })
        .ok_or_else(|| Error::Family("no active pairs".into()))?;
    Ok(RelaxedSaddle {
        theta_star: i,
        theta_prime_star: k,
        theta_dprime_star: j,
        s,
        rho,
        value: v,
        constraint_active: s > rho + 1e-9,
    })
}

/// Largest `ξ` at which each saddle value is still nonnegative, by bisection (both values
/// are nonincreasing in `ξ`): `(constrained, relaxed)`. The constrained threshold is the
/// condition form of `ξ_L`.
pub fn gap_thresholds(family: &ChannelFamily, table: &ExponentTable) -> Result<(f64, f64)> {
    let coarse = GridSpec { n: 101, tol: 1e-9 };
    let relaxed_grid = GridSpec { n: 41, tol: 1e-9 };
    let mut c = |xi: f64| constrained_at(family, table, xi, coarse).map(|d| d.constrained_value);
    let mut rl = |xi: f64| relaxed_at(family, table, xi, relaxed_grid).map(|d| d.value);
    Ok((bisect_root(&mut c)?, bisect_root(&mut rl)?))
}

fn bisect_root(f: &mut impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    if f(1.0)? >= 0.0 {
        return Ok(1.0);
    }
    if f(0.0)? < 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > 1e-6 {
        let m = 0.5 * (lo + hi);
        if f(m)? >= 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_term_at_zero_lambda_is_zero() {
        let w = Dmc::new(2, 2, vec![0.7, 0.3, 0.2, 0.8]).unwrap();
        assert!(f_term(&[0.4, 0.6], 0.0, &w, &[0.3, 0.7]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gallager_closed_form_matches_general() {
        let (a, b) = (Dmc::bsc(0.18).unwrap(), Dmc::bsc(0.22).unwrap());
        for &(s, rho) in &[(0.185, 0.36), (1.0, 1.0), (0.0, 0.0), (0.05, 0.9)] {
            let g = e_gallager(&a, &b, s, rho, &[0.5, 0.5]).unwrap();
            let c = e_gallager_bsc(0.18, 0.22, s, rho);
            assert!((g - c).abs() < 1e-9, "{s} {rho}: {g} vs {c}");
        }
    }

    #[test]
    fn grid_max_on_concave_triangle() {
        let mut f = |s: f64, r: f64| -(s - 0.3).powi(2) - (r - 0.2).powi(2);
        let (_, s, r) = grid_max(&mut f, 1.0, true, GridSpec { n: 41, tol: 1e-9 }, &[]).unwrap();
        assert!(
            (s - 0.25).abs() < 1e-3 && (r - 0.25).abs() < 1e-3,
            "{s} {r}"
        );
    }

    #[test]
    fn psi_vanishes_at_origin() {
        let fam = ChannelFamily::bsc_grid(&[0.1, 0.2], vec![0.5, 0.5]).unwrap();
        let table = ExponentTable::new(0.1, 0.1, vec![0.05, 0.02]);
        let qt = JointDist::product(&fam.px, &fam.channels[0]).unwrap();
        let at = PsiPoint {
            theta: 0,
            theta_prime: 1,
            theta_dprime: 1,
            rho: 0.0,
            s: 0.0,
            xi: 0.0,
        };
        assert!(psi(&fam, &table, &at, &qt, &qt).unwrap().abs() < 1e-15);
    }
}
