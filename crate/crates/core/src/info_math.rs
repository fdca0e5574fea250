//! Entropies, divergences and mutual information in nats.
//!
//! Zero-mass terms are skipped (0·log 0 = 0). Absolute-continuity failures give
//! `±∞` instead of an error so that callers can treat them as infeasible points.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};

pub const LN2: f64 = std::f64::consts::LN_2;

/// Tolerance used when validating that probabilities sum to one.
pub const SUM_TOL: f64 = 1e-12;

/// A joint distribution on an `nx × ny` alphabet, stored row-major (`p[x * ny + y]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDist {
    pub nx: usize,
    pub ny: usize,
    pub p: Vec<f64>,
}

/// A discrete memoryless channel. Row `x` of `w` is `W(·|x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dmc {
    pub nx: usize,
    pub ny: usize,
    pub w: Vec<f64>,
}

impl JointDist {
    pub fn new(nx: usize, ny: usize, p: Vec<f64>) -> Result<Self> {
        if p.len() != nx * ny || nx == 0 || ny == 0 {
            return Err(Error::Shape(format!(
                "{} entries for a {nx}x{ny} joint distribution",
                p.len()
            )));
        }
        if p.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Distribution("negative or NaN mass".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::Distribution(format!("mass sums to {total}")));
        }
        Ok(Self { nx, ny, p })
    }

    /// Builds without validation; used for solver output that is a coupling by construction.
    pub(crate) fn from_raw(nx: usize, ny: usize, p: Vec<f64>) -> Self {
        debug_assert_eq!(p.len(), nx * ny);
        Self { nx, ny, p }
    }

    /// The product measure `P_X × W`.
    pub fn product(px: &[f64], w: &Dmc) -> Result<Self> {
        if px.len() != w.nx {
            return Err(Error::Shape(format!(
                "input distribution of length {} for a channel with {} inputs",
                px.len(),
                w.nx
            )));
        }
        let mut p = Vec::with_capacity(w.nx * w.ny);
        for x in 0..w.nx {
            for y in 0..w.ny {
                p.push(px[x] * w.w[x * w.ny + y]);
            }
        }
        Self::new(w.nx, w.ny, p)
    }

    /// Symmetric 2×2 joint with uniform marginals and off-diagonal mass `q` in total.
    pub fn symmetric_binary(q: f64) -> Result<Self> {
        check_unit("q", q)?;
        Self::new(
            2,
            2,
            vec![(1.0 - q) / 2.0, q / 2.0, q / 2.0, (1.0 - q) / 2.0],
        )
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.ny + y]
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.nx)
            .map(|x| self.p[x * self.ny..(x + 1) * self.ny].iter().sum())
            .collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ny];
        for x in 0..self.nx {
            for (y, o) in out.iter_mut().enumerate() {
                *o += self.p[x * self.ny + y];
            }
        }
        out
    }
}

impl Dmc {
    pub fn new(nx: usize, ny: usize, w: Vec<f64>) -> Result<Self> {
        if w.len() != nx * ny || nx == 0 || ny == 0 {
            return Err(Error::Shape(format!(
                "{} entries for a {nx}x{ny} channel",
                w.len()
            )));
        }
        for x in 0..nx {
            let row = &w[x * ny..(x + 1) * ny];
            if row.iter().any(|&v| !(v >= 0.0)) {
                return Err(Error::Distribution(format!("row {x} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > SUM_TOL {
                return Err(Error::Distribution(format!("row {x} sums to {s}")));
            }
        }
        Ok(Self { nx, ny, w })
    }

    /// Binary symmetric channel with crossover `theta`.
    pub fn bsc(theta: f64) -> Result<Self> {
        check_unit("theta", theta)?;
        Self::new(2, 2, vec![1.0 - theta, theta, theta, 1.0 - theta])
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.w[x * self.ny + y]
    }

    /// Output distribution under input distribution `px`.
    pub fn output(&self, px: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ny];
        for (x, &p) in px.iter().enumerate() {
            for (y, o) in out.iter_mut().enumerate() {
                *o += p * self.at(x, y);
            }
        }
        out
    }

    /// Per-cell `log W(y|x)`; `-∞` where the transition is impossible.
    pub fn log_matrix(&self) -> Vec<f64> {
        self.w.iter().map(|&v| v.ln()).collect()
    }
}

/// Shannon entropy of a probability vector.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
}

/// `h(d) = -d log d - (1-d) log(1-d)`.
pub fn binary_entropy(d: f64) -> Result<f64> {
    check_unit("d", d)?;
    Ok(h(d))
}

/// Unchecked binary entropy for internal hot loops; arguments outside `[0,1]` give NaN.
#[inline]
pub(crate) fn h(d: f64) -> f64 {
    if d <= 0.0 || d >= 1.0 {
        if d == 0.0 || d == 1.0 {
            return 0.0;
        }
        return f64::NAN;
    }
    -d * d.ln() - (1.0 - d) * (1.0 - d).ln()
}

/// Binary divergence `D(q‖p)`.
pub fn binary_divergence(q: f64, p: f64) -> Result<f64> {
    check_unit("q", q)?;
    check_unit("p", p)?;
    Ok(dbin(q, p))
}

#[inline]
pub(crate) fn dbin(q: f64, p: f64) -> f64 {
    let mut d = 0.0;
    if q > 0.0 {
        if p <= 0.0 {
            return f64::INFINITY;
        }
        d += q * (q / p).ln();
    }
    if q < 1.0 {
        if p >= 1.0 {
            return f64::INFINITY;
        }
        d += (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln();
    }
    d.max(0.0)
}

fn check_channel_shape(q: &JointDist, w: &Dmc) -> Result<()> {
    if q.nx != w.nx || q.ny != w.ny {
        return Err(Error::Shape(format!(
            "joint {}x{} against channel {}x{}",
            q.nx, q.ny, w.nx, w.ny
        )));
    }
    Ok(())
}

/// `D(Q̃ ‖ P_X × W)`; `+∞` if `Q̃` charges a cell where `P_X × W` vanishes.
pub fn joint_divergence(qt: &JointDist, px: &[f64], w: &Dmc) -> Result<f64> {
    check_channel_shape(qt, w)?;
    if px.len() != qt.nx {
        return Err(Error::Shape("input distribution length".into()));
    }
    let mut d = 0.0;
    for x in 0..qt.nx {
        for y in 0..qt.ny {
            let q = qt.at(x, y);
            if q > 0.0 {
                let r = px[x] * w.at(x, y);
                if r <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                d += q * (q / r).ln();
            }
        }
    }
    Ok(d)
}

/// `I(Q)` in nats.
pub fn mutual_information(q: &JointDist) -> f64 {
    let px = q.marginal_x();
    let py = q.marginal_y();
    let mut i = 0.0;
    for x in 0..q.nx {
        for y in 0..q.ny {
            let v = q.at(x, y);
            if v > 0.0 {
                i += v * (v / (px[x] * py[y])).ln();
            }
        }
    }
    i.max(0.0)
}

/// `H_{Y|X}(Q)`.
pub fn cond_entropy_y_given_x(q: &JointDist) -> f64 {
    (entropy(&q.p) - entropy(&q.marginal_x())).max(0.0)
}

/// `H_{X|Y}(Q)`.
pub fn cond_entropy_x_given_y(q: &JointDist) -> f64 {
    (entropy(&q.p) - entropy(&q.marginal_y())).max(0.0)
}

/// `E_Q log W(Y|X)`; `-∞` if `Q` charges an impossible transition.
pub fn expected_log_w(q: &JointDist, w: &Dmc) -> Result<f64> {
    check_channel_shape(q, w)?;
    let mut e = 0.0;
    for (v, wv) in q.p.iter().zip(&w.w) {
        if *v > 0.0 {
            if *wv <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            e += v * wv.ln();
        }
    }
    Ok(e)
}

/// Gilbert–Varshamov distance: the root of `h(δ) = log 2 − r` in `[0, 1/2]`.
pub fn gv_distance(r: f64) -> Result<f64> {
    if !(0.0..=LN2).contains(&r) {
        return Err(Error::Domain {
            name: "r",
            value: r,
            expected: "[0, log 2]",
        });
    }
    // Bisect on x = 1 − 2δ with the entropy deficit log 2 − h((1−x)/2) written through
    // ln_1p, which stays accurate near δ = 1/2 where h itself is flat.
    let deficit = |x: f64| 0.5 * ((1.0 + x) * x.ln_1p() + (1.0 - x) * (-x).ln_1p());
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if r >= LN2 {
        return Ok(0.0);
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if deficit(mid) < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (1.0 - 0.5 * (lo + hi)))
}

/// `β(θ) = log((1−θ)/θ)`, the BSC log-likelihood slope.
pub fn beta(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain {
            name: "theta",
            value: theta,
            expected: "(0, 1)",
        });
    }
    Ok(((1.0 - theta) / theta).ln())
}
