//! Brute-force oracles for binary-input, binary-output channels, written independently of
//! the library solvers. A joint distribution with marginals `P_X` and `(1 − q, q)` has one
//! free entry `c = Q(0, 1)`, so every problem reduces to scalar searches and grids.

#![allow(dead_code)]

use erasure_core::Dmc;
use rand::Rng;

pub struct Bin {
    pub p0: f64,
    pub p1: f64,
    pub lw: [[f64; 2]; 2],
}

fn xlogy(a: f64, b: f64) -> f64 {
    if a <= 0.0 {
        0.0
    } else {
        a * (a / b).ln()
    }
}

impl Bin {
    pub fn new(p0: f64, w: &Dmc) -> Self {
        let lw = [
            [w.at(0, 0).ln(), w.at(0, 1).ln()],
            [w.at(1, 0).ln(), w.at(1, 1).ln()],
        ];
        Self {
            p0,
            p1: 1.0 - p0,
            lw,
        }
    }

    /// Entries `[Q00, Q01, Q10, Q11]`.
    pub fn joint(&self, q: f64, c: f64) -> [f64; 4] {
        [self.p0 - c, c, self.p1 - q + c, q - c]
    }

    pub fn range(&self, q: f64) -> (f64, f64) {
        ((q - self.p1).max(0.0), self.p0.min(q))
    }

    pub fn info(&self, q: f64, c: f64) -> f64 {
        let j = self.joint(q, c);
        let (p, qy) = ([self.p0, self.p1], [1.0 - q, q]);
        let mut s = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                s += xlogy(j[2 * x + y], p[x] * qy[y]);
            }
        }
        s.max(0.0)
    }

    pub fn lin(&self, q: f64, c: f64) -> f64 {
        let j = self.joint(q, c);
        let mut s = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                if j[2 * x + y] > 0.0 {
                    s += j[2 * x + y] * self.lw[x][y];
                }
            }
        }
        s
    }

    pub fn div(&self, q: f64, c: f64) -> f64 {
        let j = self.joint(q, c);
        let p = [self.p0, self.p1];
        let mut s = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                s += xlogy(j[2 * x + y], p[x] * self.lw[x][y].exp());
            }
        }
        s
    }

    /// Roots of `I(c) = r` left and right of the product point, if `I` reaches `r` there.
    fn info_roots(&self, q: f64, r: f64) -> (Option<f64>, Option<f64>) {
        let (lo, hi) = self.range(q);
        let c0 = self.p0 * q;
        let root = |a: f64, b: f64| {
            // I(a) ≥ r > I(b) or the reverse; bisect.
            let (mut a, mut b) = (a, b);
            let fa = self.info(q, a) - r;
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if (self.info(q, m) - r).signum() == fa.signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
        let left = (self.info(q, lo) >= r).then(|| root(lo, c0));
        let right = (self.info(q, hi) >= r).then(|| root(hi, c0));
        (left, right)
    }

    /// `min {I(c) : I(c) ≥ r, L(c) ≥ lt}`, or `None` when infeasible.
    pub fn min_info_above(&self, q: f64, r: f64, lt: f64) -> Option<f64> {
        let (lo, hi) = self.range(q);
        let c0 = self.p0 * q;
        let l0 = self.lin(q, lo);
        let kappa = self.lw[0][1] - self.lw[0][0] - self.lw[1][1] + self.lw[1][0];
        // Half-line {c : L(c) ≥ lt} within [lo, hi].
        let (hl, hh) = if kappa.abs() < 1e-15 {
            if l0 >= lt {
                (lo, hi)
            } else {
                return None;
            }
        } else {
            let cstar = lo + (lt - l0) / kappa;
            if kappa > 0.0 {
                (cstar.max(lo), hi)
            } else {
                (lo, cstar.min(hi))
            }
        };
        let mut pieces = Vec::new();
        if r <= 0.0 {
            pieces.push((lo, hi));
        } else {
            let (left, right) = self.info_roots(q, r);
            if let Some(cl) = left {
                pieces.push((lo, cl));
            }
            if let Some(cr) = right {
                pieces.push((cr, hi));
            }
        }
        pieces
            .into_iter()
            .filter_map(|(a, b)| {
                let (a, b) = (a.max(hl), b.min(hh));
                (a <= b).then(|| self.info(q, c0.clamp(a, b)))
            })
            .reduce(f64::min)
    }

    /// `max {L(c) − I(c) : I(c) ≤ r}`.
    pub fn max_gain_below(&self, q: f64, r: f64) -> f64 {
        let (lo, hi) = self.range(q);
        let (left, right) = self.info_roots(q, r);
        let a = left.unwrap_or(lo);
        let b = right.unwrap_or(hi);
        let f = |c: f64| self.lin(q, c) - self.info(q, c);
        ternary_max(f, a, b)
    }

    /// `min_c I(c) − λ L(c)`.
    pub fn f_term(&self, q: f64, lam: f64) -> f64 {
        let (lo, hi) = self.range(q);
        -ternary_max(|c| lam * self.lin(q, c) - self.info(q, c), lo, hi)
    }
}

pub fn ternary_max(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mut a, mut b) = (a, b);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) < f(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    f(0.5 * (a + b)).max(f(a)).max(f(b))
}

/// Minimum of `g(q, u)` over `(0, 1)²` by a grid and three rounds of local refinement.
/// `u` parameterizes `c` linearly over its admissible range.
pub fn grid_min(g: impl Fn(f64, f64) -> f64, n: usize) -> f64 {
    let eps = 1e-9;
    let at = |i: usize, n: usize| eps + (1.0 - 2.0 * eps) * i as f64 / (n - 1) as f64;
    let mut best = (f64::INFINITY, 0.5, 0.5);
    for i in 0..n {
        for j in 0..n {
            let (q, u) = (at(i, n), at(j, n));
            let v = g(q, u);
            if v < best.0 {
                best = (v, q, u);
            }
        }
    }
    if !best.0.is_finite() {
        return best.0;
    }
    let mut h = 1.0 / (n - 1) as f64;
    for _ in 0..3 {
        let (_, q0, u0) = best;
        let m = 41;
        for i in 0..m {
            for j in 0..m {
                let q = (q0 - 2.0 * h + 4.0 * h * i as f64 / (m - 1) as f64).clamp(eps, 1.0 - eps);
                let u = (u0 - 2.0 * h + 4.0 * h * j as f64 / (m - 1) as f64).clamp(0.0, 1.0);
                let v = g(q, u);
                if v < best.0 {
                    best = (v, q, u);
                }
            }
        }
        h /= 10.0;
    }
    best.0
}

pub fn c_of(b: &Bin, q: f64, u: f64) -> f64 {
    let (lo, hi) = b.range(q);
    lo + u * (hi - lo)
}

pub fn e_a_oracle(b: &Bin, r: f64, t: f64) -> f64 {
    grid_min(
        |q, u| {
            let ct = c_of(b, q, u);
            let lt = b.lin(q, ct) - t;
            match b.min_info_above(q, r, lt) {
                Some(i) => b.div(q, ct) + i - r,
                None => f64::INFINITY,
            }
        },
        301,
    )
}

pub fn e_b_oracle(b: &Bin, r: f64, t: f64) -> f64 {
    grid_min(
        |q, u| {
            let ct = c_of(b, q, u);
            if b.lin(q, ct) <= r + t + b.max_gain_below(q, r) {
                b.div(q, ct)
            } else {
                f64::INFINITY
            }
        },
        301,
    )
}

pub fn binary_entropy(q: f64) -> f64 {
    -xlogy(q, 1.0) - xlogy(1.0 - q, 1.0)
}

/// `min_q [F(q, 1−s, W) + ρF(q, s/ρ, W″) − h(q)]`.
pub fn e_gallager_oracle(b: &Bin, b2: &Bin, s: f64, rho: f64) -> f64 {
    let g = |q: f64| {
        let second = if rho > 0.0 {
            rho * b2.f_term(q, s / rho)
        } else {
            0.0
        };
        b.f_term(q, 1.0 - s) + second - binary_entropy(q)
    };
    let n = 2001;
    let mut best = (f64::INFINITY, 0.5);
    for i in 0..n {
        let q = 1e-9 + (1.0 - 2e-9) * i as f64 / (n - 1) as f64;
        let v = g(q);
        if v < best.0 {
            best = (v, q);
        }
    }
    let h = 1.0 / (n - 1) as f64;
    for i in 0..=200 {
        let q = (best.1 - h + 2.0 * h * i as f64 / 200.0).clamp(1e-9, 1.0 - 1e-9);
        best.0 = best.0.min(g(q));
    }
    best.0
}

/// A random 2×2 channel with entries bounded away from zero.
pub fn random_channel(rng: &mut impl Rng) -> Dmc {
    let a: f64 = rng.random_range(0.05..0.95);
    let b: f64 = rng.random_range(0.05..0.95);
    Dmc::new(2, 2, vec![1.0 - a, a, 1.0 - b, b]).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a.is_infinite() && b.is_infinite()) || (a - b).abs() <= tol
}
