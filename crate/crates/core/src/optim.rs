//! Small derivative-free and Newton-type optimizers used by the exponent solvers.

use nalgebra::{DMatrix, DVector};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimization on `[a, b]`, stopping at interval width `tol`.
pub fn golden_min(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Uniform grid of `n` points on `[a, b]`, then golden refinement around the
/// `keep` best local minima of the grid. Returns the overall best point.
pub fn grid_golden_min(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    n: usize,
    keep: usize,
    tol: f64,
) -> (f64, f64) {
    let n = n.max(3);
    let xs: Vec<f64> = (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut locals: Vec<usize> = (0..n)
        .filter(|&i| {
            let l = if i == 0 { f64::INFINITY } else { fs[i - 1] };
            let r = if i + 1 == n { f64::INFINITY } else { fs[i + 1] };
            fs[i] <= l && fs[i] <= r && fs[i].is_finite()
        })
        .collect();
    locals.sort_by(|&i, &j| fs[i].total_cmp(&fs[j]));
    let mut best = (0..n)
        .min_by(|&i, &j| fs[i].total_cmp(&fs[j]))
        .map(|i| (xs[i], fs[i]))
        .unwrap();
    for &i in locals.iter().take(keep) {
        let lo = xs[i.saturating_sub(1)];
        let hi = xs[(i + 1).min(n - 1)];
        let cand = golden_min(f, lo, hi, tol);
        if cand.1 < best.1 {
            best = cand;
        }
    }
    best
}

/// All points of the probability simplex in `dim` coordinates with denominator `m`.
pub fn simplex_grid(dim: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == dim {
            cur.push(left);
            out.push(cur.iter().map(|&k| k as f64 / m as f64).collect());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(dim, left - k, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, m, m, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// Minimize over the probability simplex: grid with denominator `m`, then a
/// compass search that moves mass between pairs of coordinates with a shrinking step.
pub fn simplex_min(
    f: &mut impl FnMut(&[f64]) -> f64,
    dim: usize,
    m: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let grid = simplex_grid(dim, m);
    let mut best = grid[0].clone();
    let mut fbest = f64::INFINITY;
    for p in &grid {
        let v = f(p);
        if v < fbest {
            fbest = v;
            best = p.clone();
        }
    }
    let mut step = 1.0 / m as f64;
    let mut trial = best.clone();
    while step > tol {
        let mut improved = false;
        for i in 0..dim {
            for j in 0..dim {
                if i == j || best[j] <= 0.0 {
                    continue;
                }
                let delta = step.min(best[j]);
                trial.copy_from_slice(&best);
                trial[i] += delta;
                trial[j] -= delta;
                let v = f(&trial);
                if v < fbest {
                    fbest = v;
                    best.copy_from_slice(&trial);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, fbest)
}

/// Value, gradient and Hessian of a smooth concave function.
pub struct Local {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
}

/// Outcome of [`maximize_orthant`].
#[derive(Debug, Clone)]
pub struct OrthantMax {
    pub x: Vec<f64>,
    pub value: f64,
    /// The iterates ran off to infinity: the dual is unbounded and the primal infeasible.
    pub unbounded: bool,
}

/// Projected Newton ascent for a smooth concave function on `x ≥ 0`.
///
/// `f` returns `None` when it cannot be evaluated (treated as a rejected step).
pub fn maximize_orthant(f: &mut impl FnMut(&[f64]) -> Option<Local>, x0: &[f64]) -> OrthantMax {
    const BIG: f64 = 1e7;
    let k = x0.len();
    let mut x: Vec<f64> = x0.iter().map(|v| v.max(0.0)).collect();
    let mut cur = match f(&x) {
        Some(l) => l,
        None => {
            return OrthantMax {
                x,
                value: f64::NAN,
                unbounded: false,
            }
        }
    };
    for _ in 0..300 {
        let free: Vec<usize> = (0..k)
            .filter(|&i| x[i] > 1e-14 || cur.grad[i] > 0.0)
            .collect();
        let pg = free.iter().map(|&i| cur.grad[i].abs()).fold(0.0, f64::max);
        if pg < 1e-12 {
            break;
        }
        // Newton direction on the free block, regularized for rank-deficient Hessians.
        let nf = free.len();
        let mut a = DMatrix::<f64>::zeros(nf, nf);
        let mut g = DVector::<f64>::zeros(nf);
        let mut scale = 0.0_f64;
        for (ii, &i) in free.iter().enumerate() {
            g[ii] = cur.grad[i];
            for (jj, &j) in free.iter().enumerate() {
                a[(ii, jj)] = -cur.hess[(i, j)];
            }
            scale = scale.max(a[(ii, ii)].abs());
        }
        let mut ridge = (1e-12 * scale).max(1e-12);
        let mut dir = None;
        for _ in 0..12 {
            let mut m = a.clone();
            for ii in 0..nf {
                m[(ii, ii)] += ridge;
            }
            if let Some(ch) = m.cholesky() {
                dir = Some(ch.solve(&g));
                break;
            }
            ridge = (ridge * 100.0).max(1e-10);
        }
        let mut d = vec![0.0; k];
        match dir {
            Some(v) => {
                for (ii, &i) in free.iter().enumerate() {
                    d[i] = v[ii];
                }
            }
            None => {
                for &i in &free {
                    d[i] = cur.grad[i];
                }
            }
        }
        // Projected backtracking.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let xn: Vec<f64> = (0..k).map(|i| (x[i] + t * d[i]).max(0.0)).collect();
            if let Some(ln) = f(&xn) {
                let lin: f64 = (0..k).map(|i| cur.grad[i] * (xn[i] - x[i])).sum();
                if ln.value.is_finite()
                    && ln.value >= cur.value + 1e-4 * lin - 1e-15 * cur.value.abs()
                {
                    let moved = (0..k).map(|i| (xn[i] - x[i]).abs()).fold(0.0, f64::max);
                    x = xn;
                    let gain = ln.value - cur.value;
                    cur = ln;
                    accepted = moved > 0.0 || gain > 0.0;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        if x.iter().any(|&v| v > BIG) || cur.value > 1e6 {
            return OrthantMax {
                x,
                value: f64::INFINITY,
                unbounded: true,
            };
        }
    }
    OrthantMax {
        x,
        value: cur.value,
        unbounded: false,
    }
}
