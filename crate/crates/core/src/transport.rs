//! Couplings with prescribed marginals.
//!
//! For a fixed input distribution `P_X` and output distribution `Q_Y`, the set
//! `Π(P_X, Q_Y)` of joint distributions with those marginals is a transport
//! polytope. Every inner problem of the exponent solvers reduces to
//!
//! ```text
//! Ψ(S) = max_{Q ∈ Π} Σ Q(x,y) S(x,y) + H(Q)
//! ```
//!
//! for some score matrix `S`, plus Lagrange multipliers. `Ψ` is evaluated through
//! its semi-dual, a smooth convex problem in `|𝒴|−1` variables, with damped Newton.

use nalgebra::{DMatrix, DVector};

use crate::info_math::entropy;

/// Spanning trees of the complete bipartite graph on `nx + ny` nodes; each basic
/// solution of the transport problem is supported on one of them.
#[derive(Debug, Clone)]
pub(crate) struct Geometry {
    pub nx: usize,
    pub ny: usize,
    trees: Vec<Vec<usize>>,
}

impl Geometry {
    pub fn new(nx: usize, ny: usize) -> Self {
        let cells = nx * ny;
        let need = nx + ny - 1;
        let mut trees = Vec::new();
        let mut pick = Vec::with_capacity(need);
        fn find(parent: &mut [usize], mut a: usize) -> usize {
            while parent[a] != a {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            a
        }
        fn rec(
            start: usize,
            cells: usize,
            need: usize,
            nx: usize,
            ny: usize,
            pick: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if pick.len() == need {
                let mut parent: Vec<usize> = (0..nx + ny).collect();
                for &c in pick.iter() {
                    let (a, b) = (c / ny, nx + c % ny);
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra == rb {
                        return;
                    }
                    parent[ra] = rb;
                }
                out.push(pick.clone());
                return;
            }
            for c in start..cells {
                if cells - c < need - pick.len() {
                    break;
                }
                pick.push(c);
                rec(c + 1, cells, need, nx, ny, pick, out);
                pick.pop();
            }
        }
        rec(0, cells, need, nx, ny, &mut pick, &mut trees);
        Self { nx, ny, trees }
    }
}

/// Solution of the entropic problem for one score matrix.
#[derive(Debug, Clone)]
pub(crate) struct Coupling {
    /// `Ψ(S)`.
    pub value: f64,
    /// Optimal joint, row-major `nx × ny`.
    pub q: Vec<f64>,
    /// Conditional `π(y|x)` on the support, row-major `rows × cols`.
    pi: Vec<f64>,
}

/// The transport polytope `Π(P_X, Q_Y)` restricted to the supports of both marginals.
#[derive(Debug, Clone)]
pub(crate) struct Slice<'a> {
    pub px: &'a [f64],
    pub qy: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    pub hp: f64,
    pub hq: f64,
}

impl<'a> Slice<'a> {
    pub fn new(px: &'a [f64], qy: &[f64]) -> Self {
        let nx = px.len();
        let ny = qy.len();
        let rows = (0..nx).filter(|&x| px[x] > 0.0).collect();
        let cols = (0..ny).filter(|&y| qy[y] > 0.0).collect();
        Self {
            px,
            qy: qy.to_vec(),
            nx,
            ny,
            rows,
            cols,
            hp: entropy(px),
            hq: entropy(qy),
        }
    }

    /// The independent coupling `P_X × Q_Y`.
    #[cfg(test)]
    pub fn product(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.nx * self.ny];
        for x in 0..self.nx {
            for y in 0..self.ny {
                q[x * self.ny + y] = self.px[x] * self.qy[y];
            }
        }
        q
    }

    /// Mutual information of a coupling in this slice.
    pub fn mi(&self, q: &[f64]) -> f64 {
        let mut i = 0.0;
        for &x in &self.rows {
            for &y in &self.cols {
                let v = q[x * self.ny + y];
                if v > 0.0 {
                    i += v * (v / (self.px[x] * self.qy[y])).ln();
                }
            }
        }
        i.max(0.0)
    }

    pub fn lin(&self, q: &[f64], l: &[f64]) -> f64 {
        q.iter()
            .zip(l)
            .filter(|(v, _)| **v > 0.0)
            .map(|(v, s)| v * s)
            .sum()
    }

    /// Solve `Ψ(S)`.
    pub fn psi(&self, s: &[f64]) -> Coupling {
        let nr = self.rows.len();
        let nc = self.cols.len();
        let ny = self.ny;
        let mut q = vec![0.0; self.nx * ny];
        if nc == 1 {
            let y = self.cols[0];
            let mut v = self.hp;
            for &x in &self.rows {
                v += self.px[x] * s[x * ny + y];
                q[x * ny + y] = self.px[x];
            }
            return Coupling {
                value: v,
                q,
                pi: vec![1.0; nr],
            };
        }
        if nc == 2 {
            return self.psi_two(s);
        }
        let mut gamma: Vec<f64> = self
            .cols
            .iter()
            .map(|&y| -(self.qy[y] / self.qy[self.cols[0]]).ln())
            .collect();
        let mut pi = vec![0.0; nr * nc];
        let eval = |gamma: &[f64], pi: &mut [f64]| -> f64 {
            let mut j = 0.0;
            for (r, &x) in self.rows.iter().enumerate() {
                let mut m = f64::NEG_INFINITY;
                for (c, &y) in self.cols.iter().enumerate() {
                    m = m.max(s[x * ny + y] - gamma[c]);
                }
                let mut z = 0.0;
                for (c, &y) in self.cols.iter().enumerate() {
                    let e = (s[x * ny + y] - gamma[c] - m).exp();
                    pi[r * nc + c] = e;
                    z += e;
                }
                for c in 0..nc {
                    pi[r * nc + c] /= z;
                }
                j += self.px[x] * (m + z.ln());
            }
            for (c, &y) in self.cols.iter().enumerate() {
                j += self.qy[y] * gamma[c];
            }
            j
        };
        let mut jcur = eval(&gamma, &mut pi);
        let mut trial_pi = pi.clone();
        let nf = nc - 1;
        for _ in 0..200 {
            let mut grad = DVector::<f64>::zeros(nf);
            let mut hess = DMatrix::<f64>::zeros(nf, nf);
            for (r, &x) in self.rows.iter().enumerate() {
                let p = self.px[x];
                for a in 1..nc {
                    let pa = pi[r * nc + a];
                    grad[a - 1] -= p * pa;
                    hess[(a - 1, a - 1)] += p * pa;
                    for b in 1..nc {
                        hess[(a - 1, b - 1)] -= p * pa * pi[r * nc + b];
                    }
                }
            }
            for a in 1..nc {
                grad[a - 1] += self.qy[self.cols[a]];
            }
            if grad.amax() < 1e-15 {
                break;
            }
            let mut ridge = 0.0;
            let step = loop {
                let mut m = hess.clone();
                for a in 0..nf {
                    m[(a, a)] += ridge;
                }
                if let Some(ch) = m.cholesky() {
                    break ch.solve(&grad);
                }
                ridge = if ridge == 0.0 {
                    1e-300_f64.max(1e-14 * hess.amax())
                } else {
                    ridge * 100.0
                };
            };
            let mut t = 1.0;
            let mut moved = false;
            let slope: f64 = grad.dot(&step);
            for _ in 0..80 {
                let mut g2 = gamma.clone();
                for a in 1..nc {
                    g2[a] -= t * step[a - 1];
                }
                let j2 = eval(&g2, &mut trial_pi);
                if j2 <= jcur - 1e-4 * t * slope || (j2 <= jcur && t < 1e-6) {
                    moved = j2 < jcur || gamma != g2;
                    gamma = g2;
                    jcur = j2;
                    std::mem::swap(&mut pi, &mut trial_pi);
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        for (r, &x) in self.rows.iter().enumerate() {
            for (c, &y) in self.cols.iter().enumerate() {
                q[x * ny + y] = self.px[x] * pi[r * nc + c];
            }
        }
        Coupling {
            value: jcur + self.hp,
            q,
            pi,
        }
    }

    /// Two output symbols: the semi-dual is a monotone scalar equation in `γ`,
    /// `Σ_x P_x σ(d_x − γ) = q₁` with `d_x = S(x,1) − S(x,0)`, solved by bracketed Newton.
    fn psi_two(&self, s: &[f64]) -> Coupling {
        let ny = self.ny;
        let (y0, y1) = (self.cols[0], self.cols[1]);
        let q1 = self.qy[y1] / (self.qy[y0] + self.qy[y1]);
        let d: Vec<f64> = self
            .rows
            .iter()
            .map(|&x| s[x * ny + y1] - s[x * ny + y0])
            .collect();
        let logit = (q1 / (1.0 - q1)).ln();
        let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let dmax = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (mut lo, mut hi) = (dmin - logit, dmax - logit);
        let sig = |z: f64| {
            if z >= 0.0 {
                1.0 / (1.0 + (-z).exp())
            } else {
                let e = z.exp();
                e / (1.0 + e)
            }
        };
        // g(γ) = Σ P σ(d − γ) − q₁ is decreasing in γ
        let g = |gamma: f64| -> (f64, f64) {
            let mut v = -q1;
            let mut dv = 0.0;
            for (r, &x) in self.rows.iter().enumerate() {
                let p = sig(d[r] - gamma);
                v += self.px[x] * p;
                dv -= self.px[x] * p * (1.0 - p);
            }
            (v, dv)
        };
        let mut gamma = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (v, dv) = g(gamma);
            if v > 0.0 {
                lo = gamma;
            } else {
                hi = gamma;
            }
            if v.abs() < 1e-16 || hi - lo <= 4.0 * f64::EPSILON * gamma.abs().max(1.0) {
                break;
            }
            let newton = if dv < 0.0 { gamma - v / dv } else { f64::NAN };
            gamma = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        let nr = self.rows.len();
        let mut pi = vec![0.0; nr * 2];
        let mut q = vec![0.0; self.nx * ny];
        let mut value = self.hp + self.qy[y1] * gamma;
        for (r, &x) in self.rows.iter().enumerate() {
            let p1 = sig(d[r] - gamma);
            pi[r * 2] = 1.0 - p1;
            pi[r * 2 + 1] = p1;
            q[x * ny + y0] = self.px[x] * (1.0 - p1);
            q[x * ny + y1] = self.px[x] * p1;
            let (a, b) = (s[x * ny + y0], s[x * ny + y1] - gamma);
            let m = a.max(b);
            value += self.px[x] * (m + ((a - m).exp() + (b - m).exp()).ln());
        }
        Coupling { value, q, pi }
    }

    /// Quadratic forms `aᵀ ∇²Ψ b` at the coupling `c` for all pairs of directions.
    pub fn hess_forms(&self, c: &Coupling, dirs: &[&[f64]]) -> DMatrix<f64> {
        let k = dirs.len();
        let nr = self.rows.len();
        let nc = self.cols.len();
        let ny = self.ny;
        // centred directions a_xy − ā_x on the support
        let centred: Vec<Vec<f64>> = dirs
            .iter()
            .map(|a| {
                let mut v = vec![0.0; nr * nc];
                for (r, &x) in self.rows.iter().enumerate() {
                    let mut mean = 0.0;
                    for (cc, &y) in self.cols.iter().enumerate() {
                        mean += c.pi[r * nc + cc] * a[x * ny + y];
                    }
                    for (cc, &y) in self.cols.iter().enumerate() {
                        v[r * nc + cc] = a[x * ny + y] - mean;
                    }
                }
                v
            })
            .collect();
        let mut out = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let mut s = 0.0;
                for (r, &x) in self.rows.iter().enumerate() {
                    let p = self.px[x];
                    for cc in 0..nc {
                        s += p
                            * c.pi[r * nc + cc]
                            * centred[i][r * nc + cc]
                            * centred[j][r * nc + cc];
                    }
                }
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        if nc < 2 {
            return out;
        }
        let nf = nc - 1;
        let mut hg = DMatrix::<f64>::zeros(nf, nf);
        for (r, &x) in self.rows.iter().enumerate() {
            let p = self.px[x];
            for a in 1..nc {
                let pa = c.pi[r * nc + a];
                hg[(a - 1, a - 1)] += p * pa;
                for b in 1..nc {
                    hg[(a - 1, b - 1)] -= p * pa * c.pi[r * nc + b];
                }
            }
        }
        let u: Vec<DVector<f64>> = centred
            .iter()
            .map(|v| {
                let mut u = DVector::<f64>::zeros(nf);
                for (r, &x) in self.rows.iter().enumerate() {
                    let p = self.px[x];
                    for a in 1..nc {
                        u[a - 1] -= p * c.pi[r * nc + a] * v[r * nc + a];
                    }
                }
                u
            })
            .collect();
        let mut hr = hg.clone();
        let tr = hg.amax().max(1e-300);
        for a in 0..nf {
            hr[(a, a)] += 1e-15 * tr;
        }
        if let Some(ch) = hr.cholesky() {
            let sol: Vec<DVector<f64>> = u.iter().map(|v| ch.solve(v)).collect();
            for i in 0..k {
                for j in 0..k {
                    out[(i, j)] -= u[i].dot(&sol[j]);
                }
            }
        }
        // clip tiny negative curvature from cancellation
        for i in 0..k {
            if out[(i, i)] < 0.0 {
                out[(i, i)] = 0.0;
            }
        }
        out
    }

    /// Vertices of the polytope (basic feasible solutions), deduplicated.
    pub fn vertices(&self, geo: &Geometry) -> Vec<Vec<f64>> {
        debug_assert!(geo.nx == self.nx && geo.ny == self.ny);
        let (nx, ny) = (self.nx, self.ny);
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut deg = vec![0usize; nx + ny];
        let mut rem = vec![0.0; nx + ny];
        let mut used = Vec::new();
        'tree: for tree in &geo.trees {
            deg.iter_mut().for_each(|d| *d = 0);
            for &c in tree {
                deg[c / ny] += 1;
                deg[nx + c % ny] += 1;
            }
            rem[..nx].copy_from_slice(self.px);
            rem[nx..].copy_from_slice(&self.qy);
            used.clear();
            used.resize(tree.len(), false);
            let mut q = vec![0.0; nx * ny];
            for _ in 0..tree.len() {
                // find a leaf edge
                let mut found = None;
                for (e, &c) in tree.iter().enumerate() {
                    if used[e] {
                        continue;
                    }
                    let (a, b) = (c / ny, nx + c % ny);
                    if deg[a] == 1 {
                        found = Some((e, a, b));
                        break;
                    }
                    if deg[b] == 1 {
                        found = Some((e, b, a));
                        break;
                    }
                }
                let (e, leaf, other) = match found {
                    Some(v) => v,
                    None => continue 'tree,
                };
                let flow = rem[leaf];
                if flow < -1e-13 {
                    continue 'tree;
                }
                let flow = flow.max(0.0);
                q[tree[e]] = flow;
                rem[leaf] = 0.0;
                rem[other] -= flow;
                deg[leaf] -= 1;
                deg[other] -= 1;
                used[e] = true;
            }
            if rem.iter().any(|r| r.abs() > 1e-12) {
                continue;
            }
            if !out
                .iter()
                .any(|v| v.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-13))
            {
                out.push(q);
            }
        }
        out
    }
}
