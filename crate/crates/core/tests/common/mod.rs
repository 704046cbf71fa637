//! Independent reference computations for the integration and acceptance
//! tests. Nothing here calls into the library's optimisers.

#![allow(dead_code)]

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Rows = Vec<Vec<f64>>;

pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b == 0.0 {
                return f64::INFINITY;
            }
            acc += a * (a / b).ln();
        }
    }
    acc
}

pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
}

pub fn push(p: &[f64], k: &Rows) -> Vec<f64> {
    let mut out = vec![0.0; k[0].len()];
    for (pi, row) in p.iter().zip(k) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += pi * v;
        }
    }
    out
}

/// Row-stochastic matrix with flat-Dirichlet rows.
pub fn random_kernel(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Rows {
    (0..rows).map(|_| random_simplex(rng, cols)).collect()
}

pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    let mut v: Vec<f64> = e.iter().map(|x| x / s).collect();
    // exact unit mass
    let head: f64 = v[..n - 1].iter().sum();
    v[n - 1] = 1.0 - head;
    v
}

pub fn compose(a: &Rows, b: &Rows) -> Rows {
    a.iter().map(|row| push(row, b)).collect()
}

/// The four channels of the inner problem as plain matrices.
#[derive(Clone, Debug)]
pub struct Quad {
    pub py: Rows,
    pub pz: Rows,
    pub qy: Rows,
    pub qz: Rows,
}

impl Quad {
    pub fn objective(&self, p_x: &[f64], qhat: &[f64]) -> f64 {
        kl(&push(p_x, &self.py), &push(qhat, &self.qy)) - kl(&push(p_x, &self.pz), &push(qhat, &self.qz))
    }
}

/// All points of the simplex on `support` with coordinates in multiples of `1/m`.
fn lattice(n: usize, support: &[usize], m: usize, mut visit: impl FnMut(&[f64])) {
    fn rec(support: &[usize], i: usize, left: usize, m: usize, q: &mut [f64], visit: &mut dyn FnMut(&[f64])) {
        if i + 1 == support.len() {
            q[support[i]] = left as f64 / m as f64;
            visit(q);
            return;
        }
        for k in 0..=left {
            q[support[i]] = k as f64 / m as f64;
            rec(support, i + 1, left - k, m, q, visit);
        }
    }
    let mut q = vec![0.0; n];
    rec(support, 0, m, m, &mut q, &mut visit);
}

fn golden(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..80 {
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    if fa > fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

/// `max_{Q̂ ≪ Q_X} objective` by an exhaustive lattice with `1/m` spacing,
/// refined by golden-section searches along every edge direction inside the
/// best lattice cell.
pub fn f_oracle(quad: &Quad, p_x: &[f64], q_x: &[f64], m: usize) -> f64 {
    let n = p_x.len();
    let support: Vec<usize> = (0..n).filter(|&i| q_x[i] > 0.0).collect();
    let mut best = f64::NEG_INFINITY;
    let mut arg = vec![0.0; n];
    lattice(n, &support, m, |q| {
        let v = quad.objective(p_x, q);
        if v > best {
            best = v;
            arg.copy_from_slice(q);
        }
    });
    let h = 1.0 / m as f64;
    for _sweep in 0..4 {
        for &i in &support {
            for &j in &support {
                if i == j {
                    continue;
                }
                // move mass from j to i by t in [-h, h], staying in the simplex
                let lo = (-h).max(-arg[i]);
                let hi = h.min(arg[j]);
                if hi <= lo {
                    continue;
                }
                let base = arg.clone();
                let (t, v) = golden(lo, hi, |t| {
                    let mut q = base.clone();
                    q[i] += t;
                    q[j] -= t;
                    quad.objective(p_x, &q)
                });
                if v > best {
                    best = v;
                    arg[i] += t;
                    arg[j] -= t;
                }
            }
        }
    }
    best
}

/// `max Σ λ_i value_i` over weights on `points`, subject to
/// `Σ λ_i point_i = mean` and `Σ λ_i row_k[i] >= floor_k` for each `(row_k, floor_k)`.
pub fn envelope_lp(points: &[Vec<f64>], values: &[f64], mean: &[f64], floors: &[(Vec<f64>, f64)]) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = values.iter().map(|&v| lp.add_var(v, (0.0, f64::INFINITY))).collect();
    lp.add_constraint(vars.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    for x in 0..mean.len() - 1 {
        let terms: Vec<_> = vars.iter().zip(points).map(|(&v, p)| (v, p[x])).collect();
        lp.add_constraint(terms, ComparisonOp::Eq, mean[x]);
    }
    for (row, floor) in floors {
        let terms: Vec<_> = vars.iter().zip(row).map(|(&v, &c)| (v, c)).collect();
        lp.add_constraint(terms, ComparisonOp::Ge, *floor);
    }
    lp.solve().expect("lp solves").into_solution().expect("lp solution").objective()
}

/// Binary posteriors `(t, 1 - t)` on an even grid, always containing `p0`.
pub fn binary_posteriors(n: usize, p0: f64) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = (0..=n).map(|i| i as f64 / n as f64).map(|t| vec![t, 1.0 - t]).collect();
    pts.push(vec![p0, 1.0 - p0]);
    pts
}

/// `H(X|V)` when `X ~ post` and `V` is drawn from `k`.
pub fn h_x_given_v(post: &[f64], k: &Rows) -> f64 {
    let joint: Vec<f64> = post
        .iter()
        .zip(k)
        .flat_map(|(&p, row)| row.iter().map(move |&v| p * v))
        .collect();
    entropy(&joint) - entropy(&push(post, k))
}

/// Product of a law and a kernel, flattened row-major.
pub fn joint(p: &[f64], k: &Rows) -> Vec<f64> {
    p.iter().zip(k).flat_map(|(&a, row)| row.iter().map(move |&v| a * v)).collect()
}

pub fn flatten(rows: &Rows) -> Vec<f64> {
    rows.iter().flatten().copied().collect()
}

/// A binary scenario with a receiver satisfying `P_XZ = Q_XZ` and
/// `Q_{YZ|X} = Q_{Z|X} Q_{Y|Z}`. Receiver rows are indexed by `x * |Y| + y`.
#[derive(Clone, Debug)]
pub struct AuxInR {
    pub p_xy: Rows,
    pub q_xy: Rows,
    pub p_z_given_xy: Rows,
    pub q_z_given_xy: Rows,
}

pub fn random_aux_in_r(rng: &mut ChaCha8Rng, nx: usize, ny: usize, nz: usize) -> AuxInR {
    let p_x = random_simplex(rng, nx);
    let q_z_x = random_kernel(rng, nx, nz);
    let q_y_z = random_kernel(rng, nz, ny);
    // P(y | x, z), rows x * |Z| + z
    let k = random_kernel(rng, nx * nz, ny);
    let mut p_xy = vec![vec![0.0; ny]; nx];
    let mut q_xy = vec![vec![0.0; ny]; nx];
    let mut p_zxy = vec![vec![0.0; nz]; nx * ny];
    let mut q_zxy = vec![vec![0.0; nz]; nx * ny];
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                let pj = p_x[x] * q_z_x[x][z] * k[x * nz + z][y];
                let qj = p_x[x] * q_z_x[x][z] * q_y_z[z][y];
                p_xy[x][y] += pj;
                q_xy[x][y] += qj;
                p_zxy[x * ny + y][z] = pj;
                q_zxy[x * ny + y][z] = qj;
            }
        }
    }
    for (rows, xy) in [(&mut p_zxy, &p_xy), (&mut q_zxy, &q_xy)] {
        for x in 0..nx {
            for y in 0..ny {
                let row = &mut rows[x * ny + y];
                let m: f64 = row.iter().sum();
                for v in row.iter_mut() {
                    *v /= m;
                }
                let head: f64 = row[..nz - 1].iter().sum();
                row[nz - 1] = 1.0 - head;
                debug_assert!((m - xy[x][y]).abs() < 1e-12);
            }
        }
    }
    AuxInR {
        p_xy,
        q_xy,
        p_z_given_xy: p_zxy,
        q_z_given_xy: q_zxy,
    }
}

/// Conditional kernels `P_{Y|X}` from a joint given as rows.
pub fn conditional_rows(xy: &Rows) -> (Vec<f64>, Rows) {
    let p_x: Vec<f64> = xy.iter().map(|r| r.iter().sum()).collect();
    let k = xy.iter().zip(&p_x).map(|(r, m)| r.iter().map(|v| v / m).collect()).collect();
    (p_x, k)
}
