//! The inner maximisation
//!
//! ```text
//! f(P_X) = max_{Q̂_X ≪ Q_X}  D(P_Y ‖ Q̂_Y) − D(P_Z ‖ Q̂_Z)
//! ```
//!
//! where `Q̂_Y`, `Q̂_Z` are `Q̂_X` pushed through the alternative-hypothesis
//! channels. The objective is a difference of two functions convex in `Q̂_X`,
//! so [`FSolver`] scans a simplex grid and then runs projected-gradient ascent
//! from the best few grid points. `Q̂_X` is kept at least `eta` away from the
//! boundary of the support of `Q_X`; a witness sitting on that margin raises
//! [`FResult::boundary_flag`], since the supremum may then be `+inf`.

use crate::prob::{kl_slices, push_forward, push_slice, JointTable, Kernel, SimplexVector};
use crate::{optim::OptimizerConfig, Error, ExtReal, Result};

/// The four channels `P_{Y|X}, P_{Z|X}, Q_{Y|X}, Q_{Z|X}` sharing input `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelQuad {
    pub p_y_given_x: Kernel,
    pub p_z_given_x: Kernel,
    pub q_y_given_x: Kernel,
    pub q_z_given_x: Kernel,
}

impl ChannelQuad {
    pub fn new(p_y_given_x: Kernel, p_z_given_x: Kernel, q_y_given_x: Kernel, q_z_given_x: Kernel) -> Result<Self> {
        let nx = p_y_given_x.rows();
        for (name, k) in [("P_Z|X", &p_z_given_x), ("Q_Y|X", &q_y_given_x), ("Q_Z|X", &q_z_given_x)] {
            if k.rows() != nx {
                return Err(Error::dim(format!("{name} input alphabet"), nx, k.rows()));
            }
        }
        if q_y_given_x.cols() != p_y_given_x.cols() {
            return Err(Error::dim("Y alphabet", p_y_given_x.cols(), q_y_given_x.cols()));
        }
        if q_z_given_x.cols() != p_z_given_x.cols() {
            return Err(Error::dim("Z alphabet", p_z_given_x.cols(), q_z_given_x.cols()));
        }
        Ok(ChannelQuad {
            p_y_given_x,
            p_z_given_x,
            q_y_given_x,
            q_z_given_x,
        })
    }

    pub fn input_len(&self) -> usize {
        self.p_y_given_x.rows()
    }
}

/// Outcome of the inner maximisation.
#[derive(Debug, Clone, PartialEq)]
pub struct FResult {
    pub value: ExtReal,
    pub witness_qhat: SimplexVector,
    /// The witness lies on the `eta` margin: the true supremum may be `+inf`.
    pub boundary_flag: bool,
    /// Coupling cap `D(P_YZ ‖ P_Z Q_{Y|Z})`, when a coupling was supplied.
    pub cap: Option<ExtReal>,
    /// Grid points skipped because both divergences were infinite.
    pub skipped_points: usize,
}

fn check_inputs(p_x: &SimplexVector, quad: &ChannelQuad, q_x: &SimplexVector) -> Result<()> {
    let nx = quad.input_len();
    if p_x.len() != nx {
        return Err(Error::dim("P_X", nx, p_x.len()));
    }
    if q_x.len() != nx {
        return Err(Error::dim("Q_X", nx, q_x.len()));
    }
    Ok(())
}

/// `D(P_Y‖Q̂_Y) − D(P_Z‖Q̂_Z)` at one reference law.
pub fn f_objective(
    qhat_x: &SimplexVector,
    p_x: &SimplexVector,
    quad: &ChannelQuad,
    q_x: &SimplexVector,
) -> Result<ExtReal> {
    check_inputs(p_x, quad, q_x)?;
    if qhat_x.len() != q_x.len() {
        return Err(Error::dim("Q̂_X", q_x.len(), qhat_x.len()));
    }
    if let Some(i) = (0..q_x.len()).find(|&i| q_x.get(i) == 0.0 && qhat_x.get(i) > 0.0) {
        return Err(Error::AbsoluteContinuity(format!(
            "Q̂_X puts mass on symbol {i} outside the support of Q_X"
        )));
    }
    let dy = kl_slices(
        push_forward(p_x, &quad.p_y_given_x)?.as_slice(),
        push_forward(qhat_x, &quad.q_y_given_x)?.as_slice(),
    );
    let dz = kl_slices(
        push_forward(p_x, &quad.p_z_given_x)?.as_slice(),
        push_forward(qhat_x, &quad.q_z_given_x)?.as_slice(),
    );
    dy.checked_sub(dz, "f objective")
}

/// `Σ p ln p − Σ p ln q`, with `ln q` precomputed; `+inf` on a support miss.
fn kl_from_logs(p: &[f64], neg_entropy: f64, ln_q: &[f64]) -> ExtReal {
    let mut cross = 0.0;
    for (&pi, &lq) in p.iter().zip(ln_q) {
        if pi > 0.0 {
            if lq == f64::NEG_INFINITY {
                return ExtReal::PosInf;
            }
            cross += pi * lq;
        }
    }
    ExtReal::Finite((neg_entropy - cross).max(0.0))
}

fn neg_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum()
}

/// Number of subdivisions per unit for a grid over `dim` free coordinates.
fn grid_resolution(dim: usize, step: Option<f64>) -> usize {
    if let Some(s) = step {
        return ((1.0 / s).round() as usize).max(1);
    }
    match dim {
        0..=3 => 100,
        4..=6 => 20,
        _ => {
            let mut m = 1;
            while binomial(m + 1 + dim - 1, dim - 1) <= 20_000.0 {
                m += 1;
            }
            m
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All `k` in `N^dim` with `Σk = m`, in lexicographic order.
fn compositions(dim: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == dim {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(dim, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, m, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// Euclidean projection of `v` onto `{x : x_i >= lo, Σ x = 1}`.
pub(crate) fn project_capped_simplex(v: &mut [f64], lo: f64) {
    let n = v.len();
    let mass = 1.0 - lo * n as f64;
    let mut u: Vec<f64> = v.iter().map(|x| x - lo).collect();
    let mut sorted = u.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - mass) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    for (x, ui) in v.iter_mut().zip(u.iter_mut()) {
        *x = (*ui - theta).max(0.0) + lo;
    }
}

struct GridPoint {
    qhat: Vec<f64>,
    ln_qy: Vec<f64>,
    ln_qz: Vec<f64>,
}

/// Reusable solver for `f` with fixed channels and fixed `Q_X`.
///
/// The grid's pushed-forward reference laws do not depend on `P_X`, so they
/// are computed once and every call to [`FSolver::solve`] only pays for dot
/// products plus the local ascents.
pub struct FSolver {
    quad: ChannelQuad,
    support: Vec<usize>,
    nx: usize,
    eta: f64,
    inner_starts: usize,
    step: f64,
    grid: Vec<GridPoint>,
}

impl FSolver {
    pub fn new(quad: &ChannelQuad, q_x: &SimplexVector, cfg: &OptimizerConfig) -> Result<Self> {
        let nx = quad.input_len();
        if q_x.len() != nx {
            return Err(Error::dim("Q_X", nx, q_x.len()));
        }
        let support = q_x.support();
        let d = support.len();
        if cfg.eta * d as f64 >= 1.0 {
            return Err(Error::Input(format!("eta = {} too large for {d} symbols", cfg.eta)));
        }
        let m = grid_resolution(d, cfg.grid_step);
        let scale = 1.0 - cfg.eta * d as f64;
        let grid = compositions(d, m)
            .into_iter()
            .map(|k| {
                let mut qhat = vec![0.0; nx];
                for (&i, &ki) in support.iter().zip(&k) {
                    qhat[i] = cfg.eta + scale * ki as f64 / m as f64;
                }
                let ln = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(f64::ln).collect() };
                GridPoint {
                    ln_qy: ln(push_slice(&qhat, &quad.q_y_given_x)),
                    ln_qz: ln(push_slice(&qhat, &quad.q_z_given_x)),
                    qhat,
                }
            })
            .collect();
        Ok(FSolver {
            quad: quad.clone(),
            support,
            nx,
            eta: cfg.eta,
            inner_starts: cfg.inner_starts.max(1),
            step: 1.0 / m as f64,
            grid,
        })
    }

    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }

    pub fn quad(&self) -> &ChannelQuad {
        &self.quad
    }

    /// Maximise over `Q̂_X` for this `P_X` (given as a raw probability slice).
    pub fn solve_slice(&self, p_x: &[f64]) -> Result<FResult> {
        if p_x.len() != self.nx {
            return Err(Error::dim("P_X", self.nx, p_x.len()));
        }
        let py = push_slice(p_x, &self.quad.p_y_given_x);
        let pz = push_slice(p_x, &self.quad.p_z_given_x);
        let (hy, hz) = (neg_entropy(&py), neg_entropy(&pz));

        let mut skipped = 0;
        let mut scored: Vec<(usize, ExtReal)> = Vec::with_capacity(self.grid.len());
        for (i, g) in self.grid.iter().enumerate() {
            let dy = kl_from_logs(&py, hy, &g.ln_qy);
            let dz = kl_from_logs(&pz, hz, &g.ln_qz);
            match dy.checked_sub(dz, "f grid point") {
                Ok(v) => scored.push((i, v)),
                Err(_) => skipped += 1,
            }
        }
        if scored.is_empty() {
            return Err(Error::Evaluation(format!(
                "all {skipped} grid points of the inner problem are indeterminate (inf - inf)"
            )));
        }
        // stable: equal values keep the lower grid index first
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let (best_idx, best_val) = scored[0];
        let mut best_q = self.grid[best_idx].qhat.clone();
        let mut best = best_val;

        if best.is_finite() {
            let mut seeds: Vec<usize> = Vec::new();
            for &(i, v) in &scored {
                if seeds.len() == self.inner_starts || !v.is_finite() {
                    break;
                }
                let far = seeds.iter().all(|&j| {
                    self.support
                        .iter()
                        .any(|&s| (self.grid[i].qhat[s] - self.grid[j].qhat[s]).abs() > 2.5 * self.step)
                });
                if far {
                    seeds.push(i);
                }
            }
            for i in seeds {
                let (q, v) = self.ascend(&py, &pz, self.grid[i].qhat.clone());
                if ExtReal::Finite(v) > best {
                    best = ExtReal::Finite(v);
                    best_q = q;
                }
            }
        }
        let boundary_flag = self.support.iter().any(|&s| best_q[s] <= 2.0 * self.eta);
        Ok(FResult {
            value: best,
            witness_qhat: SimplexVector::from_vec_unchecked(best_q),
            boundary_flag,
            cap: None,
            skipped_points: skipped,
        })
    }

    pub fn solve(&self, p_x: &SimplexVector) -> Result<FResult> {
        self.solve_slice(p_x.as_slice())
    }

    fn value_grad(&self, py: &[f64], pz: &[f64], q: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let qy = push_slice(q, &self.quad.q_y_given_x);
        let qz = push_slice(q, &self.quad.q_z_given_x);
        let v = kl_slices(py, &qy).to_f64() - kl_slices(pz, &qz).to_f64();
        if let Some(g) = grad {
            for &x in &self.support {
                let ry = self.quad.q_y_given_x.row(x);
                let rz = self.quad.q_z_given_x.row(x);
                let mut acc = 0.0;
                for (y, &p) in py.iter().enumerate() {
                    if p > 0.0 {
                        acc -= p * ry[y] / qy[y];
                    }
                }
                for (z, &p) in pz.iter().enumerate() {
                    if p > 0.0 {
                        acc += p * rz[z] / qz[z];
                    }
                }
                g[x] = acc;
            }
        }
        v
    }

    /// Projected-gradient ascent on the support coordinates of `Q̂_X`.
    fn ascend(&self, py: &[f64], pz: &[f64], mut q: Vec<f64>) -> (Vec<f64>, f64) {
        let d = self.support.len();
        let mut grad = vec![0.0; self.nx];
        let mut val = self.value_grad(py, pz, &q, Some(&mut grad));
        if d < 2 {
            return (q, val);
        }
        let mut t = 0.1;
        let mut trial = q.clone();
        let mut sub = vec![0.0; d];
        for _ in 0..200 {
            let mut improved = false;
            while t > 1e-16 {
                for (k, &s) in self.support.iter().enumerate() {
                    sub[k] = q[s] + t * grad[s];
                }
                project_capped_simplex(&mut sub, self.eta);
                let mut dot = 0.0;
                let mut moved = 0.0f64;
                for (k, &s) in self.support.iter().enumerate() {
                    trial[s] = sub[k];
                    dot += grad[s] * (sub[k] - q[s]);
                    moved = moved.max((sub[k] - q[s]).abs());
                }
                if moved < 1e-15 {
                    return (q, val);
                }
                let cand = self.value_grad(py, pz, &trial, None);
                if cand.is_finite() && cand >= val + 1e-4 * dot {
                    let gain = cand - val;
                    std::mem::swap(&mut q, &mut trial);
                    val = self.value_grad(py, pz, &q, Some(&mut grad));
                    t *= 2.0;
                    improved = gain > 1e-15 * (1.0 + val.abs());
                    break;
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (q, val)
    }
}

/// `f(P_X)` with a fresh solver.
pub fn f_max(p_x: &SimplexVector, quad: &ChannelQuad, q_x: &SimplexVector, cfg: &OptimizerConfig) -> Result<FResult> {
    check_inputs(p_x, quad, q_x)?;
    FSolver::new(quad, q_x, cfg)?.solve(p_x)
}

/// A joint law of `(Y, Z)` given `X` under the null, together with the
/// alternative's reverse channel `Q_{Y|Z}`.
///
/// Only meaningful when the alternative factorises as
/// `Q_{YZ|X} = Q_{Z|X} Q_{Y|Z}`; [`f_max_capped`] checks this.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    /// Rows indexed by `x`, columns by `y * |Z| + z`.
    pub p_yz_given_x: Kernel,
    pub q_y_given_z: Kernel,
}

const COUPLING_TOL: f64 = 1e-9;

/// [`f_max`] plus the coupling cap `D(P_{YZ} ‖ P_Z Q_{Y|Z})`.
pub fn f_max_capped(
    p_x: &SimplexVector,
    quad: &ChannelQuad,
    q_x: &SimplexVector,
    coupling: &Coupling,
    cfg: &OptimizerConfig,
) -> Result<FResult> {
    let (ny, nz) = (quad.p_y_given_x.cols(), quad.p_z_given_x.cols());
    let nx = quad.input_len();
    let k = &coupling.p_yz_given_x;
    if k.rows() != nx || k.cols() != ny * nz {
        return Err(Error::dim("coupling P_YZ|X", nx * ny * nz, k.rows() * k.cols()));
    }
    if coupling.q_y_given_z.rows() != nz || coupling.q_y_given_z.cols() != ny {
        return Err(Error::dim("coupling Q_Y|Z", nz * ny, coupling.q_y_given_z.rows() * coupling.q_y_given_z.cols()));
    }
    for x in 0..nx {
        let row = k.row(x);
        for y in 0..ny {
            let m: f64 = (0..nz).map(|z| row[y * nz + z]).sum();
            if (m - quad.p_y_given_x.get(x, y)).abs() > COUPLING_TOL {
                return Err(Error::Input(format!("coupling Y-marginal differs from P_Y|X at x={x}")));
            }
        }
        for z in 0..nz {
            let m: f64 = (0..ny).map(|y| row[y * nz + z]).sum();
            if (m - quad.p_z_given_x.get(x, z)).abs() > COUPLING_TOL {
                return Err(Error::Input(format!("coupling Z-marginal differs from P_Z|X at x={x}")));
            }
        }
    }
    let through = quad.q_z_given_x.compose(&coupling.q_y_given_z)?;
    for x in q_x.support() {
        let diff = crate::prob::max_abs_diff(through.row(x), quad.q_y_given_x.row(x));
        if diff > COUPLING_TOL {
            return Err(Error::Input(format!(
                "Q_Y|X does not factor through Z at x={x} (residual {diff:.2e})"
            )));
        }
    }

    let mut res = f_max(p_x, quad, q_x, cfg)?;
    let p_yz = push_slice(p_x.as_slice(), k);
    let p_z = push_slice(p_x.as_slice(), &quad.p_z_given_x);
    let mut reference = vec![0.0; ny * nz];
    for y in 0..ny {
        for z in 0..nz {
            reference[y * nz + z] = p_z[z] * coupling.q_y_given_z.get(z, y);
        }
    }
    res.cap = Some(kl_slices(&p_yz, &reference));
    Ok(res)
}

/// Coupling cap `D(P_{YZU} ‖ P_{UZ} Q_{Y|Z})` for a joint over axes `U, X, Y, Z`.
///
/// Whenever `Q_{YZ|X} = Q_{Z|X} Q_{Y|Z}`, this dominates `Σ_u P(u) f(P_{X|U=u})`.
pub fn thm2_cap(p_uxyz: &JointTable, q_y_given_z: &Kernel) -> Result<ExtReal> {
    for name in ["U", "X", "Y", "Z"] {
        p_uxyz.axis_index(name)?;
    }
    let t = p_uxyz.marginal(&["U", "Y", "Z"])?;
    let (nu, ny, nz) = (t.axes()[0].size, t.axes()[1].size, t.axes()[2].size);
    if q_y_given_z.rows() != nz || q_y_given_z.cols() != ny {
        return Err(Error::dim("Q_Y|Z", nz * ny, q_y_given_z.rows() * q_y_given_z.cols()));
    }
    let d = t.data();
    let mut p_uz = vec![0.0; nu * nz];
    for u in 0..nu {
        for y in 0..ny {
            for z in 0..nz {
                p_uz[u * nz + z] += d[(u * ny + y) * nz + z];
            }
        }
    }
    let mut reference = vec![0.0; d.len()];
    for u in 0..nu {
        for y in 0..ny {
            for z in 0..nz {
                reference[(u * ny + y) * nz + z] = p_uz[u * nz + z] * q_y_given_z.get(z, y);
            }
        }
    }
    Ok(kl_slices(d, &reference))
}

/// Whether `f = +inf` for additive-Gaussian-noise channels, given the noise
/// standard deviations of `Q_{Y|X}` and `Q_{Z|X}`.
pub fn gaussian_unbounded_check(sigma_q_y: f64, sigma_q_z: f64) -> Result<bool> {
    if !(sigma_q_y > 0.0 && sigma_q_z > 0.0) || !sigma_q_y.is_finite() || !sigma_q_z.is_finite() {
        return Err(Error::Input(format!(
            "noise standard deviations must be positive, got ({sigma_q_y}, {sigma_q_z})"
        )));
    }
    Ok(sigma_q_y < sigma_q_z)
}

/// Plain exhaustive scan of `f_objective` on a simplex grid with `1/step`
/// subdivisions. Slow; used for `--oracle` verification of small alphabets.
pub fn grid_scan(
    p_x: &SimplexVector,
    quad: &ChannelQuad,
    q_x: &SimplexVector,
    step: f64,
    eta: f64,
) -> Result<(ExtReal, SimplexVector)> {
    check_inputs(p_x, quad, q_x)?;
    let support = q_x.support();
    let m = ((1.0 / step).round() as usize).max(1);
    let scale = 1.0 - eta * support.len() as f64;
    let mut best: Option<(ExtReal, SimplexVector)> = None;
    for k in compositions(support.len(), m) {
        let mut q = vec![0.0; q_x.len()];
        for (&i, &ki) in support.iter().zip(&k) {
            q[i] = eta + scale * ki as f64 / m as f64;
        }
        let q = SimplexVector::from_vec_unchecked(q);
        let Ok(v) = f_objective(&q, p_x, quad, q_x) else {
            continue;
        };
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, q));
        }
    }
    best.ok_or_else(|| Error::Evaluation("every grid point is indeterminate".into()))
}
