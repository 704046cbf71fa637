//! Objectives and rate functionals over test channels `W(u|x)`.
//!
//! With the Markov chain `U - X - V`, `I(U;X|V) = H(U|V) - H(U|X)`, so every
//! rate here is a difference of conditional entropies of `U`.

use crate::inner::FSolver;
use crate::optim::{output_marginal, ChannelProblem};
use crate::prob::{entropy, kl_slices, Kernel};
use crate::{Error, ExtReal, Result};

/// `H(U|X)` for input law `px`.
pub(crate) fn h_u_given_x(px: &[f64], w: &[f64], nu: usize) -> f64 {
    px.iter().zip(w.chunks(nu)).map(|(&p, row)| p * entropy(row)).sum()
}

/// `H(U|V)` where `V` is drawn from `kv` given `X`.
pub(crate) fn h_u_given_v(px: &[f64], w: &[f64], nu: usize, kv: &Kernel) -> f64 {
    let nv = kv.cols();
    let mut puv = vec![0.0; nu * nv];
    for (x, &p) in px.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let wrow = &w[x * nu..(x + 1) * nu];
        let vrow = kv.row(x);
        for (u, &wu) in wrow.iter().enumerate() {
            let a = p * wu;
            for (v, &kv) in vrow.iter().enumerate() {
                puv[u * nv + v] += a * kv;
            }
        }
    }
    let mut pv = vec![0.0; nv];
    for u in 0..nu {
        for v in 0..nv {
            pv[v] += puv[u * nv + v];
        }
    }
    entropy(&puv) - entropy(&pv)
}

/// `I(U;X|V) = H(U|V) - H(U|X)`, clamped at zero.
pub(crate) fn mi_ux_given_v(px: &[f64], w: &[f64], nu: usize, kv: &Kernel) -> f64 {
    (h_u_given_v(px, w, nu, kv) - h_u_given_x(px, w, nu)).max(0.0)
}

/// `I(U;X) = H(U) - H(U|X)`.
pub(crate) fn mi_ux(px: &[f64], w: &[f64], nu: usize) -> f64 {
    (entropy(&output_marginal(px, w, nu)) - h_u_given_x(px, w, nu)).max(0.0)
}

/// Posteriors `P_{X|U=u}` with their weights; `u` of negligible mass is skipped.
pub(crate) fn posteriors(px: &[f64], w: &[f64], nu: usize) -> Vec<(usize, f64, Vec<f64>)> {
    let pu = output_marginal(px, w, nu);
    let mut out = Vec::with_capacity(nu);
    for (u, &m) in pu.iter().enumerate() {
        if m <= 1e-300 {
            continue;
        }
        let post: Vec<f64> = px.iter().enumerate().map(|(x, &p)| p * w[x * nu + u] / m).collect();
        let s: f64 = post.iter().sum();
        out.push((u, m, post.into_iter().map(|v| v / s).collect()));
    }
    out
}

/// `Σ_u P(u) f(P_{X|U=u})` under `I(U;X|Y) <= R`, `I(U;X|Z) <= R`.
pub(crate) struct GProblem<'a> {
    pub px: &'a [f64],
    pub nu: usize,
    pub solver: &'a FSolver,
    pub p_y_given_x: &'a Kernel,
    pub p_z_given_x: &'a Kernel,
}

impl ChannelProblem for GProblem<'_> {
    fn input_law(&self) -> &[f64] {
        self.px
    }

    fn output_len(&self) -> usize {
        self.nu
    }

    fn objective(&self, w: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (_, m, post) in posteriors(self.px, w, self.nu) {
            let r = self.solver.solve_slice(&post)?;
            match r.value {
                ExtReal::Finite(v) => acc += m * v,
                other => {
                    return Err(Error::Evaluation(format!(
                        "inner objective is {other} at a posterior of the test channel"
                    )))
                }
            }
        }
        Ok(acc)
    }

    fn rates(&self, w: &[f64]) -> Vec<f64> {
        vec![
            mi_ux_given_v(self.px, w, self.nu, self.p_y_given_x),
            mi_ux_given_v(self.px, w, self.nu, self.p_z_given_x),
        ]
    }
}

/// `I(Y;U|Z) = H(U|Z) - H(U|YZ)` under `I(U;X|Z) <= R`, plus `I(U;X|Y) <= R`
/// when `p_y_given_x` is set.
pub(crate) struct ResidualInfoProblem<'a> {
    pub px: &'a [f64],
    pub nu: usize,
    pub p_z_given_x: &'a Kernel,
    pub p_yz_given_x: &'a Kernel,
    pub p_y_given_x: Option<&'a Kernel>,
}

impl ResidualInfoProblem<'_> {
    pub fn info(&self, w: &[f64]) -> f64 {
        (h_u_given_v(self.px, w, self.nu, self.p_z_given_x) - h_u_given_v(self.px, w, self.nu, self.p_yz_given_x))
            .max(0.0)
    }
}

impl ChannelProblem for ResidualInfoProblem<'_> {
    fn input_law(&self) -> &[f64] {
        self.px
    }

    fn output_len(&self) -> usize {
        self.nu
    }

    fn objective(&self, w: &[f64]) -> Result<f64> {
        Ok(self.info(w))
    }

    fn rates(&self, w: &[f64]) -> Vec<f64> {
        let mut r = vec![mi_ux_given_v(self.px, w, self.nu, self.p_z_given_x)];
        if let Some(ky) = self.p_y_given_x {
            r.push(mi_ux_given_v(self.px, w, self.nu, ky));
        }
        r
    }
}

/// `D(P_UY ‖ Q_UY)` with the same `W` applied under both hypotheses,
/// under `I(U;X) <= R`.
pub(crate) struct PairDivergenceProblem<'a> {
    pub px: &'a [f64],
    pub qx: &'a [f64],
    pub nu: usize,
    pub p_y_given_x: &'a Kernel,
    pub q_y_given_x: &'a Kernel,
}

pub(crate) fn joint_uy(px: &[f64], w: &[f64], nu: usize, k: &Kernel) -> Vec<f64> {
    let ny = k.cols();
    let mut out = vec![0.0; nu * ny];
    for (x, &p) in px.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for u in 0..nu {
            let a = p * w[x * nu + u];
            for (y, &kv) in k.row(x).iter().enumerate() {
                out[u * ny + y] += a * kv;
            }
        }
    }
    out
}

impl PairDivergenceProblem<'_> {
    pub fn divergence(&self, w: &[f64]) -> ExtReal {
        kl_slices(
            &joint_uy(self.px, w, self.nu, self.p_y_given_x),
            &joint_uy(self.qx, w, self.nu, self.q_y_given_x),
        )
    }
}

impl ChannelProblem for PairDivergenceProblem<'_> {
    fn input_law(&self) -> &[f64] {
        self.px
    }

    fn output_len(&self) -> usize {
        self.nu
    }

    fn objective(&self, w: &[f64]) -> Result<f64> {
        self.divergence(w)
            .finite()
            .ok_or_else(|| Error::Evaluation("D(P_UY ‖ Q_UY) is infinite at an interior channel".into()))
    }

    fn rates(&self, w: &[f64]) -> Vec<f64> {
        vec![mi_ux(self.px, w, self.nu)]
    }
}
