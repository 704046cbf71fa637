//! Upper bounds built from auxiliary receivers.

use super::problems::{posteriors, GProblem, ResidualInfoProblem};
use super::{
    channel_kernel, require_finite, warm_channels, AuxiliaryReceiver, BoundResult, Diagnostics, DiscreteScenario,
    Induced, TerminalBound, MEMBERSHIP_TOL,
};
use crate::inner::{f_objective, ChannelQuad, FSolver};
use crate::optim::{maximize_channel, OptimizerConfig};
use crate::prob::{kl_slices, Kernel, SimplexVector, MAX_ALPHABET};
use crate::{Error, ExtReal, Result};

/// Joint `P_X × K` row-major in `(x, v)`.
fn joint_with(px: &[f64], k: &Kernel) -> Vec<f64> {
    let mut out = Vec::with_capacity(px.len() * k.cols());
    for (x, &p) in px.iter().enumerate() {
        out.extend(k.row(x).iter().map(|&v| p * v));
    }
    out
}

fn pair_kl(scn: &DiscreteScenario, pk: &Kernel, qk: &Kernel) -> ExtReal {
    kl_slices(&joint_with(scn.p_x().as_slice(), pk), &joint_with(scn.q_x().as_slice(), qk))
}

/// `max Σ_u P(u) f(P_{X|U=u})` over `P_{U|X}` with `|U| = |X| + 2`, subject
/// to `I(U;X|Y) <= rate` and `I(U;X|Z) <= rate`, where `Y`, `Z` are the
/// outputs of the quad's `P` channels.
///
/// No finiteness preconditions are checked here; see [`g_bound`].
pub fn g_general(
    p_x: &SimplexVector,
    q_x: &SimplexVector,
    quad: &ChannelQuad,
    rate: f64,
    cfg: &OptimizerConfig,
    warm: &[Kernel],
) -> Result<BoundResult> {
    let nx = quad.input_len();
    if p_x.len() != nx || q_x.len() != nx {
        return Err(Error::dim("input law", nx, p_x.len().max(q_x.len())));
    }
    let nu = nx + 2;
    let solver = FSolver::new(quad, q_x, cfg)?;
    let problem = GProblem {
        px: p_x.as_slice(),
        nu,
        solver: &solver,
        p_y_given_x: &quad.p_y_given_x,
        p_z_given_x: &quad.p_z_given_x,
    };
    let opt = maximize_channel(&problem, rate, cfg, &warm_channels(warm, nx, nu)?)?;
    let w = channel_kernel(&opt.channel, nx, nu);

    let mut qhats = vec![q_x.clone(); nu];
    let mut flags = vec![false; nu];
    let mut value = 0.0;
    for (u, m, post) in posteriors(p_x.as_slice(), w.as_slice(), nu) {
        let r = solver.solve_slice(&post)?;
        value += m * require_finite(r.value, "inner objective at the witness")?;
        flags[u] = r.boundary_flag;
        qhats[u] = r.witness_qhat;
    }
    let rates = problem_rates(&problem, w.as_slice());
    let mut notes = Vec::new();
    if flags.iter().any(|&f| f) {
        notes.push("inner witness on the interior margin of the reference simplex; the supremum may be +inf".into());
    }
    Ok(BoundResult {
        value: ExtReal::Finite(value),
        witness_u_channel: Some(w),
        witness_qhat_per_u: Some(qhats),
        diagnostics: Diagnostics {
            rate_slacks: rates.iter().map(|r| rate - r).collect(),
            trace: Some(opt.trace),
            boundary_flags: flags,
            notes,
            components: vec![("g".into(), ExtReal::Finite(value))],
        },
    })
}

fn problem_rates<P: crate::optim::ChannelProblem>(p: &P, w: &[f64]) -> Vec<f64> {
    p.rates(w)
}

/// Re-evaluate `Σ_u P(u) D(P_{Y|u}‖Q̂_{Y,u}) - D(P_{Z|u}‖Q̂_{Z,u})` at stored witnesses.
pub fn g_value_from_witness(
    p_x: &SimplexVector,
    q_x: &SimplexVector,
    quad: &ChannelQuad,
    w: &Kernel,
    qhats: &[SimplexVector],
) -> Result<ExtReal> {
    let nu = w.cols();
    if qhats.len() != nu {
        return Err(Error::dim("reference laws per u", nu, qhats.len()));
    }
    let mut acc = ExtReal::ZERO;
    for (u, m, post) in posteriors(p_x.as_slice(), w.as_slice(), nu) {
        let post = SimplexVector::from_vec_unchecked(post);
        let v = f_objective(&qhats[u], &post, quad, q_x)?;
        acc = acc.checked_add(v.scale(m), "witness re-evaluation")?;
    }
    Ok(acc)
}

fn scenario_quad(scn: &DiscreteScenario, p_z_given_x: &Kernel, q_z_given_x: &Kernel) -> Result<ChannelQuad> {
    ChannelQuad::new(
        scn.p_y_given_x().clone(),
        p_z_given_x.clone(),
        scn.q_y_given_x().clone(),
        q_z_given_x.clone(),
    )
}

fn require_finite_pair(v: ExtReal, what: &str) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::Input(format!("{what} is infinite; the bound needs it finite")));
    }
    Ok(())
}

/// The `G` term for the scenario and a receiver given by per-`x` kernels.
pub fn g_bound(
    scn: &DiscreteScenario,
    p_z_given_x: &Kernel,
    q_z_given_x: &Kernel,
    cfg: &OptimizerConfig,
) -> Result<BoundResult> {
    g_bound_warm(scn, p_z_given_x, q_z_given_x, cfg, &[])
}

pub fn g_bound_warm(
    scn: &DiscreteScenario,
    p_z_given_x: &Kernel,
    q_z_given_x: &Kernel,
    cfg: &OptimizerConfig,
    warm: &[Kernel],
) -> Result<BoundResult> {
    let quad = scenario_quad(scn, p_z_given_x, q_z_given_x)?;
    require_finite_pair(pair_kl(scn, scn.p_y_given_x(), scn.q_y_given_x()), "D(P_XY ‖ Q_XY)")?;
    require_finite_pair(pair_kl(scn, p_z_given_x, q_z_given_x), "D(P_XZ ‖ Q_XZ)")?;
    g_general(scn.p_x(), scn.q_x(), &quad, scn.rate(), cfg, warm)
}

/// `G + E_Z`, where `E_Z` is the chosen terminal bound on `(X, Z)`.
pub fn addsub_upper_bound(
    scn: &DiscreteScenario,
    aux: &AuxiliaryReceiver,
    terminal: TerminalBound,
    cfg: &OptimizerConfig,
) -> Result<BoundResult> {
    addsub_upper_bound_warm(scn, aux, terminal, cfg, &[])
}

pub fn addsub_upper_bound_warm(
    scn: &DiscreteScenario,
    aux: &AuxiliaryReceiver,
    terminal: TerminalBound,
    cfg: &OptimizerConfig,
    warm: &[Kernel],
) -> Result<BoundResult> {
    let ind = Induced::new(scn, aux)?;
    let xz = (true, false, true);
    let term = terminal.evaluate(&ind.marginal(&ind.p_xyz, xz), &ind.marginal(&ind.q_xyz, xz))?;
    let mut res = g_bound_warm(scn, &ind.p_z_given_x, &ind.q_z_given_x, cfg, warm)?;
    let g = res.value;
    res.value = g.checked_add(term, "G + terminal")?;
    res.diagnostics.components.push(("terminal".into(), term));
    Ok(res)
}

fn require_membership(scn: &DiscreteScenario, aux: &AuxiliaryReceiver) -> Result<()> {
    let r = super::membership_R_check(scn, aux, MEMBERSHIP_TOL)?;
    if !r.holds {
        return Err(Error::Membership {
            factorization: r.factorization_residual,
            second: r.second_residual,
        });
    }
    Ok(())
}

fn residual_info_bound(
    scn: &DiscreteScenario,
    aux: &AuxiliaryReceiver,
    both_constraints: bool,
    cfg: &OptimizerConfig,
    warm: &[Kernel],
) -> Result<BoundResult> {
    require_membership(scn, aux)?;
    let ind = Induced::new(scn, aux)?;
    let kl_yz = ind.kl_yz();
    if !kl_yz.is_finite() {
        let mut r = BoundResult::plain(kl_yz);
        r.diagnostics.components.push(("kl_yz".into(), kl_yz));
        return Ok(r);
    }
    let (nx, nu) = (scn.nx(), scn.u_size());
    let problem = ResidualInfoProblem {
        px: scn.p_x().as_slice(),
        nu,
        p_z_given_x: &ind.p_z_given_x,
        p_yz_given_x: &ind.p_yz_given_x,
        p_y_given_x: both_constraints.then_some(scn.p_y_given_x()),
    };
    let opt = maximize_channel(&problem, scn.rate(), cfg, &warm_channels(warm, nx, nu)?)?;
    let w = channel_kernel(&opt.channel, nx, nu);
    let info = problem.info(w.as_slice());
    let rates = problem_rates(&problem, w.as_slice());
    let value = kl_yz.checked_add(ExtReal::Finite(info), "residual information bound")?;
    Ok(BoundResult {
        value,
        witness_u_channel: Some(w),
        witness_qhat_per_u: None,
        diagnostics: Diagnostics {
            rate_slacks: rates.iter().map(|r| scn.rate() - r).collect(),
            trace: Some(opt.trace),
            boundary_flags: Vec::new(),
            notes: Vec::new(),
            components: vec![("kl_yz".into(), kl_yz), ("info".into(), ExtReal::Finite(info))],
        },
    })
}

/// `D(P_YZ‖Q_YZ) + max I(Y;U|Z)` over `P_{U|X}` with `I(U;X|Z) <= R`.
pub fn rw_bound(scn: &DiscreteScenario, aux: &AuxiliaryReceiver, cfg: &OptimizerConfig) -> Result<BoundResult> {
    rw_bound_warm(scn, aux, cfg, &[])
}

pub fn rw_bound_warm(
    scn: &DiscreteScenario,
    aux: &AuxiliaryReceiver,
    cfg: &OptimizerConfig,
    warm: &[Kernel],
) -> Result<BoundResult> {
    residual_info_bound(scn, aux, false, cfg, warm)
}

/// As [`rw_bound`], with the extra constraint `I(U;X|Y) <= R`.
pub fn corollary1_bound(scn: &DiscreteScenario, aux: &AuxiliaryReceiver, cfg: &OptimizerConfig) -> Result<BoundResult> {
    corollary1_bound_warm(scn, aux, cfg, &[])
}

pub fn corollary1_bound_warm(
    scn: &DiscreteScenario,
    aux: &AuxiliaryReceiver,
    cfg: &OptimizerConfig,
    warm: &[Kernel],
) -> Result<BoundResult> {
    residual_info_bound(scn, aux, true, cfg, warm)
}

/// `D(P_YZ‖Q_YZ) + I(Y;U|Z)` at a stored test channel.
pub fn rw_value_from_witness(scn: &DiscreteScenario, aux: &AuxiliaryReceiver, w: &Kernel) -> Result<ExtReal> {
    let ind = Induced::new(scn, aux)?;
    let problem = ResidualInfoProblem {
        px: scn.p_x().as_slice(),
        nu: w.cols(),
        p_z_given_x: &ind.p_z_given_x,
        p_yz_given_x: &ind.p_yz_given_x,
        p_y_given_x: None,
    };
    ind.kl_yz()
        .checked_add(ExtReal::Finite(problem.info(w.as_slice())), "witness re-evaluation")
}

/// One receiver in a chain, seen through `X` only.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainLink {
    pub p_z_given_x: Kernel,
    pub q_z_given_x: Kernel,
}

impl ChainLink {
    /// The per-`x` channels induced by a receiver on `(X, Y)`.
    pub fn from_aux(scn: &DiscreteScenario, aux: &AuxiliaryReceiver) -> Result<Self> {
        let ind = Induced::new(scn, aux)?;
        Ok(ChainLink {
            p_z_given_x: ind.p_z_given_x,
            q_z_given_x: ind.q_z_given_x,
        })
    }
}

/// `G(Y→Z_1) + Σ_j G(Z_j→Z_{j+1}) + E_{Z_k}`.
///
/// Each link's `G` uses the previous receiver in the `Y` role. Link errors
/// carry the index of the failing `G` term (0 is `Y→Z_1`).
pub fn chain_bound(
    scn: &DiscreteScenario,
    chain: &[ChainLink],
    terminal: TerminalBound,
    cfg: &OptimizerConfig,
) -> Result<BoundResult> {
    let Some(last) = chain.last() else {
        return Err(Error::Input("a chain needs at least one receiver".into()));
    };
    let link = |index: usize| move |e: Error| Error::Link { index, source: Box::new(e) };
    require_finite_pair(pair_kl(scn, scn.p_y_given_x(), scn.q_y_given_x()), "D(P_XY ‖ Q_XY)")?;
    for (j, l) in chain.iter().enumerate() {
        if l.p_z_given_x.rows() != scn.nx() || l.q_z_given_x.rows() != scn.nx() {
            return Err(link(j)(Error::dim("receiver input alphabet", scn.nx(), l.p_z_given_x.rows())));
        }
        require_finite_pair(pair_kl(scn, &l.p_z_given_x, &l.q_z_given_x), "D(P_XZ ‖ Q_XZ)").map_err(link(j))?;
    }
    let p_xz = joint_with(scn.p_x().as_slice(), &last.p_z_given_x);
    let q_xz = joint_with(scn.q_x().as_slice(), &last.q_z_given_x);
    let term = terminal.evaluate(&p_xz, &q_xz)?;

    let mut total = ExtReal::ZERO;
    let mut components = Vec::new();
    let mut flags = Vec::new();
    let mut notes = Vec::new();
    for j in 0..chain.len() {
        let (py, qy) = if j == 0 {
            (scn.p_y_given_x(), scn.q_y_given_x())
        } else {
            (&chain[j - 1].p_z_given_x, &chain[j - 1].q_z_given_x)
        };
        let quad = ChannelQuad::new(py.clone(), chain[j].p_z_given_x.clone(), qy.clone(), chain[j].q_z_given_x.clone())
            .map_err(link(j))?;
        let g = g_general(scn.p_x(), scn.q_x(), &quad, scn.rate(), cfg, &[]).map_err(link(j))?;
        total = total.checked_add(g.value, "chain sum").map_err(link(j))?;
        components.push((format!("g[{j}]"), g.value));
        flags.extend(g.diagnostics.boundary_flags);
        notes.extend(g.diagnostics.notes.into_iter().map(|n| format!("link {j}: {n}")));
    }
    total = total.checked_add(term, "chain terminal")?;
    components.push(("terminal".into(), term));
    let mut r = BoundResult::plain(total);
    r.diagnostics.components = components;
    r.diagnostics.boundary_flags = flags;
    r.diagnostics.notes = notes;
    Ok(r)
}

/// `G(X; Y'→Z') + E_{Z'}` with `Y' = (Y, J)`, `Z' = (Z, J)`.
///
/// `p_j`, `q_j` have rows indexed by `(x * |Y| + y) * |Z| + z`. Augmented
/// symbols are `y * |J| + j` and `z * |J| + j`.
pub fn j_augmented_bound(
    scn: &DiscreteScenario,
    aux: &AuxiliaryReceiver,
    p_j: &Kernel,
    q_j: &Kernel,
    terminal: TerminalBound,
    cfg: &OptimizerConfig,
) -> Result<BoundResult> {
    let ind = Induced::new(scn, aux)?;
    let (nx, ny, nz) = (ind.nx, ind.ny, ind.nz);
    let nj = p_j.cols();
    for k in [p_j, q_j] {
        if k.rows() != nx * ny * nz || k.cols() != nj {
            return Err(Error::dim("J kernel (|X||Y||Z| x |J|)", nx * ny * nz * nj, k.rows() * k.cols()));
        }
    }
    for (axis, size) in [("(Y,J)", ny * nj), ("(Z,J)", nz * nj)] {
        if size > MAX_ALPHABET {
            return Err(Error::AlphabetTooLarge {
                axis: axis.into(),
                size,
                limit: MAX_ALPHABET,
            });
        }
    }
    let augment = |yz: &Kernel, kj: &Kernel| -> (Kernel, Kernel) {
        let mut yj = vec![0.0; nx * ny * nj];
        let mut zj = vec![0.0; nx * nz * nj];
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    let p = yz.get(x, y * nz + z);
                    for j in 0..nj {
                        let v = p * kj.get((x * ny + y) * nz + z, j);
                        yj[(x * ny + y) * nj + j] += v;
                        zj[(x * nz + z) * nj + j] += v;
                    }
                }
            }
        }
        (
            Kernel::from_data_unchecked(nx, ny * nj, yj),
            Kernel::from_data_unchecked(nx, nz * nj, zj),
        )
    };
    let (p_yj, p_zj) = augment(&ind.p_yz_given_x, p_j);
    let (q_yj, q_zj) = augment(&ind.q_yz_given_x, q_j);
    require_finite_pair(pair_kl(scn, &p_yj, &q_yj), "D(P_XYJ ‖ Q_XYJ)")?;
    require_finite_pair(pair_kl(scn, &p_zj, &q_zj), "D(P_XZJ ‖ Q_XZJ)")?;
    let term = terminal.evaluate(
        &joint_with(scn.p_x().as_slice(), &p_zj),
        &joint_with(scn.q_x().as_slice(), &q_zj),
    )?;
    let quad = ChannelQuad::new(p_yj, p_zj, q_yj, q_zj)?;
    let mut res = g_general(scn.p_x(), scn.q_x(), &quad, scn.rate(), cfg, &[])?;
    res.value = res.value.checked_add(term, "G + terminal")?;
    res.diagnostics.components.push(("terminal".into(), term));
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{ac_lower_bound, centralized_bound};

    /// X uniform; P: Y = BSC(0.1)(X), Z = BSC(0.3)(X); Q: Y = BSC(0.2)(X), Z = BSC(0.3)(X).
    fn bsc_scenario(rate: f64) -> (DiscreteScenario, Kernel) {
        let rows = |p: f64| vec![vec![0.5 * (1.0 - p), 0.5 * p], vec![0.5 * p, 0.5 * (1.0 - p)]];
        (
            DiscreteScenario::from_rows(rows(0.1), rows(0.2), rate).unwrap(),
            Kernel::bsc(0.3).unwrap(),
        )
    }

    fn quick() -> OptimizerConfig {
        OptimizerConfig {
            starts: 8,
            ..Default::default()
        }
    }

    #[test]
    fn g_dominates_constant_test_channel() {
        let (scn, z) = bsc_scenario(0.2);
        let g = g_bound(&scn, &z, &z, &quick()).unwrap();
        let quad = scenario_quad(&scn, &z, &z).unwrap();
        let f0 = crate::inner::f_max(scn.p_x(), &quad, scn.q_x(), &quick()).unwrap();
        assert!(g.value.to_f64() >= f0.value.to_f64() - 1e-9);
        assert!(g.diagnostics.rate_slacks.iter().all(|&s| s >= -1e-9));
        let w = g.witness_u_channel.as_ref().unwrap();
        let again = g_value_from_witness(scn.p_x(), scn.q_x(), &quad, w, g.witness_qhat_per_u.as_ref().unwrap()).unwrap();
        assert!((again.to_f64() - g.value.to_f64()).abs() < 1e-8);
    }

    #[test]
    fn copy_of_y_gives_centralized() {
        let (scn, _) = bsc_scenario(0.2);
        let aux = AuxiliaryReceiver::copy_of_y(2, 2);
        let r = addsub_upper_bound(&scn, &aux, TerminalBound::Centralized, &quick()).unwrap();
        assert_eq!(r.component("g"), Some(ExtReal::ZERO));
        assert_eq!(r.value, centralized_bound(&scn));
        let ac = ac_lower_bound(&scn, &quick()).unwrap();
        assert!(ac.value <= r.value);
    }

    #[test]
    fn zero_terminal_needs_matching_marginals() {
        let (scn, z) = bsc_scenario(0.2);
        let aux = AuxiliaryReceiver::from_x_kernels(&z, &z, 2).unwrap();
        let r = addsub_upper_bound(&scn, &aux, TerminalBound::Zero, &quick()).unwrap();
        let g = g_bound(&scn, &z, &z, &quick()).unwrap();
        assert!((r.value.to_f64() - g.value.to_f64()).abs() < 1e-6);
        let aux = AuxiliaryReceiver::copy_of_y(2, 2);
        assert!(addsub_upper_bound(&scn, &aux, TerminalBound::Zero, &quick()).is_err());
    }

    #[test]
    fn single_link_chain_matches_addsub() {
        let (scn, z) = bsc_scenario(0.2);
        let aux = AuxiliaryReceiver::from_x_kernels(&z, &z, 2).unwrap();
        let a = addsub_upper_bound(&scn, &aux, TerminalBound::Centralized, &quick()).unwrap();
        let c = chain_bound(&scn, &[ChainLink::from_aux(&scn, &aux).unwrap()], TerminalBound::Centralized, &quick())
            .unwrap();
        assert_eq!(a.value, c.value);
        assert!(chain_bound(&scn, &[], TerminalBound::Centralized, &quick()).is_err());
    }

    #[test]
    fn chain_errors_carry_the_link_index() {
        let (scn, z) = bsc_scenario(0.2);
        let never = Kernel::deterministic(2, 2, |_| 0);
        let bad = ChainLink {
            p_z_given_x: Kernel::identity(2),
            q_z_given_x: never,
        };
        let good = ChainLink {
            p_z_given_x: z.clone(),
            q_z_given_x: z,
        };
        match chain_bound(&scn, &[good, bad], TerminalBound::Centralized, &quick()) {
            Err(Error::Link { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn membership_is_required() {
        let (scn, _) = bsc_scenario(0.2);
        let aux = AuxiliaryReceiver::copy_of_y(2, 2);
        assert!(matches!(rw_bound(&scn, &aux, &quick()), Err(Error::Membership { .. })));
        assert!(matches!(corollary1_bound(&scn, &aux, &quick()), Err(Error::Membership { .. })));
    }
}
