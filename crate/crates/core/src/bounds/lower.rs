//! The centralized upper bound and the quantize-and-test lower bound.

use super::problems::{mi_ux, PairDivergenceProblem};
use super::{channel_kernel, warm_channels, BoundResult, Diagnostics, DiscreteScenario};
use crate::optim::{maximize_channel, ChannelProblem, OptimizerConfig};
use crate::prob::{kl_slices, Kernel};
use crate::{Error, ExtReal, Result};

/// `D(P_XY ‖ Q_XY)`.
pub fn centralized_bound(scn: &DiscreteScenario) -> ExtReal {
    kl_slices(scn.p_xy().data(), scn.q_xy().data())
}

/// `max D(P_X‖Q_X) + D(P_UY‖Q_UY)` over `P_{U|X}` with `I(U;X) <= R`, the
/// same channel acting under both hypotheses.
///
/// When `P_X ≠ Q_X` this expression is not always below the upper bounds of
/// this module; a note is attached to the result in that case.
pub fn ac_lower_bound(scn: &DiscreteScenario, cfg: &OptimizerConfig) -> Result<BoundResult> {
    ac_lower_bound_warm(scn, cfg, &[])
}

pub fn ac_lower_bound_warm(scn: &DiscreteScenario, cfg: &OptimizerConfig, warm: &[Kernel]) -> Result<BoundResult> {
    let kl_x = kl_slices(scn.p_x().as_slice(), scn.q_x().as_slice());
    let (nx, nu) = (scn.nx(), scn.u_size());
    let problem = PairDivergenceProblem {
        px: scn.p_x().as_slice(),
        qx: scn.q_x().as_slice(),
        nu,
        p_y_given_x: scn.p_y_given_x(),
        q_y_given_x: scn.q_y_given_x(),
    };
    let mut notes = Vec::new();
    if scn.p_x().max_abs_diff(scn.q_x()) > 0.0 {
        notes.push("P_X differs from Q_X; the lower-bound expression may exceed upper bounds".to_string());
    }
    // constant U is feasible and already infinite
    let uniform = vec![1.0 / nu as f64; nx * nu];
    let at_constant = problem.divergence(&uniform);
    if !kl_x.is_finite() || !at_constant.is_finite() {
        let value = kl_x.checked_add(at_constant, "lower bound")?;
        let mut r = BoundResult::plain(value);
        r.witness_u_channel = Some(channel_kernel(&uniform, nx, nu));
        r.diagnostics.notes = notes;
        r.diagnostics.components = vec![("kl_x".into(), kl_x), ("kl_uy".into(), at_constant)];
        return Ok(r);
    }
    let opt = maximize_channel(&problem, scn.rate(), cfg, &warm_channels(warm, nx, nu)?)?;
    let w = channel_kernel(&opt.channel, nx, nu);
    let kl_uy = problem.divergence(w.as_slice());
    if !kl_uy.is_finite() {
        return Err(Error::Evaluation("D(P_UY ‖ Q_UY) infinite at the returned channel".into()));
    }
    let rates = problem.rates(w.as_slice());
    Ok(BoundResult {
        value: kl_x.checked_add(kl_uy, "lower bound")?,
        witness_u_channel: Some(w),
        witness_qhat_per_u: None,
        diagnostics: Diagnostics {
            rate_slacks: rates.iter().map(|r| scn.rate() - r).collect(),
            trace: Some(opt.trace),
            boundary_flags: Vec::new(),
            notes,
            components: vec![("kl_x".into(), kl_x), ("kl_uy".into(), kl_uy)],
        },
    })
}

/// `D(P_X‖Q_X) + D(P_UY‖Q_UY)` at a stored channel, and its rate `I(U;X)`.
pub fn ac_value_from_witness(scn: &DiscreteScenario, w: &Kernel) -> Result<(ExtReal, f64)> {
    if w.rows() != scn.nx() {
        return Err(Error::dim("test channel rows", scn.nx(), w.rows()));
    }
    let problem = PairDivergenceProblem {
        px: scn.p_x().as_slice(),
        qx: scn.q_x().as_slice(),
        nu: w.cols(),
        p_y_given_x: scn.p_y_given_x(),
        q_y_given_x: scn.q_y_given_x(),
    };
    let kl_x = kl_slices(scn.p_x().as_slice(), scn.q_x().as_slice());
    Ok((
        kl_x.checked_add(problem.divergence(w.as_slice()), "lower bound")?,
        mi_ux(scn.p_x().as_slice(), w.as_slice(), w.cols()),
    ))
}
