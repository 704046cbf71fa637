//! Receiver classes for which the auxiliary-receiver bounds apply.

use super::{AuxiliaryReceiver, DiscreteScenario, Induced};
use crate::Result;

/// Outcome of a membership test; residuals are sup-norm distances.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub holds: bool,
    /// `‖Q_{YZ|X} - Q_{Z|X} Q_{Y|Z}‖`, over `x` in the support of `Q_X`.
    pub factorization_residual: f64,
    /// `‖P_XZ - Q_XZ‖` for `R`, `‖P_{Y|Z} - Q_{Y|Z}‖` for `R̃`.
    pub second_residual: f64,
    /// `z` symbols with zero mass under either hypothesis, skipped by the
    /// conditional comparison.
    pub flagged_z: Vec<usize>,
}

/// `Q_{Y|Z}` from the joint, plus the `z` with zero mass.
fn y_given_z(ind: &Induced, joint: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let yz = ind.marginal(joint, (false, true, true));
    let (ny, nz) = (ind.ny, ind.nz);
    let mut out = vec![0.0; nz * ny];
    let mut empty = Vec::new();
    for z in 0..nz {
        let m: f64 = (0..ny).map(|y| yz[y * nz + z]).sum();
        if m > 0.0 {
            for y in 0..ny {
                out[z * ny + y] = yz[y * nz + z] / m;
            }
        } else {
            empty.push(z);
            for y in 0..ny {
                out[z * ny + y] = 1.0 / ny as f64;
            }
        }
    }
    (out, empty)
}

fn factorization_residual(scn: &DiscreteScenario, ind: &Induced) -> f64 {
    let (qyz, _) = y_given_z(ind, &ind.q_xyz);
    let mut r = 0.0f64;
    for x in scn.q_x().support() {
        for y in 0..ind.ny {
            for z in 0..ind.nz {
                let lhs = ind.q_yz_given_x.get(x, y * ind.nz + z);
                let rhs = ind.q_z_given_x.get(x, z) * qyz[z * ind.ny + y];
                r = r.max((lhs - rhs).abs());
            }
        }
    }
    r
}

/// `Q_{YZ|X} = Q_{Z|X} Q_{Y|Z}` and `P_XZ = Q_XZ`, each within `tol`.
#[allow(non_snake_case)]
pub fn membership_R_check(scn: &DiscreteScenario, aux: &AuxiliaryReceiver, tol: f64) -> Result<MembershipReport> {
    let ind = Induced::new(scn, aux)?;
    let f = factorization_residual(scn, &ind);
    let k = (true, false, true);
    let m = crate::prob::max_abs_diff(&ind.marginal(&ind.p_xyz, k), &ind.marginal(&ind.q_xyz, k));
    Ok(MembershipReport {
        holds: f <= tol && m <= tol,
        factorization_residual: f,
        second_residual: m,
        flagged_z: Vec::new(),
    })
}

/// `Q_{YZ|X} = Q_{Z|X} Q_{Y|Z}` and `P_{Y|Z} = Q_{Y|Z}`, each within `tol`;
/// the conditionals are compared only where both `P_Z` and `Q_Z` are positive.
#[allow(non_snake_case)]
pub fn membership_Rtilde_check(
    scn: &DiscreteScenario,
    aux: &AuxiliaryReceiver,
    tol: f64,
) -> Result<MembershipReport> {
    let ind = Induced::new(scn, aux)?;
    let f = factorization_residual(scn, &ind);
    let (pc, pe) = y_given_z(&ind, &ind.p_xyz);
    let (qc, qe) = y_given_z(&ind, &ind.q_xyz);
    let mut flagged: Vec<usize> = pe.into_iter().chain(qe).collect();
    flagged.sort_unstable();
    flagged.dedup();
    let mut m = 0.0f64;
    for z in (0..ind.nz).filter(|z| !flagged.contains(z)) {
        for y in 0..ind.ny {
            m = m.max((pc[z * ind.ny + y] - qc[z * ind.ny + y]).abs());
        }
    }
    Ok(MembershipReport {
        holds: f <= tol && m <= tol,
        factorization_residual: f,
        second_residual: m,
        flagged_z: flagged,
    })
}
