//! Testing against conditional independence as an instance of the
//! auxiliary-receiver framework.
//!
//! The observation is `Y = (J, Z, Ŷ)`. Under both hypotheses `(X, J, Z)` has
//! the same law, and under the alternative `Ŷ` depends on `(X, J, Z)` only
//! through `Z`. The receiver `Z' = (Z, J)` is then a function of `Y` that
//! lies in the class accepted by [`super::membership_R_check`].

use super::{AuxiliaryReceiver, DiscreteScenario};
use crate::prob::{max_abs_diff, JointTable, Kernel, MAX_ALPHABET};
use crate::{Error, Result};

const CONSTRUCTION_TOL: f64 = 1e-10;

/// Ingredients of the construction; kernel rows are indexed by
/// `(x * |J| + j) * |Z| + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondIndepParams {
    /// Axes named `X`, `J`, `Z` (any order).
    pub p_xjz: JointTable,
    pub q_xjz: JointTable,
    pub p_yhat_given_xjz: Kernel,
    pub q_yhat_given_xjz: Kernel,
    pub rate: f64,
}

impl CondIndepParams {
    /// Shared `(X, J, Z)` law, with the alternative's `Ŷ` drawn from `Z` alone.
    pub fn from_channels(p_xjz: JointTable, p_yhat_given_xjz: Kernel, q_yhat_given_z: &Kernel, rate: f64) -> Result<Self> {
        let t = p_xjz.reorder(&["X", "J", "Z"])?;
        let n = t.data().len();
        let nz = t.size_of("Z")?;
        if q_yhat_given_z.rows() != nz {
            return Err(Error::dim("Q_Ŷ|Z rows", nz, q_yhat_given_z.rows()));
        }
        let cols = q_yhat_given_z.cols();
        let data: Vec<f64> = (0..n).flat_map(|r| q_yhat_given_z.row(r % nz).to_vec()).collect();
        Ok(CondIndepParams {
            q_xjz: p_xjz.clone(),
            p_xjz,
            p_yhat_given_xjz,
            q_yhat_given_xjz: Kernel::from_data_unchecked(n, cols, data),
            rate,
        })
    }
}

fn violated(constraint: &str, residual: f64) -> Result<()> {
    if residual > CONSTRUCTION_TOL {
        return Err(Error::Constraint {
            constraint: constraint.into(),
            residual,
        });
    }
    Ok(())
}

/// Build the scenario with `Y = (J, Z, Ŷ)` (symbol `(j * |Z| + z) * |Ŷ| + ŷ`)
/// and the receiver `Z' = (Z, J)` (symbol `z * |J| + j`).
///
/// Fails with [`Error::Constraint`] naming the first violated requirement.
pub fn conditional_independence_scenario(params: &CondIndepParams) -> Result<(DiscreteScenario, AuxiliaryReceiver)> {
    let p = params.p_xjz.reorder(&["X", "J", "Z"])?;
    let q = params.q_xjz.reorder(&["X", "J", "Z"])?;
    let (nx, nj, nz) = (p.size_of("X")?, p.size_of("J")?, p.size_of("Z")?);
    if q.axes() != p.axes() {
        return Err(Error::Input("P_XJZ and Q_XJZ have different alphabets".into()));
    }
    let rows = nx * nj * nz;
    let nyh = params.p_yhat_given_xjz.cols();
    for (name, k) in [("P_Ŷ|XJZ", &params.p_yhat_given_xjz), ("Q_Ŷ|XJZ", &params.q_yhat_given_xjz)] {
        if k.rows() != rows || k.cols() != nyh {
            return Err(Error::dim(name, rows * nyh, k.rows() * k.cols()));
        }
    }
    let ny = nj * nz * nyh;
    if ny > MAX_ALPHABET {
        return Err(Error::AlphabetTooLarge {
            axis: "Y = (J, Z, Ŷ)".into(),
            size: ny,
            limit: MAX_ALPHABET,
        });
    }

    violated("P_XJZ = Q_XJZ", p.max_abs_diff(&q)?)?;

    // Q_{Ŷ|XJZ} must not vary with (x, j) for fixed z
    let mut q_given_z = vec![0.0; nz * nyh];
    let mut q_z = vec![0.0; nz];
    for r in 0..rows {
        let z = r % nz;
        let m = q.data()[r];
        q_z[z] += m;
        for h in 0..nyh {
            q_given_z[z * nyh + h] += m * params.q_yhat_given_xjz.get(r, h);
        }
    }
    let mut ci = 0.0f64;
    for r in 0..rows {
        let z = r % nz;
        if q.data()[r] > 0.0 {
            for h in 0..nyh {
                ci = ci.max((params.q_yhat_given_xjz.get(r, h) - q_given_z[z * nyh + h] / q_z[z]).abs());
            }
        }
    }
    violated("I_Q(Ŷ;XJ|Z) = 0", ci)?;

    let yz = |t: &JointTable, k: &Kernel| -> Vec<f64> {
        let mut out = vec![0.0; nyh * nz];
        for r in 0..rows {
            for h in 0..nyh {
                out[h * nz + r % nz] += t.data()[r] * k.get(r, h);
            }
        }
        out
    };
    violated(
        "P_ŶZ = Q_ŶZ",
        max_abs_diff(&yz(&p, &params.p_yhat_given_xjz), &yz(&q, &params.q_yhat_given_xjz)),
    )?;

    let xy = |t: &JointTable, k: &Kernel| -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; ny]; nx];
        for x in 0..nx {
            for j in 0..nj {
                for z in 0..nz {
                    let r = (x * nj + j) * nz + z;
                    for h in 0..nyh {
                        out[x][(j * nz + z) * nyh + h] = t.data()[r] * k.get(r, h);
                    }
                }
            }
        }
        out
    };
    let scn = DiscreteScenario::from_rows(
        xy(&p, &params.p_yhat_given_xjz),
        xy(&q, &params.q_yhat_given_xjz),
        params.rate,
    )?;
    let pick = Kernel::deterministic(nx * ny, nz * nj, |xy| {
        let y = xy % ny;
        let (j, z) = (y / (nz * nyh), (y / nyh) % nz);
        z * nj + j
    });
    let aux = AuxiliaryReceiver::new(pick.clone(), pick)?;
    Ok((scn, aux))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{membership_R_check, MEMBERSHIP_TOL};
    use crate::prob::Axis;

    fn binary_params() -> CondIndepParams {
        let p_xjz = JointTable::new(
            vec![Axis::new("X", 2), Axis::new("J", 2), Axis::new("Z", 2)],
            vec![0.2, 0.1, 0.05, 0.15, 0.1, 0.1, 0.2, 0.1],
        )
        .unwrap();
        let p_yhat = Kernel::from_rows(vec![
            vec![0.9, 0.1],
            vec![0.3, 0.7],
            vec![0.6, 0.4],
            vec![0.2, 0.8],
            vec![0.7, 0.3],
            vec![0.5, 0.5],
            vec![0.8, 0.2],
            vec![0.1, 0.9],
        ])
        .unwrap();
        // Q_{Ŷ|Z} = P_{Ŷ|Z} so that the Ŷ-Z marginals agree
        let mut q = vec![[0.0; 2]; 2];
        let mut mz = [0.0; 2];
        for r in 0..8 {
            let z = r % 2;
            mz[z] += p_xjz.data()[r];
            for h in 0..2 {
                q[z][h] += p_xjz.data()[r] * p_yhat.get(r, h);
            }
        }
        let q_yz = Kernel::from_rows((0..2).map(|z| q[z].iter().map(|v| v / mz[z]).collect()).collect()).unwrap();
        CondIndepParams::from_channels(p_xjz, p_yhat, &q_yz, 0.2).unwrap()
    }

    #[test]
    fn construction_is_in_r() {
        let (scn, aux) = conditional_independence_scenario(&binary_params()).unwrap();
        assert_eq!(scn.ny(), 8);
        let r = membership_R_check(&scn, &aux, MEMBERSHIP_TOL).unwrap();
        assert!(r.holds);
        assert!(r.factorization_residual <= 1e-12 && r.second_residual <= 1e-12, "{r:?}");
    }

    #[test]
    fn violations_name_the_constraint() {
        let mut p = binary_params();
        p.q_yhat_given_xjz = p.p_yhat_given_xjz.clone();
        match conditional_independence_scenario(&p) {
            Err(Error::Constraint { constraint, .. }) => assert_eq!(constraint, "I_Q(Ŷ;XJ|Z) = 0"),
            other => panic!("{other:?}"),
        }
        let mut p = binary_params();
        let mut d = p.q_xjz.data().to_vec();
        d[0] += 0.01;
        d[1] -= 0.01;
        p.q_xjz = JointTable::new(p.q_xjz.axes().to_vec(), d).unwrap();
        match conditional_independence_scenario(&p) {
            Err(Error::Constraint { constraint, .. }) => assert_eq!(constraint, "P_XJZ = Q_XJZ"),
            other => panic!("{other:?}"),
        }
        let p = binary_params();
        let q_yz = Kernel::bsc(0.3).unwrap();
        let p = CondIndepParams::from_channels(p.p_xjz, p.p_yhat_given_xjz, &q_yz, 0.2).unwrap();
        match conditional_independence_scenario(&p) {
            Err(Error::Constraint { constraint, .. }) => assert_eq!(constraint, "P_ŶZ = Q_ŶZ"),
            other => panic!("{other:?}"),
        }
    }
}
