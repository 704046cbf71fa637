//! Single-letter bounds on the type-II exponent for finite alphabets.
//!
//! Every optimised bound is a maximisation over a test channel `P_{U|X}` with
//! `|U| = |X| + 2`, driven by [`crate::optim::maximize_channel`]. The `_warm`
//! variants accept channels from earlier evaluations as extra starting points;
//! a warm channel is always evaluated as given (after the feasibility
//! projection), so the result is never below its value.
//!
//! | Bound | Direction | Needs |
//! |-------|-----------|-------|
//! | [`centralized_bound`] | upper | nothing |
//! | [`addsub_upper_bound`] | upper | finite `D(P_XY‖Q_XY)`, `D(P_XZ‖Q_XZ)` |
//! | [`rw_bound`], [`corollary1_bound`] | upper | aux receiver passing [`membership_R_check`] |
//! | [`chain_bound`], [`j_augmented_bound`] | upper | finiteness on every link |
//! | [`ac_lower_bound`] | lower | nothing |
//!
//! Under a receiver in `R̃` (see [`membership_Rtilde_check`]) the matching
//! bound has the same form as [`corollary1_bound`]; no separate evaluator
//! is provided.

mod example;
mod lower;
mod membership;
mod problems;
mod upper;

pub use example::{conditional_independence_scenario, CondIndepParams};
pub use lower::{ac_lower_bound, ac_lower_bound_warm, ac_value_from_witness, centralized_bound};
pub use membership::{membership_R_check, membership_Rtilde_check, MembershipReport};
pub use upper::{
    addsub_upper_bound, addsub_upper_bound_warm, chain_bound, corollary1_bound, corollary1_bound_warm,
    g_bound, g_bound_warm, g_general, g_value_from_witness, j_augmented_bound, rw_bound, rw_bound_warm,
    rw_value_from_witness, ChainLink,
};

use crate::optim::OptimizerTrace;
use crate::prob::{kl_slices, JointTable, Kernel, SimplexVector};
use crate::{Error, ExtReal, Result};

/// Tolerance for the equalities that define receiver membership and the
/// zero terminal.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// A testing problem: `P_XY` against `Q_XY` over a link of `rate` nats.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteScenario {
    p_xy: JointTable,
    q_xy: JointTable,
    rate: f64,
    p_x: SimplexVector,
    q_x: SimplexVector,
    p_y_given_x: Kernel,
    q_y_given_x: Kernel,
}

impl DiscreteScenario {
    /// Both tables need two axes of matching sizes; they are renamed `X`, `Y`.
    pub fn new(p_xy: JointTable, q_xy: JointTable, rate: f64) -> Result<Self> {
        let shape = |t: &JointTable| t.axes().iter().map(|a| a.size).collect::<Vec<_>>();
        if p_xy.axes().len() != 2 {
            return Err(Error::dim("P_XY axes", 2, p_xy.axes().len()));
        }
        if shape(&p_xy) != shape(&q_xy) {
            return Err(Error::Input(format!(
                "P_XY has shape {:?} but Q_XY has shape {:?}",
                shape(&p_xy),
                shape(&q_xy)
            )));
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::Input(format!("rate must be finite and non-negative, got {rate}")));
        }
        let canon = |t: &JointTable| -> Result<JointTable> {
            let (a, b) = (t.axes()[0].clone(), t.axes()[1].clone());
            JointTable::new(
                vec![crate::prob::Axis::new("X", a.size), crate::prob::Axis::new("Y", b.size)],
                t.data().to_vec(),
            )
        };
        let p_xy = canon(&p_xy)?;
        let q_xy = canon(&q_xy)?;
        let p_x = p_xy.marginal(&["X"])?.as_simplex();
        let q_x = q_xy.marginal(&["X"])?.as_simplex();
        let p_y_given_x = p_xy.condition(&["X"])?.kernel;
        let q_y_given_x = q_xy.condition(&["X"])?.kernel;
        Ok(DiscreteScenario {
            p_xy,
            q_xy,
            rate,
            p_x,
            q_x,
            p_y_given_x,
            q_y_given_x,
        })
    }

    pub fn from_rows(p_rows: Vec<Vec<f64>>, q_rows: Vec<Vec<f64>>, rate: f64) -> Result<Self> {
        DiscreteScenario::new(
            JointTable::from_rows("X", "Y", p_rows)?,
            JointTable::from_rows("X", "Y", q_rows)?,
            rate,
        )
    }

    pub fn with_rate(&self, rate: f64) -> Result<Self> {
        DiscreteScenario::new(self.p_xy.clone(), self.q_xy.clone(), rate)
    }

    pub fn p_xy(&self) -> &JointTable {
        &self.p_xy
    }

    pub fn q_xy(&self) -> &JointTable {
        &self.q_xy
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn nx(&self) -> usize {
        self.p_x.len()
    }

    pub fn ny(&self) -> usize {
        self.p_y_given_x.cols()
    }

    pub fn p_x(&self) -> &SimplexVector {
        &self.p_x
    }

    pub fn q_x(&self) -> &SimplexVector {
        &self.q_x
    }

    pub fn p_y_given_x(&self) -> &Kernel {
        &self.p_y_given_x
    }

    pub fn q_y_given_x(&self) -> &Kernel {
        &self.q_y_given_x
    }

    /// Test-channel output size used by every optimised bound.
    pub fn u_size(&self) -> usize {
        self.nx() + 2
    }
}

/// A candidate auxiliary receiver `(P_{Z|XY}, Q_{Z|XY})`; rows are indexed by
/// `x * |Y| + y`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryReceiver {
    pub p_z_given_xy: Kernel,
    pub q_z_given_xy: Kernel,
}

impl AuxiliaryReceiver {
    pub fn new(p_z_given_xy: Kernel, q_z_given_xy: Kernel) -> Result<Self> {
        if p_z_given_xy.rows() != q_z_given_xy.rows() || p_z_given_xy.cols() != q_z_given_xy.cols() {
            return Err(Error::Input(format!(
                "auxiliary kernels differ in shape: {}x{} vs {}x{}",
                p_z_given_xy.rows(),
                p_z_given_xy.cols(),
                q_z_given_xy.rows(),
                q_z_given_xy.cols()
            )));
        }
        Ok(AuxiliaryReceiver {
            p_z_given_xy,
            q_z_given_xy,
        })
    }

    /// A receiver that sees only `X` (through the given per-`x` kernels).
    pub fn from_x_kernels(p_z_given_x: &Kernel, q_z_given_x: &Kernel, ny: usize) -> Result<Self> {
        let lift = |k: &Kernel| {
            let mut data = Vec::with_capacity(k.rows() * ny * k.cols());
            for x in 0..k.rows() {
                for _ in 0..ny {
                    data.extend_from_slice(k.row(x));
                }
            }
            Kernel::from_data_unchecked(k.rows() * ny, k.cols(), data)
        };
        AuxiliaryReceiver::new(lift(p_z_given_x), lift(q_z_given_x))
    }

    /// A copy of `Y` under both hypotheses.
    pub fn copy_of_y(nx: usize, ny: usize) -> Self {
        let k = Kernel::deterministic(nx * ny, ny, |xy| xy % ny);
        AuxiliaryReceiver {
            p_z_given_xy: k.clone(),
            q_z_given_xy: k,
        }
    }

    pub fn nz(&self) -> usize {
        self.p_z_given_xy.cols()
    }

    pub(crate) fn check(&self, scn: &DiscreteScenario) -> Result<()> {
        let rows = scn.nx() * scn.ny();
        if self.p_z_given_xy.rows() != rows {
            return Err(Error::dim("auxiliary kernel rows (|X||Y|)", rows, self.p_z_given_xy.rows()));
        }
        Ok(())
    }
}

/// Joints and channels induced by a scenario and a receiver.
#[derive(Debug, Clone)]
pub(crate) struct Induced {
    /// `P_{XYZ}` and `Q_{XYZ}`, row-major in `(x, y, z)`.
    pub p_xyz: Vec<f64>,
    pub q_xyz: Vec<f64>,
    pub p_z_given_x: Kernel,
    pub q_z_given_x: Kernel,
    /// `P_{YZ|X}` with columns `y * |Z| + z`.
    pub p_yz_given_x: Kernel,
    pub q_yz_given_x: Kernel,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Induced {
    pub fn new(scn: &DiscreteScenario, aux: &AuxiliaryReceiver) -> Result<Self> {
        aux.check(scn)?;
        let (nx, ny, nz) = (scn.nx(), scn.ny(), aux.nz());
        let joint = |pxy: &[f64], k: &Kernel| -> Vec<f64> {
            let mut out = vec![0.0; nx * ny * nz];
            for xy in 0..nx * ny {
                for z in 0..nz {
                    out[xy * nz + z] = pxy[xy] * k.get(xy, z);
                }
            }
            out
        };
        let yz_given_x = |ky: &Kernel, kz: &Kernel| -> Kernel {
            let mut data = vec![0.0; nx * ny * nz];
            for x in 0..nx {
                for y in 0..ny {
                    for z in 0..nz {
                        data[(x * ny + y) * nz + z] = ky.get(x, y) * kz.get(x * ny + y, z);
                    }
                }
            }
            Kernel::from_data_unchecked(nx, ny * nz, data)
        };
        let z_given_x = |kyz: &Kernel| -> Kernel {
            let mut data = vec![0.0; nx * nz];
            for x in 0..nx {
                for y in 0..ny {
                    for z in 0..nz {
                        data[x * nz + z] += kyz.get(x, y * nz + z);
                    }
                }
            }
            Kernel::from_data_unchecked(nx, nz, data)
        };
        let p_yz_given_x = yz_given_x(&scn.p_y_given_x, &aux.p_z_given_xy);
        let q_yz_given_x = yz_given_x(&scn.q_y_given_x, &aux.q_z_given_xy);
        Ok(Induced {
            p_xyz: joint(scn.p_xy.data(), &aux.p_z_given_xy),
            q_xyz: joint(scn.q_xy.data(), &aux.q_z_given_xy),
            p_z_given_x: z_given_x(&p_yz_given_x),
            q_z_given_x: z_given_x(&q_yz_given_x),
            p_yz_given_x,
            q_yz_given_x,
            nx,
            ny,
            nz,
        })
    }

    /// Marginal over the axes flagged in `keep = (x, y, z)`, row-major.
    pub fn marginal(&self, joint: &[f64], keep: (bool, bool, bool)) -> Vec<f64> {
        let size = |k: bool, n: usize| if k { n } else { 1 };
        let (sx, sy, sz) = (size(keep.0, self.nx), size(keep.1, self.ny), size(keep.2, self.nz));
        let mut out = vec![0.0; sx * sy * sz];
        for x in 0..self.nx {
            for y in 0..self.ny {
                for z in 0..self.nz {
                    let (ix, iy, iz) = (
                        if keep.0 { x } else { 0 },
                        if keep.1 { y } else { 0 },
                        if keep.2 { z } else { 0 },
                    );
                    out[(ix * sy + iy) * sz + iz] += joint[(x * self.ny + y) * self.nz + z];
                }
            }
        }
        out
    }

    pub fn kl_yz(&self) -> ExtReal {
        let k = (false, true, true);
        kl_slices(&self.marginal(&self.p_xyz, k), &self.marginal(&self.q_xyz, k))
    }
}

/// Terminal exponent bound on the pair `(X, Z)` added after the `G` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalBound {
    /// `D(P_XZ ‖ Q_XZ)`.
    Centralized,
    /// Zero; valid only when `P_XZ = Q_XZ`.
    Zero,
    /// A caller-supplied bound.
    Value(ExtReal),
}

impl TerminalBound {
    /// Evaluate on the `(X, Z)` joints, row-major.
    pub(crate) fn evaluate(&self, p_xz: &[f64], q_xz: &[f64]) -> Result<ExtReal> {
        match *self {
            TerminalBound::Centralized => Ok(kl_slices(p_xz, q_xz)),
            TerminalBound::Zero => {
                let r = crate::prob::max_abs_diff(p_xz, q_xz);
                if r > MEMBERSHIP_TOL {
                    return Err(Error::Input(format!(
                        "zero terminal requires P_XZ = Q_XZ, residual {r:.3e}"
                    )));
                }
                Ok(ExtReal::ZERO)
            }
            TerminalBound::Value(v) => Ok(v),
        }
    }
}

/// Evaluation details attached to every [`BoundResult`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// `R - r_i` for each rate functional at the witness.
    pub rate_slacks: Vec<f64>,
    pub trace: Option<OptimizerTrace>,
    /// Per-`u` boundary flags of the inner problem.
    pub boundary_flags: Vec<bool>,
    pub notes: Vec<String>,
    /// Named additive parts of the value.
    pub components: Vec<(String, ExtReal)>,
}

/// A bound value in nats together with what produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub value: ExtReal,
    /// `P_{U|X}`, `|X|` rows.
    pub witness_u_channel: Option<Kernel>,
    pub witness_qhat_per_u: Option<Vec<SimplexVector>>,
    pub diagnostics: Diagnostics,
}

impl BoundResult {
    pub(crate) fn plain(value: ExtReal) -> Self {
        BoundResult {
            value,
            witness_u_channel: None,
            witness_qhat_per_u: None,
            diagnostics: Diagnostics::default(),
        }
    }

    /// Value of a named component, if recorded.
    pub fn component(&self, name: &str) -> Option<ExtReal> {
        self.diagnostics.components.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn any_boundary_flag(&self) -> bool {
        self.diagnostics.boundary_flags.iter().any(|&b| b)
    }
}

pub(crate) fn require_finite(v: ExtReal, what: &str) -> Result<f64> {
    v.finite()
        .ok_or_else(|| Error::Input(format!("{what} must be finite, got {v}")))
}

/// Kernel from a raw row-major channel; rows are re-normalised against drift.
pub(crate) fn channel_kernel(w: &[f64], nx: usize, nu: usize) -> Kernel {
    let mut data = w.to_vec();
    for row in data.chunks_mut(nu) {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    Kernel::from_data_unchecked(nx, nu, data)
}

pub(crate) fn warm_channels(warm: &[Kernel], nx: usize, nu: usize) -> Result<Vec<Vec<f64>>> {
    warm.iter()
        .map(|k| {
            if k.rows() != nx || k.cols() != nu {
                Err(Error::dim("warm-start channel", nx * nu, k.rows() * k.cols()))
            } else {
                Ok(k.as_slice().to_vec())
            }
        })
        .collect()
}
