//! Closed forms for the bivariate Gaussian pair.
//!
//! Under both hypotheses `(X, Y)` is a standard bivariate normal pair, with
//! correlation `rho0` under the null and `rho1` under the alternative. The
//! formulas hold on the region `0 <= rho1 < rho0 < 1`, where the optimal
//! auxiliary is jointly Gaussian with `X`; only that region is accepted.
//!
//! The auxiliary receiver splits `Y` into a common Gaussian component with
//! correlation `rho1` and a residual with effective correlation
//! `rho = (rho0 - rho1) / (1 - rho1)`. A test channel leaving `X` with
//! conditional variance `sigma^2` then costs [`rate_mi_sigma`] and earns
//! [`exponent_from_sigma`].

use crate::{Error, Result};

/// Parameters `(rho0, rho1, R)` with `0 <= rho1 < rho0 < 1` and `R >= 0` nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianScenario {
    rho0: f64,
    rho1: f64,
    rate: f64,
}

impl GaussianScenario {
    pub fn new(rho0: f64, rho1: f64, rate: f64) -> Result<Self> {
        check_region(rho0, rho1)?;
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::Input(format!("rate must be finite and non-negative, got {rate}")));
        }
        Ok(GaussianScenario { rho0, rho1, rate })
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Effective correlation of the residual after removing the common part.
    pub fn rho(&self) -> f64 {
        (self.rho0 - self.rho1) / (1.0 - self.rho1)
    }
}

fn check_region(rho0: f64, rho1: f64) -> Result<()> {
    if !(0.0 <= rho1 && rho1 < rho0 && rho0 < 1.0) {
        return Err(Error::Region(format!(
            "need 0 <= rho1 < rho0 < 1, got rho0 = {rho0}, rho1 = {rho1}"
        )));
    }
    Ok(())
}

/// `(rho0 - rho1) / (1 - rho1)`.
pub fn effective_rho(rho0: f64, rho1: f64) -> Result<f64> {
    check_region(rho0, rho1)?;
    Ok((rho0 - rho1) / (1.0 - rho1))
}

/// Constraint that attains the maximum in [`sigma_hat_sq`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingConstraint {
    /// `I(X;U|Z) = R`.
    Z,
    /// `I(X;U|Y) = R`.
    Y,
}

/// Which of the two closed forms attains the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveBranch {
    New,
    Rw,
}

impl ActiveBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            ActiveBranch::New => "new",
            ActiveBranch::Rw => "rw",
        }
    }
}

/// `½ ln(1 / (1 - rho^2 + rho^2 e^{-2R}))`.
pub fn rw_gaussian(scn: &GaussianScenario) -> f64 {
    let r2 = scn.rho().powi(2);
    -0.5 * (1.0 - r2 + r2 * (-2.0 * scn.rate).exp()).ln()
}

/// `(1 - a) / (e^{2R} - a)`, the conditional variance at which a rate
/// constraint with correlation parameter `a` is tight.
fn tight_variance(a: f64, e2r: f64) -> f64 {
    if e2r == 1.0 {
        return 1.0;
    }
    (1.0 - a) / (e2r - a)
}

/// Largest conditional variance `sigma^2` of `X` given `U` meeting both rate
/// constraints, and the constraint that binds there.
pub fn sigma_hat_sq(scn: &GaussianScenario) -> (f64, BindingConstraint) {
    let e2r = (2.0 * scn.rate).exp();
    let via_z = tight_variance(scn.rho1, e2r);
    let via_y = tight_variance(scn.rho0 * scn.rho0, e2r);
    if via_z >= via_y {
        (via_z, BindingConstraint::Z)
    } else {
        (via_y, BindingConstraint::Y)
    }
}

/// `½ ln[(rho1 s + 1 - rho1) / (rho^2 s + (1 - rho^2)(rho1 s + 1 - rho1))]`
/// at `s = sigma_sq`.
pub fn exponent_from_sigma(scn: &GaussianScenario, sigma_sq: f64) -> Result<f64> {
    check_sigma(sigma_sq)?;
    let r2 = scn.rho().powi(2);
    let common = scn.rho1 * sigma_sq + 1.0 - scn.rho1;
    Ok(0.5 * (common / (r2 * sigma_sq + (1.0 - r2) * common)).ln())
}

fn check_sigma(sigma_sq: f64) -> Result<()> {
    if !(sigma_sq > 0.0 && sigma_sq <= 1.0) {
        return Err(Error::Input(format!("sigma^2 must lie in (0, 1], got {sigma_sq}")));
    }
    Ok(())
}

/// `(I(X;U|Z), I(X;U|Y))` for a Gaussian test channel with conditional
/// variance `sigma_sq`.
pub fn rate_mi_sigma(scn: &GaussianScenario, sigma_sq: f64) -> Result<(f64, f64)> {
    check_sigma(sigma_sq)?;
    let r02 = scn.rho0 * scn.rho0;
    let i_xz = 0.5 * ((scn.rho1 * sigma_sq + 1.0 - scn.rho1) / sigma_sq).ln();
    let i_xy = 0.5 * ((r02 * sigma_sq + 1.0 - r02) / sigma_sq).ln();
    Ok((i_xz, i_xy))
}

/// Every intermediate of the add-and-subtract Gaussian bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBoundDetail {
    pub rho: f64,
    pub delta: f64,
    pub sigma_hat_sq: f64,
    pub binding: BindingConstraint,
    pub term_new: f64,
    pub term_rw: f64,
    /// `min(term_new, term_rw)`.
    pub value: f64,
    pub active_branch: ActiveBranch,
}

/// `½ ln min{1/(1 - rho^2 + rho^2 Delta), 1/(1 - rho^2 + rho^2 e^{-2R})}` with
/// `Delta = (1-rho)(1+rho0) / ((e^{2R}-1) + (1-rho)(1+rho0))`.
pub fn new_gaussian(scn: &GaussianScenario) -> GaussianBoundDetail {
    let rho = scn.rho();
    let r2 = rho * rho;
    let e2r = (2.0 * scn.rate).exp();
    let k = (1.0 - rho) * (1.0 + scn.rho0);
    let delta = k / ((e2r - 1.0) + k);
    let term_new = -0.5 * (1.0 - r2 + r2 * delta).ln();
    let term_rw = rw_gaussian(scn);
    let (active_branch, value) = if term_new < term_rw {
        (ActiveBranch::New, term_new)
    } else {
        (ActiveBranch::Rw, term_rw)
    };
    let (sigma_hat_sq, binding) = sigma_hat_sq(scn);
    GaussianBoundDetail {
        rho,
        delta,
        sigma_hat_sq,
        binding,
        term_new,
        term_rw,
        value,
        active_branch,
    }
}

/// `D(N(0, K_0) ‖ N(0, K_1))` for unit-variance pairs with correlations
/// `rho0`, `rho1`.
pub fn centralized_gaussian(rho0: f64, rho1: f64) -> Result<f64> {
    for r in [rho0, rho1] {
        if !(r.abs() < 1.0) {
            return Err(Error::Input(format!("correlation must satisfy |rho| < 1, got {r}")));
        }
    }
    let q = 1.0 - rho1 * rho1;
    Ok((1.0 - rho0 * rho1) / q - 1.0 + 0.5 * (q / (1.0 - rho0 * rho0)).ln())
}
