//! Closed-form Gaussian bounds over a parameter grid.

use dhtbound::gaussian::{centralized_gaussian, new_gaussian, rw_gaussian, GaussianScenario};
use rayon::prelude::*;

use crate::config::{Mode, RunConfig, SweepVar};
use crate::error::{CliError, CliResult};
use crate::format::sig;

/// One grid point, all values in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho0: f64,
    pub rho1: f64,
    pub rate: f64,
    pub rho: f64,
    pub rw: f64,
    pub new: f64,
    pub centralized: f64,
    pub active_branch: &'static str,
}

impl SweepRow {
    /// The centralized value is drawn off the plot when it exceeds twice the
    /// larger distributed bound.
    pub fn centralized_off_scale(&self) -> bool {
        self.centralized > 2.0 * self.rw.max(self.new)
    }
}

pub const BASE_COLUMNS: [&str; 9] = [
    "rho0",
    "rho1",
    "R",
    "rho",
    "rw_bound",
    "new_bound",
    "centralized",
    "active_branch",
    "centralized_off_scale",
];
pub const NORM_COLUMNS: [&str; 3] = ["rw_bound_norm", "new_bound_norm", "centralized_norm"];

fn require(v: Option<f64>, name: &str) -> CliResult<f64> {
    v.ok_or_else(|| CliError::Validation(format!("--{name} is required in this mode")))
}

/// Every `(rho0, rho1, R)` of the run, validated before any evaluation.
pub fn grid(cfg: &RunConfig) -> CliResult<Vec<GaussianScenario>> {
    let triples: Vec<(f64, f64, f64)> = match cfg.mode {
        Mode::GaussianPoint => vec![(require(cfg.rho0, "rho0")?, require(cfg.rho1, "rho1")?, require(cfg.rate, "rate")?)],
        Mode::GaussianSweep => {
            let s = cfg
                .sweep
                .as_ref()
                .ok_or_else(|| CliError::Validation("a sweep needs --rho0-range or a preset".into()))?;
            let pts = s.points()?;
            match s.variable {
                SweepVar::Rho0 => {
                    let (r1, r) = (require(cfg.rho1, "rho1")?, require(cfg.rate, "rate")?);
                    pts.into_iter().map(|v| (v, r1, r)).collect()
                }
                SweepVar::Rho1 => {
                    let (r0, r) = (require(cfg.rho0, "rho0")?, require(cfg.rate, "rate")?);
                    pts.into_iter().map(|v| (r0, v, r)).collect()
                }
                SweepVar::Rate => {
                    let (r0, r1) = (require(cfg.rho0, "rho0")?, require(cfg.rho1, "rho1")?);
                    pts.into_iter().map(|v| (r0, r1, v)).collect()
                }
            }
        }
        Mode::Discrete => return Err(CliError::Validation("not a Gaussian mode".into())),
    };
    triples
        .into_iter()
        .map(|(r0, r1, r)| {
            GaussianScenario::new(r0, r1, r)
                .map_err(|e| CliError::Validation(format!("(rho0={r0}, rho1={r1}, R={r}): {e}")))
        })
        .collect()
}

pub fn evaluate(scn: &GaussianScenario) -> CliResult<SweepRow> {
    let d = new_gaussian(scn);
    let centralized = centralized_gaussian(scn.rho0(), scn.rho1()).map_err(|e| CliError::eval("centralized", e))?;
    Ok(SweepRow {
        rho0: scn.rho0(),
        rho1: scn.rho1(),
        rate: scn.rate(),
        rho: d.rho,
        rw: rw_gaussian(scn),
        new: d.value,
        centralized,
        active_branch: d.active_branch.as_str(),
    })
}

/// Evaluate the grid in parallel; rows keep grid order.
pub fn run_gaussian(cfg: &RunConfig) -> CliResult<Vec<SweepRow>> {
    let g = grid(cfg)?;
    g.par_iter().map(evaluate).collect()
}

/// CSV text of the rows. Bound columns use `cfg.units`; `R` stays in nats.
pub fn to_csv(rows: &[SweepRow], cfg: &RunConfig) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = BASE_COLUMNS.to_vec();
    if cfg.normalize {
        header.extend(NORM_COLUMNS);
    }
    let out_err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(&header).map_err(out_err)?;
    let u = |v: f64| sig(cfg.units.convert(v));
    for r in rows {
        let mut rec = vec![
            sig(r.rho0),
            sig(r.rho1),
            sig(r.rate),
            sig(r.rho),
            u(r.rw),
            u(r.new),
            u(r.centralized),
            r.active_branch.to_string(),
            r.centralized_off_scale().to_string(),
        ];
        if cfg.normalize {
            let d2 = (r.rho0 - r.rho1).powi(2);
            rec.extend([u(r.rw / d2), u(r.new / d2), u(r.centralized / d2)]);
        }
        w.write_record(&rec).map_err(out_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}
