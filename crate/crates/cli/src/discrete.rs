//! Every requested bound on a scenario file, with ordering checks.

use dhtbound::bounds::{
    ac_lower_bound, addsub_upper_bound_warm, centralized_bound, chain_bound, corollary1_bound_warm, g_bound_warm,
    j_augmented_bound, rw_bound_warm, BoundResult,
};
use dhtbound::inner::{grid_scan, ChannelQuad, FSolver};
use dhtbound::optim::OptimizerConfig;
use dhtbound::prob::{Kernel, SimplexVector};
use dhtbound::ExtReal;
use rayon::prelude::*;

use crate::config::{RunConfig, Units};
use crate::error::{CliError, CliResult};
use crate::format::{sig, sig_ext};
use crate::scenario::{load_scenario, LoadedScenario};

/// Slack allowed in the ordering checks.
pub const ORDER_TOL: f64 = 1e-6;
/// Largest number of grid points one oracle scan may visit.
const ORACLE_GRID_BUDGET: f64 = 2e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    G,
    Addsub,
    Rw,
    Corollary1,
    Ac,
    Centralized,
    Chain,
    Jaug,
}

impl BoundKind {
    pub const ALL: [BoundKind; 8] = [
        BoundKind::G,
        BoundKind::Addsub,
        BoundKind::Rw,
        BoundKind::Corollary1,
        BoundKind::Ac,
        BoundKind::Centralized,
        BoundKind::Chain,
        BoundKind::Jaug,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::G => "g",
            BoundKind::Addsub => "addsub",
            BoundKind::Rw => "rw",
            BoundKind::Corollary1 => "corollary1",
            BoundKind::Ac => "ac",
            BoundKind::Centralized => "centralized",
            BoundKind::Chain => "chain",
            BoundKind::Jaug => "jaug",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| CliError::Validation(format!("unknown bound `{s}`")))
    }

    /// Kinds whose values bound the optimal exponent from above.
    pub fn is_upper(self) -> bool {
        matches!(
            self,
            BoundKind::Addsub | BoundKind::Rw | BoundKind::Corollary1 | BoundKind::Centralized | BoundKind::Chain | BoundKind::Jaug
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    /// The bound does not apply to this input, e.g. a receiver outside its class.
    Rejected,
}

/// One line of the discrete report. `label` is `g`, `rw`, ... or `min`/`best_upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRow {
    pub label: String,
    /// Receiver, chain or `J` entry name; `-` for scenario-wide bounds.
    pub target: String,
    pub value: Option<ExtReal>,
    pub status: RowStatus,
    pub min_rate_slack: Option<f64>,
    pub boundary_flag: bool,
    pub note: String,
}

impl DiscreteRow {
    fn from_result(kind: BoundKind, target: &str, r: dhtbound::Result<BoundResult>, op: &str) -> CliResult<(Self, Option<BoundResult>)> {
        match r {
            Ok(b) => Ok((
                DiscreteRow {
                    label: kind.as_str().into(),
                    target: target.into(),
                    value: Some(b.value),
                    status: RowStatus::Ok,
                    min_rate_slack: b.diagnostics.rate_slacks.iter().copied().reduce(f64::min),
                    boundary_flag: b.any_boundary_flag(),
                    note: b.diagnostics.notes.join("; "),
                },
                Some(b),
            )),
            Err(e) if e.is_input_error() => Ok((
                DiscreteRow {
                    label: kind.as_str().into(),
                    target: target.into(),
                    value: None,
                    status: RowStatus::Rejected,
                    min_rate_slack: None,
                    boundary_flag: false,
                    note: e.to_string(),
                },
                None,
            )),
            Err(e) => Err(CliError::eval(op, e)),
        }
    }

    fn summary(label: &str, target: &str, value: ExtReal, from: &str) -> Self {
        DiscreteRow {
            label: label.into(),
            target: target.into(),
            value: Some(value),
            status: RowStatus::Ok,
            min_rate_slack: None,
            boundary_flag: false,
            note: format!("from {from}"),
        }
    }
}

/// Outcome of one oracle comparison at a witness posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub target: String,
    pub u: usize,
    pub library: ExtReal,
    pub grid: ExtReal,
    pub grid_step: f64,
}

#[derive(Debug, Clone, Default)]
pub struct DiscreteReport {
    pub rows: Vec<DiscreteRow>,
    pub warnings: Vec<String>,
    pub oracle: Vec<OracleCheck>,
}

impl DiscreteReport {
    pub fn value(&self, label: &str, target: &str) -> Option<ExtReal> {
        self.rows
            .iter()
            .find(|r| r.label == label && r.target == target)
            .and_then(|r| r.value)
    }
}

struct AuxOutcome {
    rows: Vec<DiscreteRow>,
    g_results: Vec<(String, BoundResult, ChannelQuad)>,
}

fn wants(cfg: &RunConfig, k: BoundKind) -> bool {
    cfg.bounds.contains(&k)
}

fn evaluate_aux(loaded: &LoadedScenario, i: usize, cfg: &RunConfig, opt: &OptimizerConfig, warm: &[Kernel]) -> CliResult<AuxOutcome> {
    let scn = &loaded.scenario;
    let a = &loaded.aux[i];
    let mut rows = Vec::new();
    let mut g_results = Vec::new();
    let quad = ChannelQuad::new(
        scn.p_y_given_x().clone(),
        a.link.p_z_given_x.clone(),
        scn.q_y_given_x().clone(),
        a.link.q_z_given_x.clone(),
    )
    .map_err(|e| CliError::eval(format!("receiver `{}`", a.name), e))?;

    if wants(cfg, BoundKind::G) {
        let r = g_bound_warm(scn, &a.link.p_z_given_x, &a.link.q_z_given_x, opt, warm);
        let (row, b) = DiscreteRow::from_result(BoundKind::G, &a.name, r, &format!("g[{}]", a.name))?;
        rows.push(row);
        if let Some(b) = b {
            g_results.push((format!("g[{}]", a.name), b, quad.clone()));
        }
    }
    if wants(cfg, BoundKind::Addsub) {
        let r = addsub_upper_bound_warm(scn, &a.receiver, a.terminal, opt, warm);
        let (row, b) = DiscreteRow::from_result(BoundKind::Addsub, &a.name, r, &format!("addsub[{}]", a.name))?;
        rows.push(row);
        if let Some(b) = b {
            g_results.push((format!("addsub[{}]", a.name), b, quad.clone()));
        }
    }
    // corollary1 runs first and seeds rw, whose feasible set is larger
    let mut cor_witness = Vec::new();
    if wants(cfg, BoundKind::Corollary1) {
        let r = corollary1_bound_warm(scn, &a.receiver, opt, warm);
        let (row, b) = DiscreteRow::from_result(BoundKind::Corollary1, &a.name, r, &format!("corollary1[{}]", a.name))?;
        rows.push(row);
        if let Some(w) = b.and_then(|b| b.witness_u_channel) {
            cor_witness.push(w);
        }
    }
    if wants(cfg, BoundKind::Rw) {
        let mut w = warm.to_vec();
        w.extend(cor_witness);
        let r = rw_bound_warm(scn, &a.receiver, opt, &w);
        rows.push(DiscreteRow::from_result(BoundKind::Rw, &a.name, r, &format!("rw[{}]", a.name))?.0);
    }
    let best = rows
        .iter()
        .filter(|r| r.status == RowStatus::Ok && BoundKind::parse(&r.label).map(|k| k.is_upper()).unwrap_or(false))
        .filter_map(|r| r.value.map(|v| (v, r.label.clone())))
        .reduce(|a, b| if b.0 < a.0 { b } else { a });
    if let Some((v, from)) = best {
        rows.push(DiscreteRow::summary("min", &a.name, v, &from));
    }
    Ok(AuxOutcome { rows, g_results })
}

/// Grid spacing that keeps the composition count of an `n`-simplex under budget.
fn oracle_step(n: usize) -> f64 {
    let mut m = 1usize;
    // compositions of m into n parts: C(m + n - 1, n - 1)
    let count = |m: usize| -> f64 { (1..n).map(|k| (m + k) as f64 / k as f64).product() };
    while m < 2000 && count(m + 1) <= ORACLE_GRID_BUDGET {
        m += 1;
    }
    1.0 / m as f64
}

/// Compare the library's inner value at each used witness posterior with a
/// plain grid scan. Only `grid <= library + tol` is required: the grid is coarser.
fn oracle_checks(
    target: &str,
    b: &BoundResult,
    quad: &ChannelQuad,
    p_x: &SimplexVector,
    q_x: &SimplexVector,
    opt: &OptimizerConfig,
) -> CliResult<Vec<OracleCheck>> {
    let Some(w) = &b.witness_u_channel else {
        return Ok(Vec::new());
    };
    let op = |e| CliError::eval(format!("oracle {target}"), e);
    let solver = FSolver::new(quad, q_x, opt).map_err(op)?;
    let step = oracle_step(q_x.support().len());
    let mut out = Vec::new();
    for u in 0..w.cols() {
        let joint: Vec<f64> = (0..w.rows()).map(|x| p_x.as_slice()[x] * w.get(x, u)).collect();
        let pu: f64 = joint.iter().sum();
        if pu <= 1e-9 {
            continue;
        }
        let post = SimplexVector::new(joint.iter().map(|v| v / pu).collect()).map_err(op)?;
        let library = solver.solve(&post).map_err(op)?.value;
        let (grid, _) = grid_scan(&post, quad, q_x, step, opt.eta).map_err(op)?;
        out.push(OracleCheck {
            target: target.into(),
            u,
            library,
            grid,
            grid_step: step,
        });
    }
    Ok(out)
}

/// Evaluate the requested bounds on a loaded scenario.
pub fn evaluate(loaded: &LoadedScenario, cfg: &RunConfig) -> CliResult<DiscreteReport> {
    let scn = &loaded.scenario;
    let opt = cfg.optimizer();
    let mut report = DiscreteReport::default();

    let mut warm = Vec::new();
    if wants(cfg, BoundKind::Ac) {
        let (row, b) = DiscreteRow::from_result(BoundKind::Ac, "-", ac_lower_bound(scn, &opt), "ac")?;
        report.rows.push(row);
        if let Some(w) = b.and_then(|b| b.witness_u_channel) {
            warm.push(w);
        }
    }
    if wants(cfg, BoundKind::Centralized) {
        report.rows.push(DiscreteRow {
            label: "centralized".into(),
            target: "-".into(),
            value: Some(centralized_bound(scn)),
            status: RowStatus::Ok,
            min_rate_slack: None,
            boundary_flag: false,
            note: String::new(),
        });
    }

    let outcomes = (0..loaded.aux.len())
        .into_par_iter()
        .map(|i| evaluate_aux(loaded, i, cfg, &opt, &warm))
        .collect::<CliResult<Vec<_>>>()?;
    let mut g_results = Vec::new();
    for o in outcomes {
        report.rows.extend(o.rows);
        g_results.extend(o.g_results);
    }

    if wants(cfg, BoundKind::Chain) {
        for c in &loaded.chains {
            let r = chain_bound(scn, &c.links, c.terminal, &opt);
            report
                .rows
                .push(DiscreteRow::from_result(BoundKind::Chain, &c.name, r, &format!("chain[{}]", c.name))?.0);
        }
    }
    if wants(cfg, BoundKind::Jaug) {
        for j in &loaded.j_aug {
            let a = &loaded.aux[j.aux];
            let r = j_augmented_bound(scn, &a.receiver, &j.p_j, &j.q_j, j.terminal, &opt);
            report
                .rows
                .push(DiscreteRow::from_result(BoundKind::Jaug, &j.name, r, &format!("jaug[{}]", j.name))?.0);
        }
    }

    let uppers: Vec<(String, ExtReal)> = report
        .rows
        .iter()
        .filter(|r| r.status == RowStatus::Ok && BoundKind::parse(&r.label).map(|k| k.is_upper()).unwrap_or(false))
        .filter_map(|r| r.value.map(|v| (format!("{}[{}]", r.label, r.target), v)))
        .collect();
    if let Some((from, v)) = uppers.iter().cloned().reduce(|a, b| if b.1 < a.1 { b } else { a }) {
        report.rows.push(DiscreteRow::summary("best_upper", "-", v, &from));
    }

    if let Some(ac) = report.value("ac", "-") {
        for (name, v) in &uppers {
            if ac.to_f64() > v.to_f64() + ORDER_TOL {
                report
                    .warnings
                    .push(format!("lower bound ac = {} exceeds {name} = {}", sig_ext(ac), sig_ext(*v)));
            }
        }
    }
    for a in &loaded.aux {
        if let (Some(c), Some(r)) = (report.value("corollary1", &a.name), report.value("rw", &a.name)) {
            if c.to_f64() > r.to_f64() + ORDER_TOL {
                report.warnings.push(format!(
                    "corollary1[{}] = {} exceeds rw[{}] = {}",
                    a.name,
                    sig_ext(c),
                    a.name,
                    sig_ext(r)
                ));
            }
        }
    }

    if cfg.oracle {
        let checks = g_results
            .par_iter()
            .map(|(target, b, quad)| oracle_checks(target, b, quad, scn.p_x(), scn.q_x(), &opt))
            .collect::<CliResult<Vec<_>>>()?;
        report.oracle = checks.into_iter().flatten().collect();
        for c in &report.oracle {
            if c.grid.to_f64() > c.library.to_f64() + opt.oracle_tol {
                return Err(CliError::eval(
                    format!("oracle {}", c.target),
                    format!(
                        "grid scan found {} above the solver's {} at u = {}",
                        sig_ext(c.grid),
                        sig_ext(c.library),
                        c.u
                    ),
                ));
            }
        }
    }
    Ok(report)
}

pub fn run_discrete(cfg: &RunConfig) -> CliResult<(LoadedScenario, DiscreteReport)> {
    let path = cfg
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Validation("discrete mode needs --scenario".into()))?;
    let loaded = load_scenario(path)?;
    let report = evaluate(&loaded, cfg)?;
    Ok((loaded, report))
}

pub const CSV_COLUMNS: [&str; 7] = ["bound", "target", "value", "status", "min_rate_slack", "boundary_flag", "note"];

pub fn to_csv(report: &DiscreteReport, units: Units) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let out_err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(out_err)?;
    for r in &report.rows {
        w.write_record([
            r.label.clone(),
            r.target.clone(),
            r.value.map(|v| sig(units.convert(v.to_f64()))).unwrap_or_default(),
            match r.status {
                RowStatus::Ok => "ok".into(),
                RowStatus::Rejected => "rejected".into(),
            },
            r.min_rate_slack.map(sig).unwrap_or_default(),
            r.boundary_flag.to_string(),
            r.note.clone(),
        ])
        .map_err(out_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

/// Human-readable summary: validation facts, values, warnings, oracle results.
pub fn render_report(loaded: &LoadedScenario, report: &DiscreteReport, units: Units) -> String {
    let mut s = String::new();
    let v = loaded.report.kl_xy;
    s.push_str(&format!(
        "scenario: |X| = {}, |Y| = {}, R = {} nats, D(P_XY||Q_XY) = {} {}\n",
        loaded.scenario.nx(),
        loaded.scenario.ny(),
        sig(loaded.scenario.rate()),
        sig(units.convert(v.to_f64())),
        units.as_str()
    ));
    for a in &loaded.report.aux {
        s.push_str(&format!(
            "receiver {}: D(P_XZ||Q_XZ) = {} {}, in R: {}, in R~: {}, factorization residual {:.3e}, X-Z residual {:.3e}\n",
            a.name,
            sig(units.convert(a.kl_xz.to_f64())),
            units.as_str(),
            a.in_r,
            a.in_rtilde,
            a.factorization_residual,
            a.xz_residual
        ));
    }
    for r in &report.rows {
        let val = match (r.status, r.value) {
            (RowStatus::Ok, Some(v)) => sig(units.convert(v.to_f64())),
            _ => "rejected".into(),
        };
        s.push_str(&format!("{:<12} {:<10} {}", r.label, r.target, val));
        if r.boundary_flag {
            s.push_str("  [boundary]");
        }
        if !r.note.is_empty() {
            s.push_str(&format!("  ({})", r.note));
        }
        s.push('\n');
    }
    for w in &report.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    if !report.oracle.is_empty() {
        let worst = report
            .oracle
            .iter()
            .map(|c| c.grid.to_f64() - c.library.to_f64())
            .fold(f64::NEG_INFINITY, f64::max);
        s.push_str(&format!(
            "oracle: {} posteriors checked, largest grid - solver gap {:.3e} nats\n",
            report.oracle.len(),
            worst
        ));
    }
    s
}
