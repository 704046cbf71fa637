//! The scenario document: a TOML file holding the two joint laws, the rate,
//! and optional receivers, `J` augmentations and chains.
//!
//! ```toml
//! schema_version = 1
//! rate = 0.2
//! p_xy = [[0.45, 0.05], [0.1, 0.4]]
//! q_xy = [[0.25, 0.25], [0.25, 0.25]]
//!
//! [alphabets]
//! X = 2
//! Y = 2
//!
//! [[aux]]
//! name = "z1"
//! size = 2
//! terminal = "centralized"
//! p_z_given_x = [[0.7, 0.3], [0.3, 0.7]]
//! q_z_given_x = [[0.7, 0.3], [0.3, 0.7]]
//!
//! [[chain]]
//! name = "c1"
//! links = ["z1"]
//! ```
//!
//! A receiver gives either `p_z_given_xy`/`q_z_given_xy` (rows `x * |Y| + y`)
//! or `p_z_given_x`/`q_z_given_x`. A `J` entry names a receiver and gives
//! `p_j`/`q_j` with rows `(x * |Y| + y) * |Z| + z`.

use std::collections::HashSet;
use std::path::Path;

use dhtbound::bounds::{
    membership_R_check, membership_Rtilde_check, AuxiliaryReceiver, ChainLink, DiscreteScenario, TerminalBound,
    MEMBERSHIP_TOL,
};
use dhtbound::prob::{kl_divergence, Kernel, SimplexVector, NORM_TOL};
use dhtbound::ExtReal;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub rate: f64,
    pub p_xy: Rows,
    pub q_xy: Rows,
    pub alphabets: Alphabets,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aux: Vec<AuxSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub j_aug: Vec<JAugSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub chain: Vec<ChainSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alphabets {
    #[serde(rename = "X")]
    pub x: usize,
    #[serde(rename = "Y")]
    pub y: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminalSpec {
    #[default]
    Centralized,
    Zero,
}

impl TerminalSpec {
    pub fn bound(self) -> TerminalBound {
        match self {
            TerminalSpec::Centralized => TerminalBound::Centralized,
            TerminalSpec::Zero => TerminalBound::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxSpec {
    pub name: String,
    /// `|Z|`.
    pub size: usize,
    #[serde(default)]
    pub terminal: TerminalSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_z_given_xy: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_z_given_xy: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_z_given_x: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_z_given_x: Option<Rows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JAugSpec {
    pub name: String,
    pub aux: String,
    /// `|J|`.
    pub size: usize,
    #[serde(default)]
    pub terminal: TerminalSpec,
    pub p_j: Rows,
    pub q_j: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub name: String,
    pub links: Vec<String>,
    #[serde(default)]
    pub terminal: TerminalSpec,
}

/// What the loader found out about a valid scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub kl_xy: ExtReal,
    pub aux: Vec<AuxReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuxReport {
    pub name: String,
    pub kl_xz: ExtReal,
    pub in_r: bool,
    pub in_rtilde: bool,
    pub factorization_residual: f64,
    pub xz_residual: f64,
}

#[derive(Debug, Clone)]
pub struct NamedAux {
    pub name: String,
    pub receiver: AuxiliaryReceiver,
    pub link: ChainLink,
    pub terminal: TerminalBound,
}

#[derive(Debug, Clone)]
pub struct NamedJAug {
    pub name: String,
    pub aux: usize,
    pub p_j: Kernel,
    pub q_j: Kernel,
    pub terminal: TerminalBound,
}

#[derive(Debug, Clone)]
pub struct NamedChain {
    pub name: String,
    pub links: Vec<ChainLink>,
    pub terminal: TerminalBound,
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub file: ScenarioFile,
    pub scenario: DiscreteScenario,
    pub aux: Vec<NamedAux>,
    pub j_aug: Vec<NamedJAug>,
    pub chains: Vec<NamedChain>,
    pub report: ValidationReport,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn check_shape(table: &str, rows: &Rows, nrows: usize, ncols: usize) -> CliResult<()> {
    if rows.len() != nrows {
        return Err(invalid(format!("table `{table}` has {} rows, expected {nrows}", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(invalid(format!("table `{table}` row {i} has {} entries, expected {ncols}", r.len())));
        }
        if let Some(v) = r.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(format!("table `{table}` row {i} has invalid entry {v}")));
        }
    }
    Ok(())
}

/// Row-stochastic table: every row sums to one.
fn check_kernel(table: &str, rows: &Rows, nrows: usize, ncols: usize) -> CliResult<Kernel> {
    check_shape(table, rows, nrows, ncols)?;
    for (i, r) in rows.iter().enumerate() {
        let s: f64 = r.iter().sum();
        if (s - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("table `{table}` row {i} sums to {s}, expected 1")));
        }
    }
    Kernel::from_rows(rows.clone()).map_err(|e| invalid(format!("table `{table}`: {e}")))
}

/// Joint table: entries sum to one overall.
fn check_joint(table: &str, rows: &Rows, nrows: usize, ncols: usize) -> CliResult<()> {
    check_shape(table, rows, nrows, ncols)?;
    let s: f64 = rows.iter().flatten().sum();
    if (s - 1.0).abs() > NORM_TOL {
        return Err(invalid(format!("table `{table}` sums to {s}, expected 1")));
    }
    Ok(())
}

impl ScenarioFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| invalid(format!("scenario parse error: {e}")))
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Output(format!("scenario serialisation: {e}")))
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
    }

    /// Check every table and build the in-memory objects.
    pub fn validate(&self) -> CliResult<LoadedScenario> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let (nx, ny) = (self.alphabets.x, self.alphabets.y);
        check_joint("p_xy", &self.p_xy, nx, ny)?;
        check_joint("q_xy", &self.q_xy, nx, ny)?;
        let scenario = DiscreteScenario::from_rows(self.p_xy.clone(), self.q_xy.clone(), self.rate)
            .map_err(|e| invalid(format!("scenario: {e}")))?;

        let mut names = HashSet::new();
        let mut aux = Vec::new();
        let mut reports = Vec::new();
        for a in &self.aux {
            if !names.insert(a.name.as_str()) {
                return Err(invalid(format!("duplicate receiver name `{}`", a.name)));
            }
            let t = |field: &str| format!("aux.{}.{field}", a.name);
            let receiver = match (&a.p_z_given_xy, &a.q_z_given_xy, &a.p_z_given_x, &a.q_z_given_x) {
                (Some(p), Some(q), None, None) => {
                    let p = check_kernel(&t("p_z_given_xy"), p, nx * ny, a.size)?;
                    let q = check_kernel(&t("q_z_given_xy"), q, nx * ny, a.size)?;
                    AuxiliaryReceiver::new(p, q)
                }
                (None, None, Some(p), Some(q)) => {
                    let p = check_kernel(&t("p_z_given_x"), p, nx, a.size)?;
                    let q = check_kernel(&t("q_z_given_x"), q, nx, a.size)?;
                    AuxiliaryReceiver::from_x_kernels(&p, &q, ny)
                }
                _ => {
                    return Err(invalid(format!(
                        "receiver `{}` needs either p_z_given_xy and q_z_given_xy, or p_z_given_x and q_z_given_x",
                        a.name
                    )))
                }
            }
            .map_err(|e| invalid(format!("receiver `{}`: {e}", a.name)))?;
            let link = ChainLink::from_aux(&scenario, &receiver).map_err(|e| invalid(format!("receiver `{}`: {e}", a.name)))?;
            let r = membership_R_check(&scenario, &receiver, MEMBERSHIP_TOL)
                .map_err(|e| invalid(format!("receiver `{}`: {e}", a.name)))?;
            let rt = membership_Rtilde_check(&scenario, &receiver, MEMBERSHIP_TOL)
                .map_err(|e| invalid(format!("receiver `{}`: {e}", a.name)))?;
            reports.push(AuxReport {
                name: a.name.clone(),
                kl_xz: pair_kl(&scenario, &link)?,
                in_r: r.holds,
                in_rtilde: rt.holds,
                factorization_residual: r.factorization_residual,
                xz_residual: r.second_residual,
            });
            aux.push(NamedAux {
                name: a.name.clone(),
                receiver,
                link,
                terminal: a.terminal.bound(),
            });
        }
        let find = |name: &str, owner: &str| -> CliResult<usize> {
            aux.iter()
                .position(|a| a.name == name)
                .ok_or_else(|| invalid(format!("`{owner}` refers to unknown receiver `{name}`")))
        };

        let mut j_aug = Vec::new();
        for j in &self.j_aug {
            if !names.insert(j.name.as_str()) {
                return Err(invalid(format!("duplicate name `{}`", j.name)));
            }
            let idx = find(&j.aux, &j.name)?;
            let rows = nx * ny * self.aux[idx].size;
            j_aug.push(NamedJAug {
                name: j.name.clone(),
                aux: idx,
                p_j: check_kernel(&format!("j_aug.{}.p_j", j.name), &j.p_j, rows, j.size)?,
                q_j: check_kernel(&format!("j_aug.{}.q_j", j.name), &j.q_j, rows, j.size)?,
                terminal: j.terminal.bound(),
            });
        }

        let mut chains = Vec::new();
        for c in &self.chain {
            if !names.insert(c.name.as_str()) {
                return Err(invalid(format!("duplicate name `{}`", c.name)));
            }
            if c.links.is_empty() {
                return Err(invalid(format!("chain `{}` has no links", c.name)));
            }
            let links = c
                .links
                .iter()
                .map(|l| find(l, &c.name).map(|i| aux[i].link.clone()))
                .collect::<CliResult<Vec<_>>>()?;
            chains.push(NamedChain {
                name: c.name.clone(),
                links,
                terminal: c.terminal.bound(),
            });
        }

        let kl_xy = scenario.p_xy().kl(scenario.q_xy()).map_err(|e| invalid(e.to_string()))?;
        Ok(LoadedScenario {
            file: self.clone(),
            scenario,
            aux,
            j_aug,
            chains,
            report: ValidationReport { kl_xy, aux: reports },
        })
    }
}

fn pair_kl(scn: &DiscreteScenario, link: &ChainLink) -> CliResult<ExtReal> {
    let joint = |px: &[f64], k: &Kernel| {
        let v = px
            .iter()
            .enumerate()
            .flat_map(|(x, &p)| k.row(x).iter().map(move |&v| p * v))
            .collect();
        SimplexVector::new(v).map_err(|e| invalid(e.to_string()))
    };
    kl_divergence(
        &joint(scn.p_x().as_slice(), &link.p_z_given_x)?,
        &joint(scn.q_x().as_slice(), &link.q_z_given_x)?,
    )
    .map_err(|e| invalid(e.to_string()))
}

/// Read, parse and validate a scenario file.
pub fn load_scenario(path: &Path) -> CliResult<LoadedScenario> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    ScenarioFile::parse(&text)?.validate()
}
