//! Whitespace-delimited data files for external plotting tools.

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotStyle {
    Raw,
    /// Values divided by `(rho0 - rho1)^2`.
    Normalized,
}

/// Turn sweep CSV text into five columns `rho0 rho rw new centralized`, with
/// `#` header lines carrying the configuration and the column names.
pub fn emit_plot_data(csv_text: &str, style: PlotStyle, config: &[String]) -> CliResult<String> {
    let mut rd = csv::Reader::from_reader(csv_text.as_bytes());
    let header = rd.headers().map_err(|e| CliError::Output(e.to_string()))?.clone();
    let wanted: [&str; 5] = match style {
        PlotStyle::Raw => ["rho0", "rho", "rw_bound", "new_bound", "centralized"],
        PlotStyle::Normalized => ["rho0", "rho", "rw_bound_norm", "new_bound_norm", "centralized_norm"],
    };
    let idx = wanted
        .iter()
        .map(|w| {
            header
                .iter()
                .position(|h| h == *w)
                .ok_or_else(|| CliError::Output(format!("sweep data has no `{w}` column")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = String::new();
    for line in config {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str(&format!("# {}\n", wanted.join(" ")));
    let mut n = 0;
    for rec in rd.records() {
        let rec = rec.map_err(|e| CliError::Output(e.to_string()))?;
        let cells: Vec<&str> = idx.iter().map(|&i| rec.get(i).unwrap_or("nan")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
        n += 1;
    }
    if n == 0 {
        return Err(CliError::Output("no sweep rows to plot".into()));
    }
    Ok(out)
}
