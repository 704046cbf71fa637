//! Command-line front end: Gaussian sweeps, discrete scenario files, data files for plotting.

pub mod config;
pub mod discrete;
pub mod error;
pub mod format;
pub mod plot;
pub mod scenario;
pub mod sweep;

use std::io::Write;
use std::path::Path;

pub use config::{Cli, Mode, RunConfig, Units};
pub use error::{CliError, CliResult};

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Output(e.to_string()))
}

/// Execute a run. CSV goes to `cfg.out` or else `stdout`; the discrete
/// report goes to `report`.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write, report: &mut dyn Write) -> CliResult<()> {
    match cfg.mode {
        Mode::GaussianSweep | Mode::GaussianPoint => {
            let rows = sweep::run_gaussian(cfg)?;
            let csv = sweep::to_csv(&rows, cfg)?;
            match &cfg.out {
                Some(p) => write_file(p, &csv)?,
                None => emit(stdout, &csv)?,
            }
            if let Some(p) = &cfg.plot_out {
                let style = if cfg.normalize { plot::PlotStyle::Normalized } else { plot::PlotStyle::Raw };
                write_file(p, &plot::emit_plot_data(&csv, style, &[cfg.describe()])?)?;
            }
        }
        Mode::Discrete => {
            if cfg.plot_out.is_some() {
                return Err(CliError::Validation("--plot-out applies to Gaussian sweeps only".into()));
            }
            let (loaded, rep) = discrete::run_discrete(cfg)?;
            emit(report, &discrete::render_report(&loaded, &rep, cfg.units))?;
            let csv = discrete::to_csv(&rep, cfg.units)?;
            match &cfg.out {
                Some(p) => write_file(p, &csv)?,
                None => emit(stdout, &csv)?,
            }
        }
    }
    Ok(())
}
