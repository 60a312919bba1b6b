//! Command implementations behind the `delaysync` binary: scenario files,
//! result bundles, plotting scripts and exit codes.

pub mod bundle;
pub mod file;
pub mod plot;

use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

use crate::engine::{
    certificate_sweep, delayed_sync_errors, simulate, uniform_grid, CertificateReport, Scenario,
    DEFAULT_GRID,
};
use crate::error::{Error, Result};
use crate::numerics::spectral_radius;

use bundle::{sha256_hex, CertificateSummary, Manifest};
use file::{GainsBlock, ScenarioFile};

/// Margin used by the certificate included in every run bundle.
pub const RUN_CERTIFICATE_MARGIN: f64 = 1e-3;

/// Environment variable holding the log filter (`error`, `info`, `debug`, ...).
pub const LOG_ENV: &str = "DELAYSYNC_LOG";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Io = 1,
    Usage = 2,
    Parse = 3,
    Validation = 4,
    Divergence = 5,
    /// Ran to completion without meeting the tolerance, or the certificate
    /// failed.
    Failure = 6,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

pub fn exit_status(e: &Error) -> ExitStatus {
    match e {
        Error::Io { .. } => ExitStatus::Io,
        Error::Usage(_) => ExitStatus::Usage,
        Error::Parse { .. } => ExitStatus::Parse,
        Error::Divergence { .. } => ExitStatus::Divergence,
        _ => ExitStatus::Validation,
    }
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Command-line overrides of the scenario's run block.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOverrides {
    pub horizon: Option<usize>,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
}

impl RunOverrides {
    fn apply(&self, f: &mut ScenarioFile) -> Result<()> {
        if let Some(h) = self.horizon {
            if h == 0 {
                return Err(Error::Usage("--horizon must be at least 1".to_string()));
            }
            f.run.horizon = h;
        }
        if let Some(t) = self.tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Usage(format!("--tol must be positive, got {}", t)));
            }
            f.run.tolerance = t;
        }
        if let Some(s) = self.seed {
            f.run.seed = s;
        }
        Ok(())
    }
}

/// Reads a scenario file, applies overrides and builds the scenario.
pub fn load(path: &Path, overrides: &RunOverrides) -> Result<(ScenarioFile, Scenario)> {
    let mut f = ScenarioFile::read(path)?;
    overrides.apply(&mut f)?;
    let s = f.to_scenario(&path.display().to_string())?;
    Ok((f, s))
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl RunOutcome {
    pub fn status(&self) -> ExitStatus {
        if self.manifest.converged {
            ExitStatus::Success
        } else {
            ExitStatus::Failure
        }
    }
}

/// Simulates a scenario and writes its result bundle to `out`.
pub fn cmd_run(path: &Path, out: &Path, overrides: &RunOverrides) -> Result<RunOutcome> {
    let (f, s) = load(path, overrides)?;
    run_scenario(&f, &s, out)
}

/// Bundle for an already parsed scenario; `f` must describe `s`.
pub fn run_scenario(f: &ScenarioFile, s: &Scenario, out: &Path) -> Result<RunOutcome> {
    let p = s.prepare()?;
    info!("running {} for {} steps", p.name, p.settings.horizon);
    let r = simulate(&p)?;
    let errors = delayed_sync_errors(&r, &p.network);
    let cert = certificate_sweep(&p, &uniform_grid(DEFAULT_GRID), RUN_CERTIFICATE_MARGIN)?;
    let files = bundle::write_csvs(out, &r, &errors, &cert)?;

    let final_error = errors.final_max();
    let converged = final_error < p.settings.tolerance;
    let mut rows: Vec<(usize, usize)> = r
        .labels
        .iter()
        .zip(&r.cumulative_delays)
        .map(|(&l, &d)| (l + 1, d))
        .collect();
    rows.sort();
    let scenario = f.to_toml()?;
    let manifest = Manifest {
        name: p.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        variant: p.variant,
        seed: p.settings.seed,
        horizon: p.settings.horizon,
        tolerance: p.settings.tolerance,
        labels: rows.iter().map(|r| r.0).collect(),
        cumulative_delays: rows.iter().map(|r| r.1).collect(),
        output_width: p.exosystem.c.rows(),
        final_error,
        converged,
        certificate: CertificateSummary {
            grid: cert.points.len(),
            margin: cert.margin,
            min_distance: cert.min_distance,
            zero_delay_radius: cert.zero_delay_radius,
            passed: cert.passed,
        },
        scenario_sha256: sha256_hex(scenario.as_bytes()),
        scenario,
        files,
    };
    bundle::write_manifest(out, &manifest)?;
    info!("final error {:e}, converged: {}", final_error, converged);
    Ok(RunOutcome {
        dir: out.to_path_buf(),
        manifest,
    })
}

/// Frequency sweep of the scenario's closed loop on `grid` uniform points.
pub fn cmd_certify(path: &Path, grid: usize, margin: f64) -> Result<CertificateReport> {
    if grid == 0 {
        return Err(Error::Usage("--grid must be at least 1".to_string()));
    }
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(Error::Usage(format!("--margin must be non-negative, got {}", margin)));
    }
    let (_, s) = load(path, &RunOverrides::default())?;
    let p = s.prepare()?;
    certificate_sweep(&p, &uniform_grid(grid), margin)
}

pub fn cmd_plot(dir: &Path) -> Result<PathBuf> {
    plot::write_plot_script(dir)
}

#[derive(Serialize)]
struct GainsDocument {
    gains: GainsBlock,
}

/// Gains the scenario would run with, as a `[gains]` section.
pub fn cmd_synthesize(path: &Path) -> Result<String> {
    let (_, s) = load(path, &RunOverrides::default())?;
    let p = s.prepare()?;
    let (a, b, c) = p.protocol_model();
    let mut out = format!(
        "# spectral radius of A - BK: {}\n",
        spectral_radius(&(a - &(b * &p.gains.k)))?
    );
    if let Some(h) = &p.gains.h {
        out.push_str(&format!(
            "# spectral radius of A - HC: {}\n",
            spectral_radius(&(a - &(h * c)))?
        ));
    }
    let doc = GainsDocument {
        gains: GainsBlock::Explicit {
            k: p.gains.k.to_rows(),
            h: p.gains.h.as_ref().map(|h| h.to_rows()),
        },
    };
    out.push_str(
        &toml::to_string(&doc).map_err(|e| Error::Validation(format!("cannot serialize gains: {}", e)))?,
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let all = [
            ExitStatus::Success,
            ExitStatus::Io,
            ExitStatus::Usage,
            ExitStatus::Parse,
            ExitStatus::Validation,
            ExitStatus::Divergence,
            ExitStatus::Failure,
        ];
        let codes: Vec<i32> = all.iter().map(|s| s.code()).collect();
        assert_eq!(codes, vec![0, 1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn errors_map_to_statuses() {
        let parse = Error::Parse {
            path: "x".into(),
            message: "m".into(),
        };
        assert_eq!(exit_status(&parse), ExitStatus::Parse);
        let topo = Error::Topology {
            node: 1,
            reason: "cycle".into(),
        };
        assert_eq!(exit_status(&topo), ExitStatus::Validation);
        let div = Error::Divergence {
            step: 3,
            signal: "x".into(),
        };
        assert_eq!(exit_status(&div), ExitStatus::Divergence);
    }

    #[test]
    fn zero_grid_is_usage_error() {
        let err = cmd_certify(Path::new("unused.toml"), 0, 1e-3).unwrap_err();
        assert_eq!(exit_status(&err), ExitStatus::Usage);
    }

    #[test]
    fn bad_tolerance_override_is_usage_error() {
        let mut f = ScenarioFile::from_scenario(&crate::presets::homogeneous(crate::presets::Case::Three)).unwrap();
        let o = RunOverrides {
            tolerance: Some(-1.0),
            ..RunOverrides::default()
        };
        assert!(matches!(o.apply(&mut f), Err(Error::Usage(_))));
    }
}
