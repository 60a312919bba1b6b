//! Writes a scenario file, runs it into a result bundle and prints the
//! manifest summary.

use delaysync::cli::file::ScenarioFile;
use delaysync::cli::{cmd_plot, cmd_run, RunOverrides};
use delaysync::presets::{heterogeneous, Case};

fn main() -> delaysync::Result<()> {
    let out = std::env::temp_dir().join("delaysync_example_bundle");
    std::fs::create_dir_all(&out).map_err(|e| delaysync::Error::io(&out, e))?;
    let path = out.join("scenario.toml");
    let text = ScenarioFile::from_scenario(&heterogeneous(Case::Three))?.to_toml()?;
    std::fs::write(&path, text).map_err(|e| delaysync::Error::io(&path, e))?;

    let outcome = cmd_run(&path, &out.join("bundle"), &RunOverrides::default())?;
    let m = &outcome.manifest;
    println!("bundle written to {}", outcome.dir.display());
    println!("final error {:.3e}, converged {}", m.final_error, m.converged);
    println!("certificate passed {} (min distance {:.4})", m.certificate.passed, m.certificate.min_distance);
    for (name, hash) in &m.files {
        println!("  {} {}", hash, name);
    }
    println!("plot script: {}", cmd_plot(&outcome.dir)?.display());
    Ok(())
}
