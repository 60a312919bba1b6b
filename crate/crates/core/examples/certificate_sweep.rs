//! Frequency sweep of the delayed closed loop for a working and a broken
//! gain set.

use delaysync::engine::{certificate_sweep, uniform_grid};
use delaysync::presets::{heterogeneous, homogeneous, sabotaged, Case};

fn main() -> delaysync::Result<()> {
    let grid = uniform_grid(256);
    for s in [homogeneous(Case::Ten), heterogeneous(Case::Ten), sabotaged()] {
        let report = certificate_sweep(&s.prepare()?, &grid, 1e-3)?;
        println!(
            "{:22} passed {:5}  min distance {:.4}  zero-delay radius {:.4}",
            s.name, report.passed, report.min_distance, report.zero_delay_radius
        );
        if let Some(p) = report.first_failure() {
            println!("  first failure at omega = {:.4}: radius {:.4}", p.omega, p.spectral_radius);
        }
    }
    Ok(())
}
