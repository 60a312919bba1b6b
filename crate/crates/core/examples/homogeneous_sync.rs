//! Homogeneous partial-state network on the 5-agent tree: every agent
//! tracks the exosystem output shifted by its own cumulative delay.

use delaysync::engine::{delayed_sync_errors, simulate};
use delaysync::presets::{homogeneous, with_seed, Case};

fn main() -> delaysync::Result<()> {
    let seed = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1);
    let p = with_seed(homogeneous(Case::Five), seed).prepare()?;
    let r = simulate(&p)?;
    let errors = delayed_sync_errors(&r, &p.network);
    let lag = *p.network.cumulative_delays.iter().max().unwrap_or(&0);
    for k in [lag, 10, 25, 50, 100, 200, 500, 1000, 2000] {
        if k < errors.horizon() {
            println!("k = {:4}: max regulated error {:.3e}", k, errors.max_at(k));
        }
    }
    for pair in &errors.pairwise {
        let last = pair.errors.iter().rev().flatten().next().copied().unwrap_or(f64::NAN);
        println!(
            "agent {} vs neighbor {} (delay {}): final error {:.3e}",
            r.labels[pair.agent] + 1,
            r.labels[pair.neighbor] + 1,
            pair.delay,
            last
        );
    }
    Ok(())
}
