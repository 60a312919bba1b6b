//! Heterogeneous 10-agent network: each agent is reshaped into the common
//! target model by its pre-compensator before the protocol acts on it.

use delaysync::engine::{delayed_sync_errors, simulate};
use delaysync::plant::PreCompensatorKind;
use delaysync::presets::{heterogeneous, Case};

fn main() -> delaysync::Result<()> {
    let p = heterogeneous(Case::Ten).prepare()?;
    for (i, pre) in p.precompensators.iter().enumerate() {
        let kind = match pre.kind {
            PreCompensatorKind::Static => "static",
            PreCompensatorKind::Dynamic => "dynamic",
            PreCompensatorKind::Custom => "custom",
        };
        println!(
            "agent {:2}: {} states, {} pre-compensator with {} states",
            p.labels[i] + 1,
            p.agents[i].a.rows(),
            kind,
            pre.states()
        );
    }
    let r = simulate(&p)?;
    let errors = delayed_sync_errors(&r, &p.network);
    let lag = *p.network.cumulative_delays.iter().max().unwrap_or(&0);
    for k in [lag, 20, 50, 100, 200, 500, 2000] {
        if k < errors.horizon() {
            println!("k = {:4}: max regulated error {:.3e}", k, errors.max_at(k));
        }
    }
    Ok(())
}
