//! The same networks with random integer delays on every channel.

use delaysync::engine::random::randomize_delays;
use delaysync::engine::{delayed_sync_errors, simulate};
use delaysync::presets::{heterogeneous, homogeneous, Case};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> delaysync::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in Case::ALL {
        for mut s in [homogeneous(case), heterogeneous(case)] {
            s.topology = randomize_delays(&mut rng, &s.topology, 1, 20);
            let p = s.prepare()?;
            let errors = delayed_sync_errors(&simulate(&p)?, &p.network);
            println!(
                "{:16} largest lag {:3}  final error {:.3e}",
                s.name,
                p.network.cumulative_delays.iter().max().unwrap_or(&0),
                errors.final_max()
            );
        }
    }
    Ok(())
}
