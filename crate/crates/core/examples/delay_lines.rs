//! Delay lines under both prefill policies, and composition of two lines.

use delaysync::delayline::{DelayLine, PrefillPolicy};

fn main() -> delaysync::Result<()> {
    for policy in [PrefillPolicy::Zeros, PrefillPolicy::HoldInitial] {
        let mut line = DelayLine::new(3, 1, policy);
        let out: Vec<f64> = (1..=8)
            .map(|k| line.push_and_read(&[k as f64]).map(|v| v[0]))
            .collect::<delaysync::Result<_>>()?;
        println!("{:?}: in 1..=8, out {:?}", policy, out);
    }
    let mut a = DelayLine::new(2, 2, PrefillPolicy::Zeros);
    let mut b = DelayLine::new(4, 2, PrefillPolicy::Zeros);
    for k in 0..8 {
        let x = [k as f64, -(k as f64)];
        let y = b.push_and_read(&a.push_and_read(&x)?)?;
        println!("k = {}: {:?} -> {:?}", k, x, y);
    }
    Ok(())
}
