//! Closed-loop spectral radii of the worked gain sets, and a freshly
//! synthesized pair for comparison.

use delaysync::numerics::{observer_gain, spectral_radius, state_gain};
use delaysync::presets::{homogeneous_agent, heterogeneous_gains, heterogeneous_target, homogeneous_gains};

fn main() -> delaysync::Result<()> {
    let agent = homogeneous_agent();
    let g = homogeneous_gains();
    let h = g.h.as_ref().expect("partial-state gains carry an observer");
    println!("homogeneous agent");
    println!("  radius(A)      = {:.6}", spectral_radius(&agent.a)?);
    println!("  radius(A - BK) = {:.6}", spectral_radius(&(&agent.a - &(&agent.b * &g.k)))?);
    println!("  radius(A - HC) = {:.6}", spectral_radius(&(&agent.a - &(h * &agent.c)))?);

    let k = state_gain(&agent.a, &agent.b)?;
    let l = observer_gain(&agent.a, &agent.c)?;
    println!("  synthesized K = {:?}", k.to_rows());
    println!("  synthesized H = {:?}", l.to_rows());
    println!("  radius(A - BK) = {:.6}", spectral_radius(&(&agent.a - &(&agent.b * &k)))?);
    println!("  radius(A - HC) = {:.6}", spectral_radius(&(&agent.a - &(&l * &agent.c)))?);

    let t = heterogeneous_target();
    let g = heterogeneous_gains();
    let h = g.h.as_ref().expect("partial-state gains carry an observer");
    println!("heterogeneous target");
    println!("  radius(A - BK) = {:.6}", spectral_radius(&(&t.a - &(&t.b * &g.k)))?);
    println!("  radius(A - HC) = {:.6}", spectral_radius(&(&t.a - &(h * &t.c)))?);
    Ok(())
}
