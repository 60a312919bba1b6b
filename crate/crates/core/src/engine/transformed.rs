//! Stacked error coordinates of the delay-free closed loop. With all delays
//! zero the error vector
//!
//! ```text
//! full state:     (x̃, δ)
//! partial state:  (x̃, δ, δ̄)
//! heterogeneous:  (x̃, δ, δ̄, ω)
//! ```
//!
//! with `x̃_i = x_i - x_r`, `δ = x̃ - χ`, `δ̄ = ((I - D̄) ⊗ I) x̃ - x̂`, evolves
//! linearly under the real certificate matrix at `ω = 0`.

use crate::error::{Error, Result};
use crate::numerics::{vec_sub, RealMatrix};
use crate::protocol::Variant;

use super::certificate::certificate_matrix;
use super::scenario::PreparedScenario;
use super::simulate::SimResult;

/// The certificate matrix at `ω = 0`, which is real.
pub fn transformed_matrix(p: &PreparedScenario) -> Result<RealMatrix> {
    let m = certificate_matrix(p, 0.0)?;
    let (r, c) = m.shape();
    let mut out = RealMatrix::zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            let z = m[(i, j)];
            if z.im.abs() > 1e-15 {
                return Err(Error::Certificate("zero-frequency matrix is not real".to_string()));
            }
            out[(i, j)] = z.re;
        }
    }
    Ok(out)
}

fn require_zero_delays(p: &PreparedScenario) -> Result<()> {
    let t = &p.network.topology;
    if t.root_delay != 0 || t.edges.iter().any(|e| e.delay != 0 || e.protocol_delay != 0) {
        return Err(Error::Validation(
            "transformed coordinates need a delay-free network".to_string(),
        ));
    }
    Ok(())
}

/// Error coordinates at step `k` of a delay-free run.
pub fn transformed_state(p: &PreparedScenario, r: &SimResult, k: usize) -> Result<Vec<f64>> {
    require_zero_delays(p)?;
    let n_agents = p.agents.len();
    let n = p.exchange_width();
    let ctrl = &r.controllers[k];

    let reference = match &p.target_map {
        Some(t) => t.matvec(&r.exo_states[k])?,
        None => r.exo_states[k].clone(),
    };
    let mut tilde = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let x = &r.states[k][i];
        let own = match p.variant {
            Variant::Heterogeneous => p.precompensators[i].homogenized_state(x, &ctrl[i].xi)?,
            _ => x.clone(),
        };
        tilde.push(vec_sub(&own, &reference));
    }
    let mut out: Vec<f64> = tilde.iter().flatten().copied().collect();
    for i in 0..n_agents {
        out.extend(vec_sub(&tilde[i], &ctrl[i].chi));
    }
    if p.variant == Variant::FullState {
        return Ok(out);
    }
    let dbar = &p.network.contraction;
    for i in 0..n_agents {
        let mut v = tilde[i].clone();
        for j in 0..n_agents {
            let dij = dbar[(i, j)];
            if dij != 0.0 {
                for l in 0..n {
                    v[l] -= dij * tilde[j][l];
                }
            }
        }
        out.extend(vec_sub(&v, &ctrl[i].xhat));
    }
    if p.variant == Variant::Heterogeneous {
        for i in 0..n_agents {
            out.extend(p.precompensators[i].mismatch_state(&r.states[k][i], &ctrl[i].xi)?);
        }
    }
    Ok(out)
}
