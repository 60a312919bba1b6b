use log::{debug, info};

use crate::delayline::DelayLine;
use crate::error::{Error, Result};
use crate::plant::{step_agent, step_exosystem};
use crate::protocol::{
    coupling_zeta_bar, coupling_zeta_hat, protocol1_step, protocol2_step, protocol3_step,
    NeighborSamples, ProtocolState, Variant,
};

use super::metrics::delayed_sync_errors;
use super::scenario::{PreparedScenario, Scenario};

/// Recorded trajectories, indexed `[step][agent]` with agents in canonical
/// network order.
#[derive(Clone, Debug)]
pub struct SimResult {
    pub name: String,
    pub variant: Variant,
    pub seed: u64,
    pub horizon: usize,
    pub labels: Vec<usize>,
    pub cumulative_delays: Vec<usize>,
    pub states: Vec<Vec<Vec<f64>>>,
    pub outputs: Vec<Vec<Vec<f64>>>,
    pub inputs: Vec<Vec<Vec<f64>>>,
    pub controllers: Vec<Vec<ProtocolState>>,
    pub exo_states: Vec<Vec<f64>>,
    pub exo_outputs: Vec<Vec<f64>>,
}

impl SimResult {
    pub fn agents(&self) -> usize {
        self.labels.len()
    }
}

struct Channel {
    from: usize,
    line: DelayLine,
}

fn check_finite(step: usize, signal: &str, agent: usize, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence {
            step,
            signal: format!("{} of agent {}", signal, agent + 1),
        })
    }
}

/// Runs the scenario from its initial conditions for `horizon` steps.
pub fn run(s: &Scenario) -> Result<SimResult> {
    simulate(&s.prepare()?)
}

pub fn simulate(p: &PreparedScenario) -> Result<SimResult> {
    let n_agents = p.agents.len();
    let d = &p.network;
    let width = p.exchange_width();
    let outputs = p.exosystem.outputs();
    let policy = p.settings.prefill;
    let horizon = p.settings.horizon;

    let mut output_lines: Vec<Vec<Channel>> = Vec::with_capacity(n_agents);
    let mut exchange_lines: Vec<Vec<Channel>> = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let mut outs = Vec::new();
        let mut exch = Vec::new();
        for &j in d.neighbors(i) {
            let kappa = d.plant_delay(i, j).expect("edge delay");
            let kappa_hat = d.protocol_delay(i, j).expect("edge delay");
            outs.push(Channel {
                from: j,
                line: DelayLine::new(kappa, outputs, policy),
            });
            exch.push(Channel {
                from: j,
                line: DelayLine::new(kappa_hat, width, policy),
            });
        }
        output_lines.push(outs);
        exchange_lines.push(exch);
    }
    let mut root_line = DelayLine::new(d.topology.root_delay, outputs, policy);

    let mut x: Vec<Vec<f64>> = p.initial_states.clone();
    let mut ctrl: Vec<ProtocolState> = (0..n_agents)
        .map(|i| {
            let pre = p.precompensators.get(i).map_or(0, |c| c.states());
            ProtocolState::zeros(p.variant, width, pre)
        })
        .collect();
    let mut x_r = p.exosystem.x0.clone();

    let mut result = SimResult {
        name: p.name.clone(),
        variant: p.variant,
        seed: p.settings.seed,
        horizon,
        labels: p.labels.clone(),
        cumulative_delays: d.cumulative_delays.clone(),
        states: Vec::with_capacity(horizon),
        outputs: Vec::with_capacity(horizon),
        inputs: Vec::with_capacity(horizon),
        controllers: Vec::with_capacity(horizon),
        exo_states: Vec::with_capacity(horizon),
        exo_outputs: Vec::with_capacity(horizon),
    };
    let (pa, pb, pc) = p.protocol_model();

    for k in 0..horizon {
        let exo = step_exosystem(&p.exosystem, &x_r)?;
        let mut y = Vec::with_capacity(n_agents);
        let mut z = Vec::with_capacity(n_agents);
        for (i, agent) in p.agents.iter().enumerate() {
            y.push(agent.c.matvec(&x[i])?);
            z.push(match &agent.c_m {
                Some(m) => m.matvec(&x[i])?,
                None => Vec::new(),
            });
        }
        let y_r_delayed = root_line.push_and_read(&exo.y)?;

        // synchronous tick: every channel is read before any state moves
        let mut next_ctrl = Vec::with_capacity(n_agents);
        let mut u_all = Vec::with_capacity(n_agents);
        for i in 0..n_agents {
            let mut ys = NeighborSamples::new();
            for ch in &mut output_lines[i] {
                ys.insert(ch.from, ch.line.push_and_read(&y[ch.from])?);
            }
            let mut chis = NeighborSamples::new();
            for ch in &mut exchange_lines[i] {
                chis.insert(ch.from, ch.line.push_and_read(&ctrl[ch.from].chi)?);
            }
            let yr = d.root_link(i).then_some(y_r_delayed.as_slice());
            let zeta_bar = coupling_zeta_bar(d, i, &y[i], &ys, yr)?;
            let zeta_hat = coupling_zeta_hat(d, i, &ctrl[i].chi, &chis)?;
            let (next, u) = match p.variant {
                Variant::FullState => {
                    protocol1_step(pa, pb, &ctrl[i], &zeta_bar, &zeta_hat, &p.gains)?
                }
                Variant::PartialState => {
                    protocol2_step(pa, pb, pc, &ctrl[i], &zeta_bar, &zeta_hat, &p.gains)?
                }
                Variant::Heterogeneous => protocol3_step(
                    &ctrl[i],
                    &zeta_bar,
                    &zeta_hat,
                    &z[i],
                    &p.precompensators[i],
                    p.target.as_ref().expect("heterogeneous target"),
                    &p.gains,
                )?,
            };
            check_finite(k, "control input", i, &u)?;
            if !next.is_finite() {
                return Err(Error::Divergence {
                    step: k,
                    signal: format!("protocol state of agent {}", i + 1),
                });
            }
            next_ctrl.push(next);
            u_all.push(u);
        }

        let mut next_x = Vec::with_capacity(n_agents);
        for (i, agent) in p.agents.iter().enumerate() {
            let step = step_agent(agent, &x[i], &u_all[i])?;
            check_finite(k, "state", i, &step.next)?;
            next_x.push(step.next);
        }

        result.states.push(std::mem::replace(&mut x, next_x));
        result.outputs.push(y);
        result.inputs.push(u_all);
        result.controllers.push(std::mem::replace(&mut ctrl, next_ctrl));
        result.exo_outputs.push(exo.y);
        result.exo_states.push(std::mem::replace(&mut x_r, exo.next));
    }

    let errors = delayed_sync_errors(&result, d);
    info!(
        "scenario '{}': {} steps, final regulated error {:.3e}",
        p.name,
        horizon,
        errors.final_max()
    );
    debug!("cumulative delays {:?}", d.cumulative_delays);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::scenario::{GainSpec, InitialStates};
    use crate::numerics::RealMatrix;
    use crate::presets::{homogeneous, homogeneous_exosystem, Case};
    use crate::topology::NetworkTopology;

    #[test]
    fn single_agent_on_reference_stays_there() {
        let mut s = homogeneous(Case::Three);
        s.agents.truncate(1);
        s.topology = NetworkTopology::new(1, 0, 0, Vec::new());
        s.run.initial = InitialStates::Explicit(vec![homogeneous_exosystem().x0]);
        s.run.horizon = 200;
        let r = run(&s).unwrap();
        for k in 0..r.horizon {
            assert_eq!(r.states[k][0], r.exo_states[k], "step {k}");
        }
    }

    #[test]
    fn example_converges_with_original_and_doubled_delays() {
        let mut s = homogeneous(Case::Three);
        let p = s.prepare().unwrap();
        let r = simulate(&p).unwrap();
        assert!(delayed_sync_errors(&r, &p.network).final_max() < 1e-4);

        for e in &mut s.topology.edges {
            e.delay *= 2;
            e.protocol_delay *= 2;
        }
        let p = s.prepare().unwrap();
        let r = simulate(&p).unwrap();
        assert!(delayed_sync_errors(&r, &p.network).final_max() < 1e-4);
    }

    #[test]
    fn exosystem_is_independent_of_agents() {
        let a = run(&homogeneous(Case::Five)).unwrap();
        let mut s = homogeneous(Case::Five);
        s.run.seed = 99;
        let b = run(&s).unwrap();
        assert_eq!(a.exo_states, b.exo_states);
        assert_ne!(a.states, b.states);
    }

    #[test]
    fn deterministic_for_equal_seed() {
        let a = run(&homogeneous(Case::Ten)).unwrap();
        let b = run(&homogeneous(Case::Ten)).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.inputs, b.inputs);
    }

    #[test]
    fn runaway_gain_reports_divergence_step() {
        let mut s = homogeneous(Case::Three);
        if let GainSpec::Explicit(g) = &mut s.gains {
            g.k = RealMatrix::row(&[1e6, 1e6, 1e6]);
        }
        s.run.verify_gains = false;
        s.run.horizon = 500;
        match run(&s) {
            Err(Error::Divergence { step, .. }) => assert!(step > 0 && step < 500),
            other => panic!("expected divergence, got {:?}", other.map(|r| r.horizon)),
        }
    }

    #[test]
    fn recorded_lengths_match_horizon() {
        let mut s = homogeneous(Case::Five);
        s.run.horizon = 37;
        let r = run(&s).unwrap();
        assert_eq!(r.states.len(), 37);
        assert_eq!(r.outputs.len(), 37);
        assert_eq!(r.inputs.len(), 37);
        assert_eq!(r.exo_states.len(), 37);
        assert_eq!(r.controllers.len(), 37);
    }
}
