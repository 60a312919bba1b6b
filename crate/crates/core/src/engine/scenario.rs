use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::delayline::PrefillPolicy;
use crate::error::{Error, Result};
use crate::numerics::{
    is_schur, synthesize_observer_gain, synthesize_state_gain, RealMatrix,
};
use crate::plant::{
    homogenize, remodel_exosystem, AgentModel, Exosystem, PreCompensator, TargetModel,
};
use crate::protocol::{Gains, Variant};
use crate::topology::{derive, validate_and_reorder, DerivedNetwork, NetworkTopology};

/// Weights for Riccati-based gain synthesis; identity when absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthesisWeights {
    pub q: Option<RealMatrix>,
    pub r: Option<RealMatrix>,
    pub observer_q: Option<RealMatrix>,
    pub observer_r: Option<RealMatrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainSpec {
    Explicit(Gains),
    Synthesize(SynthesisWeights),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStates {
    /// One state vector per agent, in label order.
    Explicit(Vec<Vec<f64>>),
    /// Uniform in `[-scale, scale]` from the run seed.
    Random { scale: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpec {
    /// Build the target from the exosystem with at least this uniform rank.
    Remodel { nq: usize },
    Explicit(TargetModel),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreCompensatorSpec {
    Auto,
    Explicit(Box<PreCompensator>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneousSpec {
    pub target: TargetSpec,
    pub precompensators: Vec<PreCompensatorSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub horizon: usize,
    pub tolerance: f64,
    pub prefill: PrefillPolicy,
    pub seed: u64,
    pub initial: InitialStates,
    /// Reject gains that fail the Schur checks before running.
    pub verify_gains: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            horizon: 2000,
            tolerance: 1e-4,
            prefill: PrefillPolicy::Zeros,
            seed: 0,
            initial: InitialStates::Random { scale: 1.0 },
            verify_gains: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub variant: Variant,
    pub agents: Vec<AgentModel>,
    pub heterogeneous: Option<HeterogeneousSpec>,
    pub exosystem: Exosystem,
    pub topology: NetworkTopology,
    pub gains: GainSpec,
    pub run: RunSettings,
}

/// A validated scenario with agents in canonical network order.
#[derive(Clone, Debug)]
pub struct PreparedScenario {
    pub name: String,
    pub variant: Variant,
    pub network: DerivedNetwork,
    /// `labels[k]` is the scenario index of the agent at position `k`.
    pub labels: Vec<usize>,
    pub agents: Vec<AgentModel>,
    pub exosystem: Exosystem,
    pub target: Option<TargetModel>,
    /// `x̌_r = T x_r` (heterogeneous only).
    pub target_map: Option<RealMatrix>,
    pub precompensators: Vec<PreCompensator>,
    pub gains: Gains,
    pub settings: RunSettings,
    pub initial_states: Vec<Vec<f64>>,
}

impl PreparedScenario {
    /// Width of the exchanged variable `χ` (and of `x̂`).
    pub fn exchange_width(&self) -> usize {
        match &self.target {
            Some(t) => t.states(),
            None => self.agents[0].states(),
        }
    }

    /// Model `(A, B, C)` the protocol recurrences run on.
    pub fn protocol_model(&self) -> (&RealMatrix, &RealMatrix, &RealMatrix) {
        match &self.target {
            Some(t) => (&t.a, &t.b, &t.c),
            None => {
                let a = &self.agents[0];
                (&a.a, &a.b, &a.c)
            }
        }
    }

    pub fn agents_len(&self) -> usize {
        self.agents.len()
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

impl Scenario {
    pub fn prepare(&self) -> Result<PreparedScenario> {
        let n_agents = self.agents.len();
        if n_agents != self.topology.agents {
            return Err(invalid(format!(
                "{} agent models for a network of {} agents",
                n_agents, self.topology.agents
            )));
        }
        if self.run.horizon == 0 {
            return Err(invalid("horizon must be positive"));
        }
        if !(self.run.tolerance > 0.0) {
            return Err(invalid("tolerance must be positive"));
        }
        let canonical = validate_and_reorder(&self.topology)?;
        let network = derive(&canonical)?;
        let labels = canonical.order.clone();
        let agents: Vec<AgentModel> = labels.iter().map(|&l| self.agents[l].clone()).collect();

        let initial = self.initial_states()?;
        let initial_states: Vec<Vec<f64>> = labels.iter().map(|&l| initial[l].clone()).collect();

        let (target, target_map, precompensators) = match self.variant {
            Variant::FullState | Variant::PartialState => {
                self.check_homogeneous()?;
                (None, None, Vec::new())
            }
            Variant::Heterogeneous => {
                let (t, map, pre) = self.prepare_heterogeneous()?;
                let pre = labels.iter().map(|&l| pre[l].clone()).collect();
                (Some(t), Some(map), pre)
            }
        };

        let (a, b, c) = match &target {
            Some(t) => (&t.a, &t.b, &t.c),
            None => (&agents[0].a, &agents[0].b, &agents[0].c),
        };
        let gains = self.resolve_gains(a, b, c)?;
        self.check_gains(&gains, a, b, c)?;

        for (i, x0) in initial_states.iter().enumerate() {
            if x0.len() != agents[i].states() {
                return Err(invalid(format!(
                    "initial state of agent {} has width {}, expected {}",
                    labels[i] + 1,
                    x0.len(),
                    agents[i].states()
                )));
            }
        }

        debug!(
            "prepared scenario '{}' with {} agents, order {:?}",
            self.name, n_agents, labels
        );
        Ok(PreparedScenario {
            name: self.name.clone(),
            variant: self.variant,
            network,
            labels,
            agents,
            exosystem: self.exosystem.clone(),
            target,
            target_map,
            precompensators,
            gains,
            settings: self.run.clone(),
            initial_states,
        })
    }

    /// Initial agent states in label order.
    pub fn initial_states(&self) -> Result<Vec<Vec<f64>>> {
        match &self.run.initial {
            InitialStates::Explicit(v) => {
                if v.len() != self.agents.len() {
                    return Err(invalid(format!(
                        "{} initial states for {} agents",
                        v.len(),
                        self.agents.len()
                    )));
                }
                Ok(v.clone())
            }
            InitialStates::Random { scale } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.run.seed);
                Ok(self
                    .agents
                    .iter()
                    .map(|a| (0..a.states()).map(|_| rng.gen_range(-1.0..=1.0) * scale).collect())
                    .collect())
            }
        }
    }

    fn check_homogeneous(&self) -> Result<()> {
        let first = &self.agents[0];
        if let Some(i) = self.agents.iter().position(|a| a != first) {
            return Err(invalid(format!(
                "homogeneous variant requires identical agents; agent {} differs from agent 1",
                i + 1
            )));
        }
        if !first.a.approx_eq(&self.exosystem.a, 1e-12) || !first.c.approx_eq(&self.exosystem.c, 1e-12)
        {
            return Err(invalid(
                "the exosystem must share the agent state and output matrices",
            ));
        }
        if first.a.rows() != self.exosystem.x0.len() {
            return Err(invalid("exosystem initial state width differs from agent state width"));
        }
        if self.variant == Variant::FullState
            && !first.c.approx_eq(&RealMatrix::identity(first.states()), 0.0)
        {
            return Err(invalid("full-state coupling requires C = I"));
        }
        if !first.is_marginally_stable(1e-9)? {
            return Err(invalid("agent has eigenvalues outside the closed unit disc"));
        }
        Ok(())
    }

    fn prepare_heterogeneous(&self) -> Result<(TargetModel, RealMatrix, Vec<PreCompensator>)> {
        let spec = self
            .heterogeneous
            .as_ref()
            .ok_or_else(|| invalid("heterogeneous variant needs a target model section"))?;
        self.exosystem.check_assumptions(1e-6)?;
        let p = self.exosystem.outputs();
        if let Some(i) = self.agents.iter().position(|a| a.outputs() != p) {
            return Err(invalid(format!(
                "agent {} has {} outputs, exosystem {}",
                i + 1,
                self.agents[i].outputs(),
                p
            )));
        }
        let (target, map) = match &spec.target {
            TargetSpec::Remodel { nq } => {
                let order = self
                    .agents
                    .iter()
                    .filter_map(|a| a.relative_degree())
                    .max()
                    .unwrap_or(1);
                remodel_exosystem(&self.exosystem, (*nq).max(order))?
            }
            TargetSpec::Explicit(t) => {
                t.check_uniform_rank()?;
                let map = t.embedding(&self.exosystem)?;
                (t.clone(), map)
            }
        };
        target.check_spectrum(&self.exosystem, 1e-6)?;
        if spec.precompensators.len() != self.agents.len() {
            return Err(invalid(format!(
                "{} pre-compensators for {} agents",
                spec.precompensators.len(),
                self.agents.len()
            )));
        }
        let mut pres = Vec::with_capacity(self.agents.len());
        for (i, (agent, pspec)) in self.agents.iter().zip(&spec.precompensators).enumerate() {
            if !agent.is_right_invertible() {
                return Err(invalid(format!("agent {} is not right-invertible", i + 1)));
            }
            let pre = match pspec {
                PreCompensatorSpec::Auto => homogenize(agent, &target).map_err(|e| {
                    Error::Homogenization(format!("agent {}: {}", i + 1, e))
                })?,
                PreCompensatorSpec::Explicit(p) => {
                    p.check_dimensions(agent, &target)?;
                    (**p).clone()
                }
            };
            pres.push(pre);
        }
        Ok((target, map, pres))
    }

    fn resolve_gains(&self, a: &RealMatrix, b: &RealMatrix, c: &RealMatrix) -> Result<Gains> {
        match &self.gains {
            GainSpec::Explicit(g) => Ok(g.clone()),
            GainSpec::Synthesize(w) => {
                let n = a.rows();
                let q = w.q.clone().unwrap_or_else(|| RealMatrix::identity(n));
                let r = w.r.clone().unwrap_or_else(|| RealMatrix::identity(b.cols()));
                let k = synthesize_state_gain(a, b, &q, &r)?;
                let h = if self.variant == Variant::FullState {
                    None
                } else {
                    let oq = w.observer_q.clone().unwrap_or_else(|| RealMatrix::identity(n));
                    let or = w
                        .observer_r
                        .clone()
                        .unwrap_or_else(|| RealMatrix::identity(c.rows()));
                    Some(synthesize_observer_gain(a, c, &oq, &or)?)
                };
                Ok(Gains { k, h })
            }
        }
    }

    fn check_gains(&self, g: &Gains, a: &RealMatrix, b: &RealMatrix, c: &RealMatrix) -> Result<()> {
        let n = a.rows();
        if g.k.shape() != (b.cols(), n) {
            return Err(invalid(format!(
                "K is {:?}, expected {:?}",
                g.k.shape(),
                (b.cols(), n)
            )));
        }
        let mut problems = Vec::new();
        if !is_schur(&(a - &(b * &g.k)), 0.0)? {
            problems.push("A - BK is not Schur stable");
        }
        if self.variant != Variant::FullState {
            let h = g
                .h
                .as_ref()
                .ok_or_else(|| invalid("observer gain H is required for this variant"))?;
            if h.shape() != (n, c.rows()) {
                return Err(invalid(format!(
                    "H is {:?}, expected {:?}",
                    h.shape(),
                    (n, c.rows())
                )));
            }
            if !is_schur(&(a - &(h * c)), 0.0)? {
                problems.push("A - HC is not Schur stable");
            }
        }
        if !problems.is_empty() {
            let msg = problems.join("; ");
            if self.run.verify_gains {
                return Err(invalid(msg));
            }
            warn!("scenario '{}': {} (gain verification disabled)", self.name, msg);
        }
        Ok(())
    }
}
