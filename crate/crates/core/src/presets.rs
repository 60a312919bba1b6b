//! The worked example networks: a homogeneous partial-state network and a
//! heterogeneous network of introspective agents, each on a 3-, 5- and
//! 10-agent tree.
//!
//! Where an edge lists only one of its two delays, the other channel uses
//! the same value. Edges carry unit weight.

use crate::engine::{
    GainSpec, HeterogeneousSpec, InitialStates, PreCompensatorSpec, RunSettings, Scenario,
    TargetSpec,
};
use crate::numerics::RealMatrix;
use crate::plant::{AgentModel, Exosystem, TargetModel};
use crate::protocol::{Gains, Variant};
use crate::topology::{Edge, NetworkTopology};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Case {
    Three,
    Five,
    Ten,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::Three, Case::Five, Case::Ten];

    pub fn agents(self) -> usize {
        match self {
            Case::Three => 3,
            Case::Five => 5,
            Case::Ten => 10,
        }
    }

    /// Short tag used in scenario file names.
    pub fn tag(self) -> &'static str {
        match self {
            Case::Three => "case1",
            Case::Five => "case2",
            Case::Ten => "case3",
        }
    }
}

/// `(parent, child, output delay, exchange delay)` with 1-based labels.
fn case_edges(case: Case) -> (usize, Vec<(usize, usize, usize, usize)>) {
    match case {
        Case::Three => (0, vec![(1, 2, 3, 2), (1, 3, 2, 2)]),
        Case::Five => (
            2,
            vec![(1, 2, 2, 2), (1, 3, 4, 5), (3, 4, 1, 2), (3, 5, 2, 2)],
        ),
        Case::Ten => (
            2,
            vec![
                (1, 2, 2, 2),
                (2, 3, 4, 5),
                (2, 4, 1, 1),
                (3, 5, 2, 2),
                (3, 6, 2, 5),
                (4, 7, 4, 1),
                (4, 8, 6, 6),
                (5, 9, 2, 3),
                (5, 10, 2, 1),
            ],
        ),
    }
}

pub fn case_topology(case: Case) -> NetworkTopology {
    let (root_delay, edges) = case_edges(case);
    let edges = edges
        .into_iter()
        .map(|(from, to, delay, protocol_delay)| Edge {
            from: from - 1,
            to: to - 1,
            weight: 1.0,
            delay,
            protocol_delay,
        })
        .collect();
    NetworkTopology::new(case.agents(), 0, root_delay, edges)
}

fn rotation_model() -> RealMatrix {
    let s = 3f64.sqrt() / 2.0;
    RealMatrix::from_rows(&[[0.5, 1.0, 1.0], [0.0, s, -0.5], [0.0, 0.5, s]])
}

pub fn homogeneous_agent() -> AgentModel {
    AgentModel::new(
        rotation_model(),
        RealMatrix::column(&[1.0, 1.0, 0.0]),
        RealMatrix::row(&[1.0, 0.0, 1.0]),
    )
    .expect("consistent dimensions")
}

pub fn homogeneous_exosystem() -> Exosystem {
    Exosystem::new(
        rotation_model(),
        RealMatrix::row(&[1.0, 0.0, 1.0]),
        vec![0.3, 0.1, 0.1],
    )
    .expect("consistent dimensions")
}

pub fn homogeneous_gains() -> Gains {
    Gains {
        k: RealMatrix::row(&[0.0695, 1.7625, 1.2051]),
        h: Some(RealMatrix::column(&[1.4327, 0.4143, 0.6993])),
    }
}

fn default_run() -> RunSettings {
    RunSettings {
        horizon: 2001,
        seed: 1,
        ..RunSettings::default()
    }
}

/// Homogeneous partial-state network.
pub fn homogeneous(case: Case) -> Scenario {
    Scenario {
        name: format!("example1_{}", case.tag()),
        variant: Variant::PartialState,
        agents: vec![homogeneous_agent(); case.agents()],
        heterogeneous: None,
        exosystem: homogeneous_exosystem(),
        topology: case_topology(case),
        gains: GainSpec::Explicit(homogeneous_gains()),
        run: default_run(),
    }
}

/// Homogeneous network with the state feedback disabled (`K = 0`): the
/// closed loop keeps the marginal modes of the agent and cannot converge.
pub fn sabotaged() -> Scenario {
    let mut s = homogeneous(Case::Three);
    s.name = "sabotaged_zero_gain".to_string();
    if let GainSpec::Explicit(g) = &mut s.gains {
        g.k = RealMatrix::zeros(1, 3);
    }
    s.run.verify_gains = false;
    s
}

fn chain_target() -> RealMatrix {
    RealMatrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, -1.0, 1.0]])
}

pub fn heterogeneous_target() -> TargetModel {
    TargetModel::new(
        chain_target(),
        RealMatrix::column(&[0.0, 0.0, 1.0]),
        RealMatrix::row(&[1.0, 0.0, 0.0]),
        3,
    )
    .expect("uniform rank 3")
}

pub fn heterogeneous_exosystem() -> Exosystem {
    Exosystem::new(chain_target(), RealMatrix::row(&[1.0, 0.0, 0.0]), vec![0.5, 0.2, -0.3])
        .expect("consistent dimensions")
}

pub fn heterogeneous_gains() -> Gains {
    Gains {
        k: RealMatrix::row(&[1.006, -0.99, 0.6]),
        h: Some(RealMatrix::column(&[0.9, -0.35, -0.225])),
    }
}

/// Agent with 1-based `label`; the four agent classes repeat with period 5.
pub fn heterogeneous_agent(label: usize) -> AgentModel {
    let build = |a: RealMatrix, b: RealMatrix, c: RealMatrix| {
        let n = a.rows();
        AgentModel::with_measurement(a, b, c, Some(RealMatrix::identity(n)))
            .expect("consistent dimensions")
    };
    match (label - 1) % 5 {
        0 => build(
            RealMatrix::from_rows(&[
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 2.0, 1.0, 1.0],
                [1.0, 1.0, 1.0, 0.0],
            ]),
            RealMatrix::from_rows(&[[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
            RealMatrix::row(&[0.0, 0.0, 1.0, 0.0]),
        ),
        1 => build(
            RealMatrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]),
            RealMatrix::column(&[0.0, 0.0, 1.0]),
            RealMatrix::row(&[1.0, 0.0, 0.0]),
        ),
        2 | 3 => build(
            RealMatrix::from_rows(&[
                [0.0, 0.0, 0.0, 1.0, 0.0],
                [0.0, 1.0, -1.0, 0.0, 1.0],
                [0.0, 1.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0, 0.0, 1.0],
            ]),
            RealMatrix::from_rows(&[
                [0.0, 0.0],
                [1.0, 0.0],
                [0.0, 0.0],
                [0.0, 0.0],
                [0.0, 1.0],
            ]),
            RealMatrix::row(&[0.0, 0.0, 1.0, 0.0, 0.0]),
        ),
        _ => build(
            RealMatrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-2.0, 1.0, 0.0]]),
            RealMatrix::column(&[0.0, 0.0, 1.0]),
            RealMatrix::row(&[1.0, 0.0, 0.0]),
        ),
    }
}

/// Heterogeneous network of introspective agents.
pub fn heterogeneous(case: Case) -> Scenario {
    let n = case.agents();
    Scenario {
        name: format!("example2_{}", case.tag()),
        variant: Variant::Heterogeneous,
        agents: (1..=n).map(heterogeneous_agent).collect(),
        heterogeneous: Some(HeterogeneousSpec {
            target: TargetSpec::Explicit(heterogeneous_target()),
            precompensators: vec![PreCompensatorSpec::Auto; n],
        }),
        exosystem: heterogeneous_exosystem(),
        topology: case_topology(case),
        gains: GainSpec::Explicit(heterogeneous_gains()),
        run: default_run(),
    }
}

/// Same scenario with agent initial states drawn from `seed`.
pub fn with_seed(mut s: Scenario, seed: u64) -> Scenario {
    s.run.seed = seed;
    s.run.initial = InitialStates::Random { scale: 1.0 };
    s
}
