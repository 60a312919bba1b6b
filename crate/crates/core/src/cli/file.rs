//! TOML scenario files. Agents are addressed by 1-based labels; matrices
//! are row-major nested arrays.
//!
//! ```toml
//! name = "example"
//! variant = "partial_state"
//!
//! [[agent]]
//! labels = [1, 2, 3]
//! a = [[0.5, 1.0], [0.0, 0.9]]
//! b = [[1.0], [1.0]]
//! c = [[1.0, 0.0]]
//!
//! [exosystem]
//! a = [[0.5, 1.0], [0.0, 0.9]]
//! c = [[1.0, 0.0]]
//! x0 = [0.3, 0.1]
//!
//! [topology]
//! agents = 3
//! root = 1
//! root_delay = 0
//!
//! [[topology.edge]]
//! from = 1
//! to = 2
//! delay = 3
//! protocol_delay = 2
//!
//! [gains]
//! mode = "synthesize"
//!
//! [run]
//! horizon = 2001
//! seed = 1
//! ```
//!
//! An edge that gives only one of `delay` / `protocol_delay` uses it for
//! both channels. `weight` defaults to one and `root_delay` to zero.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::delayline::PrefillPolicy;
use crate::engine::{
    GainSpec, HeterogeneousSpec, InitialStates, PreCompensatorSpec, RunSettings, Scenario,
    SynthesisWeights, TargetSpec,
};
use crate::error::{Error, Result};
use crate::numerics::RealMatrix;
use crate::plant::{AgentModel, Exosystem, TargetModel};
use crate::protocol::{Gains, Variant};
use crate::topology::{Edge, NetworkTopology};

type Rows = Vec<Vec<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub variant: Variant,
    #[serde(rename = "agent")]
    pub agents: Vec<AgentBlock>,
    pub exosystem: ExosystemBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetBlock>,
    pub topology: TopologyBlock,
    pub gains: GainsBlock,
    #[serde(default)]
    pub run: RunBlock,
}

/// One model shared by every agent in `labels`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentBlock {
    pub labels: Vec<usize>,
    pub a: Rows,
    pub b: Rows,
    pub c: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_m: Option<Rows>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExosystemBlock {
    pub a: Rows,
    pub c: Rows,
    pub x0: Vec<f64>,
}

/// Explicit target when `a`, `b`, `c` are given, otherwise remodeled from
/// the exosystem with uniform rank at least `nq`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetBlock {
    pub nq: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Rows>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyBlock {
    pub agents: usize,
    #[serde(default = "one")]
    pub root: usize,
    #[serde(default)]
    pub root_delay: usize,
    #[serde(default, rename = "edge")]
    pub edges: Vec<EdgeBlock>,
}

fn one() -> usize {
    1
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeBlock {
    pub from: usize,
    pub to: usize,
    #[serde(default = "unit_weight")]
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_delay: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum GainsBlock {
    Explicit {
        k: Rows,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<Rows>,
    },
    Synthesize {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<Rows>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<Rows>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observer_q: Option<Rows>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observer_r: Option<Rows>,
    },
}

/// Run settings. Agent initial states are explicit (`initial_states`, one
/// row per label) or drawn uniformly from `[-initial_scale, initial_scale]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunBlock {
    pub horizon: usize,
    pub tolerance: f64,
    pub prefill: PrefillPolicy,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_states: Option<Rows>,
    pub verify_gains: bool,
}

impl Default for RunBlock {
    fn default() -> Self {
        let d = RunSettings::default();
        RunBlock {
            horizon: d.horizon,
            tolerance: d.tolerance,
            prefill: d.prefill,
            seed: d.seed,
            initial_scale: None,
            initial_states: None,
            verify_gains: d.verify_gains,
        }
    }
}

fn parse_err(path: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        message: message.into(),
    }
}

fn matrix(path: &str, field: &str, rows: &Rows) -> Result<RealMatrix> {
    RealMatrix::try_from_rows(rows).map_err(|e| parse_err(path, format!("{}: {}", field, e)))
}

fn rows(m: &RealMatrix) -> Rows {
    m.to_rows()
}

impl ScenarioFile {
    /// Parses TOML text; `path` only labels diagnostics.
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| parse_err(path, e.to_string().trim_end()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Validation(format!("cannot serialize scenario: {}", e)))
    }

    /// Builds the scenario, reporting problems against the offending field.
    pub fn to_scenario(&self, path: &str) -> Result<Scenario> {
        let n = self.topology.agents;
        if n == 0 {
            return Err(parse_err(path, "topology.agents: must be at least 1"));
        }
        let mut by_label: Vec<Option<AgentModel>> = vec![None; n];
        for (bi, block) in self.agents.iter().enumerate() {
            let field = format!("agent[{}]", bi);
            let c_m = match &block.c_m {
                Some(r) => Some(matrix(path, &format!("{}.c_m", field), r)?),
                None => None,
            };
            let model = AgentModel::with_measurement(
                matrix(path, &format!("{}.a", field), &block.a)?,
                matrix(path, &format!("{}.b", field), &block.b)?,
                matrix(path, &format!("{}.c", field), &block.c)?,
                c_m,
            )
            .map_err(|e| parse_err(path, format!("{}: {}", field, e)))?;
            if block.labels.is_empty() {
                return Err(parse_err(path, format!("{}.labels: empty", field)));
            }
            for &label in &block.labels {
                if label == 0 || label > n {
                    return Err(parse_err(
                        path,
                        format!("{}.labels: label {} outside 1..={}", field, label, n),
                    ));
                }
                if by_label[label - 1].is_some() {
                    return Err(parse_err(
                        path,
                        format!("{}.labels: agent {} is defined twice", field, label),
                    ));
                }
                by_label[label - 1] = Some(model.clone());
            }
        }
        let agents = by_label
            .into_iter()
            .enumerate()
            .map(|(i, m)| m.ok_or_else(|| parse_err(path, format!("agent: no model for agent {}", i + 1))))
            .collect::<Result<Vec<_>>>()?;

        let exosystem = Exosystem::new(
            matrix(path, "exosystem.a", &self.exosystem.a)?,
            matrix(path, "exosystem.c", &self.exosystem.c)?,
            self.exosystem.x0.clone(),
        )
        .map_err(|e| parse_err(path, format!("exosystem: {}", e)))?;

        let heterogeneous = match (self.variant, &self.target) {
            (Variant::Heterogeneous, Some(t)) => Some(HeterogeneousSpec {
                target: self.target_spec(path, t)?,
                precompensators: vec![PreCompensatorSpec::Auto; n],
            }),
            (Variant::Heterogeneous, None) => {
                return Err(parse_err(path, "target: required for the heterogeneous variant"))
            }
            (_, Some(_)) => {
                return Err(parse_err(path, "target: only allowed for the heterogeneous variant"))
            }
            (_, None) => None,
        };

        let t = &self.topology;
        if t.root == 0 || t.root > n {
            return Err(parse_err(path, format!("topology.root: {} outside 1..={}", t.root, n)));
        }
        let mut edges = Vec::with_capacity(t.edges.len());
        for (ei, e) in t.edges.iter().enumerate() {
            let field = format!("topology.edge[{}]", ei);
            for (name, v) in [("from", e.from), ("to", e.to)] {
                if v == 0 || v > n {
                    return Err(parse_err(path, format!("{}.{}: {} outside 1..={}", field, name, v, n)));
                }
            }
            let (delay, protocol_delay) = match (e.delay, e.protocol_delay) {
                (Some(d), Some(p)) => (d, p),
                (Some(d), None) | (None, Some(d)) => (d, d),
                (None, None) => {
                    return Err(parse_err(path, format!("{}: needs delay or protocol_delay", field)))
                }
            };
            edges.push(Edge {
                from: e.from - 1,
                to: e.to - 1,
                weight: e.weight,
                delay,
                protocol_delay,
            });
        }
        let topology = NetworkTopology::new(n, t.root - 1, t.root_delay, edges);

        let gains = match &self.gains {
            GainsBlock::Explicit { k, h } => GainSpec::Explicit(Gains {
                k: matrix(path, "gains.k", k)?,
                h: match h {
                    Some(h) => Some(matrix(path, "gains.h", h)?),
                    None => None,
                },
            }),
            GainsBlock::Synthesize {
                q,
                r,
                observer_q,
                observer_r,
            } => {
                let opt = |field: &str, m: &Option<Rows>| -> Result<Option<RealMatrix>> {
                    m.as_ref().map(|m| matrix(path, field, m)).transpose()
                };
                GainSpec::Synthesize(SynthesisWeights {
                    q: opt("gains.q", q)?,
                    r: opt("gains.r", r)?,
                    observer_q: opt("gains.observer_q", observer_q)?,
                    observer_r: opt("gains.observer_r", observer_r)?,
                })
            }
        };

        let r = &self.run;
        if !(r.tolerance.is_finite() && r.tolerance > 0.0) {
            return Err(parse_err(path, format!("run.tolerance: {} is not positive", r.tolerance)));
        }
        let initial = match (&r.initial_states, r.initial_scale) {
            (Some(_), Some(_)) => {
                return Err(parse_err(
                    path,
                    "run: give either initial_states or initial_scale, not both",
                ))
            }
            (Some(states), None) => InitialStates::Explicit(states.clone()),
            (None, scale) => {
                let scale = scale.unwrap_or(1.0);
                if !(scale.is_finite() && scale >= 0.0) {
                    return Err(parse_err(path, format!("run.initial_scale: {} is invalid", scale)));
                }
                InitialStates::Random { scale }
            }
        };

        Ok(Scenario {
            name: self.name.clone(),
            variant: self.variant,
            agents,
            heterogeneous,
            exosystem,
            topology,
            gains,
            run: RunSettings {
                horizon: r.horizon,
                tolerance: r.tolerance,
                prefill: r.prefill,
                seed: r.seed,
                initial,
                verify_gains: r.verify_gains,
            },
        })
    }

    fn target_spec(&self, path: &str, t: &TargetBlock) -> Result<TargetSpec> {
        match (&t.a, &t.b, &t.c) {
            (None, None, None) => Ok(TargetSpec::Remodel { nq: t.nq }),
            (Some(a), Some(b), Some(c)) => TargetModel::new(
                matrix(path, "target.a", a)?,
                matrix(path, "target.b", b)?,
                matrix(path, "target.c", c)?,
                t.nq,
            )
            .map(TargetSpec::Explicit)
            .map_err(|e| parse_err(path, format!("target: {}", e))),
            _ => Err(parse_err(path, "target: give all of a, b, c or none of them")),
        }
    }

    /// File form of a scenario. Agents with identical models share a block.
    /// Scenarios with explicit pre-compensators have no file form.
    pub fn from_scenario(s: &Scenario) -> Result<Self> {
        let mut groups: Vec<(AgentModel, Vec<usize>)> = Vec::new();
        for (i, m) in s.agents.iter().enumerate() {
            match groups.iter_mut().find(|(g, _)| g == m) {
                Some((_, labels)) => labels.push(i + 1),
                None => groups.push((m.clone(), vec![i + 1])),
            }
        }
        let agents = groups
            .into_iter()
            .map(|(m, labels)| AgentBlock {
                labels,
                a: rows(&m.a),
                b: rows(&m.b),
                c: rows(&m.c),
                c_m: m.c_m.as_ref().map(rows),
            })
            .collect();

        let target = match &s.heterogeneous {
            None => None,
            Some(h) => {
                if h.precompensators.iter().any(|p| !matches!(p, PreCompensatorSpec::Auto)) {
                    return Err(Error::Validation(
                        "explicit pre-compensators cannot be written to a scenario file".to_string(),
                    ));
                }
                Some(match &h.target {
                    TargetSpec::Remodel { nq } => TargetBlock {
                        nq: *nq,
                        a: None,
                        b: None,
                        c: None,
                    },
                    TargetSpec::Explicit(t) => TargetBlock {
                        nq: t.nq,
                        a: Some(rows(&t.a)),
                        b: Some(rows(&t.b)),
                        c: Some(rows(&t.c)),
                    },
                })
            }
        };

        let t = &s.topology;
        let roots: Vec<usize> = (0..t.agents).filter(|&i| t.root_links.get(i) == Some(&true)).collect();
        let root = match roots.as_slice() {
            [r] => r + 1,
            _ => {
                return Err(Error::Validation(
                    "a scenario file needs exactly one agent linked to the exosystem".to_string(),
                ))
            }
        };
        let topology = TopologyBlock {
            agents: t.agents,
            root,
            root_delay: t.root_delay,
            edges: t
                .edges
                .iter()
                .map(|e| EdgeBlock {
                    from: e.from + 1,
                    to: e.to + 1,
                    weight: e.weight,
                    delay: Some(e.delay),
                    protocol_delay: Some(e.protocol_delay),
                })
                .collect(),
        };

        let gains = match &s.gains {
            GainSpec::Explicit(g) => GainsBlock::Explicit {
                k: rows(&g.k),
                h: g.h.as_ref().map(rows),
            },
            GainSpec::Synthesize(w) => GainsBlock::Synthesize {
                q: w.q.as_ref().map(rows),
                r: w.r.as_ref().map(rows),
                observer_q: w.observer_q.as_ref().map(rows),
                observer_r: w.observer_r.as_ref().map(rows),
            },
        };

        let r = &s.run;
        if i64::try_from(r.seed).is_err() {
            return Err(Error::Validation(format!(
                "seed {} exceeds the largest integer a scenario file can hold ({})",
                r.seed,
                i64::MAX
            )));
        }
        let (initial_scale, initial_states) = match &r.initial {
            InitialStates::Random { scale } => (Some(*scale), None),
            InitialStates::Explicit(states) => (None, Some(states.clone())),
        };
        Ok(ScenarioFile {
            name: s.name.clone(),
            variant: s.variant,
            agents,
            exosystem: ExosystemBlock {
                a: rows(&s.exosystem.a),
                c: rows(&s.exosystem.c),
                x0: s.exosystem.x0.clone(),
            },
            target,
            topology,
            gains,
            run: RunBlock {
                horizon: r.horizon,
                tolerance: r.tolerance,
                prefill: r.prefill,
                seed: r.seed,
                initial_scale,
                initial_states,
                verify_gains: r.verify_gains,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{heterogeneous, homogeneous, Case};

    #[test]
    fn preset_round_trip() {
        for s in [homogeneous(Case::Five), heterogeneous(Case::Ten)] {
            let f = ScenarioFile::from_scenario(&s).unwrap();
            let text = f.to_toml().unwrap();
            let back = ScenarioFile::parse(&text, "mem").unwrap();
            assert_eq!(back, f);
            assert_eq!(back.to_scenario("mem").unwrap(), s);
        }
    }

    #[test]
    fn heterogeneous_agents_grouped_by_model() {
        let f = ScenarioFile::from_scenario(&heterogeneous(Case::Ten)).unwrap();
        assert_eq!(f.agents.len(), 4);
        assert_eq!(f.agents[2].labels, vec![3, 4, 8, 9]);
    }

    #[test]
    fn one_sided_delay_is_mirrored() {
        let mut f = ScenarioFile::from_scenario(&homogeneous(Case::Three)).unwrap();
        f.topology.edges[1].protocol_delay = None;
        let s = f.to_scenario("mem").unwrap();
        assert_eq!(s.topology.edges[1].protocol_delay, s.topology.edges[1].delay);
        f.topology.edges[1].delay = None;
        let err = f.to_scenario("mem").unwrap_err();
        assert!(err.to_string().contains("topology.edge[1]"), "{err}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = ScenarioFile::parse("name = \"x\"\nvariant = 3\n", "bad.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.toml") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn ragged_matrix_names_field() {
        let mut f = ScenarioFile::from_scenario(&homogeneous(Case::Three)).unwrap();
        f.agents[0].b = vec![vec![1.0], vec![1.0, 2.0], vec![0.0]];
        let err = f.to_scenario("mem").unwrap_err();
        assert!(err.to_string().contains("agent[0].b"), "{err}");
    }

    #[test]
    fn missing_agent_model_rejected() {
        let mut f = ScenarioFile::from_scenario(&homogeneous(Case::Three)).unwrap();
        f.agents[0].labels = vec![1, 3];
        let err = f.to_scenario("mem").unwrap_err();
        assert!(err.to_string().contains("agent 2"), "{err}");
    }
}
