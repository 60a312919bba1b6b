//! Directed spanning-tree communication networks with per-edge delays, and the
//! network matrices derived from them: Laplacian `L`, row-stochastic `D`,
//! expanded Laplacian `L̄ = L + diag(ι)` and the contraction matrix
//! `D̄ = I - (2I + D_in)^{-1} L̄`.
//!
//! Agents are addressed by zero-based index internally. A topology is put in
//! canonical order by [`validate_and_reorder`]: root first and every parent
//! before its children, which makes `L` lower triangular.

use std::collections::{BTreeMap, BinaryHeap};
use std::cmp::Reverse;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Complex64, ComplexMatrix, RealMatrix};

/// Directed link `from -> to` carrying the output of `from` to `to`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    /// Delay on the output channel (`κ_ij` with `i = to`, `j = from`).
    pub delay: usize,
    /// Delay on the protocol exchange channel (`κ̂_ij`).
    pub protocol_delay: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkTopology {
    pub agents: usize,
    pub edges: Vec<Edge>,
    /// `ι_i`: which agents receive the exosystem output.
    pub root_links: Vec<bool>,
    /// Delay on the exosystem link of the root (`κ_1r`).
    pub root_delay: usize,
    /// `order[k]` is the original index of the agent now at position `k`.
    pub order: Vec<usize>,
}

impl NetworkTopology {
    /// Topology with the given edges and a single exosystem link at `root`.
    pub fn new(agents: usize, root: usize, root_delay: usize, edges: Vec<Edge>) -> Self {
        let mut root_links = vec![false; agents];
        if root < agents {
            root_links[root] = true;
        }
        NetworkTopology {
            agents,
            edges,
            root_links,
            root_delay,
            order: (0..agents).collect(),
        }
    }

    pub fn weights(&self) -> RealMatrix {
        let mut a = RealMatrix::zeros(self.agents, self.agents);
        for e in &self.edges {
            a[(e.to, e.from)] += e.weight;
        }
        a
    }

    pub fn root(&self) -> Option<usize> {
        self.root_links.iter().position(|&l| l)
    }

    pub fn parent(&self, i: usize) -> Option<&Edge> {
        self.edges.iter().find(|e| e.to == i)
    }

    pub fn is_canonical(&self) -> bool {
        self.root_links.first() == Some(&true)
            && self.edges.iter().all(|e| e.from < e.to)
    }
}

/// Checks the directed-spanning-tree structure and relabels agents so that the
/// root comes first and every parent precedes its children. Among valid
/// orders the one that keeps smaller original labels first is chosen, so an
/// already canonical topology is returned unchanged.
pub fn validate_and_reorder(t: &NetworkTopology) -> Result<NetworkTopology> {
    let n = t.agents;
    if n == 0 {
        return Err(Error::Topology {
            node: 0,
            reason: "network has no agents".to_string(),
        });
    }
    if t.root_links.len() != n {
        return Err(Error::Topology {
            node: 0,
            reason: format!("{} root links for {} agents", t.root_links.len(), n),
        });
    }
    let roots: Vec<usize> = (0..n).filter(|&i| t.root_links[i]).collect();
    let root = match roots.as_slice() {
        [r] => *r,
        [] => {
            return Err(Error::Topology {
                node: 0,
                reason: "no agent is linked to the exosystem".to_string(),
            })
        }
        [_, second, ..] => {
            return Err(Error::Topology {
                node: *second,
                reason: "more than one agent is linked to the exosystem".to_string(),
            })
        }
    };
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &t.edges {
        if e.from >= n || e.to >= n {
            return Err(Error::Topology {
                node: e.from.max(e.to),
                reason: "edge endpoint out of range".to_string(),
            });
        }
        if e.from == e.to {
            return Err(Error::Topology {
                node: e.to,
                reason: "self-loop".to_string(),
            });
        }
        if !(e.weight.is_finite() && e.weight > 0.0) {
            return Err(Error::Topology {
                node: e.to,
                reason: format!("edge {} -> {} has non-positive weight {}", e.from + 1, e.to + 1, e.weight),
            });
        }
        if parent[e.to].is_some() {
            return Err(Error::Topology {
                node: e.to,
                reason: "in-degree greater than one".to_string(),
            });
        }
        parent[e.to] = Some(e.from);
        children[e.from].push(e.to);
    }
    if let Some(p) = parent[root] {
        return Err(Error::Topology {
            node: root,
            reason: format!("root has an incoming edge from {}", p + 1),
        });
    }
    if let Some(i) = (0..n).find(|&i| i != root && parent[i].is_none()) {
        return Err(Error::Topology {
            node: i,
            reason: "non-root agent has in-degree zero".to_string(),
        });
    }

    // Smallest-label-first topological order from the root.
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(root));
    while let Some(Reverse(v)) = heap.pop() {
        order.push(v);
        for &c in &children[v] {
            heap.push(Reverse(c));
        }
    }
    if order.len() != n {
        // Every unreached agent has a parent, so following parents must
        // close a cycle.
        let unreached = (0..n).find(|i| !order.contains(i)).unwrap_or(0);
        let mut seen = vec![false; n];
        let mut v = unreached;
        while !seen[v] {
            seen[v] = true;
            v = parent[v].unwrap_or(v);
        }
        let mut cycle = vec![v];
        let mut w = parent[v].unwrap_or(v);
        while w != v {
            cycle.push(w);
            w = parent[w].unwrap_or(v);
        }
        cycle.reverse();
        let start = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap_or(0);
        cycle.rotate_left(start);
        cycle.push(cycle[0]);
        let names: Vec<String> = cycle.iter().map(|c| (c + 1).to_string()).collect();
        return Err(Error::Topology {
            node: v,
            reason: format!("agents form a cycle {}", names.join(" -> ")),
        });
    }

    let mut position = vec![0; n];
    for (k, &v) in order.iter().enumerate() {
        position[v] = k;
    }
    let mut edges: Vec<Edge> = t
        .edges
        .iter()
        .map(|e| Edge {
            from: position[e.from],
            to: position[e.to],
            ..e.clone()
        })
        .collect();
    edges.sort_by_key(|e| e.to);
    let mut root_links = vec![false; n];
    root_links[0] = true;
    Ok(NetworkTopology {
        agents: n,
        edges,
        root_links,
        root_delay: t.root_delay,
        order: order.iter().map(|&v| t.order[v]).collect(),
    })
}

/// Network matrices and delay bookkeeping for a canonical topology.
#[derive(Clone, Debug)]
pub struct DerivedNetwork {
    pub topology: NetworkTopology,
    pub adjacency: RealMatrix,
    pub laplacian: RealMatrix,
    pub row_stochastic: RealMatrix,
    pub in_degree: RealMatrix,
    pub expanded_laplacian: RealMatrix,
    pub contraction: RealMatrix,
    /// `κ_ir`: summed output-channel delay from the exosystem to each agent.
    pub cumulative_delays: Vec<usize>,
    plant_delays: BTreeMap<(usize, usize), usize>,
    protocol_delays: BTreeMap<(usize, usize), usize>,
    neighbors: Vec<Vec<usize>>,
}

pub fn derive(t: &NetworkTopology) -> Result<DerivedNetwork> {
    let t = if t.is_canonical() {
        // still run validation for the structural checks
        let checked = validate_and_reorder(t)?;
        debug_assert_eq!(checked.edges.len(), t.edges.len());
        checked
    } else {
        return Err(Error::Topology {
            node: t.root().unwrap_or(0),
            reason: "topology is not in canonical order; call validate_and_reorder first"
                .to_string(),
        });
    };
    let n = t.agents;
    let adjacency = t.weights();
    let mut laplacian = adjacency.scale(-1.0);
    let mut d_in = vec![0.0; n];
    for i in 0..n {
        d_in[i] = (0..n).map(|j| adjacency[(i, j)]).sum();
        laplacian[(i, i)] = d_in[i];
    }
    let iota: Vec<f64> = t.root_links.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
    let expanded = &laplacian + &RealMatrix::diag(&iota);

    let mut row_stochastic = RealMatrix::identity(n);
    let mut contraction = RealMatrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            row_stochastic[(i, j)] -= laplacian[(i, j)] / (1.0 + d_in[i]);
            contraction[(i, j)] -= expanded[(i, j)] / (2.0 + d_in[i]);
        }
    }

    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            let v = contraction[(i, j)];
            if v < -1e-15 {
                return Err(Error::Topology {
                    node: t.order[i],
                    reason: format!(
                        "contraction matrix entry ({}, {}) is negative",
                        t.order[i] + 1,
                        t.order[j] + 1
                    ),
                });
            }
            sum += v;
        }
        if sum > 1.0 + 1e-12 {
            return Err(Error::Topology {
                node: t.order[i],
                reason: format!("contraction matrix row sum {} exceeds one", sum),
            });
        }
    }

    let mut plant_delays = BTreeMap::new();
    let mut protocol_delays = BTreeMap::new();
    let mut neighbors = vec![Vec::new(); n];
    let mut cumulative = vec![0usize; n];
    cumulative[0] = t.root_delay;
    // canonical order: parents are processed before children
    for e in &t.edges {
        plant_delays.insert((e.to, e.from), e.delay);
        protocol_delays.insert((e.to, e.from), e.protocol_delay);
        neighbors[e.to].push(e.from);
    }
    for i in 1..n {
        let p = neighbors[i][0];
        cumulative[i] = cumulative[p] + plant_delays[&(i, p)];
    }

    Ok(DerivedNetwork {
        adjacency,
        laplacian,
        row_stochastic,
        in_degree: RealMatrix::diag(&d_in),
        expanded_laplacian: expanded,
        contraction,
        cumulative_delays: cumulative,
        plant_delays,
        protocol_delays,
        neighbors,
        topology: t,
    })
}

impl DerivedNetwork {
    pub fn agents(&self) -> usize {
        self.topology.agents
    }

    /// In-neighbors of agent `i` (agents whose signals `i` receives).
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// `κ_ij`; zero for `i == j`.
    pub fn plant_delay(&self, i: usize, j: usize) -> Option<usize> {
        if i == j {
            return Some(0);
        }
        self.plant_delays.get(&(i, j)).copied()
    }

    /// `κ̂_ij`; zero for `i == j`.
    pub fn protocol_delay(&self, i: usize, j: usize) -> Option<usize> {
        if i == j {
            return Some(0);
        }
        self.protocol_delays.get(&(i, j)).copied()
    }

    pub fn in_degree_of(&self, i: usize) -> f64 {
        self.in_degree[(i, i)]
    }

    pub fn root_link(&self, i: usize) -> bool {
        self.topology.root_links[i]
    }

    /// Signed delay mismatch `κ̂_ij - κ_ij` of an edge.
    pub fn delay_mismatch(&self, i: usize, j: usize) -> Option<i64> {
        Some(self.protocol_delay(i, j)? as i64 - self.plant_delay(i, j)? as i64)
    }

    /// Same network with every delay (including the root link) set to zero.
    pub fn without_delays(&self) -> Result<DerivedNetwork> {
        let mut t = self.topology.clone();
        t.root_delay = 0;
        for e in &mut t.edges {
            e.delay = 0;
            e.protocol_delay = 0;
        }
        derive(&t)
    }
}

/// `D̄_{jω}(κ)`: the contraction matrix with each off-diagonal entry rotated
/// by `e^{-jω(κ̂_ij - κ_ij)}`.
pub fn delay_transfer_matrix(d: &DerivedNetwork, omega: f64) -> ComplexMatrix {
    let n = d.agents();
    let mut m = ComplexMatrix::from_real(&d.contraction);
    for i in 0..n {
        for &j in d.neighbors(i) {
            let shift = d.delay_mismatch(i, j).expect("neighbor has delays") as f64;
            let phase = Complex64::from_polar(1.0, -omega * shift);
            m[(i, j)] = Complex64::new(d.contraction[(i, j)], 0.0) * phase;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(from: usize, to: usize, delay: usize, protocol_delay: usize) -> Edge {
        Edge {
            from,
            to,
            weight: 1.0,
            delay,
            protocol_delay,
        }
    }

    fn three_node() -> NetworkTopology {
        NetworkTopology::new(3, 0, 0, vec![edge(0, 1, 3, 2), edge(0, 2, 2, 2)])
    }

    #[test]
    fn canonical_tree_unchanged() {
        let t = three_node();
        let r = validate_and_reorder(&t).unwrap();
        assert_eq!(r, t);
    }

    #[test]
    fn swapped_labels_are_reordered() {
        // root is agent 1 (label 2); agent 0 (label 1) hangs off it
        let t = NetworkTopology::new(3, 1, 0, vec![edge(1, 0, 3, 2), edge(1, 2, 2, 2)]);
        let r = validate_and_reorder(&t).unwrap();
        assert_eq!(r.order, vec![1, 0, 2]);
        let d = derive(&r).unwrap();
        for i in 0..3 {
            for j in i + 1..3 {
                assert_eq!(d.laplacian[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn two_cycle_rejected() {
        let t = NetworkTopology::new(2, 0, 0, vec![edge(0, 1, 1, 1), edge(1, 0, 1, 1)]);
        let err = validate_and_reorder(&t).unwrap_err();
        assert!(matches!(err, Error::Topology { node: 0, .. }), "{err}");
    }

    #[test]
    fn detached_cycle_rejected() {
        let t = NetworkTopology::new(
            4,
            0,
            0,
            vec![edge(0, 1, 1, 1), edge(2, 3, 1, 1), edge(3, 2, 1, 1)],
        );
        let err = validate_and_reorder(&t).unwrap_err();
        assert!(err.to_string().contains("cycle"), "{err}");
    }

    #[test]
    fn bad_root_links_rejected() {
        let mut t = three_node();
        t.root_links = vec![true, true, false];
        assert!(matches!(
            validate_and_reorder(&t),
            Err(Error::Topology { node: 1, .. })
        ));
        t.root_links = vec![false, true, false];
        assert!(validate_and_reorder(&t).is_err());
        t.root_links = vec![false; 3];
        assert!(validate_and_reorder(&t).is_err());
    }

    #[test]
    fn non_positive_weight_rejected() {
        let mut t = three_node();
        t.edges[1].weight = -0.5;
        assert!(validate_and_reorder(&t).is_err());
    }

    #[test]
    fn three_node_contraction_by_hand() {
        let d = derive(&three_node()).unwrap();
        let want = RealMatrix::from_rows(&[
            [0.5, 0.0, 0.0],
            [1.0 / 3.0, 2.0 / 3.0, 0.0],
            [1.0 / 3.0, 0.0, 2.0 / 3.0],
        ]);
        assert!(d.contraction.approx_eq(&want, 1e-15));
        assert_eq!(d.row_stochastic.row_slice(0), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn cumulative_delays_are_path_sums() {
        let d = derive(&three_node()).unwrap();
        assert_eq!(d.cumulative_delays, vec![0, 3, 2]);
        // κ_ij = κ_ir - κ_jr along edges
        for i in 1..3 {
            let j = d.neighbors(i)[0];
            assert_eq!(
                d.plant_delay(i, j).unwrap(),
                d.cumulative_delays[i] - d.cumulative_delays[j]
            );
        }
    }

    #[test]
    fn transfer_matrix_phases() {
        let d = derive(&three_node()).unwrap();
        let m0 = delay_transfer_matrix(&d, 0.0);
        assert_eq!(m0, ComplexMatrix::from_real(&d.contraction));
        // κ̂_21 - κ_21 = -1, ω = π/2 → e^{jπ/2} = j
        let m = delay_transfer_matrix(&d, std::f64::consts::FRAC_PI_2);
        let want = Complex64::new(0.0, 1.0 / 3.0);
        assert!((m[(1, 0)] - want).norm() < 1e-15);

        let t = NetworkTopology::new(2, 0, 0, vec![edge(0, 1, 1, 2)]);
        let d = derive(&t).unwrap();
        let m = delay_transfer_matrix(&d, std::f64::consts::PI);
        assert!((m[(1, 0)] + Complex64::new(d.contraction[(1, 0)], 0.0)).norm() < 1e-15);
    }

    #[test]
    fn non_canonical_derive_rejected() {
        let t = NetworkTopology::new(2, 1, 0, vec![edge(1, 0, 1, 1)]);
        assert!(derive(&t).is_err());
        assert!(derive(&validate_and_reorder(&t).unwrap()).is_ok());
    }
}
