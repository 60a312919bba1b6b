//! Seeded generators for trees, delays and initial conditions.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::topology::{Edge, NetworkTopology};

/// Random directed spanning tree on `n` agents with random labels. Weights
/// are one unless `heterogeneous_weights`, in which case they are drawn
/// from `[0.5, 2]`.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize, heterogeneous_weights: bool) -> NetworkTopology {
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(rng);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for child in 1..n {
        let parent = rng.gen_range(0..child);
        let weight = if heterogeneous_weights {
            rng.gen_range(0.5..2.0)
        } else {
            1.0
        };
        edges.push(Edge {
            from: labels[parent],
            to: labels[child],
            weight,
            delay: 0,
            protocol_delay: 0,
        });
    }
    edges.shuffle(rng);
    NetworkTopology::new(n, labels[0], 0, edges)
}

/// Draws every output-channel and exchange-channel delay independently
/// from `lo..=hi`. The exosystem link keeps its delay.
pub fn randomize_delays<R: Rng>(rng: &mut R, t: &NetworkTopology, lo: usize, hi: usize) -> NetworkTopology {
    let mut t = t.clone();
    for e in &mut t.edges {
        e.delay = rng.gen_range(lo..=hi);
        e.protocol_delay = rng.gen_range(lo..=hi);
    }
    t
}

pub fn zero_delays(t: &NetworkTopology) -> NetworkTopology {
    let mut t = t.clone();
    t.root_delay = 0;
    for e in &mut t.edges {
        e.delay = 0;
        e.protocol_delay = 0;
    }
    t
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..=scale)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::validate_and_reorder;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_trees_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..20 {
            let t = random_tree(&mut rng, n, true);
            assert_eq!(t.edges.len(), n - 1);
            validate_and_reorder(&t).unwrap();
        }
    }

    #[test]
    fn delays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = random_tree(&mut rng, 12, false);
        let d = randomize_delays(&mut rng, &t, 1, 20);
        assert!(d.edges.iter().all(|e| (1..=20).contains(&e.delay) && (1..=20).contains(&e.protocol_delay)));
        let z = zero_delays(&d);
        assert!(z.edges.iter().all(|e| e.delay == 0 && e.protocol_delay == 0));
    }
}
