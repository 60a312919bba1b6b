use delaysync::engine::random::{random_tree, randomize_delays};
use delaysync::numerics::{spectral_radius, RealMatrix};
use delaysync::topology::{delay_transfer_matrix, derive, validate_and_reorder, Edge, NetworkTopology};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tree(seed: u64, max: usize) -> NetworkTopology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max);
    let weighted = rng.gen_bool(0.5);
    let t = random_tree(&mut rng, n, weighted);
    let mut t = randomize_delays(&mut rng, &t, 0, 6);
    t.root_delay = rng.gen_range(0..4);
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn network_matrices(seed in any::<u64>()) {
        let d = derive(&validate_and_reorder(&tree(seed, 25)).unwrap()).unwrap();
        let n = d.agents();
        let identity = RealMatrix::identity(n);
        let mut scaled = d.laplacian.clone();
        for i in 0..n {
            let s = d.row_stochastic.row_slice(i).iter().sum::<f64>();
            prop_assert!((s - 1.0).abs() < 1e-12);
            for j in 0..n {
                scaled[(i, j)] /= 1.0 + d.in_degree[(i, i)];
            }
        }
        prop_assert!((&scaled + &d.row_stochastic).approx_eq(&identity, 1e-12));

        let dbar = &d.contraction;
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                prop_assert!(dbar[(i, j)] >= 0.0);
                if j > i {
                    prop_assert_eq!(dbar[(i, j)], 0.0);
                }
                sum += dbar[(i, j)];
            }
            prop_assert!(dbar[(i, i)] > 0.0 && dbar[(i, i)] < 1.0);
            prop_assert!(sum <= 1.0 + 1e-12);
        }
        prop_assert!(spectral_radius(dbar).unwrap() < 1.0);
    }

    #[test]
    fn rotated_contraction_keeps_modulus(seed in any::<u64>(), omegas in prop::collection::vec(-10.0f64..10.0, 1..8)) {
        let d = derive(&validate_and_reorder(&tree(seed, 12)).unwrap()).unwrap();
        let n = d.agents();
        for w in omegas {
            let m = delay_transfer_matrix(&d, w);
            for i in 0..n {
                for j in 0..n {
                    prop_assert!((m[(i, j)].norm() - d.contraction[(i, j)]).abs() < 1e-14);
                }
            }
        }
        let zero = delay_transfer_matrix(&d, 0.0);
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(zero[(i, j)].re, d.contraction[(i, j)]);
                prop_assert_eq!(zero[(i, j)].im, 0.0);
            }
        }
    }

    #[test]
    fn relabeling_conjugates_network(seed in any::<u64>()) {
        let t = tree(seed, 15);
        let n = t.agents;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut sigma: Vec<usize> = (0..n).collect();
        sigma.shuffle(&mut rng);
        let root = (0..n).find(|&i| t.root_links[i]).unwrap();
        let relabeled = NetworkTopology::new(
            n,
            sigma[root],
            t.root_delay,
            t.edges.iter().map(|e| Edge { from: sigma[e.from], to: sigma[e.to], ..e.clone() }).collect(),
        );
        let d1 = derive(&validate_and_reorder(&t).unwrap()).unwrap();
        let d2 = derive(&validate_and_reorder(&relabeled).unwrap()).unwrap();
        let pos = |order: &[usize], label: usize| order.iter().position(|&o| o == label).unwrap();
        let (o1, o2) = (&d1.topology.order, &d2.topology.order);
        for a in 0..n {
            let (i1, i2) = (pos(o1, a), pos(o2, sigma[a]));
            prop_assert_eq!(d1.cumulative_delays[i1], d2.cumulative_delays[i2]);
            for b in 0..n {
                let (j1, j2) = (pos(o1, b), pos(o2, sigma[b]));
                prop_assert_eq!(d1.contraction[(i1, j1)], d2.contraction[(i2, j2)]);
                prop_assert_eq!(d1.laplacian[(i1, j1)], d2.laplacian[(i2, j2)]);
                prop_assert_eq!(d1.delay_mismatch(i1, j1), d2.delay_mismatch(i2, j2));
            }
        }
    }

    #[test]
    fn cumulative_delay_is_path_sum(seed in any::<u64>()) {
        let d = derive(&validate_and_reorder(&tree(seed, 20)).unwrap()).unwrap();
        prop_assert_eq!(d.cumulative_delays[0], d.topology.root_delay);
        for e in &d.topology.edges {
            prop_assert_eq!(d.cumulative_delays[e.to], d.cumulative_delays[e.from] + e.delay);
            prop_assert!(e.from < e.to);
        }
    }
}
