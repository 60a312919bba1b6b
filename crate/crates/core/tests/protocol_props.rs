use std::collections::BTreeMap;

use delaysync::engine::random::{random_tree, zero_delays};
use delaysync::engine::{simulate, GainSpec, InitialStates, Scenario};
use delaysync::numerics::RealMatrix;
use delaysync::plant::{AgentModel, Exosystem};
use delaysync::presets::{homogeneous, homogeneous_agent, homogeneous_gains, Case};
use delaysync::protocol::{
    coupling_zeta_bar, coupling_zeta_hat, protocol2_step, Gains, ProtocolState, Variant,
};
use delaysync::topology::{derive, validate_and_reorder};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn on_reference(variant: Variant, seed: u64, n: usize, x0: Vec<f64>) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = homogeneous(Case::Three);
    if variant == Variant::FullState {
        let base = homogeneous_agent();
        let agent = AgentModel::new(base.a.clone(), base.b, RealMatrix::identity(3)).unwrap();
        s.exosystem = Exosystem::new(base.a, RealMatrix::identity(3), x0.clone()).unwrap();
        s.agents = vec![agent; n];
        s.gains = GainSpec::Explicit(Gains { k: homogeneous_gains().k, h: None });
    } else {
        s.exosystem.x0 = x0.clone();
        s.agents = vec![homogeneous_agent(); n];
    }
    s.variant = variant;
    s.topology = zero_delays(&random_tree(&mut rng, n, true));
    s.run.initial = InitialStates::Explicit(vec![x0; n]);
    s.run.horizon = 60;
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synchronized_network_stays_synchronized(seed in any::<u64>(), n in 1usize..9,
                                               x0 in prop::collection::vec(-1.0f64..1.0, 3)) {
        for variant in [Variant::FullState, Variant::PartialState] {
            let p = on_reference(variant, seed, n, x0.clone()).prepare().unwrap();
            let r = simulate(&p).unwrap();
            for k in 0..r.horizon {
                for i in 0..n {
                    for (a, b) in r.states[k][i].iter().zip(&r.exo_states[k]) {
                        prop_assert!((a - b).abs() < 1e-12, "{:?} step {} agent {}", variant, k, i);
                    }
                    prop_assert!(r.inputs[k][i].iter().all(|u| u.abs() < 1e-12));
                }
            }
        }
    }

    #[test]
    fn couplings_vanish_on_agreement(seed in any::<u64>(), n in 1usize..9,
                                     y in prop::collection::vec(-2.0f64..2.0, 1),
                                     chi in prop::collection::vec(-2.0f64..2.0, 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = derive(&validate_and_reorder(&random_tree(&mut rng, n, true)).unwrap()).unwrap();
        for i in 0..n {
            let ys: BTreeMap<usize, Vec<f64>> = d.neighbors(i).iter().map(|&j| (j, y.clone())).collect();
            let yr = d.root_link(i).then_some(y.as_slice());
            let zb = coupling_zeta_bar(&d, i, &y, &ys, yr).unwrap();
            prop_assert!(zb.iter().all(|v| v.abs() < 1e-14));

            // equal exchange variables leave the share not covered by
            // neighbors: (1 - Σ_j d̄_ij) χ
            let cs: BTreeMap<usize, Vec<f64>> = d.neighbors(i).iter().map(|&j| (j, chi.clone())).collect();
            let zh = coupling_zeta_hat(&d, i, &chi, &cs).unwrap();
            let row: f64 = (0..n).map(|j| d.contraction[(i, j)]).sum();
            for (z, c) in zh.iter().zip(&chi) {
                prop_assert!((z - (1.0 - row) * c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn observer_protocol_is_linear(s1 in prop::collection::vec(-1.0f64..1.0, 12),
                                   s2 in prop::collection::vec(-1.0f64..1.0, 12),
                                   a in -2.0f64..2.0) {
        let agent = homogeneous_agent();
        let gains = homogeneous_gains();
        let split = |v: &[f64]| (
            ProtocolState { chi: v[0..3].to_vec(), xhat: v[3..6].to_vec(), xi: Vec::new() },
            v[6..7].to_vec(),
            v[9..12].to_vec(),
        );
        let (st1, zb1, zh1) = split(&s1);
        let (st2, zb2, zh2) = split(&s2);
        let mix: Vec<f64> = s1.iter().zip(&s2).map(|(x, y)| a * x + y).collect();
        let (stm, zbm, zhm) = split(&mix);
        let step = |s: &ProtocolState, zb: &[f64], zh: &[f64]| {
            protocol2_step(&agent.a, &agent.b, &agent.c, s, zb, zh, &gains).unwrap()
        };
        let (n1, u1) = step(&st1, &zb1, &zh1);
        let (n2, u2) = step(&st2, &zb2, &zh2);
        let (nm, um) = step(&stm, &zbm, &zhm);
        let close = |m: &[f64], p: &[f64], q: &[f64]| {
            m.iter().zip(p).zip(q).all(|((m, p), q)| (m - (a * p + q)).abs() < 1e-12)
        };
        prop_assert!(close(&nm.chi, &n1.chi, &n2.chi));
        prop_assert!(close(&nm.xhat, &n1.xhat, &n2.xhat));
        prop_assert!(close(&um, &u1, &u2));
    }
}
