use crate::numerics::{vec_norm, vec_sub};
use crate::protocol::Variant;
use crate::topology::DerivedNetwork;

use super::simulate::SimResult;

/// Error norms over time; `None` where the delayed reference does not exist
/// yet (`k < κ`).
#[derive(Clone, Debug, PartialEq)]
pub struct SyncErrors {
    /// `|x_i(k) - x_r(k - κ_ir)|` (homogeneous) or `|y_i(k) - y_r(k - κ_ir)|`
    /// (heterogeneous), indexed `[agent][step]`.
    pub regulated: Vec<Vec<Option<f64>>>,
    /// Errors along each tree edge `j -> i`: `|s_i(k) - s_j(k - κ_ij)|`.
    pub pairwise: Vec<PairSeries>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairSeries {
    pub agent: usize,
    pub neighbor: usize,
    pub delay: usize,
    pub errors: Vec<Option<f64>>,
}

impl SyncErrors {
    /// Largest regulated error at the last step.
    pub fn final_max(&self) -> f64 {
        self.max_at(self.horizon().saturating_sub(1))
    }

    pub fn horizon(&self) -> usize {
        self.regulated.first().map_or(0, |s| s.len())
    }

    /// Largest regulated error at step `k` over agents where it is defined;
    /// infinite if no agent has a defined error there.
    pub fn max_at(&self, k: usize) -> f64 {
        let vals: Vec<f64> = self.regulated.iter().filter_map(|s| s.get(k).copied().flatten()).collect();
        if vals.is_empty() {
            f64::INFINITY
        } else {
            vals.into_iter().fold(0.0, f64::max)
        }
    }

    /// Largest regulated error at any step `>= from`.
    pub fn max_from(&self, from: usize) -> f64 {
        (from..self.horizon()).map(|k| self.max_at(k)).fold(0.0, f64::max)
    }
}

fn signal<'a>(r: &'a SimResult, k: usize, i: usize) -> &'a [f64] {
    match r.variant {
        Variant::Heterogeneous => &r.outputs[k][i],
        _ => &r.states[k][i],
    }
}

fn reference<'a>(r: &'a SimResult, k: usize) -> &'a [f64] {
    match r.variant {
        Variant::Heterogeneous => &r.exo_outputs[k],
        _ => &r.exo_states[k],
    }
}

/// Regulated error vector of agent `i` at step `k`.
pub fn regulated_error(r: &SimResult, i: usize, k: usize) -> Option<Vec<f64>> {
    let kappa = r.cumulative_delays[i];
    (k >= kappa).then(|| vec_sub(signal(r, k, i), reference(r, k - kappa)))
}

/// Error `s_i(k) - s_j(k - (κ_ir - κ_jr))` between any two agents with
/// `κ_ir >= κ_jr`.
pub fn pairwise_error(r: &SimResult, i: usize, j: usize, k: usize) -> Option<Vec<f64>> {
    let (ki, kj) = (r.cumulative_delays[i], r.cumulative_delays[j]);
    let delay = ki.checked_sub(kj)?;
    (k >= delay).then(|| vec_sub(signal(r, k, i), signal(r, k - delay, j)))
}

pub fn delayed_sync_errors(r: &SimResult, d: &DerivedNetwork) -> SyncErrors {
    let n = r.agents();
    let horizon = r.states.len();
    let regulated = (0..n)
        .map(|i| {
            (0..horizon)
                .map(|k| regulated_error(r, i, k).map(|e| vec_norm(&e)))
                .collect()
        })
        .collect();
    let mut pairwise = Vec::new();
    for i in 0..n {
        for &j in d.neighbors(i) {
            let delay = d.plant_delay(i, j).expect("edge delay");
            let errors = (0..horizon)
                .map(|k| {
                    (k >= delay).then(|| vec_norm(&vec_sub(signal(r, k, i), signal(r, k - delay, j))))
                })
                .collect();
            pairwise.push(PairSeries {
                agent: i,
                neighbor: j,
                delay,
                errors,
            });
        }
    }
    SyncErrors {
        regulated,
        pairwise,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::simulate::simulate;
    use crate::presets::{homogeneous, Case};
    use crate::protocol::ProtocolState;

    /// Result whose agent `i` replays the exosystem delayed by `shift[i]`.
    fn shifted(delays: &[usize], shift: &[usize], horizon: usize) -> SimResult {
        let n = delays.len();
        let exo: Vec<Vec<f64>> = (0..horizon).map(|k| vec![k as f64, (k * k) as f64]).collect();
        let states: Vec<Vec<Vec<f64>>> = (0..horizon)
            .map(|k| (0..n).map(|i| exo[k.saturating_sub(shift[i])].clone()).collect())
            .collect();
        SimResult {
            name: "synthetic".into(),
            variant: Variant::PartialState,
            seed: 0,
            horizon,
            labels: (0..n).collect(),
            cumulative_delays: delays.to_vec(),
            outputs: states.clone(),
            states,
            inputs: vec![vec![Vec::new(); n]; horizon],
            controllers: vec![vec![ProtocolState::default(); n]; horizon],
            exo_outputs: exo.clone(),
            exo_states: exo,
        }
    }

    #[test]
    fn exact_delayed_tracking_has_zero_error() {
        let r = shifted(&[0, 3, 5], &[0, 3, 5], 30);
        for i in 0..3 {
            for k in 0..30 {
                match regulated_error(&r, i, k) {
                    Some(e) => assert_eq!(vec_norm(&e), 0.0),
                    None => assert!(k < r.cumulative_delays[i]),
                }
            }
        }
    }

    #[test]
    fn error_undefined_before_delay() {
        let r = shifted(&[0, 4], &[0, 4], 10);
        assert!(regulated_error(&r, 1, 3).is_none());
        assert!(regulated_error(&r, 1, 4).is_some());
    }

    #[test]
    fn wrong_shift_gives_nonzero_error() {
        let r = shifted(&[0, 3], &[0, 2], 20);
        assert!(vec_norm(&regulated_error(&r, 1, 10).unwrap()) > 0.0);
    }

    #[test]
    fn pairwise_error_zero_for_synchronized_pair() {
        // x_2(k) = x_1(k - 3)
        let r = shifted(&[0, 3], &[0, 3], 20);
        for k in 3..20 {
            assert_eq!(vec_norm(&pairwise_error(&r, 1, 0, k).unwrap()), 0.0);
        }
        assert!(pairwise_error(&r, 0, 1, 5).is_none());
    }

    #[test]
    fn series_lengths_and_edges() {
        let s = homogeneous(Case::Five);
        let p = s.prepare().unwrap();
        let r = simulate(&p).unwrap();
        let e = delayed_sync_errors(&r, &p.network);
        assert_eq!(e.regulated.len(), 5);
        assert!(e.regulated.iter().all(|s| s.len() == r.horizon));
        assert_eq!(e.pairwise.len(), 4);
        for (i, series) in e.regulated.iter().enumerate() {
            let kappa = r.cumulative_delays[i];
            assert!(series[..kappa].iter().all(Option::is_none));
            assert!(series[kappa..].iter().all(Option::is_some));
        }
        assert!(e.max_from(3 * r.horizon / 4) < 1e-2);
    }
}
