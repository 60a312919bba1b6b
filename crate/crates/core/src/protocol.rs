//! Coupling signals and the three controller recurrences.
//!
//! Agent `i` receives
//!
//! ```text
//! ζ̄_i = (y_i - y_r(k-κ_ir)) - Σ_j d̄_ij (y_j(k-κ_ij) - y_r(k-κ_ir))
//! ζ̂_i = χ_i - Σ_j d̄_ij χ_j(k-κ̂_ij)
//! ```
//!
//! where the sums run over the agent itself (zero delay) and its in-neighbors.
//! Only the root needs `y_r`; for every other agent it cancels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{vec_add, vec_sub, RealMatrix};
use crate::plant::{PreCompensator, TargetModel};
use crate::topology::DerivedNetwork;

/// Delayed samples keyed by the sending agent.
pub type NeighborSamples = BTreeMap<usize, Vec<f64>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    FullState,
    PartialState,
    Heterogeneous,
}

/// Feedback gain `K` and observer gain `H` (absent for full-state coupling).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub k: RealMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<RealMatrix>,
}

/// Controller internals of one agent. `chi` is the exchanged variable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProtocolState {
    pub chi: Vec<f64>,
    pub xhat: Vec<f64>,
    pub xi: Vec<f64>,
}

impl ProtocolState {
    /// Zero state with exchange/observer width `width` and pre-compensator
    /// width `pre_width`.
    pub fn zeros(variant: Variant, width: usize, pre_width: usize) -> Self {
        match variant {
            Variant::FullState => ProtocolState {
                chi: vec![0.0; width],
                ..Default::default()
            },
            Variant::PartialState => ProtocolState {
                chi: vec![0.0; width],
                xhat: vec![0.0; width],
                xi: Vec::new(),
            },
            Variant::Heterogeneous => ProtocolState {
                chi: vec![0.0; width],
                xhat: vec![0.0; width],
                xi: vec![0.0; pre_width],
            },
        }
    }

    pub fn is_finite(&self) -> bool {
        self.chi
            .iter()
            .chain(&self.xhat)
            .chain(&self.xi)
            .all(|v| v.is_finite())
    }
}

fn check_neighbors(d: &DerivedNetwork, i: usize, samples: &NeighborSamples) -> Result<()> {
    for &j in d.neighbors(i) {
        if !samples.contains_key(&j) {
            return Err(Error::Wiring {
                agent: i,
                reason: format!("missing delayed sample from neighbor {}", j),
            });
        }
    }
    if let Some(&j) = samples.keys().find(|j| !d.neighbors(i).contains(j)) {
        return Err(Error::Wiring {
            agent: i,
            reason: format!("sample from {} which is not an in-neighbor", j),
        });
    }
    Ok(())
}

fn check_width(i: usize, what: &str, v: &[f64], width: usize) -> Result<()> {
    if v.len() != width {
        return Err(Error::Wiring {
            agent: i,
            reason: format!("{} has width {}, expected {}", what, v.len(), width),
        });
    }
    Ok(())
}

/// Output coupling of agent `i`, evaluated in local form
/// `(Σ_j a_ij (y_i - y_j) + ι_i (y_i - y_r)) / (2 + d_in)`.
pub fn coupling_zeta_bar(
    d: &DerivedNetwork,
    i: usize,
    own_y: &[f64],
    neighbor_y: &NeighborSamples,
    delayed_y_r: Option<&[f64]>,
) -> Result<Vec<f64>> {
    check_neighbors(d, i, neighbor_y)?;
    let p = own_y.len();
    let weights = &d.adjacency;
    let mut acc = vec![0.0; p];
    for (&j, yj) in neighbor_y {
        check_width(i, "neighbor output", yj, p)?;
        let a = weights[(i, j)];
        for l in 0..p {
            acc[l] += a * (own_y[l] - yj[l]);
        }
    }
    if d.root_link(i) {
        let yr = delayed_y_r.ok_or_else(|| Error::Wiring {
            agent: i,
            reason: "root agent lacks the delayed exosystem output".to_string(),
        })?;
        check_width(i, "exosystem output", yr, p)?;
        for l in 0..p {
            acc[l] += own_y[l] - yr[l];
        }
    }
    let scale = 1.0 / (2.0 + d.in_degree_of(i));
    let out: Vec<f64> = acc.iter().map(|v| v * scale).collect();

    if cfg!(debug_assertions) {
        let zero = vec![0.0; p];
        let yr = delayed_y_r.unwrap_or(&zero);
        let mut alt = vec_sub(own_y, yr);
        let own = vec_sub(own_y, yr);
        for l in 0..p {
            alt[l] -= d.contraction[(i, i)] * own[l];
        }
        for (&j, yj) in neighbor_y {
            for l in 0..p {
                alt[l] -= d.contraction[(i, j)] * (yj[l] - yr[l]);
            }
        }
        let gap = out
            .iter()
            .zip(&alt)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = 1.0 + own_y.iter().chain(yr).fold(0.0f64, |m, v| m.max(v.abs()));
        debug_assert!(gap <= 1e-12 * scale, "coupling forms disagree by {gap}");
    }
    Ok(out)
}

/// Protocol-exchange coupling `χ_i - Σ_j d̄_ij χ_j(k - κ̂_ij)`.
pub fn coupling_zeta_hat(
    d: &DerivedNetwork,
    i: usize,
    own_chi: &[f64],
    neighbor_chi: &NeighborSamples,
) -> Result<Vec<f64>> {
    check_neighbors(d, i, neighbor_chi)?;
    let w = own_chi.len();
    let self_weight = 1.0 - d.contraction[(i, i)];
    let mut out: Vec<f64> = own_chi.iter().map(|v| self_weight * v).collect();
    for (&j, cj) in neighbor_chi {
        check_width(i, "neighbor exchange variable", cj, w)?;
        let dij = d.contraction[(i, j)];
        for l in 0..w {
            out[l] -= dij * cj[l];
        }
    }
    Ok(out)
}

fn check_dims(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::dim(format!("{} has width {}, expected {}", what, got, want)));
    }
    Ok(())
}

/// Full-state protocol: `χ+ = Aχ + Bu + Aζ̄ - Aζ̂`, `u = -Kχ`.
pub fn protocol1_step(
    a: &RealMatrix,
    b: &RealMatrix,
    s: &ProtocolState,
    zeta_bar: &[f64],
    zeta_hat: &[f64],
    gains: &Gains,
) -> Result<(ProtocolState, Vec<f64>)> {
    let n = a.rows();
    check_dims("χ", s.chi.len(), n)?;
    check_dims("ζ̄", zeta_bar.len(), n)?;
    check_dims("ζ̂", zeta_hat.len(), n)?;
    let u: Vec<f64> = gains.k.matvec(&s.chi)?.iter().map(|v| -v).collect();
    let coupling = vec_sub(zeta_bar, zeta_hat);
    let chi = vec_add(
        &vec_add(&a.matvec(&s.chi)?, &b.matvec(&u)?),
        &a.matvec(&coupling)?,
    );
    Ok((
        ProtocolState {
            chi,
            ..Default::default()
        },
        u,
    ))
}

/// Observer-based recurrence shared by the partial-state and heterogeneous
/// protocols, on model `(A, B, C)`:
///
/// ```text
/// x̂+ = A x̂ - B K ζ̂ + H (ζ̄ - C x̂)
/// χ+ = A χ + B v + A x̂ - A ζ̂,     v = -K χ
/// ```
fn observer_recurrence(
    a: &RealMatrix,
    b: &RealMatrix,
    c: &RealMatrix,
    s: &ProtocolState,
    zeta_bar: &[f64],
    zeta_hat: &[f64],
    gains: &Gains,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let n = a.rows();
    check_dims("χ", s.chi.len(), n)?;
    check_dims("x̂", s.xhat.len(), n)?;
    check_dims("ζ̄", zeta_bar.len(), c.rows())?;
    check_dims("ζ̂", zeta_hat.len(), n)?;
    let h = gains
        .h
        .as_ref()
        .ok_or_else(|| Error::dim("observer gain H is required"))?;
    let v: Vec<f64> = gains.k.matvec(&s.chi)?.iter().map(|x| -x).collect();
    let kz = gains.k.matvec(zeta_hat)?;
    let innovation = vec_sub(zeta_bar, &c.matvec(&s.xhat)?);
    let xhat = vec_add(
        &vec_sub(&a.matvec(&s.xhat)?, &b.matvec(&kz)?),
        &h.matvec(&innovation)?,
    );
    let chi = vec_add(
        &vec_add(&a.matvec(&s.chi)?, &b.matvec(&v)?),
        &a.matvec(&vec_sub(&s.xhat, zeta_hat))?,
    );
    Ok((xhat, chi, v))
}

/// Partial-state protocol on the agent model `(A, B, C)`.
pub fn protocol2_step(
    a: &RealMatrix,
    b: &RealMatrix,
    c: &RealMatrix,
    s: &ProtocolState,
    zeta_bar: &[f64],
    zeta_hat: &[f64],
    gains: &Gains,
) -> Result<(ProtocolState, Vec<f64>)> {
    let (xhat, chi, u) = observer_recurrence(a, b, c, s, zeta_bar, zeta_hat, gains)?;
    Ok((
        ProtocolState {
            chi,
            xhat,
            xi: Vec::new(),
        },
        u,
    ))
}

/// Heterogeneous protocol: the partial-state recurrence on the target model
/// feeding the agent's pre-compensator with `v = -Kχ`.
pub fn protocol3_step(
    s: &ProtocolState,
    zeta_bar: &[f64],
    zeta_hat: &[f64],
    z: &[f64],
    pre: &PreCompensator,
    target: &TargetModel,
    gains: &Gains,
) -> Result<(ProtocolState, Vec<f64>)> {
    check_dims("ξ", s.xi.len(), pre.states())?;
    check_dims("z", z.len(), pre.b_h.cols())?;
    let (xhat, chi, v) =
        observer_recurrence(&target.a, &target.b, &target.c, s, zeta_bar, zeta_hat, gains)?;
    let u = pre.output(&s.xi, z, &v)?;
    let xi = pre.advance(&s.xi, z, &v)?;
    Ok((ProtocolState { chi, xhat, xi }, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{derive, Edge, NetworkTopology};

    fn three_node() -> DerivedNetwork {
        let e = |from, to, delay, protocol_delay| Edge {
            from,
            to,
            weight: 1.0,
            delay,
            protocol_delay,
        };
        derive(&NetworkTopology::new(3, 0, 0, vec![e(0, 1, 3, 2), e(0, 2, 2, 2)])).unwrap()
    }

    fn samples(entries: &[(usize, &[f64])]) -> NeighborSamples {
        entries.iter().map(|(j, v)| (*j, v.to_vec())).collect()
    }

    fn example_one() -> (RealMatrix, RealMatrix, RealMatrix, Gains) {
        let s = 3f64.sqrt() / 2.0;
        (
            RealMatrix::from_rows(&[[0.5, 1.0, 1.0], [0.0, s, -0.5], [0.0, 0.5, s]]),
            RealMatrix::column(&[1.0, 1.0, 0.0]),
            RealMatrix::row(&[1.0, 0.0, 1.0]),
            Gains {
                k: RealMatrix::row(&[0.0695, 1.7625, 1.2051]),
                h: Some(RealMatrix::column(&[1.4327, 0.4143, 0.6993])),
            },
        )
    }

    #[test]
    fn synchronized_outputs_give_zero_coupling() {
        let d = three_node();
        let y = [0.7];
        assert_eq!(coupling_zeta_bar(&d, 0, &y, &samples(&[]), Some(&y)).unwrap(), vec![0.0]);
        assert_eq!(
            coupling_zeta_bar(&d, 1, &y, &samples(&[(0, &y)]), None).unwrap(),
            vec![0.0]
        );
    }

    #[test]
    fn root_coupling_is_half_the_tracking_error() {
        let d = three_node();
        let z = coupling_zeta_bar(&d, 0, &[1.0], &samples(&[]), Some(&[0.2])).unwrap();
        assert!((z[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn follower_coupling_by_hand() {
        let d = three_node();
        // y_2 = 1 equals its delayed parent output: nothing to correct
        let z = coupling_zeta_bar(&d, 1, &[1.0], &samples(&[(0, &[1.0])]), Some(&[0.0])).unwrap();
        assert!(z[0].abs() < 1e-15);
        // y_2 = 1, parent 0: (1 - 0) / 3
        let z = coupling_zeta_bar(&d, 1, &[1.0], &samples(&[(0, &[0.0])]), None).unwrap();
        assert!((z[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exchange_coupling_cases() {
        let d = three_node();
        assert_eq!(
            coupling_zeta_hat(&d, 1, &[0.0, 0.0], &samples(&[(0, &[0.0, 0.0])])).unwrap(),
            vec![0.0, 0.0]
        );
        let c = [2.0, -4.0];
        let root = coupling_zeta_hat(&d, 0, &c, &samples(&[])).unwrap();
        assert_eq!(root, vec![1.0, -2.0]);
        let z = coupling_zeta_hat(&d, 1, &c, &samples(&[(0, &c)])).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-15));
        // absent parent signal leaves χ_2 - d̄_22 χ_2 = χ_2 / 3
        let z = coupling_zeta_hat(&d, 1, &c, &samples(&[(0, &[0.0, 0.0])])).unwrap();
        assert!((z[0] - 2.0 / 3.0).abs() < 1e-15 && (z[1] + 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn wiring_errors() {
        let d = three_node();
        assert!(matches!(
            coupling_zeta_bar(&d, 1, &[1.0], &samples(&[]), None),
            Err(Error::Wiring { agent: 1, .. })
        ));
        assert!(matches!(
            coupling_zeta_bar(&d, 0, &[1.0], &samples(&[]), None),
            Err(Error::Wiring { agent: 0, .. })
        ));
        assert!(matches!(
            coupling_zeta_hat(&d, 2, &[1.0], &samples(&[(0, &[1.0]), (1, &[1.0])])),
            Err(Error::Wiring { agent: 2, .. })
        ));
    }

    #[test]
    fn protocol1_cases() {
        let (a, b, _, gains) = example_one();
        let zero = ProtocolState::zeros(Variant::FullState, 3, 0);
        let (s, u) = protocol1_step(&a, &b, &zero, &[0.0; 3], &[0.0; 3], &gains).unwrap();
        assert_eq!(s.chi, vec![0.0; 3]);
        assert_eq!(u, vec![0.0]);

        let v = [0.3, -1.0, 2.0];
        let (s, _) = protocol1_step(&a, &b, &zero, &v, &[0.0; 3], &gains).unwrap();
        assert_eq!(s.chi, a.matvec(&v).unwrap());

        let e1 = ProtocolState {
            chi: vec![1.0, 0.0, 0.0],
            ..Default::default()
        };
        let (s, u) = protocol1_step(&a, &b, &e1, &[0.0; 3], &[0.0; 3], &gains).unwrap();
        assert!((u[0] + 0.0695).abs() < 1e-15);
        let closed = &a - &(&b * &gains.k);
        assert!(RealMatrix::column(&s.chi).approx_eq(&closed.block(0, 0, 3, 1), 1e-15));
    }

    #[test]
    fn protocol2_cases() {
        let (a, b, c, gains) = example_one();
        let zero = ProtocolState::zeros(Variant::PartialState, 3, 0);
        let (s, u) = protocol2_step(&a, &b, &c, &zero, &[0.0], &[0.0; 3], &gains).unwrap();
        assert_eq!((s.chi.clone(), s.xhat.clone(), u), (vec![0.0; 3], vec![0.0; 3], vec![0.0]));

        let (s, _) = protocol2_step(&a, &b, &c, &zero, &[1.0], &[0.0; 3], &gains).unwrap();
        assert_eq!(s.xhat, gains.h.as_ref().unwrap().as_slice().to_vec());

        let w = vec![0.5, -0.25, 1.0];
        let st = ProtocolState {
            chi: vec![0.0; 3],
            xhat: w.clone(),
            xi: Vec::new(),
        };
        let (s, _) = protocol2_step(&a, &b, &c, &st, &c.matvec(&w).unwrap(), &[0.0; 3], &gains)
            .unwrap();
        assert_eq!(s.chi, a.matvec(&w).unwrap());
    }

    #[test]
    fn protocol2_requires_observer_gain() {
        let (a, b, c, mut gains) = example_one();
        gains.h = None;
        let zero = ProtocolState::zeros(Variant::PartialState, 3, 0);
        assert!(protocol2_step(&a, &b, &c, &zero, &[0.0], &[0.0; 3], &gains).is_err());
    }
}
