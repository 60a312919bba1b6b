//! Local pre-compensators that turn an introspective agent into a copy of
//! the target model up to a decaying input mismatch:
//!
//! ```text
//! ξ+ = A_h ξ + B_h z + E_h v,      u = C_h ξ + D_h v + D_z z
//! x^h+ = Ǎ x^h + B̌ (v + ρ),        y = Č x^h
//! ω+ = A_s ω,                       ρ = C_s ω
//! ```
//!
//! `D_z` is a direct measurement feedthrough, needed by static designs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    inverse, is_schur, lstsq, rank, solve, state_gain, vec_add, vec_norm, vec_sub,
    RealMatrix,
};

use super::agent::{step_agent, AgentModel, STRUCTURE_TOL};
use super::exosystem::TargetModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreCompensatorKind {
    /// Memoryless model matching `u = F z + Λ v`.
    Static,
    /// Target copy plus deadbeat observer and output-inversion feedback.
    Dynamic,
    /// Supplied by the user.
    Custom,
}

/// Linear maps from the cascade state `(x, ξ)` to the quantities in the
/// homogenized description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeMaps {
    /// `x^h = H_x x + H_ξ ξ`.
    pub homogenized_x: RealMatrix,
    pub homogenized_xi: RealMatrix,
    /// `ω = W_x x + W_ξ ξ`.
    pub mismatch_x: RealMatrix,
    pub mismatch_xi: RealMatrix,
    /// State of a target model that the output converges to when driven by
    /// `v` alone.
    pub reference_x: RealMatrix,
    pub reference_xi: RealMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreCompensator {
    pub kind: PreCompensatorKind,
    pub a_h: RealMatrix,
    pub b_h: RealMatrix,
    pub e_h: RealMatrix,
    pub c_h: RealMatrix,
    pub d_h: RealMatrix,
    pub d_z: RealMatrix,
    /// Mismatch dynamics `A_s` (Schur) and output `C_s`.
    pub a_s: RealMatrix,
    pub c_s: RealMatrix,
    pub maps: CascadeMaps,
}

impl PreCompensator {
    pub fn states(&self) -> usize {
        self.a_h.rows()
    }

    pub fn mismatch_states(&self) -> usize {
        self.a_s.rows()
    }

    /// Checks the block dimensions against an agent and a target model.
    pub fn check_dimensions(&self, agent: &AgentModel, target: &TargetModel) -> Result<()> {
        let (h, q, p) = (self.states(), agent.measurements(), target.outputs());
        let (m, n, rt, w) = (agent.inputs(), agent.states(), target.states(), self.mismatch_states());
        let expect = [
            ("A_h", &self.a_h, (h, h)),
            ("B_h", &self.b_h, (h, q)),
            ("E_h", &self.e_h, (h, p)),
            ("C_h", &self.c_h, (m, h)),
            ("D_h", &self.d_h, (m, p)),
            ("D_z", &self.d_z, (m, q)),
            ("A_s", &self.a_s, (w, w)),
            ("C_s", &self.c_s, (p, w)),
            ("homogenized_x", &self.maps.homogenized_x, (rt, n)),
            ("homogenized_xi", &self.maps.homogenized_xi, (rt, h)),
            ("mismatch_x", &self.maps.mismatch_x, (w, n)),
            ("mismatch_xi", &self.maps.mismatch_xi, (w, h)),
            ("reference_x", &self.maps.reference_x, (rt, n)),
            ("reference_xi", &self.maps.reference_xi, (rt, h)),
        ];
        for (name, mat, shape) in expect {
            if mat.shape() != shape {
                return Err(Error::dim(format!(
                    "pre-compensator {} is {:?}, expected {:?}",
                    name,
                    mat.shape(),
                    shape
                )));
            }
        }
        Ok(())
    }

    /// Control input for the current state, measurement and virtual input.
    pub fn output(&self, xi: &[f64], z: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let u = vec_add(&self.c_h.matvec(xi)?, &self.d_h.matvec(v)?);
        Ok(vec_add(&u, &self.d_z.matvec(z)?))
    }

    pub fn advance(&self, xi: &[f64], z: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let next = vec_add(&self.a_h.matvec(xi)?, &self.b_h.matvec(z)?);
        Ok(vec_add(&next, &self.e_h.matvec(v)?))
    }

    pub fn homogenized_state(&self, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        Ok(vec_add(
            &self.maps.homogenized_x.matvec(x)?,
            &self.maps.homogenized_xi.matvec(xi)?,
        ))
    }

    pub fn mismatch_state(&self, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        Ok(vec_add(
            &self.maps.mismatch_x.matvec(x)?,
            &self.maps.mismatch_xi.matvec(xi)?,
        ))
    }

    pub fn reference_state(&self, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        Ok(vec_add(
            &self.maps.reference_x.matvec(x)?,
            &self.maps.reference_xi.matvec(xi)?,
        ))
    }
}

fn measurement_matrix(agent: &AgentModel) -> Result<&RealMatrix> {
    agent.c_m.as_ref().ok_or_else(|| {
        Error::Homogenization("agent has no local measurement matrix".to_string())
    })
}

/// Designs a pre-compensator for `agent` and checks it by simulation.
pub fn homogenize(agent: &AgentModel, target: &TargetModel) -> Result<PreCompensator> {
    if agent.outputs() != target.outputs() {
        return Err(Error::Homogenization(format!(
            "agent has {} outputs, target model {}",
            agent.outputs(),
            target.outputs()
        )));
    }
    let pre = match static_design(agent, target)? {
        Some(pre) => pre,
        None => dynamic_design(agent, target)?,
    };
    let report = check_contract(agent, target, &pre, 3, 500, 0xC0FFEE)?;
    if !report.passed(1e-8) {
        return Err(Error::Homogenization(format!(
            "validation simulation ended with output mismatch {:.3e} and model residual {:.3e}",
            report.final_output_error, report.model_residual
        )));
    }
    Ok(pre)
}

/// Static feedback when the agent has as many states as the target model
/// and measures its full state: solves `Π Ǎ = A Π + B Γ`, `C Π = Č`,
/// `Π B̌ = B Λ` and sets `u = Γ Π⁻¹ x + Λ v`. `None` if not applicable.
pub fn static_design(agent: &AgentModel, target: &TargetModel) -> Result<Option<PreCompensator>> {
    let cm = measurement_matrix(agent)?;
    let (n, m, rt, p) = (agent.states(), agent.inputs(), target.states(), target.outputs());
    if n != rt || !cm.is_square() || rank(cm, STRUCTURE_TOL) != n {
        return Ok(None);
    }
    let (a, b, c) = (&agent.a, &agent.b, &agent.c);
    let pi_at = |i: usize, j: usize| i * rt + j;
    let gamma_at = |i: usize, j: usize| n * rt + i * rt + j;
    let lambda_at = |i: usize, j: usize| n * rt + m * rt + i * p + j;
    let unknowns = n * rt + m * rt + m * p;
    let equations = n * rt + p * rt + n * p;
    let mut sys = RealMatrix::zeros(equations, unknowns);
    let mut rhs = RealMatrix::zeros(equations, 1);
    let mut row = 0;
    for i in 0..n {
        for j in 0..rt {
            for k in 0..rt {
                sys[(row, pi_at(i, k))] += target.a[(k, j)];
            }
            for k in 0..n {
                sys[(row, pi_at(k, j))] -= a[(i, k)];
            }
            for l in 0..m {
                sys[(row, gamma_at(l, j))] -= b[(i, l)];
            }
            row += 1;
        }
    }
    for i in 0..p {
        for j in 0..rt {
            for k in 0..n {
                sys[(row, pi_at(k, j))] += c[(i, k)];
            }
            rhs[(row, 0)] = target.c[(i, j)];
            row += 1;
        }
    }
    for i in 0..n {
        for j in 0..p {
            for k in 0..rt {
                sys[(row, pi_at(i, k))] += target.b[(k, j)];
            }
            for l in 0..m {
                sys[(row, lambda_at(l, j))] -= b[(i, l)];
            }
            row += 1;
        }
    }
    let (sol, residual) = lstsq(&sys, &rhs, 1e-12)?;
    if residual > 1e-9 {
        return Ok(None);
    }
    let s = sol.as_slice();
    let pi = RealMatrix::from_vec(n, rt, s[..n * rt].to_vec())?;
    let gamma = RealMatrix::from_vec(m, rt, s[n * rt..n * rt + m * rt].to_vec())?;
    let lambda = RealMatrix::from_vec(m, p, s[n * rt + m * rt..].to_vec())?;
    let pi_inv = match inverse(&pi) {
        Ok(inv) => inv,
        Err(_) => return Ok(None),
    };
    let d_z = &(&gamma * &pi_inv) * &inverse(cm)?;
    let q = cm.rows();
    Ok(Some(PreCompensator {
        kind: PreCompensatorKind::Static,
        a_h: RealMatrix::zeros(0, 0),
        b_h: RealMatrix::zeros(0, q),
        e_h: RealMatrix::zeros(0, p),
        c_h: RealMatrix::zeros(m, 0),
        d_h: lambda,
        d_z,
        a_s: RealMatrix::zeros(0, 0),
        c_s: RealMatrix::zeros(p, 0),
        maps: CascadeMaps {
            homogenized_x: pi_inv.clone(),
            homogenized_xi: RealMatrix::zeros(rt, 0),
            mismatch_x: RealMatrix::zeros(0, n),
            mismatch_xi: RealMatrix::zeros(0, 0),
            reference_x: pi_inv,
            reference_xi: RealMatrix::zeros(rt, 0),
        },
    }))
}

/// Orthonormal basis of the null space of a full-row-rank `b`.
fn null_basis(b: &RealMatrix, b_pinv: &RealMatrix) -> RealMatrix {
    let m = b.cols();
    let proj = &RealMatrix::identity(m) - &(b_pinv * b);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for j in 0..m {
        let mut v: Vec<f64> = (0..m).map(|i| proj[(i, j)]).collect();
        for q in &basis {
            let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= d * qi;
            }
        }
        let nv = vec_norm(&v);
        if nv > 1e-8 {
            basis.push(v.iter().map(|x| x / nv).collect());
        }
    }
    let mut out = RealMatrix::zeros(m, basis.len());
    for (j, v) in basis.iter().enumerate() {
        for i in 0..m {
            out[(i, j)] = v[i];
        }
    }
    out
}

/// Dynamic design: `ξ = (s, x̂)` with `s` a copy of the target model driven
/// by `v` and `x̂` an observer of the agent state. The input cancels the
/// agent output's leading dynamics so that `y - Č s` obeys a nilpotent
/// shift chain driven by the observer error; the remaining input directions
/// stabilize the internal dynamics.
pub fn dynamic_design(agent: &AgentModel, target: &TargetModel) -> Result<PreCompensator> {
    let cm = measurement_matrix(agent)?;
    let (n, m, q) = (agent.states(), agent.inputs(), cm.rows());
    let (rt, p, nq) = (target.states(), target.outputs(), target.nq);
    let (a, b, c) = (&agent.a, &agent.b, &agent.c);

    let (rho, lead) = agent.leading_markov().ok_or_else(|| {
        Error::Homogenization("agent output is not affected by its input".to_string())
    })?;
    if rank(&lead, STRUCTURE_TOL) != p {
        return Err(Error::Homogenization(
            "agent is not of uniform relative degree (leading Markov parameter lacks full row rank)"
                .to_string(),
        ));
    }
    if rho > nq {
        return Err(Error::Homogenization(format!(
            "agent relative degree {} exceeds target uniform rank {}",
            rho, nq
        )));
    }

    let observer = if cm.is_square() && rank(cm, STRUCTURE_TOL) == n {
        a * &inverse(cm)?
    } else {
        crate::numerics::observer_gain(a, cm)
            .map_err(|e| Error::Homogenization(format!("measurement observer: {}", e)))?
    };

    let lead_pinv = solve(&(&lead * &lead.transpose()), &lead)?.transpose();
    let null = null_basis(&lead, &lead_pinv);
    let ca_rho = c * &a.pow(rho as u32)?;
    let ta_rho = &target.c * &target.a.pow(rho as u32)?;
    let reduced = a - &(&(b * &lead_pinv) * &ca_rho);
    let internal = if null.cols() > 0 {
        let bn = b * &null;
        let k = state_gain(&reduced, &bn)
            .map_err(|e| Error::Homogenization(format!("internal dynamics: {}", e)))?;
        &null * &k.scale(-1.0)
    } else {
        RealMatrix::zeros(m, n)
    };
    let closed_internal = &reduced + &(b * &internal);
    if !is_schur(&closed_internal, 0.0)? {
        return Err(Error::Homogenization(
            "internal dynamics cannot be stabilized (unstable invariant zeros)".to_string(),
        ));
    }

    let g_s = &lead_pinv * &ta_rho;
    let g_x = &internal - &(&lead_pinv * &ca_rho);
    let g_v = if rho == nq {
        &lead_pinv * &target.markov(nq - 1)
    } else {
        RealMatrix::zeros(m, p)
    };

    let h = rt + n;
    let mut a_h = RealMatrix::zeros(h, h);
    a_h.set_block(0, 0, &target.a);
    a_h.set_block(rt, 0, &(b * &g_s));
    a_h.set_block(rt, rt, &(&(a - &(&observer * cm)) + &(b * &g_x)));
    let mut b_h = RealMatrix::zeros(h, q);
    b_h.set_block(rt, 0, &observer);
    let mut e_h = RealMatrix::zeros(h, p);
    e_h.set_block(0, 0, &target.b);
    e_h.set_block(rt, 0, &(b * &g_v));
    let c_h = RealMatrix::hstack(&[&g_s, &g_x])?;

    // mismatch ω = (C A^i x - Č Ǎ^i s for i < rho, x - x̂)
    let w = p * rho + n;
    let mut a_s = RealMatrix::zeros(w, w);
    for i in 0..rho - 1 {
        a_s.set_block(i * p, (i + 1) * p, &RealMatrix::identity(p));
    }
    a_s.set_block((rho - 1) * p, p * rho, &ca_rho);
    a_s.set_block(p * rho, p * rho, &(a - &(&observer * cm)));
    let mut w_x = RealMatrix::zeros(w, n);
    let mut w_xi = RealMatrix::zeros(w, h);
    let mut cak = c.clone();
    let mut tak = target.c.clone();
    for i in 0..rho {
        w_x.set_block(i * p, 0, &cak);
        w_xi.set_block(i * p, 0, &tak.scale(-1.0));
        cak = &cak * a;
        tak = &tak * &target.a;
    }
    w_x.set_block(p * rho, 0, &RealMatrix::identity(n));
    w_xi.set_block(p * rho, rt, &RealMatrix::identity(n).scale(-1.0));

    let (psi, c_s) = mismatch_embedding(target, &a_s, p)?;
    let mut select_s = RealMatrix::zeros(rt, h);
    select_s.set_block(0, 0, &RealMatrix::identity(rt));

    Ok(PreCompensator {
        kind: PreCompensatorKind::Dynamic,
        a_h,
        b_h,
        e_h,
        c_h,
        d_h: g_v,
        d_z: RealMatrix::zeros(m, q),
        a_s,
        c_s,
        maps: CascadeMaps {
            homogenized_x: &psi * &w_x,
            homogenized_xi: &select_s + &(&psi * &w_xi),
            mismatch_x: w_x,
            mismatch_xi: w_xi,
            reference_x: RealMatrix::zeros(rt, n),
            reference_xi: select_s,
        },
    })
}

/// Solves `Ψ A_s = Ǎ Ψ + B̌ C_s` with `Č Ψ = [I 0]` for `(Ψ, C_s)`.
fn mismatch_embedding(
    target: &TargetModel,
    a_s: &RealMatrix,
    p: usize,
) -> Result<(RealMatrix, RealMatrix)> {
    let (rt, w) = (target.states(), a_s.rows());
    let psi_at = |i: usize, j: usize| i * w + j;
    let cs_at = |i: usize, j: usize| rt * w + i * w + j;
    let mut sys = RealMatrix::zeros(rt * w + p * w, rt * w + p * w);
    let mut rhs = RealMatrix::zeros(rt * w + p * w, 1);
    let mut row = 0;
    for i in 0..rt {
        for j in 0..w {
            for k in 0..w {
                sys[(row, psi_at(i, k))] += a_s[(k, j)];
            }
            for k in 0..rt {
                sys[(row, psi_at(k, j))] -= target.a[(i, k)];
            }
            for l in 0..p {
                sys[(row, cs_at(l, j))] -= target.b[(i, l)];
            }
            row += 1;
        }
    }
    for i in 0..p {
        for j in 0..w {
            for k in 0..rt {
                sys[(row, psi_at(k, j))] += target.c[(i, k)];
            }
            rhs[(row, 0)] = if i == j { 1.0 } else { 0.0 };
            row += 1;
        }
    }
    let (sol, residual) = lstsq(&sys, &rhs, 1e-13)?;
    if residual > 1e-9 {
        return Err(Error::Homogenization(format!(
            "mismatch channel cannot be embedded in the target model (residual {:.3e})",
            residual
        )));
    }
    let s = sol.as_slice();
    Ok((
        RealMatrix::from_vec(rt, w, s[..rt * w].to_vec())?,
        RealMatrix::from_vec(p, w, s[rt * w..].to_vec())?,
    ))
}

/// Outcome of [`check_contract`].
#[derive(Clone, Debug, PartialEq)]
pub struct ContractReport {
    pub trials: usize,
    pub horizon: usize,
    /// Worst `|y - Č x_ref|` at the last step, with `x_ref` the reference
    /// target model driven by the same `v`.
    pub final_output_error: f64,
    /// Worst relative one-step residual of the homogenized description.
    pub model_residual: f64,
    pub mismatch_schur: bool,
}

impl ContractReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.mismatch_schur && self.final_output_error < tol && self.model_residual < 1e-8
    }
}

/// Simulates the cascade from random initial states with random bounded
/// inputs and compares it against the target model.
pub fn check_contract(
    agent: &AgentModel,
    target: &TargetModel,
    pre: &PreCompensator,
    trials: usize,
    horizon: usize,
    seed: u64,
) -> Result<ContractReport> {
    pre.check_dimensions(agent, target)?;
    let cm = measurement_matrix(agent)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ContractReport {
        trials,
        horizon,
        final_output_error: 0.0,
        model_residual: 0.0,
        mismatch_schur: is_schur(&pre.a_s, 0.0)?,
    };
    let p = target.outputs();
    for _ in 0..trials {
        let mut x: Vec<f64> = (0..agent.states()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut xi: Vec<f64> = (0..pre.states()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut x_ref = pre.reference_state(&x, &xi)?;
        let mut err = f64::INFINITY;
        for _ in 0..horizon {
            let v: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let z = cm.matvec(&x)?;
            let u = pre.output(&xi, &z, &v)?;
            let step = step_agent(agent, &x, &u)?;
            err = vec_norm(&vec_sub(&step.y, &target.c.matvec(&x_ref)?));

            let xh = pre.homogenized_state(&x, &xi)?;
            let om = pre.mismatch_state(&x, &xi)?;
            let drive = vec_add(&v, &pre.c_s.matvec(&om)?);
            let predicted = vec_add(&target.a.matvec(&xh)?, &target.b.matvec(&drive)?);
            let predicted_om = pre.a_s.matvec(&om)?;

            let xi_next = pre.advance(&xi, &z, &v)?;
            x = step.next;
            xi = xi_next;
            x_ref = vec_add(&target.a.matvec(&x_ref)?, &target.b.matvec(&v)?);

            let actual = pre.homogenized_state(&x, &xi)?;
            let actual_om = pre.mismatch_state(&x, &xi)?;
            let scale = 1.0 + vec_norm(&actual) + vec_norm(&actual_om);
            let res = (vec_norm(&vec_sub(&actual, &predicted))
                + vec_norm(&vec_sub(&actual_om, &predicted_om)))
                / scale;
            report.model_residual = report.model_residual.max(res);
            if !(res.is_finite() && err.is_finite()) {
                return Err(Error::Homogenization("cascade simulation diverged".to_string()));
            }
        }
        report.final_output_error = report.final_output_error.max(err);
    }
    Ok(report)
}
