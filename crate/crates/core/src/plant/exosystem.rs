use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eigenvalues, lstsq, rank, Complex64, RealMatrix, DEFAULT_EIG_TOL};

use super::agent::observability_rank;

/// Autonomous reference generator `x_r+ = A_r x_r`, `y_r = C_r x_r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exosystem {
    pub a: RealMatrix,
    pub c: RealMatrix,
    pub x0: Vec<f64>,
}

impl Exosystem {
    pub fn new(a: RealMatrix, c: RealMatrix, x0: Vec<f64>) -> Result<Self> {
        let r = a.rows();
        if !a.is_square() || c.cols() != r || x0.len() != r {
            return Err(Error::dim(format!(
                "exosystem A {:?}, C {:?}, x0 of width {}",
                a.shape(),
                c.shape(),
                x0.len()
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::dim("exosystem initial state must be finite"));
        }
        Ok(Exosystem { a, c, x0 })
    }

    pub fn states(&self) -> usize {
        self.a.rows()
    }

    pub fn outputs(&self) -> usize {
        self.c.rows()
    }

    /// Observability of `(C_r, A_r)` and all eigenvalues of `A_r` within
    /// `tol` of the unit circle.
    pub fn check_assumptions(&self, tol: f64) -> Result<()> {
        if observability_rank(&self.c, &self.a) != self.states() {
            return Err(Error::Model("(C_r, A_r) is not observable".to_string()));
        }
        let spec = eigenvalues(&self.a, DEFAULT_EIG_TOL)?;
        if let Some(l) = spec
            .eigenvalues
            .iter()
            .find(|l| (l.norm() - 1.0).abs() > tol)
        {
            return Err(Error::Model(format!(
                "exosystem eigenvalue {:.6}{:+.6}j is not on the unit circle",
                l.re, l.im
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExoStep {
    pub next: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn step_exosystem(exo: &Exosystem, x_r: &[f64]) -> Result<ExoStep> {
    if x_r.len() != exo.states() {
        return Err(Error::dim(format!(
            "exosystem with {} states stepped with width {}",
            exo.states(),
            x_r.len()
        )));
    }
    Ok(ExoStep {
        next: exo.a.matvec(x_r)?,
        y: exo.c.matvec(x_r)?,
    })
}

/// Square invertible triple `(Č, Ǎ, B̌)` of uniform rank `n_q` that every
/// compensated agent is made to embody.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetModel {
    pub a: RealMatrix,
    pub b: RealMatrix,
    pub c: RealMatrix,
    pub nq: usize,
}

impl TargetModel {
    pub fn new(a: RealMatrix, b: RealMatrix, c: RealMatrix, nq: usize) -> Result<Self> {
        let n = a.rows();
        let p = c.rows();
        if !a.is_square() || b.shape() != (n, p) || c.cols() != n {
            return Err(Error::dim(format!(
                "target model A {:?}, B {:?}, C {:?}",
                a.shape(),
                b.shape(),
                c.shape()
            )));
        }
        let t = TargetModel { a, b, c, nq };
        t.check_uniform_rank()?;
        Ok(t)
    }

    pub fn states(&self) -> usize {
        self.a.rows()
    }

    pub fn outputs(&self) -> usize {
        self.c.rows()
    }

    /// `Č Ǎ^i B̌`.
    pub fn markov(&self, i: usize) -> RealMatrix {
        let mut m = self.b.clone();
        for _ in 0..i {
            m = &self.a * &m;
        }
        &self.c * &m
    }

    /// Markov parameters vanish below `n_q - 1` and are invertible at it.
    pub fn check_uniform_rank(&self) -> Result<()> {
        if self.nq == 0 || self.nq > self.states() {
            return Err(Error::Model(format!(
                "uniform rank {} outside 1..={}",
                self.nq,
                self.states()
            )));
        }
        for i in 0..self.nq - 1 {
            let m = self.markov(i);
            if m.max_abs() > 1e-10 {
                return Err(Error::Model(format!(
                    "Markov parameter {} is nonzero ({:.3e}); not of uniform rank {}",
                    i,
                    m.max_abs(),
                    self.nq
                )));
            }
        }
        let lead = self.markov(self.nq - 1);
        if rank(&lead, 1e-10) != self.outputs() {
            return Err(Error::Model(format!(
                "Markov parameter {} is singular; not of uniform rank {}",
                self.nq - 1,
                self.nq
            )));
        }
        // invertible of uniform rank without invariant zeros: ř = p n_q
        if self.states() != self.outputs() * self.nq {
            return Err(Error::Model(format!(
                "{} states for {} outputs of uniform rank {} leaves invariant zeros",
                self.states(),
                self.outputs(),
                self.nq
            )));
        }
        Ok(())
    }

    /// Eigenvalues of `Ǎ` contain those of `A_r`; the rest sit at zero.
    pub fn check_spectrum(&self, exo: &Exosystem, tol: f64) -> Result<()> {
        let mut own: Vec<Complex64> = eigenvalues(&self.a, DEFAULT_EIG_TOL)?.eigenvalues;
        for l in eigenvalues(&exo.a, DEFAULT_EIG_TOL)?.eigenvalues {
            let pos = own
                .iter()
                .position(|m| (m - l).norm() < tol)
                .ok_or_else(|| {
                    Error::Model(format!(
                        "exosystem eigenvalue {:.6}{:+.6}j missing from the target model",
                        l.re, l.im
                    ))
                })?;
            own.swap_remove(pos);
        }
        if let Some(l) = own.iter().find(|l| l.norm() > tol) {
            return Err(Error::Model(format!(
                "extra target eigenvalue {:.6}{:+.6}j is not at zero",
                l.re, l.im
            )));
        }
        Ok(())
    }

    /// Matrix `T` with `Ǎ T = T A_r` and `Č T = C_r`, so that `x̌_r = T x_r`
    /// reproduces the exosystem output.
    pub fn embedding(&self, exo: &Exosystem) -> Result<RealMatrix> {
        let (n, r, p) = (self.states(), exo.states(), exo.outputs());
        if self.outputs() != p {
            return Err(Error::Model(format!(
                "target model has {} outputs, exosystem {}",
                self.outputs(),
                p
            )));
        }
        // unknown t_{kl} at column k*r + l
        let mut sys = RealMatrix::zeros(n * r + p * r, n * r);
        let mut rhs = RealMatrix::zeros(n * r + p * r, 1);
        for i in 0..n {
            for l in 0..r {
                let row = i * r + l;
                for k in 0..n {
                    sys[(row, k * r + l)] += self.a[(i, k)];
                }
                for m in 0..r {
                    sys[(row, i * r + m)] -= exo.a[(m, l)];
                }
            }
        }
        for i in 0..p {
            for l in 0..r {
                let row = n * r + i * r + l;
                for k in 0..n {
                    sys[(row, k * r + l)] = self.c[(i, k)];
                }
                rhs[(row, 0)] = exo.c[(i, l)];
            }
        }
        let (t, residual) = lstsq(&sys, &rhs, 1e-12)?;
        if residual > 1e-8 {
            return Err(Error::Model(format!(
                "target model cannot reproduce the exosystem output (residual {:.3e})",
                residual
            )));
        }
        RealMatrix::from_vec(n, r, t.as_slice().to_vec())
    }
}

/// Coefficients `[a_0, ..., a_{n-1}]` of `det(zI - A) = z^n + a_{n-1} z^{n-1} + ... + a_0`.
pub fn characteristic_polynomial(a: &RealMatrix) -> Vec<f64> {
    let n = a.rows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut m = RealMatrix::zeros(n, n);
    for k in 1..=n {
        let mut next = a * &m;
        for i in 0..n {
            next[(i, i)] += coeffs[n - k + 1];
        }
        m = next;
        coeffs[n - k] = -(a * &m).trace() / k as f64;
    }
    coeffs.truncate(n);
    coeffs
}

/// Builds a target model from the exosystem: one chain per output of length
/// `max(n_q, r)`, driven by the characteristic polynomial of `A_r` padded
/// with zero roots. Returns the model and the map `x_r -> x̌_r`.
pub fn remodel_exosystem(exo: &Exosystem, required_nq: usize) -> Result<(TargetModel, RealMatrix)> {
    exo.check_assumptions(1e-6)?;
    let r = exo.states();
    let p = exo.outputs();
    let d = required_nq.max(r);
    let mut poly = vec![0.0; d - r];
    poly.extend(characteristic_polynomial(&exo.a));

    let n = p * d;
    let mut a = RealMatrix::zeros(n, n);
    for blk in 0..d - 1 {
        for l in 0..p {
            a[(blk * p + l, (blk + 1) * p + l)] = 1.0;
        }
    }
    for (blk, coeff) in poly.iter().enumerate() {
        for l in 0..p {
            a[((d - 1) * p + l, blk * p + l)] = -coeff;
        }
    }
    let mut b = RealMatrix::zeros(n, p);
    b.set_block((d - 1) * p, 0, &RealMatrix::identity(p));
    let mut c = RealMatrix::zeros(p, n);
    c.set_block(0, 0, &RealMatrix::identity(p));

    let mut map = RealMatrix::zeros(n, r);
    let mut cak = exo.c.clone();
    for blk in 0..d {
        map.set_block(blk * p, 0, &cak);
        cak = &cak * &exo.a;
    }
    let target = TargetModel::new(a, b, c, d)?;
    Ok((target, map))
}
