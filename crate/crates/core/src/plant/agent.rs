use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eigenvalues, rank, vec_add, RealMatrix, DEFAULT_EIG_TOL};

/// Rank tolerance for the numeric structural checks.
pub const STRUCTURE_TOL: f64 = 1e-8;

/// Discrete-time linear agent `x+ = Ax + Bu`, `y = Cx`, with an optional
/// local measurement `z = C_m x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentModel {
    pub a: RealMatrix,
    pub b: RealMatrix,
    pub c: RealMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_m: Option<RealMatrix>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentStep {
    pub next: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Option<Vec<f64>>,
}

impl AgentModel {
    pub fn new(a: RealMatrix, b: RealMatrix, c: RealMatrix) -> Result<Self> {
        Self::with_measurement(a, b, c, None)
    }

    pub fn with_measurement(
        a: RealMatrix,
        b: RealMatrix,
        c: RealMatrix,
        c_m: Option<RealMatrix>,
    ) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() || n == 0 {
            return Err(Error::dim(format!("state matrix is {:?}", a.shape())));
        }
        if b.rows() != n {
            return Err(Error::dim(format!("input matrix has {} rows, expected {}", b.rows(), n)));
        }
        if c.cols() != n {
            return Err(Error::dim(format!("output matrix has {} columns, expected {}", c.cols(), n)));
        }
        if let Some(m) = &c_m {
            if m.cols() != n {
                return Err(Error::dim(format!(
                    "measurement matrix has {} columns, expected {}",
                    m.cols(),
                    n
                )));
            }
        }
        Ok(AgentModel { a, b, c, c_m })
    }

    pub fn states(&self) -> usize {
        self.a.rows()
    }

    pub fn inputs(&self) -> usize {
        self.b.cols()
    }

    pub fn outputs(&self) -> usize {
        self.c.rows()
    }

    /// Width of `z`; zero without a measurement matrix.
    pub fn measurements(&self) -> usize {
        self.c_m.as_ref().map_or(0, |m| m.rows())
    }

    /// Smallest `d >= 1` with `C A^(d-1) B != 0`, if any.
    pub fn relative_degree(&self) -> Option<usize> {
        let n = self.states();
        let mut cak = self.c.clone();
        for d in 1..=n {
            if (&cak * &self.b).max_abs() > STRUCTURE_TOL * (1.0 + self.b.max_abs()) {
                return Some(d);
            }
            cak = &cak * &self.a;
        }
        None
    }

    /// `C A^(d-1) B` at the relative degree.
    pub fn leading_markov(&self) -> Option<(usize, RealMatrix)> {
        let d = self.relative_degree()?;
        let m = &(&self.c * &self.a.pow(d as u32 - 1).ok()?) * &self.b;
        Some((d, m))
    }

    /// Right-invertibility from the normal rank of the system pencil
    /// `[zI - A, -B; C, 0]` at a few random real points.
    pub fn is_right_invertible(&self) -> bool {
        let (n, m, p) = (self.states(), self.inputs(), self.outputs());
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let best = (0..3)
            .map(|_| {
                let z: f64 = rng.gen_range(-2.0..2.0);
                let mut pencil = RealMatrix::zeros(n + p, n + m);
                pencil.set_block(0, 0, &(&RealMatrix::identity(n).scale(z) - &self.a));
                pencil.set_block(0, n, &self.b.scale(-1.0));
                pencil.set_block(n, 0, &self.c);
                rank(&pencil, STRUCTURE_TOL)
            })
            .max()
            .unwrap_or(0);
        best == n + p
    }

    /// All eigenvalues of `A` in the closed unit disc (within `tol`).
    pub fn is_marginally_stable(&self, tol: f64) -> Result<bool> {
        Ok(eigenvalues(&self.a, DEFAULT_EIG_TOL)?.spectral_radius <= 1.0 + tol)
    }
}

pub fn step_agent(model: &AgentModel, x: &[f64], u: &[f64]) -> Result<AgentStep> {
    if x.len() != model.states() || u.len() != model.inputs() {
        return Err(Error::dim(format!(
            "agent with {} states and {} inputs stepped with x of width {} and u of width {}",
            model.states(),
            model.inputs(),
            x.len(),
            u.len()
        )));
    }
    let next = vec_add(&model.a.matvec(x)?, &model.b.matvec(u)?);
    let y = model.c.matvec(x)?;
    let z = match &model.c_m {
        Some(m) => Some(m.matvec(x)?),
        None => None,
    };
    Ok(AgentStep { next, y, z })
}

/// Rank of the observability matrix of `(C, A)`.
pub fn observability_rank(c: &RealMatrix, a: &RealMatrix) -> usize {
    let n = a.rows();
    let mut blocks = Vec::with_capacity(n);
    let mut cak = c.clone();
    for _ in 0..n {
        blocks.push(cak.clone());
        cak = &cak * a;
    }
    let refs: Vec<&RealMatrix> = blocks.iter().collect();
    let obs = RealMatrix::vstack(&refs).expect("equal widths");
    rank(&obs, STRUCTURE_TOL)
}
