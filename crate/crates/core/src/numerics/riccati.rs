use super::eigen::is_schur;
use super::linsolve::solve;
use super::matrix::RealMatrix;
use crate::error::{Error, Result};

/// Settings for the fixed-point iteration on the discrete algebraic Riccati
/// equation.
#[derive(Clone, Copy, Debug)]
pub struct RiccatiOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        RiccatiOptions {
            tolerance: 1e-10,
            max_iterations: 10_000,
        }
    }
}

/// Solution of the Riccati iteration.
#[derive(Clone, Debug)]
pub struct RiccatiSolution {
    pub p: RealMatrix,
    pub gain: RealMatrix,
    pub iterations: usize,
    pub residual: f64,
}

/// Iterates `P <- A'PA - A'PB (R + B'PB)^-1 B'PA + Q` from `P = Q` until the
/// relative change drops below the tolerance.
pub fn solve_dare(
    a: &RealMatrix,
    b: &RealMatrix,
    q: &RealMatrix,
    r: &RealMatrix,
    opts: RiccatiOptions,
) -> Result<RiccatiSolution> {
    let n = a.rows();
    let m = b.cols();
    if !a.is_square() || b.rows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::dim(format!(
            "Riccati data: A {:?}, B {:?}, Q {:?}, R {:?}",
            a.shape(),
            b.shape(),
            q.shape(),
            r.shape()
        )));
    }
    let at = a.transpose();
    let bt = b.transpose();
    let mut p = q.clone();
    for it in 1..=opts.max_iterations {
        let pa = &p * a;
        let pb = &p * b;
        let s = r + &(&bt * &pb);
        let gain = solve(&s, &(&bt * &pa))
            .map_err(|e| Error::Synthesis(format!("R + B'PB not invertible: {}", e)))?;
        let next = &(&(&at * &pa) - &(&(&at * &pb) * &gain)) + q;
        // symmetrize against round-off drift
        let next = (&next + &next.transpose()).scale(0.5);
        if !next.is_finite() {
            return Err(Error::Synthesis(format!(
                "Riccati iterate became non-finite after {} iterations; (A, B) is not stabilizable",
                it
            )));
        }
        let residual = (&next - &p).max_abs() / next.max_abs().max(1.0);
        p = next;
        if residual < opts.tolerance {
            let s = r + &(&(&bt * &p) * b);
            let gain = solve(&s, &(&(&bt * &p) * a))
                .map_err(|e| Error::Synthesis(e.to_string()))?;
            return Ok(RiccatiSolution {
                p,
                gain,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::Synthesis(format!(
        "Riccati iteration stalled after {} iterations; (A, B) is not stabilizable",
        opts.max_iterations
    )))
}

/// State-feedback gain `K` with `A - BK` Schur stable.
pub fn synthesize_state_gain(
    a: &RealMatrix,
    b: &RealMatrix,
    q: &RealMatrix,
    r: &RealMatrix,
) -> Result<RealMatrix> {
    let sol = solve_dare(a, b, q, r, RiccatiOptions::default())?;
    let closed = a - &(b * &sol.gain);
    if !is_schur(&closed, 0.0)? {
        return Err(Error::Synthesis(
            "Riccati solution does not stabilize A - BK".to_string(),
        ));
    }
    Ok(sol.gain)
}

/// Observer gain `H` with `A - HC` Schur stable, by duality on `(A', C')`.
pub fn synthesize_observer_gain(
    a: &RealMatrix,
    c: &RealMatrix,
    q: &RealMatrix,
    r: &RealMatrix,
) -> Result<RealMatrix> {
    let dual = synthesize_state_gain(&a.transpose(), &c.transpose(), q, r)
        .map_err(|e| match e {
            Error::Synthesis(msg) => Error::Synthesis(format!("observer (dual problem): {}", msg)),
            other => other,
        })?;
    Ok(dual.transpose())
}

/// Default weights `Q = I`, `R = I`.
pub fn state_gain(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    synthesize_state_gain(
        a,
        b,
        &RealMatrix::identity(a.rows()),
        &RealMatrix::identity(b.cols()),
    )
}

pub fn observer_gain(a: &RealMatrix, c: &RealMatrix) -> Result<RealMatrix> {
    synthesize_observer_gain(
        a,
        c,
        &RealMatrix::identity(a.rows()),
        &RealMatrix::identity(c.rows()),
    )
}
