use super::matrix::RealMatrix;
use crate::error::{Error, Result};

/// Solves `a * x = b` for square `a` by LU decomposition with partial pivoting.
pub fn solve(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n {
        return Err(Error::dim(format!(
            "solve with {}x{} system and {}x{} right-hand side",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let (p, pv) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if pv <= 1e-14 * scale {
            return Err(Error::Singular(format!("pivot {} vanishes", k)));
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            for j in 0..x.cols() {
                let t = x[(k, j)];
                x[(k, j)] = x[(p, j)];
                x[(p, j)] = t;
            }
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / lu[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
            for j in 0..x.cols() {
                x[(i, j)] -= f * x[(k, j)];
            }
        }
    }
    for j in 0..x.cols() {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for c in i + 1..n {
                s -= lu[(i, c)] * x[(c, j)];
            }
            x[(i, j)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

pub fn inverse(a: &RealMatrix) -> Result<RealMatrix> {
    solve(a, &RealMatrix::identity(a.rows()))
}

/// Householder QR with column pivoting, kept in compact form.
struct PivotedQr {
    qr: RealMatrix,
    tau: Vec<f64>,
    perm: Vec<usize>,
    rank: usize,
}

fn pivoted_qr(a: &RealMatrix, rel_tol: f64) -> PivotedQr {
    let (m, n) = a.shape();
    let mut qr = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut tau = vec![0.0; m.min(n)];
    let mut norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| qr[(i, j)].powi(2)).sum::<f64>())
        .collect();
    let first = norms.iter().cloned().fold(0.0, f64::max).sqrt();
    let threshold = rel_tol * first.max(f64::MIN_POSITIVE);
    let mut rank = 0;
    for k in 0..m.min(n) {
        // recompute norms for stability
        for j in k..n {
            norms[j] = (k..m).map(|i| qr[(i, j)].powi(2)).sum();
        }
        let (p, best) = (k..n)
            .map(|j| (j, norms[j]))
            .fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if best.sqrt() <= threshold {
            break;
        }
        if p != k {
            perm.swap(k, p);
            norms.swap(k, p);
            for i in 0..m {
                let t = qr[(i, k)];
                qr[(i, k)] = qr[(i, p)];
                qr[(i, p)] = t;
            }
        }
        let alpha = (k..m).map(|i| qr[(i, k)].powi(2)).sum::<f64>().sqrt();
        let beta = if qr[(k, k)] > 0.0 { -alpha } else { alpha };
        let v0 = qr[(k, k)] - beta;
        // v = [1, x_{k+1}/v0, ...], tau = (beta - x_k) / beta
        for i in k + 1..m {
            qr[(i, k)] /= v0;
        }
        tau[k] = -v0 / beta;
        qr[(k, k)] = beta;
        for j in k + 1..n {
            let mut s = qr[(k, j)];
            for i in k + 1..m {
                s += qr[(i, k)] * qr[(i, j)];
            }
            s *= tau[k];
            qr[(k, j)] -= s;
            for i in k + 1..m {
                let vik = qr[(i, k)];
                qr[(i, j)] -= s * vik;
            }
        }
        rank += 1;
    }
    PivotedQr {
        qr,
        tau,
        perm,
        rank,
    }
}

/// Numerical rank with a relative tolerance on the pivoted column norms.
pub fn rank(a: &RealMatrix, rel_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    pivoted_qr(a, rel_tol).rank
}

/// Basic least-squares solution of `a x = b` (one column right-hand side per
/// column of `b`). Returns the solution and the residual Frobenius norm.
pub fn lstsq(a: &RealMatrix, b: &RealMatrix, rel_tol: f64) -> Result<(RealMatrix, f64)> {
    let (m, n) = a.shape();
    if b.rows() != m {
        return Err(Error::dim("least-squares right-hand side row mismatch"));
    }
    let f = pivoted_qr(a, rel_tol);
    let r = f.rank;
    let mut y = b.clone();
    // y <- Q^T b
    for k in 0..r {
        for j in 0..y.cols() {
            let mut s = y[(k, j)];
            for i in k + 1..m {
                s += f.qr[(i, k)] * y[(i, j)];
            }
            s *= f.tau[k];
            y[(k, j)] -= s;
            for i in k + 1..m {
                y[(i, j)] -= s * f.qr[(i, k)];
            }
        }
    }
    let mut x = RealMatrix::zeros(n, b.cols());
    for j in 0..b.cols() {
        let mut z = vec![0.0; r];
        for i in (0..r).rev() {
            let mut s = y[(i, j)];
            for c in i + 1..r {
                s -= f.qr[(i, c)] * z[c];
            }
            z[i] = s / f.qr[(i, i)];
        }
        for (i, zi) in z.into_iter().enumerate() {
            x[(f.perm[i], j)] = zi;
        }
    }
    let residual = (&a.matmul(&x)? - b).frobenius_norm();
    Ok((x, residual))
}
