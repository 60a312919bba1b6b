//! Eigenvalues of dense matrices by Householder reduction to upper Hessenberg
//! form followed by single-shift complex QR iteration with Wilkinson shifts.
//!
//! Before any iteration the sparsity pattern is split into strongly connected
//! components. A permutation puts the matrix in block-triangular form, so the
//! spectrum is the union of the spectra of the diagonal blocks. The block
//! matrices assembled by the certificates are mostly structural zeros, and the
//! split turns one large problem into many small ones.

use num_complex::Complex64;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::complex::ComplexMatrix;
use super::matrix::RealMatrix;
use crate::error::{Error, Result};

/// Relative subdiagonal deflation tolerance used by the convenience wrappers.
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub spectral_radius: f64,
}

impl Spectrum {
    fn new(eigenvalues: Vec<Complex64>) -> Self {
        let spectral_radius = eigenvalues.iter().fold(0.0, |m: f64, z| m.max(z.norm()));
        Spectrum {
            eigenvalues,
            spectral_radius,
        }
    }

    /// Smallest distance of any eigenvalue to the unit circle.
    pub fn unit_circle_distance(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| (1.0 - z.norm()).abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

pub fn eigenvalues(m: &RealMatrix, tol: f64) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::dim(format!(
            "eigenvalues of a non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    complex_eigenvalues(&ComplexMatrix::from_real(m), tol)
}

pub fn complex_eigenvalues(m: &ComplexMatrix, tol: f64) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::dim(format!(
            "eigenvalues of a non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::dim("eigenvalue tolerance must be positive"));
    }
    if !m.is_finite() {
        return Err(Error::dim("eigenvalues of a matrix with non-finite entries"));
    }
    let n = m.rows();
    let mut all = Vec::with_capacity(n);
    for comp in irreducible_blocks(m) {
        if comp.len() == 1 {
            all.push(m[(comp[0], comp[0])]);
            continue;
        }
        let k = comp.len();
        let mut sub = vec![Complex64::new(0.0, 0.0); k * k];
        for (a, &i) in comp.iter().enumerate() {
            for (b, &j) in comp.iter().enumerate() {
                sub[a * k + b] = m[(i, j)];
            }
        }
        hessenberg(&mut sub, k);
        all.extend(hessenberg_qr(&mut sub, k, tol)?);
    }
    Ok(Spectrum::new(all))
}

pub fn spectral_radius(m: &RealMatrix) -> Result<f64> {
    Ok(eigenvalues(m, DEFAULT_EIG_TOL)?.spectral_radius)
}

/// Strict Schur test: spectral radius below `1 - margin`.
pub fn is_schur(m: &RealMatrix, margin: f64) -> Result<bool> {
    if !m.is_square() {
        return Err(Error::dim("Schur test of a non-square matrix"));
    }
    if m.rows() == 0 {
        return Ok(true);
    }
    Ok(spectral_radius(m)? < 1.0 - margin)
}

/// Index sets of the strongly connected components of the nonzero pattern.
fn irreducible_blocks(m: &ComplexMatrix) -> Vec<Vec<usize>> {
    let n = m.rows();
    let mut g = DiGraph::<(), ()>::with_capacity(n, n);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            if i != j && (z.re != 0.0 || z.im != 0.0) {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut idx: Vec<usize> = c.into_iter().map(|v| v.index()).collect();
            idx.sort_unstable();
            idx
        })
        .collect()
}

/// In-place Householder reduction of a row-major `n x n` matrix to upper
/// Hessenberg form (similarity transform, eigenvalues preserved).
fn hessenberg(h: &mut [Complex64], n: usize) {
    let zero = Complex64::new(0.0, 0.0);
    let mut v = vec![zero; n];
    for k in 0..n.saturating_sub(2) {
        let norm: f64 = (k + 1..n).map(|i| h[i * n + k].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1) * n + k];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm;
        for i in 0..n {
            v[i] = zero;
        }
        for i in k + 1..n {
            v[i] = h[i * n + k];
        }
        v[k + 1] -= alpha;
        let vnorm: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for i in k + 1..n {
            v[i] /= vnorm;
        }
        // H <- (I - 2 v v^H) H
        for j in 0..n {
            let mut s = zero;
            for i in k + 1..n {
                s += v[i].conj() * h[i * n + j];
            }
            for i in k + 1..n {
                h[i * n + j] -= v[i] * s * 2.0;
            }
        }
        // H <- H (I - 2 v v^H)
        for i in 0..n {
            let mut s = zero;
            for j in k + 1..n {
                s += h[i * n + j] * v[j];
            }
            for j in k + 1..n {
                h[i * n + j] -= s * v[j].conj() * 2.0;
            }
        }
        for i in k + 2..n {
            h[i * n + k] = zero;
        }
    }
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powi(2) + b * c;
    let root = disc.sqrt();
    let l1 = half_tr + root;
    let l2 = half_tr - root;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn hessenberg_qr(h: &mut [Complex64], n: usize, tol: f64) -> Result<Vec<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let cap = 100 * n * n;
    let mut total = 0usize;
    let mut eig = Vec::with_capacity(n);
    let mut hi = n as isize - 1;
    let mut since_deflation = 0usize;
    let mut rot: Vec<(Complex64, Complex64, f64)> = Vec::with_capacity(n);

    while hi >= 0 {
        let hiu = hi as usize;
        // Find the start of the unreduced window ending at `hi`.
        let mut lo = hiu;
        while lo > 0 {
            let sub = h[lo * n + lo - 1].norm();
            let mut s = h[lo * n + lo].norm() + h[(lo - 1) * n + lo - 1].norm();
            if s == 0.0 {
                s = window_norm(h, n, 0, hiu);
            }
            if sub <= tol * s || sub <= f64::MIN_POSITIVE {
                h[lo * n + lo - 1] = zero;
                break;
            }
            lo -= 1;
        }
        if lo == hiu {
            eig.push(h[hiu * n + hiu]);
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if total >= cap {
            return Err(Error::Convergence { n, iterations: total });
        }
        total += 1;
        since_deflation += 1;

        let mu = if since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            let t = h[hiu * n + hiu - 1].norm()
                + if hiu >= 2 { h[(hiu - 1) * n + hiu - 2].norm() } else { 0.0 };
            h[hiu * n + hiu] + Complex64::new(t * 0.75, t * 0.4)
        } else {
            wilkinson_shift(
                h[(hiu - 1) * n + hiu - 1],
                h[(hiu - 1) * n + hiu],
                h[hiu * n + hiu - 1],
                h[hiu * n + hiu],
            )
        };

        for i in lo..=hiu {
            h[i * n + i] -= mu;
        }
        rot.clear();
        for k in lo..hiu {
            let a = h[k * n + k];
            let b = h[(k + 1) * n + k];
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (Complex64::new(1.0, 0.0), zero)
            } else {
                (a / r, b / r)
            };
            rot.push((c, s, r));
            // rows k, k+1 <- G [row_k; row_k+1], G = [[c*, s*], [-s, c]]
            for j in k..=hiu {
                let x = h[k * n + j];
                let y = h[(k + 1) * n + j];
                h[k * n + j] = c.conj() * x + s.conj() * y;
                h[(k + 1) * n + j] = -s * x + c * y;
            }
            h[(k + 1) * n + k] = zero;
        }
        for (idx, k) in (lo..hiu).enumerate() {
            let (c, s, _) = rot[idx];
            // columns k, k+1 <- [col_k, col_k+1] G^H
            let top = (k + 2).min(hiu);
            for i in lo..=top {
                let x = h[i * n + k];
                let y = h[i * n + k + 1];
                h[i * n + k] = x * c + y * s;
                h[i * n + k + 1] = -x * s.conj() + y * c.conj();
            }
        }
        for i in lo..=hiu {
            h[i * n + i] += mu;
        }
    }
    Ok(eig)
}

fn window_norm(h: &[Complex64], n: usize, lo: usize, hi: usize) -> f64 {
    let mut s = 0.0;
    for i in lo..=hi {
        for j in lo..=hi {
            s += h[i * n + j].norm_sqr();
        }
    }
    s.sqrt().max(f64::MIN_POSITIVE)
}
