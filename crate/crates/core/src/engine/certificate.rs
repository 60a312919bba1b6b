//! Sampled frequency-sweep certificate. For each sampled `ω` the closed-loop
//! error matrix with the delay-rotated contraction matrix must keep its
//! spectrum off the unit circle by more than `margin`; at `ω = 0` (the
//! delay-free loop) it must in addition be Schur with that margin. This is
//! a numeric check on a finite grid, not a proof.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{
    complex_eigenvalues, kron, kron_complex_real, ComplexMatrix, RealMatrix, DEFAULT_EIG_TOL,
};
use crate::protocol::Variant;
use crate::topology::delay_transfer_matrix;

use super::scenario::PreparedScenario;

pub const DEFAULT_GRID: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificatePoint {
    pub omega: f64,
    /// Smallest `| |λ| - 1 |` over the spectrum.
    pub distance: f64,
    pub spectral_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub points: Vec<CertificatePoint>,
    pub margin: f64,
    pub min_distance: f64,
    pub zero_delay_radius: f64,
    pub passed: bool,
}

impl CertificateReport {
    /// First sampled frequency that violates the margin.
    pub fn first_failure(&self) -> Option<&CertificatePoint> {
        self.points.iter().find(|p| p.distance <= self.margin)
    }
}

/// Uniform grid of `n` points on `[0, 2π)`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

fn kron_i(n: usize, m: &RealMatrix) -> RealMatrix {
    kron(&RealMatrix::identity(n), m)
}

/// Closed-loop error matrix at frequency `ω`.
pub fn certificate_matrix(p: &PreparedScenario, omega: f64) -> Result<ComplexMatrix> {
    let n_agents = p.agents.len();
    let dbar = &p.network.contraction;
    let dw = delay_transfer_matrix(&p.network, omega);
    let diff = ComplexMatrix::from_real(dbar).try_sub(&dw)?;
    let (a, b, c) = p.protocol_model();
    let n = a.rows();
    let k = &p.gains.k;
    let bk = b * k;
    let abk = a - &bk;
    let big = n_agents * n;
    match p.variant {
        Variant::FullState => {
            let mut m = ComplexMatrix::zeros(2 * big, 2 * big);
            m.set_real_block(0, 0, &kron_i(n_agents, &abk));
            m.set_real_block(0, big, &kron_i(n_agents, &bk));
            m.set_block(big, 0, &kron_complex_real(&diff, a));
            m.set_block(big, big, &kron_complex_real(&dw, a));
            Ok(m)
        }
        Variant::PartialState | Variant::Heterogeneous => {
            let h = p
                .gains
                .h
                .as_ref()
                .ok_or_else(|| Error::Certificate("observer gain H is required".to_string()))?;
            let hc = h * c;
            let widths: Vec<usize> = p.precompensators.iter().map(|c| c.mismatch_states()).collect();
            let w: usize = widths.iter().sum();
            let mut m = ComplexMatrix::zeros(3 * big + w, 3 * big + w);
            m.set_real_block(0, 0, &kron_i(n_agents, &abk));
            m.set_real_block(0, big, &kron_i(n_agents, &bk));
            m.set_block(big, big, &kron_complex_real(&dw, a));
            m.set_real_block(big, 2 * big, &kron_i(n_agents, a));
            m.set_block(2 * big, 0, &kron_complex_real(&diff, &hc));
            m.set_real_block(2 * big, 2 * big, &kron_i(n_agents, &(a - &hc)));
            if w > 0 {
                let mut off = 0;
                let offsets: Vec<usize> = widths
                    .iter()
                    .map(|wi| {
                        let o = off;
                        off += wi;
                        o
                    })
                    .collect();
                let id_minus = ComplexMatrix::identity(n_agents).try_sub(&dw)?;
                for (j, pre) in p.precompensators.iter().enumerate() {
                    if widths[j] == 0 {
                        continue;
                    }
                    let col = 3 * big + offsets[j];
                    let bcs = b * &pre.c_s;
                    m.set_real_block(j * n, col, &bcs);
                    m.set_real_block(big + j * n, col, &bcs);
                    for i in 0..n_agents {
                        let s = id_minus[(i, j)];
                        if s.norm() == 0.0 {
                            continue;
                        }
                        let mut blk = ComplexMatrix::zeros(n, widths[j]);
                        for r in 0..n {
                            for cc in 0..widths[j] {
                                blk[(r, cc)] = s * bcs[(r, cc)];
                            }
                        }
                        m.set_block(2 * big + i * n, col, &blk);
                    }
                    m.set_real_block(col, col, &pre.a_s);
                }
            }
            Ok(m)
        }
    }
}

pub fn certificate_sweep(
    p: &PreparedScenario,
    grid: &[f64],
    margin: f64,
) -> Result<CertificateReport> {
    if grid.is_empty() {
        return Err(Error::Certificate("empty frequency grid".to_string()));
    }
    if !(margin >= 0.0) {
        return Err(Error::Certificate(format!("invalid margin {}", margin)));
    }
    let zero = complex_eigenvalues(&certificate_matrix(p, 0.0)?, DEFAULT_EIG_TOL)
        .map_err(|e| Error::Certificate(e.to_string()))?;
    let mut points = Vec::with_capacity(grid.len());
    for &omega in grid {
        let spec = complex_eigenvalues(&certificate_matrix(p, omega)?, DEFAULT_EIG_TOL)
            .map_err(|e| Error::Certificate(format!("at ω = {}: {}", omega, e)))?;
        points.push(CertificatePoint {
            omega,
            distance: spec.unit_circle_distance(),
            spectral_radius: spec.spectral_radius,
        });
    }
    let min_distance = points.iter().map(|p| p.distance).fold(f64::INFINITY, f64::min);
    let passed = min_distance > margin && zero.spectral_radius < 1.0 - margin;
    Ok(CertificateReport {
        points,
        margin,
        min_distance,
        zero_delay_radius: zero.spectral_radius,
        passed,
    })
}
