//! Expectation values in a truncated spin-phonon state.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::hilbert::{spin_z, TruncatedHilbert};
use crate::classical::oaf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct QuantumObservables {
    pub energy: f64,
    pub oaf: f64,
    pub mean_phonons: f64,
    pub zz_correlations: Vec<Vec<f64>>,
    pub xx_connected: Vec<Vec<f64>>,
    pub sigma_z: Vec<f64>,
    pub sigma_x: Vec<f64>,
    /// `⟨a_n⟩` as `[re, im]`.
    pub mode_displacements: Vec<[f64; 2]>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

pub fn observables(psi: &[Complex64], hilbert: &TruncatedHilbert, energy: f64) -> Result<QuantumObservables> {
    if psi.len() != hilbert.dim {
        return Err(Error::DimensionMismatch {
            expected: hilbert.dim,
            got: psi.len(),
        });
    }
    let nrm: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
    if (nrm - 1.0).abs() > 1e-8 {
        return Err(Error::numerical(format!("state norm² is {nrm}, expected 1")));
    }
    let n = hilbert.n_sites;
    let ph = &hilbert.phonons;
    let pd = ph.dim;
    let mut sz = vec![0.0; n];
    let mut sx = vec![0.0; n];
    let mut zz = DMatrix::<f64>::zeros(n, n);
    let mut xx = DMatrix::<f64>::zeros(n, n);
    let mut nsum = 0.0;
    let mut disp = vec![Complex64::new(0.0, 0.0); n];

    for s in 0..hilbert.spin_dim {
        let block = &psi[s * pd..(s + 1) * pd];
        let weight: f64 = block.iter().map(|x| x.norm_sqr()).sum();
        let z: Vec<f64> = (0..n).map(|j| spin_z(s, j)).collect();
        for j in 0..n {
            sz[j] += weight * z[j];
            for l in 0..n {
                zz[(j, l)] += weight * z[j] * z[l];
            }
            let flipped = &psi[(s ^ (1 << j)) * pd..((s ^ (1 << j)) + 1) * pd];
            sx[j] += flipped.iter().zip(block).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
            for l in 0..n {
                if l != j {
                    let t = s ^ (1 << j) ^ (1 << l);
                    let other = &psi[t * pd..(t + 1) * pd];
                    xx[(j, l)] += other.iter().zip(block).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
                }
            }
        }
        for p in 0..pd {
            let amp = block[p];
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..n {
                let nk = ph.occupation(p, k);
                nsum += amp.norm_sqr() * nk as f64;
                if nk > 0 {
                    // ⟨a_k⟩ = ∑ conj(ψ_{p−e_k}) √n_k ψ_p
                    disp[k] += block[p - ph.stride(k)].conj() * amp * (nk as f64).sqrt();
                }
            }
        }
    }
    for j in 0..n {
        xx[(j, j)] = 1.0;
    }
    let mut xx_conn = xx.clone();
    for j in 0..n {
        for l in 0..n {
            xx_conn[(j, l)] -= sx[j] * sx[l];
        }
    }
    Ok(QuantumObservables {
        energy,
        oaf: oaf(&zz),
        mean_phonons: nsum / n as f64,
        zz_correlations: rows(&zz),
        xx_connected: rows(&xx_conn),
        sigma_z: sz,
        sigma_x: sx,
        mode_displacements: disp.iter().map(|d| [d.re, d.im]).collect(),
    })
}
