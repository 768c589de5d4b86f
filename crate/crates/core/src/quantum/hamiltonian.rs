//! `H = ∑_n δ_n a†_n a_n + (Ω_x/2)∑_j σ^x_j + g∑_{j,n} σ^z_j (M_{j,n} e^{−iφ_j} a_n + h.c.)`
//! with `φ_j = Δk d0 j`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::hilbert::{spin_z, PhononSpace, TruncatedHilbert};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::lattice::{ChainConfig, ModeData};

/// `c_{j,n} = M_{j,n} e^{−iφ_j}`, indexed `[j][n]`.
pub fn site_mode_couplings(modes: &ModeData, dk_d0: f64) -> Vec<Vec<Complex64>> {
    let n = modes.n_sites();
    (0..n)
        .map(|j| {
            let ph = Complex64::from_polar(1.0, -dk_d0 * j as f64);
            (0..n).map(|k| modes.wavefunctions[(j, k)] * ph).collect()
        })
        .collect()
}

/// `λ_n(s) = g ∑_j s_j c_{j,n}`: the amplitude multiplying `a_n` for the
/// spin configuration `s`.
pub fn mode_drive(c: &[Vec<Complex64>], g: f64, s: &[f64]) -> Vec<Complex64> {
    let n_modes = c.first().map_or(0, |r| r.len());
    (0..n_modes)
        .map(|k| s.iter().zip(c).map(|(sj, cj)| cj[k] * (g * sj)).sum())
        .collect()
}

fn check(cfg: &ChainConfig, modes: &ModeData, n_sites: usize) -> Result<()> {
    if modes.n_sites() != cfg.n || n_sites != cfg.n {
        return Err(Error::DimensionMismatch {
            expected: cfg.n,
            got: modes.n_sites(),
        });
    }
    if let Some(&bad) = modes.frequencies.iter().find(|&&w| !(w > 0.0)) {
        return Err(Error::UnstableFrame { min_frequency: bad });
    }
    Ok(())
}

fn phonon_row(
    space: &PhononSpace,
    freqs: &[f64],
    drive: &[Complex64],
    p: usize,
    offset: usize,
    row: &mut Vec<(usize, Complex64)>,
) {
    let mut diag = 0.0;
    for k in 0..space.n_modes {
        let nk = space.occupation(p, k);
        diag += freqs[k] * nk as f64;
        let st = space.stride(k);
        if nk < space.cutoff(k) {
            // ⟨p|a_k|p+e_k⟩ = √(n_k+1)
            row.push((offset + p + st, drive[k] * ((nk + 1) as f64).sqrt()));
        }
        if nk > 0 {
            row.push((offset + p - st, drive[k].conj() * (nk as f64).sqrt()));
        }
    }
    row.push((offset + p, Complex64::new(diag, 0.0)));
}

/// Full spin-phonon Hamiltonian on the truncated basis.
pub fn build_hamiltonian(
    cfg: &ChainConfig,
    modes: &ModeData,
    hilbert: &TruncatedHilbert,
    omega_x: f64,
) -> Result<CsrMatrix> {
    check(cfg, modes, hilbert.n_sites)?;
    let c = site_mode_couplings(modes, cfg.dk_d0);
    let n = hilbert.n_sites;
    let drives: Vec<Vec<Complex64>> = (0..hilbert.spin_dim)
        .map(|s| {
            let cfgs: Vec<f64> = (0..n).map(|j| spin_z(s, j)).collect();
            mode_drive(&c, cfg.g, &cfgs)
        })
        .collect();
    let pd = hilbert.phonons.dim;
    let half = Complex64::new(0.5 * omega_x, 0.0);
    let rows: Vec<Vec<(usize, Complex64)>> = (0..hilbert.dim)
        .into_par_iter()
        .map(|idx| {
            let (s, p) = hilbert.split(idx);
            let mut row = Vec::with_capacity(2 * n + n + 1);
            phonon_row(&hilbert.phonons, &modes.frequencies, &drives[s], p, s * pd, &mut row);
            if omega_x != 0.0 {
                for j in 0..n {
                    row.push(((s ^ (1 << j)) * pd + p, half));
                }
            }
            row
        })
        .collect();
    CsrMatrix::from_rows(hilbert.dim, rows)
}

/// Phonon-only block of the `Ω_x = 0` Hamiltonian for a fixed `σ^z`
/// configuration `s`.
pub fn build_sector_hamiltonian(
    cfg: &ChainConfig,
    modes: &ModeData,
    space: &PhononSpace,
    s: &[f64],
) -> Result<CsrMatrix> {
    check(cfg, modes, s.len())?;
    if space.n_modes != modes.frequencies.len() {
        return Err(Error::DimensionMismatch {
            expected: modes.frequencies.len(),
            got: space.n_modes,
        });
    }
    let c = site_mode_couplings(modes, cfg.dk_d0);
    let drive = mode_drive(&c, cfg.g, s);
    let rows: Vec<Vec<(usize, Complex64)>> = (0..space.dim)
        .into_par_iter()
        .map(|p| {
            let mut row = Vec::with_capacity(2 * space.n_modes + 1);
            phonon_row(space, &modes.frequencies, &drive, p, 0, &mut row);
            row
        })
        .collect();
    CsrMatrix::from_rows(space.dim, rows)
}

/// Sign `(−1)^{∑n}` and target index of the parity map
/// `σ^z → −σ^z, a → −a` applied to basis state `idx`.
pub fn parity_image(hilbert: &TruncatedHilbert, idx: usize) -> (usize, f64) {
    let (s, p) = hilbert.split(idx);
    let sign = if hilbert.phonons.total_quanta(p).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    (hilbert.index(hilbert.flip_all(s), p), sign)
}

/// Projects `v` onto the parity eigenspace with eigenvalue `eigen` (±1).
pub fn project_parity(hilbert: &TruncatedHilbert, eigen: f64, v: &mut [Complex64]) {
    let orig = v.to_vec();
    v.par_iter_mut().enumerate().with_min_len(1024).for_each(|(idx, x)| {
        let (img, sign) = parity_image(hilbert, idx);
        *x = 0.5 * (orig[idx] + orig[img] * (eigen * sign));
    });
}

/// `max |(PHP⁻¹ − H)_{r,c}|` over stored entries.
pub fn parity_commutator_residual(h: &CsrMatrix, hilbert: &TruncatedHilbert) -> f64 {
    (0..h.dim)
        .into_par_iter()
        .map(|r| {
            let (pr, sr) = parity_image(hilbert, r);
            let mut worst: f64 = 0.0;
            for k in h.indptr[r]..h.indptr[r + 1] {
                let c = h.indices[k];
                let (pc, sc) = parity_image(hilbert, c);
                worst = worst.max((h.get(pr, pc) * (sr * sc) - h.values[k]).norm());
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}
