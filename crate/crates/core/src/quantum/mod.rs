//! Exact diagonalization of small spin-phonon chains.

pub mod hamiltonian;
pub mod hilbert;
pub mod lanczos;
pub mod observables;
pub mod sparse;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

pub use hamiltonian::{build_hamiltonian, build_sector_hamiltonian, parity_commutator_residual, project_parity};
pub use hilbert::{PhononSpace, TruncatedHilbert, MAX_DIMENSION};
pub use lanczos::{davidson_lowest, lowest_eigenpair, Eigenpair, LanczosOptions};
pub use observables::{observables, QuantumObservables};
pub use sparse::CsrMatrix;

use crate::classical::{exact_ground_state, ising_energy, ClassifyOptions};
use crate::couplings::exact_couplings;
use crate::error::{Error, Result};
use crate::lattice::{chain_modes, ChainConfig, ModeData};
use hamiltonian::{mode_drive, site_mode_couplings};
use hilbert::spin_config;

/// Default phonon truncation per mode.
pub const DEFAULT_N_MAX: usize = 6;

/// Lowest eigenpair of a sparse Hermitian matrix (Davidson, diagonal
/// preconditioner).
pub fn ground_state(h: &CsrMatrix, opts: &LanczosOptions) -> Result<Eigenpair> {
    ground_state_from(h, None, opts)
}

/// [`ground_state`] from a given start vector.
pub fn ground_state_from(h: &CsrMatrix, start: Option<Vec<Complex64>>, opts: &LanczosOptions) -> Result<Eigenpair> {
    davidson_lowest(
        h.dim,
        |x, y| h.matvec(x, y),
        &h.diagonal(),
        h.norm_bound(),
        None,
        start,
        opts,
    )
}

#[derive(Debug, Clone)]
pub struct ParityGroundState {
    pub pair: Eigenpair,
    /// Parity eigenvalue (±1) of the returned state.
    pub parity: f64,
    /// Lowest energy in the opposite parity sector.
    pub other_sector_energy: f64,
}

/// Lowest state of each parity sector; the lower one is returned.
pub fn parity_ground_state(
    h: &CsrMatrix,
    hilbert: &TruncatedHilbert,
    opts: &LanczosOptions,
) -> Result<ParityGroundState> {
    if h.dim != hilbert.dim {
        return Err(Error::DimensionMismatch {
            expected: hilbert.dim,
            got: h.dim,
        });
    }
    let bound = h.norm_bound();
    let diag = h.diagonal();
    let solve = |eigen: f64| {
        let proj = move |v: &mut [Complex64]| project_parity(hilbert, eigen, v);
        davidson_lowest(h.dim, |x, y| h.matvec(x, y), &diag, bound, Some(&proj), None, opts)
    };
    let even = solve(1.0)?;
    let odd = solve(-1.0)?;
    Ok(if even.energy <= odd.energy {
        ParityGroundState {
            other_sector_energy: odd.energy,
            pair: even,
            parity: 1.0,
        }
    } else {
        ParityGroundState {
            other_sector_energy: even.energy,
            pair: odd,
            parity: -1.0,
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactPoint {
    pub omega_x: f64,
    pub n_max: usize,
    pub dimension: usize,
    pub parity: f64,
    pub parity_gap: f64,
    pub residual: f64,
    pub observables: QuantumObservables,
}

/// Ground-state observables at one transverse field.
pub fn exact_point(
    cfg: &ChainConfig,
    modes: &ModeData,
    n_max: usize,
    omega_x: f64,
    opts: &LanczosOptions,
) -> Result<ExactPoint> {
    let hilbert = TruncatedHilbert::new(cfg.n, n_max)?;
    let h = build_hamiltonian(cfg, modes, &hilbert, omega_x)?;
    let gs = parity_ground_state(&h, &hilbert, opts)?;
    let obs = observables(&gs.pair.vector, &hilbert, gs.pair.energy)?;
    Ok(ExactPoint {
        omega_x,
        n_max,
        dimension: hilbert.dim,
        parity: gs.parity,
        parity_gap: gs.other_sector_energy - gs.pair.energy,
        residual: gs.pair.residual,
        observables: obs,
    })
}

/// [`exact_point`] over a grid of transverse fields, in parallel.
pub fn exact_sweep(cfg: &ChainConfig, n_max: usize, omegas: &[f64], opts: &LanczosOptions) -> Result<Vec<ExactPoint>> {
    cfg.validate()?;
    let modes = chain_modes(cfg)?;
    omegas
        .par_iter()
        .map(|&w| exact_point(cfg, &modes, n_max, w, opts))
        .collect()
}

/// Grid point with the largest `|dOAF/dΩ_x|` (centred differences inside,
/// one-sided at the ends).
pub fn crossover_location(omegas: &[f64], oaf: &[f64]) -> Result<f64> {
    let n = omegas.len();
    if n < 2 || oaf.len() != n {
        return Err(Error::config("crossover needs at least two matching samples"));
    }
    let slope = |i: usize| {
        let (a, b) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        ((oaf[b] - oaf[a]) / (omegas[b] - omegas[a])).abs()
    };
    let best = (0..n).max_by(|&a, &b| slope(a).total_cmp(&slope(b))).unwrap_or(0);
    Ok(omegas[best])
}

/// `Ω_{x,c} = (g²/δ_{N/2}) e^{−2n̄}`.
pub fn critical_field_estimate(mean_phonons: f64, g: f64, delta_min: f64) -> Result<f64> {
    if !(mean_phonons >= 0.0) || !(delta_min > 0.0) {
        return Err(Error::config("need n̄ ≥ 0 and a positive mode frequency"));
    }
    Ok(g * g / delta_min * (-2.0 * mean_phonons).exp())
}

/// `|⟨ψ| (⊗_j |−x⟩) ⊗ |0⟩⟩|²`.
pub fn paramagnet_overlap(psi: &[Complex64], hilbert: &TruncatedHilbert) -> f64 {
    let amp = 0.5f64.powf(hilbert.n_sites as f64 / 2.0);
    let s: Complex64 = (0..hilbert.spin_dim)
        .map(|spin| {
            let sign = if spin.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            psi[hilbert.index(spin, 0)] * (sign * amp)
        })
        .sum();
    s.norm_sqr()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolaronOptions {
    /// Initial cutoff on every mode.
    pub n_max_start: usize,
    /// Cutoff increment per enlargement.
    pub n_max_step: usize,
    /// A mode is enlarged while the ground state keeps more than this weight
    /// at its cutoff.
    pub edge_tol: f64,
    /// Energy change allowed when every cutoff is raised once more.
    pub tol: f64,
    pub lanczos: LanczosOptions,
}

impl Default for PolaronOptions {
    fn default() -> Self {
        PolaronOptions {
            n_max_start: 4,
            n_max_step: 2,
            edge_tol: 1e-11,
            tol: 1e-10,
            lanczos: LanczosOptions::default(),
        }
    }
}

/// Converged ground state of one fixed-`σ^z` block.
#[derive(Debug, Clone)]
pub struct SectorGroundState {
    pub spins: Vec<f64>,
    pub energy: f64,
    /// `(cutoffs, E₀)` for every truncation tried, in order.
    pub history: Vec<(Vec<usize>, f64)>,
    pub space: PhononSpace,
    pub pair: Eigenpair,
}

/// Ground state of the `Ω_x = 0` block with spins `s`. Modes whose cutoff
/// level still carries weight above `edge_tol` are enlarged; once none do,
/// every cutoff is raised by one more step and the run ends when that
/// changes the energy by less than `tol`.
pub fn sector_ground_state(
    cfg: &ChainConfig,
    modes: &ModeData,
    s: &[f64],
    opts: &PolaronOptions,
) -> Result<SectorGroundState> {
    let step = opts.n_max_step.max(1);
    let mut cutoffs = vec![opts.n_max_start.max(1); s.len()];
    let mut history: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut confirming = false;
    let mut previous: Option<(PhononSpace, Vec<Complex64>)> = None;
    loop {
        let space = PhononSpace::with_cutoffs(cutoffs.clone()).map_err(|e| match e {
            Error::Capacity { .. } if !history.is_empty() => Error::numerical(format!(
                "phonon truncation did not converge before the dimension limit ({e})"
            )),
            other => other,
        })?;
        let h = build_sector_hamiltonian(cfg, modes, &space, s)?;
        let start = match &previous {
            Some((old, v)) => Some(old.embed(v, &space)?),
            None => None,
        };
        let pair = ground_state_from(&h, start, &opts.lanczos)?;
        let edges = space.edge_weights(&pair.vector);
        let energy = pair.energy;
        let settled = history.last().is_some_and(|(_, prev)| (prev - energy).abs() < opts.tol);
        history.push((cutoffs.clone(), energy));
        let grow: Vec<bool> = edges.iter().map(|&w| w > opts.edge_tol).collect();
        if grow.iter().any(|&g| g) {
            confirming = false;
            for (c, g) in cutoffs.iter_mut().zip(&grow) {
                if *g {
                    *c += step;
                }
            }
        } else if confirming && settled {
            return Ok(SectorGroundState {
                spins: s.to_vec(),
                energy,
                history,
                space,
                pair,
            });
        } else {
            confirming = true;
            cutoffs.iter_mut().for_each(|c| *c += step);
        }
        previous = Some((space, pair.vector));
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PolaronReport {
    /// Largest mode cutoff of the ground sector at convergence.
    pub n_max: usize,
    pub cutoffs: Vec<usize>,
    /// `(largest cutoff, E₀)` for every truncation of the ground sector.
    pub history: Vec<(usize, f64)>,
    pub energy_exact: f64,
    pub energy_classical: f64,
    pub diagonal_constant: f64,
    pub abs_error: f64,
    pub spins_exact: Vec<f64>,
    pub spins_classical: Vec<f64>,
    /// `⟨a_n⟩` from the exact ground state, `[re, im]`.
    pub displacements_exact: Vec<[f64; 2]>,
    /// `−(g/δ_n)∑_j M*_{j,n} e^{iφ_j} s_j` for the exact ground configuration.
    pub displacements_polaron: Vec<[f64; 2]>,
    pub displacement_error: f64,
}

/// Exact `Ω_x = 0` ground state, one fixed-`σ^z` block at a time
/// (`s_0 = +1`), compared with the classical minimum of
/// `∑_{j,l} J_{j,l} s_j s_l` including the diagonal.
pub fn polaron_check(cfg: &ChainConfig, opts: &PolaronOptions) -> Result<PolaronReport> {
    cfg.validate()?;
    if cfg.n > hilbert::MAX_SITES {
        return Err(Error::Capacity {
            what: "exact-diagonalization sites",
            requested: cfg.n,
            limit: hilbert::MAX_SITES,
        });
    }
    let modes = chain_modes(cfg)?;
    let coupling = exact_couplings(&modes, cfg)?;
    let offdiag = coupling.off_diagonal();
    let classical = exact_ground_state(&offdiag, cfg.dk_d0, &ClassifyOptions::default())?;
    let diagonal_constant = coupling.diagonal_constant();
    let energy_classical = ising_energy(&classical.ground.s, &offdiag)? + diagonal_constant;

    let n = cfg.n;
    let sectors: Vec<Vec<f64>> = (0..1usize << (n - 1)).map(|code| spin_config(code << 1, n)).collect();
    let mut best: Option<SectorGroundState> = None;
    for s in &sectors {
        let r = sector_ground_state(cfg, &modes, s, opts)?;
        if best.as_ref().is_none_or(|b| r.energy < b.energy) {
            best = Some(r);
        }
    }
    let best = best.ok_or_else(|| Error::numerical("no spin sectors"))?;

    let c = site_mode_couplings(&modes, cfg.dk_d0);
    let drive = mode_drive(&c, cfg.g, &best.spins);
    let polaron: Vec<Complex64> = drive
        .iter()
        .zip(&modes.frequencies)
        .map(|(l, w)| -l.conj() / *w)
        .collect();
    let space = &best.space;
    let psi = &best.pair.vector;
    let mut exact = vec![Complex64::new(0.0, 0.0); n];
    for p in 0..space.dim {
        for (k, ek) in exact.iter_mut().enumerate() {
            let nk = space.occupation(p, k);
            if nk > 0 {
                *ek += psi[p - space.stride(k)].conj() * psi[p] * (nk as f64).sqrt();
            }
        }
    }
    // ⟨a⟩ does not depend on the arbitrary global phase of the sector state
    let displacement_error = exact
        .iter()
        .zip(&polaron)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(PolaronReport {
        n_max: space.n_max,
        cutoffs: space.cutoffs.clone(),
        history: best
            .history
            .iter()
            .map(|(c, e)| (c.iter().copied().max().unwrap_or(0), *e))
            .collect(),
        energy_exact: best.energy,
        energy_classical,
        diagonal_constant,
        abs_error: (best.energy - energy_classical).abs(),
        spins_exact: best.spins.clone(),
        spins_classical: classical.ground.s,
        displacements_exact: exact.iter().map(|d| [d.re, d.im]).collect(),
        displacements_polaron: polaron.iter().map(|d| [d.re, d.im]).collect(),
        displacement_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::HoppingModel;

    fn cfg(n: usize, t_c: f64, dk: f64) -> ChainConfig {
        ChainConfig::new(n, t_c, dk, HoppingModel::OpenNn)
    }

    #[test]
    fn critical_field_closed_form() {
        assert_eq!(critical_field_estimate(0.0, 1.0, 1.0).unwrap(), 1.0);
        assert!((critical_field_estimate(0.5, 1.0, 1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!(critical_field_estimate(-0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn crossover_picks_steepest_point() {
        let w = [0.1, 0.2, 0.3, 0.4, 0.5];
        let o = [1.0, 0.99, 0.5, 0.05, 0.0];
        assert_eq!(crossover_location(&w, &o).unwrap(), 0.3);
    }

    #[test]
    fn decoupled_spectrum() {
        let mut c = cfg(2, 0.5, 0.0);
        c.g = 0.0;
        let modes = chain_modes(&c).unwrap();
        let hil = TruncatedHilbert::new(2, 2).unwrap();
        let h = build_hamiltonian(&c, &modes, &hil, 1.4).unwrap();
        let dense = h.to_dense().symmetric_eigenvalues();
        let mut got: Vec<f64> = dense.iter().copied().collect();
        got.sort_by(f64::total_cmp);
        let mut want = Vec::new();
        for s in [-1.4, 0.0, 0.0, 1.4] {
            for n0 in 0..=2 {
                for n1 in 0..=2 {
                    want.push(s + modes.frequencies[0] * n0 as f64 + modes.frequencies[1] * n1 as f64);
                }
            }
        }
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn hermitian_and_parity_symmetric() {
        let c = cfg(3, 1.0, 2.0 * std::f64::consts::PI / 3.0);
        let modes = chain_modes(&c).unwrap();
        let hil = TruncatedHilbert::new(3, 3).unwrap();
        let h = build_hamiltonian(&c, &modes, &hil, 0.7).unwrap();
        assert!(h.hermiticity_residual() < 1e-12);
        assert!(parity_commutator_residual(&h, &hil) < 1e-12);
    }

    #[test]
    fn single_site_polaron_shift() {
        let c = ChainConfig {
            g: 0.8,
            ..cfg(1, 1.0, 0.0)
        };
        let rep = polaron_check(&c, &PolaronOptions::default()).unwrap();
        assert!((rep.energy_exact + 0.64).abs() < 1e-9, "{rep:?}");
        assert!(rep.displacement_error < 1e-6);
    }
}
