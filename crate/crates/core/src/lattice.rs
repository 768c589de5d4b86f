//! Phonon hopping structure of the transverse ion chain and its normal modes.
//!
//! The rotated-frame phonon Hamiltonian is `∑_{j,l} A_{j,l} a†_j a_l` with
//! `A = ω̃·1 + (t_C/2)·F`. The on-site value `ω̃` is fixed by requiring that
//! the lowest collective mode sits at the configured zigzag detuning
//! `delta_target`, so every chain built here is parameterized by `δ_{N/2}`.
//!
//! The rotating-wave approximation (`ω_x ≫ t_{j,l}`) behind the
//! number-conserving hopping form is assumed and not checked.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{cos_series3, ZETA3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoppingModel {
    /// Ring with the cyclic dipolar kernel `1/d³`, `d` the cyclic distance.
    PbcDipolar,
    /// Open chain with the full dipolar kernel `1/|j−l|³`.
    OpenDipolar,
    /// Open chain keeping only nearest-neighbour hopping.
    OpenNn,
}

impl HoppingModel {
    pub fn is_open(self) -> bool {
        !matches!(self, HoppingModel::PbcDipolar)
    }
}

impl std::fmt::Display for HoppingModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            HoppingModel::PbcDipolar => "pbc_dipolar",
            HoppingModel::OpenDipolar => "open_dipolar",
            HoppingModel::OpenNn => "open_nn",
        };
        f.write_str(s)
    }
}

/// How a hopping amplitude `t_{j,l}` enters the single-particle matrix.
///
/// `Half` is the `(1/2)∑_{j,l} t_{j,l} a†_j a_l` form, giving `A_{j,l} = t_{j,l}/2`.
/// `Full` puts the whole amplitude on each bond, `A_{j,l} = t_{j,l}`, which is
/// the nearest-neighbour convention `t_C ∑_j (a†_{j+1} a_j + h.c.)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondConvention {
    #[default]
    Half,
    Full,
}

impl BondConvention {
    pub fn factor(self) -> f64 {
        match self {
            BondConvention::Half => 0.5,
            BondConvention::Full => 1.0,
        }
    }
}

/// Geometry, hopping model and drive parameters of one simulated chain.
///
/// Energies are in units where `δ_{N/2} = g = 1` unless stated otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n: usize,
    pub t_c: f64,
    pub delta_target: f64,
    pub g: f64,
    /// Optical phase step `Δk·d0` in radians per site.
    pub dk_d0: f64,
    pub hopping: HoppingModel,
    #[serde(default)]
    pub bond: BondConvention,
}

impl ChainConfig {
    /// Chain in the `δ_{N/2} = g = 1` unit system.
    pub fn new(n: usize, t_c: f64, dk_d0: f64, hopping: HoppingModel) -> Self {
        ChainConfig {
            n,
            t_c,
            delta_target: 1.0,
            g: 1.0,
            dk_d0,
            hopping,
            bond: BondConvention::Half,
        }
    }

    pub fn with_bond(mut self, bond: BondConvention) -> Self {
        self.bond = bond;
        self
    }

    pub fn with_t_c(mut self, t_c: f64) -> Self {
        self.t_c = t_c;
        self
    }

    pub fn with_dk_d0(mut self, dk_d0: f64) -> Self {
        self.dk_d0 = dk_d0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("chain needs at least one site"));
        }
        if self.hopping == HoppingModel::PbcDipolar && (self.n < 2 || !self.n.is_multiple_of(2)) {
            return Err(Error::config(format!(
                "pbc_dipolar needs an even site count of at least 2, got {}",
                self.n
            )));
        }
        if !(self.t_c > 0.0) || !self.t_c.is_finite() {
            return Err(Error::config(format!("t_c must be positive, got {}", self.t_c)));
        }
        if !(self.delta_target > 0.0) || !self.delta_target.is_finite() {
            return Err(Error::config(format!(
                "delta_target must be positive, got {}",
                self.delta_target
            )));
        }
        if !self.g.is_finite() {
            return Err(Error::config("g must be finite"));
        }
        if !(0.0..TAU).contains(&self.dk_d0) {
            return Err(Error::config(format!("dk_d0 must lie in [0, 2π), got {}", self.dk_d0)));
        }
        Ok(())
    }
}

/// Normal modes of a hopping matrix.
#[derive(Debug, Clone)]
pub struct ModeData {
    /// `δ_n`, indexed by mode label.
    pub frequencies: Vec<f64>,
    /// `M_{j,n}`: row is the site, column the mode.
    pub wavefunctions: DMatrix<Complex64>,
    pub hopping: HoppingModel,
    /// Label of the lowest (zigzag) mode.
    pub zigzag_index: usize,
}

impl ModeData {
    pub fn n_sites(&self) -> usize {
        self.wavefunctions.nrows()
    }

    pub fn min_frequency(&self) -> f64 {
        self.frequencies[self.zigzag_index]
    }

    /// `max_{n,m} |∑_j M_{j,n} M*_{j,m} − δ_{n,m}|`.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = self.wavefunctions.adjoint() * &self.wavefunctions;
        let n = gram.nrows();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((gram[(r, c)] - target).norm());
            }
        }
        worst
    }
}

/// Dimensionless kernel `F_{j,l}` of the chosen hopping model (zero diagonal).
///
/// For the ring the antipodal bond `|j−l| = N/2` appears as a single matrix
/// element of weight `1/(N/2)³`, so it shows up once in the dispersion as
/// `F_{N/2}(−1)^n` with no factor 2.
pub fn hopping_kernel(n: usize, model: HoppingModel) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |j, l| {
        if j == l {
            return 0.0;
        }
        let d = j.abs_diff(l);
        match model {
            HoppingModel::PbcDipolar => {
                let cyc = if 2 * d <= n { d } else { n - d };
                1.0 / (cyc as f64).powi(3)
            }
            HoppingModel::OpenDipolar => 1.0 / (d as f64).powi(3),
            HoppingModel::OpenNn => {
                if d == 1 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    })
}

fn off_diagonal_part(cfg: &ChainConfig) -> DMatrix<f64> {
    hopping_kernel(cfg.n, cfg.hopping) * (cfg.bond.factor() * cfg.t_c)
}

fn lowest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// On-site value `ω̃` that puts the lowest mode of `A` at `delta_target`.
///
/// The spectrum of `ω̃·1 + K` is the spectrum of `K` shifted by `ω̃`, so this
/// is exact: no iteration is involved.
pub fn onsite_frequency(cfg: &ChainConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(cfg.delta_target - lowest_eigenvalue(&off_diagonal_part(cfg)))
}

/// Bare detuning `δ_x` belonging to the configured `δ_{N/2}`.
///
/// On the ring this is the long-chain relation `δ_x = δ_{N/2} + (3/4)ζ(3)t_C`;
/// for open chains it is the on-site value of the finite matrix.
/// `t_C = 0` is accepted here and returns `delta_target`.
pub fn delta_x_from_target(cfg: &ChainConfig) -> Result<f64> {
    if !(cfg.delta_target > 0.0) {
        return Err(Error::config(format!(
            "delta_target must be positive, got {}",
            cfg.delta_target
        )));
    }
    if cfg.t_c < 0.0 || !cfg.t_c.is_finite() {
        return Err(Error::config(format!("t_c must be non-negative, got {}", cfg.t_c)));
    }
    if cfg.t_c == 0.0 {
        return Ok(cfg.delta_target);
    }
    match cfg.hopping {
        HoppingModel::PbcDipolar => Ok(cfg.delta_target + 0.75 * ZETA3 * 2.0 * cfg.bond.factor() * cfg.t_c),
        _ => onsite_frequency(cfg),
    }
}

/// Real symmetric single-particle matrix `A` of the rotated phonon Hamiltonian.
pub fn build_hopping_matrix(cfg: &ChainConfig) -> Result<DMatrix<f64>> {
    let onsite = onsite_frequency(cfg)?;
    let mut a = off_diagonal_part(cfg);
    for j in 0..cfg.n {
        a[(j, j)] = onsite;
    }
    Ok(a)
}

/// Infinite-ring dispersion `δ(x) = δ_x + t_C ∑_k cos(kx)/k³`.
pub fn dispersion_pbc(x: f64, cfg: &ChainConfig) -> Result<f64> {
    if cfg.hopping != HoppingModel::PbcDipolar {
        return Err(Error::config("dispersion_pbc needs the pbc_dipolar model"));
    }
    if !(0.0..=TAU).contains(&x) {
        return Err(Error::config(format!("x must lie in [0, 2π], got {x}")));
    }
    let delta_x = delta_x_from_target(cfg)?;
    Ok(delta_x + 2.0 * cfg.bond.factor() * cfg.t_c * cos_series3(x))
}

/// Eigenvalue of the finite ring for plane-wave label `mode`: the discrete
/// Fourier transform of one row of `A`.
pub fn ring_mode_frequency(a: &DMatrix<f64>, mode: usize) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for d in 0..n {
        acc += a[(0, d)] * (TAU * (mode * d) as f64 / n as f64).cos();
    }
    acc
}

fn is_circulant(a: &DMatrix<f64>, tol: f64) -> bool {
    let n = a.nrows();
    (0..n).all(|j| (0..n).all(|l| (a[(j, l)] - a[(0, (l + n - j) % n)]).abs() <= tol))
}

/// Diagonalize `A` into collective modes.
///
/// Ring: plane waves `e^{i2πnj/N}/√N` labelled by `n`, zigzag at `n = N/2`.
/// Open chains: real eigenvectors sorted by descending frequency, so the
/// zigzag mode is the last label; each vector's first non-negligible entry
/// is made positive.
pub fn normal_modes(a: &DMatrix<f64>, model: HoppingModel) -> Result<ModeData> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let asym = (a - a.transpose()).norm();
    if asym > 1e-12 * scale {
        return Err(Error::numerical(format!("hopping matrix is not symmetric ({asym:e})")));
    }

    let (frequencies, wavefunctions, zigzag_index) = match model {
        HoppingModel::PbcDipolar => {
            if !is_circulant(a, 1e-12 * scale) {
                return Err(Error::numerical("ring hopping matrix is not circulant"));
            }
            let norm = 1.0 / (n as f64).sqrt();
            let freqs: Vec<f64> = (0..n).map(|m| ring_mode_frequency(a, m)).collect();
            let wf = DMatrix::from_fn(n, n, |j, m| {
                Complex64::from_polar(norm, TAU * (m * j) as f64 / n as f64)
            });
            let zz = freqs
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.total_cmp(y.1))
                .map(|(i, _)| i)
                .unwrap_or(0);
            (freqs, wf, zz)
        }
        _ => {
            let eig = a.clone().symmetric_eigen();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
            let freqs: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let mut wf = DMatrix::<Complex64>::zeros(n, n);
            for (col, &src) in order.iter().enumerate() {
                let v = eig.eigenvectors.column(src);
                let sign = v.iter().find(|x| x.abs() > 1e-9).map(|x| x.signum()).unwrap_or(1.0);
                for j in 0..n {
                    wf[(j, col)] = Complex64::new(sign * v[j], 0.0);
                }
            }
            (freqs, wf, n - 1)
        }
    };

    let min_frequency = frequencies.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_frequency > 0.0) {
        return Err(Error::UnstableFrame { min_frequency });
    }

    let modes = ModeData {
        frequencies,
        wavefunctions,
        hopping: model,
        zigzag_index,
    };
    let residual = reconstruction_residual(a, &modes);
    if residual > 1e-10 * scale {
        return Err(Error::numerical(format!(
            "mode reconstruction residual {residual:e} exceeds tolerance"
        )));
    }
    Ok(modes)
}

/// `‖A − M diag(δ) M†‖_F`.
pub fn reconstruction_residual(a: &DMatrix<f64>, modes: &ModeData) -> f64 {
    let m = &modes.wavefunctions;
    let n = m.nrows();
    let mut scaled = m.clone();
    for (col, &w) in modes.frequencies.iter().enumerate() {
        scaled.column_mut(col).scale_mut(w);
    }
    let rebuilt = scaled * m.adjoint();
    let mut acc = 0.0;
    for j in 0..n {
        for l in 0..n {
            acc += (rebuilt[(j, l)] - Complex64::new(a[(j, l)], 0.0)).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Build `A` and diagonalize it in one step.
pub fn chain_modes(cfg: &ChainConfig) -> Result<ModeData> {
    normal_modes(&build_hopping_matrix(cfg)?, cfg.hopping)
}

/// Overlap `|⟨(−1)^j/√N, M_{·,n}⟩|` of a mode with the ideal zigzag pattern.
pub fn zigzag_overlap(modes: &ModeData, mode: usize) -> f64 {
    let n = modes.n_sites();
    let norm = 1.0 / (n as f64).sqrt();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += modes.wavefunctions[(j, mode)] * (sign * norm);
    }
    acc.norm()
}

/// Plane-wave momentum `x = 2πn/N` of ring mode `n`, folded into `[0, 2π)`.
pub fn ring_momentum(n_sites: usize, mode: usize) -> f64 {
    (TAU * mode as f64 / n_sites as f64).rem_euclid(TAU)
}
