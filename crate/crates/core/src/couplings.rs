//! Effective Ising couplings mediated by the transverse phonons.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ChainConfig, HoppingModel, ModeData};
use crate::special::ZETA3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ExactModeSum,
    Analytic,
}

/// Constants of the exponential-plus-dipolar long-chain approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticConstants {
    pub xi: f64,
    pub j_exp: f64,
    pub j_dip: f64,
}

impl AnalyticConstants {
    /// `ξ = √(log2/2)·√(t_C/δ)`, `J_exp = ξg²/(t_C log2)`,
    /// `J_dip = g²t_C / (2(δ + 7ζ(3)t_C/4)²)`.
    pub fn new(t_c: f64, delta: f64, g: f64) -> Self {
        let ln2 = std::f64::consts::LN_2;
        let xi = (ln2 / 2.0).sqrt() * (t_c / delta).sqrt();
        let g2 = g * g;
        AnalyticConstants {
            xi,
            j_exp: xi * g2 / (t_c * ln2),
            j_dip: g2 * t_c / (2.0 * (delta + 1.75 * ZETA3 * t_c).powi(2)),
        }
    }

    /// Undressed coupling at separation `d ≥ 1`.
    pub fn coupling(&self, d: usize) -> f64 {
        let df = d as f64;
        let alt = if d.is_multiple_of(2) { 1.0 } else { -1.0 };
        -alt * self.j_exp * (-df / self.xi).exp() + self.j_dip / df.powi(3)
    }
}

/// Dense `N×N` effective couplings `J^{Δk}_{j,l}`.
///
/// The Ising energy built from it is the full double sum
/// `∑_{j≠l} J_{j,l} s_j s_l`, so every unordered pair is counted twice.
/// The exact mode sum keeps its (spin-independent) diagonal for energy
/// bookkeeping; ground-state searches and comparisons ignore it.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pub j: DMatrix<f64>,
    pub provenance: Provenance,
    pub dk_d0: f64,
    pub constants: Option<AnalyticConstants>,
    /// Set when the analytic form was evaluated for an open chain.
    pub model_mismatch: bool,
}

impl CouplingMatrix {
    pub fn n(&self) -> usize {
        self.j.nrows()
    }

    /// Diagonal constant `∑_j J_{j,j}` (the `(σ^z)² = 1` offset).
    pub fn diagonal_constant(&self) -> f64 {
        self.j.diagonal().sum()
    }

    /// Copy with the diagonal set to zero.
    pub fn off_diagonal(&self) -> DMatrix<f64> {
        let mut m = self.j.clone();
        m.fill_diagonal(0.0);
        m
    }
}

/// Running-wave dressing factor `cos(Δk d0 (j−l))`.
pub fn dressing(dk_d0: f64, j: usize, l: usize) -> f64 {
    (dk_d0 * (j as f64 - l as f64)).cos()
}

fn check_frequencies(modes: &ModeData) -> Result<()> {
    let min = modes.frequencies.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::UnstableFrame { min_frequency: min });
    }
    Ok(())
}

/// Undressed mode sum `−g² ∑_n M_{j,n} M*_{l,n} / δ_n`, checked to be real.
pub fn undressed_mode_sum(modes: &ModeData, g: f64) -> Result<DMatrix<f64>> {
    check_frequencies(modes)?;
    let n = modes.n_sites();
    let m = &modes.wavefunctions;
    let g2 = g * g;
    let mut out = DMatrix::<f64>::zeros(n, n);
    let mut worst_imag: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 0..n {
        for l in j..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &w) in modes.frequencies.iter().enumerate() {
                acc += m[(j, k)] * m[(l, k)].conj() / w;
            }
            let v = -g2 * acc;
            worst_imag = worst_imag.max(v.im.abs());
            scale = scale.max(v.re.abs());
            out[(j, l)] = v.re;
            out[(l, j)] = v.re;
        }
    }
    if worst_imag > 1e-12 * scale.max(1e-300) && worst_imag > 1e-14 {
        return Err(Error::numerical(format!(
            "mode sum has imaginary residue {worst_imag:e}"
        )));
    }
    Ok(out)
}

/// Exact couplings from the normal modes, dressed by `cos(Δk d0 (j−l))`.
pub fn exact_couplings(modes: &ModeData, cfg: &ChainConfig) -> Result<CouplingMatrix> {
    if modes.n_sites() != cfg.n {
        return Err(Error::DimensionMismatch {
            expected: cfg.n,
            got: modes.n_sites(),
        });
    }
    let mut j = undressed_mode_sum(modes, cfg.g)?;
    for r in 0..cfg.n {
        for c in 0..cfg.n {
            j[(r, c)] *= dressing(cfg.dk_d0, r, c);
        }
    }
    Ok(CouplingMatrix {
        j,
        provenance: Provenance::ExactModeSum,
        dk_d0: cfg.dk_d0,
        constants: None,
        model_mismatch: false,
    })
}

/// Couplings with the optical phases attached to each site inside the mode
/// sum: the Hermitian part of `−g² ∑_n (M_{j,n}e^{−iφ_j})(M_{l,n}e^{−iφ_l})* / δ_n`,
/// `φ_j = Δk d0 j`. Agrees with [`exact_couplings`] whenever the undressed
/// sum is real.
pub fn phase_dressed_mode_sum(modes: &ModeData, cfg: &ChainConfig) -> Result<DMatrix<f64>> {
    check_frequencies(modes)?;
    let n = modes.n_sites();
    let m = &modes.wavefunctions;
    let g2 = cfg.g * cfg.g;
    let phase: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(1.0, -cfg.dk_d0 * j as f64))
        .collect();
    let mut out = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for l in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &w) in modes.frequencies.iter().enumerate() {
                acc += (m[(j, k)] * phase[j]) * (m[(l, k)] * phase[l]).conj() / w;
            }
            // a real quadratic form only sees the Hermitian part
            out[(j, l)] = -g2 * acc.re;
        }
    }
    Ok(out)
}

/// Long-chain exponential-plus-dipolar estimate, dressed and with zero diagonal.
///
/// The closed form is derived for the ring; open chains are accepted and
/// flagged through [`CouplingMatrix::model_mismatch`].
pub fn analytic_couplings(cfg: &ChainConfig) -> Result<CouplingMatrix> {
    cfg.validate()?;
    let t_eff = 2.0 * cfg.bond.factor() * cfg.t_c;
    let consts = AnalyticConstants::new(t_eff, cfg.delta_target, cfg.g);
    let n = cfg.n;
    let j = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            0.0
        } else {
            consts.coupling(r.abs_diff(c)) * dressing(cfg.dk_d0, r, c)
        }
    });
    Ok(CouplingMatrix {
        j,
        provenance: Provenance::Analytic,
        dk_d0: cfg.dk_d0,
        constants: Some(consts),
        model_mismatch: cfg.hopping != HoppingModel::PbcDipolar,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub separation: usize,
    pub site: usize,
    pub j_exact: f64,
    pub j_analytic: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingComparison {
    pub reference_site: usize,
    pub rows: Vec<ComparisonRow>,
    pub model_mismatch: bool,
}

/// Side-by-side couplings from site `j0` for separations `1..=N/2`.
///
/// On a ring the partner site wraps around; on an open chain the partner is
/// `j0 + d` when it exists, otherwise `j0 − d`.
pub fn compare_couplings(
    exact: &CouplingMatrix,
    analytic: &CouplingMatrix,
    j0: usize,
    ring: bool,
) -> Result<CouplingComparison> {
    let n = exact.n();
    if analytic.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: analytic.n(),
        });
    }
    if j0 >= n {
        return Err(Error::config(format!("reference site {j0} outside chain of {n}")));
    }
    let mut rows = Vec::with_capacity(n / 2);
    for d in 1..=n / 2 {
        let site = if ring {
            (j0 + d) % n
        } else if j0 + d < n {
            j0 + d
        } else if j0 >= d {
            j0 - d
        } else {
            continue;
        };
        let je = exact.j[(j0, site)];
        let ja = analytic.j[(j0, site)];
        let rel_err = if je == ja {
            0.0
        } else if je == 0.0 {
            f64::INFINITY
        } else {
            ((ja - je) / je).abs()
        };
        rows.push(ComparisonRow {
            separation: d,
            site,
            j_exact: je,
            j_analytic: ja,
            rel_err,
        });
    }
    Ok(CouplingComparison {
        reference_site: j0,
        rows,
        model_mismatch: exact.model_mismatch || analytic.model_mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::chain_modes;
    use std::f64::consts::PI;

    #[test]
    fn two_site_nn_coupling_is_antiferromagnetic_quarter() {
        let cfg = ChainConfig::new(2, 1.0, 0.0, HoppingModel::OpenNn);
        let modes = chain_modes(&cfg).unwrap();
        let c = exact_couplings(&modes, &cfg).unwrap();
        assert!((c.j[(0, 1)] - 0.25).abs() < 1e-12);
        // diagonal: −(1/2)(1/2 + 1/1)
        assert!((c.j[(0, 0)] + 0.75).abs() < 1e-12);
    }

    #[test]
    fn zero_phase_leaves_couplings_undressed() {
        let cfg = ChainConfig::new(8, 0.8, 0.0, HoppingModel::PbcDipolar);
        let modes = chain_modes(&cfg).unwrap();
        let c = exact_couplings(&modes, &cfg).unwrap();
        let bare = undressed_mode_sum(&modes, 1.0).unwrap();
        assert!((c.j.clone() - bare).norm() < 1e-15);
    }

    #[test]
    fn third_turn_phase_halves_neighbour_with_sign_flip() {
        let base = ChainConfig::new(8, 0.8, 0.0, HoppingModel::PbcDipolar);
        let dressed = base.clone().with_dk_d0(2.0 * PI / 3.0);
        let modes = chain_modes(&base).unwrap();
        let c0 = exact_couplings(&modes, &base).unwrap();
        let c1 = exact_couplings(&modes, &dressed).unwrap();
        for j in 0..7 {
            assert!((c1.j[(j, j + 1)] + 0.5 * c0.j[(j, j + 1)]).abs() < 1e-14);
        }
    }

    #[test]
    fn analytic_constants_at_unit_parameters() {
        let k = AnalyticConstants::new(1.0, 1.0, 1.0);
        assert!((k.xi - 0.588_705).abs() < 1e-6);
        assert!((k.j_exp - 0.849_322).abs() < 1e-6);
        assert!((k.j_dip - 0.051_909).abs() < 1e-6);
    }

    #[test]
    fn dipolar_denominator_identity() {
        // δ_{N/2} + 7ζ(3)t_C/4 = δ_x + ζ(3)t_C with δ_x = δ_{N/2} + (3/4)ζ(3)t_C
        for &(d, t) in &[(1.0, 1.0), (0.3, 2.5), (2.0, 0.1)] {
            let delta_x = d + 0.75 * ZETA3 * t;
            assert!((d + 1.75 * ZETA3 * t - (delta_x + ZETA3 * t)).abs() < 1e-14);
        }
    }

    #[test]
    fn short_range_limit_is_dipolar() {
        let mut prev = f64::INFINITY;
        for &t in &[0.2, 0.1, 0.02, 0.005] {
            let k = AnalyticConstants::new(t, 1.0, 1.0);
            let ratio = k.j_exp * (-1.0 / k.xi).exp() / k.j_dip;
            assert!(ratio < prev);
            prev = ratio;
        }
        assert!(prev < 1e-6);
        let k = AnalyticConstants::new(0.005, 1.0, 1.0);
        assert!((k.coupling(1) - k.j_dip).abs() / k.j_dip < 1e-6);
    }

    #[test]
    fn analytic_diagonal_is_zero_and_flags_open_chain() {
        let cfg = ChainConfig::new(6, 1.0, 0.5, HoppingModel::OpenNn);
        let c = analytic_couplings(&cfg).unwrap();
        assert!(c.model_mismatch);
        assert!(c.j.diagonal().iter().all(|&x| x == 0.0));
        assert_eq!(c.provenance, Provenance::Analytic);
    }

    #[test]
    fn self_comparison_has_zero_error() {
        let cfg = ChainConfig::new(20, 1.0, 0.0, HoppingModel::PbcDipolar);
        let a = analytic_couplings(&cfg).unwrap();
        let cmp = compare_couplings(&a, &a, 4, true).unwrap();
        assert_eq!(cmp.rows.len(), 10);
        assert!(cmp.rows.iter().all(|r| r.rel_err == 0.0));
    }
}
