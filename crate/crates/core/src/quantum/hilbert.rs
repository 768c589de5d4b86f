//! Truncated spin ⊗ collective-phonon basis.
//!
//! Basis states are labelled `(s, p)` with flat index `s · D_ph + p`.
//! Bit `j` of the spin label `s` is set when site `j` points down
//! (`σ^z_j = −1`). The phonon label is mixed-radix with digit `n_k` up to the
//! cutoff of mode `k`, modes in the order of [`crate::lattice::ModeData`].

use crate::error::{Error, Result};

/// Largest basis (or sector) dimension that will be allocated.
pub const MAX_DIMENSION: usize = 2_000_000;

/// Largest number of sites handled by exact diagonalization.
pub const MAX_SITES: usize = 6;

/// Fock space of `n_modes` oscillators, mode `k` truncated at `cutoffs[k]`
/// quanta.
#[derive(Debug, Clone)]
pub struct PhononSpace {
    pub n_modes: usize,
    /// Largest cutoff over all modes.
    pub n_max: usize,
    pub cutoffs: Vec<usize>,
    pub dim: usize,
    strides: Vec<usize>,
    occupations: Vec<u8>,
}

impl PhononSpace {
    /// Uniform cutoff `n_max` on every mode.
    pub fn new(n_modes: usize, n_max: usize) -> Result<Self> {
        Self::with_cutoffs(vec![n_max; n_modes])
    }

    pub fn with_cutoffs(cutoffs: Vec<usize>) -> Result<Self> {
        let n_modes = cutoffs.len();
        if cutoffs.contains(&0) {
            return Err(Error::config("n_max must be at least 1"));
        }
        let n_max = cutoffs.iter().copied().max().unwrap_or(1);
        if n_max > u8::MAX as usize {
            return Err(Error::Capacity {
                what: "phonons per mode",
                requested: n_max,
                limit: u8::MAX as usize,
            });
        }
        let mut strides = Vec::with_capacity(n_modes);
        let mut dim: usize = 1;
        for &c in &cutoffs {
            strides.push(dim);
            dim = dim.saturating_mul(c + 1);
        }
        if dim > MAX_DIMENSION {
            return Err(Error::Capacity {
                what: "phonon space dimension",
                requested: dim,
                limit: MAX_DIMENSION,
            });
        }
        let mut occupations = vec![0u8; dim * n_modes];
        for p in 0..dim {
            for k in 0..n_modes {
                occupations[p * n_modes + k] = ((p / strides[k]) % (cutoffs[k] + 1)) as u8;
            }
        }
        Ok(PhononSpace {
            n_modes,
            n_max,
            cutoffs,
            dim,
            strides,
            occupations,
        })
    }

    #[inline]
    pub fn occupation(&self, p: usize, mode: usize) -> usize {
        self.occupations[p * self.n_modes + mode] as usize
    }

    #[inline]
    pub fn stride(&self, mode: usize) -> usize {
        self.strides[mode]
    }

    #[inline]
    pub fn cutoff(&self, mode: usize) -> usize {
        self.cutoffs[mode]
    }

    pub fn total_quanta(&self, p: usize) -> usize {
        (0..self.n_modes).map(|k| self.occupation(p, k)).sum()
    }

    /// Index of the state with the given occupations.
    pub fn index_of(&self, occ: &[usize]) -> Result<usize> {
        if occ.len() != self.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                got: occ.len(),
            });
        }
        if occ.iter().zip(&self.cutoffs).any(|(n, c)| n > c) {
            return Err(Error::config("occupation exceeds the mode cutoff"));
        }
        Ok(occ.iter().zip(&self.strides).map(|(n, s)| n * s).sum())
    }

    /// Copies `psi` into `target`, whose cutoffs must be at least as large.
    pub fn embed(&self, psi: &[num_complex::Complex64], target: &PhononSpace) -> Result<Vec<num_complex::Complex64>> {
        if target.n_modes != self.n_modes || target.cutoffs.iter().zip(&self.cutoffs).any(|(t, s)| t < s) {
            return Err(Error::config("target space does not contain the source space"));
        }
        let mut out = vec![num_complex::Complex64::new(0.0, 0.0); target.dim];
        for (p, amp) in psi.iter().enumerate().take(self.dim) {
            let q: usize = (0..self.n_modes)
                .map(|k| self.occupation(p, k) * target.strides[k])
                .sum();
            out[q] = *amp;
        }
        Ok(out)
    }

    /// Weight of `psi` on states where mode `k` sits at its cutoff.
    pub fn edge_weights(&self, psi: &[num_complex::Complex64]) -> Vec<f64> {
        let mut w = vec![0.0; self.n_modes];
        for (p, amp) in psi.iter().enumerate().take(self.dim) {
            let a = amp.norm_sqr();
            for (k, wk) in w.iter_mut().enumerate() {
                if self.occupation(p, k) == self.cutoffs[k] {
                    *wk += a;
                }
            }
        }
        w
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

#[derive(Debug, Clone)]
pub struct TruncatedHilbert {
    pub n_sites: usize,
    pub spin_dim: usize,
    pub phonons: PhononSpace,
    pub dim: usize,
}

impl TruncatedHilbert {
    /// `N` spins and `N` collective modes, `n_max` quanta per mode.
    pub fn new(n_sites: usize, n_max: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::config("at least one site is required"));
        }
        if n_sites > MAX_SITES {
            return Err(Error::Capacity {
                what: "exact-diagonalization sites",
                requested: n_sites,
                limit: MAX_SITES,
            });
        }
        let spin_dim = 1usize << n_sites;
        let requested = checked_pow(2 * (n_max + 1), n_sites).unwrap_or(usize::MAX);
        if requested > MAX_DIMENSION {
            return Err(Error::Capacity {
                what: "Hilbert space dimension",
                requested,
                limit: MAX_DIMENSION,
            });
        }
        let phonons = PhononSpace::new(n_sites, n_max)?;
        Ok(TruncatedHilbert {
            n_sites,
            spin_dim,
            dim: spin_dim * phonons.dim,
            phonons,
        })
    }

    pub fn n_max(&self) -> usize {
        self.phonons.n_max
    }

    #[inline]
    pub fn index(&self, spin: usize, phonon: usize) -> usize {
        spin * self.phonons.dim + phonon
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.phonons.dim, idx % self.phonons.dim)
    }

    /// Spin label with every spin reversed.
    pub fn flip_all(&self, spin: usize) -> usize {
        spin ^ (self.spin_dim - 1)
    }
}

/// `σ^z_j` eigenvalue of spin label `s`.
#[inline]
pub fn spin_z(spin: usize, site: usize) -> f64 {
    if (spin >> site) & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Spin label of a `±1` configuration.
pub fn spin_label(s: &[f64]) -> usize {
    s.iter()
        .enumerate()
        .filter(|(_, &v)| v < 0.0)
        .map(|(j, _)| 1usize << j)
        .sum()
}

/// `±1` configuration of a spin label.
pub fn spin_config(spin: usize, n_sites: usize) -> Vec<f64> {
    (0..n_sites).map(|j| spin_z(spin, j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_and_guard() {
        let h = TruncatedHilbert::new(2, 3).unwrap();
        assert_eq!(h.dim, 64);
        assert!(matches!(TruncatedHilbert::new(6, 20), Err(Error::Capacity { .. })));
        assert!(TruncatedHilbert::new(2, 0).is_err());
    }

    #[test]
    fn mixed_radix_round_trip() {
        let p = PhononSpace::new(3, 4).unwrap();
        let idx = p.index_of(&[2, 0, 3]).unwrap();
        assert_eq!(idx, 2 + 3 * 25);
        assert_eq!(
            (p.occupation(idx, 0), p.occupation(idx, 1), p.occupation(idx, 2)),
            (2, 0, 3)
        );
        assert_eq!(p.total_quanta(idx), 5);
    }

    #[test]
    fn per_mode_cutoffs() {
        let p = PhononSpace::with_cutoffs(vec![1, 3]).unwrap();
        assert_eq!(p.dim, 8);
        assert_eq!(p.n_max, 3);
        let idx = p.index_of(&[1, 2]).unwrap();
        assert_eq!((p.occupation(idx, 0), p.occupation(idx, 1)), (1, 2));
        assert!(p.index_of(&[2, 0]).is_err());
    }

    #[test]
    fn spin_labels() {
        assert_eq!(spin_label(&[1.0, -1.0, -1.0]), 0b110);
        assert_eq!(spin_config(0b110, 3), vec![1.0, -1.0, -1.0]);
        let h = TruncatedHilbert::new(3, 1).unwrap();
        assert_eq!(h.flip_all(0b110), 0b001);
    }
}
