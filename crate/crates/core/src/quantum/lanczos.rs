//! Lowest eigenpair of a Hermitian operator: restarted Lanczos and a
//! diagonally preconditioned Davidson iteration.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Krylov vectors per restart cycle (reduced automatically for large
    /// dimensions).
    pub krylov: usize,
    pub max_restarts: usize,
    /// Relative residual target `‖Hv − Ev‖ / ‖H‖`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            krylov: 40,
            max_restarts: 300,
            tol: 1e-10,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub energy: f64,
    pub vector: Vec<Complex64>,
    /// `‖Hv − Ev‖`.
    pub residual: f64,
    pub norm_bound: f64,
    pub matvecs: usize,
}

/// Krylov storage budget in complex numbers.
const STORAGE_BUDGET: usize = 24_000_000;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Deterministic random start vector.
pub fn random_vector(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect()
}

/// In-place projection onto a symmetry sector.
pub type Projector<'a> = &'a dyn Fn(&mut [Complex64]);

/// Lowest eigenpair of the operator applied by `matvec`. `project`, when
/// given, is applied to the start vector and to every Krylov vector; it must
/// commute with the operator.
pub fn lowest_eigenpair<M>(
    dim: usize,
    matvec: M,
    norm_bound: f64,
    project: Option<Projector>,
    opts: &LanczosOptions,
) -> Result<Eigenpair>
where
    M: Fn(&[Complex64], &mut [Complex64]),
{
    if dim == 0 {
        return Err(Error::config("empty operator"));
    }
    let scale = norm_bound.max(1e-300);
    let m_max = opts.krylov.min(dim).min((STORAGE_BUDGET / dim).max(4)).max(1);
    let mut start = random_vector(dim, opts.seed);
    if let Some(p) = project {
        p(&mut start);
    }
    let nrm = norm(&start);
    if nrm < 1e-300 {
        return Err(Error::numerical("start vector vanishes after projection"));
    }
    start.iter_mut().for_each(|x| *x /= nrm);

    let mut matvecs = 0usize;
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut best: Option<Eigenpair> = None;
    for _ in 0..opts.max_restarts.max(1) {
        let mut basis: Vec<Vec<Complex64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        loop {
            let k = basis.len() - 1;
            matvec(&basis[k], &mut w);
            matvecs += 1;
            if let Some(p) = project {
                p(&mut w);
            }
            let a = dot(&basis[k], &w).re;
            alpha.push(a);
            // two passes of full Gram–Schmidt
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(v, &w);
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                }
            }
            let b = norm(&w);
            if basis.len() >= m_max || b < 1e-13 * scale {
                beta.push(b);
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (imin, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .ok_or_else(|| Error::numerical("empty tridiagonal matrix"))?;
        let y = eig.eigenvectors.column(imin);
        let mut x = vec![Complex64::new(0.0, 0.0); dim];
        for (i, v) in basis.iter().enumerate() {
            let yi = y[i];
            x.iter_mut().zip(v).for_each(|(xj, vj)| *xj += vj * yi);
        }
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        matvec(&x, &mut w);
        matvecs += 1;
        let residual = w
            .iter()
            .zip(&x)
            .map(|(hx, xi)| (hx - xi * theta).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let pair = Eigenpair {
            energy: theta,
            vector: x.clone(),
            residual,
            norm_bound,
            matvecs,
        };
        let done = residual <= opts.tol * scale || m < m_max;
        best = Some(pair);
        if done {
            break;
        }
        start = x;
    }
    let pair = best.ok_or_else(|| Error::numerical("Lanczos produced no iterate"))?;
    if pair.residual > opts.tol * scale {
        return Err(Error::numerical(format!(
            "Lanczos did not converge: residual {:e} after {} products",
            pair.residual, pair.matvecs
        )));
    }
    Ok(pair)
}

/// Davidson iteration preconditioned by the operator diagonal `diag`.
/// Same contract as [`lowest_eigenpair`]; `opts.krylov` caps the search
/// subspace and `start` replaces the random start vector.
pub fn davidson_lowest<M>(
    dim: usize,
    matvec: M,
    diag: &[f64],
    norm_bound: f64,
    project: Option<Projector>,
    start: Option<Vec<Complex64>>,
    opts: &LanczosOptions,
) -> Result<Eigenpair>
where
    M: Fn(&[Complex64], &mut [Complex64]),
{
    if dim == 0 || diag.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: diag.len(),
        });
    }
    let scale = norm_bound.max(1e-300);
    let k_max = opts.krylov.min(dim).min((STORAGE_BUDGET / (2 * dim)).max(3)).max(2);
    let zero = Complex64::new(0.0, 0.0);

    let mut t = match start {
        Some(v) if v.len() == dim => v,
        Some(v) => {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            })
        }
        None => random_vector(dim, opts.seed),
    };
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut images: Vec<Vec<Complex64>> = Vec::new();
    let mut matvecs = 0usize;
    let max_iter = opts.max_restarts.max(1) * k_max;
    let mut last: Option<Eigenpair> = None;
    let mut gram: Vec<Vec<Complex64>> = Vec::new();

    for _ in 0..max_iter {
        if let Some(p) = project {
            p(&mut t);
        }
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &t);
                t.iter_mut().zip(v).for_each(|(ti, vi)| *ti -= c * vi);
            }
        }
        let nt = norm(&t);
        if nt < 1e-14 {
            if basis.is_empty() {
                return Err(Error::numerical("start vector vanishes after projection"));
            }
            break;
        }
        t.iter_mut().for_each(|x| *x /= nt);
        let mut ht = vec![zero; dim];
        matvec(&t, &mut ht);
        matvecs += 1;
        if let Some(p) = project {
            p(&mut ht);
        }
        let col: Vec<Complex64> = basis.iter().map(|v| dot(v, &ht)).collect();
        let diag_entry = dot(&t, &ht).re;
        basis.push(std::mem::take(&mut t));
        images.push(ht);
        for (row, c) in gram.iter_mut().zip(&col) {
            row.push(*c);
        }
        let mut new_row: Vec<Complex64> = col.iter().map(|c| c.conj()).collect();
        new_row.push(Complex64::new(diag_entry, 0.0));
        gram.push(new_row);

        let k = basis.len();
        let g = DMatrix::from_fn(k, k, |r, c| gram[r][c]);
        let eig = SymmetricEigen::new(g);
        let (imin, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .ok_or_else(|| Error::numerical("empty projected matrix"))?;
        let y: DVector<Complex64> = eig.eigenvectors.column(imin).into_owned();
        let mut x = vec![zero; dim];
        let mut hx = vec![zero; dim];
        for i in 0..k {
            let yi = y[i];
            x.iter_mut().zip(&basis[i]).for_each(|(a, b)| *a += b * yi);
            hx.iter_mut().zip(&images[i]).for_each(|(a, b)| *a += b * yi);
        }
        let r: Vec<Complex64> = hx.iter().zip(&x).map(|(a, b)| a - b * theta).collect();
        let rn = norm(&r);
        last = Some(Eigenpair {
            energy: theta,
            vector: x.clone(),
            residual: rn,
            norm_bound,
            matvecs,
        });
        if rn <= opts.tol * scale {
            break;
        }
        t = r
            .iter()
            .zip(diag)
            .map(|(ri, di)| {
                let d = di - theta;
                let d = if d.abs() < 1e-8 { 1e-8_f64.copysign(d) } else { d };
                -ri / d
            })
            .collect();
        if k >= k_max {
            let nx = norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            hx.iter_mut().for_each(|v| *v /= nx);
            gram = vec![vec![Complex64::new(dot(&x, &hx).re, 0.0)]];
            basis = vec![x];
            images = vec![hx];
        }
    }
    let mut pair = last.ok_or_else(|| Error::numerical("Davidson produced no iterate"))?;
    // residual from a fresh product, not the accumulated images
    let mut w = vec![zero; dim];
    matvec(&pair.vector, &mut w);
    pair.matvecs = matvecs + 1;
    let nx = norm(&pair.vector);
    pair.residual = w
        .iter()
        .zip(&pair.vector)
        .map(|(a, b)| (a - b * pair.energy).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / nx;
    if pair.residual > 10.0 * opts.tol * scale {
        return Err(Error::numerical(format!(
            "Davidson did not converge: residual {:e} after {} products",
            pair.residual, pair.matvecs
        )));
    }
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_two_by_two() {
        let d = [3.0, -1.5];
        let mv = |x: &[Complex64], y: &mut [Complex64]| {
            y[0] = x[0] * d[0];
            y[1] = x[1] * d[1];
        };
        let p = lowest_eigenpair(2, mv, 3.0, None, &LanczosOptions::default()).unwrap();
        assert!((p.energy + 1.5).abs() < 1e-12);
        assert!(p.vector[0].norm() < 1e-8);
    }

    #[test]
    fn matches_dense_solver() {
        let n = 60;
        let v = random_vector(n * n, 7);
        let mut a = DMatrix::<Complex64>::from_fn(n, n, |r, c| v[r * n + c]);
        a = &a + a.adjoint();
        let mv = |x: &[Complex64], y: &mut [Complex64]| {
            for r in 0..n {
                y[r] = (0..n).map(|c| a[(r, c)] * x[c]).sum();
            }
        };
        let bound = (0..n)
            .map(|r| (0..n).map(|c| a[(r, c)].norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let p = lowest_eigenpair(
            n,
            mv,
            bound,
            None,
            &LanczosOptions {
                krylov: 20,
                ..Default::default()
            },
        )
        .unwrap();
        let dense = a
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!((p.energy - dense).abs() < 1e-9, "{} vs {}", p.energy, dense);
    }

    #[test]
    fn davidson_agrees_with_lanczos() {
        let n = 200;
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.1).collect();
        let mv = |x: &[Complex64], y: &mut [Complex64]| {
            for r in 0..n {
                let mut acc = x[r] * diag[r];
                if r + 1 < n {
                    acc += x[r + 1] * Complex64::new(0.3, 0.1);
                }
                if r > 0 {
                    acc += x[r - 1] * Complex64::new(0.3, -0.1);
                }
                y[r] = acc;
            }
        };
        let o = LanczosOptions::default();
        let a = davidson_lowest(n, mv, &diag, 22.0, None, None, &o).unwrap();
        let b = lowest_eigenpair(n, mv, 22.0, None, &o).unwrap();
        assert!((a.energy - b.energy).abs() < 1e-10);
        assert!(a.residual < 1e-8);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        assert_eq!(random_vector(5, 3), random_vector(5, 3));
    }
}
