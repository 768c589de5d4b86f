//! Mean-field annealing of the transverse-field Ising chain.
//!
//! Each site carries a Bloch vector `(⟨σ^x⟩, ⟨σ^y⟩, ⟨σ^z⟩)` evolving as
//!
//! ```text
//! dx_j/dt = −Ω_z y_j + 2w ∑_l J_{j,l} y_j z_l
//! dy_j/dt =  Ω_z x_j − Ω_x z_j − 2w ∑_l J_{j,l} x_j z_l
//! dz_j/dt =  Ω_x y_j
//! ```
//!
//! with `Ω_x = Ω_x(0)e^{−t/τ}`, `Ω_z = Ω_z(0)e^{−t/τ'}` and
//! `w = 1 − e^{−t/τ}`. This is a precession `dσ_j/dt = B_j × σ_j` about
//! `B_j = (Ω_x, 0, Ω_z − 2w∑_l J_{j,l} z_l)`, so site norms are conserved.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::SpinConfiguration;
use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions};

/// Largest tolerated deviation of a site's Bloch norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Times the tolerances are cut tenfold after a norm-drift failure.
pub const MAX_TIGHTENINGS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub omega_x0: f64,
    pub omega_z0: f64,
    pub g0: f64,
    pub tau_ev: f64,
    pub tau_ev_prime: f64,
    pub t_final: f64,
}

impl AnnealSchedule {
    /// `Ω_z(0) = Ω_x(0)/10`, `τ' = τ/10`, `t_f = 10τ`, `g(0) = 1`.
    pub fn standard(omega_x0: f64, tau_ev: f64) -> Self {
        AnnealSchedule {
            omega_x0,
            omega_z0: 0.1 * omega_x0,
            g0: 1.0,
            tau_ev,
            tau_ev_prime: 0.1 * tau_ev,
            t_final: 10.0 * tau_ev,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.omega_x0,
            self.omega_z0,
            self.g0,
            self.tau_ev,
            self.tau_ev_prime,
            self.t_final,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("schedule values must be finite"));
        }
        if self.omega_x0 < 0.0 {
            return Err(Error::config("omega_x0 must be non-negative"));
        }
        if !(self.tau_ev > 0.0 && self.tau_ev_prime > 0.0 && self.t_final > 0.0) {
            return Err(Error::config("schedule times must be positive"));
        }
        if self.tau_ev_prime >= self.tau_ev {
            return Err(Error::config("tau_ev_prime must be smaller than tau_ev"));
        }
        Ok(())
    }

    /// `(Ω_x, Ω_z, w)` at time `t`.
    pub fn values(&self, t: f64) -> (f64, f64, f64) {
        schedule_values(t, self)
    }
}

pub fn schedule_values(t: f64, sched: &AnnealSchedule) -> (f64, f64, f64) {
    let e = (-t / sched.tau_ev).exp();
    (
        sched.omega_x0 * e,
        sched.omega_z0 * (-t / sched.tau_ev_prime).exp(),
        1.0 - e,
    )
}

/// Which eigenstate of the initial field the spins start in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialOrientation {
    /// Bloch vectors parallel to `(Ω_x(0), 0, Ω_z(0))`.
    #[default]
    AlongField,
    /// Bloch vectors anti-parallel to the field.
    AgainstField,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnealState {
    pub t: f64,
    /// `N` rows of `[x, y, z]`.
    pub bloch: Vec<[f64; 3]>,
    pub omega_x: f64,
    pub omega_z: f64,
    pub g2_weight: f64,
}

impl AnnealState {
    pub fn new(t: f64, bloch: Vec<[f64; 3]>, sched: &AnnealSchedule) -> Self {
        let (omega_x, omega_z, g2_weight) = schedule_values(t, sched);
        AnnealState {
            t,
            bloch,
            omega_x,
            omega_z,
            g2_weight,
        }
    }

    /// Uniform product state along (or against) the `t = 0` field.
    pub fn initial(n: usize, sched: &AnnealSchedule, orientation: InitialOrientation) -> Result<Self> {
        let norm = sched.omega_x0.hypot(sched.omega_z0);
        if norm == 0.0 {
            return Err(Error::config("initial field vanishes; orientation undefined"));
        }
        let sign = match orientation {
            InitialOrientation::AlongField => 1.0,
            InitialOrientation::AgainstField => -1.0,
        };
        let v = [sign * sched.omega_x0 / norm, 0.0, sign * sched.omega_z0 / norm];
        Ok(AnnealState::new(0.0, vec![v; n], sched))
    }

    pub fn n(&self) -> usize {
        self.bloch.len()
    }

    pub fn z(&self) -> Vec<f64> {
        self.bloch.iter().map(|b| b[2]).collect()
    }

    pub fn max_norm_deviation(&self) -> (usize, f64) {
        self.bloch
            .iter()
            .enumerate()
            .map(|(j, b)| (j, ((b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt() - 1.0).abs()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Number of equal intervals between recorded states.
    pub samples: usize,
    /// Keep the `l = j` term in the site sums (on by default; the sums run
    /// over every `l`).
    pub include_diagonal: bool,
}

impl Default for AnnealOptions {
    fn default() -> Self {
        AnnealOptions {
            rtol: 1e-8,
            atol: 1e-10,
            samples: 2000,
            include_diagonal: true,
        }
    }
}

/// Right-hand side for a flat `[x0, y0, z0, x1, …]` state. `j` is the
/// coupling matrix evaluated at `g = g(0)`.
pub fn bloch_rhs_flat(
    t: f64,
    y: &[f64],
    sched: &AnnealSchedule,
    j: &DMatrix<f64>,
    include_diagonal: bool,
    out: &mut [f64],
) {
    let n = j.nrows();
    let (ox, oz, w) = schedule_values(t, sched);
    for a in 0..n {
        let mut h = 0.0;
        for b in 0..n {
            if b != a || include_diagonal {
                h += j[(a, b)] * y[3 * b + 2];
            }
        }
        let coupling = 2.0 * w * h;
        let (x, yy, z) = (y[3 * a], y[3 * a + 1], y[3 * a + 2]);
        out[3 * a] = -oz * yy + coupling * yy;
        out[3 * a + 1] = oz * x - ox * z - coupling * x;
        out[3 * a + 2] = ox * yy;
    }
}

/// Derivative of every site's Bloch vector at `state.t`.
pub fn bloch_rhs(
    state: &AnnealState,
    sched: &AnnealSchedule,
    j: &DMatrix<f64>,
    include_diagonal: bool,
) -> Result<Vec<[f64; 3]>> {
    let n = state.n();
    if j.nrows() != n || j.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: j.nrows(),
        });
    }
    let flat: Vec<f64> = state.bloch.iter().flatten().copied().collect();
    let mut d = vec![0.0; 3 * n];
    bloch_rhs_flat(state.t, &flat, sched, j, include_diagonal, &mut d);
    Ok(d.chunks(3).map(|c| [c[0], c[1], c[2]]).collect())
}

/// Integrates from `initial` to `sched.t_final`, recording
/// `opts.samples + 1` equally spaced states (including both ends).
/// A run whose site norms drift past [`NORM_TOLERANCE`] is repeated with
/// tighter tolerances before reporting [`Error::NormDrift`].
pub fn integrate_anneal(
    sched: &AnnealSchedule,
    j: &DMatrix<f64>,
    initial: &AnnealState,
    opts: &AnnealOptions,
) -> Result<Vec<AnnealState>> {
    sched.validate()?;
    let n = initial.n();
    if j.nrows() != n || j.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: j.nrows(),
        });
    }
    let (site, dev) = initial.max_norm_deviation();
    if dev > NORM_TOLERANCE {
        return Err(Error::NormDrift {
            site,
            t: initial.t,
            deviation: dev,
        });
    }
    if initial.t >= sched.t_final {
        return Err(Error::config("initial time is not before t_final"));
    }
    let samples = opts.samples.max(1);
    let t0 = initial.t;
    let times: Vec<f64> = (0..=samples)
        .map(|k| {
            if k == samples {
                sched.t_final
            } else {
                t0 + (sched.t_final - t0) * k as f64 / samples as f64
            }
        })
        .collect();
    let y0: Vec<f64> = initial.bloch.iter().flatten().copied().collect();
    let include = opts.include_diagonal;
    let mut rtol = opts.rtol;
    let mut atol = opts.atol;
    let mut attempt = 0;
    loop {
        let ode = OdeOptions {
            rtol,
            atol,
            ..OdeOptions::default()
        };
        let (ys, _) = integrate(
            |t, y, d| bloch_rhs_flat(t, y, sched, j, include, d),
            t0,
            &y0,
            &times,
            &ode,
        )?;
        let mut out = Vec::with_capacity(ys.len());
        let mut drift = None;
        for (t, y) in times.iter().zip(ys) {
            let state = AnnealState::new(*t, y.chunks(3).map(|c| [c[0], c[1], c[2]]).collect(), sched);
            let (site, dev) = state.max_norm_deviation();
            if dev > NORM_TOLERANCE {
                drift = Some(Error::NormDrift {
                    site,
                    t: *t,
                    deviation: dev,
                });
                break;
            }
            out.push(state);
        }
        match drift {
            None => return Ok(out),
            Some(err) if attempt >= MAX_TIGHTENINGS => return Err(err),
            Some(_) => {
                attempt += 1;
                rtol *= 0.1;
                atol *= 0.1;
            }
        }
    }
}

/// `(1/N)|∑_j z^{ex}_j z^{QA}_j|`.
pub fn fidelity_z(z_qa: &[f64], exact: &[f64]) -> Result<f64> {
    if z_qa.len() != exact.len() || exact.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: exact.len(),
            got: z_qa.len(),
        });
    }
    let s: f64 = z_qa.iter().zip(exact).map(|(a, b)| a * b).sum();
    Ok(s.abs() / exact.len() as f64)
}

pub fn fidelity(state: &AnnealState, exact: &SpinConfiguration) -> Result<f64> {
    fidelity_z(&state.z(), &exact.s)
}

#[derive(Debug, Clone, Serialize)]
pub struct AdiabaticityReport {
    pub max_rate_x: f64,
    pub max_rate_z: f64,
    pub min_mode_frequency: f64,
    pub rate_ratio: f64,
    pub tau_ratio: f64,
    pub tau_prime_ratio: f64,
    pub threshold: f64,
    pub violated: bool,
}

/// Finite-difference precession rates compared with the slowest phonon
/// mode and the schedule rates.
pub fn adiabaticity_check(
    trajectory: &[AnnealState],
    sched: &AnnealSchedule,
    min_mode_frequency: f64,
    threshold: f64,
) -> Result<AdiabaticityReport> {
    if trajectory.len() < 2 {
        return Err(Error::config("adiabaticity check needs at least two samples"));
    }
    if min_mode_frequency <= 0.0 {
        return Err(Error::UnstableFrame {
            min_frequency: min_mode_frequency,
        });
    }
    let mut rx: f64 = 0.0;
    let mut rz: f64 = 0.0;
    for w in trajectory.windows(2) {
        let dt = w[1].t - w[0].t;
        if dt <= 0.0 {
            return Err(Error::config("trajectory times must increase"));
        }
        for (a, b) in w[0].bloch.iter().zip(&w[1].bloch) {
            rx = rx.max((b[0] - a[0]).abs() / dt);
            rz = rz.max((b[2] - a[2]).abs() / dt);
        }
    }
    let rate_ratio = rx.max(rz) / min_mode_frequency;
    let tau_ratio = 1.0 / (sched.tau_ev * min_mode_frequency);
    let tau_prime_ratio = 1.0 / (sched.tau_ev_prime * min_mode_frequency);
    let violated = rate_ratio > threshold || tau_ratio > threshold || tau_prime_ratio > threshold;
    Ok(AdiabaticityReport {
        max_rate_x: rx,
        max_rate_z: rz,
        min_mode_frequency,
        rate_ratio,
        tau_ratio,
        tau_prime_ratio,
        threshold,
        violated,
    })
}

/// Final fidelity of one anneal against `exact`, and the largest site-norm
/// deviation over the `opts.samples + 1` recorded states.
pub fn final_fidelity(
    sched: &AnnealSchedule,
    j: &DMatrix<f64>,
    exact: &[f64],
    orientation: InitialOrientation,
    opts: &AnnealOptions,
) -> Result<(f64, f64)> {
    let init = AnnealState::initial(j.nrows(), sched, orientation)?;
    let traj = integrate_anneal(sched, j, &init, opts)?;
    let last = traj.last().ok_or_else(|| Error::numerical("empty trajectory"))?;
    let drift = traj.iter().map(|s| s.max_norm_deviation().1).fold(0.0, f64::max);
    Ok((fidelity_z(&last.z(), exact)?, drift))
}

/// `per_decade` logarithmic points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64).round().max(1.0) as usize;
    (0..=steps)
        .map(|k| lo * 10f64.powf(decades * k as f64 / steps as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRow {
    pub t_c: f64,
    pub tau_ev: f64,
    pub fidelity: f64,
    pub max_norm_drift: f64,
}

/// Final fidelities for each `τ_ev`, computed in parallel. `make` builds the
/// schedule for a given `τ_ev`.
pub fn fidelity_sweep<S>(
    t_c: f64,
    j: &DMatrix<f64>,
    exact: &[f64],
    taus: &[f64],
    make: S,
    orientation: InitialOrientation,
    opts: &AnnealOptions,
) -> Result<Vec<SweepRow>>
where
    S: Fn(f64) -> AnnealSchedule + Sync,
{
    taus.par_iter()
        .map(|&tau| {
            let (fidelity, max_norm_drift) = final_fidelity(&make(tau), j, exact, orientation, opts)?;
            Ok(SweepRow {
                t_c,
                tau_ev: tau,
                fidelity,
                max_norm_drift,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched() -> AnnealSchedule {
        AnnealSchedule::standard(5.0, 10.0)
    }

    #[test]
    fn schedule_endpoints() {
        let s = sched();
        assert_eq!(schedule_values(0.0, &s), (5.0, 0.5, 0.0));
        let (ox, _, w) = schedule_values(10.0, &s);
        assert!((ox - 5.0 / std::f64::consts::E).abs() < 1e-14);
        assert!((w - (1.0 - (-1f64).exp())).abs() < 1e-14);
        let (ox, oz, w) = schedule_values(1e5, &s);
        assert_eq!((ox, oz, w), (0.0, 0.0, 1.0));
    }

    #[test]
    fn schedule_validation() {
        let mut s = sched();
        s.tau_ev_prime = s.tau_ev;
        assert!(s.validate().is_err());
        let mut s = sched();
        s.t_final = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn ising_fixed_point() {
        let mut s = sched();
        s.omega_x0 = 0.0;
        s.omega_z0 = 0.0;
        let j = DMatrix::from_element(3, 3, 0.3);
        let st = AnnealState::new(2.0, vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [0.0, 0.0, 1.0]], &s);
        for d in bloch_rhs(&st, &s, &j, false).unwrap() {
            assert_eq!(d, [0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn free_precession_about_x() {
        let s = AnnealSchedule {
            omega_x0: 2.0,
            omega_z0: 0.0,
            g0: 1.0,
            tau_ev: 1e12,
            tau_ev_prime: 1e11,
            t_final: 3.0,
        };
        let j = DMatrix::zeros(1, 1);
        let init = AnnealState::new(0.0, vec![[0.0, 0.0, 1.0]], &s);
        let traj = integrate_anneal(
            &s,
            &j,
            &init,
            &AnnealOptions {
                samples: 30,
                ..Default::default()
            },
        )
        .unwrap();
        for st in &traj {
            assert!((st.bloch[0][2] - (2.0 * st.t).cos()).abs() < 1e-7);
            assert!((st.bloch[0][1] + (2.0 * st.t).sin()).abs() < 1e-7);
        }
    }

    #[test]
    fn stationary_without_longitudinal_field() {
        let mut s = sched();
        s.omega_z0 = 0.0;
        let j = DMatrix::from_fn(4, 4, |a, b| if a == b { 0.0 } else { 0.2 / (a.abs_diff(b) as f64) });
        let init = AnnealState::new(0.0, vec![[-1.0, 0.0, 0.0]; 4], &s);
        let traj = integrate_anneal(
            &s,
            &j,
            &init,
            &AnnealOptions {
                samples: 10,
                ..Default::default()
            },
        )
        .unwrap();
        for st in &traj {
            for b in &st.bloch {
                assert_eq!(*b, [-1.0, 0.0, 0.0]);
            }
        }
    }

    #[test]
    fn fidelity_examples() {
        let ex = [1.0, -1.0, 1.0, -1.0];
        assert_eq!(fidelity_z(&ex, &ex).unwrap(), 1.0);
        assert_eq!(fidelity_z(&[0.0; 4], &ex).unwrap(), 0.0);
        assert_eq!(fidelity_z(&[1.0, -1.0, -1.0, 1.0], &ex).unwrap(), 0.0);
        assert_eq!(fidelity_z(&[-1.0, 1.0, -1.0, 1.0], &ex).unwrap(), 1.0);
        assert!(fidelity_z(&[1.0], &ex).is_err());
    }

    #[test]
    fn initial_orientation_signs() {
        let s = sched();
        let a = AnnealState::initial(2, &s, InitialOrientation::AlongField).unwrap();
        let b = AnnealState::initial(2, &s, InitialOrientation::AgainstField).unwrap();
        assert!(a.bloch[0][0] > 0.0 && a.bloch[0][2] > 0.0);
        assert_eq!(b.bloch[1][0], -a.bloch[1][0]);
        assert!(a.max_norm_deviation().1 < 1e-15);
    }

    #[test]
    fn static_trajectory_passes_adiabaticity() {
        let s = sched();
        let traj: Vec<_> = (0..5)
            .map(|k| AnnealState::new(k as f64 * 100.0, vec![[0.0, 0.0, 1.0]], &s))
            .collect();
        let s_slow = AnnealSchedule {
            tau_ev: 1e4,
            tau_ev_prime: 1e3,
            ..s
        };
        let r = adiabaticity_check(&traj, &s_slow, 1.0, 0.1).unwrap();
        assert_eq!(r.max_rate_x, 0.0);
        assert!(!r.violated);
        assert!(adiabaticity_check(&traj[..1], &s, 1.0, 0.1).is_err());
    }

    #[test]
    fn log_grid_spacing() {
        let g = log_grid(1.0, 1000.0, 12);
        assert_eq!(g.len(), 37);
        assert!((g[12] - 10.0).abs() < 1e-12);
        assert!((g[36] - 1000.0).abs() < 1e-9);
    }
}
