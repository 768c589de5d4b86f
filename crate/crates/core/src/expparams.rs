//! Trap and laser parameters in SI units, and the dimensionless model inputs
//! they induce.
//!
//! Angular frequencies are in rad/s; `*_hz` fields divide by 2π.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
pub const HBAR: f64 = 1.054_571_817e-34;

/// Smallest `ω_x/ω_z` accepted without a warning.
pub const LINEAR_CHAIN_RATIO: f64 = 5.0;

/// Lamb-Dicke parameters at or above this value draw a warning.
pub const LAMB_DICKE_WARNING: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Species {
    #[serde(rename = "Be9")]
    Be9,
    #[serde(rename = "Mg25")]
    Mg25,
    #[serde(rename = "Ca40")]
    Ca40,
    #[serde(rename = "Yb171")]
    Yb171,
}

impl Species {
    pub const ALL: [Species; 4] = [Species::Be9, Species::Mg25, Species::Ca40, Species::Yb171];

    /// Neutral atomic mass in u.
    pub fn atomic_mass_u(self) -> f64 {
        match self {
            Species::Be9 => 9.012_183_1,
            Species::Mg25 => 24.985_836_98,
            Species::Ca40 => 39.962_590_86,
            Species::Yb171 => 170.936_331_5,
        }
    }

    /// Mass of the singly charged ion in kg.
    pub fn ion_mass(self) -> f64 {
        self.atomic_mass_u() * ATOMIC_MASS_UNIT - ELECTRON_MASS
    }

    pub fn label(self) -> &'static str {
        match self {
            Species::Be9 => "Be9",
            Species::Mg25 => "Mg25",
            Species::Ca40 => "Ca40",
            Species::Yb171 => "Yb171",
        }
    }
}

impl FromStr for Species {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "be9" | "9be" | "be" => Ok(Species::Be9),
            "mg25" | "25mg" | "mg" => Ok(Species::Mg25),
            "ca40" | "40ca" | "ca" => Ok(Species::Ca40),
            "yb171" | "171yb" | "yb" => Ok(Species::Yb171),
            _ => Err(Error::config(format!("unknown ion species `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSetup {
    /// kg.
    pub ion_mass: f64,
    /// In elementary charges.
    pub charge: f64,
    /// Radial trap frequency, rad/s.
    pub omega_x: f64,
    /// Axial trap frequency, rad/s.
    pub omega_z: f64,
    /// Ion spacing, m.
    pub d0: f64,
    /// Effective optical wavelength, m; `|Δk| = 2π/λ_eff`.
    pub lambda_eff: f64,
    /// Beam misalignment from the transverse direction, rad.
    pub theta: f64,
    pub n: usize,
}

impl PhysicalSetup {
    /// ⁹Be⁺ chain of 20 ions: ω_x = 2π·5 MHz, ω_z = 2π·192 kHz,
    /// d0 = 10 μm, λ_eff = 320 nm, θ = 0.6°.
    pub fn beryllium_reference() -> Self {
        PhysicalSetup {
            ion_mass: Species::Be9.ion_mass(),
            charge: 1.0,
            omega_x: 2.0 * PI * 5.0e6,
            omega_z: 2.0 * PI * 192.0e3,
            d0: 10.0e-6,
            lambda_eff: 320.0e-9,
            theta: 0.6_f64.to_radians(),
            n: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("ion_mass", self.ion_mass),
            ("charge", self.charge),
            ("omega_x", self.omega_x),
            ("omega_z", self.omega_z),
            ("d0", self.d0),
            ("lambda_eff", self.lambda_eff),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.theta.is_finite() && self.theta >= 0.0 && self.theta < 0.5 * PI) {
            return Err(Error::config(format!("theta must lie in [0, π/2), got {}", self.theta)));
        }
        if self.n == 0 {
            return Err(Error::config("at least one ion is required"));
        }
        Ok(())
    }

    /// `q²/(4πε₀)` in J·m.
    pub fn coulomb_constant(&self) -> f64 {
        let q = self.charge * ELEMENTARY_CHARGE;
        q * q / (4.0 * PI * VACUUM_PERMITTIVITY)
    }

    /// `|Δk| = 2π/λ_eff`.
    pub fn wavevector(&self) -> f64 {
        2.0 * PI / self.lambda_eff
    }

    /// Non-fatal observations: a weak radial/axial ratio or a large
    /// Lamb-Dicke parameter.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.omega_x < LINEAR_CHAIN_RATIO * self.omega_z {
            w.push(format!(
                "omega_x/omega_z = {:.3} is below {LINEAR_CHAIN_RATIO}",
                self.omega_x / self.omega_z
            ));
        }
        let ld = lamb_dicke(self);
        for (name, eta) in [("eta_x", ld.eta_x), ("eta_z", ld.eta_z)] {
            if eta >= LAMB_DICKE_WARNING {
                w.push(format!("{name} = {eta:.3} is outside the Lamb-Dicke regime"));
            }
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frequency {
    /// rad/s.
    pub angular: f64,
    /// Hz.
    pub hz: f64,
}

impl Frequency {
    pub fn from_angular(angular: f64) -> Self {
        Frequency {
            angular,
            hz: angular / (2.0 * PI),
        }
    }
}

/// `t_C = q²/(4πε₀ m ω_x d0³)`.
pub fn coulomb_coupling(setup: &PhysicalSetup) -> Frequency {
    Frequency::from_angular(setup.coulomb_constant() / (setup.ion_mass * setup.omega_x * setup.d0.powi(3)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambDicke {
    pub eta_x: f64,
    pub eta_z: f64,
}

/// `η_β = Δk_β √(ħ/(2mω_β))` with `Δk_x = cosθ|Δk|`, `Δk_z = sinθ|Δk|`.
pub fn lamb_dicke(setup: &PhysicalSetup) -> LambDicke {
    let k = setup.wavevector();
    let zpf = |w: f64| (HBAR / (2.0 * setup.ion_mass * w)).sqrt();
    LambDicke {
        eta_x: k * setup.theta.cos() * zpf(setup.omega_x),
        eta_z: k * setup.theta.sin() * zpf(setup.omega_z),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Angle {
    pub radians: f64,
    pub degrees: f64,
}

/// Misalignment whose axial projection gives a phase step `dk_d0` per site:
/// `sinθ = (dk_d0/d0)/|Δk|`.
pub fn angle_for_dk(setup: &PhysicalSetup, dk_d0: f64) -> Result<Angle> {
    if !(dk_d0.is_finite() && dk_d0 >= 0.0) {
        return Err(Error::config(format!("dk_d0 must be non-negative, got {dk_d0}")));
    }
    let s = dk_d0 / setup.d0 / setup.wavevector();
    if s > 1.0 {
        return Err(Error::config(format!(
            "dk_d0 = {dk_d0} needs an axial wavevector {:.4e} 1/m above |Δk| = {:.4e} 1/m",
            dk_d0 / setup.d0,
            setup.wavevector()
        )));
    }
    let radians = s.asin();
    Ok(Angle {
        radians,
        degrees: radians.to_degrees(),
    })
}

/// Phase step per site produced by the setup's misalignment.
pub fn dk_d0(setup: &PhysicalSetup) -> f64 {
    setup.wavevector() * setup.theta.sin() * setup.d0
}

/// Equilibrium of `N` ions in a harmonic axial well, in units of
/// `ℓ = (q²/(4πε₀ m ω_z²))^{1/3}`.
#[derive(Debug, Clone, Serialize)]
pub struct ScaledEquilibrium {
    pub positions: Vec<f64>,
    /// `max_i |∂V/∂u_i|`.
    pub force_residual: f64,
    pub iterations: usize,
}

impl ScaledEquilibrium {
    /// `(u_last − u_first)/(N − 1)`.
    pub fn mean_spacing(&self) -> f64 {
        let n = self.positions.len();
        if n < 2 {
            return 0.0;
        }
        (self.positions[n - 1] - self.positions[0]) / (n - 1) as f64
    }

    /// Gap between the two ions nearest the centre.
    pub fn central_spacing(&self) -> f64 {
        let n = self.positions.len();
        if n < 2 {
            return 0.0;
        }
        let m = n / 2;
        self.positions[m] - self.positions[m - 1]
    }

    /// Axial Hessian `A_ii = 1 + 2Σ_{k≠i}|u_i−u_k|⁻³`, `A_ij = −2|u_i−u_j|⁻³`.
    pub fn axial_hessian(&self) -> DMatrix<f64> {
        hessian(&self.positions)
    }

    /// Transverse Hessian for `ω_x/ω_z = ratio`:
    /// `B_ii = ratio² − Σ_{k≠i}|u_i−u_k|⁻³`, `B_ij = |u_i−u_j|⁻³`.
    pub fn transverse_hessian(&self, ratio: f64) -> DMatrix<f64> {
        let u = &self.positions;
        let n = u.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                ratio * ratio
                    - (0..n)
                        .filter(|&k| k != i)
                        .map(|k| (u[i] - u[k]).abs().powi(-3))
                        .sum::<f64>()
            } else {
                (u[i] - u[j]).abs().powi(-3)
            }
        })
    }
}

fn gradient(u: &[f64]) -> DVector<f64> {
    let n = u.len();
    DVector::from_fn(n, |i, _| {
        let mut g = u[i];
        for k in 0..n {
            if k != i {
                let d = u[i] - u[k];
                g -= d.signum() / (d * d);
            }
        }
        g
    })
}

fn hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 + (0..n)
                .filter(|&k| k != i)
                .map(|k| 2.0 * (u[i] - u[k]).abs().powi(-3))
                .sum::<f64>()
        } else {
            -2.0 * (u[i] - u[j]).abs().powi(-3)
        }
    })
}

fn energy(u: &[f64]) -> f64 {
    let n = u.len();
    let mut e = 0.5 * u.iter().map(|x| x * x).sum::<f64>();
    for i in 0..n {
        for k in i + 1..n {
            e += 1.0 / (u[k] - u[i]).abs();
        }
    }
    e
}

fn ordered(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[1] > w[0])
}

/// Damped Newton solve of `u_i = Σ_{k≠i} sign(u_i−u_k)/(u_i−u_k)²`.
pub fn scaled_equilibrium(n: usize) -> Result<ScaledEquilibrium> {
    if n == 0 {
        return Err(Error::config("at least one ion is required"));
    }
    // Uniform guess with the empirical span 2·1.43·N^0.44.
    let half_span = if n > 1 { 1.43 * (n as f64).powf(0.44) } else { 0.0 };
    let mut u: Vec<f64> = (0..n)
        .map(|i| {
            if n > 1 {
                -half_span + 2.0 * half_span * i as f64 / (n - 1) as f64
            } else {
                0.0
            }
        })
        .collect();
    const TOL: f64 = 1e-13;
    for it in 0..200 {
        let g = gradient(&u);
        let res = g.amax();
        if res < TOL {
            return Ok(ScaledEquilibrium {
                positions: u,
                force_residual: res,
                iterations: it,
            });
        }
        let step = hessian(&u)
            .cholesky()
            .ok_or_else(|| Error::numerical("axial Hessian is not positive definite"))?
            .solve(&g);
        let e0 = energy(&u);
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(x, s)| x - lambda * s).collect();
            if ordered(&trial) && (energy(&trial) <= e0 || gradient(&trial).amax() < res) {
                u = trial;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                return Err(Error::numerical("equilibrium line search stalled"));
            }
        }
    }
    Err(Error::numerical("equilibrium Newton iteration did not converge"))
}

/// Length unit `ℓ = (q²/(4πε₀ m ω_z²))^{1/3}` in m.
pub fn length_scale(setup: &PhysicalSetup, omega_z: f64) -> f64 {
    (setup.coulomb_constant() / (setup.ion_mass * omega_z * omega_z)).cbrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct Equilibrium {
    /// m, centred on the trap.
    pub positions: Vec<f64>,
    pub mean_spacing: f64,
    pub central_spacing: f64,
    /// Residual of the scaled force balance.
    pub force_residual: f64,
}

/// Equilibrium positions of `setup.n` ions at axial frequency `omega_z`.
pub fn equilibrium_positions(setup: &PhysicalSetup, omega_z: f64) -> Result<Equilibrium> {
    if setup.n < 2 {
        return Err(Error::config("equilibrium spacing needs at least two ions"));
    }
    let eq = scaled_equilibrium(setup.n)?;
    let l = length_scale(setup, omega_z);
    Ok(Equilibrium {
        positions: eq.positions.iter().map(|u| u * l).collect(),
        mean_spacing: eq.mean_spacing() * l,
        central_spacing: eq.central_spacing() * l,
        force_residual: eq.force_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpacingKind {
    /// `(x_last − x_first)/(N − 1)`.
    #[default]
    Mean,
    /// Gap between the two central ions.
    Central,
}

/// Axial frequency at which the chain has spacing `d0`. Positions scale as
/// `ω_z^{−2/3}`, so one scaled solve fixes the answer.
pub fn axial_frequency_for_spacing(setup: &PhysicalSetup, d0: f64, kind: SpacingKind) -> Result<Frequency> {
    if !(d0.is_finite() && d0 > 0.0) {
        return Err(Error::config(format!("d0 must be positive, got {d0}")));
    }
    if setup.n < 2 {
        return Err(Error::config("spacing needs at least two ions"));
    }
    let eq = scaled_equilibrium(setup.n)?;
    let s = match kind {
        SpacingKind::Mean => eq.mean_spacing(),
        SpacingKind::Central => eq.central_spacing(),
    };
    let l = d0 / s;
    Ok(Frequency::from_angular(
        (setup.coulomb_constant() / (setup.ion_mass * l.powi(3))).sqrt(),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeClearance {
    /// Axial normal-mode frequencies, ascending.
    pub axial: Vec<Frequency>,
    pub axial_max: Frequency,
    pub radial_min: Frequency,
    pub radial_max: Frequency,
    /// `radial_min − axial_max`.
    pub gap: Frequency,
    pub separated: bool,
}

/// Axial and radial normal-mode bands at the setup's `ω_z`, `ω_x`.
pub fn axial_mode_clearance(setup: &PhysicalSetup) -> Result<ModeClearance> {
    setup.validate()?;
    let eq = scaled_equilibrium(setup.n)?;
    let wz = setup.omega_z;
    let sorted = |m: DMatrix<f64>| {
        let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let axial_ev = sorted(eq.axial_hessian());
    let radial_ev = sorted(eq.transverse_hessian(setup.omega_x / wz));
    if radial_ev[0] <= 0.0 {
        return Err(Error::UnstableFrame {
            min_frequency: radial_ev[0],
        });
    }
    let axial: Vec<Frequency> = axial_ev
        .iter()
        .map(|l| Frequency::from_angular(wz * l.max(0.0).sqrt()))
        .collect();
    let axial_max = *axial.last().expect("n >= 1");
    let radial_min = Frequency::from_angular(wz * radial_ev[0].sqrt());
    let radial_max = Frequency::from_angular(wz * radial_ev[radial_ev.len() - 1].sqrt());
    let gap = Frequency::from_angular(radial_min.angular - axial_max.angular);
    Ok(ModeClearance {
        axial,
        axial_max,
        radial_min,
        radial_max,
        separated: gap.angular > 0.0,
        gap,
    })
}

/// Model inputs in units of the zigzag detuning `δ_{N/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dimensionless {
    pub t_c: f64,
    pub g: f64,
    pub dk_d0: f64,
}

/// `(t_C/δ, g/δ, Δk_z d0)` for spin-phonon coupling `g` and zigzag detuning
/// `delta`, both rad/s.
pub fn dimensionless(setup: &PhysicalSetup, g: f64, delta: f64) -> Result<Dimensionless> {
    setup.validate()?;
    if !(delta.is_finite() && delta > 0.0) || !(g.is_finite() && g >= 0.0) {
        return Err(Error::config("delta must be positive and g non-negative"));
    }
    Ok(Dimensionless {
        t_c: coulomb_coupling(setup).angular / delta,
        g: g / delta,
        dk_d0: dk_d0(setup),
    })
}

/// Inverse of [`dimensionless`]: takes mass, charge, `ω_x`, `ω_z`, `λ_eff` and
/// `N` from `template`, and returns the setup with matching `d0`, `θ`, plus
/// `g` in rad/s.
pub fn setup_from_dimensionless(
    template: &PhysicalSetup,
    p: &Dimensionless,
    delta: f64,
) -> Result<(PhysicalSetup, f64)> {
    if !(p.t_c > 0.0) {
        return Err(Error::config("t_c must be positive"));
    }
    let tc = p.t_c * delta;
    let mut setup = template.clone();
    setup.d0 = (setup.coulomb_constant() / (setup.ion_mass * setup.omega_x * tc)).cbrt();
    setup.theta = angle_for_dk(&setup, p.dk_d0)?.radians;
    Ok((setup, p.g * delta))
}

/// Everything derived from a setup, for reporting.
#[derive(Debug, Clone, Serialize)]
pub struct ParamsReport {
    pub setup: PhysicalSetup,
    pub coulomb_coupling: Frequency,
    pub lamb_dicke: LambDicke,
    pub dk_d0: f64,
    pub axial_frequency_for_d0: Frequency,
    pub mean_spacing_at_omega_z: f64,
    pub clearance: ModeClearance,
    pub dimensionless: Dimensionless,
    pub warnings: Vec<String>,
}

pub fn params_report(setup: &PhysicalSetup, g: f64, delta: f64) -> Result<ParamsReport> {
    setup.validate()?;
    let eq = equilibrium_positions(setup, setup.omega_z)?;
    Ok(ParamsReport {
        coulomb_coupling: coulomb_coupling(setup),
        lamb_dicke: lamb_dicke(setup),
        dk_d0: dk_d0(setup),
        axial_frequency_for_d0: axial_frequency_for_spacing(setup, setup.d0, SpacingKind::Mean)?,
        mean_spacing_at_omega_z: eq.mean_spacing,
        clearance: axial_mode_clearance(setup)?,
        dimensionless: dimensionless(setup, g, delta)?,
        warnings: setup.warnings(),
        setup: setup.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_ion_closed_form() {
        let eq = scaled_equilibrium(2).unwrap();
        // u = ±(1/4)^{1/3}
        assert_relative_eq!(eq.positions[1], 0.25_f64.cbrt(), epsilon = 1e-12);
        let mut s = PhysicalSetup::beryllium_reference();
        s.n = 2;
        s.omega_x = 50.0 * s.omega_z;
        let c = axial_mode_clearance(&s).unwrap();
        assert_relative_eq!(c.axial[0].angular, s.omega_z, max_relative = 1e-10);
        assert_relative_eq!(c.axial[1].angular, 3f64.sqrt() * s.omega_z, max_relative = 1e-10);
    }

    #[test]
    fn scaling_laws() {
        let s = PhysicalSetup::beryllium_reference();
        let t = coulomb_coupling(&s).hz;
        let mut d = s.clone();
        d.d0 *= 2.0;
        assert_relative_eq!(coulomb_coupling(&d).hz, t / 8.0, max_relative = 1e-12);
        let mut w = s.clone();
        w.omega_x *= 2.0;
        assert_relative_eq!(coulomb_coupling(&w).hz, t / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn aligned_beam_has_no_axial_component() {
        let mut s = PhysicalSetup::beryllium_reference();
        s.theta = 0.0;
        assert_eq!(lamb_dicke(&s).eta_z, 0.0);
        assert_eq!(angle_for_dk(&s, 0.0).unwrap().radians, 0.0);
        assert!(angle_for_dk(&s, 1e3).is_err());
    }

    #[test]
    fn species_parse() {
        assert_eq!("9Be+".parse::<Species>().unwrap(), Species::Be9);
        assert_eq!("Yb171".parse::<Species>().unwrap(), Species::Yb171);
        assert!("Xe".parse::<Species>().is_err());
    }
}
