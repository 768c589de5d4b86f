//! Adaptive Dormand–Prince 5(4) integrator.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-8,
            atol: 1e-10,
            initial_step: None,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

/// Integrates `dy/dt = f(t, y)` from `t0` and records the state at each
/// time in `outputs` (ascending, all `≥ t0`). Steps are clipped so every
/// output time is hit exactly.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    outputs: &[f64],
    opts: &OdeOptions,
) -> Result<(Vec<Vec<f64>>, OdeStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if outputs.windows(2).any(|w| w[1] < w[0]) || outputs.first().is_some_and(|&t| t < t0) {
        return Err(Error::config(
            "output times must be ascending and not before the start time",
        ));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::config("ODE tolerances must be positive"));
    }
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    f(t, &y, &mut k[0]);
    stats.evaluations += 1;

    let span = outputs.last().map_or(0.0, |&e| e - t0);
    let mut h = opts.initial_step.unwrap_or((span * 1e-4).max(1e-6)).max(1e-14);
    let mut results = Vec::with_capacity(outputs.len());
    let mut out_idx = 0;
    let mut steps = 0usize;

    while out_idx < outputs.len() {
        let target = outputs[out_idx];
        if target - t <= 1e-14 * target.abs().max(1.0) {
            results.push(y.clone());
            out_idx += 1;
            continue;
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::numerical(format!("ODE step budget exhausted at t = {t}")));
        }
        let clipped = h >= target - t;
        let hs = if clipped { target - t } else { h };

        let (k0, rest) = k.split_at_mut(1);
        let (k1, rest) = rest.split_at_mut(1);
        let (k2, rest) = rest.split_at_mut(1);
        let (k3, rest) = rest.split_at_mut(1);
        let (k4, rest) = rest.split_at_mut(1);
        let (k5, k6) = rest.split_at_mut(1);
        let (k0, k1, k2, k3, k4, k5, k6) = (
            &k0[0], &mut k1[0], &mut k2[0], &mut k3[0], &mut k4[0], &mut k5[0], &mut k6[0],
        );

        axpy(&mut tmp, &y, hs, &[(A21, k0)]);
        f(t + C2 * hs, &tmp, k1);
        axpy(&mut tmp, &y, hs, &[(A31, k0), (A32, k1)]);
        f(t + C3 * hs, &tmp, k2);
        axpy(&mut tmp, &y, hs, &[(A41, k0), (A42, k1), (A43, k2)]);
        f(t + C4 * hs, &tmp, k3);
        axpy(&mut tmp, &y, hs, &[(A51, k0), (A52, k1), (A53, k2), (A54, k3)]);
        f(t + C5 * hs, &tmp, k4);
        axpy(
            &mut tmp,
            &y,
            hs,
            &[(A61, k0), (A62, k1), (A63, k2), (A64, k3), (A65, k4)],
        );
        f(t + hs, &tmp, k5);
        axpy(&mut y_new, &y, hs, &[(B1, k0), (B3, k2), (B4, k3), (B5, k4), (B6, k5)]);
        f(t + hs, &y_new, k6);
        stats.evaluations += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e = hs * (E1 * k0[i] + E3 * k2[i] + E4 * k3[i] + E5 * k4[i] + E6 * k5[i] + E7 * k6[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::numerical(format!("non-finite ODE state near t = {t}")));
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            stats.accepted += 1;
            t = if clipped { target } else { t + hs };
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            if !clipped || factor < 1.0 {
                h = hs * factor;
            }
        } else {
            stats.rejected += 1;
            h = hs * factor.min(1.0);
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::numerical(format!("ODE step size underflow at t = {t}")));
            }
        }
    }
    Ok((results, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let (ys, _) = integrate(|_, y, d| d[0] = -y[0], 0.0, &[1.0], &[1.0, 5.0], &OdeOptions::default()).unwrap();
        assert!((ys[0][0] - (-1f64).exp()).abs() < 1e-8);
        assert!((ys[1][0] - (-5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_many_periods() {
        let opts = OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            ..Default::default()
        };
        let t_end = 20.0 * std::f64::consts::PI;
        let (ys, st) = integrate(
            |_, y, d| {
                d[0] = y[1];
                d[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            &[t_end],
            &opts,
        )
        .unwrap();
        assert!((ys[0][0] - 1.0).abs() < 1e-7, "{:?} {:?}", ys, st);
        assert!(ys[0][1].abs() < 1e-7);
    }

    #[test]
    fn output_at_start_time_is_initial_state() {
        let (ys, _) = integrate(|_, _, d| d[0] = 1.0, 2.0, &[3.0], &[2.0, 4.0], &OdeOptions::default()).unwrap();
        assert_eq!(ys[0][0], 3.0);
        assert!((ys[1][0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_descending_outputs() {
        assert!(integrate(|_, _, d| d[0] = 0.0, 0.0, &[0.0], &[2.0, 1.0], &OdeOptions::default()).is_err());
    }
}
