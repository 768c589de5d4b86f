//! Classical (`Ω_x = 0`) ground states of the effective Ising model.
//!
//! Energies use the full double sum `E(s) = ∑_{j≠l} J_{j,l} s_j s_l`.
//! Sites are indexed `j = 0…N−1`; the pattern definitions below use the same
//! origin.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest chain handled by exhaustive enumeration (2^{N−1} gauge-fixed states).
pub const MAX_ENUMERATION_SITES: usize = 24;

/// Default relative energy window for counting quasi-degenerate states.
pub const DEFAULT_WINDOW: f64 = 1e-3;

/// Pattern amplitudes below this are treated as vanishing.
const PATTERN_ZERO: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// `(−1)^j`
    Af,
    /// all up
    F,
    /// `sign((−1)^j cos(Δk d0 j))`
    HopfC,
    /// `sign((−1)^j sin(Δk d0 j))`
    HopfS,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [Pattern::Af, Pattern::F, Pattern::HopfC, Pattern::HopfS];

    /// Sign sequence of the pattern; `0` marks sites where it vanishes.
    pub fn signs(self, n: usize, dk_d0: f64) -> Vec<f64> {
        (0..n)
            .map(|j| {
                let alt = if j % 2 == 0 { 1.0 } else { -1.0 };
                let amp = match self {
                    Pattern::Af => alt,
                    Pattern::F => 1.0,
                    Pattern::HopfC => alt * (dk_d0 * j as f64).cos(),
                    Pattern::HopfS => alt * (dk_d0 * j as f64).sin(),
                };
                if amp.abs() < PATTERN_ZERO {
                    0.0
                } else {
                    amp.signum()
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Overlap {
    pub value: f64,
    /// Sites dropped because the pattern vanishes there.
    pub excluded_sites: usize,
}

/// `(1/N')|∑_j p_j s_j|` over the `N'` sites where the pattern is non-zero.
pub fn pattern_overlap(s: &[f64], pattern: Pattern, dk_d0: f64) -> Overlap {
    let p = pattern.signs(s.len(), dk_d0);
    let mut acc = 0.0;
    let mut kept = 0usize;
    for (pj, sj) in p.iter().zip(s) {
        if *pj != 0.0 {
            acc += pj * sj;
            kept += 1;
        }
    }
    let value = if kept == 0 { 0.0 } else { acc.abs() / kept as f64 };
    Overlap {
        value,
        excluded_sites: s.len() - kept,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternOverlaps {
    pub af: f64,
    pub f: f64,
    pub hopf_c: f64,
    pub hopf_s: f64,
}

impl PatternOverlaps {
    pub fn of(s: &[f64], dk_d0: f64) -> Self {
        PatternOverlaps {
            af: pattern_overlap(s, Pattern::Af, dk_d0).value,
            f: pattern_overlap(s, Pattern::F, dk_d0).value,
            hopf_c: pattern_overlap(s, Pattern::HopfC, dk_d0).value,
            hopf_s: pattern_overlap(s, Pattern::HopfS, dk_d0).value,
        }
    }

    pub fn hopfield(&self) -> f64 {
        self.hopf_c.max(self.hopf_s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpinConfiguration {
    pub s: Vec<f64>,
    pub energy: f64,
    pub overlaps: PatternOverlaps,
}

impl SpinConfiguration {
    pub fn new(s: Vec<f64>, j: &DMatrix<f64>, dk_d0: f64) -> Result<Self> {
        let energy = ising_energy(&s, j)?;
        let overlaps = PatternOverlaps::of(&s, dk_d0);
        Ok(SpinConfiguration { s, energy, overlaps })
    }

    /// `+`/`-` string, one character per site.
    pub fn pattern_string(&self) -> String {
        self.s.iter().map(|&x| if x > 0.0 { '+' } else { '-' }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PhaseLabel {
    Af,
    F,
    Hopfield,
    Frustrated,
    Other,
}

impl std::fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PhaseLabel::Af => "AF",
            PhaseLabel::F => "F",
            PhaseLabel::Hopfield => "HOPFIELD",
            PhaseLabel::Frustrated => "FRUSTRATED",
            PhaseLabel::Other => "OTHER",
        };
        f.write_str(s)
    }
}

/// Knobs for labelling a ground state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Relative window `ε`: states with `E ≤ E₀ + ε|E₀|` count as degenerate.
    pub window: f64,
    /// Degeneracy above `threshold_per_site · N` marks frustration.
    pub threshold_per_site: usize,
    /// Minimum overlap for the Hopfield label.
    pub hopfield_overlap: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            window: DEFAULT_WINDOW,
            threshold_per_site: 2,
            hopfield_overlap: 0.9,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundStateReport {
    pub ground: SpinConfiguration,
    /// States (both Z2 partners counted) within the window of `E₀`.
    pub degeneracy_count: u64,
    pub window: f64,
    pub phase_label: PhaseLabel,
}

pub fn classify(overlaps: &PatternOverlaps, degeneracy: u64, n: usize, opts: &ClassifyOptions) -> PhaseLabel {
    let exact = 1.0 - 1e-12;
    let any_pattern = overlaps.f >= opts.hopfield_overlap
        || overlaps.af >= opts.hopfield_overlap
        || overlaps.hopfield() >= opts.hopfield_overlap;
    if degeneracy > (opts.threshold_per_site * n) as u64 && !any_pattern {
        PhaseLabel::Frustrated
    } else if overlaps.f >= exact {
        PhaseLabel::F
    } else if overlaps.af >= exact {
        PhaseLabel::Af
    } else if overlaps.hopfield() >= opts.hopfield_overlap {
        PhaseLabel::Hopfield
    } else {
        PhaseLabel::Other
    }
}

/// `∑_{j≠l} J_{j,l} s_j s_l`.
pub fn ising_energy(s: &[f64], j: &DMatrix<f64>) -> Result<f64> {
    let n = s.len();
    if j.nrows() != n || j.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: j.nrows(),
        });
    }
    let mut e = 0.0;
    for a in 0..n {
        let mut row = 0.0;
        for b in 0..n {
            if a != b {
                row += j[(a, b)] * s[b];
            }
        }
        e += s[a] * row;
    }
    Ok(e)
}

/// Spin vector for gauge-fixed state `code`: site 0 is `+1`, bit `k` of
/// `code` flips site `k + 1` down.
fn spins_from_code(code: u64, n: usize) -> Vec<f64> {
    let mut s = vec![1.0; n];
    for (k, sk) in s.iter_mut().enumerate().skip(1) {
        if (code >> (k - 1)) & 1 == 1 {
            *sk = -1.0;
        }
    }
    s
}

fn gray(i: u64) -> u64 {
    i ^ (i >> 1)
}

/// Lexicographic order on spin strings with `−1 < +1`.
fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// Gray-code walk over gauge-fixed states `[start, end)`, calling `visit`
/// with the running energy and the current state code.
fn walk_range<F>(j: &DMatrix<f64>, start: u64, end: u64, mut visit: F)
where
    F: FnMut(f64, u64),
{
    let n = j.nrows();
    let mut code = gray(start);
    let mut s = spins_from_code(code, n);
    let mut field: Vec<f64> = (0..n)
        .map(|a| (0..n).filter(|&b| b != a).map(|b| j[(a, b)] * s[b]).sum())
        .collect();
    let mut energy: f64 = s.iter().zip(&field).map(|(x, h)| x * h).sum();
    visit(energy, code);
    for i in start + 1..end {
        let bit = i.trailing_zeros() as usize;
        let site = bit + 1;
        // flipping s_k changes E by −4 s_k h_k
        energy -= 4.0 * s[site] * field[site];
        s[site] = -s[site];
        let delta = 2.0 * s[site];
        for a in 0..n {
            if a != site {
                field[a] += j[(a, site)] * delta;
            }
        }
        code ^= 1 << bit;
        visit(energy, code);
    }
}

fn chunks(total: u64) -> Vec<(u64, u64)> {
    let pieces = (rayon::current_num_threads() as u64 * 4).clamp(1, 256).min(total);
    let step = total.div_ceil(pieces);
    (0..pieces)
        .map(|p| (p * step, ((p + 1) * step).min(total)))
        .filter(|(a, b)| a < b)
        .collect()
}

/// Fails with [`Error::Capacity`] when `n` sites are too many to enumerate.
pub fn check_enumerable(n: usize) -> Result<()> {
    if n > MAX_ENUMERATION_SITES {
        return Err(Error::Capacity {
            what: "exhaustive ground-state search",
            requested: n,
            limit: MAX_ENUMERATION_SITES,
        });
    }
    Ok(())
}

fn check_couplings(j: &DMatrix<f64>) -> Result<usize> {
    let n = j.nrows();
    if j.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: j.ncols(),
        });
    }
    if n == 0 {
        return Err(Error::config("empty coupling matrix"));
    }
    check_enumerable(n)?;
    Ok(n)
}

/// Exhaustive minimum of the Ising energy (diagonal of `j` ignored).
///
/// States are visited in Gray-code order with `O(N)` incremental updates,
/// split into contiguous ranges that run in parallel. The reported minimizer
/// has `s_0 = +1`; among exact ties the lexicographically smallest string
/// (with `−1 < +1`) wins.
pub fn exact_ground_state(j: &DMatrix<f64>, dk_d0: f64, opts: &ClassifyOptions) -> Result<GroundStateReport> {
    let n = check_couplings(j)?;
    let mut jm = j.clone();
    jm.fill_diagonal(0.0);
    let total = 1u64 << (n - 1);
    let ranges = chunks(total);
    let scale = jm.abs().sum().max(1e-300);
    let tie = 1e-12 * scale;

    let best = ranges
        .par_iter()
        .map(|&(a, b)| {
            let mut best_e = f64::INFINITY;
            let mut best_codes: Vec<u64> = Vec::new();
            walk_range(&jm, a, b, |e, code| {
                if e < best_e - tie {
                    best_e = e;
                    best_codes.clear();
                    best_codes.push(code);
                } else if (e - best_e).abs() <= tie {
                    best_codes.push(code);
                }
            });
            (best_e, best_codes)
        })
        .reduce(
            || (f64::INFINITY, Vec::new()),
            |x, y| {
                if x.0 < y.0 - tie {
                    x
                } else if y.0 < x.0 - tie {
                    y
                } else {
                    let mut codes = x.1;
                    codes.extend(y.1);
                    (x.0.min(y.0), codes)
                }
            },
        );

    // recompute tied candidates from scratch before picking one
    let mut winner: Option<(f64, Vec<f64>)> = None;
    for code in best.1 {
        let s = spins_from_code(code, n);
        let e = ising_energy(&s, &jm)?;
        winner = match winner {
            None => Some((e, s)),
            Some((we, ws)) => {
                if e < we - tie || ((e - we).abs() <= tie && lex_less(&s, &ws)) {
                    Some((e, s))
                } else {
                    Some((we, ws))
                }
            }
        };
    }
    let (e0, s0) = winner.ok_or_else(|| Error::numerical("enumeration visited no states"))?;

    let cutoff = e0 + opts.window * e0.abs() + tie;
    let in_window: u64 = ranges
        .par_iter()
        .map(|&(a, b)| {
            let mut count = 0u64;
            walk_range(&jm, a, b, |e, _| {
                if e <= cutoff {
                    count += 1;
                }
            });
            count
        })
        .sum();
    let degeneracy_count = 2 * in_window;

    let ground = SpinConfiguration::new(s0, &jm, dk_d0)?;
    let phase_label = classify(&ground.overlaps, degeneracy_count, n, opts);
    Ok(GroundStateReport {
        ground,
        degeneracy_count,
        window: opts.window,
        phase_label,
    })
}

/// Incremental energies along the Gray-code walk, sampled every `stride`
/// states, paired with the from-scratch value.
pub fn gray_code_audit(j: &DMatrix<f64>, stride: u64) -> Result<Vec<(f64, f64)>> {
    let n = check_couplings(j)?;
    let mut jm = j.clone();
    jm.fill_diagonal(0.0);
    let mut out = Vec::new();
    let stride = stride.max(1);
    let mut idx = 0u64;
    let mut fail = None;
    walk_range(&jm, 0, 1u64 << (n - 1), |e, code| {
        if idx.is_multiple_of(stride) {
            match ising_energy(&spins_from_code(code, n), &jm) {
                Ok(exact) => out.push((e, exact)),
                Err(err) => fail = Some(err),
            }
        }
        idx += 1;
    });
    match fail {
        Some(err) => Err(err),
        None => Ok(out),
    }
}

/// Best energy from random-restart single-flip descents. Used as a
/// sanity oracle against enumeration.
pub fn local_search_minimum(j: &DMatrix<f64>, restarts: usize, seed: u64) -> Result<(f64, Vec<f64>)> {
    let n = j.nrows();
    if j.ncols() != n || n == 0 {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: j.ncols(),
        });
    }
    let mut jm = j.clone();
    jm.fill_diagonal(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (f64::INFINITY, vec![1.0; n]);
    for _ in 0..restarts.max(1) {
        let mut s: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        loop {
            let mut improved = false;
            for k in 0..n {
                let h: f64 = (0..n).map(|b| jm[(k, b)] * s[b]).sum();
                if -4.0 * s[k] * h < -1e-14 {
                    s[k] = -s[k];
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        let e = ising_energy(&s, &jm)?;
        if e < best.0 {
            best = (e, s);
        }
    }
    Ok(best)
}

/// Staggered order parameter `∑_{j≠l} (−1)^{|j−l|} C_{j,l} / (N(N−1))`
/// from a `⟨σ^z_j σ^z_l⟩` matrix.
pub fn oaf(correlations: &DMatrix<f64>) -> f64 {
    let n = correlations.nrows();
    if n < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    for j in 0..n {
        for l in 0..n {
            if j != l {
                let sign = if j.abs_diff(l) % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * correlations[(j, l)];
            }
        }
    }
    acc / (n * (n - 1)) as f64
}

/// Correlation matrix `s_j s_l` of a product state.
pub fn product_correlations(s: &[f64]) -> DMatrix<f64> {
    let n = s.len();
    DMatrix::from_fn(n, n, |a, b| s[a] * s[b])
}
