use std::f64::consts::PI;

use serde_json::{json, Value};
use spinphonon::annealing::{
    adiabaticity_check, fidelity, fidelity_sweep, integrate_anneal, log_grid, AnnealOptions, AnnealSchedule,
    AnnealState, InitialOrientation,
};
use spinphonon::classical::{
    exact_ground_state, local_search_minimum, ClassifyOptions, GroundStateReport, DEFAULT_WINDOW,
};
use spinphonon::couplings::{analytic_couplings, compare_couplings, exact_couplings, CouplingMatrix};
use spinphonon::expparams::{self, PhysicalSetup, Species};
use spinphonon::lattice::{chain_modes, zigzag_overlap, BondConvention, ChainConfig, HoppingModel};
use spinphonon::quantum::{
    critical_field_estimate, crossover_location, exact_point, exact_sweep, LanczosOptions, DEFAULT_N_MAX,
};

use crate::config::Config;
use crate::output::Outputs;
use crate::{row, CliError, Figure};

pub struct Context<'a> {
    pub cfg: &'a Config,
    pub out: &'a mut Outputs,
    pub seed: u64,
}

fn hopping(cfg: &Config) -> Result<HoppingModel, CliError> {
    match cfg.str_or("chain.hopping", "pbc_dipolar")? {
        "pbc_dipolar" => Ok(HoppingModel::PbcDipolar),
        "open_dipolar" => Ok(HoppingModel::OpenDipolar),
        "open_nn" => Ok(HoppingModel::OpenNn),
        other => Err(CliError::Config(format!(
            "chain.hopping must be pbc_dipolar, open_dipolar or open_nn, got `{other}`"
        ))),
    }
}

fn bond(cfg: &Config) -> Result<BondConvention, CliError> {
    match cfg.str_or("chain.bond", "half")? {
        "half" => Ok(BondConvention::Half),
        "full" => Ok(BondConvention::Full),
        other => Err(CliError::Config(format!(
            "chain.bond must be half or full, got `{other}`"
        ))),
    }
}

pub fn chain_config(cfg: &Config) -> Result<ChainConfig, CliError> {
    let mut c = ChainConfig::new(
        cfg.usize("chain.n")?,
        cfg.f64("chain.t_c")?,
        cfg.f64_or("chain.dk_d0", 0.0)?,
        hopping(cfg)?,
    )
    .with_bond(bond(cfg)?);
    c.g = cfg.f64_or("chain.g", 1.0)?;
    c.delta_target = cfg.f64_or("chain.delta", 1.0)?;
    c.validate()?;
    Ok(c)
}

fn classify_options(cfg: &Config) -> Result<ClassifyOptions, CliError> {
    let d = ClassifyOptions::default();
    Ok(ClassifyOptions {
        window: cfg.f64_or("classical.window", DEFAULT_WINDOW)?,
        threshold_per_site: cfg.usize_or("classical.threshold_per_site", d.threshold_per_site)?,
        hopfield_overlap: cfg.f64_or("classical.hopfield_overlap", d.hopfield_overlap)?,
    })
}

fn couplings_for(chain: &ChainConfig) -> Result<CouplingMatrix, CliError> {
    let modes = chain_modes(chain)?;
    Ok(exact_couplings(&modes, chain)?)
}

pub fn modes(ctx: Context) -> Result<Value, CliError> {
    let chain = chain_config(ctx.cfg)?;
    let m = chain_modes(&chain)?;
    let n = chain.n;
    let rows: Vec<_> = (0..n)
        .map(|k| row![k, m.frequencies[k], zigzag_overlap(&m, k)])
        .collect();
    ctx.out
        .csv("modes.csv", &["mode", "frequency", "zigzag_overlap"], &rows)?;
    let mut wf = Vec::with_capacity(n * n);
    for site in 0..n {
        for k in 0..n {
            let c = m.wavefunctions[(site, k)];
            wf.push(row![site, k, c.re, c.im]);
        }
    }
    ctx.out.csv("wavefunctions.csv", &["site", "mode", "re", "im"], &wf)?;
    Ok(
        json!({ "min_frequency": m.min_frequency(), "zigzag_index": m.zigzag_index, "unitarity_defect": m.unitarity_defect() }),
    )
}

pub fn couplings(ctx: Context) -> Result<Value, CliError> {
    let chain = chain_config(ctx.cfg)?;
    let exact = couplings_for(&chain)?;
    let analytic = analytic_couplings(&chain)?;
    let chosen = match ctx.cfg.str_or("couplings.provenance", "exact")? {
        "exact" => &exact,
        "analytic" => &analytic,
        other => {
            return Err(CliError::Config(format!(
                "couplings.provenance must be exact or analytic, got `{other}`"
            )))
        }
    };
    let n = chain.n;
    let mut rows = Vec::with_capacity(n * n);
    for j in 0..n {
        for l in 0..n {
            rows.push(row![j, l, chosen.j[(j, l)]]);
        }
    }
    ctx.out.csv("couplings.csv", &["j", "l", "coupling"], &rows)?;
    let j0 = ctx.cfg.usize_or("couplings.reference_site", 0)?;
    let cmp = compare_couplings(&exact, &analytic, j0, chain.hopping == HoppingModel::PbcDipolar)?;
    let rows: Vec<_> = cmp
        .rows
        .iter()
        .map(|r| row![r.separation, r.site, r.j_exact, r.j_analytic, r.rel_err])
        .collect();
    ctx.out.csv(
        "comparison.csv",
        &["separation", "site", "j_exact", "j_analytic", "rel_err"],
        &rows,
    )?;
    Ok(json!({
        "provenance": chosen.provenance,
        "diagonal_constant": exact.diagonal_constant(),
        "analytic_constants": analytic.constants,
        "model_mismatch": cmp.model_mismatch,
    }))
}

pub fn ground_state(ctx: Context) -> Result<Value, CliError> {
    let chain = chain_config(ctx.cfg)?;
    spinphonon::classical::check_enumerable(chain.n)?;
    let j = couplings_for(&chain)?;
    let report = exact_ground_state(&j.j, chain.dk_d0, &classify_options(ctx.cfg)?)?;
    let restarts = ctx.cfg.usize_or("classical.restarts", 0)?;
    let local = if restarts > 0 {
        let (e, _) = local_search_minimum(&j.j, restarts, ctx.seed)?;
        Some(e)
    } else {
        None
    };
    let rows: Vec<_> = report.ground.s.iter().enumerate().map(|(i, &s)| row![i, s]).collect();
    ctx.out.csv("ground_state.csv", &["site", "spin"], &rows)?;
    ctx.out.json("ground_state.json", &report)?;
    Ok(json!({
        "energy": report.ground.energy,
        "pattern": report.ground.pattern_string(),
        "degeneracy_count": report.degeneracy_count,
        "phase_label": report.phase_label,
        "local_search_energy": local,
    }))
}

fn scan_row(t_c: f64, r: &GroundStateReport) -> Vec<crate::output::Cell> {
    let o = &r.ground.overlaps;
    row![
        t_c,
        r.ground.energy,
        r.degeneracy_count,
        r.phase_label.to_string(),
        o.af,
        o.f,
        o.hopf_c,
        o.hopf_s,
        r.ground.pattern_string()
    ]
}

pub fn frustration_scan(ctx: Context) -> Result<Value, CliError> {
    let mut cfg = ctx.cfg.clone();
    if !cfg.has("chain.t_c") {
        cfg.set("chain.t_c=1.0")?;
    }
    let base = chain_config(&cfg)?;
    spinphonon::classical::check_enumerable(base.n)?;
    let lo = cfg.f64_or("scan.t_c_min", 0.3)?;
    let hi = cfg.f64_or("scan.t_c_max", 0.8)?;
    let points = cfg.usize_or("scan.points", 11)?;
    if points < 1 || !(lo > 0.0 && hi >= lo) {
        return Err(CliError::Config(
            "scan needs 0 < t_c_min ≤ t_c_max and at least one point".into(),
        ));
    }
    let opts = classify_options(&cfg)?;
    let mut rows = Vec::with_capacity(points);
    let mut best = (f64::NAN, 0u64);
    for k in 0..points {
        let t_c = if points == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (points - 1) as f64
        };
        let chain = base.clone().with_t_c(t_c);
        let j = couplings_for(&chain)?;
        let r = exact_ground_state(&j.j, chain.dk_d0, &opts)?;
        if r.degeneracy_count > best.1 || best.0.is_nan() {
            best = (t_c, r.degeneracy_count);
        }
        rows.push(scan_row(t_c, &r));
    }
    ctx.out.csv(
        "frustration_scan.csv",
        &[
            "t_c",
            "energy",
            "degeneracy_count",
            "phase_label",
            "overlap_af",
            "overlap_f",
            "overlap_hopf_c",
            "overlap_hopf_s",
            "pattern",
        ],
        &rows,
    )?;
    Ok(json!({ "max_degeneracy_t_c": best.0, "max_degeneracy": best.1 }))
}

fn orientation(cfg: &Config) -> Result<InitialOrientation, CliError> {
    match cfg.str_or("anneal.orientation", "along_field")? {
        "along_field" => Ok(InitialOrientation::AlongField),
        "against_field" => Ok(InitialOrientation::AgainstField),
        other => Err(CliError::Config(format!(
            "anneal.orientation must be along_field or against_field, got `{other}`"
        ))),
    }
}

fn anneal_options(cfg: &Config) -> Result<AnnealOptions, CliError> {
    let d = AnnealOptions::default();
    Ok(AnnealOptions {
        rtol: cfg.f64_or("anneal.rtol", d.rtol)?,
        atol: cfg.f64_or("anneal.atol", d.atol)?,
        samples: cfg.usize_or("anneal.samples", d.samples)?,
        include_diagonal: cfg.bool_or("anneal.include_diagonal", d.include_diagonal)?,
    })
}

/// Schedule for a given `τ_ev`; the other times scale with it.
fn schedule_maker(cfg: &Config, g0: f64) -> Result<impl Fn(f64) -> AnnealSchedule + Sync, CliError> {
    let omega_x0 = cfg.f64_or("anneal.omega_x0", 5.0)?;
    let omega_z0 = cfg.f64_or("anneal.omega_z0", 0.1 * omega_x0)?;
    let prime = cfg.f64_or("anneal.tau_ratio", 0.1)?;
    let fin = cfg.f64_or("anneal.t_final_factor", 10.0)?;
    Ok(move |tau: f64| AnnealSchedule {
        omega_x0,
        omega_z0,
        g0,
        tau_ev: tau,
        tau_ev_prime: prime * tau,
        t_final: fin * tau,
    })
}

fn run_anneal(ctx: Context, file: &str) -> Result<Value, CliError> {
    let chain = chain_config(ctx.cfg)?;
    let j = couplings_for(&chain)?;
    let exact = exact_ground_state(&j.j, chain.dk_d0, &classify_options(ctx.cfg)?)?;
    let mut sched = schedule_maker(ctx.cfg, chain.g)?(ctx.cfg.f64("anneal.tau_ev")?);
    if ctx.cfg.has("anneal.tau_ev_prime") {
        sched.tau_ev_prime = ctx.cfg.f64("anneal.tau_ev_prime")?;
    }
    if ctx.cfg.has("anneal.t_final") {
        sched.t_final = ctx.cfg.f64("anneal.t_final")?;
    }
    sched.validate()?;
    let opts = anneal_options(ctx.cfg)?;
    let init = AnnealState::initial(chain.n, &sched, orientation(ctx.cfg)?)?;
    let traj = integrate_anneal(&sched, &j.j, &init, &opts)?;
    let mut header: Vec<String> = ["t", "omega_x", "omega_z", "g2_weight", "fidelity"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for site in 0..chain.n {
        for c in ["x", "y", "z"] {
            header.push(format!("{c}_{site}"));
        }
    }
    let mut rows = Vec::with_capacity(traj.len());
    for st in &traj {
        let mut r = row![st.t, st.omega_x, st.omega_z, st.g2_weight, fidelity(st, &exact.ground)?];
        r.extend(st.bloch.iter().flatten().map(|&v| crate::output::Cell::from(v)));
        rows.push(r);
    }
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    ctx.out.csv(file, &h, &rows)?;
    let modes = chain_modes(&chain)?;
    let adiabatic = adiabaticity_check(
        &traj,
        &sched,
        modes.min_frequency(),
        ctx.cfg.f64_or("anneal.adiabatic_threshold", 0.1)?,
    )?;
    let last = traj
        .last()
        .ok_or_else(|| CliError::Numerical("empty trajectory".into()))?;
    let max_drift = traj.iter().map(|s| s.max_norm_deviation().1).fold(0.0, f64::max);
    Ok(json!({
        "final_fidelity": fidelity(last, &exact.ground)?,
        "exact_pattern": exact.ground.pattern_string(),
        "max_norm_drift": max_drift,
        "adiabaticity": adiabatic,
    }))
}

pub fn anneal(ctx: Context) -> Result<Value, CliError> {
    run_anneal(ctx, "trajectory.csv")
}

fn run_sweep(ctx: Context, file: &str) -> Result<Value, CliError> {
    let mut cfg = ctx.cfg.clone();
    let t_cs = if cfg.has("sweep.t_c") {
        cfg.f64_list("sweep.t_c")?
    } else {
        vec![cfg.f64("chain.t_c")?]
    };
    if !cfg.has("chain.t_c") {
        cfg.set(&format!("chain.t_c={:?}", t_cs[0]))?;
    }
    let base = chain_config(&cfg)?;
    spinphonon::classical::check_enumerable(base.n)?;
    let taus = log_grid(
        cfg.f64_or("sweep.tau_min", 10.0)?,
        cfg.f64_or("sweep.tau_max", 1.0e4)?,
        cfg.usize_or("sweep.per_decade", 12)?,
    );
    let opts = AnnealOptions {
        samples: cfg.usize_or("anneal.samples", 200)?,
        ..anneal_options(&cfg)?
    };
    let orient = orientation(&cfg)?;
    let make = schedule_maker(&cfg, base.g)?;
    let classify = classify_options(&cfg)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &t_c in &t_cs {
        let chain = base.clone().with_t_c(t_c);
        let j = couplings_for(&chain)?;
        let exact = exact_ground_state(&j.j, chain.dk_d0, &classify)?;
        let sweep = fidelity_sweep(t_c, &j.j, &exact.ground.s, &taus, &make, orient, &opts)?;
        let best = sweep.iter().map(|r| r.fidelity).fold(0.0, f64::max);
        summary.push(json!({ "t_c": t_c, "max_fidelity": best, "exact_pattern": exact.ground.pattern_string() }));
        rows.extend(
            sweep
                .iter()
                .map(|r| row![r.t_c, r.tau_ev, r.fidelity, r.max_norm_drift]),
        );
    }
    ctx.out
        .csv(file, &["t_c", "tau_ev", "fidelity", "max_norm_drift"], &rows)?;
    Ok(json!({ "per_t_c": summary }))
}

pub fn anneal_sweep(ctx: Context) -> Result<Value, CliError> {
    run_sweep(ctx, "anneal_sweep.csv")
}

fn lanczos(seed: u64) -> LanczosOptions {
    LanczosOptions {
        seed,
        ..LanczosOptions::default()
    }
}

pub fn exact(ctx: Context) -> Result<Value, CliError> {
    let chain = chain_config(ctx.cfg)?;
    let n_max = ctx.cfg.usize_or("quantum.n_max", DEFAULT_N_MAX)?;
    let omegas = ctx.cfg.f64_list("quantum.omega_x")?;
    let modes = chain_modes(&chain)?;
    let points = omegas
        .iter()
        .map(|&w| exact_point(&chain, &modes, n_max, w, &lanczos(ctx.seed)))
        .collect::<Result<Vec<_>, _>>()?;
    ctx.out.json("exact.json", &points)?;
    Ok(json!({ "points": points.len(), "dimension": points.first().map(|p| p.dimension) }))
}

pub fn exact_sweep_cmd(ctx: Context) -> Result<Value, CliError> {
    let chain = chain_config(ctx.cfg)?;
    let n_max = ctx.cfg.usize_or("quantum.n_max", DEFAULT_N_MAX)?;
    let lo = ctx.cfg.f64_or("quantum.omega_min", 0.05)?;
    let hi = ctx.cfg.f64_or("quantum.omega_max", 50.0)?;
    let points = ctx.cfg.usize_or("quantum.points", 41)?;
    if points < 2 || !(lo > 0.0 && hi > lo) {
        return Err(CliError::Config(
            "exact-sweep needs 0 < omega_min < omega_max and at least two points".into(),
        ));
    }
    let omegas: Vec<f64> = (0..points)
        .map(|k| lo * (hi / lo).powf(k as f64 / (points - 1) as f64))
        .collect();
    let pts = exact_sweep(&chain, n_max, &omegas, &lanczos(ctx.seed))?;
    let rows: Vec<_> = pts
        .iter()
        .map(|p| {
            let o = &p.observables;
            let mz = o.sigma_z.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            row![
                p.omega_x,
                o.energy,
                o.oaf,
                o.mean_phonons,
                mz,
                p.parity,
                p.parity_gap,
                p.residual
            ]
        })
        .collect();
    ctx.out.csv(
        "exact_sweep.csv",
        &[
            "omega_x",
            "energy",
            "oaf",
            "mean_phonons",
            "max_abs_sigma_z",
            "parity",
            "parity_gap",
            "residual",
        ],
        &rows,
    )?;
    let oaf: Vec<f64> = pts.iter().map(|p| p.observables.oaf).collect();
    let cross = crossover_location(&omegas, &oaf)?;
    let at = omegas.iter().position(|&w| w == cross).unwrap_or(0);
    let modes = chain_modes(&chain)?;
    let estimate = critical_field_estimate(pts[at].observables.mean_phonons, chain.g, modes.min_frequency())?;
    Ok(json!({ "crossover_omega_x": cross, "critical_field_estimate": estimate }))
}

fn physical_setup(cfg: &Config) -> Result<PhysicalSetup, CliError> {
    let ion_mass = match (cfg.opt_str("setup.species")?, cfg.has("setup.ion_mass")) {
        (_, true) => cfg.f64("setup.ion_mass")?,
        (Some(s), false) => s.parse::<Species>()?.ion_mass(),
        (None, false) => {
            return Err(CliError::Config(
                "missing config key `setup.species` (or `setup.ion_mass`)".into(),
            ))
        }
    };
    let two_pi = 2.0 * PI;
    let s = PhysicalSetup {
        ion_mass,
        charge: cfg.f64_or("setup.charge", 1.0)?,
        omega_x: two_pi * cfg.f64("setup.omega_x_hz")?,
        omega_z: two_pi * cfg.f64("setup.omega_z_hz")?,
        d0: cfg.f64("setup.d0")?,
        lambda_eff: cfg.f64("setup.lambda_eff")?,
        theta: cfg.f64_or("setup.theta_deg", 0.0)?.to_radians(),
        n: cfg.usize("setup.n")?,
    };
    s.validate()?;
    Ok(s)
}

pub fn params(ctx: Context) -> Result<Value, CliError> {
    let setup = physical_setup(ctx.cfg)?;
    let two_pi = 2.0 * PI;
    let g = two_pi * ctx.cfg.f64("setup.g_hz")?;
    let delta = two_pi * ctx.cfg.f64("setup.delta_hz")?;
    let report = expparams::params_report(&setup, g, delta)?;
    let d = report.dimensionless;
    let mut chain =
        ChainConfig::new(setup.n, d.t_c, d.dk_d0.rem_euclid(2.0 * PI), hopping(ctx.cfg)?).with_bond(bond(ctx.cfg)?);
    chain.g = d.g;
    ctx.out
        .json("params.json", &json!({ "report": report, "chain": chain }))?;
    Ok(json!({
        "t_c_hz": report.coulomb_coupling.hz,
        "eta_x": report.lamb_dicke.eta_x,
        "eta_z": report.lamb_dicke.eta_z,
        "warnings": report.warnings,
    }))
}

fn preset(cfg: &Config, defaults: &str) -> Result<Config, CliError> {
    let mut c = Config::from_toml(defaults)?;
    c.overlay(cfg.clone());
    Ok(c)
}

pub const FIG1B: &str = "[chain]\nn = 20\nhopping = \"pbc_dipolar\"\ndk_d0 = 0.0\n[couplings]\nreference_site = 4\n[sweep]\nt_c = [0.1, 1.0, 5.0]\n";
pub const FIG9: &str = "[chain]\nn = 20\nhopping = \"open_nn\"\nbond = \"full\"\ndk_d0 = 2.0943951023931957\n[anneal]\nomega_x0 = 5.0\nomega_z0 = 0.5\n[sweep]\nt_c = [0.1, 0.5, 0.55, 1.0]\ntau_min = 10.0\ntau_max = 10000.0\nper_decade = 12\n";
pub const FIG10: &str = "[chain]\nn = 20\nhopping = \"open_nn\"\nbond = \"full\"\ndk_d0 = 2.0943951023931957\nt_c = 0.1\n[anneal]\nomega_x0 = 5.0\nomega_z0 = 0.5\ntau_ev = 1000.0\ntau_ev_prime = 125.0\nsamples = 2000\n";

pub fn figure(ctx: Context, which: Figure) -> Result<Value, CliError> {
    match which {
        Figure::Fig1b => {
            let cfg = preset(ctx.cfg, FIG1B)?;
            let j0 = cfg.usize("couplings.reference_site")?;
            let mut summary = Vec::new();
            for t_c in cfg.f64_list("sweep.t_c")? {
                let mut c = cfg.clone();
                c.set(&format!("chain.t_c={t_c:?}"))?;
                let chain = chain_config(&c)?;
                let exact = couplings_for(&chain)?;
                let analytic = analytic_couplings(&chain)?;
                let cmp = compare_couplings(&exact, &analytic, j0, chain.hopping == HoppingModel::PbcDipolar)?;
                let rows: Vec<_> = cmp
                    .rows
                    .iter()
                    .map(|r| row![r.separation, r.j_exact, r.j_analytic])
                    .collect();
                ctx.out.csv(
                    &format!("fig1b_tc{t_c}.csv"),
                    &["separation", "j_exact", "j_analytic"],
                    &rows,
                )?;
                let worst = cmp.rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
                summary.push(json!({ "t_c": t_c, "max_rel_err": worst }));
            }
            Ok(json!({ "curves": summary }))
        }
        Figure::Fig9 => {
            let cfg = preset(ctx.cfg, FIG9)?;
            run_sweep(
                Context {
                    cfg: &cfg,
                    out: ctx.out,
                    seed: ctx.seed,
                },
                "fig9.csv",
            )
        }
        Figure::Fig10 => {
            let cfg = preset(ctx.cfg, FIG10)?;
            run_anneal(
                Context {
                    cfg: &cfg,
                    out: ctx.out,
                    seed: ctx.seed,
                },
                "fig10.csv",
            )
        }
    }
}
