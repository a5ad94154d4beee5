//! Command dispatch and artifact writing.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use kamforge::counterexample::{equilibrium_oscillation, log_grid, verify_a0_split, CounterexampleConfig};
use kamforge::degree::{brouwer_degree, BoxRegion, DegreeProblem, FnField};
use kamforge::engine::{run, RunOutput, RunReport, Termination};
use kamforge::homological::DiophantineParams;
use kamforge::lattice::{
    build_lattice, example_engine_config, parameter_box, random_state, run_torus_diagnostic, to_normal_coordinates,
    torus_diagnostic, LatticeConfig, TorusDiagnostic,
};
use kamforge::measure::{excluded_fraction, fractions_csv, stepwise_loss, FractionEstimate, ParameterBox, SamplingPlan, StepwiseLoss};
use kamforge::{FailureKind, KamError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::problem::ProblemFile;

/// Process exit statuses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exit {
    Ok = 0,
    Config = 1,
    Resonance = 2,
    Hypothesis = 3,
    Equilibrium = 4,
    Smallness = 5,
    Numerical = 6,
    Io = 7,
    Selftest = 8,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn from_kind(kind: FailureKind) -> Self {
        match kind {
            FailureKind::Resonance => Exit::Resonance,
            FailureKind::Hypothesis => Exit::Hypothesis,
            FailureKind::Equilibrium => Exit::Equilibrium,
            FailureKind::Smallness => Exit::Smallness,
            FailureKind::Other => Exit::Numerical,
        }
    }
}

pub struct Outcome {
    pub exit: Exit,
    pub summary: String,
}

fn fail(exit: Exit, msg: impl Into<String>) -> Outcome {
    Outcome { exit, summary: msg.into() }
}

fn numerical(e: KamError) -> Outcome {
    fail(Exit::from_kind(e.kind()), e.to_string())
}

fn write(dir: &Path, name: &str, body: &str) -> Result<(), Outcome> {
    fs::write(dir.join(name), body).map_err(|e| fail(Exit::Io, format!("{}: {e}", dir.join(name).display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), Outcome> {
    let body = serde_json::to_string_pretty(value).map_err(|e| fail(Exit::Io, e.to_string()))?;
    write(dir, name, &(body + "\n"))
}

/// Runs the configured command and writes its artifacts under `cfg.out`.
pub fn execute(cfg: &RunConfig) -> Outcome {
    if let Err(e) = fs::create_dir_all(&cfg.out) {
        return fail(Exit::Io, format!("{}: {e}", cfg.out.display()));
    }
    let result = match cfg.command {
        Command::Run => cmd_run(cfg),
        Command::Measure => cmd_measure(cfg),
        Command::Lattice => cmd_lattice(cfg),
        Command::Counterexample => cmd_counterexample(cfg),
        Command::Selftest => cmd_selftest(cfg),
    };
    let outcome = result.unwrap_or_else(|o| o);
    if outcome.exit != Exit::Io {
        let body = format!("{}\nexit status: {}\n", outcome.summary.trim_end(), outcome.exit.code());
        if let Err(o) = write(&cfg.out, "summary.txt", &body) {
            return o;
        }
    }
    outcome
}

fn lattice_of(cfg: &RunConfig) -> LatticeConfig {
    LatticeConfig {
        eps: cfg.eps,
        ..cfg.lattice.clone()
    }
}

#[derive(Serialize)]
struct RunArtifact<'a> {
    command: Command,
    config: &'a RunConfig,
    run: &'a RunReport,
    torus: Option<TorusDiagnostic>,
    exit: Exit,
}

fn frequencies_csv(r: &RunReport) -> String {
    let mut out = String::from("nu,omega_increment,zeta_increment,norm_P\n");
    for (nu, norm) in r.norm_decay.iter().enumerate() {
        let om = r.omega_increments.get(nu).map_or(String::new(), |v| format!("{v:e}"));
        let ze = r.zeta_increments.get(nu).map_or(String::new(), |v| format!("{v:e}"));
        let _ = writeln!(out, "{nu},{om},{ze},{norm:e}");
    }
    out
}

fn cmd_run(cfg: &RunConfig) -> Result<Outcome, Outcome> {
    let horizon = |omega: &[f64]| {
        let slow = omega.iter().fold(f64::INFINITY, |m, w| m.min(w.abs()));
        cfg.engine.torus_periods * std::f64::consts::TAU / slow
    };
    let (out, torus): (RunOutput, Option<TorusDiagnostic>) = match &cfg.problem_file {
        Some(path) => {
            let file = ProblemFile::load(path).map_err(|e| fail(Exit::Config, e))?;
            let mut prob = file.build().map_err(|e| fail(Exit::Config, e))?;
            prob.engine.policy = cfg.engine.policy;
            let out = run(&prob.normal, &prob.perturbation, cfg.eps, &prob.xi, cfg.nu_max, &prob.engine);
            let torus = match (&out.final_state, cfg.engine.torus) {
                (Some(st), true) if out.report.termination != Termination::Failed => {
                    let h = st.normal.to_series().add(&st.perturbation).map_err(numerical)?;
                    let scale = out.report.norm_decay.last().copied().unwrap_or(0.0);
                    let omega = &out.report.omega_star;
                    Some(torus_diagnostic(&h, omega, scale, horizon(omega), cfg.engine.torus_dt).map_err(numerical)?)
                }
                _ => None,
            };
            (out, torus)
        }
        None => {
            let lc = lattice_of(cfg);
            let lattice = build_lattice(&lc).map_err(|e| fail(Exit::Config, e.to_string()))?;
            let reduced = to_normal_coordinates(&lattice, cfg.engine.y_order).map_err(numerical)?;
            let mut engine = example_engine_config(&lc).map_err(numerical)?;
            engine.policy = cfg.engine.policy;
            let xi = lc.alpha[..lc.n1].to_vec();
            let out = run(&reduced.normal, &reduced.perturbation, cfg.eps, &xi, cfg.nu_max, &engine);
            let torus = if cfg.engine.torus && out.report.termination != Termination::Failed {
                let t_end = horizon(&out.report.omega_star);
                Some(run_torus_diagnostic(&out, &reduced, t_end, cfg.engine.torus_dt).map_err(numerical)?)
            } else {
                None
            };
            (out, torus)
        }
    };
    let r = &out.report;
    let exit = r.failure.as_ref().map_or(Exit::Ok, |f| Exit::from_kind(f.kind));
    write_json(
        &cfg.out,
        "report.json",
        &RunArtifact {
            command: Command::Run,
            config: cfg,
            run: r,
            torus: torus.clone(),
            exit,
        },
    )?;
    write(&cfg.out, "norms.csv", &r.norm_csv())?;
    write(&cfg.out, "frequencies.csv", &frequencies_csv(r))?;
    let mut s = String::new();
    let _ = writeln!(s, "kamforge run: eps = {:e}, {} step(s), termination {:?}", r.eps, r.steps.len(), r.termination);
    if let Some(f) = &r.failure {
        let _ = writeln!(s, "failure at step {}: {:?}: {}", f.nu, f.kind, f.message);
    }
    let _ = writeln!(s, "norm decay: {:?}", r.norm_decay);
    let _ = writeln!(s, "omega*: {:?}", r.omega_star);
    for st in &r.steps {
        let failed: Vec<&str> = st.hypotheses.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        let _ = writeln!(
            s,
            "step {}: K = {}, |X_P| = {:e}, bound = {:e}, failed hypotheses: {}",
            st.nu,
            st.k_trunc,
            st.norm_p,
            st.bound_p,
            if failed.is_empty() { "none".into() } else { failed.join(" ") }
        );
    }
    if let Some(t) = &torus {
        let _ = writeln!(
            s,
            "torus check over t = {}: sup|y| = {:e}, drift ok = {}, frequency rel. error = {:e}",
            t.t_end, t.sup_y, t.drift_ok, t.frequency_rel_error
        );
    }
    Ok(Outcome { exit, summary: s })
}

fn parameter_box_of(cfg: &RunConfig) -> Result<(ParameterBox, DiophantineParams), Outcome> {
    match &cfg.problem_file {
        Some(path) => {
            let file = ProblemFile::load(path).map_err(|e| fail(Exit::Config, e))?;
            let prob = file.build().map_err(|e| fail(Exit::Config, e))?;
            let h = cfg.measure.half_width;
            let normal = prob.normal.normal_freq.clone();
            let bx = ParameterBox {
                lo: prob.normal.tangent_freq.iter().map(|w| w - h).collect(),
                hi: prob.normal.tangent_freq.iter().map(|w| w + h).collect(),
                frequencies: Arc::new(move |xi: &[f64]| (xi.to_vec(), normal.clone())),
                w_sites: prob.engine.sites.w.clone(),
            };
            Ok((bx, prob.engine.dio))
        }
        None => {
            let lc = lattice_of(cfg);
            let dio = example_engine_config(&lc).map_err(numerical)?.dio;
            Ok((parameter_box(&lc, cfg.measure.half_width), dio))
        }
    }
}

#[derive(Serialize)]
struct MeasureArtifact<'a> {
    command: Command,
    config: &'a RunConfig,
    fractions: Vec<FractionEstimate>,
    monotone_in_gamma: bool,
    shells: Option<StepwiseLoss>,
}

fn shells_csv(s: &StepwiseLoss) -> String {
    let mut out = String::from("nu,gamma,K_prev,K,loss,ci_lo,ci_hi,envelope\n");
    for sh in &s.shells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            sh.nu, sh.gamma, sh.k_prev, sh.k, sh.loss, sh.ci_lo, sh.ci_hi, sh.envelope
        );
    }
    out
}

fn cmd_measure(cfg: &RunConfig) -> Result<Outcome, Outcome> {
    let m = &cfg.measure;
    let (bx, base) = parameter_box_of(cfg)?;
    let plan = SamplingPlan {
        samples: cfg.xi_samples,
        seed: cfg.seed,
        mode: m.sampling,
    };
    let mut gammas = m.gammas.clone();
    gammas.sort_by(f64::total_cmp);
    let mut fractions = Vec::with_capacity(gammas.len());
    for &gamma in &gammas {
        let dio = DiophantineParams { gamma, tau: m.tau, ..base };
        let mut est = excluded_fraction(&bx, &dio, m.k_max, &plan).map_err(numerical)?;
        est.rejections.clear();
        fractions.push(est);
    }
    let monotone_in_gamma = fractions.windows(2).all(|w| w[0].excluded <= w[1].excluded);
    let shells = if m.shells.is_empty() {
        None
    } else {
        let g0 = gammas[gammas.len() - 1];
        let schedule: Vec<(f64, u32)> = m
            .shells
            .iter()
            .enumerate()
            .map(|(nu, &k)| (g0 * (0.5 + 0.5f64.powi(nu as i32 + 1)), k))
            .collect();
        let dio = DiophantineParams { gamma: g0, tau: m.shell_tau, ..base };
        Some(stepwise_loss(&bx, &schedule, &dio, &plan, m.shell_c).map_err(numerical)?)
    };
    write(&cfg.out, "fractions.csv", &fractions_csv(&fractions))?;
    if let Some(s) = &shells {
        write(&cfg.out, "shells.csv", &shells_csv(s))?;
    }
    let mut s = format!("kamforge measure: {} samples, K = {}\n", plan.samples, m.k_max);
    for f in &fractions {
        let _ = writeln!(s, "gamma = {}: excluded {:.6} [{:.6}, {:.6}]", f.gamma, f.fraction, f.ci_lo, f.ci_hi);
    }
    let _ = writeln!(s, "monotone in gamma: {monotone_in_gamma}");
    if let Some(sh) = &shells {
        let _ = writeln!(s, "shell envelope constant {:.4}, lower bound {:.4} (admitted {}): {}", sh.fitted_c, sh.lower_c, m.shell_c, sh.envelope_holds);
    }
    write_json(
        &cfg.out,
        "report.json",
        &MeasureArtifact {
            command: Command::Measure,
            config: cfg,
            fractions,
            monotone_in_gamma,
            shells,
        },
    )?;
    Ok(Outcome { exit: Exit::Ok, summary: s })
}

#[derive(Serialize)]
struct LatticeArtifact<'a> {
    command: Command,
    config: &'a RunConfig,
    samples: usize,
    energy_drift: f64,
    /// Error of the reduced-coordinate round trip at the initial state.
    round_trip_error: f64,
}

fn cmd_lattice(cfg: &RunConfig) -> Result<Outcome, Outcome> {
    let lc = lattice_of(cfg);
    let lattice = build_lattice(&lc).map_err(|e| fail(Exit::Config, e.to_string()))?;
    let i = &cfg.integrate;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (q0, p0) = random_state(&lc, i.spread, i.amplitude, &mut rng);
    let traj = lattice.integrate(&q0, &p0, i.t_end, i.dt, i.every).map_err(numerical)?;
    let reduced = to_normal_coordinates(&lattice, cfg.engine.y_order).map_err(numerical)?;
    let (q1, p1) = reduced.to_lattice(&reduced.to_reduced(&q0, &p0));
    let round_trip_error = q0
        .iter()
        .zip(&q1)
        .chain(p0.iter().zip(&p1))
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    write(&cfg.out, "trajectory.csv", &traj.to_csv())?;
    write_json(
        &cfg.out,
        "report.json",
        &LatticeArtifact {
            command: Command::Lattice,
            config: cfg,
            samples: traj.t.len(),
            energy_drift: traj.energy_drift,
            round_trip_error,
        },
    )?;
    let summary = format!(
        "kamforge lattice: {} sites, {} samples to t = {}, relative energy drift {:e}, round trip error {:e}\n",
        lc.sites(),
        traj.t.len(),
        i.t_end,
        traj.energy_drift,
        round_trip_error
    );
    Ok(Outcome { exit: Exit::Ok, summary })
}

fn counterexample_config(cfg: &RunConfig) -> CounterexampleConfig {
    let c = &cfg.counterexample;
    CounterexampleConfig {
        sigma_exp: c.sigma_exp,
        ell_exp: c.ell_exp,
        eps_grid: log_grid(c.eps_hi, c.eps_lo, c.points),
    }
}

fn cmd_counterexample(cfg: &RunConfig) -> Result<Outcome, Outcome> {
    let cc = counterexample_config(cfg);
    let split = verify_a0_split(&cc).map_err(numerical)?;
    let osc = equilibrium_oscillation(&cc).map_err(numerical)?;
    write(&cfg.out, "oscillation.csv", &osc.to_csv())?;
    #[derive(Serialize)]
    struct Artifact<'a> {
        command: Command,
        config: &'a RunConfig,
        split: &'a kamforge::counterexample::SplitReport,
        sign_changes: usize,
        identity_error: f64,
        tail_spread: f64,
        preimages_above: usize,
        preimages_below: usize,
    }
    write_json(
        &cfg.out,
        "report.json",
        &Artifact {
            command: Command::Counterexample,
            config: cfg,
            split: &split,
            sign_changes: osc.sign_changes,
            identity_error: osc.identity_error,
            tail_spread: osc.tail_spread,
            preimages_above: osc.preimages_above,
            preimages_below: osc.preimages_below,
        },
    )?;
    let summary = format!(
        "kamforge counterexample: degree {} ({} / {}), weak convexity {}, witness gap {:e} at distance {}\n\
         equilibrium sign changes {} on {} points, identity error {:e}\n",
        split.degree,
        split.degree_coarse,
        split.degree_fine,
        if split.convexity.pass { "holds" } else { "fails" },
        split.witness.gradient_gap,
        split.witness.distance,
        osc.sign_changes,
        osc.rows.len(),
        osc.identity_error
    );
    Ok(Outcome { exit: Exit::Ok, summary })
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn cmd_selftest(cfg: &RunConfig) -> Result<Outcome, Outcome> {
    let mut checks = Vec::new();

    let identity = FnField { dim: 2, f: |z: &[f64]| z.to_vec() };
    let prob = DegreeProblem {
        map: &identity,
        region: BoxRegion::symmetric(1.0, 2),
        target: vec![0.0, 0.0],
        boundary_margin: 1e-9,
    };
    let deg = brouwer_degree(&prob, 8);
    checks.push(Check {
        name: "identity_degree",
        pass: deg == Ok(1),
        detail: format!("{deg:?}"),
    });

    let lc = LatticeConfig { eps: 0.0, ..LatticeConfig::example() };
    let trivial = build_lattice(&lc)
        .and_then(|l| to_normal_coordinates(&l, 2))
        .and_then(|red| Ok((example_engine_config(&lc)?, red)))
        .map(|(engine, red)| run(&red.normal, &red.perturbation, 0.0, &lc.alpha[..lc.n1], 3, &engine).report.termination);
    checks.push(Check {
        name: "zero_coupling_trivial",
        pass: trivial == Ok(Termination::Trivial),
        detail: format!("{trivial:?}"),
    });

    let cc = CounterexampleConfig::default();
    let osc = equilibrium_oscillation(&cc).map_err(numerical)?;
    let split = verify_a0_split(&cc).map_err(numerical)?;
    checks.push(Check {
        name: "counterexample",
        pass: osc.sign_changes >= 10 && !split.convexity.pass && split.degree != 0,
        detail: format!("sign changes {}, degree {}", osc.sign_changes, split.degree),
    });

    let bx = parameter_box(&LatticeConfig::example(), 0.05);
    let base = example_engine_config(&LatticeConfig::example()).map_err(numerical)?.dio;
    let plan = SamplingPlan {
        samples: 1000,
        seed: cfg.seed,
        mode: kamforge::measure::SamplingMode::MonteCarlo,
    };
    let zero = excluded_fraction(&bx, &DiophantineParams { gamma: 0.0, ..base }, 5, &plan).map_err(numerical)?;
    checks.push(Check {
        name: "measure_zero_gamma",
        pass: zero.excluded == 0,
        detail: format!("excluded {}", zero.excluded),
    });

    let lat = build_lattice(&LatticeConfig::example()).map_err(numerical)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (q0, p0) = random_state(&lat.config, 0.01, 0.1, &mut rng);
    let traj = lat.integrate(&q0, &p0, 10.0, 0.01, 100).map_err(numerical)?;
    checks.push(Check {
        name: "lattice_energy",
        pass: traj.energy_drift <= 1e-6,
        detail: format!("drift {:e}", traj.energy_drift),
    });

    write_json(&cfg.out, "selftest.json", &checks)?;
    let mut s = String::from("kamforge selftest\n");
    for c in &checks {
        let _ = writeln!(s, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let exit = if checks.iter().all(|c| c.pass) { Exit::Ok } else { Exit::Selftest };
    Ok(Outcome { exit, summary: s })
}
