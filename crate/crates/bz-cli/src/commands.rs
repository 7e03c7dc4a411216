//! The five experiment drivers behind the subcommands. Each writes a
//! manifest (resolved config + version + seed) and its artifacts into the
//! run directory, and returns whether every gated check passed.

use crate::config::{Config, InitialCondition, SolverKind};
use bz_core::comparison::{self, TrapChainResult};
use bz_core::grid::{Field, GridSpec, StatePair};
use bz_core::io;
use bz_core::mild::{self, PicardConfig, SolverBounds};
use bz_core::model::{self, KineticRoots, ModelParams, SteadyStates};
use bz_core::monitor::{self, ExperimentSolver, ProbeProfile, RegionBox, Verdict};
use bz_core::semigroup::PropagatorMode;
use bz_core::stepper::{self, Scheme, StepperConfig};
use bz_core::trajectory::Trajectory;
use rand::SeedableRng;
use serde::Serialize;
use std::path::PathBuf;

pub struct RunContext {
    pub config: Config,
    pub out_dir: PathBuf,
    pub quiet: bool,
    pub command: &'static str,
}

#[derive(Debug)]
pub enum RunError {
    /// Configuration/usage problems: exit code 2.
    Usage(String),
    /// Runtime or verification failures: exit code 1.
    Failure(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Usage(m) => write!(f, "{m}"),
            RunError::Failure(m) => write!(f, "{m}"),
        }
    }
}

type RunResult = Result<bool, RunError>;

fn usage<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Usage(e.to_string())
}

fn failure<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Failure(e.to_string())
}

impl RunContext {
    fn say(&self, msg: &str) {
        if !self.quiet {
            println!("{msg}");
        }
    }

    fn params(&self) -> Result<ModelParams, RunError> {
        self.config.params.resolve().map_err(RunError::Usage)
    }

    fn grid(&self) -> Result<GridSpec, RunError> {
        self.config.grid.resolve().map_err(RunError::Usage)
    }

    fn write_manifest(&self) -> Result<(), RunError> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            tool: &'static str,
            version: &'static str,
            command: &'static str,
            seed: u64,
            config: &'a Config,
        }
        let manifest = Manifest {
            tool: "bz",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: self.config.seed,
            config: &self.config,
        };
        let text = toml::to_string_pretty(&manifest).map_err(failure)?;
        std::fs::create_dir_all(&self.out_dir).map_err(failure)?;
        std::fs::write(self.out_dir.join("manifest.toml"), text).map_err(failure)?;
        Ok(())
    }

    fn write_report<T: Serialize>(&self, name: &str, report: &T) -> Result<(), RunError> {
        let text = toml::to_string_pretty(report).map_err(failure)?;
        std::fs::write(self.out_dir.join(name), text).map_err(failure)?;
        Ok(())
    }
}

// ---------------------------------------------------------------- analyze

#[derive(Serialize)]
struct AnalyzeReport {
    params: ModelParams,
    roots: KineticRoots,
    steady_states: SteadyStates,
    solver_bounds: SolverBounds,
    invariant_square: RegionBox,
    natural_square: RegionBox,
    kappa_bar: f64,
    chain: TrapChainResult,
}

pub fn analyze(ctx: &RunContext) -> RunResult {
    let p = ctx.params()?;
    let section = &ctx.config.analyze;
    let c_star = if section.c_star > 0.0 { section.c_star } else { p.q / 2.0 };
    let margins = section.margins.resolve();

    let roots = KineticRoots::compute(&p).map_err(failure)?;
    let steady_states = SteadyStates::compute(&p).map_err(failure)?;
    let solver_bounds =
        SolverBounds::from_m(section.m, &p, ctx.config.solver.mild.quad_substeps).map_err(failure)?;
    let chain = comparison::trap_chain(c_star, section.m, &p, &margins).map_err(failure)?;
    let kappa_bar = model::kappa_bar(chain.q1, &p).map_err(failure)?;
    let natural = comparison::natural_region(
        c_star,
        section.m,
        &p,
        p.q,
        kappa_bar + 0.9 * (roots.u_bar - kappa_bar),
        &margins,
    )
    .map_err(failure)?;

    let report = AnalyzeReport {
        params: p,
        roots,
        steady_states,
        solver_bounds,
        invariant_square: RegionBox::square(p.q, roots.u_bar),
        natural_square: RegionBox::square(natural.q_nat, natural.u_nat),
        kappa_bar,
        chain,
    };
    ctx.write_manifest()?;
    ctx.write_report("report.toml", &report)?;
    ctx.say(&format!(
        "analyze: u_bar = {:.9}, u_tilde = {:.9}, q1 = {:.6e}, kappa* = {:.9}, T0 = {:.4e}",
        roots.u_bar, roots.u_tilde, chain.q1, chain.kappa_star, solver_bounds.t0
    ));
    Ok(true)
}

// --------------------------------------------------------------- simulate

fn build_initial(
    initial: &InitialCondition,
    grid: GridSpec,
    p: &ModelParams,
    seed: u64,
) -> Result<StatePair, RunError> {
    let state = match initial {
        InitialCondition::Uniform { u, v } => StatePair::new(
            Field::constant(grid, *u).map_err(usage)?,
            Field::constant(grid, *v).map_err(usage)?,
            0.0,
        ),
        InitialCondition::Trivial => StatePair::new(
            Field::constant(grid, 0.0).map_err(usage)?,
            Field::constant(grid, 0.0).map_err(usage)?,
            0.0,
        ),
        InitialCondition::Steady => {
            let ut = model::u_tilde(p).map_err(failure)?;
            StatePair::new(
                Field::constant(grid, ut).map_err(usage)?,
                Field::constant(grid, ut).map_err(usage)?,
                0.0,
            )
        }
        InitialCondition::Bump { amplitude, width, baseline_u, v } => StatePair::new(
            Field::gaussian_bump(grid, grid.extent / 2.0, *width, *amplitude, *baseline_u)
                .map_err(usage)?,
            Field::constant(grid, *v).map_err(usage)?,
            0.0,
        ),
        InitialCondition::RandomBox { lo, hi } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            StatePair::new(
                monitor::smooth_random_field(grid, *lo, *hi, 6, &mut rng).map_err(usage)?,
                monitor::smooth_random_field(grid, *lo, *hi, 6, &mut rng).map_err(usage)?,
                0.0,
            )
        }
    };
    state.map_err(usage)
}

#[derive(Serialize)]
struct SimulateReport {
    solver: SolverKind,
    t_final: f64,
    snapshots: usize,
    final_min_u: f64,
    final_max_u: f64,
    final_min_v: f64,
    final_max_v: f64,
}

pub fn simulate(ctx: &RunContext) -> RunResult {
    let p = ctx.params()?;
    let grid = ctx.grid()?;
    let section = &ctx.config.simulate;
    let s0 = build_initial(&section.initial, grid, &p, ctx.config.seed)?;
    let pc = ctx.config.propagator.resolve();

    let traj: Trajectory = match ctx.config.solver.kind {
        SolverKind::Imex => {
            let m_box = s0.u.sup_norm().max(s0.v.sup_norm()).max(1.0);
            let imex = &ctx.config.solver.imex;
            let cfg = if imex.dt > 0.0 {
                let stride = if imex.snapshot_stride > 0 {
                    imex.snapshot_stride
                } else {
                    ((section.t_final / imex.dt / 256.0).ceil() as usize).max(1)
                };
                StepperConfig::validated(imex.dt, imex.scheme, stride, pc, &p, m_box)
                    .map_err(usage)?
            } else {
                StepperConfig::auto(imex.scheme, pc, &p, m_box, section.t_final, 256)
                    .map_err(usage)?
            };
            stepper::simulate(&s0, section.t_final, &p, &cfg, &mut []).map_err(failure)?
        }
        SolverKind::Mild => {
            let mcfg = &ctx.config.solver.mild;
            let cfg = PicardConfig {
                samples: mcfg.samples,
                quad_substeps: mcfg.quad_substeps,
                tol: mcfg.tol,
                max_iter: mcfg.max_iter,
                propagator: pc,
                horizon_cap: None,
            };
            mild::extend(&s0.u, &s0.v, &p, section.t_final, &cfg, 257).map_err(failure)?
        }
    };

    ctx.write_manifest()?;
    io::write_envelope_csv(&traj, &ctx.out_dir.join("envelope.csv")).map_err(failure)?;
    if section.write_final_fields {
        io::write_field_csv(&traj.last().u, &ctx.out_dir.join("final_u.csv")).map_err(failure)?;
        io::write_field_csv(&traj.last().v, &ctx.out_dir.join("final_v.csv")).map_err(failure)?;
    }
    if section.frames > 0 && grid.dim == 2 {
        let frame_dir = ctx.out_dir.join("frames");
        std::fs::create_dir_all(&frame_dir).map_err(failure)?;
        let stride = (traj.len() / section.frames.max(1)).max(1);
        for (k, s) in traj.states().iter().step_by(stride).enumerate() {
            io::write_field_pgm(&s.u, &io::frame_path(&frame_dir, k)).map_err(failure)?;
        }
    }
    let last = traj.last();
    let report = SimulateReport {
        solver: ctx.config.solver.kind,
        t_final: traj.end_time(),
        snapshots: traj.len(),
        final_min_u: last.u.min_value(),
        final_max_u: last.u.max_value(),
        final_min_v: last.v.min_value(),
        final_max_v: last.v.max_value(),
    };
    ctx.write_report("report.toml", &report)?;
    ctx.say(&format!(
        "simulate: {} snapshots to t = {}, final u in [{:.6e}, {:.6e}]",
        report.snapshots, report.t_final, report.final_min_u, report.final_max_u
    ));
    Ok(true)
}

// ----------------------------------------------------------------- verify

#[derive(Serialize)]
struct VerifyReport {
    suite: bz_core::monitor::SuiteReport,
    invariance_square: bz_core::monitor::InvarianceReport,
    invariance_box: bz_core::monitor::InvarianceReport,
    probe: bz_core::monitor::ProbeReport,
    probe_grew_tenfold: bool,
    pass: bool,
}

pub fn verify(ctx: &RunContext) -> RunResult {
    let p = ctx.params()?;
    let section = &ctx.config.verify;
    let suite_grid = GridSpec::new_1d(ctx.config.grid.extent, section.suite_points).map_err(usage)?;
    let grid = ctx.grid()?;

    ctx.say("verify: propagator estimate suite ...");
    let suite =
        monitor::semigroup_suite(suite_grid, section.suite_trials, ctx.config.seed, &p)
            .map_err(failure)?;
    for c in &suite.checks {
        ctx.say(&format!(
            "  [{}] {} (worst {:.3e}, bound {:.3e})",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.worst,
            c.bound
        ));
    }
    ctx.say(&format!("  observed smoothing constant: {:.4}", suite.smoothing_constant));

    ctx.say("verify: invariant square experiment ...");
    let square = RegionBox::invariant_square(&p).map_err(failure)?;
    let inv_square = monitor::invariance_experiment_on(
        &p,
        &square,
        section.invariance_samples,
        section.invariance_t,
        ExperimentSolver::Imex,
        PropagatorMode::KernelConvolution,
        ctx.config.seed,
        grid,
    )
    .map_err(failure)?;
    ctx.say(&format!(
        "  [{}] {} samples in S over T = {}",
        if inv_square.verdict == Verdict::Pass { "pass" } else { "FAIL" },
        inv_square.samples.len(),
        section.invariance_t
    ));

    ctx.say("verify: bounding box experiment ...");
    let bigbox = RegionBox::square(0.0, section.box_m);
    let inv_box = monitor::invariance_experiment_on(
        &p,
        &bigbox,
        section.invariance_samples,
        section.invariance_t,
        ExperimentSolver::Imex,
        PropagatorMode::KernelConvolution,
        ctx.config.seed.wrapping_add(1),
        grid,
    )
    .map_err(failure)?;
    ctx.say(&format!(
        "  [{}] {} samples in [0, {}]^2 over T = {}",
        if inv_box.verdict == Verdict::Pass { "pass" } else { "FAIL" },
        inv_box.samples.len(),
        section.box_m,
        section.invariance_t
    ));

    ctx.say("verify: trivial-state instability probe ...");
    let probe =
        monitor::instability_probe(&p, grid, section.probe_amplitude, ProbeProfile::Uniform, section.probe_t)
            .map_err(failure)?;
    ctx.say(&format!(
        "  [{}] growth factor {:.2e} from amplitude {:.1e}",
        if probe.grew_tenfold { "pass" } else { "FAIL" },
        probe.growth_factor,
        probe.amplitude
    ));

    let pass = suite.pass
        && inv_square.verdict == Verdict::Pass
        && inv_box.verdict == Verdict::Pass
        && probe.grew_tenfold;
    let report = VerifyReport {
        suite,
        invariance_square: inv_square,
        invariance_box: inv_box,
        probe_grew_tenfold: probe.grew_tenfold,
        probe,
        pass,
    };
    ctx.write_manifest()?;
    ctx.write_report("report.toml", &report)?;
    ctx.say(if pass { "verify: PASS" } else { "verify: FAIL" });
    Ok(pass)
}

// -------------------------------------------------------------- trap-time

pub fn trap_time(ctx: &RunContext) -> RunResult {
    let p = ctx.params()?;
    let grid = ctx.grid()?;
    let section = &ctx.config.trap_time;
    let margins = section.margins.resolve();
    let mut csv = String::from(
        "c_star,m,q1,q2,q3,kappa_star,u_star,t1,t2,t3,t4,t_sharp,entry_time,entry_within_bound\r\n",
    );
    let mut all_ok = true;
    for &c_star in &section.c_star_values {
        for &m in &section.m_values {
            let chain = comparison::trap_chain(c_star, m, &p, &margins).map_err(failure)?;
            let (entry_s, ok_s) = if section.entry_check {
                let s0 = StatePair::new(
                    Field::constant(grid, c_star).map_err(usage)?,
                    Field::constant(grid, c_star).map_err(usage)?,
                    0.0,
                )
                .map_err(usage)?;
                let horizon = chain.t_sharp * 1.02 + 0.1;
                let cfg = StepperConfig::auto(
                    Scheme::ImexStrang,
                    bz_core::semigroup::PropagatorConfig::kernel(),
                    &p,
                    m,
                    horizon,
                    512,
                )
                .map_err(failure)?;
                let traj = stepper::simulate(&s0, horizon, &p, &cfg, &mut []).map_err(failure)?;
                let entry_tol = if section.entry_tol > 0.0 {
                    section.entry_tol
                } else {
                    cfg.dt * cfg.snapshot_stride as f64
                };
                let entry = monitor::entry_check(&traj, &chain, &p, entry_tol).map_err(failure)?;
                if !entry.within_bound {
                    all_ok = false;
                }
                (format!("{}", entry.entry_time), format!("{}", entry.within_bound))
            } else {
                (String::new(), String::new())
            };
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\r\n",
                c_star,
                m,
                chain.q1,
                chain.q2,
                chain.q3,
                chain.kappa_star,
                chain.u_star,
                chain.t1,
                chain.t2,
                chain.t3,
                chain.t4,
                chain.t_sharp,
                entry_s,
                ok_s
            ));
            ctx.say(&format!(
                "trap-time: c* = {c_star:.3e}, m = {m}: T# = {:.4}{}",
                chain.t_sharp,
                if section.entry_check {
                    format!(", entry at {entry_s}")
                } else {
                    String::new()
                }
            ));
        }
    }
    ctx.write_manifest()?;
    std::fs::write(ctx.out_dir.join("trap_times.csv"), csv).map_err(failure)?;
    Ok(all_ok)
}

// ------------------------------------------------------------------ sweep

pub fn sweep(ctx: &RunContext) -> RunResult {
    let grid = ctx.grid()?;
    if grid.dim != 2 {
        return Err(RunError::Usage(
            "sweep needs a 2-D grid ([grid] dim = 2)".to_string(),
        ));
    }
    let section = &ctx.config.sweep;
    if !(section.amplitude > 0.0 && section.amplitude < 1.0) {
        return Err(RunError::Usage(format!(
            "sweep.amplitude must lie in (0, 1), got {}",
            section.amplitude
        )));
    }
    let mut csv = String::from("h,t_final,nonuniformity_initial,nonuniformity_final\r\n");
    for (i, &h) in section.h_values.iter().enumerate() {
        let mut params_section = ctx.config.params.clone();
        params_section.h = h;
        let p = params_section.resolve().map_err(RunError::Usage)?;
        // Background pinned at q keeps the excitable medium strictly
        // positive, so spectral transforms cannot seed sign flips.
        let u0 = Field::gaussian_bump(
            grid,
            grid.extent / 2.0,
            section.width,
            section.amplitude,
            p.q,
        )
        .map_err(usage)?;
        let v0 = Field::constant(grid, p.q).map_err(usage)?;
        let s0 = StatePair::new(u0, v0, 0.0).map_err(usage)?;
        let m_box = (section.amplitude + p.q).max(1.0);
        let cfg = StepperConfig::auto(
            Scheme::ImexStrang,
            bz_core::semigroup::PropagatorConfig::spectral(),
            &p,
            m_box,
            section.t_final,
            64,
        )
        .map_err(failure)?;
        let traj = stepper::simulate(&s0, section.t_final, &p, &cfg, &mut []).map_err(failure)?;

        // Variance-to-mean ratio of u as the spatial-nonuniformity index.
        let index_of = |f: &Field| {
            let mean = f.mean();
            if mean.abs() < 1e-300 {
                return 0.0;
            }
            let var = f
                .values()
                .iter()
                .map(|&v| (v - mean) * (v - mean))
                .sum::<f64>()
                / f.len() as f64;
            var / mean
        };
        let idx0 = index_of(&traj.first().u);
        let idx1 = index_of(&traj.last().u);
        csv.push_str(&format!("{h},{},{idx0},{idx1}\r\n", section.t_final));
        ctx.say(&format!(
            "sweep: h = {h}: nonuniformity {idx0:.4e} -> {idx1:.4e}"
        ));
        if section.frames > 0 {
            let frame_dir = ctx.out_dir.join(format!("h_{i:02}"));
            std::fs::create_dir_all(&frame_dir).map_err(failure)?;
            let stride = (traj.len() / section.frames.max(1)).max(1);
            for (k, s) in traj.states().iter().step_by(stride).enumerate() {
                io::write_field_pgm(&s.u, &io::frame_path(&frame_dir, k)).map_err(failure)?;
            }
        }
    }
    ctx.write_manifest()?;
    std::fs::write(ctx.out_dir.join("sweep.csv"), csv).map_err(failure)?;
    Ok(true)
}

/// Shared driver so every subcommand behaves identically around manifests
/// and exit codes.
pub fn run(command: &'static str, ctx: &RunContext) -> RunResult {
    match command {
        "analyze" => analyze(ctx),
        "simulate" => simulate(ctx),
        "verify" => verify(ctx),
        "trap-time" => trap_time(ctx),
        "sweep" => sweep(ctx),
        other => Err(RunError::Usage(format!("unknown command {other}"))),
    }
}
