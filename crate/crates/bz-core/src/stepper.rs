//! Long-horizon reference solver: exact (spectral or kernel) diffusion plus
//! explicit reaction, used for global-extension experiments and as the
//! second route against the Picard scheme.
//!
//! The time step is capped by `dt <= min(eps q / (2 h m_box), eps / 4)`.
//! The first term keeps the explicit kinetics from punching through the
//! positivity floor near `u = q` where the inhibition slope is `~ h v / q`;
//! the second keeps the logistic term from overshooting `u = 1`. Both
//! constants are conservative.

use crate::error::{Error, Result};
use crate::grid::{Field, StatePair};
use crate::mild::{picard_solve, PicardConfig};
use crate::model::{ModelParams, DENOM_GUARD};
use crate::semigroup::PropagatorConfig;
use crate::spectral::HeatOperator;
use crate::trajectory::{Provenance, Trajectory};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// First order: one explicit Euler kinetics step, then diffusion.
    ImexEuler,
    /// Second order: half kinetics (midpoint rule), diffusion, half kinetics.
    ImexStrang,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Snapshots (and monitor calls) every this many steps.
    pub snapshot_stride: usize,
    pub propagator: PropagatorConfig,
}

/// Largest admissible explicit step for kinetics bounded by `m_box`.
pub fn max_stable_dt(p: &ModelParams, m_box: f64) -> f64 {
    let m = m_box.max(1.0);
    (p.epsilon * p.q / (2.0 * p.h * m)).min(p.epsilon / 4.0)
}

impl StepperConfig {
    /// Validate `dt` against the stability rule for a box bound `m_box`.
    pub fn validated(
        dt: f64,
        scheme: Scheme,
        snapshot_stride: usize,
        propagator: PropagatorConfig,
        p: &ModelParams,
        m_box: f64,
    ) -> Result<Self> {
        let cap = max_stable_dt(p, m_box);
        if !(dt > 0.0) || dt > cap {
            return Err(Error::InvalidParameter(format!(
                "dt = {dt:.3e} outside (0, {cap:.3e}] allowed for m_box = {m_box}"
            )));
        }
        if snapshot_stride == 0 {
            return Err(Error::InvalidParameter("snapshot_stride must be positive".into()));
        }
        propagator.validate()?;
        Ok(Self { dt, scheme, snapshot_stride, propagator })
    }

    /// The largest admissible step with a stride that keeps roughly
    /// `target_snapshots` states over horizon `t_final`.
    pub fn auto(
        scheme: Scheme,
        propagator: PropagatorConfig,
        p: &ModelParams,
        m_box: f64,
        t_final: f64,
        target_snapshots: usize,
    ) -> Result<Self> {
        let dt = max_stable_dt(p, m_box);
        let steps = (t_final / dt).ceil().max(1.0);
        let stride = (steps / target_snapshots.max(2) as f64).ceil().max(1.0) as usize;
        Self::validated(dt, scheme, stride, propagator, p, m_box)
    }
}

/// Per-point kinetics evaluation with the singularity guard.
fn kinetics(
    u: &[f64],
    v: &[f64],
    p: &ModelParams,
    out_u: &mut Vec<f64>,
    out_v: &mut Vec<f64>,
) -> Result<()> {
    let (h, q) = (p.h, p.q);
    let guard = -q + DENOM_GUARD;
    // Guard scan separately so the evaluation loop stays branch-free and
    // the divisions vectorize.
    if let Some(&bad) = u.iter().find(|&&uu| uu <= guard) {
        return Err(Error::Singularity {
            context: "imex kinetics",
            value: bad,
            guard: DENOM_GUARD,
            minus_q: -q,
        });
    }
    let inv_eps = 1.0 / p.epsilon;
    out_u.resize(u.len(), 0.0);
    out_v.resize(u.len(), 0.0);
    for i in 0..u.len() {
        let (uu, vv) = (u[i], v[i]);
        out_u[i] = uu * (1.0 - uu) * inv_eps - h * vv * (uu - q) / (uu + q);
        out_v[i] = -vv + uu;
    }
    Ok(())
}

struct ImexOps {
    heat_u: HeatOperator,
    heat_v: HeatOperator,
}

impl ImexOps {
    fn new(grid: crate::grid::GridSpec, dt: f64, p: &ModelParams, cfg: &StepperConfig) -> Self {
        use crate::semigroup::PropagatorMode;
        let make = |nu_t: f64| match cfg.propagator.mode {
            PropagatorMode::SpectralMultiplier => HeatOperator::spectral(grid, nu_t),
            PropagatorMode::KernelConvolution => HeatOperator::kernel(grid, nu_t),
        };
        Self { heat_u: make(dt), heat_v: make(dt * p.d) }
    }
}

/// Explicit kinetics over `dt` (Euler or midpoint), in place.
fn kinetics_step(
    u: &mut Vec<f64>,
    v: &mut Vec<f64>,
    dt: f64,
    p: &ModelParams,
    second_order: bool,
    scratch: &mut Scratch,
) -> Result<()> {
    kinetics(u, v, p, &mut scratch.fu, &mut scratch.fv)?;
    if !second_order {
        for i in 0..u.len() {
            u[i] += dt * scratch.fu[i];
            v[i] += dt * scratch.fv[i];
        }
        return Ok(());
    }
    scratch.mu.resize(u.len(), 0.0);
    scratch.mv.resize(u.len(), 0.0);
    for i in 0..u.len() {
        scratch.mu[i] = u[i] + 0.5 * dt * scratch.fu[i];
        scratch.mv[i] = v[i] + 0.5 * dt * scratch.fv[i];
    }
    let (mu, mv) = (std::mem::take(&mut scratch.mu), std::mem::take(&mut scratch.mv));
    kinetics(&mu, &mv, p, &mut scratch.fu, &mut scratch.fv)?;
    scratch.mu = mu;
    scratch.mv = mv;
    for i in 0..u.len() {
        u[i] += dt * scratch.fu[i];
        v[i] += dt * scratch.fv[i];
    }
    Ok(())
}

#[derive(Default)]
struct Scratch {
    fu: Vec<f64>,
    fv: Vec<f64>,
    mu: Vec<f64>,
    mv: Vec<f64>,
    conv: Vec<f64>,
}

/// Advance the raw buffers by one step; finiteness is checked once at the
/// end so the step can be reported with its index.
fn step_values(
    u: &mut Vec<f64>,
    v: &mut Vec<f64>,
    dt: f64,
    p: &ModelParams,
    cfg: &StepperConfig,
    ops: &ImexOps,
    scratch: &mut Scratch,
    step_index: Option<u64>,
) -> Result<()> {
    match cfg.scheme {
        Scheme::ImexEuler => {
            kinetics_step(u, v, dt, p, false, scratch)?;
            ops.heat_u.apply_values(u, &mut scratch.conv);
            ops.heat_v.apply_values(v, &mut scratch.conv);
        }
        Scheme::ImexStrang => {
            kinetics_step(u, v, dt / 2.0, p, true, scratch)?;
            ops.heat_u.apply_values(u, &mut scratch.conv);
            ops.heat_v.apply_values(v, &mut scratch.conv);
            kinetics_step(u, v, dt / 2.0, p, true, scratch)?;
        }
    }
    if u.iter().chain(v.iter()).all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { context: "imex step", step: step_index })
    }
}

/// One IMEX step.
pub fn imex_step(state: &StatePair, dt: f64, p: &ModelParams, cfg: &StepperConfig) -> Result<StatePair> {
    let ops = ImexOps::new(state.grid(), dt, p, cfg);
    let mut scratch = Scratch::default();
    let mut u = state.u.values().to_vec();
    let mut v = state.v.values().to_vec();
    step_values(&mut u, &mut v, dt, p, cfg, &ops, &mut scratch, None)?;
    StatePair::new(
        Field::from_values(state.grid(), u)?,
        Field::from_values(state.grid(), v)?,
        state.time + dt,
    )
}

/// Observers invoked at every stored snapshot; an `Err` aborts the run.
pub trait SimulationMonitor {
    fn observe(&mut self, step: u64, state: &StatePair) -> std::result::Result<(), String>;
}

impl<F> SimulationMonitor for F
where
    F: FnMut(u64, &StatePair) -> std::result::Result<(), String>,
{
    fn observe(&mut self, step: u64, state: &StatePair) -> std::result::Result<(), String> {
        self(step, state)
    }
}

/// March `s0` to `t_final`, storing snapshots every `snapshot_stride` steps
/// (always including the initial and final states).
pub fn simulate(
    s0: &StatePair,
    t_final: f64,
    p: &ModelParams,
    cfg: &StepperConfig,
    monitors: &mut [&mut dyn SimulationMonitor],
) -> Result<Trajectory> {
    if !(t_final >= 0.0) {
        return Err(Error::InvalidParameter(format!("t_final must be >= 0, got {t_final}")));
    }
    let scheme = match cfg.scheme {
        Scheme::ImexEuler => Provenance::ImexEuler,
        Scheme::ImexStrang => Provenance::ImexStrang,
    };
    if t_final == 0.0 {
        return Trajectory::new(vec![s0.clone()], scheme);
    }
    let n_steps = (t_final / cfg.dt).round().max(1.0) as u64;
    let dt = t_final / n_steps as f64;
    let grid = s0.grid();
    let ops = ImexOps::new(grid, dt, p, cfg);
    let mut scratch = Scratch::default();

    let mut states = Vec::new();
    for m in monitors.iter_mut() {
        m.observe(0, s0)
            .map_err(|reason| Error::MonitorAbort { step: 0, reason })?;
    }
    states.push(s0.clone());
    let mut u = s0.u.values().to_vec();
    let mut v = s0.v.values().to_vec();
    for step in 1..=n_steps {
        step_values(&mut u, &mut v, dt, p, cfg, &ops, &mut scratch, Some(step))?;
        if step % cfg.snapshot_stride as u64 == 0 || step == n_steps {
            // Times from the step index, not accumulation, so reruns are
            // bit-identical.
            let state = StatePair::new(
                Field::from_values(grid, u.clone())?,
                Field::from_values(grid, v.clone())?,
                step as f64 * dt,
            )?;
            for m in monitors.iter_mut() {
                m.observe(step, &state)
                    .map_err(|reason| Error::MonitorAbort { step, reason })?;
            }
            states.push(state);
        }
    }
    Trajectory::new(states, scheme)
}

/// Sup-over-time sup-norm gap between the Picard solution and the IMEX
/// stepper at shared sample times on `[0, horizon]`. `horizon` must not
/// exceed the Picard `T0`; both solvers run the same propagator mode so the
/// gap measures time integration only.
pub fn cross_validate(
    u0: &Field,
    v0: &Field,
    p: &ModelParams,
    horizon: f64,
    picard_cfg: &PicardConfig,
    steps_per_interval: usize,
    scheme: Scheme,
) -> Result<f64> {
    if steps_per_interval == 0 {
        return Err(Error::InvalidParameter("steps_per_interval must be positive".into()));
    }
    let capped = PicardConfig {
        horizon_cap: Some(horizon),
        ..*picard_cfg
    };
    let sol = picard_solve(u0, v0, p, &capped)?;
    let t0 = sol.trajectory.end_time();
    let samples = sol.trajectory.len() - 1;

    let dt = t0 / (samples * steps_per_interval) as f64;
    let cap = max_stable_dt(p, sol.bounds.m.max(1.0));
    if dt > cap {
        return Err(Error::InvalidParameter(format!(
            "cross_validate: aligned dt {dt:.3e} exceeds stability cap {cap:.3e}; raise steps_per_interval"
        )));
    }
    let cfg = StepperConfig {
        dt,
        scheme,
        snapshot_stride: steps_per_interval,
        propagator: picard_cfg.propagator,
    };
    let s0 = StatePair::new(u0.clone(), v0.clone(), 0.0)?;
    let imex = simulate(&s0, t0, p, &cfg, &mut [])?;
    if imex.len() != sol.trajectory.len() {
        return Err(Error::InvalidParameter(format!(
            "snapshot misalignment: picard {} vs imex {}",
            sol.trajectory.len(),
            imex.len()
        )));
    }
    let mut gap = 0.0f64;
    for (a, b) in sol.trajectory.states().iter().zip(imex.states()) {
        gap = gap.max(a.u.sup_distance(&b.u)?);
        gap = gap.max(a.v.sup_distance(&b.v)?);
    }
    Ok(gap)
}
