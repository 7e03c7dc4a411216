//! Verification harnesses: invariant-box checks over stored trajectories,
//! randomized invariance experiments, trap-time entry checks, the
//! propagator-estimate suite, and the trivial-state instability probe.
//!
//! Verdicts are computed from stored snapshots only — no interpolation in
//! time — so the snapshot stride is part of every claim and is recorded in
//! the report.

use crate::comparison::TrapChainResult;
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, StatePair};
use crate::mild::{self, PicardConfig};
use crate::model::{self, ModelParams};
use crate::semigroup::{damped, evolve, heat, PropagatorConfig, PropagatorMode};
use crate::stepper::{self, Scheme, StepperConfig};
use crate::trajectory::{Provenance, Trajectory};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Strict-positivity floor for the discrete analogue of "u > 0 at t > 0";
/// on a grid, strictness is a tolerance statement.
pub const STRICT_FLOOR: f64 = 1e-14;

/// A box in (u, v) space; upper bounds may be infinite for one-sided checks.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RegionBox {
    pub lo_u: f64,
    pub hi_u: f64,
    pub lo_v: f64,
    pub hi_v: f64,
}

impl RegionBox {
    pub fn nonnegative_quadrant() -> Self {
        Self { lo_u: 0.0, hi_u: f64::INFINITY, lo_v: 0.0, hi_v: f64::INFINITY }
    }

    pub fn square(lo: f64, hi: f64) -> Self {
        Self { lo_u: lo, hi_u: hi, lo_v: lo, hi_v: hi }
    }

    /// The invariant square `S = (q, u_bar)^2`.
    pub fn invariant_square(p: &ModelParams) -> Result<Self> {
        Ok(Self::square(p.q, model::u_bar(p)?))
    }

    pub fn width_u(&self) -> f64 {
        if self.hi_u.is_finite() { self.hi_u - self.lo_u } else { 1.0 }
    }

    /// Largest boundary violation of the pair `(u, v)`; zero when inside.
    fn overshoot(&self, u: f64, v: f64) -> f64 {
        let mut worst = 0.0f64;
        worst = worst.max(self.lo_u - u);
        worst = worst.max(self.lo_v - v);
        if self.hi_u.is_finite() {
            worst = worst.max(u - self.hi_u);
        }
        if self.hi_v.is_finite() {
            worst = worst.max(v - self.hi_v);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Violation {
    pub time: f64,
    pub index: usize,
    /// "u" or "v".
    pub variable: &'static str,
    pub value: f64,
    pub overshoot: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionReport {
    pub region: RegionBox,
    pub tol: f64,
    pub verdict: Verdict,
    pub worst_overshoot: f64,
    /// Per-sample-time extremes of both variables.
    pub envelope: Vec<EnvelopeEntry>,
    /// Individual offending points (capped).
    pub violations: Vec<Violation>,
    /// Snapshot stride the verdict is conditioned on.
    pub snapshot_count: usize,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnvelopeEntry {
    pub time: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_v: f64,
}

const MAX_RECORDED_VIOLATIONS: usize = 1000;

/// Scan every stored snapshot of `traj` against `region`; exact min/max per
/// variable, pass iff every overshoot is within `tol`.
pub fn check_box(traj: &Trajectory, region: &RegionBox, tol: f64) -> RegionReport {
    let mut envelope = Vec::with_capacity(traj.len());
    let mut violations = Vec::new();
    let mut worst = 0.0f64;
    for s in traj.states() {
        envelope.push(EnvelopeEntry {
            time: s.time,
            min_u: s.u.min_value(),
            max_u: s.u.max_value(),
            min_v: s.v.min_value(),
            max_v: s.v.max_value(),
        });
        for (i, (&u, &v)) in s.u.values().iter().zip(s.v.values()).enumerate() {
            let over = region.overshoot(u, v);
            if over > tol {
                worst = worst.max(over);
                if violations.len() < MAX_RECORDED_VIOLATIONS {
                    let (variable, value) = if (region.lo_u - u).max(u - region.hi_u) >= over {
                        ("u", u)
                    } else {
                        ("v", v)
                    };
                    violations.push(Violation { time: s.time, index: i, variable, value, overshoot: over });
                }
            } else {
                worst = worst.max(over.max(0.0));
            }
        }
    }
    let verdict = if violations.is_empty() { Verdict::Pass } else { Verdict::Fail };
    RegionReport {
        region: *region,
        tol,
        verdict,
        worst_overshoot: worst,
        envelope,
        violations,
        snapshot_count: traj.len(),
    }
}

/// Band-limited random field mapped affinely into `[lo, hi]`. Smooth data
/// keep Gibbs artifacts out of invariance verdicts.
pub fn smooth_random_field<R: Rng>(
    grid: GridSpec,
    lo: f64,
    hi: f64,
    max_mode: usize,
    rng: &mut R,
) -> Result<Field> {
    if !(hi > lo) {
        return Err(Error::InvalidParameter(format!("need hi > lo, got [{lo}, {hi}]")));
    }
    let n = grid.points;
    let tau = 2.0 * std::f64::consts::PI / grid.extent;
    let mut raw = vec![0.0f64; grid.len()];
    match grid.dim {
        1 => {
            for k in 1..=max_mode {
                let (a, b) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                let scale = 1.0 / k as f64;
                for (i, r) in raw.iter_mut().enumerate() {
                    let phase = tau * k as f64 * grid.coord(i);
                    *r += scale * (a * phase.sin() + b * phase.cos());
                }
            }
        }
        _ => {
            for kx in 0..=max_mode {
                for ky in 0..=max_mode {
                    if kx == 0 && ky == 0 {
                        continue;
                    }
                    let (a, b) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                    let scale = 1.0 / (kx + ky) as f64;
                    for iy in 0..n {
                        for ix in 0..n {
                            let phase =
                                tau * (kx as f64 * grid.coord(ix) + ky as f64 * grid.coord(iy));
                            raw[iy * n + ix] += scale * (a * phase.sin() + b * phase.cos());
                        }
                    }
                }
            }
        }
    }
    let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &raw {
        rmin = rmin.min(v);
        rmax = rmax.max(v);
    }
    let span = (rmax - rmin).max(f64::MIN_POSITIVE);
    let mapped = raw
        .into_iter()
        .map(|v| lo + (v - rmin) / span * (hi - lo))
        .collect();
    Field::from_values(grid, mapped)
}

/// Which solver an invariance experiment runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentSolver {
    Imex,
    Mild,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceSample {
    pub seed_index: usize,
    pub verdict: Verdict,
    pub worst_overshoot: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub region: RegionBox,
    pub tol: f64,
    pub samples: Vec<InvarianceSample>,
    pub verdict: Verdict,
    pub solver: ExperimentSolver,
    pub mode: PropagatorMode,
    pub horizon: f64,
    pub snapshot_stride: usize,
}

/// Draw `n_samples` smooth random pairs strictly inside `region` (1% margin
/// of the region width), simulate each to `t_final`, and box-check the
/// stored snapshots. Kernel mode demands zero overshoot; spectral mode
/// allows `1e-8` of the region width.
pub fn invariance_experiment(
    p: &ModelParams,
    region: &RegionBox,
    n_samples: usize,
    t_final: f64,
    solver: ExperimentSolver,
    mode: PropagatorMode,
    seed: u64,
) -> Result<InvarianceReport> {
    let grid = GridSpec::new_1d(100.0, 128)?;
    invariance_experiment_on(p, region, n_samples, t_final, solver, mode, seed, grid)
}

#[allow(clippy::too_many_arguments)]
pub fn invariance_experiment_on(
    p: &ModelParams,
    region: &RegionBox,
    n_samples: usize,
    t_final: f64,
    solver: ExperimentSolver,
    mode: PropagatorMode,
    seed: u64,
    grid: GridSpec,
) -> Result<InvarianceReport> {
    let tol = match mode {
        PropagatorMode::KernelConvolution => 0.0,
        PropagatorMode::SpectralMultiplier => 1e-8 * region.width_u(),
    };
    let pc = match mode {
        PropagatorMode::KernelConvolution => PropagatorConfig::kernel(),
        PropagatorMode::SpectralMultiplier => PropagatorConfig::spectral(),
    };
    // Sampling margin: start strictly inside the region.
    let margin_u = 0.01 * region.width_u();
    let (lo_u, hi_u) = (region.lo_u + margin_u, region.lo_u + region.width_u() - margin_u);
    let width_v = if region.hi_v.is_finite() { region.hi_v - region.lo_v } else { 1.0 };
    let margin_v = 0.01 * width_v;
    let (lo_v, hi_v) = (region.lo_v + margin_v, region.lo_v + width_v - margin_v);
    let m_box = if region.hi_u.is_finite() {
        region.hi_u.max(region.hi_v).max(1.0)
    } else {
        hi_u.max(hi_v).max(1.0)
    };

    // Samples are independent runs; execute them concurrently and merge by
    // sample index so the report is deterministic.
    use rayon::prelude::*;
    let results: Vec<Result<(InvarianceSample, usize)>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let u0 = smooth_random_field(grid, lo_u, hi_u, 6, &mut rng)?;
            let v0 = smooth_random_field(grid, lo_v, hi_v, 6, &mut rng)?;
            let (traj, stride) = match solver {
                ExperimentSolver::Imex => {
                    let cfg =
                        StepperConfig::auto(Scheme::ImexStrang, pc, p, m_box, t_final, 256)?;
                    let s0 = StatePair::new(u0, v0, 0.0)?;
                    (
                        stepper::simulate(&s0, t_final, p, &cfg, &mut [])?,
                        cfg.snapshot_stride,
                    )
                }
                ExperimentSolver::Mild => {
                    let cfg = PicardConfig {
                        samples: 8,
                        quad_substeps: 2,
                        propagator: pc,
                        ..PicardConfig::default()
                    };
                    (mild::extend(&u0, &v0, p, t_final, &cfg, 256)?, 1)
                }
            };
            let report = check_box(&traj, region, tol);
            Ok((
                InvarianceSample {
                    seed_index: i,
                    verdict: report.verdict,
                    worst_overshoot: report.worst_overshoot,
                },
                stride,
            ))
        })
        .collect();

    let mut samples = Vec::with_capacity(n_samples);
    let mut verdict = Verdict::Pass;
    let mut stride = 0usize;
    for r in results {
        let (sample, s) = r?;
        if sample.verdict == Verdict::Fail {
            verdict = Verdict::Fail;
        }
        stride = s;
        samples.push(sample);
    }
    Ok(InvarianceReport {
        region: *region,
        tol,
        samples,
        verdict,
        solver,
        mode,
        horizon: t_final,
        snapshot_stride: stride,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EntryReport {
    /// First stored sample time with both fields inside the square.
    pub entry_time: f64,
    pub t_sharp: f64,
    pub entry_tol: f64,
    pub within_bound: bool,
}

/// First stored sample time at which the whole field pair lies in S, and
/// whether that happens by `T# + entry_tol`.
pub fn entry_check(
    traj: &Trajectory,
    chain: &TrapChainResult,
    p: &ModelParams,
    entry_tol: f64,
) -> Result<EntryReport> {
    if traj.end_time() < chain.t_sharp {
        return Err(Error::OutOfSpan {
            t: chain.t_sharp,
            lo: traj.start_time(),
            hi: traj.end_time(),
        });
    }
    let square = RegionBox::square(p.q, chain.u_bar);
    let mut entry_time = f64::INFINITY;
    for s in traj.states() {
        let inside = s
            .u
            .values()
            .iter()
            .zip(s.v.values())
            .all(|(&u, &v)| square.overshoot(u, v) <= 0.0);
        if inside {
            entry_time = s.time;
            break;
        }
    }
    Ok(EntryReport {
        entry_time,
        t_sharp: chain.t_sharp,
        entry_tol,
        within_bound: entry_time <= chain.t_sharp + entry_tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteCheck {
    pub name: String,
    pub worst: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<SuiteCheck>,
    /// Observed smoothing constant sup_t t^(1/2) ||grad e^{t Lap} f|| / ||f||.
    pub smoothing_constant: f64,
    pub trials: usize,
    pub pass: bool,
}

impl SuiteReport {
    fn push(&mut self, name: &str, worst: f64, bound: f64) {
        let pass = worst <= bound;
        if !pass {
            self.pass = false;
        }
        self.checks.push(SuiteCheck { name: name.to_string(), worst, bound, pass });
    }
}

/// Run every propagator estimate over `trials` random fields: contraction
/// and minimum preservation (exact in kernel mode), the damped decay, the
/// semigroup law and mean preservation (spectral), the source-problem norm
/// bound, the short-span 4/3 bound, the forced-problem 2x bound with strict
/// positivity above the floor c, and the smoothing statistic.
pub fn semigroup_suite(grid: GridSpec, trials: usize, seed: u64, p: &ModelParams) -> Result<SuiteReport> {
    let kernel = PropagatorConfig::kernel();
    let spectral = PropagatorConfig::spectral();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport {
        checks: Vec::new(),
        smoothing_constant: 0.0,
        trials,
        pass: true,
    };

    let mut contraction = 0.0f64;
    let mut min_pres = 0.0f64;
    let mut decay = 0.0f64;
    let mut sg_law = 0.0f64;
    let mut mean_pres = 0.0f64;
    let mut source_excess = f64::NEG_INFINITY;
    let mut short_span_excess = 0.0f64;
    let mut forced_norm_excess = 0.0f64;
    let mut forced_floor = f64::INFINITY;
    let mut smoothing = 0.0f64;

    for _ in 0..trials {
        let f = Field::random_uniform(grid, -2.0, 3.0, &mut rng)?;
        let t = rng.gen_range(0.05..=1.0);

        // Maximum principle, kernel mode: exact.
        let hk = heat(&f, t, p.d, &kernel)?;
        contraction = contraction.max(hk.sup_norm() - f.sup_norm());
        min_pres = min_pres.max(f.min_value() - hk.min_value());

        // Damped decay.
        let dk = damped(&f, t, p, &kernel)?;
        decay = decay.max(dk.sup_norm() - (-t).exp() * f.sup_norm());

        // Spectral-only identities.
        let (s1, s2) = (0.3 * t, 0.7 * t);
        let comp = heat(&heat(&f, s1, 1.0, &spectral)?, s2, 1.0, &spectral)?;
        let oneshot = heat(&f, t, 1.0, &spectral)?;
        sg_law = sg_law.max(comp.sup_distance(&oneshot)?);
        mean_pres = mean_pres.max((oneshot.mean() - f.mean()).abs());

        // Smoothing statistic over a dyadic t-grid spanning [1e-4, 1].
        let mut tt = 1e-4;
        while tt < 1.0 {
            let sm = heat(&f, tt, 1.0, &spectral)?;
            smoothing = smoothing.max(tt.sqrt() * sm.grad_sup_norm() / f.sup_norm());
            tt = (tt * 4.0).min(1.0);
        }
        let sm = heat(&f, 1.0, 1.0, &spectral)?;
        smoothing = smoothing.max(sm.grad_sup_norm() / f.sup_norm());

        // Source problem psi' = d Lap psi - psi + phi: norm bound
        // ||psi(t)|| <= ||psi0|| + t max ||phi|| + quadrature slack.
        let psi0 = Field::random_uniform(grid, 0.0, 1.5, &mut rng)?;
        let phi = Field::random_uniform(grid, 0.0, 2.0, &mut rng)?;
        let samples = 8usize;
        let states = (0..=samples)
            .map(|i| {
                StatePair::new(phi.clone(), phi.clone(), i as f64 * t / samples as f64)
            })
            .collect::<Result<Vec<_>>>()?;
        let src_traj = Trajectory::new(states, Provenance::Picard)?;
        let psi = mild::duhamel_v(&psi0, &src_traj, t, p, 4, &kernel)?;
        let ds = t / (samples as f64 * 4.0);
        let quad_tol = phi.sup_norm() * t * ds * ds;
        source_excess = source_excess
            .max(psi.sup_norm() - (psi0.sup_norm() + t * phi.sup_norm() + quad_tol));

        // Short-span evolution bound ||U(t,0) f|| <= 4/3 ||f|| for
        // t <= 1/(4a).
        let eta = Field::random_uniform(grid, -3.0, 3.0, &mut rng)?;
        let a = eta.sup_norm();
        let t_short = 1.0 / (4.0 * a);
        let propagated = evolve(&f, |_| Ok(eta.clone()), 0.0, t_short, &kernel)?;
        short_span_excess = short_span_excess.max(propagated.sup_norm() - 4.0 / 3.0 * f.sup_norm());

        // Forced problem xi' = Lap xi - eta (xi - c) + zeta with
        // 0 < zeta <= b and xi0 >= c: stays above c and below 2||xi0||
        // for t <= min(1/(4a), ||xi0 - c||/(2b)).
        let c = rng.gen_range(0.0..=0.5);
        let theta0 = Field::random_uniform(grid, 0.1, 1.0, &mut rng)?;
        let xi0_sup = theta0.sup_norm() + c;
        let zeta = Field::random_uniform(grid, 0.05, 2.0, &mut rng)?;
        let b = zeta.sup_norm();
        let eta_pos = Field::random_uniform(grid, 0.0, 3.0, &mut rng)?;
        let t_forced =
            (1.0 / (4.0 * eta_pos.sup_norm())).min(theta0.sup_norm() / (2.0 * b));
        let mut theta = evolve(&theta0, |_| Ok(eta_pos.clone()), 0.0, t_forced, &kernel)?;
        let quad = 8usize;
        let dsf = t_forced / quad as f64;
        for k in 0..=quad {
            let s = k as f64 * dsf;
            let w = if k == 0 || k == quad { dsf / 2.0 } else { dsf };
            let leg = evolve(&zeta, |_| Ok(eta_pos.clone()), s, t_forced, &kernel)?;
            theta = Field::from_values(
                grid,
                theta
                    .values()
                    .iter()
                    .zip(leg.values())
                    .map(|(x, y)| x + w * y)
                    .collect(),
            )?;
        }
        let xi_sup = theta.sup_norm() + c;
        forced_norm_excess = forced_norm_excess.max(xi_sup - 2.0 * xi0_sup);
        forced_floor = forced_floor.min(theta.min_value());
    }

    report.push("kernel contraction (exact)", contraction, 0.0);
    report.push("kernel minimum preservation (exact)", min_pres, 0.0);
    report.push("damped decay e^{-t}", decay, 1e-12);
    report.push("spectral semigroup law", sg_law, 1e-12);
    report.push("spectral mean preservation", mean_pres, 1e-12);
    report.push("source-problem norm bound", source_excess.max(0.0), 0.0);
    report.push("short-span 4/3 bound", short_span_excess, 1e-12);
    report.push("forced-problem 2x bound", forced_norm_excess, 1e-12);
    report.push(
        "forced-problem strict positivity above floor",
        -forced_floor,
        -STRICT_FLOOR,
    );
    report.smoothing_constant = smoothing;
    report.push("smoothing statistic finite", if smoothing.is_finite() { 0.0 } else { 1.0 }, 0.0);
    Ok(report)
}

/// Perturbation profile for the instability probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeProfile {
    Uniform,
    /// Gaussian bump of the given width at the domain center.
    Bump,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProbeReport {
    pub amplitude: f64,
    pub horizon: f64,
    pub max_u_initial: f64,
    pub max_u_final: f64,
    pub min_u_final: f64,
    pub growth_factor: f64,
    pub grew_tenfold: bool,
    /// Fraction of grid points at or above the strict-positivity floor,
    /// initially and at the final time.
    pub positive_fraction_initial: f64,
    pub positive_fraction: f64,
    /// Initial and final radius of the region where u exceeds q.
    pub ignited_radius_initial: f64,
    pub ignited_radius_final: f64,
}

/// Perturb the trivial state by `amplitude` (< q) in u and march to `t_final`.
///
/// Runs the kernel propagator: the trivial state sits on the unstable side
/// of the kinetics, so the sign errors a spectral transform leaves in the
/// deep Gaussian tail get amplified all the way to the `-q` singularity.
/// Kernel mode keeps u >= 0 exactly. For a localized bump the grid must
/// resolve the per-step diffusion length (`spacing <= 8 sqrt(2 dt)`),
/// otherwise the compactly supported kernel freezes the zero set and the
/// probe cannot observe spreading.
pub fn instability_probe(
    p: &ModelParams,
    grid: GridSpec,
    amplitude: f64,
    profile: ProbeProfile,
    t_final: f64,
) -> Result<ProbeReport> {
    if !(amplitude >= 0.0 && amplitude < p.q) {
        return Err(Error::InvalidParameter(format!(
            "amplitude must lie in [0, q) = [0, {}), got {amplitude}",
            p.q
        )));
    }
    if profile == ProbeProfile::Bump {
        let dt = stepper::max_stable_dt(p, 1.0);
        let reach = 8.0 * (2.0 * dt).sqrt();
        if grid.spacing() > reach {
            return Err(Error::InvalidParameter(format!(
                "bump probe needs spacing <= {reach:.4e} to spread (got {:.4e}); \
                 use a finer grid or smaller extent",
                grid.spacing()
            )));
        }
    }
    let width = 2.5 * grid.spacing();
    let u0 = match profile {
        ProbeProfile::Uniform => Field::constant(grid, amplitude)?,
        ProbeProfile::Bump => {
            Field::gaussian_bump(grid, grid.extent / 2.0, width, amplitude, 0.0)?
        }
    };
    let v0 = Field::constant(grid, 0.0)?;
    let cfg = StepperConfig::auto(
        Scheme::ImexStrang,
        PropagatorConfig::kernel(),
        p,
        1.0,
        t_final.max(1e-6),
        64,
    )?;
    let s0 = StatePair::new(u0.clone(), v0, 0.0)?;
    let traj = stepper::simulate(&s0, t_final, p, &cfg, &mut [])?;
    let last = traj.last();

    let ignited_radius = |f: &Field| -> f64 {
        let center = grid.extent / 2.0;
        let mut r = 0.0f64;
        match grid.dim {
            1 => {
                for (i, &v) in f.values().iter().enumerate() {
                    if v > p.q {
                        let mut d = (grid.coord(i) - center).abs();
                        if d > grid.extent / 2.0 {
                            d = grid.extent - d;
                        }
                        r = r.max(d);
                    }
                }
            }
            _ => {
                let n = grid.points;
                for iy in 0..n {
                    for ix in 0..n {
                        if f.values()[iy * n + ix] > p.q {
                            let dx = (grid.coord(ix) - center).abs().min(grid.extent / 2.0);
                            let dy = (grid.coord(iy) - center).abs().min(grid.extent / 2.0);
                            r = r.max((dx * dx + dy * dy).sqrt());
                        }
                    }
                }
            }
        }
        r
    };

    let positive = |f: &Field| {
        f.values().iter().filter(|&&v| v >= STRICT_FLOOR).count() as f64 / f.len() as f64
    };
    let max0 = u0.max_value();
    let max1 = last.u.max_value();
    let growth = if amplitude > 0.0 { max1 / amplitude } else { 0.0 };
    Ok(ProbeReport {
        amplitude,
        horizon: t_final,
        max_u_initial: max0,
        max_u_final: max1,
        min_u_final: last.u.min_value(),
        growth_factor: growth,
        grew_tenfold: growth >= 10.0,
        positive_fraction_initial: positive(&u0),
        positive_fraction: positive(&last.u),
        ignited_radius_initial: ignited_radius(&u0),
        ignited_radius_final: ignited_radius(&last.u),
    })
}
