//! Successive approximation of the mild solution on the short horizon where
//! the iteration bounds are proved.
//!
//! Starting from the free flows `u_1(t) = e^{t Lap} u_0`,
//! `v_1(t) = e^{d t Lap} v_0`, each round freezes the damping coefficient
//! `eta_l = h v_l / (u_l + q)` and the forcing
//! `zeta_l = u_l (1 - u_l)/eps + h q v_l/(u_l + q)` and solves the linear
//! problems
//!
//! ```text
//! u_{l+1}(t) = U_l(t,0) u_0 + int_0^t U_l(t,s) zeta_l(s) ds
//! v_{l+1}(t) = e^{tL} v_0   + int_0^t e^{(t-s)L} u_l(s) ds
//! ```
//!
//! with `U_l` the evolution family for `Lap - eta_l`. The Duhamel integrals
//! are composite trapezoid over the stored sample times, each interval
//! refined `quad_substeps` times; trapezoid keeps positivity because every
//! weight and propagator is nonnegative. The proved bounds (first iterate
//! below `m`, all iterates below `2m`, nonnegativity) are rechecked at run
//! time and violations are hard errors, since they can only come from a bug
//! or from quadrature that is too coarse.

use crate::error::{Error, Result};
use crate::grid::{Field, StatePair};
use crate::model::{ModelParams, DENOM_GUARD};
use crate::semigroup::{damped, evolve, heat, PropagatorConfig};
use crate::trajectory::{Provenance, Trajectory};
use serde::Serialize;

/// Fallback horizon when the initial data are identically zero and the
/// `T0 = min(1/(4a), m/(2b))` rule degenerates.
pub const HORIZON_DEFAULT: f64 = 1.0;
/// Iterates may undershoot zero by at most this much.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// The constants the short-horizon existence proof runs on.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolverBounds {
    /// max of the two initial sup norms.
    pub m: f64,
    /// Bound on the frozen damping coefficient: `a = 2 h m / q`.
    pub a: f64,
    /// Bound on the frozen forcing: `b = 2m(1 + 2m)/eps + 2 h m`.
    pub b: f64,
    /// Guaranteed horizon `T0 = min(1/(4a), m/(2b))`.
    pub t0: f64,
    /// Trapezoid refinement carried along for reproducibility.
    pub quad_substeps: usize,
}

impl SolverBounds {
    /// Bounds from a sup-norm level `m >= 0`.
    pub fn from_m(m: f64, p: &ModelParams, quad_substeps: usize) -> Result<Self> {
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::InvalidParameter(format!("m must be finite and >= 0, got {m}")));
        }
        if m == 0.0 {
            return Ok(Self { m, a: 0.0, b: 0.0, t0: HORIZON_DEFAULT, quad_substeps });
        }
        let a = 2.0 * p.h * m / p.q;
        let b = 2.0 * m * (1.0 + 2.0 * m) / p.epsilon + 2.0 * p.h * m;
        let t0 = (1.0 / (4.0 * a)).min(m / (2.0 * b));
        Ok(Self { m, a, b, t0, quad_substeps })
    }

    /// Bounds from nonnegative initial data.
    pub fn from_data(u0: &Field, v0: &Field, p: &ModelParams, quad_substeps: usize) -> Result<Self> {
        u0.assert_same_grid(v0, "solver_bounds")?;
        if u0.min_value() < 0.0 || v0.min_value() < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "initial data must be nonnegative: min u0 = {:.3e}, min v0 = {:.3e}",
                u0.min_value(),
                v0.min_value()
            )));
        }
        Self::from_m(u0.sup_norm().max(v0.sup_norm()), p, quad_substeps)
    }
}

/// Knobs for one Picard run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PicardConfig {
    /// Number of time intervals on `[0, T0]` (so `samples + 1` stored states).
    pub samples: usize,
    /// Trapezoid sub-refinement per interval.
    pub quad_substeps: usize,
    /// Stop once the successive sup-difference drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub propagator: PropagatorConfig,
    /// Optional cap on the horizon (used by the global-extension driver to
    /// land exactly on a target time). `None` takes the full `T0`.
    pub horizon_cap: Option<f64>,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            samples: 64,
            quad_substeps: 4,
            tol: 1e-8,
            max_iter: 20,
            propagator: PropagatorConfig::kernel(),
            horizon_cap: None,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.quad_substeps == 0 {
            return Err(Error::InvalidParameter(
                "samples and quad_substeps must be positive".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        self.propagator.validate()
    }
}

/// Sup-norm records for one iterate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IterateStats {
    /// sup_t ||u_l(t)||
    pub k1: f64,
    /// sup_t ||v_l(t)||
    pub k2: f64,
    /// sup_t t^(1/2) ||grad u_l(t)||
    pub k3: f64,
    /// sup_t t^(1/2) ||grad v_l(t)||
    pub k4: f64,
    pub min_u: f64,
    pub min_v: f64,
    /// sup of the frozen damping coefficient built from this iterate.
    pub eta_sup: f64,
    pub zeta_min: f64,
    pub zeta_max: f64,
}

/// Everything measured while the iteration ran.
#[derive(Clone, Debug, Serialize)]
pub struct IterationDiagnostics {
    pub iterates: Vec<IterateStats>,
    /// `deltas[j]` is the sup-difference between iterates j+1 and j+2.
    pub deltas: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug)]
pub struct PicardSolution {
    pub trajectory: Trajectory,
    pub diagnostics: IterationDiagnostics,
    pub bounds: SolverBounds,
}

struct Iterate {
    states: Vec<StatePair>,
}

impl Iterate {
    fn as_trajectory(&self) -> Result<Trajectory> {
        Trajectory::new(self.states.clone(), Provenance::Picard)
    }
}

fn eta_zeta_at(traj: &Trajectory, t: f64, p: &ModelParams) -> Result<(Field, Field)> {
    let u = traj.u_at(t)?;
    let v = traj.v_at(t)?;
    let mut eta_vals = Vec::with_capacity(u.len());
    let mut zeta_vals = Vec::with_capacity(u.len());
    for (&uu, &vv) in u.values().iter().zip(v.values()) {
        if uu <= -p.q + DENOM_GUARD {
            return Err(Error::Singularity {
                context: "picard eta/zeta",
                value: uu,
                guard: DENOM_GUARD,
                minus_q: -p.q,
            });
        }
        let ratio = p.h * vv / (uu + p.q);
        eta_vals.push(ratio);
        zeta_vals.push(uu * (1.0 - uu) / p.epsilon + p.q * ratio);
    }
    Ok((
        Field::from_values(u.grid(), eta_vals)?,
        Field::from_values(u.grid(), zeta_vals)?,
    ))
}

fn stats_for(states: &[StatePair], p: &ModelParams) -> Result<IterateStats> {
    let mut s = IterateStats {
        k1: 0.0,
        k2: 0.0,
        k3: 0.0,
        k4: 0.0,
        min_u: f64::INFINITY,
        min_v: f64::INFINITY,
        eta_sup: 0.0,
        zeta_min: f64::INFINITY,
        zeta_max: f64::NEG_INFINITY,
    };
    for st in states {
        s.k1 = s.k1.max(st.u.sup_norm());
        s.k2 = s.k2.max(st.v.sup_norm());
        let rt = st.time.sqrt();
        s.k3 = s.k3.max(rt * st.u.grad_sup_norm());
        s.k4 = s.k4.max(rt * st.v.grad_sup_norm());
        s.min_u = s.min_u.min(st.u.min_value());
        s.min_v = s.min_v.min(st.v.min_value());
        for (&uu, &vv) in st.u.values().iter().zip(st.v.values()) {
            let ratio = p.h * vv / (uu + p.q);
            let zeta = uu * (1.0 - uu) / p.epsilon + p.q * ratio;
            s.eta_sup = s.eta_sup.max(ratio.abs());
            s.zeta_min = s.zeta_min.min(zeta);
            s.zeta_max = s.zeta_max.max(zeta);
        }
    }
    Ok(s)
}

fn check_iterate_bounds(
    stats: &IterateStats,
    bounds: &SolverBounds,
    iterate: usize,
) -> Result<()> {
    let m = bounds.m;
    let fp_slack = 1e-12 * m.max(1.0);
    let diag_tol = 1e-6 * m;
    let (k_bound, label): (f64, &'static str) = if iterate == 1 {
        (m + fp_slack, "K_{j,1} <= m")
    } else {
        (2.0 * m + diag_tol, "K_{j,l} <= 2m")
    };
    for k in [stats.k1, stats.k2, stats.k3, stats.k4] {
        if k > k_bound {
            return Err(Error::DiagnosticViolation {
                what: label,
                value: k,
                bound: k_bound,
                iterate,
            });
        }
    }
    if stats.min_u < -POSITIVITY_TOL || stats.min_v < -POSITIVITY_TOL {
        return Err(Error::DiagnosticViolation {
            what: "iterate positivity",
            value: stats.min_u.min(stats.min_v),
            bound: -POSITIVITY_TOL,
            iterate,
        });
    }
    // eta is bounded by a once the iterate obeys the box bounds.
    if bounds.a > 0.0 && stats.eta_sup > bounds.a * (1.0 + 1e-9) {
        return Err(Error::DiagnosticViolation {
            what: "||eta|| <= a",
            value: stats.eta_sup,
            bound: bounds.a,
            iterate,
        });
    }
    if bounds.b > 0.0 && stats.zeta_max > bounds.b * (1.0 + 1e-9) {
        return Err(Error::DiagnosticViolation {
            what: "zeta <= b",
            value: stats.zeta_max,
            bound: bounds.b,
            iterate,
        });
    }
    Ok(())
}

/// Trapezoid nodes and weights for one interval `[lo, hi]` split into
/// `q` equal pieces.
fn trapezoid_nodes(lo: f64, hi: f64, q: usize) -> Vec<(f64, f64)> {
    let dt = (hi - lo) / q as f64;
    (0..=q)
        .map(|k| {
            let w = if k == 0 || k == q { dt / 2.0 } else { dt };
            (lo + k as f64 * dt, w)
        })
        .collect()
}

/// Successive approximation on `[0, T0]`.
pub fn picard_solve(
    u0: &Field,
    v0: &Field,
    p: &ModelParams,
    cfg: &PicardConfig,
) -> Result<PicardSolution> {
    picard_solve_inner(u0, v0, p, cfg, None)
}

fn picard_solve_inner(
    u0: &Field,
    v0: &Field,
    p: &ModelParams,
    cfg: &PicardConfig,
    first_iterate_bump: Option<&Field>,
) -> Result<PicardSolution> {
    cfg.validate()?;
    p.validate()?;
    let mut bounds = SolverBounds::from_data(u0, v0, p, cfg.quad_substeps)?;
    if let Some(cap) = cfg.horizon_cap {
        if !(cap > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon_cap must be > 0, got {cap}")));
        }
        bounds.t0 = bounds.t0.min(cap);
    }
    let grid = u0.grid();
    let times: Vec<f64> = (0..=cfg.samples)
        .map(|i| i as f64 * bounds.t0 / cfg.samples as f64)
        .collect();

    // Zero data stay zero; the T0 rule divides by m, so this is special-cased.
    if bounds.m == 0.0 {
        let states = times
            .iter()
            .map(|&t| {
                StatePair::new(Field::constant(grid, 0.0)?, Field::constant(grid, 0.0)?, t)
            })
            .collect::<Result<Vec<_>>>()?;
        let stats = stats_for(&states, p)?;
        return Ok(PicardSolution {
            trajectory: Trajectory::new(states, Provenance::Picard)?,
            diagnostics: IterationDiagnostics {
                iterates: vec![stats],
                deltas: vec![0.0],
                converged: true,
            },
            bounds,
        });
    }

    let pc = &cfg.propagator;

    // First iterate: free heat flows (no damping on v yet).
    let mut first_states = Vec::with_capacity(times.len());
    let mut cur_u = u0.clone();
    let mut cur_v = v0.clone();
    if let Some(bump) = first_iterate_bump {
        cur_u = Field::from_values(
            grid,
            cur_u.values().iter().zip(bump.values()).map(|(a, b)| a + b).collect(),
        )?;
    }
    first_states.push(StatePair::new(cur_u.clone(), cur_v.clone(), 0.0)?);
    for w in times.windows(2) {
        let dt = w[1] - w[0];
        cur_u = heat(&cur_u, dt, 1.0, pc)?;
        cur_v = heat(&cur_v, dt, p.d, pc)?;
        first_states.push(StatePair::new(cur_u.clone(), cur_v.clone(), w[1])?);
    }

    let mut prev = Iterate { states: first_states };
    let mut diagnostics = IterationDiagnostics {
        iterates: Vec::new(),
        deltas: Vec::new(),
        converged: false,
    };
    let first_stats = stats_for(&prev.states, p)?;
    if first_iterate_bump.is_none() {
        check_iterate_bounds(&first_stats, &bounds, 1)?;
    }
    diagnostics.iterates.push(first_stats);

    for iterate in 2..=(cfg.max_iter + 1) {
        let prev_traj = prev.as_trajectory()?;
        let eta_at = |t: f64| eta_zeta_at(&prev_traj, t, p).map(|(eta, _)| eta);

        let mut states = Vec::with_capacity(times.len());
        states.push(StatePair::new(u0.clone(), v0.clone(), 0.0)?);
        for w in times.windows(2) {
            let (t_lo, t_hi) = (w[0], w[1]);
            let prev_state = states.last().expect("seeded above");

            // u-leg: carry the running solution with U_l and add the local
            // Duhamel contribution by trapezoid.
            let mut u_next = evolve(&prev_state.u, eta_at, t_lo, t_hi, pc)?;
            for (s, weight) in trapezoid_nodes(t_lo, t_hi, cfg.quad_substeps) {
                let (_, zeta) = eta_zeta_at(&prev_traj, s, p)?;
                let propagated = evolve(&zeta, eta_at, s, t_hi, pc)?;
                u_next = Field::from_values(
                    grid,
                    u_next
                        .values()
                        .iter()
                        .zip(propagated.values())
                        .map(|(a, b)| a + weight * b)
                        .collect(),
                )?;
            }

            // v-leg: same structure with the damped semigroup and the
            // previous u iterate as source.
            let mut v_next = damped(&prev_state.v, t_hi - t_lo, p, pc)?;
            for (s, weight) in trapezoid_nodes(t_lo, t_hi, cfg.quad_substeps) {
                let source = prev_traj.u_at(s)?;
                let propagated = damped(&source, t_hi - s, p, pc)?;
                v_next = Field::from_values(
                    grid,
                    v_next
                        .values()
                        .iter()
                        .zip(propagated.values())
                        .map(|(a, b)| a + weight * b)
                        .collect(),
                )?;
            }

            states.push(StatePair::new(u_next, v_next, t_hi)?);
        }

        let stats = stats_for(&states, p)?;
        check_iterate_bounds(&stats, &bounds, iterate)?;
        diagnostics.iterates.push(stats);

        let mut du = 0.0f64;
        let mut dv = 0.0f64;
        for (a, b) in prev.states.iter().zip(&states) {
            du = du.max(a.u.sup_distance(&b.u)?);
            dv = dv.max(a.v.sup_distance(&b.v)?);
        }
        let delta = du + dv;
        diagnostics.deltas.push(delta);
        prev = Iterate { states };

        if delta < cfg.tol {
            diagnostics.converged = true;
            return Ok(PicardSolution {
                trajectory: prev.as_trajectory()?,
                diagnostics,
                bounds,
            });
        }
    }

    Err(Error::NoConvergence {
        max_iter: cfg.max_iter,
        last: *diagnostics.deltas.last().unwrap_or(&f64::NAN),
        tol: cfg.tol,
        history: diagnostics.deltas.clone(),
    })
}

/// Evaluate `v(t) = e^{tL} v0 + int_0^t e^{(t-s)L} u(s) ds` by composite
/// trapezoid over the trajectory's sample grid (refined `quad_substeps`
/// times). Positivity is preserved for nonnegative data in kernel mode, and
/// the result obeys `||v(t)|| <= ||v0|| + t max_s ||u(s)||` up to quadrature
/// error.
pub fn duhamel_v(
    v0: &Field,
    u_traj: &Trajectory,
    t: f64,
    p: &ModelParams,
    quad_substeps: usize,
    pc: &PropagatorConfig,
) -> Result<Field> {
    if quad_substeps == 0 {
        return Err(Error::InvalidParameter("quad_substeps must be positive".into()));
    }
    if u_traj.start_time() != 0.0 || !u_traj.contains_time(t) {
        return Err(Error::OutOfSpan {
            t,
            lo: u_traj.start_time(),
            hi: u_traj.end_time(),
        });
    }
    v0.assert_same_grid(&u_traj.first().u, "duhamel_v")?;
    let mut out = damped(v0, t, p, pc)?;
    if t == 0.0 {
        return Ok(out);
    }
    // Quadrature grid: the sample times below t, then t itself.
    let mut knots: Vec<f64> = u_traj
        .states()
        .iter()
        .map(|s| s.time)
        .filter(|&s| s < t)
        .collect();
    knots.push(t);
    let grid = v0.grid();
    for w in knots.windows(2) {
        for (s, weight) in trapezoid_nodes(w[0], w[1], quad_substeps) {
            let source = u_traj.u_at(s)?;
            let propagated = damped(&source, t - s, p, pc)?;
            out = Field::from_values(
                grid,
                out.values()
                    .iter()
                    .zip(propagated.values())
                    .map(|(a, b)| a + weight * b)
                    .collect(),
            )?;
        }
    }
    Ok(out)
}

/// Gronwall-style uniqueness probe: solve once as configured, then again
/// with the first iterate perturbed by `perturbation_scale` and the time
/// sampling plus quadrature jointly refined by `refine`, and return the
/// sup distance at the shared sample times. Identical configurations
/// (`refine = 1`, zero perturbation) return exactly zero.
pub fn uniqueness_residual(
    u0: &Field,
    v0: &Field,
    p: &ModelParams,
    cfg: &PicardConfig,
    perturbation_scale: f64,
    refine: usize,
) -> Result<f64> {
    if refine == 0 {
        return Err(Error::InvalidParameter("refine must be positive".into()));
    }
    let base = picard_solve(u0, v0, p, cfg)?;
    let variant_cfg = PicardConfig {
        samples: cfg.samples * refine,
        quad_substeps: cfg.quad_substeps * refine,
        ..*cfg
    };
    let bump = if perturbation_scale != 0.0 {
        // Nonnegative profile so the perturbed first iterate stays valid.
        let g = u0.grid();
        let mode = Field::single_mode(g, 1, 0.5, 0.5)?;
        Some(mode.map("uniqueness bump", |v| v * perturbation_scale)?)
    } else {
        None
    };
    let variant = picard_solve_inner(u0, v0, p, &variant_cfg, bump.as_ref())?;

    // The refined run's sample grid contains the baseline's: index i maps
    // to i * refine.
    let mut worst = 0.0f64;
    for (i, a) in base.trajectory.states().iter().enumerate() {
        let b = &variant.trajectory.states()[i * refine];
        worst = worst.max(a.u.sup_distance(&b.u)?);
        worst = worst.max(a.v.sup_distance(&b.v)?);
    }
    Ok(worst)
}

/// Repeatedly restart the short-horizon solver from its endpoint until `t_final`,
/// which is exactly how the local solution extends globally. Stores at most
/// `max_snapshots` segment boundaries (plus the endpoints).
pub fn extend(
    u0: &Field,
    v0: &Field,
    p: &ModelParams,
    t_final: f64,
    cfg: &PicardConfig,
    max_snapshots: usize,
) -> Result<Trajectory> {
    if !(t_final >= 0.0) {
        return Err(Error::InvalidParameter(format!("t_final must be >= 0, got {t_final}")));
    }
    if max_snapshots < 2 {
        return Err(Error::InvalidParameter("max_snapshots must be at least 2".into()));
    }
    let first_bounds = SolverBounds::from_data(u0, v0, p, cfg.quad_substeps)?;
    let est_segments = (t_final / first_bounds.t0).ceil().max(1.0);
    let keep_every = (est_segments / (max_snapshots as f64 - 1.0)).ceil().max(1.0) as usize;

    let mut states: Vec<StatePair> = vec![StatePair::new(u0.clone(), v0.clone(), 0.0)?];
    let mut cur_u = u0.clone();
    let mut cur_v = v0.clone();
    let mut t = 0.0f64;
    let mut segment = 0usize;
    const MAX_SEGMENTS: usize = 10_000_000;
    while t < t_final {
        segment += 1;
        if segment > MAX_SEGMENTS {
            return Err(Error::InvalidParameter(format!(
                "global extension exceeded {MAX_SEGMENTS} segments at t = {t:.6e}"
            )));
        }
        let seg_cfg = PicardConfig {
            horizon_cap: Some(t_final - t),
            ..*cfg
        };
        let sol = picard_solve(&cur_u, &cur_v, p, &seg_cfg)?;
        let end = sol.trajectory.last();
        t += end.time;
        cur_u = end.u.clone();
        cur_v = end.v.clone();
        if segment % keep_every == 0 || t >= t_final {
            states.push(StatePair::new(cur_u.clone(), cur_v.clone(), t)?);
        }
    }
    Trajectory::new(states, Provenance::Picard)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::model;
    use crate::ode::rk45_integrate;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> GridSpec {
        GridSpec::new_1d(100.0, 128).unwrap()
    }

    fn preset() -> ModelParams {
        ModelParams::classic(1.0).unwrap()
    }

    #[test]
    fn solver_bounds_spot_values() {
        // m = 1, h = 1, q = 2e-4, eps = 0.032.
        let p = preset();
        let b = SolverBounds::from_m(1.0, &p, 4).unwrap();
        assert_abs_diff_eq!(b.a, 1.0e4, epsilon = 1e-9);
        assert_abs_diff_eq!(b.b, 189.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b.t0, 2.5e-5, epsilon = 1e-18);
        assert_abs_diff_eq!(1.0 / (4.0 * b.a), 2.5e-5, epsilon = 1e-18);
        assert_abs_diff_eq!(b.m / (2.0 * b.b), 2.639e-3, epsilon = 1e-6);
    }

    #[test]
    fn solver_bounds_scale_inversely_with_m() {
        let p = preset();
        let b1 = SolverBounds::from_m(1.0, &p, 4).unwrap();
        let b2 = SolverBounds::from_m(2.0, &p, 4).unwrap();
        // With 1/(4a) binding, doubling m halves the horizon.
        assert_abs_diff_eq!(b2.t0, b1.t0 / 2.0, epsilon = 1e-18);
    }

    #[test]
    fn solver_bounds_reject_negative_data() {
        let p = preset();
        let g = grid();
        let u0 = Field::constant(g, -0.1).unwrap();
        let v0 = Field::constant(g, 0.5).unwrap();
        assert!(SolverBounds::from_data(&u0, &v0, &p, 4).is_err());
    }

    #[test]
    fn zero_data_use_default_horizon() {
        let p = preset();
        let g = grid();
        let zero = Field::constant(g, 0.0).unwrap();
        let sol = picard_solve(&zero, &zero, &p, &PicardConfig::default()).unwrap();
        assert_eq!(sol.bounds.t0, HORIZON_DEFAULT);
        assert!(sol.diagnostics.converged);
        for s in sol.trajectory.states() {
            assert_eq!(s.u.sup_norm(), 0.0);
            assert_eq!(s.v.sup_norm(), 0.0);
        }
    }

    #[test]
    fn steady_state_is_a_fixed_point() {
        let p = preset();
        let ut = model::u_tilde(&p).unwrap();
        let g = grid();
        let f = Field::constant(g, ut).unwrap();
        let sol = picard_solve(&f, &f, &p, &PicardConfig::default()).unwrap();
        assert!(sol.diagnostics.converged);
        for s in sol.trajectory.states() {
            assert!((s.u.sup_norm() - ut).abs() < 1e-10);
            assert!((s.v.sup_norm() - ut).abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_data_track_the_kinetics_odes() {
        // Spatially uniform data collapse the PDE to the scalar pair
        // u' = reaction_u, v' = -v + u; an adaptive integrator of that pair
        // is the oracle.
        let p = preset();
        let g = grid();
        let c = 0.01;
        let f = Field::constant(g, c).unwrap();
        let sol = picard_solve(&f, &f, &p, &PicardConfig::default()).unwrap();
        let p2 = p;
        for s in sol.trajectory.states() {
            let oracle = rk45_integrate(
                |_, [u, v]| Ok([model::reaction_u(u, v, &p2)?, model::reaction_v(u, v)]),
                0.0,
                s.time,
                [c, c],
                1e-12,
            )
            .unwrap();
            assert!(
                (s.u.values()[0] - oracle[0]).abs() < 1e-7,
                "t = {}: picard {} vs ode {}",
                s.time,
                s.u.values()[0],
                oracle[0]
            );
            assert!((s.v.values()[0] - oracle[1]).abs() < 1e-7);
        }
    }

    #[test]
    fn diagnostics_respect_proved_bounds_on_random_data() {
        let p = preset();
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..5 {
            let u0 = Field::random_uniform(g, 0.0, 1.4, &mut rng).unwrap();
            let v0 = Field::random_uniform(g, 0.0, 1.1, &mut rng).unwrap();
            let sol = picard_solve(&u0, &v0, &p, &PicardConfig::default()).unwrap();
            let m = sol.bounds.m;
            let d = &sol.diagnostics;
            assert!(d.converged, "trial {trial} did not converge");
            let first = &d.iterates[0];
            for k in [first.k1, first.k2, first.k3, first.k4] {
                assert!(k <= m, "trial {trial}: K_(j,1) = {k} > m = {m}");
            }
            for it in &d.iterates {
                for k in [it.k1, it.k2, it.k3, it.k4] {
                    assert!(k <= 2.0 * m + 1e-6 * m);
                }
                assert!(it.min_u >= -POSITIVITY_TOL);
                assert!(it.min_v >= -POSITIVITY_TOL);
            }
        }
    }

    #[test]
    fn deltas_decay_geometrically() {
        let p = preset();
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u0 = Field::random_uniform(g, 0.0, 1.0, &mut rng).unwrap();
        let v0 = Field::random_uniform(g, 0.0, 1.0, &mut rng).unwrap();
        let sol = picard_solve(&u0, &v0, &p, &PicardConfig::default()).unwrap();
        let deltas = &sol.diagnostics.deltas;
        assert!(deltas.len() >= 3, "iteration converged suspiciously fast: {deltas:?}");
        for w in deltas.windows(2).skip(2) {
            if w[0] > 1e-13 && w[1] > 1e-13 {
                assert!(
                    w[1] / w[0] <= 0.8,
                    "ratio {} too large in {deltas:?}",
                    w[1] / w[0]
                );
            }
        }
    }

    #[test]
    fn iterates_keep_the_q_floor_for_data_above_q() {
        // With data in [q, ~u_bar] the forcing minus eta*q is nonnegative,
        // so every iterate stays above q (up to the positivity slack).
        let p = preset();
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u0 = Field::random_uniform(g, p.q, 0.95, &mut rng).unwrap();
        let v0 = Field::random_uniform(g, p.q, 0.95, &mut rng).unwrap();
        let sol = picard_solve(&u0, &v0, &p, &PicardConfig::default()).unwrap();
        for s in sol.trajectory.states() {
            assert!(s.u.min_value() >= p.q - POSITIVITY_TOL);
            assert!(s.v.min_value() >= p.q - POSITIVITY_TOL);
        }
    }

    #[test]
    fn duhamel_v_zero_source_decays() {
        let p = preset();
        let g = grid();
        let c = 0.8;
        let v0 = Field::constant(g, c).unwrap();
        let zero = Field::constant(g, 0.0).unwrap();
        let states = (0..=8)
            .map(|i| StatePair::new(zero.clone(), zero.clone(), i as f64 * 0.125).unwrap())
            .collect();
        let traj = Trajectory::new(states, Provenance::Picard).unwrap();
        let pc = PropagatorConfig::kernel();
        for t in [0.0, 0.25, 1.0] {
            let out = duhamel_v(&v0, &traj, t, &p, 4, &pc).unwrap();
            let expected = c * (-t).exp();
            assert!((out.values()[0] - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn duhamel_v_constant_source_is_fixed_point() {
        // u = v0 = c: the true solution is identically c; trapezoid of the
        // exponential introduces only the documented quadrature error.
        let p = preset();
        let g = grid();
        let c = 0.6;
        let cf = Field::constant(g, c).unwrap();
        let states = (0..=16)
            .map(|i| StatePair::new(cf.clone(), cf.clone(), i as f64 * 0.0625).unwrap())
            .collect();
        let traj = Trajectory::new(states, Provenance::Picard).unwrap();
        let pc = PropagatorConfig::kernel();
        let t = 1.0;
        let quad = 8usize;
        let ds = 0.0625 / quad as f64;
        let quad_tol = c * t * ds * ds; // comfortably above t*ds^2/12
        let out = duhamel_v(&cf, &traj, t, &p, quad, &pc).unwrap();
        assert!(
            (out.values()[0] - c).abs() <= quad_tol,
            "|{} - {c}| > {quad_tol}",
            out.values()[0]
        );
    }

    #[test]
    fn duhamel_v_unit_source_saturates() {
        let p = preset();
        let g = grid();
        let one = Field::constant(g, 1.0).unwrap();
        let zero = Field::constant(g, 0.0).unwrap();
        let states = (0..=16)
            .map(|i| StatePair::new(one.clone(), one.clone(), i as f64 * 0.0625).unwrap())
            .collect();
        let traj = Trajectory::new(states, Provenance::Picard).unwrap();
        let pc = PropagatorConfig::kernel();
        let t = 1.0;
        let out = duhamel_v(&zero, &traj, t, &p, 8, &pc).unwrap();
        let expected = 1.0 - (-t).exp();
        assert!((out.values()[0] - expected).abs() < 1e-5);
    }

    #[test]
    fn duhamel_v_norm_bound() {
        let p = preset();
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let v0 = Field::random_uniform(g, 0.0, 1.0, &mut rng).unwrap();
        let states = (0..=8)
            .map(|i| {
                StatePair::new(
                    Field::random_uniform(g, 0.0, 2.0, &mut rng).unwrap(),
                    Field::constant(g, 0.0).unwrap(),
                    i as f64 * 0.125,
                )
                .unwrap()
            })
            .collect();
        let traj = Trajectory::new(states, Provenance::Picard).unwrap();
        let max_u = traj
            .states()
            .iter()
            .map(|s| s.u.sup_norm())
            .fold(0.0f64, f64::max);
        let pc = PropagatorConfig::kernel();
        let t = 1.0;
        let ds = 0.125 / 4.0;
        let quad_tol = max_u * t * ds * ds;
        let out = duhamel_v(&v0, &traj, t, &p, 4, &pc).unwrap();
        assert!(out.sup_norm() <= v0.sup_norm() + t * max_u + quad_tol);
    }

    #[test]
    fn duhamel_v_rejects_out_of_span() {
        let p = preset();
        let g = grid();
        let zero = Field::constant(g, 0.0).unwrap();
        let states = vec![
            StatePair::new(zero.clone(), zero.clone(), 0.0).unwrap(),
            StatePair::new(zero.clone(), zero.clone(), 0.5).unwrap(),
        ];
        let traj = Trajectory::new(states, Provenance::Picard).unwrap();
        assert!(duhamel_v(&zero, &traj, 1.0, &p, 4, &PropagatorConfig::kernel()).is_err());
    }

    #[test]
    fn uniqueness_residual_identical_configs_is_zero() {
        let p = preset();
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u0 = Field::random_uniform(g, 0.0, 1.0, &mut rng).unwrap();
        let v0 = Field::random_uniform(g, 0.0, 1.0, &mut rng).unwrap();
        let r = uniqueness_residual(&u0, &v0, &p, &PicardConfig::default(), 0.0, 1).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn uniqueness_residual_small_under_perturbation() {
        let p = preset();
        let g = grid();
        let ut = model::u_tilde(&p).unwrap();
        let f = Field::constant(g, ut).unwrap();
        let cfg = PicardConfig::default();
        let r = uniqueness_residual(&f, &f, &p, &cfg, 0.1, 1).unwrap();
        assert!(r <= 10.0 * cfg.tol, "residual {r}");
    }

    #[test]
    fn uniqueness_residual_shrinks_under_refinement() {
        // The discretization signal on the short horizon is small, so the
        // self-convergence study runs at coarse sampling where it sits well
        // above the floating-point floor.
        let p = preset();
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u0 = Field::random_uniform(g, 0.1, 1.0, &mut rng).unwrap();
        let v0 = Field::random_uniform(g, 0.1, 1.0, &mut rng).unwrap();
        let coarse = PicardConfig {
            tol: 1e-12,
            max_iter: 40,
            samples: 8,
            quad_substeps: 1,
            ..PicardConfig::default()
        };
        let r1 = uniqueness_residual(&u0, &v0, &p, &coarse, 0.0, 2).unwrap();
        let finer = PicardConfig { samples: 16, ..coarse };
        let r2 = uniqueness_residual(&u0, &v0, &p, &finer, 0.0, 2).unwrap();
        assert!(r1 > 0.0 && r2 > 0.0, "residuals degenerate: {r1}, {r2}");
        assert!(r1 / r2 >= 2.0, "refinement ratio {} too small", r1 / r2);
    }

    #[test]
    fn extend_reaches_the_requested_horizon() {
        let p = preset();
        let g = grid();
        let ut = model::u_tilde(&p).unwrap();
        let f = Field::constant(g, ut).unwrap();
        let cfg = PicardConfig {
            samples: 4,
            quad_substeps: 1,
            ..PicardConfig::default()
        };
        let traj = extend(&f, &f, &p, 0.002, &cfg, 64).unwrap();
        assert!((traj.end_time() - 0.002).abs() < 1e-12);
        for s in traj.states() {
            assert!((s.u.sup_norm() - ut).abs() < 1e-9);
        }
    }
}
