//! Scalar comparison ODEs and the trap-time chain that forces solutions
//! with data bounded below by `c_star > 0` into the invariant square
//! `S = (q, u_bar)^2`.
//!
//! The chain runs five legs. A logistic subsolution lifts the u-floor from
//! `c_star` to `q`; a frozen-v subsolution lifts it to `q2 < q1` where `q1`
//! is the first zero of the frozen-v kinetics at level `m`; a linear
//! relaxation lifts the v-floor to `q3 < q2`; a frozen-v supersolution
//! started at `m` drops the u-ceiling to `u_star < u_bar`; and a final
//! relaxation drops the v-ceiling below `u_bar`. Interior thresholds the
//! theory leaves free are picked by configurable margins (midpoints by
//! default).

use crate::error::{Error, Result};
use crate::model::{self, ModelParams};
use crate::ode;
use serde::{Deserialize, Serialize};

/// Time-bisection tolerance for ODE hitting times.
pub const HIT_TOL: f64 = 1e-10;
/// The final relaxation leg stops this fraction of the remaining gap short
/// of the open boundary `u_bar`.
pub const EDGE_EPS: f64 = 1e-6;

/// Interior-choice fractions for the free thresholds.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Margins {
    /// q2 = q + q2 * (q1 - q)
    pub q2: f64,
    /// q3 = q + q3 * (q2 - q)
    pub q3: f64,
    /// u_star = kappa_star + u_star * (u_bar - kappa_star)
    pub u_star: f64,
}

impl Default for Margins {
    fn default() -> Self {
        // Midpoints balance the hitting times: targets close to an
        // asymptote blow the leg up.
        Self { q2: 0.5, q3: 0.5, u_star: 0.5 }
    }
}

impl Margins {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("q2", self.q2), ("q3", self.q3), ("u_star", self.u_star)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "margin {name} must lie in (0, 1), got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Thresholds and cumulative hitting times of the chain (offsets from the
/// moment the floor `c_star` holds).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrapChainResult {
    pub c_star: f64,
    pub m: f64,
    pub u_bar: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub kappa_star: f64,
    pub u_star: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t_sharp: f64,
    pub margins: Margins,
}

/// Time for the logistic flow `rho' = rho(1 - rho)/eps` started at `c_star`
/// to reach `target`, in closed form, cross-checked against the RK4 path.
pub fn logistic_hit_time(c_star: f64, target: f64, p: &ModelParams) -> Result<f64> {
    if !(c_star > 0.0 && c_star <= target && target < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "logistic leg needs 0 < c_star <= target < 1, got c_star = {c_star}, target = {target}"
        )));
    }
    if c_star == target {
        return Ok(0.0);
    }
    let tau = p.epsilon * ((1.0 - c_star) * target / (c_star * (1.0 - target))).ln();
    // The closed form and the generic RK4 hitting time are two independent
    // routes; they must agree.
    let eps = p.epsilon;
    let rk4 = ode_hit_time(
        |y| Ok(y * (1.0 - y) / eps),
        c_star,
        target,
        HitDirection::Up,
        tau * 4.0 + 1.0,
        p,
    )?;
    if (tau - rk4).abs() > 1e-8 * tau.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "logistic closed form {tau:.12e} disagrees with RK4 hit time {rk4:.12e}"
        )));
    }
    Ok(tau)
}

/// Time for `y' = -y + source` started at `y0` to reach `target`, which must
/// lie strictly between `y0` and the asymptote `source`.
pub fn relaxation_hit_time(y0: f64, source: f64, target: f64) -> Result<f64> {
    if target == y0 {
        return Ok(0.0);
    }
    if target == source {
        return Err(Error::EmptyInterval {
            which: "relaxation target equals the asymptote".into(),
            lo: y0,
            hi: source,
        });
    }
    let toward = (source - y0).signum();
    let reachable = (target - y0).signum() == toward && (source - target).signum() == toward;
    if !reachable {
        return Err(Error::InvalidParameter(format!(
            "relaxation target {target} not between y0 = {y0} and source = {source}"
        )));
    }
    Ok(((source - y0) / (source - target)).ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HitDirection {
    Up,
    Down,
}

/// March `y' = rhs(y)` with fixed-step RK4 until `target` is crossed, then
/// bisect the crossing time inside the final step down to [`HIT_TOL`].
pub fn ode_hit_time(
    rhs: impl Fn(f64) -> Result<f64>,
    y0: f64,
    target: f64,
    direction: HitDirection,
    max_t: f64,
    p: &ModelParams,
) -> Result<f64> {
    if y0 == target {
        return Ok(0.0);
    }
    let expected = match direction {
        HitDirection::Up => 1.0,
        HitDirection::Down => -1.0,
    };
    if (target - y0).signum() != expected {
        return Err(Error::InvalidParameter(format!(
            "target {target} is not {direction:?} from y0 = {y0}"
        )));
    }
    let slope0 = rhs(y0)?;
    if slope0.signum() != expected {
        return Err(Error::InvalidParameter(format!(
            "rhs does not push y0 = {y0} toward {target}: slope {slope0:.3e}"
        )));
    }
    let crossed = |y: f64| match direction {
        HitDirection::Up => y >= target,
        HitDirection::Down => y <= target,
    };
    let h = p.epsilon.min(1.0) / 100.0;
    let mut f = |_t: f64, y: f64| rhs(y);
    let mut t = 0.0f64;
    let mut y = y0;
    loop {
        if t >= max_t {
            return Err(Error::HitTimeExceeded { max_t, last_value: y, target });
        }
        let step = h.min(max_t - t);
        let y_next = ode::rk4_step(&mut f, t, y, step)?;
        if crossed(y_next) {
            // Bisect the crossing time within [t, t + step]; one RK4 step
            // from the left endpoint evaluates y at trial times.
            let (mut lo, mut hi) = (0.0f64, step);
            while hi - lo > HIT_TOL {
                let mid = 0.5 * (lo + hi);
                let y_mid = ode::rk4_step(&mut f, t, y, mid)?;
                if crossed(y_mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(t + 0.5 * (lo + hi));
        }
        t += step;
        y = y_next;
    }
}

/// Assemble the full chain for floor `c_star` and data bound `m >= 1`.
pub fn trap_chain(
    c_star: f64,
    m: f64,
    p: &ModelParams,
    margins: &Margins,
) -> Result<TrapChainResult> {
    p.validate()?;
    margins.validate()?;
    if !(c_star > 0.0 && c_star < p.q) {
        return Err(Error::InvalidParameter(format!(
            "c_star must lie in (0, q) = (0, {}), got {c_star}",
            p.q
        )));
    }
    if !(m >= 1.0) {
        return Err(Error::InvalidParameter(format!("m must be >= 1, got {m}")));
    }
    let u_bar = model::u_bar(p)?;

    // Leg 1: logistic subsolution lifts u from c_star to q.
    let t1 = logistic_hit_time(c_star, p.q, p)?;

    // Leg 2: frozen-v subsolution at level m climbs from q toward its first
    // zero q1; stop at the interior target q2.
    let q1 = model::q1_root(m, p)?;
    let q2 = p.q + margins.q2 * (q1 - p.q);
    ensure_interval("q2 in (q, q1)", p.q, q2, q1)?;
    let leg2 = ode_hit_time(
        |s| model::rhs_frozen_v(s, m, p),
        p.q,
        q2,
        HitDirection::Up,
        chain_leg_budget(p),
        p,
    )?;
    let t2 = t1 + leg2;

    // Leg 3: v relaxes toward q2; stop at q3.
    let q3 = p.q + margins.q3 * (q2 - p.q);
    ensure_interval("q3 in (q, q2)", p.q, q3, q2)?;
    let leg3 = relaxation_hit_time(c_star, q2, q3)?;
    let t3 = t2 + leg3;

    // Leg 4: frozen-v supersolution at level q3 drops from m toward its
    // root kappa_star; stop at the interior target u_star.
    let kappa_star = model::kappa_star(q3, p)?;
    if !(kappa_star < u_bar) {
        return Err(Error::EmptyInterval {
            which: "kappa_star below u_bar".into(),
            lo: kappa_star,
            hi: u_bar,
        });
    }
    let u_star = kappa_star + margins.u_star * (u_bar - kappa_star);
    ensure_interval("u_star in (kappa_star, u_bar)", kappa_star, u_star, u_bar)?;
    let leg4 = ode_hit_time(
        |s| model::rhs_frozen_v(s, q3, p),
        m,
        u_star,
        HitDirection::Down,
        chain_leg_budget(p),
        p,
    )?;
    let t4 = t3 + leg4;

    // Leg 5: v relaxes from m toward u_star and must drop below u_bar. The
    // stop target sits EDGE_EPS of the remaining gap above u_star so it is
    // always reachable yet strictly below the open boundary.
    let mu_target = u_bar - EDGE_EPS * (u_bar - u_star);
    ensure_interval("mu target in (u_star, u_bar]", u_star, mu_target, u_bar + f64::EPSILON)?;
    let leg5 = relaxation_hit_time(m, u_star, mu_target)?;
    let t_sharp = t4 + leg5;

    let result = TrapChainResult {
        c_star,
        m,
        u_bar,
        q1,
        q2,
        q3,
        kappa_star,
        u_star,
        t1,
        t2,
        t3,
        t4,
        t_sharp,
        margins: *margins,
    };
    // Ordering invariants; these restate what the construction guarantees.
    debug_assert!(p.q < result.q3 && result.q3 < result.q2 && result.q2 < result.q1);
    debug_assert!(result.t1 <= result.t2 && result.t2 <= result.t3);
    debug_assert!(result.t3 <= result.t4 && result.t4 <= result.t_sharp);
    Ok(result)
}

fn chain_leg_budget(p: &ModelParams) -> f64 {
    // Interior targets are bounded away from the asymptotes, so hitting
    // times are a bounded multiple of the kinetic and relaxation scales.
    1.0e4 * p.epsilon.max(1.0)
}

fn ensure_interval(which: &str, lo: f64, mid: f64, hi: f64) -> Result<()> {
    if lo < mid && mid < hi {
        Ok(())
    } else {
        Err(Error::EmptyInterval { which: which.into(), lo, hi })
    }
}

/// A tightened chain certifying entry into the smaller invariant square
/// `(q_nat, u_nat)^2`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NaturalRegion {
    pub q_nat: f64,
    pub u_nat: f64,
    pub q1: f64,
    pub kappa_bar: f64,
    pub t_natural: f64,
    pub chain: TrapChainResult,
}

/// Remark-style refinement: for `q_nat in [q, q1)` and
/// `u_nat in (kappa_bar, u_bar]` rerun the chain with its interior targets
/// pushed toward `q1` until the supersolution legs certify the tighter box.
pub fn natural_region(
    c_star: f64,
    m: f64,
    p: &ModelParams,
    q_nat: f64,
    u_nat: f64,
    margins: &Margins,
) -> Result<NaturalRegion> {
    let u_bar = model::u_bar(p)?;
    let q1 = model::q1_root(m, p)?;
    let kb = model::kappa_bar(q1, p)?;
    if !(q_nat >= p.q && q_nat < q1) {
        return Err(Error::InvalidParameter(format!(
            "q_nat must lie in [q, q1) = [{}, {q1}), got {q_nat}",
            p.q
        )));
    }
    if !(u_nat > kb && u_nat <= u_bar) {
        return Err(Error::InvalidParameter(format!(
            "u_nat must lie in (kappa_bar, u_bar] = ({kb}, {u_bar}], got {u_nat}"
        )));
    }

    // Tighten q2/q3 toward q1 until the supersolution limit kappa_star(q3)
    // falls below u_nat; it converges to kappa_bar < u_nat as q3 -> q1.
    let floor = q_nat.max(p.q);
    for j in 1..=60 {
        let shrink = 0.5f64.powi(j);
        let q2 = q1 - (q1 - floor) * shrink * 0.5;
        let q3 = q1 - (q1 - floor) * shrink;
        if !(q3 > floor && q3 < q2 && q2 < q1) {
            continue;
        }
        let ks = model::kappa_star(q3, p)?;
        if ks >= u_nat {
            continue;
        }
        // Targets reachable: build the explicit legs.
        let t1 = logistic_hit_time(c_star, p.q, p)?;
        let leg2 = ode_hit_time(
            |s| model::rhs_frozen_v(s, m, p),
            p.q,
            q2,
            HitDirection::Up,
            chain_leg_budget(p),
            p,
        )?;
        let leg3 = relaxation_hit_time(c_star, q2, q3)?;
        let u_star = ks + 0.5 * (u_nat - ks);
        let leg4 = ode_hit_time(
            |s| model::rhs_frozen_v(s, q3, p),
            m,
            u_star,
            HitDirection::Down,
            chain_leg_budget(p),
            p,
        )?;
        let mu_target = u_nat - EDGE_EPS * (u_nat - u_star);
        let leg5 = relaxation_hit_time(m, u_star, mu_target)?;
        let t1c = t1;
        let t2c = t1c + leg2;
        let t3c = t2c + leg3;
        let t4c = t3c + leg4;
        let t_nat = t4c + leg5;
        let chain = TrapChainResult {
            c_star,
            m,
            u_bar,
            q1,
            q2,
            q3,
            kappa_star: ks,
            u_star,
            t1: t1c,
            t2: t2c,
            t3: t3c,
            t4: t4c,
            t_sharp: t_nat,
            margins: *margins,
        };
        return Ok(NaturalRegion {
            q_nat,
            u_nat,
            q1,
            kappa_bar: kb,
            t_natural: t_nat,
            chain,
        });
    }
    Err(Error::EmptyInterval {
        which: "natural region tightening failed to bring kappa_star below u_nat".into(),
        lo: kb,
        hi: u_nat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn preset() -> ModelParams {
        ModelParams::classic(1.0).unwrap()
    }

    #[test]
    fn logistic_hit_time_zero_distance() {
        let p = preset();
        assert_eq!(logistic_hit_time(1e-4, 1e-4, &p).unwrap(), 0.0);
    }

    #[test]
    fn logistic_hit_time_spot_value() {
        // c* = 1e-5 up to q = 2e-4: eps * ln((1-c*) q / (c* (1-q))).
        let p = preset();
        let tau = logistic_hit_time(1e-5, p.q, &p).unwrap();
        let expected = p.epsilon * ((1.0 - 1e-5) * p.q / (1e-5 * (1.0 - p.q))).ln();
        assert_abs_diff_eq!(tau, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(tau, 0.09588, epsilon = 5e-5);
    }

    #[test]
    fn logistic_hit_time_scales_linearly_with_eps() {
        let p1 = preset();
        let p2 = ModelParams::new(2.0 * p1.epsilon, p1.h, p1.q, p1.d).unwrap();
        let t1 = logistic_hit_time(1e-5, 1e-4, &p1).unwrap();
        let t2 = logistic_hit_time(1e-5, 1e-4, &p2).unwrap();
        // Pure time rescaling: exact doubling, bit for bit.
        assert_eq!(t2, 2.0 * t1);
    }

    #[test]
    fn logistic_hit_time_rejects_bad_ordering() {
        let p = preset();
        assert!(logistic_hit_time(2e-4, 1e-5, &p).is_err());
        assert!(logistic_hit_time(0.0, 1e-4, &p).is_err());
    }

    #[test]
    fn relaxation_hit_time_cases() {
        // Upward: y0 = 0.01 -> 0.4 with source 0.5: ln(0.49 / 0.1).
        let tau = relaxation_hit_time(0.01, 0.5, 0.4).unwrap();
        assert_abs_diff_eq!(tau, (0.49f64 / 0.1).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(tau, 1.589, epsilon = 1e-3);
        // Zero distance.
        assert_eq!(relaxation_hit_time(0.3, 0.9, 0.3).unwrap(), 0.0);
        // Downward mirror.
        let down = relaxation_hit_time(1.0, 0.2, 0.5).unwrap();
        assert_abs_diff_eq!(down, (0.8f64 / 0.3).ln(), epsilon = 1e-15);
        // Asymptote never attained.
        assert!(relaxation_hit_time(0.01, 0.5, 0.5).is_err());
        // Target beyond the asymptote.
        assert!(relaxation_hit_time(0.01, 0.5, 0.7).is_err());
    }

    #[test]
    fn ode_hit_time_trivial_and_oracle() {
        let p = preset();
        assert_eq!(
            ode_hit_time(|y| Ok(y), 0.5, 0.5, HitDirection::Up, 1.0, &p).unwrap(),
            0.0
        );
        // Logistic against the closed form.
        let eps = p.epsilon;
        let c = 1e-5;
        let target = 1e-4;
        let tau = ode_hit_time(
            |y| Ok(y * (1.0 - y) / eps),
            c,
            target,
            HitDirection::Up,
            10.0,
            &p,
        )
        .unwrap();
        let exact = eps * ((1.0 - c) * target / (c * (1.0 - target))).ln();
        assert!((tau - exact).abs() < 1e-8, "tau {tau} vs exact {exact}");
    }

    #[test]
    fn ode_hit_time_asymptote_times_out() {
        let p = preset();
        // y' = -y toward 0: never reaches exactly 0.
        let err = ode_hit_time(|y| Ok(-y), 1.0, 0.0, HitDirection::Down, 5.0, &p).unwrap_err();
        match err {
            Error::HitTimeExceeded { last_value, .. } => {
                assert!(last_value > 0.0 && last_value < 0.01)
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn ode_hit_time_rejects_wrong_direction() {
        let p = preset();
        assert!(ode_hit_time(|y| Ok(-y), 0.5, 0.8, HitDirection::Up, 1.0, &p).is_err());
        assert!(ode_hit_time(|y| Ok(y), 0.5, 0.8, HitDirection::Down, 1.0, &p).is_err());
    }

    #[test]
    fn trap_chain_preset_orders_thresholds_and_times() {
        let p = preset();
        let chain = trap_chain(p.q / 2.0, 1.0, &p, &Margins::default()).unwrap();
        assert!(p.q < chain.q3 && chain.q3 < chain.q2 && chain.q2 < chain.q1 && chain.q1 < 1.0);
        assert!(p.q < chain.kappa_star && chain.kappa_star < chain.u_bar);
        assert!(chain.kappa_star < chain.u_star && chain.u_star < chain.u_bar);
        assert!(chain.t1 <= chain.t2);
        assert!(chain.t2 <= chain.t3);
        assert!(chain.t3 <= chain.t4);
        assert!(chain.t4 <= chain.t_sharp);
        println!(
            "chain: q1 = {:.8e}, q2 = {:.8e}, q3 = {:.8e}, kappa* = {:.10}, u* = {:.10}",
            chain.q1, chain.q2, chain.q3, chain.kappa_star, chain.u_star
        );
        println!(
            "times: T1 = {:.4}, T2 = {:.4}, T3 = {:.4}, T4 = {:.4}, T# = {:.4}",
            chain.t1, chain.t2, chain.t3, chain.t4, chain.t_sharp
        );
    }

    #[test]
    fn trap_chain_t1_vanishes_as_floor_approaches_q() {
        let p = preset();
        let near = p.q * (1.0 - 1e-9);
        let chain = trap_chain(near, 1.0, &p, &Margins::default()).unwrap();
        assert!(chain.t1 < 1e-9, "T1 = {}", chain.t1);
    }

    #[test]
    fn trap_chain_t4_grows_with_m() {
        let p = preset();
        let margins = Margins::default();
        let mut last = 0.0;
        for m in [1.0, 1.5, 2.0, 3.0] {
            let chain = trap_chain(p.q / 2.0, m, &p, &margins).unwrap();
            let leg4 = chain.t4 - chain.t3;
            assert!(
                leg4 > last,
                "leg 4 not increasing at m = {m}: {leg4} <= {last}"
            );
            last = leg4;
        }
    }

    #[test]
    fn trap_chain_rejects_bad_inputs() {
        let p = preset();
        assert!(trap_chain(p.q, 1.0, &p, &Margins::default()).is_err());
        assert!(trap_chain(p.q / 2.0, 0.5, &p, &Margins::default()).is_err());
        let bad = Margins { q2: 1.5, ..Margins::default() };
        assert!(trap_chain(p.q / 2.0, 1.0, &p, &bad).is_err());
    }

    #[test]
    fn chain_legs_match_independent_integration() {
        // Leg 2 (frozen-v subsolution) against a brute-force RK4 march with
        // a much smaller step.
        let p = preset();
        let chain = trap_chain(p.q / 2.0, 1.0, &p, &Margins::default()).unwrap();
        let eps = p.epsilon;
        let mut t = 0.0;
        let mut y = p.q;
        let h = eps / 4000.0;
        let mut f = |_t: f64, y: f64| model::rhs_frozen_v(y, 1.0, &p);
        while y < chain.q2 {
            y = crate::ode::rk4_step(&mut f, t, y, h).unwrap();
            t += h;
            assert!(t < 10.0, "subsolution leg runaway");
        }
        let leg2 = chain.t2 - chain.t1;
        assert!(
            (t - leg2).abs() <= h + 1e-8,
            "brute force {t} vs chain {leg2}"
        );
        let _ = eps;
    }

    #[test]
    fn natural_region_validates_and_tightens() {
        let p = preset();
        let q1 = model::q1_root(1.0, &p).unwrap();
        let kb = model::kappa_bar(q1, &p).unwrap();
        let ub = model::u_bar(&p).unwrap();

        // Bounds outside the allowed intervals are rejected.
        assert!(natural_region(p.q / 2.0, 1.0, &p, q1, ub, &Margins::default()).is_err());
        assert!(natural_region(p.q / 2.0, 1.0, &p, p.q, kb, &Margins::default()).is_err());

        let u_nat = kb + 0.9 * (ub - kb);
        let region =
            natural_region(p.q / 2.0, 1.0, &p, p.q, u_nat, &Margins::default()).unwrap();
        assert!(region.t_natural.is_finite() && region.t_natural > 0.0);
        assert!(region.chain.kappa_star < u_nat);
        // The tightened square nests inside S.
        assert!(region.q_nat >= p.q && region.u_nat <= ub);
    }
}
