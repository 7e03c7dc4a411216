//! Ordering of the comparison ODEs against the PDE: from uniform data
//! (c*, c*) the scalar legs bound the field extremes on their respective
//! windows, which is the mechanism behind the trap-time chain.

use bz_core::comparison::{trap_chain, Margins};
use bz_core::grid::{Field, GridSpec, StatePair};
use bz_core::model::{self, ModelParams};
use bz_core::ode;
use bz_core::semigroup::PropagatorConfig;
use bz_core::stepper::{self, Scheme, StepperConfig};

/// Scalar ODE carried along the snapshot sequence.
struct Carried {
    t: f64,
    y: f64,
}

impl Carried {
    fn advance(
        &mut self,
        t: f64,
        rhs: impl Fn(f64) -> bz_core::Result<f64>,
        step: f64,
    ) -> f64 {
        if t > self.t {
            self.y = ode::rk4_integrate(|_, y| rhs(y), self.t, t, self.y, step).unwrap();
            self.t = t;
        }
        self.y
    }
}

#[test]
fn scalar_legs_bound_the_pde_trajectory() {
    let p = ModelParams::classic(1.0).unwrap();
    let c_star = p.q / 2.0;
    let m = 1.0;
    let chain = trap_chain(c_star, m, &p, &Margins::default()).unwrap();

    let grid = GridSpec::new_1d(100.0, 128).unwrap();
    let s0 = StatePair::new(
        Field::constant(grid, c_star).unwrap(),
        Field::constant(grid, c_star).unwrap(),
        0.0,
    )
    .unwrap();
    let horizon = chain.t_sharp * 1.02 + 0.1;
    let cfg = StepperConfig::auto(
        Scheme::ImexStrang,
        PropagatorConfig::kernel(),
        &p,
        m,
        horizon,
        1024,
    )
    .unwrap();
    let traj = stepper::simulate(&s0, horizon, &p, &cfg, &mut []).unwrap();

    let tol = 1e-8;
    let logistic = |t: f64| {
        let e = (t / p.epsilon).exp();
        c_star * e / (1.0 - c_star + c_star * e)
    };
    let step = p.epsilon / 400.0;

    // sigma climbs from q after T1 while v <= m; kappa falls from m after
    // T3 while v >= q3. Both stay valid bounds for the rest of the run.
    let mut sigma = Carried { t: chain.t1, y: p.q };
    let mut kappa = Carried { t: chain.t3, y: m };

    let mut checked = [0usize; 5];
    for s in traj.states() {
        let min_u = s.u.min_value();
        let max_u = s.u.max_value();
        let min_v = s.v.min_value();
        let max_v = s.v.max_value();

        // Logistic subsolution of u up to T1.
        if s.time <= chain.t1 {
            let rho = logistic(s.time);
            assert!(min_u >= rho - tol, "t = {}: min u {min_u} below rho {rho}", s.time);
            checked[0] += 1;
        }

        // Frozen-v subsolution of u from T1 on.
        if s.time >= chain.t1 {
            let sig = sigma.advance(s.time, |y| model::rhs_frozen_v(y, m, &p), step);
            assert!(min_u >= sig - tol, "t = {}: min u {min_u} below sigma {sig}", s.time);
            checked[1] += 1;
        }

        // Relaxation subsolution of v between T2 and T3.
        if s.time >= chain.t2 && s.time <= chain.t3 {
            let nu = chain.q2 + (c_star - chain.q2) * (-(s.time - chain.t2)).exp();
            assert!(min_v >= nu - tol, "t = {}: min v {min_v} below nu {nu}", s.time);
            checked[2] += 1;
        }

        // Frozen-v supersolution of u from T3 on.
        if s.time >= chain.t3 {
            let kap = kappa.advance(s.time, |y| model::rhs_frozen_v(y, chain.q3, &p), step);
            assert!(max_u <= kap + tol, "t = {}: max u {max_u} above kappa {kap}", s.time);
            checked[3] += 1;
        }

        // Relaxation supersolution of v from T4 on.
        if s.time >= chain.t4 {
            let mu = chain.u_star + (m - chain.u_star) * (-(s.time - chain.t4)).exp();
            assert!(max_v <= mu + tol, "t = {}: max v {max_v} above mu {mu}", s.time);
            checked[4] += 1;
        }
    }
    // Every leg saw at least one sample.
    assert!(
        checked.iter().all(|&c| c > 0),
        "comparison windows unsampled: {checked:?}"
    );
    println!("comparison legs checked at {checked:?} sample times");
}
