//! Scalar ODE integrators: classic RK4 for the comparison legs and an
//! adaptive Cash-Karp pair used as an independent reference for spatially
//! uniform dynamics.

use crate::error::{Error, Result};

/// One classic fourth-order Runge-Kutta step for `y' = f(t, y)`.
pub fn rk4_step(f: &mut impl FnMut(f64, f64) -> Result<f64>, t: f64, y: f64, h: f64) -> Result<f64> {
    let k1 = f(t, y)?;
    let k2 = f(t + h / 2.0, y + h * k1 / 2.0)?;
    let k3 = f(t + h / 2.0, y + h * k2 / 2.0)?;
    let k4 = f(t + h, y + h * k3)?;
    Ok(y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0)
}

/// Fixed-step RK4 from `t0` to `t1`.
pub fn rk4_integrate(
    mut f: impl FnMut(f64, f64) -> Result<f64>,
    t0: f64,
    t1: f64,
    y0: f64,
    step: f64,
) -> Result<f64> {
    if t1 < t0 {
        return Err(Error::InvalidParameter(format!("rk4: t1 = {t1} < t0 = {t0}")));
    }
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let n = (span / step).ceil().max(1.0) as usize;
    let h = span / n as f64;
    let mut y = y0;
    for i in 0..n {
        y = rk4_step(&mut f, t0 + i as f64 * h, y, h)?;
    }
    Ok(y)
}

/// Cash-Karp 4(5) coefficients.
const CK_A: [f64; 5] = [1.0 / 5.0, 3.0 / 10.0, 3.0 / 5.0, 1.0, 7.0 / 8.0];
const CK_B: [[f64; 5]; 5] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
    [3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0, 0.0, 0.0],
    [-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0, 0.0],
    [
        1631.0 / 55296.0,
        175.0 / 512.0,
        575.0 / 13824.0,
        44275.0 / 110592.0,
        253.0 / 4096.0,
    ],
];
const CK_C5: [f64; 6] = [37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0];
const CK_C4: [f64; 6] = [
    2825.0 / 27648.0,
    0.0,
    18575.0 / 48384.0,
    13525.0 / 55296.0,
    277.0 / 14336.0,
    1.0 / 4.0,
];

/// Adaptive Cash-Karp integration of a small autonomous-in-form system
/// `y' = f(t, y)`. Error-controlled to `tol` per unit step; intended as a
/// high-accuracy reference, not a performance integrator.
pub fn rk45_integrate<const N: usize>(
    mut f: impl FnMut(f64, [f64; N]) -> Result<[f64; N]>,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    tol: f64,
) -> Result<[f64; N]> {
    if t1 < t0 {
        return Err(Error::InvalidParameter(format!("rk45: t1 = {t1} < t0 = {t0}")));
    }
    let mut t = t0;
    let mut y = y0;
    let mut h = ((t1 - t0) / 100.0).max(1e-12);
    let mut stalls = 0usize;
    while t < t1 {
        h = h.min(t1 - t);
        let mut k = [[0.0; N]; 6];
        k[0] = f(t, y)?;
        for s in 0..5 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                for i in 0..N {
                    ys[i] += h * CK_B[s][j] * kj[i];
                }
            }
            k[s + 1] = f(t + CK_A[s] * h, ys)?;
        }
        let mut y5 = y;
        let mut y4 = y;
        for (j, kj) in k.iter().enumerate() {
            for i in 0..N {
                y5[i] += h * CK_C5[j] * kj[i];
                y4[i] += h * CK_C4[j] * kj[i];
            }
        }
        let mut err = 0.0f64;
        let mut scale = 1.0f64;
        for i in 0..N {
            err = err.max((y5[i] - y4[i]).abs());
            scale = scale.max(y[i].abs());
        }
        let target = tol * scale.max(1.0);
        if err <= target || h <= 1e-14 {
            t += h;
            y = y5;
            stalls = 0;
        } else {
            stalls += 1;
            if stalls > 200 {
                return Err(Error::InvalidParameter(
                    "rk45 step control stalled; rhs may be non-smooth".into(),
                ));
            }
        }
        let factor = if err > 0.0 {
            0.9 * (target / err).powf(0.2)
        } else {
            4.0
        };
        h *= factor.clamp(0.2, 4.0);
    }
    Ok(y)
}
