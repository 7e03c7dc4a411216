//! Time-sampled solution storage shared by the two solvers.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, StatePair};
use serde::Serialize;

/// Which solver produced a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Picard,
    ImexEuler,
    ImexStrang,
}

/// Snapshots at strictly increasing sample times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: GridSpec,
    states: Vec<StatePair>,
    provenance: Provenance,
}

impl Trajectory {
    pub fn new(states: Vec<StatePair>, provenance: Provenance) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidParameter("trajectory needs at least one state".into()));
        }
        let grid = states[0].grid();
        for w in states.windows(2) {
            if w[1].time <= w[0].time {
                return Err(Error::InvalidParameter(format!(
                    "sample times must be strictly increasing: {} then {}",
                    w[0].time, w[1].time
                )));
            }
        }
        for s in &states {
            if s.grid() != grid {
                return Err(Error::GridMismatch("trajectory states on mixed grids".into()));
            }
            s.u.check_finite("trajectory", None)?;
            s.v.check_finite("trajectory", None)?;
        }
        Ok(Self { grid, states, provenance })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn states(&self) -> &[StatePair] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn first(&self) -> &StatePair {
        &self.states[0]
    }

    pub fn last(&self) -> &StatePair {
        self.states.last().expect("non-empty by construction")
    }

    pub fn start_time(&self) -> f64 {
        self.first().time
    }

    pub fn end_time(&self) -> f64 {
        self.last().time
    }

    pub fn contains_time(&self, t: f64) -> bool {
        t >= self.start_time() && t <= self.end_time()
    }

    /// Neighbouring sample indices and interpolation weight for time `t`.
    pub(crate) fn bracketing(&self, t: f64) -> Result<(usize, usize, f64)> {
        if !self.contains_time(t) {
            return Err(Error::OutOfSpan {
                t,
                lo: self.start_time(),
                hi: self.end_time(),
            });
        }
        let times: Vec<f64> = self.states.iter().map(|s| s.time).collect();
        let hi_idx = times.partition_point(|&x| x < t).min(times.len() - 1);
        if hi_idx == 0 {
            return Ok((0, 0, 0.0));
        }
        let lo_idx = hi_idx - 1;
        let (t0, t1) = (times[lo_idx], times[hi_idx]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        Ok((lo_idx, hi_idx, w))
    }

    /// Linear interpolation of u between stored samples.
    pub fn u_at(&self, t: f64) -> Result<crate::grid::Field> {
        let (i, j, w) = self.bracketing(t)?;
        lerp(&self.states[i].u, &self.states[j].u, w)
    }

    /// Linear interpolation of v between stored samples.
    pub fn v_at(&self, t: f64) -> Result<crate::grid::Field> {
        let (i, j, w) = self.bracketing(t)?;
        lerp(&self.states[i].v, &self.states[j].v, w)
    }

    /// Per-sample scalar summary used by the envelope export.
    pub fn envelope(&self) -> Vec<EnvelopeRow> {
        self.states
            .iter()
            .map(|s| EnvelopeRow {
                time: s.time,
                min_u: s.u.min_value(),
                max_u: s.u.max_value(),
                min_v: s.v.min_value(),
                max_v: s.v.max_value(),
                grad_u: s.u.grad_sup_norm(),
                grad_v: s.v.grad_sup_norm(),
            })
            .collect()
    }
}

fn lerp(a: &crate::grid::Field, b: &crate::grid::Field, w: f64) -> Result<crate::grid::Field> {
    if w == 0.0 {
        return Ok(a.clone());
    }
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| x + w * (y - x))
        .collect();
    crate::grid::Field::from_values(a.grid(), values)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnvelopeRow {
    pub time: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_v: f64,
    pub grad_u: f64,
    pub grad_v: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Field;

    fn make(times: &[f64]) -> Result<Trajectory> {
        let g = GridSpec::new_1d(10.0, 16).unwrap();
        let states = times
            .iter()
            .map(|&t| {
                StatePair::new(
                    Field::constant(g, t).unwrap(),
                    Field::constant(g, 2.0 * t).unwrap(),
                    t,
                )
                .unwrap()
            })
            .collect();
        Trajectory::new(states, Provenance::ImexStrang)
    }

    #[test]
    fn rejects_non_increasing_times() {
        assert!(make(&[0.0, 1.0, 1.0]).is_err());
        assert!(make(&[0.0, 2.0, 1.0]).is_err());
        assert!(make(&[]).is_err());
    }

    #[test]
    fn interpolation_is_linear_between_samples() {
        let traj = make(&[0.0, 1.0, 2.0]).unwrap();
        let u = traj.u_at(0.25).unwrap();
        assert!((u.values()[0] - 0.25).abs() < 1e-15);
        let v = traj.v_at(1.5).unwrap();
        assert!((v.values()[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_span_query_errors() {
        let traj = make(&[0.0, 1.0]).unwrap();
        assert!(matches!(traj.u_at(1.5), Err(Error::OutOfSpan { .. })));
    }
}
