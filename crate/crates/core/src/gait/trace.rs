use std::fmt::Write as _;

use super::{foot_trajectory, GaitError, GaitPlan, LegId};
use crate::kinematics::{inverse_kinematics, JointAngles, LegGeometry};

/// Joint angles of all four legs sampled over whole gait cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrace {
    pub samples_per_phase: usize,
    pub cycle_duration: f64,
    pub times: Vec<f64>,
    /// `angles[sample][leg]`
    pub angles: Vec<[JointAngles; 4]>,
}

/// Samples one cycle of `plan` through inverse kinematics.
///
/// Sample `i` of phase `k` sits at phase fraction `i / samples_per_phase`, so
/// the cycle end is left out and repeated cycles tile without duplicates.
pub fn joint_trace(plan: &GaitPlan, g: &LegGeometry, samples_per_phase: usize) -> Result<JointTrace, GaitError> {
    if samples_per_phase == 0 {
        return Err(GaitError::InvalidConfig("samples_per_phase must be at least 1".into()));
    }
    let n = 4 * samples_per_phase;
    let mut times = Vec::with_capacity(n);
    let mut angles = Vec::with_capacity(n);
    for phase in 0..4 {
        for i in 0..samples_per_phase {
            let s = i as f64 / samples_per_phase as f64;
            let sample = phase * samples_per_phase + i;
            let mut row = [JointAngles::default(); 4];
            for leg in LegId::ALL {
                let target = foot_trajectory(leg, phase, s, plan);
                row[leg.index()] = inverse_kinematics(g, &target, plan.config.ik_branch)
                    .map_err(|source| GaitError::Ik { leg, sample, source })?;
            }
            times.push((phase as f64 + s) * plan.phase_duration());
            angles.push(row);
        }
    }
    Ok(JointTrace {
        samples_per_phase,
        cycle_duration: plan.cycle_duration(),
        times,
        angles,
    })
}

impl JointTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Tiles a one-cycle trace `cycles` times.
    pub fn repeat(&self, cycles: usize) -> JointTrace {
        let period = self.cycle_duration;
        let mut times = Vec::with_capacity(self.len() * cycles);
        let mut angles = Vec::with_capacity(self.len() * cycles);
        for c in 0..cycles {
            for (t, a) in self.times.iter().zip(&self.angles) {
                times.push(t + c as f64 * period);
                angles.push(*a);
            }
        }
        JointTrace {
            samples_per_phase: self.samples_per_phase,
            cycle_duration: self.cycle_duration,
            times,
            angles,
        }
    }

    /// Column names `L11..L43`: leg number then joint number.
    pub fn column_names() -> Vec<String> {
        LegId::ALL
            .iter()
            .flat_map(|leg| (1..=3).map(move |j| format!("L{}{}", leg.number(), j)))
            .collect()
    }

    /// CSV with a `time_s` column followed by the twelve joints in degrees.
    pub fn to_csv(&self) -> String {
        self.csv_for(&LegId::ALL)
    }

    /// CSV with a `time_s` column followed by the three joints of one leg.
    pub fn leg_csv(&self, leg: LegId) -> String {
        self.csv_for(&[leg])
    }

    fn csv_for(&self, legs: &[LegId]) -> String {
        let mut out = String::from("time_s");
        for leg in legs {
            for j in 1..=3 {
                let _ = write!(out, ",L{}{}", leg.number(), j);
            }
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.angles) {
            let _ = write!(out, "{t:.4}");
            for leg in legs {
                for a in row[leg.index()].as_array() {
                    let _ = write!(out, ",{:.6}", a.to_degrees());
                }
            }
            out.push('\n');
        }
        out
    }
}
