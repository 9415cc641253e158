//! Turns tick records into the outbound message stream.

use arachne_core::command::Cadence;
use arachne_core::controller::MotionCommand;
use arachne_core::sim::{Simulation, TickRecord};

use crate::message::Payload;

/// Decides what to publish after each tick. Cadence is counted in ticks, so
/// it is exact in simulated time.
#[derive(Debug, Clone, Default)]
pub struct Publisher {
    direction: Option<MotionCommand>,
    smoke: Option<bool>,
}

impl Publisher {
    pub fn new() -> Self {
        Self::default()
    }

    /// Messages for one tick as `(t_sim, payload)`, events first.
    pub fn messages(&mut self, record: &TickRecord, cadence: &Cadence, dt: f64) -> Vec<(f64, Payload)> {
        let mut out = Vec::with_capacity(6);
        let t = record.t;
        let every = |period_s: f64| record.tick.is_multiple_of(Cadence::period_ticks(period_s, dt));
        for e in &record.events {
            out.push((
                e.t_sim,
                Payload::Event {
                    kind: e.kind,
                    detail: e.detail.clone(),
                },
            ));
        }
        if self.direction != Some(record.command) {
            self.direction = Some(record.command);
            out.push((
                t,
                Payload::Direction {
                    direction: record.command,
                },
            ));
        }
        let smoke = record.sensors.smoke;
        if self.smoke != Some(smoke) || every(cadence.smoke_heartbeat_s) {
            self.smoke = Some(smoke);
            out.push((t, Payload::Smoke { detected: smoke }));
        }
        if every(cadence.temperature_period_s) {
            out.push((
                t,
                Payload::Temperature {
                    celsius: record.sensors.temperature,
                },
            ));
        }
        if record.tick.is_multiple_of(u64::from(cadence.pose_decimation)) {
            out.push((
                t,
                Payload::Pose {
                    x: record.pose.x,
                    y: record.pose.y,
                    heading_deg: record.pose.heading_deg,
                },
            ));
        }
        if record.tick.is_multiple_of(u64::from(cadence.joints_decimation)) {
            out.push((
                t,
                Payload::Joints {
                    degrees: record.joints_deg,
                },
            ));
        }
        out
    }

    /// Convenience for a live simulation that has just produced `record`.
    pub fn after_tick(&mut self, sim: &Simulation, record: &TickRecord) -> Vec<(f64, Payload)> {
        self.messages(record, sim.cadence(), sim.config().dt)
    }
}
