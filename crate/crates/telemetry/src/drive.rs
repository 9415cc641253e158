//! The live simulation loop behind the service.

use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use arachne_core::command::ScriptEntry;
use arachne_core::sim::{Simulation, TickRecord};

use crate::publisher::Publisher;
use crate::server::{Hub, Inbound};

#[derive(Debug, Clone, Default)]
pub struct DriveOptions {
    /// Pace simulated time against the wall clock.
    pub throttle: bool,
    /// Stop after this many ticks; run until `stop` is raised otherwise.
    pub max_ticks: Option<u64>,
    /// Commands applied at their simulated time, before network commands.
    pub script: Vec<ScriptEntry>,
}

/// Runs the simulation, applying inbound commands between ticks and
/// publishing after each one. Returns the number of ticks run.
pub fn drive(
    sim: &mut Simulation,
    hub: &Hub,
    opts: &DriveOptions,
    stop: &AtomicBool,
    mut on_tick: impl FnMut(&TickRecord),
) -> u64 {
    let mut publisher = Publisher::new();
    let mut next = 0;
    let mut ticks = 0;
    let started = Instant::now();
    let t0 = sim.time();
    while !stop.load(Ordering::SeqCst) && opts.max_ticks.is_none_or(|m| ticks < m) {
        while next < opts.script.len() && opts.script[next].0 <= sim.time() + 1e-9 {
            sim.apply_command(&opts.script[next].1);
            next += 1;
        }
        for item in hub.drain_inbound() {
            match item {
                Inbound::Command(cmd) => {
                    sim.apply_command(&cmd);
                }
                Inbound::Malformed(detail) => {
                    sim.reject(detail);
                }
            }
        }
        let record = sim.tick();
        ticks += 1;
        hub.broadcast(&publisher.after_tick(sim, &record));
        on_tick(&record);
        if opts.throttle {
            let due = started + Duration::from_secs_f64(sim.time() - t0);
            let now = Instant::now();
            if due > now {
                thread::sleep(due - now);
            }
        }
    }
    ticks
}
