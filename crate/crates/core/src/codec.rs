//! Sensor bit to spike train, and output spike counts to `(v, ω)`.
//!
//! One simulator tick spans 13 processor cycles: 3 propagation cycles with
//! counting disabled followed by 10 counting cycles. The sensor bit selects
//! which of the two input neurons receives a full-magnitude spike on every
//! cycle of the tick. Charge and in-flight spikes carry across ticks.

use thiserror::Error;

use crate::sim::WorldConfig;
use crate::snn::{Processor, NUM_OUTPUTS};

/// Spike magnitude fed to the active input neuron.
pub const INPUT_MAGNITUDE: i32 = 127;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickSchedule {
    pub propagation_cycles: u64,
    pub counting_cycles: u64,
}

impl TickSchedule {
    pub const DEFAULT: TickSchedule = TickSchedule {
        propagation_cycles: 3,
        counting_cycles: 10,
    };

    pub fn cycles_per_tick(&self) -> u64 {
        self.propagation_cycles + self.counting_cycles
    }
}

impl Default for TickSchedule {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("output {index} fired {count} times in a {window}-cycle window")]
    CountOverflow { index: usize, count: u32, window: u32 },
}

/// One scheduled input spike, relative to the start of the tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stimulus {
    pub input_slot: usize,
    pub value: i32,
    pub cycle_offset: u64,
}

/// One-hot spike schedule for a tick: `h = 0` drives input slot 0, `h = 1`
/// drives slot 1, once per cycle.
pub fn encode(h: bool, schedule: TickSchedule) -> Vec<Stimulus> {
    let input_slot = usize::from(h);
    (0..schedule.cycles_per_tick())
        .map(|cycle_offset| Stimulus {
            input_slot,
            value: INPUT_MAGNITUDE,
            cycle_offset,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedCommand {
    /// Normalized output rates `count / window`.
    pub o: [f64; NUM_OUTPUTS],
    pub v: f64,
    pub omega: f64,
}

/// Maps a signed rate difference in tenths onto the 21-point command grid.
pub fn grid_value(tenths: i32, limit: f64) -> f64 {
    (f64::from(tenths) / 10.0) * limit
}

/// `v = (o₁ − o₂)·v_max`, `ω = (o₃ − o₄)·ω_max` with `o_i = count_i / 10`.
pub fn decode(counts: [u32; NUM_OUTPUTS], config: &WorldConfig) -> Result<DecodedCommand, CodecError> {
    let window = TickSchedule::DEFAULT.counting_cycles as u32;
    if let Some((index, &count)) = counts.iter().enumerate().find(|(_, &c)| c > window) {
        return Err(CodecError::CountOverflow { index, count, window });
    }
    let o = counts.map(|c| f64::from(c) / f64::from(window));
    let dv = counts[0] as i32 - counts[1] as i32;
    let dw = counts[2] as i32 - counts[3] as i32;
    Ok(DecodedCommand {
        o,
        v: grid_value(dv, config.v_max),
        omega: grid_value(dw, config.omega_max),
    })
}

/// Runs one tick of the spiking controller: encode `h`, propagate, count,
/// decode. The returned command is meant for the next simulator tick.
pub fn controller_tick(proc: &mut Processor, h: bool, config: &WorldConfig) -> Result<(f64, f64), CodecError> {
    let schedule = TickSchedule::DEFAULT;
    let start = proc.cycle();
    // Same schedule as `encode`, without the allocation.
    let slot = usize::from(h);
    for offset in 0..schedule.cycles_per_tick() {
        proc.inject_slot(slot, INPUT_MAGNITUDE, start + offset)
            .expect("tick stimuli fit the scheduling horizon");
    }
    proc.set_counting(false);
    proc.run(schedule.propagation_cycles);
    proc.read_and_reset_counts();
    proc.set_counting(true);
    proc.run(schedule.counting_cycles);
    proc.set_counting(false);
    let cmd = decode(proc.read_and_reset_counts(), config)?;
    Ok((cmd.v, cmd.omega))
}
