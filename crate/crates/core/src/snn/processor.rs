//! Cycle-stepped leaky integrate-and-fire processor with integer state.
//!
//! Each cycle runs four phases:
//!
//! 1. residual charge leaks toward zero, `q -= ceil(|q| / tc) * sign(q)`
//!    per elapsed cycle;
//! 2. spikes due this cycle are summed into their targets, and the result is
//!    floored at `-127`;
//! 3. every neuron that received charge this cycle and holds
//!    `charge >= threshold` fires once, resets to zero and schedules
//!    `weight` onto each outgoing synapse for cycle `now + delay + 1`;
//! 4. output fires are tallied while the counting window is open.
//!
//! Neurons that receive nothing are not visited, so leak is applied lazily
//! when a neuron is next touched. Pending spikes live in a ring of per-cycle
//! charge accumulators with a bitset of the neurons they target.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use super::network::{Network, NetworkError, NeuronId, NUM_OUTPUTS};

/// Most negative charge a neuron can hold.
pub const CHARGE_FLOOR: i32 = -127;
/// Scheduling horizon in cycles; must exceed the largest synaptic delay + 1.
const WHEEL: usize = 512;
const WORD: usize = 64;
const NEVER: u64 = u64::MAX;
const NO_OUTPUT: u8 = u8::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProcessorError {
    #[error("neuron {0} is not an input neuron")]
    NotAnInput(NeuronId),
    #[error("cannot schedule at cycle {at} (clock is at {now}, horizon {horizon})")]
    OutOfSchedule { at: u64, now: u64, horizon: u64 },
}

#[derive(Debug, Clone, Copy)]
struct Params {
    threshold: i32,
    /// log2 of the leak time constant.
    leak: Option<u32>,
    edge_start: u32,
    edge_end: u32,
    output_slot: u8,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    to: u32,
    weight: i32,
    /// Synaptic delay plus the one-cycle transit.
    lag: u32,
}

#[derive(Debug)]
struct Compiled {
    ids: Vec<NeuronId>,
    params: Vec<Params>,
    edges: Vec<Edge>,
    input_index: HashMap<NeuronId, u32>,
    /// Neuron index of each bound input slot.
    input_slots: Vec<u32>,
}

#[derive(Debug, Clone, Copy)]
struct State {
    charge: i32,
    /// Cycle at which `charge` was last settled.
    settled_at: u64,
    last_fired: u64,
}

const FRESH: State = State {
    charge: 0,
    settled_at: 0,
    last_fired: NEVER,
};

/// Runtime state of one emulated processor loaded with a network.
#[derive(Debug, Clone)]
pub struct Processor {
    net: Arc<Compiled>,
    state: Vec<State>,
    /// `WHEEL` slots of `n` pending charge sums.
    pending: Vec<i32>,
    /// `WHEEL` slots of `words` bitset words marking neurons with a delivery.
    marks: Vec<u64>,
    words: usize,
    cycle: u64,
    counting: bool,
    fire_counts: [u32; NUM_OUTPUTS],
}

/// `q - sign(q) * ceil(|q| / 2^shift)`; time constants are powers of two.
fn leak_once(q: i32, shift: u32) -> i32 {
    let m = q.abs();
    let step = (m + (1 << shift) - 1) >> shift;
    q - q.signum() * step
}

/// Applies `cycles` leak steps. `shift` is `None` for non-leaking neurons.
fn leak_for(mut q: i32, shift: Option<u32>, cycles: u64) -> i32 {
    let Some(shift) = shift else {
        return q;
    };
    // Every step shrinks |q| by at least one.
    if cycles > q.unsigned_abs() as u64 {
        return 0;
    }
    for _ in 0..cycles {
        if q == 0 {
            break;
        }
        q = leak_once(q, shift);
    }
    q
}

impl Processor {
    /// Validates the network and builds a processor at cycle 0 with zero charge.
    pub fn load(network: &Network) -> Result<Self, NetworkError> {
        network.validate()?;
        let index: HashMap<NeuronId, u32> = network
            .neurons
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id, i as u32))
            .collect();
        let n = network.neurons.len();
        let mut out_edges: Vec<Vec<Edge>> = vec![Vec::new(); n];
        for s in &network.synapses {
            out_edges[index[&s.from] as usize].push(Edge {
                to: index[&s.to],
                weight: s.weight,
                lag: s.delay + 1,
            });
        }
        let mut params: Vec<Params> = network
            .neurons
            .iter()
            .map(|nr| Params {
                threshold: nr.threshold,
                leak: nr.leak_tc.map(u32::trailing_zeros),
                edge_start: 0,
                edge_end: 0,
                output_slot: NO_OUTPUT,
            })
            .collect();
        let mut edges = Vec::with_capacity(network.synapses.len());
        for (p, e) in params.iter_mut().zip(out_edges) {
            p.edge_start = edges.len() as u32;
            edges.extend(e);
            p.edge_end = edges.len() as u32;
        }
        for (slot, id) in network.io.outputs.iter().enumerate() {
            params[index[id] as usize].output_slot = slot as u8;
        }
        let compiled = Compiled {
            ids: network.neurons.iter().map(|n| n.id).collect(),
            params,
            edges,
            input_slots: network.io.inputs.iter().map(|id| index[id]).collect(),
            input_index: network.io.inputs.iter().map(|id| (*id, index[id])).collect(),
        };
        let words = n.div_ceil(WORD);
        Ok(Self {
            net: Arc::new(compiled),
            state: vec![FRESH; n],
            pending: vec![0; n * WHEEL],
            marks: vec![0; words * WHEEL],
            words,
            cycle: 0,
            counting: false,
            fire_counts: [0; NUM_OUTPUTS],
        })
    }

    /// Next cycle to execute.
    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn neuron_count(&self) -> usize {
        self.state.len()
    }

    fn index_of(&self, id: NeuronId) -> Option<usize> {
        self.net.ids.iter().position(|&x| x == id)
    }

    /// Charge of neuron `id` as of the end of the last executed cycle.
    pub fn charge(&self, id: NeuronId) -> Option<i32> {
        let i = self.index_of(id)?;
        let s = self.state[i];
        let done = self.cycle.saturating_sub(1);
        let elapsed = done.saturating_sub(s.settled_at);
        Some(leak_for(s.charge, self.net.params[i].leak, elapsed))
    }

    /// Whether neuron `id` fired during the last executed cycle.
    pub fn fired_last_cycle(&self, id: NeuronId) -> bool {
        match self.index_of(id) {
            Some(i) => self.cycle > 0 && self.state[i].last_fired == self.cycle - 1,
            None => false,
        }
    }

    /// Schedules `value` onto input neuron `input` at absolute cycle `at`.
    pub fn inject(&mut self, input: NeuronId, value: i32, at: u64) -> Result<(), ProcessorError> {
        let idx = *self
            .net
            .input_index
            .get(&input)
            .ok_or(ProcessorError::NotAnInput(input))?;
        self.schedule(idx as usize, value, at)
    }

    /// Injects into the `slot`-th bound input neuron.
    pub fn inject_slot(&mut self, slot: usize, value: i32, at: u64) -> Result<(), ProcessorError> {
        match self.net.input_slots.get(slot) {
            Some(&idx) => self.schedule(idx as usize, value, at),
            None => Err(ProcessorError::NotAnInput(slot as NeuronId)),
        }
    }

    fn schedule(&mut self, i: usize, value: i32, at: u64) -> Result<(), ProcessorError> {
        if at < self.cycle || at >= self.cycle + WHEEL as u64 {
            return Err(ProcessorError::OutOfSchedule {
                at,
                now: self.cycle,
                horizon: WHEEL as u64,
            });
        }
        let slot = (at as usize) % WHEEL;
        let n = self.state.len();
        let cell = &mut self.pending[slot * n + i];
        *cell = cell.saturating_add(value);
        self.marks[slot * self.words + i / WORD] |= 1 << (i % WORD);
        Ok(())
    }

    pub fn set_counting(&mut self, on: bool) {
        self.counting = on;
    }

    pub fn run(&mut self, cycles: u64) {
        for _ in 0..cycles {
            self.step(&mut |_, _| {});
        }
    }

    /// Runs `cycles` cycles reporting every `(cycle, neuron id)` fire.
    /// Fires within one cycle are reported in ascending neuron-index order.
    pub fn run_traced(&mut self, cycles: u64, mut on_fire: impl FnMut(u64, NeuronId)) {
        for _ in 0..cycles {
            self.step(&mut on_fire);
        }
    }

    fn step<F: FnMut(u64, NeuronId)>(&mut self, on_fire: &mut F) {
        let now = self.cycle;
        let slot = (now as usize) % WHEEL;
        let n = self.state.len();
        let words = self.words;
        let net: &Compiled = &self.net;
        for w in 0..words {
            let mut bits = std::mem::take(&mut self.marks[slot * words + w]);
            while bits != 0 {
                let i = w * WORD + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let incoming = std::mem::take(&mut self.pending[slot * n + i]);
                let p = net.params[i];
                let st = &mut self.state[i];
                let elapsed = now - st.settled_at;
                let leaked = if elapsed == 0 {
                    st.charge
                } else {
                    leak_for(st.charge, p.leak, elapsed)
                };
                let mut q = leaked.saturating_add(incoming).max(CHARGE_FLOOR);
                st.settled_at = now;
                if q >= p.threshold {
                    q = 0;
                    st.last_fired = now;
                    on_fire(now, net.ids[i]);
                    for e in &net.edges[p.edge_start as usize..p.edge_end as usize] {
                        let at = (slot + e.lag as usize) % WHEEL;
                        let to = e.to as usize;
                        let cell = &mut self.pending[at * n + to];
                        *cell = cell.saturating_add(e.weight);
                        self.marks[at * words + to / WORD] |= 1 << (to % WORD);
                    }
                    if self.counting && p.output_slot != NO_OUTPUT {
                        self.fire_counts[p.output_slot as usize] += 1;
                    }
                }
                self.state[i].charge = q;
            }
        }
        self.cycle += 1;
    }

    pub fn fire_counts(&self) -> [u32; NUM_OUTPUTS] {
        self.fire_counts
    }

    pub fn read_and_reset_counts(&mut self) -> [u32; NUM_OUTPUTS] {
        std::mem::take(&mut self.fire_counts)
    }

    /// Clears all runtime state; the loaded network is kept.
    pub fn reset(&mut self) {
        self.state.fill(FRESH);
        self.pending.fill(0);
        self.marks.fill(0);
        self.cycle = 0;
        self.counting = false;
        self.fire_counts = [0; NUM_OUTPUTS];
    }
}
