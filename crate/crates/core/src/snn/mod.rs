//! Integer leaky integrate-and-fire network emulation.

mod network;
mod processor;

pub use network::{
    IoMap, Network, NetworkError, Neuron, NeuronId, Role, Synapse, Violation, DELAY_RANGE,
    FORMAT_VERSION, LEAK_CHOICES, NUM_INPUTS, NUM_OUTPUTS, THRESHOLD_RANGE, WEIGHT_RANGE,
};
pub use processor::{Processor, ProcessorError, CHARGE_FLOOR};
