use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

pub const THRESHOLD_RANGE: (i32, i32) = (0, 127);
pub const WEIGHT_RANGE: (i32, i32) = (-127, 127);
pub const DELAY_RANGE: (u32, u32) = (0, 255);
pub const LEAK_CHOICES: [u32; 5] = [1, 2, 4, 8, 16];
pub const NUM_INPUTS: usize = 2;
pub const NUM_OUTPUTS: usize = 4;

pub type NeuronId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Neuron {
    pub id: NeuronId,
    pub threshold: i32,
    /// Leak time constant in cycles; `None` disables leak.
    pub leak_tc: Option<u32>,
    pub axonal_delay: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Synapse {
    pub from: NeuronId,
    pub to: NeuronId,
    pub weight: i32,
    pub delay: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoMap {
    pub inputs: Vec<NeuronId>,
    pub outputs: Vec<NeuronId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Input,
    Hidden,
    Output,
}

/// A spiking network genome: neurons, delayed synapses and the I/O binding.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub version: u32,
    pub neurons: Vec<Neuron>,
    pub synapses: Vec<Synapse>,
    pub io: IoMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub subject: String,
    pub problem: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.problem)
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("network parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid network: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Network {
    /// Two inputs (ids 0, 1) and four outputs (ids 2..=5), no synapses.
    pub fn minimal() -> Self {
        let neurons = (0..6)
            .map(|id| Neuron {
                id,
                threshold: 1,
                leak_tc: None,
                axonal_delay: 0,
            })
            .collect();
        Self {
            version: FORMAT_VERSION,
            neurons,
            synapses: Vec::new(),
            io: IoMap {
                inputs: vec![0, 1],
                outputs: vec![2, 3, 4, 5],
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let net: Network = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn neuron_count(&self) -> usize {
        self.neurons.len()
    }

    pub fn synapse_count(&self) -> usize {
        self.synapses.len()
    }

    /// Neurons plus synapses, the quantity the size penalty charges for.
    pub fn size(&self) -> usize {
        self.neurons.len() + self.synapses.len()
    }

    pub fn role(&self, id: NeuronId) -> Option<Role> {
        if self.io.inputs.contains(&id) {
            Some(Role::Input)
        } else if self.io.outputs.contains(&id) {
            Some(Role::Output)
        } else if self.neurons.iter().any(|n| n.id == id) {
            Some(Role::Hidden)
        } else {
            None
        }
    }

    pub fn neuron(&self, id: NeuronId) -> Option<&Neuron> {
        self.neurons.iter().find(|n| n.id == id)
    }

    pub fn is_io(&self, id: NeuronId) -> bool {
        self.io.inputs.contains(&id) || self.io.outputs.contains(&id)
    }

    pub fn next_neuron_id(&self) -> NeuronId {
        self.neurons.iter().map(|n| n.id + 1).max().unwrap_or(0)
    }

    pub fn has_synapse(&self, from: NeuronId, to: NeuronId) -> bool {
        self.synapses.iter().any(|s| s.from == from && s.to == to)
    }

    /// Collects every range, structure and reference violation.
    pub fn validate(&self) -> Result<(), NetworkError> {
        let mut out = Vec::new();
        let mut push = |subject: String, problem: String| out.push(Violation { subject, problem });

        if self.version != FORMAT_VERSION {
            push(
                "network".into(),
                format!("unsupported version {} (expected {FORMAT_VERSION})", self.version),
            );
        }

        let mut ids = HashSet::new();
        for n in &self.neurons {
            let subject = format!("neuron {}", n.id);
            if !ids.insert(n.id) {
                push(subject.clone(), "duplicate id".into());
            }
            if n.threshold < THRESHOLD_RANGE.0 || n.threshold > THRESHOLD_RANGE.1 {
                push(
                    subject.clone(),
                    format!(
                        "threshold {} outside [{}, {}]",
                        n.threshold, THRESHOLD_RANGE.0, THRESHOLD_RANGE.1
                    ),
                );
            }
            if let Some(tc) = n.leak_tc {
                if !LEAK_CHOICES.contains(&tc) {
                    push(subject.clone(), format!("leak_tc {tc} not one of none/1/2/4/8/16"));
                }
            }
            if n.axonal_delay != 0 {
                push(subject, format!("axonal_delay {} must be 0", n.axonal_delay));
            }
        }

        let mut pairs = HashSet::new();
        for s in &self.synapses {
            let subject = format!("synapse {}->{}", s.from, s.to);
            if !ids.contains(&s.from) {
                push(subject.clone(), format!("unknown source neuron {}", s.from));
            }
            if !ids.contains(&s.to) {
                push(subject.clone(), format!("unknown target neuron {}", s.to));
            }
            if !pairs.insert((s.from, s.to)) {
                push(subject.clone(), "duplicate synapse".into());
            }
            if s.weight < WEIGHT_RANGE.0 || s.weight > WEIGHT_RANGE.1 {
                push(
                    subject.clone(),
                    format!(
                        "weight {} outside [{}, {}]",
                        s.weight, WEIGHT_RANGE.0, WEIGHT_RANGE.1
                    ),
                );
            }
            if s.delay > DELAY_RANGE.1 {
                push(
                    subject,
                    format!("delay {} outside [{}, {}]", s.delay, DELAY_RANGE.0, DELAY_RANGE.1),
                );
            }
        }

        if self.io.inputs.len() != NUM_INPUTS {
            push(
                "io".into(),
                format!("expected {NUM_INPUTS} inputs, found {}", self.io.inputs.len()),
            );
        }
        if self.io.outputs.len() != NUM_OUTPUTS {
            push(
                "io".into(),
                format!("expected {NUM_OUTPUTS} outputs, found {}", self.io.outputs.len()),
            );
        }
        let mut io_seen = HashMap::new();
        for (kind, id) in self
            .io
            .inputs
            .iter()
            .map(|i| ("input", i))
            .chain(self.io.outputs.iter().map(|o| ("output", o)))
        {
            if !ids.contains(id) {
                push("io".into(), format!("{kind} {id} is not a neuron"));
            }
            if let Some(prev) = io_seen.insert(*id, kind) {
                push("io".into(), format!("neuron {id} bound as both {prev} and {kind}"));
            }
        }

        if out.is_empty() {
            Ok(())
        } else {
            Err(NetworkError::Invalid(out))
        }
    }
}
