//! Symbolic and spiking controllers behind one `h -> (v, ω)` contract.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{self, CodecError};
use crate::sim::WorldConfig;
use crate::snn::{Network, NetworkError, Processor};

/// The four commands of the binary sensing-to-action controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolicParams {
    /// Forward speed while the sensor is on.
    pub v_a: f64,
    /// Forward speed while the sensor is off.
    pub v_b: f64,
    pub omega_a: f64,
    pub omega_b: f64,
}

impl SymbolicParams {
    pub fn next(&self, h: bool) -> (f64, f64) {
        if h {
            (self.v_a, self.omega_a)
        } else {
            (self.v_b, self.omega_b)
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ControllerError> {
        let p: SymbolicParams = serde_json::from_str(text).map_err(ControllerError::Parse)?;
        if [p.v_a, p.v_b, p.omega_a, p.omega_b].iter().any(|x| !x.is_finite()) {
            return Err(ControllerError::NonFinite);
        }
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }
}

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("controller parse error: {0}")]
    Parse(serde_json::Error),
    #[error("symbolic parameters must be finite")]
    NonFinite,
    #[error("artifact is neither a network nor symbolic parameters")]
    UnknownArtifact,
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// A controller shared by every agent of a swarm.
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec {
    Symbolic(SymbolicParams),
    Snn(Network),
}

impl ControllerSpec {
    /// Reads either a network document or a symbolic parameter record.
    pub fn from_json(text: &str) -> Result<Self, ControllerError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(ControllerError::Parse)?;
        let obj = value.as_object().ok_or(ControllerError::UnknownArtifact)?;
        if obj.contains_key("neurons") {
            Ok(Self::Snn(Network::from_json(text)?))
        } else if obj.contains_key("v_a") {
            Ok(Self::Symbolic(SymbolicParams::from_json(text)?))
        } else {
            Err(ControllerError::UnknownArtifact)
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            Self::Symbolic(p) => p.to_json(),
            Self::Snn(n) => n.to_json(),
        }
    }

    /// Per-agent runtime instance.
    pub fn instantiate(&self) -> Result<ControllerInstance, ControllerError> {
        Ok(match self {
            Self::Symbolic(p) => ControllerInstance::Symbolic(*p),
            Self::Snn(n) => ControllerInstance::Snn(Box::new(Processor::load(n)?)),
        })
    }

    /// `n` independent instances. The network is compiled once.
    pub fn instantiate_swarm(&self, n: usize) -> Result<Vec<ControllerInstance>, ControllerError> {
        let first = self.instantiate()?;
        Ok(vec![first; n])
    }
}

#[derive(Debug, Clone)]
pub enum ControllerInstance {
    Symbolic(SymbolicParams),
    Snn(Box<Processor>),
}

impl ControllerInstance {
    /// Consumes the latest sensor bit and returns the command for the next tick.
    pub fn next(&mut self, h: bool, config: &WorldConfig) -> Result<(f64, f64), ControllerError> {
        match self {
            Self::Symbolic(p) => Ok(p.next(h)),
            Self::Snn(proc) => Ok(codec::controller_tick(proc, h, config)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: SymbolicParams = SymbolicParams {
        v_a: 0.1,
        v_b: 0.2,
        omega_a: -1.0,
        omega_b: 1.0,
    };

    #[test]
    fn symbolic_lookup() {
        assert_eq!(P.next(true), (0.1, -1.0));
        assert_eq!(P.next(false), (0.2, 1.0));
    }

    #[test]
    fn artifact_detection() {
        let s = ControllerSpec::from_json(&P.to_json()).unwrap();
        assert_eq!(s, ControllerSpec::Symbolic(P));
        let n = ControllerSpec::from_json(&Network::minimal().to_json()).unwrap();
        assert_eq!(n, ControllerSpec::Snn(Network::minimal()));
        assert!(matches!(
            ControllerSpec::from_json("{\"foo\": 1}"),
            Err(ControllerError::UnknownArtifact)
        ));
        assert!(ControllerSpec::from_json("[1, 2]").is_err());
        assert!(SymbolicParams::from_json("{\"v_a\": 0.1, \"v_b\": 0.1, \"omega_a\": 0}").is_err());
    }

    #[test]
    fn swarm_instances_are_independent() {
        let spec = ControllerSpec::Snn(Network::minimal());
        let mut swarm = spec.instantiate_swarm(3).unwrap();
        let cfg = WorldConfig::default();
        swarm[0].next(true, &cfg).unwrap();
        match (&swarm[0], &swarm[1]) {
            (ControllerInstance::Snn(a), ControllerInstance::Snn(b)) => {
                assert_eq!(a.cycle(), 13);
                assert_eq!(b.cycle(), 0);
            }
            _ => unreachable!(),
        }
    }
}
