//! Deterministic swarm-milling lab: unicycle swarm simulation, circliness
//! metric, integer spiking networks, and the optimizers that train them.

pub mod cmaes;
pub mod codec;
pub mod controllers;
pub mod evolution;
pub mod harness;
pub mod metrics;
pub mod sim;
pub mod snn;
