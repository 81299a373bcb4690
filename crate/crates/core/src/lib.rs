pub mod channel;
pub mod circuit;
pub mod clifford;
pub mod compression;
pub mod error;
pub mod experiment;
pub mod estimator;
pub mod noise;
pub mod pauli;
pub mod ptm;
pub mod rng;
pub mod shadow;
pub mod stabilizer;
pub mod stats;
pub mod verify;

pub use channel::BasisChannel;
pub use circuit::{CliffordCircuit, Gate};
pub use error::{Error, Result};
pub use pauli::{PauliString, Phase};
