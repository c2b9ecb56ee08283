pub mod baselines;
pub mod channel;
pub mod ddpg;
pub mod energy;
pub mod env;
pub mod experiment;
mod error;
pub mod nn;
pub mod rl;
pub mod toy;

pub use error::{Error, Result};
