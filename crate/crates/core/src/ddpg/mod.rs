//! Deep deterministic policy gradient: networks, replay, exploration and
//! the training loop.

pub mod agent;
pub mod noise;
pub mod replay;
pub mod train;

pub use agent::{ActorCritic, DdpgParams, NetQuartet};
pub use noise::ExplorationNoise;
pub use replay::{ReplayMemory, Transition};
pub use train::{
    load_checkpoint, save_checkpoint, train, DdpgTrainer, EpisodeRecord, Schedule, TargetUpdate,
    TrainReport,
};
