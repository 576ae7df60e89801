//! Masked deep reinforcement learning for the stowage environments: DQN, QR-DQN, A2C,
//! PPO and TRPO on a small hand-differentiated feed-forward network.

pub mod agent;
pub mod buffer;
pub mod config;
pub mod dist;
pub mod dqn;
pub mod error;
pub mod net;
pub mod optim;
pub mod policy;
pub mod qrdqn;
pub mod returns;
pub mod train;
pub mod trpo;

pub use agent::{make_learner, Decision, Learner, UpdateStats};
pub use buffer::{ReplayBuffer, Transition};
pub use config::{A2cConfig, Algo, AlgoConfig, DqnConfig, PpoConfig, QrDqnConfig, TrpoConfig};
pub use error::{Result, RlError};
pub use net::{Activation, Mlp, NetworkSpec};
pub use train::{evaluate, evaluate_random, train, Diagnostics, EvalSample, RunRecord, TaskSpec, TrainSettings};
pub use trpo::TrpoStep;
