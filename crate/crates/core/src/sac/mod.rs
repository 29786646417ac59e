//! Discrete soft actor-critic built on small hand-written networks.

pub mod agent;
pub mod buffer;
pub mod checkpoint;
pub mod mlp;
pub mod optim;

pub use agent::{argmax, log_softmax, sample_categorical, soft_value, softmax, LossReport, SacAgent, SacConfig, SelectMode};
pub use buffer::ReplayBuffer;
pub use checkpoint::MAGIC;
pub use mlp::{Activations, Dense, Gradients, Mlp};
pub use optim::{Optimizer, OptimizerKind};
