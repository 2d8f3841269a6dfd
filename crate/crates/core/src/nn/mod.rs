//! Dense feed-forward networks and their cross-entropy training.

mod network;
mod train;

pub use network::{
    cross_entropy, grad, grad_targets, init_network, sgd_step, Activation, Dense, Gradients, LayerSpec, Network,
};
pub(crate) use network::init_network_stream;
pub use train::{stratified_split, train, EpochRecord, TrainConfig, TrainReport};
