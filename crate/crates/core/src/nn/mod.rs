//! Dense networks with exact backpropagation, the Gaussian policy head,
//! the Adam optimizer and the checkpoint format.

mod adam;
mod checkpoint;
mod mlp;
mod policy;

pub use adam::{Adam, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use mlp::{BatchCache, Dense, ForwardCache, MlpParameters};
pub use policy::{
    gaussian_entropy, log_prob_gradients, log_tanh_jacobian, squashed_gaussian_log_prob,
    PolicyParameters, PolicySample, LOG_STD_MAX, LOG_STD_MIN,
};
