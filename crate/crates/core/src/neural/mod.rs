//! Entity-encoder actor/critic with beta action heads and analytic
//! gradients.

pub mod adam;
pub mod beta;
pub mod mlp;
pub mod network;
pub mod scalar;

pub use adam::{Adam, AdamConfig};
pub use beta::{BetaHead, N_ACTIONS, N_RAW};
pub use mlp::{Mlp, MlpBatchCache, MlpCache};
pub use network::{
    encode_entities, ActorCritic, Branch, BranchBatchCache, BranchCache, EncoderBatchCache, EncoderCache, InputDims, NetworkConfig, NetworkLayout,
    ParamBlock,
};
pub use scalar::Real;
