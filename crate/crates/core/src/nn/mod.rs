//! Differentiable building blocks: affine maps, attention, pooling, losses
//! and the finite-difference gradient checker.

pub mod attention;
pub mod gradcheck;
pub mod linear;
pub mod loss;
pub mod transformer;

pub use attention::{
    avg_pool, linear_token_attention, multi_head_cross_attention, AttentionParams,
    MultiHeadAttention, TokenAttention,
};
pub use gradcheck::{gradcheck, GradcheckConfig, GradcheckReport};
pub use linear::{linear, Activation, Linear, LinearParams, Mlp};
pub use loss::{bce, cross_entropy, mse, softmax};
pub use transformer::{LayerNorm, TransformerBlock};
