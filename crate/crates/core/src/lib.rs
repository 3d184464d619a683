pub mod autograd;
pub mod checkpoint;
pub mod datapipe;
pub mod distill;
pub mod encoding;
pub mod error;
pub mod evalbench;
pub mod fusion;
pub mod nn;
pub mod params;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use params::{ParamId, ParamStore};
pub use tensor::Matrix;
