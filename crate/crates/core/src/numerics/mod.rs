//! Dense tensors, reverse-mode differentiation, Adam and gradient checks.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod params;
pub mod tape;
pub mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, GradCheckReport};
pub use params::{Param, ParamStore};
pub use tape::{argmax, sigmoid_scalar, softmax, Gradients, Tape, Var};
pub use tensor::{Scalar, Tensor};
