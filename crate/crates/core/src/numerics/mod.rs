//! Dense tensors, reverse-mode differentiation, Adam and gradient checking.

mod adam;
pub mod checkpoint;
mod gradcheck;
mod sparse;
mod tape;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::{grad_check, GradCheckReport};
pub use sparse::SparseMatrix;
pub use tape::{sigmoid, Grads, Params, Tape, Var, PROB_CLAMP};
pub use tensor::Tensor;
