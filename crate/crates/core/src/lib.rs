//! Floating-point numbers that know how many of their mantissa bits are
//! exact, with arrays, matrix products and reverse-mode gradients built
//! on the same rules.

pub mod array;
pub mod autodiff;
pub mod decimal;
pub mod display;
pub mod error;
pub mod format;
pub mod io;
pub mod matmul;
pub mod oracle;
pub mod reduce;
pub mod scalar;
pub mod unary;

pub use autodiff::{sgd_step, Activation, Gradients, NodeId, Tape};
pub use array::{broadcast_shapes, map_binary, map_unary, BinaryOp, XArray};
pub use decimal::{from_decimal, from_decimal_in};
pub use display::{exact_decimal_digits, Style};
pub use error::{Error, Result};
pub use format::FloatFormat;
pub use matmul::{dot, matmul, Estimator, HolderP};
pub use reduce::{max_reduce, mean, min_reduce, prod_reduce, sum_reduce};
pub use scalar::{Comparison, Inaccuracy, RoundMode, XScalar};
pub use unary::{apply_unary, UnaryFn};
