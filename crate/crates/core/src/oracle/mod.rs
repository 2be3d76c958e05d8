//! Ground truth for the precision rules: interval propagation,
//! perturbation sampling and the black-bit contract check.

mod conservatism;
mod interval;
mod perturb;
mod program;

pub use conservatism::{check_conservatism, Conservatism, Exclusion};
pub use interval::{Interval, LIBM_PAD};
pub use perturb::{check_black_bits, perturb_run, BlackBitReport, CheckConfig, Spread, Violation};
pub use program::{
    interval_propagate, Instr, MatMulProgram, OpChoice, Program, ScalarProgram, TapeProgram, Var,
};
