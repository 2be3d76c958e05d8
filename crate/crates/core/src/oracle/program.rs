//! Replayable computations: the same program evaluated with extended
//! floats, plain floats and intervals.

use rand::Rng;

use super::interval::Interval;
use crate::array::{BinaryOp, XArray};
use crate::autodiff::{NodeId, Tape};
use crate::error::{Error, Result};
use crate::format::FloatFormat;
use crate::matmul::{kernel, matmul, Estimator};
use crate::scalar::{RoundMode, XScalar};
use crate::unary::UnaryFn;

/// A computation that can be re-run on plain floating-point inputs.
pub trait Program {
    fn n_inputs(&self) -> usize;

    fn n_outputs(&self) -> usize;

    fn format(&self) -> FloatFormat {
        FloatFormat::Binary64
    }

    /// Plain arithmetic in the program's format.
    fn replay(&self, inputs: &[f64]) -> Vec<f64>;

    fn interval(&self, _inputs: &[Interval]) -> Result<Vec<Interval>> {
        Err(Error::Unsupported(std::any::type_name::<Self>().into()))
    }
}

pub fn interval_propagate(prog: &dyn Program, inputs: &[Interval]) -> Result<Vec<Interval>> {
    if inputs.len() != prog.n_inputs() {
        return Err(Error::Shape(format!(
            "program takes {} inputs, got {}",
            prog.n_inputs(),
            inputs.len()
        )));
    }
    prog.interval(inputs)
}

/// Index of a value in a [`ScalarProgram`]: inputs first, then one value
/// per instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub enum Instr {
    Const(f64),
    Binary(BinaryOp, Var, Var),
    Unary(UnaryFn, Var),
    Round(RoundMode, Var),
}

/// Straight-line program over scalars in static single assignment form.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarProgram {
    format: FloatFormat,
    n_inputs: usize,
    instrs: Vec<Instr>,
    outputs: Vec<Var>,
}

impl ScalarProgram {
    pub fn new(format: FloatFormat, n_inputs: usize) -> Self {
        ScalarProgram {
            format,
            n_inputs,
            instrs: vec![],
            outputs: vec![],
        }
    }

    pub fn input(&self, i: usize) -> Var {
        assert!(i < self.n_inputs, "input {i} out of range");
        Var(i)
    }

    pub fn push(&mut self, instr: Instr) -> Var {
        let next = self.n_inputs + self.instrs.len();
        let ok = |v: &Var| v.0 < next;
        let valid = match &instr {
            Instr::Const(_) => true,
            Instr::Binary(_, a, b) => ok(a) && ok(b),
            Instr::Unary(_, a) | Instr::Round(_, a) => ok(a),
        };
        assert!(valid, "instruction refers to a later value");
        self.instrs.push(instr);
        Var(next)
    }

    pub fn binary(&mut self, op: BinaryOp, a: Var, b: Var) -> Var {
        self.push(Instr::Binary(op, a, b))
    }

    pub fn unary(&mut self, f: UnaryFn, a: Var) -> Var {
        self.push(Instr::Unary(f, a))
    }

    pub fn constant(&mut self, v: f64) -> Var {
        self.push(Instr::Const(v))
    }

    pub fn output(&mut self, v: Var) {
        self.outputs.push(v);
    }

    pub fn instrs(&self) -> &[Instr] {
        &self.instrs
    }

    fn run<T: Clone>(
        &self,
        inputs: &[T],
        konst: impl Fn(f64) -> T,
        bin: impl Fn(BinaryOp, &T, &T) -> T,
        un: impl Fn(&UnaryFn, &T) -> T,
        rnd: impl Fn(RoundMode, &T) -> T,
    ) -> Vec<T> {
        assert_eq!(inputs.len(), self.n_inputs, "wrong number of inputs");
        let mut vals: Vec<T> = inputs.to_vec();
        for ins in &self.instrs {
            let v = match ins {
                Instr::Const(c) => konst(*c),
                Instr::Binary(op, a, b) => bin(*op, &vals[a.0], &vals[b.0]),
                Instr::Unary(f, a) => un(f, &vals[a.0]),
                Instr::Round(m, a) => rnd(*m, &vals[a.0]),
            };
            vals.push(v);
        }
        self.outputs.iter().map(|o| vals[o.0].clone()).collect()
    }

    /// Runs the program through the precision-tracking rules.
    pub fn eval_x(&self, inputs: &[XScalar]) -> Vec<XScalar> {
        let fmt = self.format;
        self.run(
            inputs,
            |c| XScalar::from_exact_in(fmt, c),
            |op, a, b| op.apply(a, b),
            |f, a| f.apply(a),
            |m, a| a.round(m),
        )
    }

    /// Random program: `depth` instructions over `n_inputs` inputs, each
    /// operand drawn from earlier values, the last value as the output.
    pub fn random<R: Rng>(rng: &mut R, n_inputs: usize, depth: usize, ops: &[OpChoice]) -> Self {
        let mut p = ScalarProgram::new(FloatFormat::Binary64, n_inputs.max(1));
        for _ in 0..depth.max(1) {
            let avail = p.n_inputs + p.instrs.len();
            // Favour recent values so programs are deep, not wide.
            let pick = |rng: &mut R| Var(avail - 1 - rng.random_range(0..avail.min(3)));
            let x = pick(rng);
            let v = match ops[rng.random_range(0..ops.len())] {
                OpChoice::Binary(op) => {
                    let y = Var(rng.random_range(0..avail));
                    Instr::Binary(op, x, y)
                }
                OpChoice::Unary(f) => Instr::Unary(f, x),
            };
            p.push(v);
        }
        let last = Var(p.n_inputs + p.instrs.len() - 1);
        p.output(last);
        p
    }

    /// Random expression in which every value is used exactly once: a
    /// chain of `depth` operations, each binary step taking a fresh input.
    /// Returns the program and its input count.
    pub fn random_tree<R: Rng>(rng: &mut R, depth: usize, ops: &[OpChoice]) -> Self {
        let choices: Vec<OpChoice> = (0..depth.max(1))
            .map(|_| ops[rng.random_range(0..ops.len())])
            .collect();
        let n_inputs = 1 + choices
            .iter()
            .filter(|c| matches!(c, OpChoice::Binary(_)))
            .count();
        let mut p = ScalarProgram::new(FloatFormat::Binary64, n_inputs);
        let mut cur = Var(0);
        let mut next_input = 1;
        for c in choices {
            cur = match c {
                OpChoice::Unary(f) => p.unary(f, cur),
                OpChoice::Binary(op) => {
                    let fresh = Var(next_input);
                    next_input += 1;
                    if rng.random_bool(0.5) {
                        p.binary(op, cur, fresh)
                    } else {
                        p.binary(op, fresh, cur)
                    }
                }
            };
        }
        p.output(cur);
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpChoice {
    Binary(BinaryOp),
    Unary(UnaryFn),
}

impl OpChoice {
    /// Binary operations plus unary functions that are smooth on the whole
    /// real line, so random programs stay in their domains.
    pub const SMOOTH: [OpChoice; 10] = [
        OpChoice::Binary(BinaryOp::Add),
        OpChoice::Binary(BinaryOp::Sub),
        OpChoice::Binary(BinaryOp::Mul),
        OpChoice::Binary(BinaryOp::Div),
        OpChoice::Binary(BinaryOp::Min),
        OpChoice::Binary(BinaryOp::Max),
        OpChoice::Unary(UnaryFn::Exp),
        OpChoice::Unary(UnaryFn::Atan),
        OpChoice::Unary(UnaryFn::Tanh),
        OpChoice::Unary(UnaryFn::Sin),
    ];
}

impl Program for ScalarProgram {
    fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    fn format(&self) -> FloatFormat {
        self.format
    }

    fn replay(&self, inputs: &[f64]) -> Vec<f64> {
        let fmt = self.format;
        self.run(
            inputs,
            |c| fmt.round(c),
            |op, a, b| fmt.round(op.apply_f64(*a, *b)),
            |f, a| fmt.round(f.eval(*a)),
            |m, a| m.apply(*a),
        )
    }

    fn interval(&self, inputs: &[Interval]) -> Result<Vec<Interval>> {
        Ok(self.run(
            inputs,
            Interval::point,
            |op, a, b| a.binary(op, b),
            |f, a| a.unary(f),
            |m, a| a.round(m),
        ))
    }
}

/// `C = A·B` with `A` (m×n) then `B` (n×k) flattened row-major as inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatMulProgram {
    pub format: FloatFormat,
    pub m: usize,
    pub n: usize,
    pub k: usize,
}

impl MatMulProgram {
    pub fn eval_x(&self, a: &XArray, b: &XArray, estimator: Estimator) -> Result<XArray> {
        matmul(a, b, estimator)
    }
}

impl Program for MatMulProgram {
    fn n_inputs(&self) -> usize {
        self.m * self.n + self.n * self.k
    }

    fn n_outputs(&self) -> usize {
        self.m * self.k
    }

    fn format(&self) -> FloatFormat {
        self.format
    }

    fn replay(&self, inputs: &[f64]) -> Vec<f64> {
        let (a, b) = inputs.split_at(self.m * self.n);
        kernel(self.format, a, b, self.m, self.n, self.k).values
    }

    fn interval(&self, inputs: &[Interval]) -> Result<Vec<Interval>> {
        let (a, b) = inputs.split_at(self.m * self.n);
        let mut out = Vec::with_capacity(self.m * self.k);
        for i in 0..self.m {
            for j in 0..self.k {
                let mut acc = Interval::point(0.0);
                for l in 0..self.n {
                    acc = acc.add(&a[i * self.n + l].mul(&b[l * self.k + j]));
                }
                out.push(acc);
            }
        }
        Ok(out)
    }
}

/// A recorded tape replayed from its leaves (in leaf order) to one node.
pub struct TapeProgram<'a> {
    tape: &'a Tape,
    output: NodeId,
    n_inputs: usize,
}

impl<'a> TapeProgram<'a> {
    pub fn new(tape: &'a Tape, output: NodeId) -> Self {
        let n_inputs = tape.leaves().iter().map(|l| tape.value(*l).len()).sum();
        TapeProgram {
            tape,
            output,
            n_inputs,
        }
    }

    /// Leaf elements as scalars, in replay order.
    pub fn inputs(&self) -> Vec<XScalar> {
        self.tape
            .leaves()
            .iter()
            .flat_map(|l| self.tape.value(*l).to_scalars())
            .collect()
    }
}

impl Program for TapeProgram<'_> {
    fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    fn n_outputs(&self) -> usize {
        self.tape.value(self.output).len()
    }

    fn format(&self) -> FloatFormat {
        self.tape.value(self.output).format()
    }

    fn replay(&self, inputs: &[f64]) -> Vec<f64> {
        match self.tape.replay(inputs) {
            Ok(vals) => vals[self.output.index()].values().to_vec(),
            Err(_) => vec![f64::NAN; self.n_outputs()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_paths_through_intervals() {
        // x² + 1000x − 2e-11: the naive small root cancels, the stable one does not.
        let build = |stable: bool| {
            let mut p = ScalarProgram::new(FloatFormat::Binary64, 3);
            let (a, b, c) = (p.input(0), p.input(1), p.input(2));
            let bb = p.binary(BinaryOp::Mul, b, b);
            let four = p.constant(4.0);
            let ac = p.binary(BinaryOp::Mul, a, c);
            let ac4 = p.binary(BinaryOp::Mul, four, ac);
            let disc = p.binary(BinaryOp::Sub, bb, ac4);
            let sq = p.unary(UnaryFn::Sqrt, disc);
            let two = p.constant(2.0);
            let a2 = p.binary(BinaryOp::Mul, two, a);
            let x2 = if stable {
                let zero = p.constant(0.0);
                let nb = p.binary(BinaryOp::Sub, zero, b);
                let num = p.binary(BinaryOp::Sub, nb, sq);
                let x1 = p.binary(BinaryOp::Div, num, a2);
                let ax1 = p.binary(BinaryOp::Mul, a, x1);
                p.binary(BinaryOp::Div, c, ax1)
            } else {
                let zero = p.constant(0.0);
                let nb = p.binary(BinaryOp::Sub, zero, b);
                let num = p.binary(BinaryOp::Add, nb, sq);
                p.binary(BinaryOp::Div, num, a2)
            };
            p.output(x2);
            p
        };
        let inputs = [
            Interval::point(1.0),
            Interval::point(1000.0),
            Interval::from_xscalar(&crate::decimal::from_decimal("-2e-11").unwrap()),
        ];
        let naive = interval_propagate(&build(false), &inputs).unwrap()[0];
        let stable = interval_propagate(&build(true), &inputs).unwrap()[0];
        assert!(naive.lo <= 0.0 || naive.width() > 0.5 * naive.hi.abs());
        assert!(stable.contains(2e-14));
        assert!(stable.width() < 1e-26);
    }

    #[test]
    fn replay_matches_tracking_values() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let p = ScalarProgram::random(&mut rng, 3, 12, &OpChoice::SMOOTH);
            let xs = [0.7, -1.3, 2.2].map(|v| XScalar::with_bits(v, 40).unwrap());
            let tracked = p.eval_x(&xs);
            let plain = p.replay(&[0.7, -1.3, 2.2]);
            assert_eq!(tracked[0].value().to_bits(), plain[0].to_bits());
        }
    }

    #[test]
    fn matmul_program_replays_kernel() {
        let prog = MatMulProgram {
            format: FloatFormat::Binary64,
            m: 2,
            n: 2,
            k: 1,
        };
        assert_eq!(prog.replay(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), vec![17.0, 39.0]);
        let iv: Vec<Interval> = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0].map(Interval::point).to_vec();
        let out = interval_propagate(&prog, &iv).unwrap();
        assert_eq!(out[0], Interval::point(17.0));
    }
}
