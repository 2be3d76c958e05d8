//! Reverse-mode differentiation over [`XArray`]s.
//!
//! A [`Tape`] records every operation together with copies of its inputs'
//! values; [`Tape::backward`] walks it in reverse, so gradients carry their
//! own exact-bit counts through the same rules as the forward pass.

use crate::array::{map_binary, BinaryOp, XArray};
use crate::error::{Error, Result};
use crate::matmul::{matmul, Estimator};
use crate::reduce::{mean, sum_reduce};
use crate::scalar::XScalar;
use crate::unary::UnaryFn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    AddBias(NodeId, NodeId),
    Act(Activation, NodeId),
    Mse(NodeId, NodeId),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    output: XArray,
}

#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradient of the seeded output with respect to every recorded node.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<XArray>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&XArray> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }
}

fn exact_like(a: &XArray, v: f64) -> XScalar {
    XScalar::from_exact_in(a.format(), v)
}

fn scalar_array(x: XScalar) -> XArray {
    XArray::scalar(x)
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, output: XArray) -> NodeId {
        self.nodes.push(Node { op, output });
        NodeId(self.nodes.len() - 1)
    }

    fn check(&self, id: NodeId) -> Result<()> {
        if id.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(Error::Shape(format!("node {} is not on this tape", id.0)))
        }
    }

    pub fn leaf(&mut self, value: XArray) -> NodeId {
        self.push(Op::Leaf, value)
    }

    pub fn value(&self, id: NodeId) -> &XArray {
        &self.nodes[id.0].output
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check(a)?;
        self.check(b)?;
        let out = matmul(self.value(a), self.value(b), Estimator::V2)?;
        Ok(self.push(Op::MatMul(a, b), out))
    }

    /// `x` of shape `batch×k` plus a bias vector of length `k`.
    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId> {
        self.check(x)?;
        self.check(bias)?;
        let (xv, bv) = (self.value(x), self.value(bias));
        if xv.rank() != 2 || bv.rank() != 1 || xv.shape()[1] != bv.shape()[0] {
            return Err(Error::Shape(format!(
                "bias {:?} does not fit activations {:?}",
                bv.shape(),
                xv.shape()
            )));
        }
        let out = map_binary(BinaryOp::Add, xv, bv)?;
        Ok(self.push(Op::AddBias(x, bias), out))
    }

    /// `x·W + b` with the product bits from the V2 estimator.
    pub fn linear(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let z = self.matmul(x, w)?;
        self.add_bias(z, b)
    }

    pub fn activation(&mut self, f: Activation, x: NodeId) -> Result<NodeId> {
        self.check(x)?;
        let xv = self.value(x);
        let out = match f {
            Activation::Relu => {
                map_binary(BinaryOp::Max, xv, &scalar_array(exact_like(xv, 0.0)))?
            }
            Activation::Sigmoid => xv.map_unary(UnaryFn::Sigmoid),
            Activation::Tanh => xv.map_unary(UnaryFn::Tanh),
        };
        Ok(self.push(Op::Act(f, x), out))
    }

    /// Mean of squared differences as a rank-0 array.
    pub fn mse(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        self.check(pred)?;
        self.check(target)?;
        let (p, t) = (self.value(pred), self.value(target));
        if p.shape() != t.shape() {
            return Err(Error::Shape(format!(
                "prediction {:?} and target {:?} differ",
                p.shape(),
                t.shape()
            )));
        }
        let d = map_binary(BinaryOp::Sub, p, t)?;
        let sq = map_binary(BinaryOp::Mul, &d, &d)?;
        let out = mean(&sq, None)?;
        Ok(self.push(Op::Mse(pred, target), out))
    }

    /// Leaf nodes in recording order.
    pub fn leaves(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|i| matches!(self.nodes[*i].op, Op::Leaf))
            .map(NodeId)
            .collect()
    }

    /// Re-runs the recorded operations with new leaf values, concatenated
    /// in leaf order, treating them as exact. Only the values of the
    /// result are meaningful to callers comparing plain arithmetic.
    pub fn replay(&self, leaf_values: &[f64]) -> Result<Vec<XArray>> {
        let mut out: Vec<XArray> = Vec::with_capacity(self.nodes.len());
        let mut cursor = 0;
        for node in &self.nodes {
            let v = match node.op {
                Op::Leaf => {
                    let n = node.output.len();
                    let chunk = leaf_values.get(cursor..cursor + n).ok_or_else(|| {
                        Error::Shape(format!("replay needs more than {} leaf values", leaf_values.len()))
                    })?;
                    cursor += n;
                    XArray::from_exact_in(node.output.format(), node.output.shape().to_vec(), chunk.to_vec())?
                }
                Op::MatMul(a, b) => matmul(&out[a.0], &out[b.0], Estimator::V2)?,
                Op::AddBias(x, b) => map_binary(BinaryOp::Add, &out[x.0], &out[b.0])?,
                Op::Act(Activation::Relu, x) => map_binary(
                    BinaryOp::Max,
                    &out[x.0],
                    &scalar_array(exact_like(&out[x.0], 0.0)),
                )?,
                Op::Act(Activation::Sigmoid, x) => out[x.0].map_unary(UnaryFn::Sigmoid),
                Op::Act(Activation::Tanh, x) => out[x.0].map_unary(UnaryFn::Tanh),
                Op::Mse(p, t) => {
                    let d = map_binary(BinaryOp::Sub, &out[p.0], &out[t.0])?;
                    mean(&map_binary(BinaryOp::Mul, &d, &d)?, None)?
                }
            };
            out.push(v);
        }
        if cursor != leaf_values.len() {
            return Err(Error::Shape(format!(
                "replay got {} leaf values, tape has {cursor}",
                leaf_values.len()
            )));
        }
        Ok(out)
    }

    /// Gradients of `output` seeded with `seed`, which must match its shape.
    pub fn backward(&self, output: NodeId, seed: &XArray) -> Result<Gradients> {
        self.check(output)?;
        if seed.shape() != self.value(output).shape() {
            return Err(Error::Shape(format!(
                "seed {:?} does not match output {:?}",
                seed.shape(),
                self.value(output).shape()
            )));
        }
        let mut grads: Vec<Option<XArray>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(seed.clone());
        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].clone() else { continue };
            for (target, contrib) in self.local_grads(idx, &g)? {
                grads[target.0] = Some(match grads[target.0].take() {
                    None => contrib,
                    Some(acc) => map_binary(BinaryOp::Add, &acc, &contrib)?,
                });
            }
        }
        Ok(Gradients { grads })
    }

    fn local_grads(&self, idx: usize, g: &XArray) -> Result<Vec<(NodeId, XArray)>> {
        let node = &self.nodes[idx];
        Ok(match node.op {
            Op::Leaf => vec![],
            Op::MatMul(a, b) => {
                let ga = matmul(g, &self.value(b).transpose()?, Estimator::V2)?;
                let gb = matmul(&self.value(a).transpose()?, g, Estimator::V2)?;
                vec![(a, ga), (b, gb)]
            }
            Op::AddBias(x, b) => vec![(x, g.clone()), (b, sum_reduce(g, Some(0))?)],
            Op::Act(f, x) => {
                let xv = self.value(x);
                let y = &node.output;
                let one = scalar_array(exact_like(y, 1.0));
                let deriv = match f {
                    Activation::Relu => {
                        let mask: Vec<f64> = xv
                            .values()
                            .iter()
                            .map(|v| if *v > 0.0 { 1.0 } else { 0.0 })
                            .collect();
                        XArray::from_exact_in(xv.format(), xv.shape().to_vec(), mask)?
                    }
                    Activation::Sigmoid => {
                        map_binary(BinaryOp::Mul, y, &map_binary(BinaryOp::Sub, &one, y)?)?
                    }
                    Activation::Tanh => {
                        map_binary(BinaryOp::Sub, &one, &map_binary(BinaryOp::Mul, y, y)?)?
                    }
                };
                vec![(x, map_binary(BinaryOp::Mul, g, &deriv)?)]
            }
            Op::Mse(p, t) => {
                let (pv, tv) = (self.value(p), self.value(t));
                let d = map_binary(BinaryOp::Sub, pv, tv)?;
                let scale = exact_like(pv, 2.0).div(&exact_like(pv, pv.len() as f64));
                let coeff = map_binary(BinaryOp::Mul, g, &scalar_array(scale))?;
                let gp = map_binary(BinaryOp::Mul, &d, &coeff)?;
                let gt = map_binary(BinaryOp::Sub, &XArray::filled(gp.shape().to_vec(), exact_like(pv, 0.0))?, &gp)?;
                vec![(p, gp), (t, gt)]
            }
        })
    }
}

/// `p ← p − lr·g` for every parameter.
pub fn sgd_step(params: &[XArray], grads: &[XArray], lr: XScalar) -> Result<Vec<XArray>> {
    if params.len() != grads.len() {
        return Err(Error::Shape(format!(
            "{} parameters but {} gradients",
            params.len(),
            grads.len()
        )));
    }
    params
        .iter()
        .zip(grads)
        .map(|(p, g)| {
            if p.shape() != g.shape() {
                return Err(Error::Shape(format!(
                    "parameter {:?} and gradient {:?} differ",
                    p.shape(),
                    g.shape()
                )));
            }
            let step = map_binary(BinaryOp::Mul, g, &XArray::scalar(lr))?;
            map_binary(BinaryOp::Sub, p, &step)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::from_decimal;

    fn exact(shape: &[usize], v: &[f64]) -> XArray {
        XArray::from_exact(shape.to_vec(), v.to_vec()).unwrap()
    }

    #[test]
    fn identity_input_reproduces_weights() {
        let mut t = Tape::new();
        let x = t.leaf(exact(&[2, 2], &[1.0, 0.0, 0.0, 1.0]));
        let w = t.leaf(XArray::with_uniform_bits(vec![2, 2], vec![0.3, -1.2, 2.5, 0.7], 40).unwrap());
        let b = t.leaf(exact(&[2], &[0.0, 0.0]));
        let y = t.linear(x, w, b).unwrap();
        assert_eq!(t.value(y).values(), t.value(w).values());
        assert_eq!(t.value(y).shape(), &[2, 2]);
    }

    #[test]
    fn linear_shapes() {
        let mut t = Tape::new();
        let x = t.leaf(exact(&[4, 3], &[0.5; 12]));
        let w = t.leaf(exact(&[3, 2], &[0.25; 6]));
        let b = t.leaf(exact(&[2], &[1.0, 2.0]));
        let y = t.linear(x, w, b).unwrap();
        assert_eq!(t.value(y).shape(), &[4, 2]);
        let bad = t.leaf(exact(&[3], &[0.0; 3]));
        assert!(t.linear(x, w, bad).is_err());
    }

    #[test]
    fn inexact_bias_never_adds_bits() {
        let mut t = Tape::new();
        let x = t.leaf(XArray::with_uniform_bits(vec![2, 3], vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6], 30).unwrap());
        let w = t.leaf(XArray::with_uniform_bits(vec![3, 2], vec![1.0, -0.5, 0.25, 2.0, -1.5, 0.75], 30).unwrap());
        let b = t.leaf(XArray::with_uniform_bits(vec![2], vec![0.01, -0.02], 12).unwrap());
        let z = t.matmul(x, w).unwrap();
        let y = t.add_bias(z, b).unwrap();
        for (after, before) in t.value(y).bits().iter().zip(t.value(z).bits()) {
            assert!(after <= before);
        }
    }

    #[test]
    fn relu_and_tanh() {
        let mut t = Tape::new();
        let x = t.leaf(exact(&[3], &[-1.0, -0.5, 2.0]));
        let r = t.activation(Activation::Relu, x).unwrap();
        assert_eq!(t.value(r).values(), &[0.0, 0.0, 2.0]);
        assert_eq!(t.value(r).bits(), &[53, 53, 53]);
        let z = t.leaf(exact(&[1], &[0.0]));
        let th = t.activation(Activation::Tanh, z).unwrap();
        assert_eq!((t.value(th).values()[0], t.value(th).bits()[0]), (0.0, 53));
        let eps = t.leaf(XArray::from_scalars(vec![1], &[XScalar::with_bits(1e-6, 5).unwrap()]).unwrap());
        let re = t.activation(Activation::Relu, eps).unwrap();
        assert!(t.value(re).bits()[0] <= 5);
    }

    #[test]
    fn mse_cases() {
        let mut t = Tape::new();
        let p = t.leaf(exact(&[2], &[1.5, -2.0]));
        let q = t.leaf(exact(&[2], &[1.5, -2.0]));
        let l = t.mse(p, q).unwrap();
        assert_eq!((t.value(l).values()[0], t.value(l).bits()[0]), (0.0, 53));
        let r = t.leaf(exact(&[3], &[0.0; 3]));
        assert!(t.mse(p, r).is_err());
        let a = 1.0 + 8.0 * f64::EPSILON;
        let p2 = t.leaf(exact(&[1], &[a]));
        let q2 = t.leaf(exact(&[1], &[1.0]));
        let l2 = t.mse(p2, q2).unwrap();
        let v = t.value(l2).at(0);
        assert_eq!(v.value(), (8.0 * f64::EPSILON).powi(2));
        assert_eq!(v.exact_bits(), 53);
    }

    #[test]
    fn single_matmul_gradients_are_transposes() {
        let mut t = Tape::new();
        let av = XArray::with_uniform_bits(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 30).unwrap();
        let bv = XArray::with_uniform_bits(vec![3, 2], vec![0.5, -1.0, 1.5, 2.0, -0.5, 0.25], 25).unwrap();
        let a = t.leaf(av.clone());
        let b = t.leaf(bv.clone());
        let c = t.matmul(a, b).unwrap();
        let g = exact(&[2, 2], &[1.0; 4]);
        let grads = t.backward(c, &g).unwrap();
        let ga = grads.get(a).unwrap();
        assert_eq!(ga, &matmul(&g, &bv.transpose().unwrap(), Estimator::V2).unwrap());
        assert_eq!(ga.values(), &[-0.5, 3.5, -0.25, -0.5, 3.5, -0.25]);
        let gb = grads.get(b).unwrap();
        assert_eq!(gb, &matmul(&av.transpose().unwrap(), &g, Estimator::V2).unwrap());
        assert!(t.backward(c, &exact(&[2], &[1.0, 1.0])).is_err());
    }

    #[test]
    fn sgd_cases() {
        let p = exact(&[1], &[1.0]);
        let g = exact(&[1], &[0.5]);
        let lr = from_decimal("0.1").unwrap();
        let out = sgd_step(std::slice::from_ref(&p), std::slice::from_ref(&g), lr).unwrap();
        let expect = XScalar::from_exact(1.0).sub(&lr.mul(&XScalar::from_exact(0.5)));
        assert_eq!(out[0].at(0), expect);
        assert_eq!(out[0].values()[0], 1.0 - 0.1 * 0.5);
        let same = sgd_step(std::slice::from_ref(&p), &[g], XScalar::from_exact(0.0)).unwrap();
        assert_eq!(same[0], p);
        assert!(sgd_step(&[p], &[exact(&[2], &[0.0, 0.0])], lr).is_err());
    }
}
