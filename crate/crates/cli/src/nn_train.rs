//! A small two-layer regression network trained with tracked precision.

use preciseum_core::oracle::{check_black_bits, BlackBitReport, CheckConfig, TapeProgram};
use preciseum_core::{sgd_step, Activation, NodeId, Tape, XArray, XScalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::{DemoReport, Row};
use crate::CliError;

const SAMPLES: usize = 16;

/// `y = sin(πx)/2` on evenly spaced `x ∈ [−1, 1]`, as exact binary values.
pub fn dataset() -> (XArray, XArray) {
    let xs: Vec<f64> = (0..SAMPLES)
        .map(|i| -1.0 + 2.0 * i as f64 / (SAMPLES - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs.iter().map(|x| (std::f64::consts::PI * x).sin() / 2.0).collect();
    (
        XArray::from_exact(vec![SAMPLES, 1], xs).expect("shape"),
        XArray::from_exact(vec![SAMPLES, 1], ys).expect("shape"),
    )
}

/// `[W1 (1×w), b1 (w), W2 (w×1), b2 (1)]`, exact, seeded.
pub fn init_params(width: usize, seed: u64) -> Vec<XArray> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize, scale: f64| -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-scale..=scale)).collect()
    };
    vec![
        XArray::from_exact(vec![1, width], draw(width, 1.0)).expect("shape"),
        XArray::from_exact(vec![width], draw(width, 0.5)).expect("shape"),
        XArray::from_exact(vec![width, 1], draw(width, 1.0 / (width as f64).sqrt())).expect("shape"),
        XArray::from_exact(vec![1], vec![0.0]).expect("shape"),
    ]
}

pub struct Forward {
    pub tape: Tape,
    pub params: Vec<NodeId>,
    pub pred: NodeId,
    pub loss: NodeId,
}

pub fn forward(x: &XArray, y: &XArray, params: &[XArray]) -> Result<Forward, CliError> {
    let mut tape = Tape::new();
    let xn = tape.leaf(x.clone());
    let ids: Vec<NodeId> = params.iter().map(|p| tape.leaf(p.clone())).collect();
    let yn = tape.leaf(y.clone());
    let h = tape.linear(xn, ids[0], ids[1])?;
    let h = tape.activation(Activation::Tanh, h)?;
    let pred = tape.linear(h, ids[2], ids[3])?;
    let loss = tape.mse(pred, yn)?;
    Ok(Forward {
        tape,
        params: ids,
        pred,
        loss,
    })
}

pub struct Epoch {
    pub loss: XScalar,
    pub min_grad_bits: u32,
}

pub struct Training {
    pub epochs: Vec<Epoch>,
    pub last: Forward,
}

pub fn train(epochs: usize, width: usize, seed: u64, lr: f64) -> Result<Training, CliError> {
    let (x, y) = dataset();
    let mut params = init_params(width, seed);
    let lr = XScalar::from_exact(lr);
    let one = XArray::scalar(XScalar::from_exact(1.0));
    let mut log = Vec::with_capacity(epochs);
    let mut fwd = forward(&x, &y, &params)?;
    for _ in 0..epochs {
        let grads = fwd.tape.backward(fwd.loss, &one)?;
        let g: Vec<XArray> = fwd
            .params
            .iter()
            .map(|id| grads.get(*id).cloned().expect("parameter gradients exist"))
            .collect();
        log.push(Epoch {
            loss: fwd.tape.value(fwd.loss).to_scalar()?,
            min_grad_bits: g.iter().flat_map(|a| a.bits().iter().copied()).min().unwrap_or(0) as u32,
        });
        params = sgd_step(&params, &g, lr)?;
        fwd = forward(&x, &y, &params)?;
    }
    Ok(Training { epochs: log, last: fwd })
}

/// Black-bit check of one node of the final forward pass.
pub fn check_node(fwd: &Forward, node: NodeId, seed: u64) -> Result<BlackBitReport, CliError> {
    let prog = TapeProgram::new(&fwd.tape, node);
    let estimate = fwd.tape.value(node).to_scalars();
    Ok(check_black_bits(
        &prog,
        &prog.inputs(),
        &estimate,
        CheckConfig {
            seed,
            ..CheckConfig::default()
        },
    )?)
}

pub fn cmd_nn_train(epochs: usize, width: usize, seed: u64) -> Result<DemoReport, CliError> {
    if !(1..=16).contains(&width) {
        return Err(CliError::Usage(format!("width must be in 1..=16, got {width}")));
    }
    if epochs > 10_000 {
        return Err(CliError::Usage(format!("epochs must be at most 10000, got {epochs}")));
    }
    let lr = 0.125;
    let run = train(epochs, width, seed, lr)?;
    let mut report = DemoReport::new("nn-train")
        .param("epochs", epochs)
        .param("width", width)
        .param("seed", seed)
        .param("lr", lr);
    for (i, e) in run.epochs.iter().enumerate() {
        report.row(
            Row::new(format!("epoch {i}"))
                .rendered(preciseum_core::display::format(&e.loss, preciseum_core::Style::Scientific(16)))
                .bits(e.loss.exact_bits())
                .bits(e.min_grad_bits)
                .metric("loss", e.loss.value()),
        );
    }
    let final_loss = run.last.tape.value(run.last.loss).to_scalar()?;
    for (label, node) in [("final predictions", run.last.pred), ("final loss", run.last.loss)] {
        let r = check_node(&run.last, node, seed)?;
        let mut row = Row::new(label)
            .metric("checked", r.checked as f64)
            .metric("worst_ratio", r.worst_ratio)
            .verdict(if r.passed { "black-bits PASS" } else { "black-bits FAIL" });
        if node == run.last.loss {
            row = row.bits(final_loss.exact_bits()).metric("loss", final_loss.value());
        }
        report.row(row);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_decreases_and_starts_near_full_bits() {
        let run = train(60, 6, 1, 0.125).unwrap();
        let first = &run.epochs[0];
        assert!(first.loss.exact_bits() >= 45, "{}", first.loss.exact_bits());
        assert!(run.epochs.last().unwrap().loss.value() < first.loss.value());
    }

    #[test]
    fn report_has_one_row_per_epoch() {
        let r = cmd_nn_train(5, 4, 2).unwrap();
        assert_eq!(r.rows.iter().filter(|r| r.label.starts_with("epoch")).count(), 5);
        assert!(r.rows.iter().all(|row| !row.label.starts_with("epoch") || row.bits.len() == 2));
        assert!(r.find("final loss").unwrap().verdict.is_some());
    }

    #[test]
    fn limits() {
        assert!(matches!(cmd_nn_train(1, 0, 0), Err(CliError::Usage(_))));
        assert!(matches!(cmd_nn_train(10_001, 4, 0), Err(CliError::Usage(_))));
    }
}
