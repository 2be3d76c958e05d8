use preciseum_core::oracle::{
    check_black_bits, check_conservatism, interval_propagate, perturb_run, CheckConfig, Interval,
    OpChoice, Program, ScalarProgram,
};
use preciseum_core::{BinaryOp, UnaryFn, XScalar};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BINARY_ONLY: [OpChoice; 6] = [
    OpChoice::Binary(BinaryOp::Add),
    OpChoice::Binary(BinaryOp::Sub),
    OpChoice::Binary(BinaryOp::Mul),
    OpChoice::Binary(BinaryOp::Div),
    OpChoice::Binary(BinaryOp::Min),
    OpChoice::Binary(BinaryOp::Max),
];

const UNARY: [UnaryFn; 14] = [
    UnaryFn::Sin,
    UnaryFn::Cos,
    UnaryFn::Tan,
    UnaryFn::Asin,
    UnaryFn::Acos,
    UnaryFn::Atan,
    UnaryFn::Ln,
    UnaryFn::Exp,
    UnaryFn::Sqrt,
    UnaryFn::Recip,
    UnaryFn::PowInt(3),
    UnaryFn::PowInt(-2),
    UnaryFn::Sigmoid,
    UnaryFn::Tanh,
];

fn random_input(rng: &mut impl Rng) -> XScalar {
    XScalar::with_bits(rng.random_range(-4.0..4.0), rng.random_range(4..=52)).unwrap()
}

fn scalar() -> impl Strategy<Value = XScalar> {
    (-1e3..1e3f64, 0u32..=53).prop_map(|(v, b)| XScalar::with_bits(v, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 3000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn binary_estimates_cover_the_interval_image(
        k in 0usize..6,
        x in scalar(),
        y in scalar(),
    ) {
        let r = check_conservatism(BINARY_ONLY[k], &[x, y]).unwrap();
        prop_assert!(!r.is_violation(), "{:?} {:?} {:?}: {:?}", BINARY_ONLY[k], x, y, r);
    }

    #[test]
    fn unary_estimates_cover_the_interval_image(k in 0usize..14, x in scalar()) {
        let r = check_conservatism(OpChoice::Unary(UNARY[k]), &[x]).unwrap();
        prop_assert!(!r.is_violation(), "{:?} {:?}: {:?}", UNARY[k], x, r);
    }
}

#[test]
fn replays_stay_inside_the_propagated_intervals() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let depth = rng.random_range(1..=12);
        let prog = ScalarProgram::random_tree(&mut rng, depth, &OpChoice::SMOOTH);
        let inputs: Vec<XScalar> = (0..prog.n_inputs()).map(|_| random_input(&mut rng)).collect();
        let boxes: Vec<Interval> = inputs.iter().map(Interval::from_xscalar).collect();
        let out = interval_propagate(&prog, &boxes).unwrap()[0];
        for _ in 0..50 {
            let point: Vec<f64> = boxes
                .iter()
                .map(|b| if b.width() == 0.0 { b.lo } else { rng.random_range(b.lo..=b.hi) })
                .collect();
            let v = prog.replay(&point)[0];
            assert!(v.is_nan() || out.contains(v), "{v} outside {out:?}");
        }
    }
}

#[test]
fn perturbation_runs_are_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..50u64 {
        let prog = ScalarProgram::random(&mut rng, 3, 10, &OpChoice::SMOOTH);
        let inputs: Vec<XScalar> = (0..3).map(|_| random_input(&mut rng)).collect();
        let a = perturb_run(&prog, &inputs, 32, seed).unwrap();
        let b = perturb_run(&prog, &inputs, 32, seed).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert!(a[0].min <= a[0].center || a[0].center.is_nan());
    }
}

#[test]
fn binary_programs_keep_the_contract_and_the_canary_fails() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut caught, mut judged) = (0, 0);
    for seed in 0..300u64 {
        let depth = rng.random_range(1..=20);
        let prog = ScalarProgram::random_tree(&mut rng, depth, &BINARY_ONLY);
        let inputs: Vec<XScalar> = (0..prog.n_inputs()).map(|_| random_input(&mut rng)).collect();
        let estimate = prog.eval_x(&inputs);
        let config = CheckConfig { seed, ..CheckConfig::default() };
        let r = check_black_bits(&prog, &inputs, &estimate, config).unwrap();
        assert!(r.passed, "seed {seed}: {:?}", r.violations);
        // 10⁶ ≈ 2^20 times the tracked inaccuracy.
        let inflated: Vec<XScalar> = estimate
            .iter()
            .map(|x| x.with_exact_bits(x.exact_bits() as i64 - 20))
            .collect();
        let canary = check_black_bits(&prog, &inputs, &inflated, config).unwrap();
        if canary.checked > 0 && inflated[0].exact_bits() + 20 == estimate[0].exact_bits() {
            judged += 1;
            caught += usize::from(!canary.passed);
        }
    }
    assert!(judged > 50, "{judged}");
    assert_eq!(caught, judged);
}
