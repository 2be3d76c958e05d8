use criterion::{criterion_group, criterion_main, Criterion};
use preciseum_bench::{random_scalars, random_xarray};
use preciseum_core::display::format;
use preciseum_core::{sum_reduce, Style, UnaryFn};
use std::hint::black_box;

fn scalar_ops(c: &mut Criterion) {
    let xs = random_scalars(3, 1024);
    c.bench_function("mul_chain_1024", |b| {
        b.iter(|| xs.iter().skip(1).fold(xs[0], |acc, x| acc * *black_box(x)))
    });
    c.bench_function("add_chain_1024", |b| {
        b.iter(|| xs.iter().skip(1).fold(xs[0], |acc, x| acc + *black_box(x)))
    });
    c.bench_function("sin_1024", |b| {
        b.iter(|| xs.iter().map(|x| UnaryFn::Sin.apply(black_box(x))).collect::<Vec<_>>())
    });
    c.bench_function("format_scientific", |b| {
        b.iter(|| format(black_box(&xs[7]), Style::Scientific(16)))
    });
    let a = random_xarray(4, 512, 512, 10);
    c.bench_function("sum_reduce_512x512", |b| b.iter(|| sum_reduce(black_box(&a), None).unwrap()));
}

criterion_group!(benches, scalar_ops);
criterion_main!(benches);
