use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use momexp::series::inverse_series;
use momexp::{MomentSequence, MomentSeries};
use momexp_bench::single_block_3x3;

fn cauchy(c: &mut Criterion) {
    let a = single_block_3x3();
    for spec in ["factorial", "qfac:2"] {
        let seq = MomentSequence::parse(spec).unwrap();
        let e = MomentSeries::exp_series(&a, seq.clone(), 20).unwrap();
        let inv = inverse_series(&a, seq.clone(), 20).unwrap();
        c.bench_function(&format!("cauchy_product/exact/20/{spec}"), |b| {
            b.iter(|| black_box(&inv).cauchy_product(black_box(&e)).unwrap())
        });
        let (ef, invf) = (
            MomentSeries::exp_series(&a.to_float(), seq.clone(), 40).unwrap(),
            inverse_series(&a.to_float(), seq, 40).unwrap(),
        );
        c.bench_function(&format!("cauchy_product/float/40/{spec}"), |b| {
            b.iter(|| black_box(&invf).cauchy_product(black_box(&ef)).unwrap())
        });
    }
    let seq = MomentSequence::parse("qfac:2").unwrap();
    c.bench_function("mat_pow/exact/p=50", |b| b.iter(|| black_box(&a).pow(50).unwrap()));
    c.bench_function("inverse_series/exact/20/qfac:2", |b| {
        b.iter(|| inverse_series(black_box(&a), seq.clone(), 20).unwrap())
    });
}

criterion_group!(benches, cauchy);
criterion_main!(benches);
