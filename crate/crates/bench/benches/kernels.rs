use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use distal_bench::{observable, shear_flow, unipotent_batch};
use distal_core::orbit::RationalPolynomial;
use distal_core::sequences::{geometric_table, mobius_sieve, GeometricParams, MobiusSegments};
use distal_core::triangular::triangularize;
use distal_core::weyl::{disjointness_series, weyl_sum};
use distal_core::{Engine, GFunction, PhaseSpec, RealParam, SumOptions, TorusPoint, WeightSequence};

fn sieve(c: &mut Criterion) {
    let mut group = c.benchmark_group("mobius");
    for n in [100_000usize, 1_000_000] {
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("linear", n), &n, |b, &n| b.iter(|| mobius_sieve(black_box(n))));
        group.bench_with_input(BenchmarkId::new("segmented", n), &n, |b, &n| {
            b.iter(|| MobiusSegments::new(n as u64, 1 << 16).map(|(_, v)| v.len()).sum::<usize>())
        });
    }
    group.finish();
}

fn triangularization(c: &mut Criterion) {
    let mut group = c.benchmark_group("triangularize");
    for d in [2usize, 4, 6] {
        let batch = unipotent_batch(d, 20);
        group.bench_with_input(BenchmarkId::from_parameter(d), &batch, |b, batch| {
            b.iter(|| batch.iter().map(|a| triangularize(a).unwrap().sign).sum::<i8>())
        });
    }
    group.finish();
}

fn weyl(c: &mut Criterion) {
    let n = 1_000_000u64;
    let mu = WeightSequence::mobius(n);
    let mut group = c.benchmark_group("weyl");
    group.sample_size(10);
    group.throughput(Throughput::Elements(n));
    let phases = [
        ("dyadic", PhaseSpec::Rational(RationalPolynomial::parse(&["0", "-1/4", "1/4"]).unwrap())),
        ("modular", PhaseSpec::Rational(RationalPolynomial::parse(&["0", "1/3", "2/7", "1/11"]).unwrap())),
        ("real", PhaseSpec::Real(vec![0.0, 0.0, (5f64.sqrt() - 1.0) / 2.0])),
    ];
    for (name, phase) in &phases {
        group.bench_function(*name, |b| b.iter(|| weyl_sum(&mu, phase, &[n], &SumOptions::default()).unwrap()));
    }
    let f = observable(2, 2024);
    for engine in [Engine::Exact, Engine::Float] {
        group.bench_function(format!("disjoint_{engine:?}").to_lowercase(), |b| {
            b.iter(|| {
                disjointness_series(&mu, &shear_flow().into(), &f, &TorusPoint::zero(2).into(), &[n], engine, &SumOptions::default())
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn geometric(c: &mut Criterion) {
    let params = GeometricParams::new(RealParam::parse("sqrt(2)").unwrap(), RealParam::parse("3/2").unwrap(), GFunction::Const1, 128)
        .unwrap();
    let mut group = c.benchmark_group("geometric");
    group.sample_size(10);
    for n in [10_000u64, 100_000] {
        group.throughput(Throughput::Elements(n));
        group.bench_with_input(BenchmarkId::new("table", n), &n, |b, &n| b.iter(|| geometric_table(&params, n)));
    }
    group.finish();
}

criterion_group!(benches, sieve, triangularization, weyl, geometric);
criterion_main!(benches);
