use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shiftlab_core::enumerate::{count_patterns, EnumOptions};
use shiftlab_core::geometry::SiteSet;
use shiftlab_core::glauber::{build_collar, CollarRule, GlauberChain};
use shiftlab_core::lattice::IntegerLattice;
use shiftlab_core::models;
use shiftlab_core::onedim::{parry_measure, TransitionMatrix};
use shiftlab_core::potential::LocalPotential;
use shiftlab_core::relations::{cocycle_value_int, SiteFunction};
use shiftlab_core::spectral::{correlation_series, CorrelationOptions, DriverMeasure, ProductField, Sign};
use shiftlab_core::Pattern;

fn bench_enumeration(c: &mut Criterion) {
    let gm = models::golden_mean();
    let window = SiteSet::interval(0, 24).unwrap();
    c.bench_function("enumerate/golden_mean_len25", |b| {
        b.iter(|| {
            count_patterns(&gm, black_box(&window), None, EnumOptions::default()).unwrap()
        })
    });

    let ib = models::iceberg(2, 1);
    let box44 = SiteSet::box_range(&[0, 0], &[3, 3]).unwrap();
    c.bench_function("enumerate/iceberg_4x4", |b| {
        b.iter(|| {
            count_patterns(&ib, black_box(&box44), None, EnumOptions::default()).unwrap()
        })
    });
}

fn bench_lattice(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    use rand::Rng;
    let vectors: Vec<Vec<i64>> = (0..64)
        .map(|_| (0..6).map(|_| rng.gen_range(-9..=9)).collect())
        .collect();
    c.bench_function("lattice/hnf_span_64x6", |b| {
        b.iter(|| IntegerLattice::span(6, black_box(&vectors)).unwrap())
    });
}

fn bench_cocycles(c: &mut Criterion) {
    let gm = models::golden_mean();
    let window = SiteSet::interval(0, 19).unwrap();
    let pats = shiftlab_core::enumerate::enumerate_patterns(
        &gm,
        &window,
        None,
        EnumOptions::default(),
    )
    .unwrap();
    let sharp = SiteFunction::counting(2);
    c.bench_function("cocycle/counting_len20", |b| {
        b.iter(|| {
            let mut acc = 0i64;
            for pair in pats.windows(2) {
                let v = cocycle_value_int(&sharp, &pair[0], &pair[1]).unwrap();
                acc += v[0];
            }
            acc
        })
    });
}

fn bench_glauber(c: &mut Criterion) {
    let x = models::three_spin_ising();
    let g = LocalPotential::IsingPair { beta: 0.5 };
    let vol = SiteSet::box_range(&[0, 0], &[11, 11]).unwrap();
    let plus = x.symbol_index("+1").unwrap();
    let collar = build_collar(&vol, CollarRule::Symbol(plus), 1);
    c.bench_function("glauber/sweep_12x12", |b| {
        let mut chain = GlauberChain::new(&x, &g, &vol, &collar, 1, false).unwrap();
        b.iter(|| chain.sweep().unwrap())
    });
}

fn bench_markov(c: &mut Criterion) {
    let a = TransitionMatrix::from_space(&models::golden_mean()).unwrap();
    c.bench_function("onedim/parry_eigendata", |b| {
        b.iter(|| parry_measure(black_box(&a)).unwrap())
    });
    let mu = parry_measure(&a).unwrap();
    let gapped = Pattern::from_pairs(1, &[(vec![0], 0), (vec![9], 1), (vec![20], 0)]).unwrap();
    c.bench_function("onedim/gapped_marginal", |b| {
        b.iter(|| mu.pattern_prob(black_box(&gapped)).unwrap())
    });
}

fn bench_correlation(c: &mut Criterion) {
    let a = TransitionMatrix::from_space(&models::golden_mean()).unwrap();
    let plus = shiftlab_core::onedim::gibbs_markov(&a, &[0.0, 2.0]).unwrap();
    let minus = shiftlab_core::onedim::gibbs_markov(&a, &[0.0, -2.0]).unwrap();
    let obs = Pattern::from_pairs(2, &[(vec![0, 0], 1)]).unwrap();
    c.bench_function("spectral/correlation_1k_replicas", |b| {
        b.iter(|| {
            let field = ProductField {
                plus: &plus,
                minus: &minus,
            };
            correlation_series(
                &field,
                &DriverMeasure::Periodic(vec![Sign::Plus, Sign::Minus]),
                &obs,
                &[0, 1],
                &CorrelationOptions {
                    max_lag: 32,
                    replicas: 1000,
                    batches: 8,
                },
                7,
            )
            .unwrap()
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_enumeration, bench_lattice, bench_cocycles, bench_glauber, bench_markov, bench_correlation
}
criterion_main!(benches);
