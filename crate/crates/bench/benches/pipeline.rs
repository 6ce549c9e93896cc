//! Hot-path benchmarks: proposal construction, alias-table sampling,
//! monotone fitting, and exact moment enumeration.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use gridtally::{
    draw, fit_isotonic, generate_world, identity_proposal, substream_seed, AliasTable,
    LabeledSample, Point, WorldConfig,
};

fn sized_world(ncols: usize, nrows: usize, seed: u64) -> gridtally::SyntheticWorld {
    let config = WorldConfig {
        ncols,
        nrows,
        seed,
        ..WorldConfig::default()
    };
    generate_world(&config).expect("world")
}

fn bench_proposal_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("proposal_build");
    for (label, world) in [
        ("64x64", sized_world(64, 64, 1)),
        ("256x256", sized_world(256, 256, 1)),
    ] {
        group.bench_function(label, |b| {
            b.iter(|| {
                identity_proposal(black_box(world.raster()), world.mask(), 1e-3).expect("proposal")
            })
        });
    }
    group.finish();
}

fn bench_alias_sampling(c: &mut Criterion) {
    let world = sized_world(64, 64, 2);
    let proposal = identity_proposal(world.raster(), world.mask(), 1e-3).expect("proposal");

    c.bench_function("alias_build_4096", |b| {
        b.iter(|| AliasTable::new(black_box(&proposal)))
    });

    let table = AliasTable::new(&proposal);
    c.bench_function("draw_batch_1000", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            draw(&proposal, &table, 1000, substream_seed(9, seed)).expect("draw")
        })
    });
}

fn bench_monotone_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("monotone_fit");
    for n in [100usize, 2_000] {
        // Noisy but trend-bearing labels; adjacent violations keep PAVA busy.
        let samples: Vec<LabeledSample> = (0..n)
            .map(|i| {
                let x = i as f64 / 10.0;
                let wiggle = ((i * 2_654_435_761) % 97) as f64 / 10.0;
                LabeledSample {
                    location: Point::new(x, 0.5),
                    covariate: x,
                    count: (x + wiggle) as u64,
                    weight: 1.0 + (i % 3) as f64,
                }
            })
            .collect();
        group.bench_function(format!("{n}_samples"), |b| {
            b.iter(|| fit_isotonic(black_box(&samples), 1.0).expect("fit"))
        });
    }
    group.finish();
}

fn bench_exact_moments(c: &mut Criterion) {
    let world = sized_world(64, 64, 3);
    let proposal = identity_proposal(world.raster(), world.mask(), 1e-3).expect("proposal");
    c.bench_function("enumerated_moments_4096", |b| {
        b.iter(|| world.enumerated_moments(black_box(&proposal)).expect("moments"))
    });
}

criterion_group!(
    benches,
    bench_proposal_build,
    bench_alias_sampling,
    bench_monotone_fit,
    bench_exact_moments
);
criterion_main!(benches);
