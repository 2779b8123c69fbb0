use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use twistlab::exec::Execution;
use twistlab::forms::{lookup, CoeffOptions};
use twistlab::lfunc::effective_length;
use twistlab::moments::{enumerate_family, prepare_form, FailurePolicy, LValues};
use twistlab::special::BumpSpec;

fn family_lprime(c: &mut Criterion) {
    let form = lookup("11a").unwrap();
    let x = 5_000.0;
    let bump = BumpSpec::default();
    let probe = prepare_form(&form, 1, None, &CoeffOptions::default()).unwrap();
    let family = enumerate_family(&[&probe.form], x, &bump).unwrap();
    let ds: Vec<u64> = family.members.iter().map(|m| m.d).collect();
    let n_max = effective_length(&probe.form, family.max_d().unwrap(), 1.0);
    let table = prepare_form(&form, n_max, None, &CoeffOptions::default()).unwrap().table;

    let mut group = c.benchmark_group("family_lprime");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_with_input(BenchmarkId::new(name, ds.len()), &exec, |b, &exec| {
            b.iter(|| LValues::compute(&table, &ds, FailurePolicy::FailFast, exec).unwrap())
        });
    }
    group.finish();
}

fn coefficient_sieve(c: &mut Criterion) {
    let form = lookup("11a").unwrap();
    let mut group = c.benchmark_group("sieve_11a");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        let opts = CoeffOptions {
            exec,
            ..CoeffOptions::default()
        };
        group.bench_function(name, |b| {
            b.iter(|| twistlab::forms::sieve_coefficients_with(&form, 200_000, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, family_lprime, coefficient_sieve);
criterion_main!(benches);
