use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use floquet_sb::model::{spectral_integrals, IntegralOptions};
use floquet_sb::oracle::{purification, RotatingPropagator};
use floquet_sb::specfun::{kick_fh_integral, KickSeries, DEFAULT_SERIES_TOL};
use floquet_sb::strobe::{floquet_hamiltonian, observable_family, StroboscopicSimulator};
use floquet_sb::{BathRoute, Order, QubitState, ReducedDynamics};
use floquet_sb_bench::*;

fn kick(c: &mut Criterion) {
    let d = drive(CDT_RATIO, 10.0);
    let s = KickSeries::new(&d, DEFAULT_SERIES_TOL).unwrap();
    c.bench_function("kick_series_eval", |b| b.iter(|| s.at(black_box(1.234))));
    c.bench_function("kick_series_build", |b| {
        b.iter(|| KickSeries::new(black_box(&d), DEFAULT_SERIES_TOL).unwrap())
    });
    c.bench_function("kick_integral_eval", |b| {
        b.iter(|| kick_fh_integral(black_box(1.234), &d).unwrap())
    });
}

fn integrals(c: &mut Criterion) {
    let sd = ohmic();
    let th = thermal(1.0);
    let mut g = c.benchmark_group("spectral_integrals");
    for t in [1.0, 10.0, 50.0] {
        g.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| spectral_integrals(&sd, t, &th, IntegralOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn reduced(c: &mut Criterion) {
    let sd = ohmic();
    let rd = ReducedDynamics::new(drive(3.83, 10.0), thermal(1.0), Order::First).unwrap();
    let ints = spectral_integrals(&sd, 20.0, &thermal(1.0), IntegralOptions::default())
        .unwrap()
        .integrals;
    let rho0 = QubitState::minus_y();
    c.bench_function("rho_continuum", |b| {
        b.iter(|| rd.rho_continuum(black_box(20.0), &rho0, ints).unwrap())
    });
    let bath = two_mode_bath();
    c.bench_function("rho_discrete_two_modes", |b| {
        b.iter(|| rd.rho(black_box(20.0), &rho0, BathRoute::Discrete(&bath)).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let (ops, rho0) = oracle_fixture(8);
    let d = drive(CDT_RATIO, 20.0);
    let prop = RotatingPropagator::new(&d, &ops, 250).unwrap();
    let psi = purification(&rho0);
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    g.bench_function("one_period_purified", |b| {
        b.iter(|| prop.evolve(psi.clone(), 250, usize::MAX, |_, _, _| {}))
    });
    let hf = floquet_hamiltonian(0.0, &d, &ops).unwrap();
    let sim = StroboscopicSimulator::new(&hf, 0.0, &d);
    let fam = observable_family(&ops.sz, d.period() / 4.0, 0.0, &d, &ops).unwrap();
    g.bench_function("strob_samples_10", |b| b.iter(|| sim.samples(&fam, 10, &rho0)));
    g.finish();
}

criterion_group!(benches, kick, integrals, reduced, oracle);
criterion_main!(benches);
