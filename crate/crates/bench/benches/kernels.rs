use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hypoaudit::experiment::{velocity_profile, InitialProfile};
use hypoaudit::spectral::build_schrodinger;
use hypoaudit::{
    equilibrium_for, CollisionOperator, CollisionSpec, DistributionField, Integrator, KernelFamily, SolverConfig,
    SpatialGrid,
};

fn operators(c: &mut Criterion) {
    let eq = equilibrium_for(0.5, 1, 10.0, 301).unwrap();
    let f = velocity_profile(InitialProfile::HeavyTail { eps: 0.1 }, &eq, 2.0);
    let mut out = vec![0.0; f.len()];
    for (name, spec) in [
        ("fokker_planck", CollisionSpec::fokker_planck(0.5)),
        ("scattering", CollisionSpec::scattering(KernelFamily::Separable, 1.0)),
    ] {
        let op = CollisionOperator::new(&spec, &eq).unwrap();
        c.bench_function(&format!("apply/{name}/nv301"), |b| b.iter(|| op.apply_into(black_box(&f), &mut out)));
    }
}

fn integrator(c: &mut Criterion) {
    let eq = equilibrium_for(0.5, 1, 10.0, 201).unwrap();
    let op = CollisionOperator::new(&CollisionSpec::fokker_planck(0.5), &eq).unwrap();
    let x = SpatialGrid::new(64, 100.0).unwrap();
    let g = velocity_profile(InitialProfile::HeavyTail { eps: 0.1 }, &eq, 2.0);
    let rho: Vec<f64> = x.nodes().iter().map(|&y| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * y / 100.0).cos()).collect();
    let mut f = DistributionField::separable(x, &rho, &g).unwrap();
    let integ = Integrator::new(&op, SolverConfig::new(0.05, 0.05)).unwrap();
    c.bench_function("step/fokker_planck/nx64_nv201", |b| b.iter(|| integ.step(black_box(&mut f))));
}

fn spectral(c: &mut Criterion) {
    let problem = build_schrodinger(0.5, 1.0, 1, 1e3, 1025).unwrap();
    c.bench_function("c_star/n1025", |b| b.iter(|| black_box(&problem).c_star()));
}

criterion_group!(benches, operators, integrator, spectral);
criterion_main!(benches);
