use criterion::{black_box, criterion_group, criterion_main, Criterion};
use weakfock::fock::{build_h0, build_hi, HamiltonianVariant};
use weakfock::spectral::{dense_eigen, lanczos_lowest, SolverOptions};
use weakfock::verify::ModelSpec;
use weakfock::Complex64;

fn assembly(c: &mut Criterion) {
    let spec = ModelSpec::desk1();
    let model = spec.build().unwrap();
    c.bench_function("model_build_desk1", |b| b.iter(|| black_box(&spec).build().unwrap()));
    c.bench_function("h0_desk1", |b| b.iter(|| build_h0(&model.basis, &model.params)));
    c.bench_function("hi_desk1", |b| b.iter(|| build_hi(&model.basis, &model.g1, &model.g2).unwrap()));
    c.bench_function("h_upper1_desk1", |b| {
        b.iter(|| model.hamiltonian(HamiltonianVariant::Upper { n: 1 }).unwrap())
    });
}

fn solvers(c: &mut Criterion) {
    let model = ModelSpec::desk1().build().unwrap();
    let h = model.hamiltonian(HamiltonianVariant::Full).unwrap();
    let x = vec![Complex64::new(1.0, 0.0); h.dim()];
    let mut y = vec![Complex64::new(0.0, 0.0); h.dim()];
    c.bench_function("matvec_desk1", |b| b.iter(|| h.apply(black_box(&x), &mut y)));
    let mut group = c.benchmark_group("eigensolvers");
    group.sample_size(10);
    group.bench_function("lanczos_lowest5_desk1", |b| {
        b.iter(|| lanczos_lowest(&h, 5, 1e-10, &SolverOptions::lanczos(7)).unwrap())
    });
    group.bench_function("dense_desk1", |b| b.iter(|| dense_eigen(&h).unwrap()));
    group.finish();
}

criterion_group!(benches, assembly, solvers);
criterion_main!(benches);
