use criterion::{black_box, criterion_group, criterion_main, Criterion};
use ggwpd::dynamics::integrate;
use ggwpd::maslovfix::{default_region, locate_det_zeros, ZeroSearchOptions};
use ggwpd::saddles::{build_foliations, newton_search, NewtonOptions};
use ggwpd::{ComplexPhasePoint, IntegratorOptions, TimePath};
use ggwpd_bench::Quartic;

fn benches(c: &mut Criterion) {
    let s = Quartic::new();
    let opts = IntegratorOptions::default();

    let path = TimePath::real(s.time).unwrap();
    let start = ComplexPhasePoint::real(&[20.0], &[0.0]);
    c.bench_function("integrate_three_periods", |b| {
        b.iter(|| integrate(&s.hamiltonian, black_box(&start), &path, &opts, &[]).unwrap())
    });

    let problem = s.problem(-1.9);
    let seed = s.line.seed_for_position(-1.9, 6).unwrap().unwrap();
    let newton = NewtonOptions::default();
    c.bench_function("newton_family7", |b| b.iter(|| newton_search(&problem, black_box(&seed), 7, &newton).unwrap()));

    let saddle = newton_search(&problem, &seed, 7, &newton).unwrap();
    let region = default_region(&saddle);
    let monitor = problem.monitor();
    let zero_opts = ZeroSearchOptions::default();
    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    group.bench_function("zero_search_family7", |b| {
        b.iter(|| locate_det_zeros(&saddle, &region, monitor.which, &monitor.shapes, &zero_opts).unwrap())
    });
    group.bench_function("foliations_2048", |b| {
        b.iter(|| build_foliations(&s.packet, &s.hamiltonian, s.time, 5.0, 2048, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(pipeline, benches);
criterion_main!(pipeline);
