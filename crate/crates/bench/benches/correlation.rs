use criterion::{black_box, criterion_group, criterion_main, Criterion};
use qcausal_bench::preset_algebras;
use qcausal_core::correlation::{c_measure, c_omega, MeasureBudget, SupBudget};
use qcausal_core::matrix::State;
use qcausal_core::random;

fn correlation(c: &mut Criterion) {
    let mut g = c.benchmark_group("c_omega");
    let (a, b) = preset_algebras("qubit-clash");
    let w = State::maximally_mixed(2);
    g.bench_function("exhaustive/qubit-clash", |x| x.iter(|| c_omega(black_box(&w), &a, &b, &SupBudget::default())));
    let (a, b) = preset_algebras("tensor-qubits");
    let w = random::state(4, &mut random::rng(1));
    g.bench_function("sampled/tensor-qubits", |x| x.iter(|| c_omega(black_box(&w), &a, &b, &SupBudget::default())));
    g.finish();

    let mut g = c.benchmark_group("c_measure");
    g.sample_size(10);
    let (a, b) = preset_algebras("qubit-clash");
    g.bench_function("qubit-clash", |x| x.iter(|| c_measure(black_box(&a), &b, None, &MeasureBudget::default())));
    g.finish();
}

criterion_group!(benches, correlation);
criterion_main!(benches);
