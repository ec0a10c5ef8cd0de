use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dwsim::chain::{aubry_andre_spec, floquet_nnn_drive, FermiChainSpec, Parity};
use dwsim::encoding::{assemble_ising, encode_ising, encode_ising_driven, fock_state, Gauge};
use dwsim::evolution::evolve_driven;
use dwsim::exec;
use dwsim::linalg::expm_multiply;
use dwsim::{Execution, C64};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn matvec(c: &mut Criterion) {
    let mut g = c.benchmark_group("matvec");
    for n in [12usize, 15] {
        let spec = aubry_andre_spec(2.0, 0.618, 0.0, 0.5, n).unwrap();
        let h = assemble_ising(&encode_ising(&spec, -5.0, Parity::Odd, Gauge::Ferro).unwrap()).unwrap();
        let x: Vec<C64> = (0..h.dim()).map(|i| C64::new((i as f64).sin(), 0.0)).collect();
        let mut y = vec![C64::new(0.0, 0.0); h.dim()];
        for (name, mode) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| b.iter(|| h.matrix().matvec_with(mode, &x, &mut y)));
        }
    }
    g.finish();
}

fn driven_period(c: &mut Criterion) {
    let mut g = c.benchmark_group("driven_period");
    g.sample_size(10);
    let n = 11;
    let drive = floquet_nnn_drive(1.0, 0.2, 0.5, n).unwrap();
    let spec = FermiChainSpec::open(vec![0.0; n - 1], vec![0.0; n], vec![0.0; n - 1]).unwrap();
    let ising = encode_ising_driven(&spec, &drive, -15.0, Parity::Odd, Gauge::Ferro).unwrap();
    let psi = fock_state(1 << (n / 2), &ising.layout()).unwrap();
    for (name, mode) in MODES {
        g.bench_function(name, |b| b.iter(|| evolve_driven(&ising, &psi, &[0.5], 1e-6, mode).unwrap()));
    }
    g.finish();
}

fn ensemble(c: &mut Criterion) {
    let mut g = c.benchmark_group("ensemble_propagation");
    g.sample_size(10);
    let n = 11;
    let spec = aubry_andre_spec(2.0, 0.618, 0.0, 0.5, n).unwrap();
    let h = assemble_ising(&encode_ising(&spec, -5.0, Parity::Odd, Gauge::Ferro).unwrap()).unwrap();
    let members: Vec<usize> = (0..8).map(|k| (k * 97) % h.dim()).collect();
    for (name, mode) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| {
                exec::map(mode, &members, |&i| {
                    let mut psi = vec![C64::new(0.0, 0.0); h.dim()];
                    psi[i] = C64::new(1.0, 0.0);
                    expm_multiply(h.matrix(), &psi, 1.0, 1e-9).unwrap()
                })
            })
        });
    }
    g.finish();
}

criterion_group!(benches, matvec, driven_period, ensemble);
criterion_main!(benches);
