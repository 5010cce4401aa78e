use criterion::{black_box, criterion_group, criterion_main, Criterion};
use erl_core::fields::{PressureLaw, TorusGrid};
use erl_core::fv::{solve, SchemeConfig};
use erl_core::regularity::{besov_norm, commutator, resolved_octaves, weierstrass_1d, BesovWindow, Mollifier, Power};
use erl_core::relenergy::{estimate_d, rel_energy, uniqueness_certify, CertifyConfig, ReferenceFields, ReferencePair, Region, VelocitySeries};
use erl_core::riemann::{RiemannData, TorusRiemann, TorusRiemannSpec};

fn law() -> PressureLaw {
    PressureLaw::new(1.0, 2.0).unwrap()
}

fn rarefaction(n: usize) -> TorusRiemann {
    let grid = TorusGrid::new(vec![n], vec![2.0]).unwrap();
    let data = RiemannData::new(1.0, -0.5, 1.0, 0.5).unwrap();
    TorusRiemann::new(&law(), &data, &TorusRiemannSpec::default(), &grid).unwrap()
}

fn fv(c: &mut Criterion) {
    let exact = rarefaction(512);
    let init = exact.initial_state().unwrap();
    let cfg = SchemeConfig { end_time: 0.2, output_interval: Some(0.002), ..SchemeConfig::default() };
    c.bench_function("fv_llf_512_to_0.2", |b| b.iter(|| solve(&exact.grid, &exact.law, black_box(&init), &cfg).unwrap()));
}

fn regularity(c: &mut Criterion) {
    let field = weierstrass_1d(4096, 0.6, resolved_octaves(4096));
    let m = Mollifier::for_field(1.0 / 64.0, &field).unwrap();
    c.bench_function("mollify_4096", |b| b.iter(|| m.mollify(black_box(&field)).unwrap()));
    c.bench_function("commutator_v2_4096", |b| b.iter(|| commutator(&Power(2), black_box(&field), &m).unwrap()));
    let window = BesovWindow { alpha: 0.6, p: 8.0, eta_max: BesovWindow::default_eta_max(&field) };
    c.bench_function("besov_norm_4096", |b| b.iter(|| besov_norm(&[black_box(&field)], &window, None).unwrap()));
}

fn relenergy(c: &mut Criterion) {
    let exact = rarefaction(512);
    let cfg = SchemeConfig { end_time: 0.2, output_interval: Some(0.002), ..SchemeConfig::default() };
    let weak = solve(&exact.grid, &exact.law, &exact.initial_state().unwrap(), &cfg).unwrap();
    let reference = exact.trajectory(&weak.times()).unwrap();
    let last = reference.states.last().unwrap();
    let fields = ReferenceFields::from_state(last).unwrap();
    c.bench_function("rel_energy_512", |b| b.iter(|| rel_energy(&weak.grid, &weak.law, black_box(weak.states.last().unwrap()), &fields).unwrap()));
    let series = VelocitySeries::from_states(&reference.states);
    let eps = 4.0 * weak.grid.spacing(0);
    c.bench_function("estimate_d_512", |b| b.iter(|| estimate_d(&weak.grid, black_box(&series), eps, Region::Torus).unwrap()));
    let pair = ReferencePair::with_observed_bounds(reference, 0.6, 8.0, 0.05, 0.01);
    let mut group = c.benchmark_group("certificate");
    group.sample_size(10);
    group.bench_function("certify_512", |b| b.iter(|| uniqueness_certify(black_box(&weak), &pair, &CertifyConfig::default())));
    group.finish();
}

criterion_group!(benches, fv, regularity, relenergy);
criterion_main!(benches);
