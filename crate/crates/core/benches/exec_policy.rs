use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use elastica_core::assembly::{assemble, AssemblyOptions, QuadratureMode};
use elastica_core::fespace::{build_spaces, Variant};
use elastica_core::solver::build_reduced;
use elastica_core::verification::manufactured_case;
use elastica_core::{BoxExtent, ExecPolicy, SimplicialMesh};

const POLICIES: [ExecPolicy; 2] = [ExecPolicy::Sequential, ExecPolicy::Parallel];

fn bench_assembly(c: &mut Criterion) {
    let mesh = SimplicialMesh::generate_cube_mesh(4, BoxExtent::unit()).unwrap();
    let problem = manufactured_case("trig_varcoef", None).unwrap().problem();
    let mut group = c.benchmark_group("assemble");
    group.sample_size(10);
    for (mode, variant) in [(QuadratureMode::Exact, Variant::Moment), (QuadratureMode::Corner, Variant::Nodal)] {
        let spaces = build_spaces(&mesh, variant);
        for policy in POLICIES {
            let opts = AssemblyOptions { policy, ..Default::default() };
            group.bench_with_input(BenchmarkId::new(format!("{mode}"), format!("{policy:?}")), &opts, |b, opts| {
                b.iter(|| black_box(assemble(&mesh, &spaces, &problem, mode, opts).unwrap()))
            });
        }
    }
    group.finish();
}

fn bench_reduction(c: &mut Criterion) {
    let mesh = SimplicialMesh::generate_cube_mesh(4, BoxExtent::unit()).unwrap();
    let spaces = build_spaces(&mesh, Variant::Nodal);
    let problem = manufactured_case("trig", None).unwrap().problem();
    let system = assemble(&mesh, &spaces, &problem, QuadratureMode::Corner, &AssemblyOptions::default()).unwrap();
    let mut group = c.benchmark_group("build_reduced");
    group.sample_size(10);
    for policy in POLICIES {
        group.bench_function(format!("{policy:?}"), |b| b.iter(|| black_box(build_reduced(&system, policy).unwrap().dim())));
    }
    group.finish();
}

criterion_group!(benches, bench_assembly, bench_reduction);
criterion_main!(benches);
