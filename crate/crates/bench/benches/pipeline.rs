use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use reconet::construct::pipeline;
use reconet::gen::{gen_gene_tree, GeneTreeParams};
use reconet::triples::{displays, informative_triples, DisplayLimits};
use reconet::unfold::lift_mu;

fn trees(leaves: usize) -> Vec<reconet::phylo::GeneTree> {
    let params = GeneTreeParams {
        max_leaves: leaves,
        species_count: 6,
        dup_prob: 0.35,
        force_well_behaved: true,
        binary: false,
    };
    (0..20).map(|s| gen_gene_tree(s, &params).unwrap()).collect()
}

fn bench_pipeline(c: &mut Criterion) {
    let mut group = c.benchmark_group("pipeline");
    for leaves in [8usize, 16, 32] {
        let corpus = trees(leaves);
        group.bench_with_input(BenchmarkId::from_parameter(leaves), &corpus, |b, corpus| {
            b.iter(|| {
                for t in corpus {
                    black_box(pipeline(t).unwrap());
                }
            })
        });
    }
    group.finish();
}

fn bench_displays(c: &mut Criterion) {
    let corpus = trees(16);
    let limits = DisplayLimits::default();
    c.bench_function("displays/informative-triples", |b| {
        b.iter(|| {
            for t in &corpus {
                let r = pipeline(t).unwrap();
                let (nstar, _, _) = r.multiarc_free.as_ref().unwrap();
                for tr in &informative_triples(t).unwrap().triples {
                    black_box(displays(nstar, tr, &limits).unwrap());
                }
            }
        })
    });
}

fn bench_lift(c: &mut Criterion) {
    let corpus = trees(12);
    c.bench_function("lift_mu/pipeline-output", |b| {
        b.iter(|| {
            for t in &corpus {
                let r = pipeline(t).unwrap();
                let (nstar, _, mu) = r.multiarc_free.as_ref().unwrap();
                black_box(lift_mu(t, nstar, mu, 100_000).unwrap());
            }
        })
    });
}

criterion_group!(benches, bench_pipeline, bench_displays, bench_lift);
criterion_main!(benches);
