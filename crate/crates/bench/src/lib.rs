//! Criterion benchmarks for the reconet library; see `benches/`.
