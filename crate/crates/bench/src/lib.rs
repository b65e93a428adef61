//! Criterion benchmarks for the `compriv` pipeline live in `benches/`.
