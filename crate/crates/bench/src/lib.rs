//! Criterion benchmarks for the selection algorithms live in `benches/`.
