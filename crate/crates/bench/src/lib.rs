//! Criterion benchmarks for the twomap library live under `benches/`.
