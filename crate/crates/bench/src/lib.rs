//! Criterion benchmarks for `weh-core`; see `benches/`.
