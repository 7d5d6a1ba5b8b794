//! Benchmarks for the migration pipeline live in `benches/`.
