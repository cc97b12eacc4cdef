//! Benchmark-only crate; see `benches/estimation.rs`.
