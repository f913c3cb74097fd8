//! Criterion benchmarks for `ca2d-core`; run with `cargo bench -p ca2d-bench`.
