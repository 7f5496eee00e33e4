//! Command-line front end and benchmark harness for `woodbury-ls`.

pub mod bench;
pub mod cli;
pub mod gen;

pub use bench::{median_speedups, run_benchmark, BackendKind, BenchConfig};
pub use cli::cli_main;
pub use gen::gen_gaussian;
