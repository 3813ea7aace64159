//! Front end for `dbx`: synthetic data, instance generation, benchmarking and
//! the file-based two-party workflow.

pub mod bench;
pub mod dataset;
pub mod files;

pub use bench::{run_bench, BenchConfig, BenchReport};
pub use dataset::{gen_dataset, random_functions, write_dataset, Instance};
