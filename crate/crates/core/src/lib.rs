//! Trace-driven design-space exploration of single-level instruction and
//! data cache configurations, optimizing execution time and energy with
//! NSGA-II and checking results against exhaustive search.

pub mod cache_sim;
pub mod cost_model;
pub mod explorer;
pub mod genome;
pub mod moea;
pub mod trace;
