//! Sweep orchestration (placeholder).
pub struct SweepSpec;
pub struct SweepRow;
pub struct SweepTable;
pub struct RunStats;
pub struct GridSpec;
pub fn run_sweep() {}
pub fn run_grid() {}
