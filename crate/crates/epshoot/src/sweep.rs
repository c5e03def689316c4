//! Convergence sweeps with cells spread over a thread pool.

use epshoot_core::analysis::{check_sweep_inputs, run_sweep_cell, SweepGrid, SweepTable};
use epshoot_core::{LandmarkTemplate, Result, ShootingConfig};
use rayon::prelude::*;

/// Same table as [`epshoot_core::analysis::convergence_sweep`], computed in
/// parallel. Cells are independent, so the result does not depend on the
/// thread count or completion order.
pub fn parallel_sweep(
    reference: &LandmarkTemplate,
    target: &LandmarkTemplate,
    grid: &SweepGrid,
    base: &ShootingConfig,
    threads: Option<usize>,
) -> Result<SweepTable> {
    check_sweep_inputs(reference, target, grid)?;
    let cols = grid.h_values.len();
    let total = grid.alpha2_values.len() * cols;
    let run = || {
        (0..total)
            .into_par_iter()
            .map(|k| {
                let (r, c) = (k / cols, k % cols);
                run_sweep_cell(reference, target, grid, base, grid.alpha2_values[r], grid.h_values[c])
            })
            .collect::<Result<Vec<_>>>()
    };
    let cells = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool construction does not fail for n >= 1")
            .install(run)?,
        None => run()?,
    };
    Ok(SweepTable { alpha2_values: grid.alpha2_values.clone(), h_values: grid.h_values.clone(), cells })
}
