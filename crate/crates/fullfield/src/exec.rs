//! Execution-mode switch between the rayon data-parallel kernels and their
//! sequential fallbacks.
//!
//! Both paths compute identical floating-point results: parallel work is
//! split along row boundaries and reductions always run sequentially, so
//! outputs are bit-identical regardless of thread count. Small arrays run
//! sequentially even in parallel mode (the dispatch would cost more than
//! the work); without the `parallel` feature the `Parallel` mode degrades
//! to sequential entirely.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

// Rows are dispatched in fixed blocks so the per-task work amortizes the
// scheduling cost; the partitioning never affects results because every row
// is computed independently.
const ROW_BLOCK: usize = 8;

// Fork-join dispatch costs tens of microseconds; arrays at or below this
// element count run sequentially even in parallel mode. 128x128 grids sit
// just under the cutoff, larger grids fan out.
const PAR_MIN_ELEMS: usize = 16384;

/// Applies `f` to each row (`chunk` consecutive elements) of `data`.
/// The closure receives the row index and the row slice.
pub fn for_each_row<T, F>(mode: ExecMode, data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    for_each_row_init(mode, data, chunk, || (), |(), i, row| f(i, row));
}

/// Like [`for_each_row`], with a per-worker scratch state built by `init`.
pub fn for_each_row_init<T, S, I, F>(mode: ExecMode, data: &mut [T], chunk: usize, init: I, f: F)
where
    T: Send,
    S: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize, &mut [T]) + Sync + Send,
{
    debug_assert_eq!(data.len() % chunk, 0);
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel && data.len() > PAR_MIN_ELEMS {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk * ROW_BLOCK).enumerate().for_each_init(&init, |state, (b, block)| {
            for (i, row) in block.chunks_mut(chunk).enumerate() {
                f(state, b * ROW_BLOCK + i, row);
            }
        });
        return;
    }
    let _ = mode;
    let mut state = init();
    for (i, row) in data.chunks_mut(chunk).enumerate() {
        f(&mut state, i, row);
    }
}

/// Fills each row of `out` from the closure; row-disjoint, hence
/// deterministic under parallel execution.
pub fn fill_rows<T, F>(mode: ExecMode, out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    for_each_row(mode, out, chunk, f);
}

/// Maps `trials` independent seeded jobs to results, preserving order.
pub fn map_trials<R, F>(mode: ExecMode, trials: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode == ExecMode::Parallel {
        use rayon::prelude::*;
        return (0..trials).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..trials).map(f).collect()
}
