//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default) work fans out on the rayon pool;
//! without it, or with [`Execution::Sequential`], items run in order.
//! Results always come back in input order so reductions are deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Fill `out` in chunks of `chunk` elements; `f(start, slice)`.
pub fn for_each_chunk<R, F>(exec: Execution, out: &mut [R], chunk: usize, f: F)
where
    R: Send,
    F: Fn(usize, &mut [R]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, s)| f(i * chunk, s));
        return;
    }
    let _ = exec;
    for (i, s) in out.chunks_mut(chunk).enumerate() {
        f(i * chunk, s);
    }
}
