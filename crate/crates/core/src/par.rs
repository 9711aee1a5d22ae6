//! Trial fan-out.
//!
//! With the `parallel` feature (default) trials run on the rayon pool;
//! without it, or inside [`with_exec`]`(Exec::Sequential, ..)`, they run in
//! a plain loop. Output order is always trial order, so downstream
//! reductions are identical across both paths and any worker count.

use std::cell::Cell;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

thread_local! {
    static EXEC: Cell<Exec> = const { Cell::new(Exec::Parallel) };
}

/// Run `f` with trial fan-out forced to `exec` on the calling thread.
pub fn with_exec<R>(exec: Exec, f: impl FnOnce() -> R) -> R {
    let prev = EXEC.with(|e| e.replace(exec));
    let out = f();
    EXEC.with(|e| e.set(prev));
    out
}

pub fn current_exec() -> Exec {
    if cfg!(feature = "parallel") {
        EXEC.with(|e| e.get())
    } else {
        Exec::Sequential
    }
}

/// Evaluate `f(t)` for `t in 0..n`, collected in trial order.
pub fn map_trials<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match current_exec() {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..n)
                .into_par_iter()
                .with_min_len(256)
                .map(|t| f(t as u64))
                .collect()
        }
        _ => (0..n as u64).map(f).collect(),
    }
}

/// Run `f` on a dedicated pool with `workers` threads (0 = rayon default).
#[cfg(feature = "parallel")]
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    if workers == 1 {
        return with_exec(Exec::Sequential, f);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("rayon pool");
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<R: Send>(_workers: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}
