//! Index-ordered data parallelism over independent trials or blocks.
//!
//! With the `parallel` feature, work is spread over the rayon pool; without
//! it everything runs on the calling thread. Results always come back in
//! index order, so aggregates do not depend on scheduling.

/// How a batch of independent jobs is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Falls back to `Sequential` when built without the `parallel` feature.
    #[default]
    Parallel,
}

/// Runs `f(state, i)` for `i in 0..count`, one `state` per worker built by
/// `init`, and returns the results ordered by `i`.
pub fn map_with<S, T, I, F>(exec: Exec, count: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map_init(init, f).collect()
        }
        _ => {
            let mut state = init();
            (0..count).map(|i| f(&mut state, i)).collect()
        }
    }
}

/// Caps the global pool at `POLARZIP_THREADS` threads (`0` or unset = auto).
/// Returns the configured count, if any.
pub fn configure_threads_from_env() -> Option<usize> {
    let n: usize = std::env::var("POLARZIP_THREADS")
        .ok()?
        .trim()
        .parse()
        .ok()?;
    if n == 0 {
        return None;
    }
    #[cfg(feature = "parallel")]
    {
        // a pool may already exist (tests); keep it
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Some(n)
}
