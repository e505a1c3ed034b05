//! Worker pool shared by the Monte Carlo engine and the fixed-point solver.
//! `SUBEXP_THREADS` caps the number of workers.

use std::sync::OnceLock;

use rayon::{ThreadPool, ThreadPoolBuilder};

pub const THREADS_ENV: &str = "SUBEXP_THREADS";

fn requested() -> usize {
    std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()).unwrap_or(0)
}

pub fn pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| ThreadPoolBuilder::new().num_threads(requested()).build().expect("thread pool"))
}

pub fn threads() -> usize {
    pool().current_num_threads()
}

pub fn install<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    pool().install(f)
}
