//! Phase executor: runs one phase's independent tasks and returns their
//! outputs in input order. Returning is the phase barrier.

use alloc::vec::Vec;

pub(crate) enum Executor {
    Sequential,
    #[cfg(feature = "parallel")]
    Pool(rayon::ThreadPool),
}

impl Executor {
    pub(crate) fn new(threads: usize) -> Self {
        #[cfg(feature = "parallel")]
        if threads > 1 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                return Executor::Pool(pool);
            }
        }
        let _ = threads;
        Executor::Sequential
    }

    pub(crate) fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Executor::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Executor::Pool(pool) => {
                use rayon::prelude::*;
                pool.install(|| items.par_iter().map(f).collect())
            }
        }
    }
}
