//! Replicate-level execution: a rayon pool when the `parallel` feature is on,
//! a plain loop otherwise. Results always come back in replicate order.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Executor {
    Sequential,
    /// `threads: None` uses the global rayon pool.
    #[cfg(feature = "parallel")]
    Parallel { threads: Option<usize> },
    /// Parallel when available, otherwise sequential.
    #[default]
    Auto,
}

impl Executor {
    /// Executor for an explicit worker count; `1` is sequential.
    pub fn with_threads(threads: Option<usize>) -> Self {
        match threads {
            Some(1) => Executor::Sequential,
            #[cfg(feature = "parallel")]
            Some(t) => Executor::Parallel { threads: Some(t) },
            #[cfg(not(feature = "parallel"))]
            Some(_) => Executor::Sequential,
            None => Executor::Auto,
        }
    }

    pub fn map<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        match *self {
            Executor::Sequential => (0..count).map(f).collect(),
            #[cfg(feature = "parallel")]
            Executor::Parallel { threads } => par_map(count, threads, f),
            #[cfg(feature = "parallel")]
            Executor::Auto => par_map(count, None, f),
            #[cfg(not(feature = "parallel"))]
            Executor::Auto => (0..count).map(f).collect(),
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(count: u64, threads: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..count).into_par_iter().map(&f).collect();
    match threads {
        None => run(),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                log::warn!("could not build a {t}-thread pool ({e}); using the global pool");
                run()
            }
        },
    }
}
