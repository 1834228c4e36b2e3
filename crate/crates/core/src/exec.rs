/// How independent work items (Monte-Carlo trials) are scheduled.
///
/// Results never depend on the mode: items are mapped independently and
/// collected in index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon pool with the given number of threads, `0` meaning one per core.
    /// Falls back to sequential execution when the `parallel` feature is off.
    Parallel { threads: usize },
    /// Global rayon pool.
    #[default]
    Auto,
}

impl Execution {
    /// `1` maps to [`Execution::Sequential`], `0` to [`Execution::Auto`].
    pub fn with_threads(threads: usize) -> Self {
        match threads {
            0 => Execution::Auto,
            1 => Execution::Sequential,
            n => Execution::Parallel { threads: n },
        }
    }

    /// Runs `body` inside the thread pool selected by this mode.
    pub(crate) fn install<R: Send>(&self, body: impl FnOnce() -> R + Send) -> R {
        match *self {
            #[cfg(feature = "parallel")]
            Execution::Parallel { threads } if threads > 0 => {
                match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                    Ok(pool) => pool.install(body),
                    Err(_) => body(),
                }
            }
            _ => body(),
        }
    }

    /// Maps `f` over `range` and returns the results in index order. Call
    /// from within [`Execution::install`] to honour the thread count.
    pub(crate) fn map_indexed<R, F>(&self, range: std::ops::Range<u64>, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(u64) -> R + Sync + Send,
    {
        match *self {
            Execution::Sequential => range.map(f).collect(),
            #[cfg(feature = "parallel")]
            _ => {
                use rayon::prelude::*;
                range.into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            _ => range.map(f).collect(),
        }
    }
}
