//! Execution policy for the data-parallel loops (per-cell element work,
//! per-vertex local solves, per-mesh sweeps).
//!
//! Parallel execution needs the `parallel` feature; without it every policy
//! runs sequentially. Results are always collected in index order, so the
//! downstream accumulation order (and hence every assembled matrix) does not
//! depend on the policy.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecPolicy {
    #[default]
    Sequential,
    Parallel,
}

impl ExecPolicy {
    /// Whether this policy will actually fan out work.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecPolicy::Parallel
    }

    pub fn from_threads(threads: usize) -> Self {
        if threads > 1 {
            ExecPolicy::Parallel
        } else {
            ExecPolicy::Sequential
        }
    }

    /// `(0..n).map(f).collect()`, possibly in parallel.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == ExecPolicy::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Like [`map_indexed`](Self::map_indexed) for fallible work; the first
    /// error in index order is returned.
    pub fn try_map_indexed<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map_indexed(n, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let f = |i: usize| (i as f64).sqrt();
        assert_eq!(ExecPolicy::Sequential.map_indexed(100, f), ExecPolicy::Parallel.map_indexed(100, f));
        let r: Result<Vec<usize>, usize> = ExecPolicy::Parallel.try_map_indexed(10, |i| if i == 3 || i == 7 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(3));
    }
}
