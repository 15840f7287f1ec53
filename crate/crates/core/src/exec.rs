//! Execution policy for the data-parallel loops.
//!
//! Every parallel loop in the crate writes to disjoint chunks and never
//! reduces floating-point values across threads, so `Sequential` and
//! `Parallel` produce bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Applies `op(index, chunk)` to every `chunk_len`-sized chunk of `data`
    /// and returns the error of the lowest-indexed failing chunk, if any.
    pub(crate) fn try_chunks_mut<T, E, F>(self, data: &mut [T], chunk_len: usize, op: F) -> Result<(), E>
    where
        T: Send,
        E: Send,
        F: Fn(usize, &mut [T]) -> Result<(), E> + Sync + Send,
    {
        match self {
            Execution::Sequential => data
                .chunks_mut(chunk_len)
                .enumerate()
                .try_for_each(|(i, c)| op(i, c)),
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                let first = data
                    .par_chunks_mut(chunk_len)
                    .enumerate()
                    .filter_map(|(i, c)| op(i, c).err().map(|e| (i, e)))
                    .min_by_key(|(i, _)| *i);
                match first {
                    Some((_, e)) => Err(e),
                    None => Ok(()),
                }
            }
        }
    }

    pub(crate) fn chunks_mut<T, F>(self, data: &mut [T], chunk_len: usize, op: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        match self {
            Execution::Sequential => data
                .chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(i, c)| op(i, c)),
            #[cfg(feature = "parallel")]
            Execution::Parallel => data
                .par_chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(i, c)| op(i, c)),
        }
    }

    /// Order-preserving map over a slice.
    pub(crate) fn map<T, U, F>(self, items: &[T], op: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(op).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(op).collect(),
        }
    }
}
