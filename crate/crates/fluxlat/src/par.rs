//! Thin dispatch layer between rayon and sequential iteration.
//!
//! Each helper has a `_seq` twin that is always compiled; the unsuffixed
//! form runs on the rayon pool when the `parallel` feature is enabled.
//! Callers that must stay bit-stable across thread counts only ever reduce
//! inside one item, so the two paths produce identical bytes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_range_seq(n, f)
    }
}

/// Sequential twin of [`map_range`].
pub fn map_range_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// [`map_range`] with a minimum split size, for cheap per-item work where
/// task overhead would dominate (sparse matvec rows).
pub fn map_range_chunked<U, F>(n: usize, min_len: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().with_min_len(min_len).map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = min_len;
        map_range_seq(n, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_matches_seq() {
        let f = |i: usize| (i as f64).sin() * (i as f64 + 0.5);
        let a = map_range(257, f);
        let b = map_range_seq(257, f);
        assert_eq!(a, b);
    }
}
