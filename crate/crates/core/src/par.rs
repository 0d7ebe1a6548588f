//! Data-parallel helpers with a sequential fallback.
//!
//! With the default `parallel` feature the mapping helpers fan out over rayon;
//! without it they degrade to plain iteration. Output order always matches
//! input order, so results are identical either way.

/// Maps `f` over `items`, in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn map_vec<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_vec<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    map_vec_seq(items, f)
}

/// Sequential mapping with the same signature, kept available for benchmarks.
pub fn map_vec_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Like [`map_vec`] but for fallible mappings; the first error wins.
#[cfg(feature = "parallel")]
pub fn try_map_vec<T, U, F>(items: &[T], f: F) -> crate::Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> crate::Result<U> + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn try_map_vec<T, U, F>(items: &[T], f: F) -> crate::Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> crate::Result<U> + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let xs: Vec<i64> = (0..1000).collect();
        let a = map_vec(&xs, |x| x * x - 7);
        let b = map_vec_seq(&xs, |x| x * x - 7);
        assert_eq!(a, b);
    }

    #[test]
    fn try_map_propagates_first_error() {
        let xs: Vec<i64> = (0..100).collect();
        let r = try_map_vec(&xs, |x| {
            if *x == 42 {
                Err(crate::Error::Malformed("boom".into()))
            } else {
                Ok(*x)
            }
        });
        assert!(r.is_err());
    }
}
