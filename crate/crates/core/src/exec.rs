//! Data-parallel loop helpers with a sequential fallback.
//!
//! Every helper has a `_seq` twin that is always compiled. With the
//! `parallel` feature (default) the unsuffixed entry points fan work out
//! over rayon; without it they alias the sequential code. Reductions use a
//! fixed chunk size so the floating-point summation tree does not depend
//! on thread scheduling: results are bit-identical run to run.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for deterministic parallel reductions and pointwise maps.
pub const CHUNK: usize = 4096;

pub fn for_each_mut_seq<T, F>(data: &mut [T], f: F)
where
    F: Fn(&mut T),
{
    data.iter_mut().for_each(f);
}

#[cfg(feature = "parallel")]
pub fn for_each_mut<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(&mut T) + Sync,
{
    data.par_chunks_mut(CHUNK)
        .for_each(|chunk| chunk.iter_mut().for_each(&f));
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_mut<T, F>(data: &mut [T], f: F)
where
    F: Fn(&mut T),
{
    for_each_mut_seq(data, f);
}

/// Pointwise map taking the flat index as well as the element.
pub fn for_each_indexed_mut_seq<T, F>(data: &mut [T], f: F)
where
    F: Fn(usize, &mut T),
{
    data.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
}

#[cfg(feature = "parallel")]
pub fn for_each_indexed_mut<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync,
{
    data.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let base = c * CHUNK;
        chunk.iter_mut().enumerate().for_each(|(i, x)| f(base + i, x));
    });
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_indexed_mut<T, F>(data: &mut [T], f: F)
where
    F: Fn(usize, &mut T),
{
    for_each_indexed_mut_seq(data, f);
}

/// Deterministic sum of `f` over the slice (fixed-shape reduction tree).
pub fn sum_by_seq<T, F>(data: &[T], f: F) -> f64
where
    F: Fn(&T) -> f64,
{
    data.chunks(CHUNK)
        .map(|chunk| chunk.iter().map(&f).sum::<f64>())
        .sum()
}

#[cfg(feature = "parallel")]
pub fn sum_by<T, F>(data: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync,
{
    let partial: Vec<f64> = data
        .par_chunks(CHUNK)
        .map(|chunk| chunk.iter().map(&f).sum::<f64>())
        .collect();
    partial.iter().sum()
}

#[cfg(not(feature = "parallel"))]
pub fn sum_by<T, F>(data: &[T], f: F) -> f64
where
    F: Fn(&T) -> f64,
{
    sum_by_seq(data, f)
}

/// Maximum of `f` over the slice; `f` must return finite values.
pub fn max_by_seq<T, F>(data: &[T], f: F) -> f64
where
    F: Fn(&T) -> f64,
{
    data.iter().map(&f).fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(feature = "parallel")]
pub fn max_by<T, F>(data: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync,
{
    data.par_chunks(CHUNK)
        .map(|chunk| chunk.iter().map(&f).fold(f64::NEG_INFINITY, f64::max))
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

#[cfg(not(feature = "parallel"))]
pub fn max_by<T, F>(data: &[T], f: F) -> f64
where
    F: Fn(&T) -> f64,
{
    max_by_seq(data, f)
}

/// Sort `data` ascending by total order on f64.
pub fn sort_floats_seq(data: &mut [f64]) {
    data.sort_by(f64::total_cmp);
}

#[cfg(feature = "parallel")]
pub fn sort_floats(data: &mut [f64]) {
    data.par_sort_by(f64::total_cmp);
}

#[cfg(not(feature = "parallel"))]
pub fn sort_floats(data: &mut [f64]) {
    sort_floats_seq(data);
}

/// Run `f` on each index in `0..n`, collecting results in index order.
pub fn map_collect_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    map_collect_seq(n, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_sums_agree_bitwise() {
        let data: Vec<f64> = (0..20_000).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = sum_by(&data, |x| x * x);
        let b = sum_by_seq(&data, |x| x * x);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn sort_matches_std() {
        let mut a: Vec<f64> = (0..10_000u64)
            .map(|i| ((i * 2654435761) % 1000) as f64)
            .collect();
        let mut b = a.clone();
        sort_floats(&mut a);
        sort_floats_seq(&mut b);
        assert_eq!(a, b);
    }

    #[test]
    fn indexed_map_sees_correct_indices() {
        let mut data = vec![0usize; 10_000];
        for_each_indexed_mut(&mut data, |i, x| *x = i);
        assert!(data.iter().enumerate().all(|(i, &x)| i == x));
    }
}
