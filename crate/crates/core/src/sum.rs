//! Order-fixed compensated summation.
//!
//! Parallel reductions in this crate split their index space into tiles whose
//! boundaries depend only on the problem size. Each tile is summed with a
//! Neumaier accumulator and the tile partials are combined pairwise in tile
//! order, so the result is bit-identical for any worker count.

use rayon::prelude::*;

/// Neumaier (improved Kahan-Babuska) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Pairwise (cascade) summation of a slice in index order.
pub fn pairwise(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        let mut acc = Neumaier::new();
        for &v in values {
            acc.add(v);
        }
        return acc.value();
    }
    let mid = values.len() / 2;
    pairwise(&values[..mid]) + pairwise(&values[mid..])
}

/// Sum `f(i)` for `i in 0..n` with a fixed tile schedule.
///
/// `tile` is the number of indices per tile; partial sums are produced in
/// parallel and reduced pairwise in tile order.
pub fn tiled_sum<F>(n: usize, tile: usize, f: F) -> f64
where
    F: Fn(std::ops::Range<usize>) -> f64 + Sync,
{
    let tile = tile.max(1);
    let tiles = n.div_ceil(tile);
    let partials: Vec<f64> = (0..tiles)
        .into_par_iter()
        .map(|t| {
            let start = t * tile;
            let end = (start + tile).min(n);
            f(start..end)
        })
        .collect();
    pairwise(&partials)
}

/// Compensated sum of an iterator, in iteration order.
pub fn compensated<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = Neumaier::new();
    for v in iter {
        acc.add(v);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let mut acc = Neumaier::new();
        for v in [1.0, 1e100, 1.0, -1e100] {
            acc.add(v);
        }
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn tiled_sum_is_independent_of_pool_size() {
        let f = |r: std::ops::Range<usize>| compensated(r.map(|i| 1.0 / (1.0 + i as f64).powf(1.3)));
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| tiled_sum(100_000, 977, f));
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| tiled_sum(100_000, 977, f));
        assert_eq!(one.to_bits(), four.to_bits());
    }

    #[test]
    fn pairwise_matches_exact_integer_sum() {
        let v: Vec<f64> = (0..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise(&v), 500_500.0);
    }
}
