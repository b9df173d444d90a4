//! Content popularity, placement probability vectors, and the caching
//! policies that realize per-BS file sets.
//!
//! File indices are 0-based throughout the crate.

use rand::Rng;
use thiserror::Error;

use crate::real::Real;

/// Tolerance on the placement budget constraint `sum T_n = K`.
pub const BUDGET_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("catalog must contain at least one file")]
    EmptyCatalog,
    #[error("zipf exponent must be finite and nonnegative, got {0}")]
    BadZipfExponent(f64),
    #[error("placement probability T[{index}] = {value} outside [0, 1]")]
    ProbOutOfRange { index: usize, value: f64 },
    #[error("placement budget violated: sum T = {sum}, cache size = {cache_size}")]
    BudgetViolated { sum: f64, cache_size: usize },
    #[error("cache size must satisfy 0 < K < N, got K = {cache_size}, N = {n_files}")]
    BadCacheSize { cache_size: usize, n_files: usize },
}

/// File popularity profile: Zipf weights `a_n = n^-gamma / sum_k k^-gamma`,
/// nonincreasing in the file index.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog<T> {
    popularity: Vec<T>,
    zipf_exponent: T,
}

impl<T: Real> Catalog<T> {
    /// Builds the normalized Zipf catalog over `n_files` files.
    pub fn zipf(n_files: usize, gamma: T) -> Result<Self, CatalogError> {
        if n_files == 0 {
            return Err(CatalogError::EmptyCatalog);
        }
        if !(gamma.is_finite() && gamma >= T::zero()) {
            return Err(CatalogError::BadZipfExponent(gamma.as_f64()));
        }
        let mut popularity: Vec<T> = (1..=n_files).map(|n| T::of_usize(n).powf(-gamma)).collect();
        let total = popularity.iter().fold(T::zero(), |s, &a| s + a);
        for a in &mut popularity {
            *a = *a / total;
        }
        Ok(Catalog {
            popularity,
            zipf_exponent: gamma,
        })
    }

    pub fn n_files(&self) -> usize {
        self.popularity.len()
    }

    pub fn popularity(&self) -> &[T] {
        &self.popularity
    }

    pub fn zipf_exponent(&self) -> T {
        self.zipf_exponent
    }
}

/// Per-file marginal caching probabilities with a hard budget of `K`
/// files per BS: `0 <= T_n <= 1` and `sum T_n = K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementVector<T> {
    probs: Vec<T>,
    cache_size: usize,
}

impl<T: Real> PlacementVector<T> {
    /// Validates and wraps a raw probability vector.
    pub fn new(probs: Vec<T>, cache_size: usize) -> Result<Self, CatalogError> {
        if cache_size == 0 || cache_size >= probs.len() {
            return Err(CatalogError::BadCacheSize {
                cache_size,
                n_files: probs.len(),
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !(value >= T::zero() && value <= T::one()) {
                return Err(CatalogError::ProbOutOfRange {
                    index,
                    value: value.as_f64(),
                });
            }
        }
        let sum = probs.iter().fold(T::zero(), |s, &t| s + t);
        if (sum - T::of_usize(cache_size)).abs() > T::of(BUDGET_TOL) {
            return Err(CatalogError::BudgetViolated {
                sum: sum.as_f64(),
                cache_size,
            });
        }
        Ok(PlacementVector { probs, cache_size })
    }

    /// Most-popular caching: probability 1 for the first `K` files.
    pub fn mpc(n_files: usize, cache_size: usize) -> Result<Self, CatalogError> {
        if cache_size == 0 || cache_size >= n_files {
            return Err(CatalogError::BadCacheSize {
                cache_size,
                n_files,
            });
        }
        let probs = (0..n_files)
            .map(|n| if n < cache_size { T::one() } else { T::zero() })
            .collect();
        Ok(PlacementVector { probs, cache_size })
    }

    /// Uniform caching: probability `K / N` for every file.
    pub fn udc(n_files: usize, cache_size: usize) -> Result<Self, CatalogError> {
        if cache_size == 0 || cache_size >= n_files {
            return Err(CatalogError::BadCacheSize {
                cache_size,
                n_files,
            });
        }
        let p = T::of_usize(cache_size) / T::of_usize(n_files);
        Ok(PlacementVector {
            probs: vec![p; n_files],
            cache_size,
        })
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn cache_size(&self) -> usize {
        self.cache_size
    }

    pub fn n_files(&self) -> usize {
        self.probs.len()
    }

    /// Cumulative segment boundaries used by the graphical sampler:
    /// `S_0 = 0, S_n = T_1 + ... + T_n`.
    pub fn segment_bounds(&self) -> Vec<T> {
        let mut bounds = Vec::with_capacity(self.probs.len() + 1);
        let mut acc = T::zero();
        bounds.push(acc);
        for &t in &self.probs {
            acc = acc + t;
            bounds.push(acc);
        }
        bounds
    }
}

/// One BS's realized cache: exactly `K` distinct file indices, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheRealization {
    files: Vec<usize>,
}

impl CacheRealization {
    pub fn files(&self) -> &[usize] {
        &self.files
    }

    pub fn contains(&self, file: usize) -> bool {
        self.files.binary_search(&file).is_ok()
    }
}

/// Draws one cache from the marginals by the graphical method: the `N`
/// probabilities are laid end to end as segments of total length `K`, and
/// the realized cache is the set of files whose segment covers one of the
/// positions `draw + j`, `j = 0..K-1`.
///
/// Each segment has length at most 1, so it can cover at most one of the
/// unit-spaced positions; the result therefore always has exactly `K`
/// distinct files, and `Pr[n in cache] = T_n` exactly.
pub fn sample_cache_graphical<T: Real>(
    placement: &PlacementVector<T>,
    draw: T,
) -> CacheRealization {
    let bounds = placement.segment_bounds();
    let files = sample_cache_from_bounds(&bounds, placement.cache_size(), draw);
    CacheRealization { files }
}

/// Same construction against precomputed segment bounds; this is the form
/// the simulator calls once per BS.
pub(crate) fn sample_cache_from_bounds<T: Real>(
    bounds: &[T],
    cache_size: usize,
    draw: T,
) -> Vec<usize> {
    debug_assert!(draw >= T::zero() && draw < T::one());
    let n_files = bounds.len() - 1;
    let mut files = Vec::with_capacity(cache_size);
    for j in 0..cache_size {
        let pos = draw + T::of_usize(j);
        // index of the segment [S_n, S_(n+1)) containing pos; zero-length
        // segments are skipped because they cannot strictly contain it
        let mut n = bounds.partition_point(|&b| b <= pos);
        if n == 0 {
            n = 1;
        }
        let mut idx = n - 1;
        if idx >= n_files {
            // pos fell a rounding error beyond the last boundary
            idx = (0..n_files)
                .rev()
                .find(|&i| bounds[i + 1] > bounds[i])
                .unwrap_or(n_files - 1);
        }
        files.push(idx);
    }
    files.sort_unstable();
    files.dedup();
    debug_assert_eq!(files.len(), cache_size);
    files
}

/// I.i.d. popularity-proportional caching: draws `K` distinct files by
/// sequential sampling without replacement, each draw proportional to the
/// remaining popularity mass. Independent across BSs.
pub fn baseline_iidc<T: Real, R: Rng + ?Sized>(
    catalog: &Catalog<T>,
    cache_size: usize,
    rng: &mut R,
) -> Result<CacheRealization, CatalogError> {
    let n = catalog.n_files();
    if cache_size == 0 || cache_size >= n {
        return Err(CatalogError::BadCacheSize {
            cache_size,
            n_files: n,
        });
    }
    let mut sampler = WeightedWithoutReplacement::new(catalog.popularity());
    let mut files: Vec<usize> = (0..cache_size)
        .map(|_| sampler.draw(rng.random::<f64>()))
        .collect();
    files.sort_unstable();
    Ok(CacheRealization { files })
}

/// Fenwick tree over nonnegative weights supporting O(log N) draw-and-remove.
pub(crate) struct WeightedWithoutReplacement {
    tree: Vec<f64>,
    total: f64,
}

impl WeightedWithoutReplacement {
    pub(crate) fn new<T: Real>(weights: &[T]) -> Self {
        let n = weights.len();
        let mut tree = vec![0.0f64; n + 1];
        for (i, &w) in weights.iter().enumerate() {
            let mut idx = i + 1;
            let w = w.as_f64();
            while idx <= n {
                tree[idx] += w;
                idx += idx & idx.wrapping_neg();
            }
        }
        let total = weights.iter().fold(0.0, |s, &w| s + w.as_f64());
        WeightedWithoutReplacement { tree, total }
    }

    /// Draws the item at cumulative position `u * total` and removes it.
    pub(crate) fn draw(&mut self, u: f64) -> usize {
        let n = self.tree.len() - 1;
        let mut target = u * self.total;
        let mut pos = 0usize;
        let mut mask = n.next_power_of_two();
        while mask > 0 {
            let next = pos + mask;
            if next <= n && self.tree[next] < target {
                target -= self.tree[next];
                pos = next;
            }
            mask >>= 1;
        }
        // pos is the count of items with cumulative weight below the target
        let mut item = pos.min(n - 1);
        let mut w = self.weight_of(item);
        // a target landing exactly on a boundary can select an already
        // removed (zero-weight) item; step to the next live one
        while w <= 0.0 && item + 1 < n {
            item += 1;
            w = self.weight_of(item);
        }
        self.update(item, -w);
        self.total -= w;
        item
    }

    fn weight_of(&self, item: usize) -> f64 {
        let mut hi = item + 1;
        let mut sum = 0.0;
        while hi > 0 {
            sum += self.tree[hi];
            hi -= hi & hi.wrapping_neg();
        }
        let mut lo = item;
        while lo > 0 {
            sum -= self.tree[lo];
            lo -= lo & lo.wrapping_neg();
        }
        sum
    }

    fn update(&mut self, item: usize, delta: f64) {
        let n = self.tree.len() - 1;
        let mut idx = item + 1;
        while idx <= n {
            self.tree[idx] += delta;
            idx += idx & idx.wrapping_neg();
        }
    }
}
