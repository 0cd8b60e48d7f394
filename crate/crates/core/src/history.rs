//! Append-only simulation history and the kNN-weighted estimators.
//!
//! Past proposals are stored together with what was simulated at them:
//! a raw discrepancy for the ABC variant, per-entry summary sufficient
//! statistics (Σⱼ s̃ⱼ and Σⱼ s̃ⱼs̃ⱼᵀ over the m pseudo-datasets) for the
//! synthetic-likelihood variant. Queries take the K = ⌊√N⌋ nearest
//! entries in Euclidean parameter distance, ties broken by insertion
//! order, and form weighted averages with uniform or linear weights.
//!
//! Discrepancies are stored raw (not as indicators) so the threshold
//! test can be re-evaluated as ε shrinks across burn-in.

use crate::error::{Error, Result};
use crate::math;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightScheme {
    Uniform,
    Linear,
}

/// K(N) = ⌊√N⌋, at least 1.
pub fn knn_k(n: usize) -> usize {
    (math::floor(math::sqrt(n as f64)) as usize).max(1)
}

/// kNN weights for ascending distances. Uniform: all ones. Linear:
/// wₙ = 1 − dₙ/d_K, which vanishes at the K-th neighbour; if every
/// distance equals d_K the formula degenerates to all zeros, so it falls
/// back to uniform.
pub fn knn_weights(distances: &[f64], scheme: WeightScheme) -> Vec<f64> {
    debug_assert!(distances.windows(2).all(|w| w[0] <= w[1]));
    match scheme {
        WeightScheme::Uniform => vec![1.0; distances.len()],
        WeightScheme::Linear => {
            let k = distances.len();
            let d_k = distances[k - 1];
            if d_k <= 0.0 || d_k == distances[0] {
                return vec![1.0; k];
            }
            distances.iter().map(|d| 1.0 - d / d_k).collect()
        }
    }
}

/// Squared Euclidean distance; the heap orders by it (sqrt is monotone,
/// so the ordering and ties are identical) and only reported distances
/// take the root.
#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Bounded max-heap over (squared distance, insertion index); the worst
/// kept candidate sits on top, ties resolve to the older entry.
struct BoundedHeap {
    k: usize,
    heap: Vec<(f64, usize)>,
}

impl BoundedHeap {
    fn new(k: usize) -> Self {
        BoundedHeap {
            k,
            heap: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn worse(a: &(f64, usize), b: &(f64, usize)) -> bool {
        (a.0, a.1) > (b.0, b.1)
    }

    #[inline]
    fn full(&self) -> bool {
        self.heap.len() == self.k
    }

    /// Current worst kept distance (∞ until full).
    #[inline]
    fn bound(&self) -> f64 {
        if self.full() {
            self.heap[0].0
        } else {
            f64::INFINITY
        }
    }

    #[inline]
    fn push(&mut self, cand: (f64, usize)) {
        if self.heap.len() < self.k {
            self.heap.push(cand);
            let mut i = self.heap.len() - 1;
            while i > 0 {
                let parent = (i - 1) / 2;
                if Self::worse(&self.heap[i], &self.heap[parent]) {
                    self.heap.swap(i, parent);
                    i = parent;
                } else {
                    break;
                }
            }
        } else if Self::worse(&self.heap[0], &cand) {
            self.heap[0] = cand;
            let mut i = 0;
            loop {
                let (l, r) = (2 * i + 1, 2 * i + 2);
                let mut top = i;
                if l < self.heap.len() && Self::worse(&self.heap[l], &self.heap[top]) {
                    top = l;
                }
                if r < self.heap.len() && Self::worse(&self.heap[r], &self.heap[top]) {
                    top = r;
                }
                if top == i {
                    break;
                }
                self.heap.swap(i, top);
                i = top;
            }
        }
    }

    fn as_slice(&self) -> &[(f64, usize)] {
        &self.heap
    }

    fn into_sorted(mut self) -> Vec<(usize, f64)> {
        self.heap
            .sort_unstable_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
        self.heap
            .into_iter()
            .map(|(d2, i)| (i, math::sqrt(d2)))
            .collect()
    }
}

/// Entries per k-d leaf; leaves are scanned linearly from a contiguous
/// buffer.
const LEAF: usize = 32;

/// Append-only point store with a periodically rebuilt k-d tree over a
/// prefix and a linear tail. Queries are exactly equivalent to an
/// exhaustive scan (same distances, same tie-breaking); the index only
/// changes who gets examined.
#[derive(Debug, Clone, Default)]
struct PointStore {
    dim: usize,
    coords: Vec<f64>,
    /// Permutation of 0..covered in median-split layout.
    order: Vec<u32>,
    /// Coordinates gathered in `order` sequence for contiguous scans.
    tree_coords: Vec<f64>,
    covered: usize,
}

impl PointStore {
    fn new(dim: usize) -> Self {
        PointStore {
            dim,
            coords: Vec::new(),
            order: Vec::new(),
            tree_coords: Vec::new(),
            covered: 0,
        }
    }

    fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    #[inline]
    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn push(&mut self, zeta: &[f64]) {
        self.coords.extend_from_slice(zeta);
        let n = self.len();
        let tail = n - self.covered;
        if tail > 256.max(n / 16) {
            self.rebuild();
        }
    }

    fn rebuild(&mut self) {
        let n = self.len();
        let mut ids: Vec<u32> = (0..n as u32).collect();
        self.split_slice(&mut ids, 0, n, 0);
        let mut gathered = Vec::with_capacity(n * self.dim);
        for &id in &ids {
            gathered.extend_from_slice(self.point(id as usize));
        }
        self.tree_coords = gathered;
        self.order = ids;
        self.covered = n;
    }

    fn split_slice(&self, ids: &mut [u32], lo: usize, hi: usize, depth: usize) {
        if hi - lo <= LEAF {
            return;
        }
        let axis = depth % self.dim;
        let mid = (lo + hi) / 2;
        ids[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            let ca = self.coords[a as usize * self.dim + axis];
            let cb = self.coords[b as usize * self.dim + axis];
            (ca, a).partial_cmp(&(cb, b)).unwrap()
        });
        self.split_slice(ids, lo, mid, depth + 1);
        self.split_slice(ids, mid + 1, hi, depth + 1);
    }

    fn query_tree(
        &self,
        query: &[f64],
        lo: usize,
        hi: usize,
        depth: usize,
        heap: &mut BoundedHeap,
    ) {
        if hi - lo <= LEAF {
            for i in lo..hi {
                let d2 = sq_dist(&self.tree_coords[i * self.dim..(i + 1) * self.dim], query);
                if d2 <= heap.bound() {
                    heap.push((d2, self.order[i] as usize));
                }
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let id = self.order[mid] as usize;
        let base = mid * self.dim;
        heap.push((
            sq_dist(&self.tree_coords[base..base + self.dim], query),
            id,
        ));
        let axis = depth % self.dim;
        let delta = query[axis] - self.tree_coords[base + axis];
        let (near, far) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.query_tree(query, near.0, near.1, depth + 1, heap);
        // the far side may still hold equal-distance older entries, so
        // the bound test is non-strict
        if delta * delta <= heap.bound() {
            self.query_tree(query, far.0, far.1, depth + 1, heap);
        }
    }

    /// K nearest entries as an unsorted heap buffer of (d², index).
    fn nearest_unordered(&self, query: &[f64], k: usize) -> BoundedHeap {
        let mut heap = BoundedHeap::new(k);
        self.query_tree(query, 0, self.covered, 0, &mut heap);
        for idx in self.covered..self.len() {
            let d2 = sq_dist(self.point(idx), query);
            if d2 <= heap.bound() {
                heap.push((d2, idx));
            }
        }
        heap
    }

    /// K nearest entries, ascending by (distance, insertion index).
    fn nearest(&self, query: &[f64], k: usize) -> Vec<(usize, f64)> {
        self.nearest_unordered(query, k).into_sorted()
    }

    /// Exhaustive-scan reference path.
    #[cfg(test)]
    fn nearest_linear(&self, query: &[f64], k: usize) -> Vec<(usize, f64)> {
        let mut heap = BoundedHeap::new(k);
        for idx in 0..self.len() {
            heap.push((sq_dist(self.point(idx), query), idx));
        }
        heap.into_sorted()
    }
}

/// History for the ABC variant: (ζ̃, δ̃) pairs.
#[derive(Debug, Clone)]
pub struct AbcHistory {
    store: PointStore,
    deltas: Vec<f64>,
}

impl AbcHistory {
    pub fn new(dim: usize) -> Self {
        AbcHistory {
            store: PointStore::new(dim),
            deltas: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.store.dim
    }

    /// Current neighbourhood size K = ⌊√N⌋.
    pub fn k(&self) -> usize {
        knn_k(self.len())
    }

    pub fn entry(&self, i: usize) -> (&[f64], f64) {
        (self.store.point(i), self.deltas[i])
    }

    pub fn append(&mut self, zeta: &[f64], delta: f64) -> Result<()> {
        if zeta.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: zeta.len(),
            });
        }
        if !(delta >= 0.0) {
            return Err(Error::InvalidParam(alloc::format!(
                "discrepancy must be nonnegative, got {delta}"
            )));
        }
        self.store.push(zeta);
        self.deltas.push(delta);
        Ok(())
    }

    /// The K nearest entries, ascending by distance (ties: older first).
    pub fn knn_query(&self, zeta: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
        if k > self.len() || k == 0 {
            return Err(Error::InvalidParam(alloc::format!(
                "k = {k} out of range for history of size {}",
                self.len()
            )));
        }
        if zeta.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: zeta.len(),
            });
        }
        Ok(self.store.nearest(zeta, k))
    }

    /// kNN estimate of the tolerance acceptance probability:
    /// ĥ(ζ) = Σ Wₙ 1{δ̃ₙ < ε} / Σ Wₙ over the K nearest entries.
    /// Neighbour order does not enter the estimator, so this runs on the
    /// unsorted candidate set.
    pub fn h_hat(&self, zeta: &[f64], eps: f64, scheme: WeightScheme) -> Result<f64> {
        let k = self.k();
        if k > self.len() || zeta.len() != self.dim() {
            return Err(Error::InvalidParam(
                "query dimension or neighbourhood size out of range".into(),
            ));
        }
        let heap = self.store.nearest_unordered(zeta, k);
        let cands = heap.as_slice();
        match scheme {
            WeightScheme::Uniform => {
                let hits = cands.iter().filter(|&&(_, i)| self.deltas[i] < eps).count();
                Ok(hits as f64 / k as f64)
            }
            WeightScheme::Linear => {
                let mut d2_min = f64::INFINITY;
                let mut d2_max = 0.0f64;
                for &(d2, _) in cands {
                    d2_min = d2_min.min(d2);
                    d2_max = d2_max.max(d2);
                }
                if d2_max <= 0.0 || d2_max == d2_min {
                    // degenerate spread: uniform fallback
                    let hits =
                        cands.iter().filter(|&&(_, i)| self.deltas[i] < eps).count();
                    return Ok(hits as f64 / k as f64);
                }
                let d_k = math::sqrt(d2_max);
                let mut num = 0.0;
                let mut den = 0.0;
                for &(d2, i) in cands {
                    let w = 1.0 - math::sqrt(d2) / d_k;
                    den += w;
                    if self.deltas[i] < eps {
                        num += w;
                    }
                }
                debug_assert!(den > 0.0);
                Ok(num / den)
            }
        }
    }
}

/// History for the synthetic-likelihood variant: per entry the proposal
/// ζ̃ and the sufficient statistics of its m summary vectors.
#[derive(Debug, Clone)]
pub struct BslHistory {
    store: PointStore,
    p: usize,
    m: usize,
    /// Σⱼ s̃ⱼ per entry, N×p.
    sum_s: Vec<f64>,
    /// Σⱼ s̃ⱼ s̃ⱼᵀ per entry, N×p², row-major.
    sum_ss: Vec<f64>,
}

impl BslHistory {
    pub fn new(dim: usize, p: usize, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParam("BSL history needs m >= 2".into()));
        }
        Ok(BslHistory {
            store: PointStore::new(dim),
            p,
            m,
            sum_s: Vec::new(),
            sum_ss: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.store.dim
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        knn_k(self.len())
    }

    /// Append an entry from its m raw summary vectors (flat m×p).
    pub fn append(&mut self, zeta: &[f64], stats: &[f64]) -> Result<()> {
        if zeta.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: zeta.len(),
            });
        }
        if stats.len() != self.m * self.p {
            return Err(Error::Dimension {
                expected: self.m * self.p,
                got: stats.len(),
            });
        }
        let p = self.p;
        let mut sum = vec![0.0; p];
        let mut sumsq = vec![0.0; p * p];
        for j in 0..self.m {
            let s = &stats[j * p..(j + 1) * p];
            for a in 0..p {
                sum[a] += s[a];
                for b in 0..p {
                    sumsq[a * p + b] += s[a] * s[b];
                }
            }
        }
        self.append_sums(zeta, &sum, &sumsq)
    }

    /// Append an entry from precomputed sufficient statistics.
    pub fn append_sums(&mut self, zeta: &[f64], sum_s: &[f64], sum_ss: &[f64]) -> Result<()> {
        if zeta.len() != self.dim() || sum_s.len() != self.p || sum_ss.len() != self.p * self.p {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: zeta.len(),
            });
        }
        self.store.push(zeta);
        self.sum_s.extend_from_slice(sum_s);
        self.sum_ss.extend_from_slice(sum_ss);
        Ok(())
    }

    pub fn entry_sums(&self, i: usize) -> (&[f64], &[f64], &[f64]) {
        let p = self.p;
        (
            self.store.point(i),
            &self.sum_s[i * p..(i + 1) * p],
            &self.sum_ss[i * p * p..(i + 1) * p * p],
        )
    }

    pub fn knn_query(&self, zeta: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
        if k > self.len() || k == 0 {
            return Err(Error::InvalidParam(alloc::format!(
                "k = {k} out of range for history of size {}",
                self.len()
            )));
        }
        if zeta.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: zeta.len(),
            });
        }
        Ok(self.store.nearest(zeta, k))
    }

    /// Weighted moment estimates over the K nearest entries:
    /// μ̂ = Σₙ Wₙ Σⱼ s̃ₙ⁽ʲ⁾ / (m ΣₙWₙ) and
    /// Σ̂ = Σₙ Wₙ Σⱼ (s̃ₙ⁽ʲ⁾−μ̂)(s̃ₙ⁽ʲ⁾−μ̂)ᵀ / (m ΣₙWₙ), symmetrized.
    /// The divisor m·ΣW is intentional (not m·ΣW − 1). Each entry's inner
    /// sum over j enters through its stored sufficient statistics.
    pub fn moments_hat(
        &self,
        zeta: &[f64],
        scheme: WeightScheme,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.k();
        if k > self.len() || zeta.len() != self.dim() {
            return Err(Error::InvalidParam(
                "query dimension or neighbourhood size out of range".into(),
            ));
        }
        let heap = self.store.nearest_unordered(zeta, k);
        let cands = heap.as_slice();
        let p = self.p;
        let m = self.m as f64;

        // linear weights need the worst kept distance; degenerate spread
        // falls back to uniform
        let mut d2_min = f64::INFINITY;
        let mut d2_max = 0.0f64;
        for &(d2, _) in cands {
            d2_min = d2_min.min(d2);
            d2_max = d2_max.max(d2);
        }
        let linear = matches!(scheme, WeightScheme::Linear) && d2_max > 0.0 && d2_max != d2_min;
        let d_k = math::sqrt(d2_max);

        let mut w_total = 0.0;
        let mut mu = vec![0.0; p];
        let mut ess = vec![0.0; p * p];
        for &(d2, idx) in cands {
            let w = if linear { 1.0 - math::sqrt(d2) / d_k } else { 1.0 };
            w_total += w;
            let base_s = idx * p;
            for a in 0..p {
                mu[a] += w * self.sum_s[base_s + a];
            }
            let base_ss = idx * p * p;
            for a in 0..p * p {
                ess[a] += w * self.sum_ss[base_ss + a];
            }
        }
        debug_assert!(w_total > 0.0);
        let denom = m * w_total;
        for v in &mut mu {
            *v /= denom;
        }
        // Σ Wₙ Σⱼ (s−μ̂)(s−μ̂)ᵀ = Σ Wₙ Σⱼ ssᵀ − (m ΣW) μ̂μ̂ᵀ
        let mut sigma = vec![0.0; p * p];
        for a in 0..p {
            for b in 0..p {
                sigma[a * p + b] = ess[a * p + b] / denom - mu[a] * mu[b];
            }
        }
        crate::linalg::symmetrize(&mut sigma, p);
        Ok((mu, sigma))
    }
}
