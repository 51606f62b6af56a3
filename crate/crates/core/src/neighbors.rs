//! Exact Euclidean k-nearest-neighbor search over a static point set.
//!
//! Neighbors are ranked by `(squared distance, training index)`, so equal
//! distances resolve to the lower index and results never depend on the
//! order in which points were stored.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::Deref;

use serde::Serialize;

use crate::data::LabeledDataset;
use crate::error::{MssaError, Result};

const LEAF_SIZE: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// Neighbors sorted by non-decreasing distance, ties by ascending index.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NeighborList {
    entries: Vec<Neighbor>,
}

impl NeighborList {
    pub fn into_vec(self) -> Vec<Neighbor> {
        self.entries
    }

    /// Distance to the `k`-th nearest neighbor (1-based).
    pub fn bandwidth(&self, k: usize) -> Option<f64> {
        k.checked_sub(1)
            .and_then(|i| self.entries.get(i))
            .map(|n| n.distance)
    }
}

impl Deref for NeighborList {
    type Target = [Neighbor];

    fn deref(&self) -> &[Neighbor] {
        &self.entries
    }
}

impl From<Vec<Neighbor>> for NeighborList {
    fn from(entries: Vec<Neighbor>) -> Self {
        Self { entries }
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize },
}

/// A kd-tree answering exact k-NN queries.
///
/// Each node keeps the bounding box of its points; a subtree is skipped only
/// when its box is strictly farther than the current k-th candidate, which
/// keeps tied candidates with lower indices reachable.
#[derive(Clone, Debug)]
pub struct NeighborIndex {
    points: Vec<f64>,
    n: usize,
    d: usize,
    order: Vec<usize>,
    nodes: Vec<Node>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl NeighborIndex {
    pub fn from_dataset(dataset: &LabeledDataset) -> Self {
        Self::build(dataset.features().to_vec(), dataset.dim())
            .expect("a valid dataset always yields a valid index")
    }

    /// Builds the index from a row-major buffer of `n × dim` coordinates.
    pub fn build(points: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || points.is_empty() || !points.len().is_multiple_of(dim) {
            return Err(MssaError::domain(format!(
                "cannot index {} coordinates in dimension {dim}",
                points.len()
            )));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(MssaError::domain("cannot index non-finite coordinates"));
        }
        let n = points.len() / dim;
        let mut index = Self {
            points,
            n,
            d: dim,
            order: (0..n).collect(),
            nodes: Vec::new(),
            lo: Vec::new(),
            hi: Vec::new(),
        };
        index.build_node(0, n);
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        let d = self.d;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for &i in &self.order[start..end] {
            let p = &self.points[i * d..(i + 1) * d];
            for j in 0..d {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        let (split_dim, spread) =
            (0..d)
                .map(|j| (j, hi[j] - lo[j]))
                .fold((0, f64::NEG_INFINITY), |best, cur| {
                    if cur.1 > best.1 {
                        cur
                    } else {
                        best
                    }
                });
        self.lo.extend_from_slice(&lo);
        self.hi.extend_from_slice(&hi);
        self.nodes.push(Node::Leaf { start, end });

        if end - start <= LEAF_SIZE || spread <= 0.0 {
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a * d + split_dim]
                .total_cmp(&points[b * d + split_dim])
                .then(a.cmp(&b))
        });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split { left, right };
        id
    }

    fn box_dist2(&self, node: usize, x: &[f64]) -> f64 {
        let lo = &self.lo[node * self.d..(node + 1) * self.d];
        let hi = &self.hi[node * self.d..(node + 1) * self.d];
        x.iter()
            .zip(lo.iter().zip(hi))
            .map(|(&v, (&l, &h))| {
                let gap = if v < l {
                    l - v
                } else if v > h {
                    v - h
                } else {
                    0.0
                };
                gap * gap
            })
            .sum()
    }

    fn search(
        &self,
        node: usize,
        x: &[f64],
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    let cand = Candidate {
                        dist2: squared_distance(self.point(i), x),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split { left, right } => {
                let dl = self.box_dist2(left, x);
                let dr = self.box_dist2(right, x);
                let (first, d_first, second, d_second) = if dl <= dr {
                    (left, dl, right, dr)
                } else {
                    (right, dr, left, dl)
                };
                for (child, dist) in [(first, d_first), (second, d_second)] {
                    if heap.len() == k && dist > heap.peek().expect("heap is full").dist2 {
                        continue;
                    }
                    self.search(child, x, k, exclude, heap);
                }
            }
        }
    }

    /// The `k` nearest training points to `x`, optionally ignoring one
    /// training point (leave-one-out).
    pub fn query(&self, x: &[f64], k: usize, exclude: Option<usize>) -> Result<NeighborList> {
        if x.len() != self.d {
            return Err(MssaError::domain(format!(
                "query has dimension {}, index has {}",
                x.len(),
                self.d
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(MssaError::domain("query point has non-finite coordinates"));
        }
        let available = match exclude {
            Some(i) if i < self.n => self.n - 1,
            _ => self.n,
        };
        if k == 0 || k > available {
            return Err(MssaError::domain(format!(
                "k = {k} outside 1..={available}"
            )));
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, x, k, exclude, &mut heap);
        let entries = heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| Neighbor {
                index: c.index,
                distance: c.dist2.sqrt(),
            })
            .collect();
        Ok(NeighborList { entries })
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(points: &[f64]) -> NeighborIndex {
        NeighborIndex::build(points.to_vec(), 1).unwrap()
    }

    fn pairs(list: &NeighborList) -> Vec<(usize, f64)> {
        list.iter().map(|n| (n.index, n.distance)).collect()
    }

    #[test]
    fn hand_computed_queries() {
        let idx = line(&[0.0, 1.0, 2.0]);
        let got = pairs(&idx.query(&[1.4], 2, None).unwrap());
        assert_eq!(got[0].0, 1);
        assert_eq!(got[1].0, 2);
        assert!((got[0].1 - 0.4).abs() < 1e-12);
        assert!((got[1].1 - 0.6).abs() < 1e-12);

        let got = pairs(&idx.query(&[1.0], 2, Some(1)).unwrap());
        assert_eq!(got, vec![(0, 1.0), (2, 1.0)]);
    }

    #[test]
    fn equidistant_tie_goes_to_lower_index() {
        let idx = line(&[0.0, 2.0]);
        assert_eq!(pairs(&idx.query(&[1.0], 1, None).unwrap()), vec![(0, 1.0)]);
        let idx = line(&[2.0, 0.0]);
        assert_eq!(pairs(&idx.query(&[1.0], 1, None).unwrap()), vec![(0, 1.0)]);
    }

    #[test]
    fn single_point_and_duplicates() {
        let idx = line(&[5.0]);
        assert_eq!(pairs(&idx.query(&[-3.0], 1, None).unwrap()), vec![(0, 8.0)]);

        let idx = line(&[1.0, 1.0, 1.0]);
        let got = pairs(&idx.query(&[1.0], 3, None).unwrap());
        assert_eq!(got, vec![(0, 0.0), (1, 0.0), (2, 0.0)]);
    }

    #[test]
    fn errors() {
        let idx = line(&[0.0, 1.0, 2.0]);
        assert!(idx.query(&[0.0], 0, None).is_err());
        assert!(idx.query(&[0.0], 4, None).is_err());
        assert!(idx.query(&[0.0], 3, Some(1)).is_err());
        assert!(idx.query(&[0.0, 1.0], 1, None).is_err());
        assert!(idx.query(&[f64::NAN], 1, None).is_err());
        assert!(NeighborIndex::build(vec![], 1).is_err());
        assert!(NeighborIndex::build(vec![1.0, 2.0, 3.0], 2).is_err());
    }

    #[test]
    fn bandwidth_is_kth_distance() {
        let idx = line(&[0.0, 1.0, 2.0]);
        let list = idx.query(&[1.4], 2, None).unwrap();
        assert_eq!(list.bandwidth(2), Some(list[1].distance));
        assert_eq!(list.bandwidth(0), None);
        assert_eq!(list.bandwidth(3), None);
    }

    fn brute(
        points: &[f64],
        d: usize,
        x: &[f64],
        k: usize,
        exclude: Option<usize>,
    ) -> Vec<(usize, f64)> {
        let mut all: Vec<(f64, usize)> = points
            .chunks(d)
            .enumerate()
            .filter(|(i, _)| Some(*i) != exclude)
            .map(|(i, p)| {
                (
                    p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
                    i,
                )
            })
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.into_iter()
            .take(k)
            .map(|(d2, i)| (i, d2.sqrt()))
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_brute_force(
            d in 1usize..=5,
            n in 1usize..=200,
            seed in any::<u64>(),
            lattice in any::<bool>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // A coarse lattice forces many exact distance ties.
            let coord = |rng: &mut rand_chacha::ChaCha8Rng| if lattice {
                rng.random_range(0..4) as f64
            } else {
                rng.random_range(-1.0..1.0)
            };
            let points: Vec<f64> = (0..n * d).map(|_| coord(&mut rng)).collect();
            let x: Vec<f64> = (0..d).map(|_| coord(&mut rng)).collect();
            let idx = NeighborIndex::build(points.clone(), d).unwrap();
            let exclude = if n > 1 && rng.random_bool(0.5) { Some(rng.random_range(0..n)) } else { None };
            let max_k = if exclude.is_some() { n - 1 } else { n };
            for k in 1..=max_k {
                let got = pairs(&idx.query(&x, k, exclude).unwrap());
                prop_assert_eq!(got, brute(&points, d, &x, k, exclude));
            }
        }

        #[test]
        fn independent_of_storage_order(n in 2usize..60, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            use rand::seq::SliceRandom;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let points: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(0..3) as f64, rng.random_range(0..3) as f64]).collect();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let flat: Vec<f64> = points.iter().flatten().copied().collect();
            let shuffled: Vec<f64> = perm.iter().flat_map(|&i| points[i]).collect();
            let a = NeighborIndex::build(flat, 2).unwrap();
            let b = NeighborIndex::build(shuffled, 2).unwrap();
            let x = [1.0, 1.5];
            // Map the shuffled result back to original ids; the sets at each
            // distinct distance must agree.
            let ra = a.query(&x, n, None).unwrap();
            let rb = b.query(&x, n, None).unwrap();
            let mut sa: Vec<(u64, usize)> = ra.iter().map(|e| (e.distance.to_bits(), e.index)).collect();
            let mut sb: Vec<(u64, usize)> = rb.iter().map(|e| (e.distance.to_bits(), perm[e.index])).collect();
            sa.sort();
            sb.sort();
            prop_assert_eq!(sa, sb);
            let da: Vec<f64> = ra.iter().map(|e| e.distance).collect();
            let db: Vec<f64> = rb.iter().map(|e| e.distance).collect();
            prop_assert_eq!(da, db);
        }
    }
}
