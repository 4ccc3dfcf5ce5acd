use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Point3, PointCloud};
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 16;

/// A search hit: the index of a cloud point and its distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

impl Neighbor {
    /// Total order used for every result list: distance, then point index.
    #[inline]
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

// Max-heap entry keyed on (distance, index).
#[derive(PartialEq)]
struct HeapEntry(Neighbor);

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp_key(&other.0)
    }
}

#[derive(Debug, Clone, Copy)]
enum NodeKind {
    Leaf { start: u32, end: u32 },
    Inner { left: u32, right: u32 },
}

#[derive(Debug, Clone)]
struct Node {
    lo: [f64; 3],
    hi: [f64; 3],
    kind: NodeKind,
}

impl Node {
    /// Lower bound of the distance from `q` to any point inside the box.
    ///
    /// Per-axis gaps never exceed the matching coordinate differences of a
    /// contained point and rounding is monotone, so the bound is `<=` the
    /// exact floating-point distance computed by [`Point3::distance`].
    #[inline]
    fn min_distance(&self, q: [f64; 3]) -> f64 {
        let mut acc = 0.0;
        for a in 0..3 {
            let g = if q[a] < self.lo[a] {
                self.lo[a] - q[a]
            } else if q[a] > self.hi[a] {
                q[a] - self.hi[a]
            } else {
                0.0
            };
            acc += g * g;
        }
        acc.sqrt()
    }
}

/// Immutable k-d tree over the points of a [`PointCloud`].
///
/// Results are exact and ordered by `(distance, index)`; equal distances are
/// resolved by ascending point index. The tree stores indices into the
/// borrowed cloud and can be shared across threads.
#[derive(Debug, Clone)]
pub struct SpatialIndex<'a> {
    points: &'a [Point3],
    indices: Vec<u32>,
    nodes: Vec<Node>,
}

impl<'a> SpatialIndex<'a> {
    /// Builds the tree, splitting at the median of the widest axis.
    pub fn build(cloud: &'a PointCloud) -> Result<Self> {
        Self::from_points(cloud.points())
    }

    pub fn from_points(points: &'a [Point3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TooFewPoints {
                needed: 1,
                available: 0,
            });
        }
        if points.len() > u32::MAX as usize {
            return Err(Error::invalid("cloud too large for the spatial index"));
        }
        let mut index = SpatialIndex {
            points,
            indices: (0..points.len() as u32).collect(),
            nodes: Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1),
        };
        index.build_node(0, points.len());
        Ok(index)
    }

    fn build_node(&mut self, start: usize, end: usize) -> u32 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.indices[start..end] {
            let p = self.points[i as usize].to_array();
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            lo,
            hi,
            kind: NodeKind::Leaf {
                start: start as u32,
                end: end as u32,
            },
        });
        if end - start <= LEAF_SIZE {
            return id;
        }

        let mut axis = 0;
        for a in 1..3 {
            if hi[a] - lo[a] > hi[axis] - lo[axis] {
                axis = a;
            }
        }
        let mid = (end - start) / 2;
        let points = self.points;
        self.indices[start..end].select_nth_unstable_by(mid, |&a, &b| {
            points[a as usize]
                .axis(axis)
                .total_cmp(&points[b as usize].axis(axis))
                .then(a.cmp(&b))
        });
        let left = self.build_node(start, start + mid);
        let right = self.build_node(start + mid, end);
        self.nodes[id as usize].kind = NodeKind::Inner { left, right };
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &'a [Point3] {
        self.points
    }

    /// The `k` nearest cloud points to `query`.
    ///
    /// With `exclude_self`, a cloud point coinciding with the query (the
    /// lowest-index one, if several do) is left out of the result.
    pub fn knn(&self, query: Point3, k: usize, exclude_self: bool) -> Result<Vec<Neighbor>> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        let n = self.points.len();
        let want = if exclude_self { k + 1 } else { k }.min(n);
        let mut hits = self.knn_raw(query, want);
        if exclude_self && hits.first().is_some_and(|h| h.distance == 0.0) {
            hits.remove(0);
        }
        if hits.len() < k {
            return Err(Error::TooFewPoints {
                needed: k + usize::from(exclude_self),
                available: n,
            });
        }
        hits.truncate(k);
        Ok(hits)
    }

    /// The `k` nearest neighbors of cloud point `i`, never including `i`.
    pub fn neighbors_of(&self, i: usize, k: usize) -> Result<Vec<Neighbor>> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        let n = self.points.len();
        if i >= n {
            return Err(Error::invalid(format!("point index {i} out of range")));
        }
        if n < k + 1 {
            return Err(Error::TooFewPoints {
                needed: k + 1,
                available: n,
            });
        }
        let mut hits = self.knn_raw(self.points[i], k + 1);
        match hits.iter().position(|h| h.index == i) {
            Some(pos) => {
                hits.remove(pos);
            }
            None => {
                hits.pop();
            }
        }
        Ok(hits)
    }

    /// All cloud points at distance strictly less than `radius`.
    pub fn radius_search(&self, query: Point3, radius: f64) -> Vec<Neighbor> {
        let mut hits = Vec::new();
        if radius > 0.0 {
            self.radius_visit(0, query, query.to_array(), radius, &mut hits);
            hits.sort_unstable_by(Neighbor::cmp_key);
        }
        hits
    }

    fn knn_raw(&self, query: Point3, k: usize) -> Vec<Neighbor> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_visit(0, query, query.to_array(), k, &mut heap);
        heap.into_sorted_vec().into_iter().map(|e| e.0).collect()
    }

    fn knn_visit(
        &self,
        node: u32,
        query: Point3,
        q: [f64; 3],
        k: usize,
        heap: &mut BinaryHeap<HeapEntry>,
    ) {
        match self.nodes[node as usize].kind {
            NodeKind::Leaf { start, end } => {
                for &i in &self.indices[start as usize..end as usize] {
                    let cand = Neighbor {
                        index: i as usize,
                        distance: query.distance(self.points[i as usize]),
                    };
                    if heap.len() < k {
                        heap.push(HeapEntry(cand));
                    } else if let Some(mut top) = heap.peek_mut() {
                        if cand.cmp_key(&top.0) == Ordering::Less {
                            *top = HeapEntry(cand);
                        }
                    }
                }
            }
            NodeKind::Inner { left, right } => {
                let dl = self.nodes[left as usize].min_distance(q);
                let dr = self.nodes[right as usize].min_distance(q);
                let (first, d_first, second, d_second) = if dl <= dr {
                    (left, dl, right, dr)
                } else {
                    (right, dr, left, dl)
                };
                for (child, bound) in [(first, d_first), (second, d_second)] {
                    // A box at exactly the current worst distance may still
                    // hold a tie with a smaller index, so only prune on `>`.
                    if heap.len() == k && heap.peek().is_some_and(|w| bound > w.0.distance) {
                        continue;
                    }
                    self.knn_visit(child, query, q, k, heap);
                }
            }
        }
    }

    fn radius_visit(
        &self,
        node: u32,
        query: Point3,
        q: [f64; 3],
        radius: f64,
        hits: &mut Vec<Neighbor>,
    ) {
        let n = &self.nodes[node as usize];
        if n.min_distance(q) >= radius {
            return;
        }
        match n.kind {
            NodeKind::Leaf { start, end } => {
                for &i in &self.indices[start as usize..end as usize] {
                    let d = query.distance(self.points[i as usize]);
                    if d < radius {
                        hits.push(Neighbor {
                            index: i as usize,
                            distance: d,
                        });
                    }
                }
            }
            NodeKind::Inner { left, right } => {
                self.radius_visit(left, query, q, radius, hits);
                self.radius_visit(right, query, q, radius, hits);
            }
        }
    }
}
