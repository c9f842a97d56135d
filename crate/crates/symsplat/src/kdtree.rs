//! Minimal 3D kd-tree for nearest-neighbor queries.

use crate::math::{self, Vec3};
use crate::scalar::Real;

/// Static kd-tree over a point set; stores indices into the original
/// slice so callers can filter candidates (e.g. skip already-claimed
/// points).
pub struct KdTree<S: Real> {
    points: Vec<Vec3<S>>,
    /// Indices into `points`, ordered as a median-split implicit tree.
    order: Vec<u32>,
}

impl<S: Real> KdTree<S> {
    pub fn build(points: &[Vec3<S>]) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut tree = KdTree {
            points: points.to_vec(),
            order: Vec::new(),
        };
        build_recursive(&tree.points, &mut order, 0);
        tree.order = order;
        tree
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Nearest point to `query`, as (index into the original slice,
    /// squared distance).
    pub fn nearest(&self, query: Vec3<S>) -> Option<(u32, S)> {
        self.nearest_filtered(query, &mut |_| true)
    }

    /// Nearest point accepted by `filter`.
    pub fn nearest_filtered(
        &self,
        query: Vec3<S>,
        filter: &mut dyn FnMut(u32) -> bool,
    ) -> Option<(u32, S)> {
        if self.order.is_empty() {
            return None;
        }
        let mut best: Option<(u32, S)> = None;
        self.search(&self.order, 0, query, filter, &mut best);
        best
    }

    fn search(
        &self,
        slice: &[u32],
        axis: usize,
        query: Vec3<S>,
        filter: &mut dyn FnMut(u32) -> bool,
        best: &mut Option<(u32, S)>,
    ) {
        if slice.is_empty() {
            return;
        }
        let mid = slice.len() / 2;
        let idx = slice[mid];
        let point = self.points[idx as usize];
        let d2 = {
            let d = math::sub(query, point);
            math::dot(d, d)
        };
        if filter(idx) && best.map_or(true, |(_, bd)| d2 < bd) {
            *best = Some((idx, d2));
        }

        let delta = query[axis] - point[axis];
        let (near, far) = if delta < S::zero() {
            (&slice[..mid], &slice[mid + 1..])
        } else {
            (&slice[mid + 1..], &slice[..mid])
        };
        let next_axis = (axis + 1) % 3;
        self.search(near, next_axis, query, filter, best);
        if best.map_or(true, |(_, bd)| delta * delta < bd) {
            self.search(far, next_axis, query, filter, best);
        }
    }
}

fn build_recursive<S: Real>(points: &[Vec3<S>], slice: &mut [u32], axis: usize) {
    if slice.len() <= 1 {
        return;
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis]
            .partial_cmp(&points[b as usize][axis])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let next_axis = (axis + 1) % 3;
    let (lo, rest) = slice.split_at_mut(mid);
    build_recursive(points, lo, next_axis);
    build_recursive(points, &mut rest[1..], next_axis);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn brute_nearest(points: &[[f64; 3]], q: [f64; 3]) -> (u32, f64) {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = math::sub(q, *p);
                (i as u32, math::dot(d, d))
            })
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap()
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let points: Vec<[f64; 3]> = (0..500)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        let tree = KdTree::build(&points);
        for _ in 0..200 {
            let q = [
                rng.gen_range(-1.2..1.2),
                rng.gen_range(-1.2..1.2),
                rng.gen_range(-1.2..1.2),
            ];
            let (bi, bd) = brute_nearest(&points, q);
            let (ti, td) = tree.nearest(q).unwrap();
            assert_eq!(bi, ti);
            assert!((bd - td).abs() < 1e-12);
        }
    }

    #[test]
    fn filter_skips_claimed_points() {
        let points = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        let tree = KdTree::build(&points);
        let claimed = 0u32;
        let (i, _) = tree
            .nearest_filtered([0.1, 0.0, 0.0], &mut |idx| idx != claimed)
            .unwrap();
        assert_eq!(i, 1);
    }

    #[test]
    fn empty_tree() {
        let tree = KdTree::<f64>::build(&[]);
        assert!(tree.nearest([0.0; 3]).is_none());
    }
}
