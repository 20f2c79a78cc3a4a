//! Exact nearest-neighbor queries over 3D point sets.

use nalgebra::Point3;

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// A kd-tree over points; exact nearest neighbors with pruning. Building
/// is deterministic (ties broken by point index).
pub struct KdTree3 {
    points: Vec<Point3<f64>>,
    order: Vec<u32>,
    nodes: Vec<Node>,
    root: usize,
}

const LEAF_SIZE: usize = 8;

impl KdTree3 {
    pub fn build(points: &[Point3<f64>]) -> Self {
        let mut tree = KdTree3 {
            points: points.to_vec(),
            order: (0..points.len() as u32).collect(),
            nodes: Vec::new(),
            root: 0,
        };
        if !points.is_empty() {
            tree.root = tree.split(0, points.len());
        }
        tree
    }

    fn split(&mut self, start: usize, end: usize) -> usize {
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        // Widest axis of the bounding box.
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            let p = self.points[i as usize];
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap();
        let mid = (start + end) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a as usize][axis]
                .total_cmp(&points[b as usize][axis])
                .then(a.cmp(&b))
        });
        let value = self.points[self.order[mid] as usize][axis];
        let left = self.split(start, mid);
        let right = self.split(mid, end);
        self.nodes.push(Node::Split {
            axis,
            value,
            left,
            right,
        });
        self.nodes.len() - 1
    }

    /// Index of the nearest point and its squared distance.
    pub fn nearest(&self, q: &Point3<f64>) -> (usize, f64) {
        debug_assert!(!self.points.is_empty());
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(self.root, q, &mut best);
        best
    }

    fn search(&self, node: usize, q: &Point3<f64>, best: &mut (usize, f64)) {
        match &self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[*start..*end] {
                    let d = (self.points[i as usize] - q).norm_squared();
                    if d < best.1 {
                        *best = (i as usize, d);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = q[*axis] - value;
                let (near, far) = if delta < 0.0 {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.search(near, q, best);
                if delta * delta < best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn matches_brute_force() {
        let mut rng = crate::rng::stream(11, "kdtree-test", 0);
        let points: Vec<Point3<f64>> = (0..500)
            .map(|_| Point3::new(rng.gen(), rng.gen(), rng.gen()))
            .collect();
        let tree = KdTree3::build(&points);
        for _ in 0..200 {
            let q = Point3::new(
                rng.gen::<f64>() * 2.0 - 0.5,
                rng.gen::<f64>() * 2.0 - 0.5,
                rng.gen::<f64>() * 2.0 - 0.5,
            );
            let (_, d) = tree.nearest(&q);
            let brute = points
                .iter()
                .map(|p| (p - q).norm_squared())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(d, brute);
        }
    }
}
