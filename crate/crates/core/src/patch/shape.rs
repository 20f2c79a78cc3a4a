//! Padded triangular-lattice geometry shared by patches and network
//! layers.
//!
//! A patch at subdivision level `l` with pad width `w` is stored as a
//! dense square array of side `2^l + 1 + 2w` in axial coordinates
//! `(i, j)`, `i, j in [-w, 2^l + w]`. The interior is the barycentric
//! triangle `i, j >= 0, i + j <= 2^l`; a cell is valid when its lattice
//! distance to the triangle is at most `w`, which in deficit form is
//! `max(0,-i) + max(0,-j) + max(0, i+j-n) <= w`.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

/// Lattice geometry of one padded patch resolution.
#[derive(Debug)]
pub struct GridShape {
    pub level: u32,
    pub pad: u32,
    /// Triangle side length `2^level`.
    pub n: i32,
    /// Square storage side `n + 1 + 2 * pad`.
    pub side: usize,
    /// Per storage cell: lattice distance to the interior triangle <= pad.
    pub valid: Vec<bool>,
    /// Per storage cell: inside the barycentric triangle.
    pub interior: Vec<bool>,
    pub valid_count: usize,
    pub interior_count: usize,
    /// Storage indices of valid cells, ascending.
    pub valid_cells: Vec<u32>,
    /// Storage indices of interior cells, ascending.
    pub interior_cells: Vec<u32>,
}

/// Closed-form valid-cell count: `T(n+1) + sum_{k=1..w} 3(n + 2k)` with
/// `T(m) = m(m+1)/2` and `n = 2^level`.
pub fn closed_form_valid_count(level: u32, pad: u32) -> usize {
    let n = 1usize << level;
    let m = n + 1;
    let mut count = m * (m + 1) / 2;
    for k in 1..=pad as usize {
        count += 3 * (n + 2 * k);
    }
    count
}

impl GridShape {
    fn build(level: u32, pad: u32) -> GridShape {
        let n = 1i32 << level;
        let w = pad as i32;
        let side = (n + 1 + 2 * w) as usize;
        let mut valid = vec![false; side * side];
        let mut interior = vec![false; side * side];
        let mut valid_cells = Vec::new();
        let mut interior_cells = Vec::new();
        for i in -w..=(n + w) {
            for j in -w..=(n + w) {
                let idx = ((i + w) as usize) * side + (j + w) as usize;
                let deficit = (-i).max(0) + (-j).max(0) + (i + j - n).max(0);
                if deficit <= w {
                    valid[idx] = true;
                    valid_cells.push(idx as u32);
                    if deficit == 0 {
                        interior[idx] = true;
                        interior_cells.push(idx as u32);
                    }
                }
            }
        }
        let shape = GridShape {
            level,
            pad,
            n,
            side,
            valid_count: valid_cells.len(),
            interior_count: interior_cells.len(),
            valid,
            interior,
            valid_cells,
            interior_cells,
        };
        debug_assert_eq!(shape.valid_count, closed_form_valid_count(level, pad));
        shape
    }

    /// Storage index of lattice coordinates, if they are inside the square
    /// array (validity not implied).
    pub fn index_of(&self, i: i32, j: i32) -> Option<usize> {
        let w = self.pad as i32;
        if i < -w || j < -w || i > self.n + w || j > self.n + w {
            return None;
        }
        Some(((i + w) as usize) * self.side + (j + w) as usize)
    }

    /// Lattice coordinates of a storage index.
    pub fn coords_of(&self, idx: usize) -> (i32, i32) {
        let w = self.pad as i32;
        ((idx / self.side) as i32 - w, (idx % self.side) as i32 - w)
    }

    pub fn is_valid(&self, i: i32, j: i32) -> bool {
        self.index_of(i, j).map(|x| self.valid[x]).unwrap_or(false)
    }

    pub fn is_interior(&self, i: i32, j: i32) -> bool {
        self.index_of(i, j)
            .map(|x| self.interior[x])
            .unwrap_or(false)
    }

    /// The 120-degree lattice rotation `(i, j) -> (n - i - j, i)`, as a map
    /// from each valid storage cell to its image. The rotation permutes the
    /// valid set and preserves the interior.
    pub fn rotation_map(&self) -> Vec<(u32, u32)> {
        self.valid_cells
            .iter()
            .map(|&idx| {
                let (i, j) = self.coords_of(idx as usize);
                let (ri, rj) = (self.n - i - j, i);
                let target = self
                    .index_of(ri, rj)
                    .expect("rotation stays inside storage");
                debug_assert!(self.valid[target]);
                (idx, target as u32)
            })
            .collect()
    }
}

/// Hexagonal-lattice tap offsets for a kernel of the given radius, in the
/// frozen canonical order: center, then ring 1 counterclockwise from
/// `(+1, 0)`, then ring 2 counterclockwise from `(+2, 0)`.
pub fn tap_offsets(radius: u32) -> Vec<(i32, i32)> {
    let mut taps = vec![(0, 0)];
    if radius >= 1 {
        taps.extend([(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)]);
    }
    if radius >= 2 {
        taps.extend([
            (2, 0),
            (1, 1),
            (0, 2),
            (-1, 2),
            (-2, 2),
            (-2, 1),
            (-2, 0),
            (-1, -1),
            (0, -2),
            (1, -2),
            (2, -2),
            (2, -1),
        ]);
    }
    assert!(radius <= 2, "kernel radius > 2 not supported");
    taps
}

/// Number of taps for a kernel radius: `1 + 3r(r+1)`.
pub fn tap_count(radius: u32) -> usize {
    (1 + 3 * radius * (radius + 1)) as usize
}

static REGISTRY: LazyLock<Mutex<HashMap<(u32, u32), Arc<GridShape>>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

/// Shared shape for `(level, pad)`; instances are cached globally.
pub fn grid_shape(level: u32, pad: u32) -> Arc<GridShape> {
    let mut registry = REGISTRY.lock().unwrap();
    registry
        .entry((level, pad))
        .or_insert_with(|| Arc::new(GridShape::build(level, pad)))
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashSet, VecDeque};

    /// Independent oracle: BFS over the hexagonal lattice from the interior
    /// triangle, counting cells within `pad` steps.
    fn bfs_valid_count(level: u32, pad: u32) -> usize {
        let n = 1i32 << level;
        let neighbors = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
        let mut dist: HashMap<(i32, i32), u32> = HashMap::new();
        let mut queue = VecDeque::new();
        for i in 0..=n {
            for j in 0..=(n - i) {
                dist.insert((i, j), 0);
                queue.push_back((i, j));
            }
        }
        while let Some((i, j)) = queue.pop_front() {
            let d = dist[&(i, j)];
            if d == pad {
                continue;
            }
            for (di, dj) in neighbors {
                let key = (i + di, j + dj);
                dist.entry(key).or_insert_with(|| {
                    queue.push_back(key);
                    d + 1
                });
            }
        }
        dist.len()
    }

    #[test]
    fn network_io_sizes() {
        assert_eq!(grid_shape(3, 2).valid_count, 111);
        assert_eq!(grid_shape(2, 1).valid_count, 33);
        assert_eq!(grid_shape(1, 0).valid_count, 6);
        assert_eq!(grid_shape(3, 2).interior_count, 45);
        assert_eq!(grid_shape(2, 1).interior_count, 15);
        assert_eq!(grid_shape(1, 0).interior_count, 6);
    }

    #[test]
    fn closed_form_matches_bfs_enumeration() {
        for level in 1..=4 {
            for pad in 0..=2 {
                let formula = closed_form_valid_count(level, pad);
                let bfs = bfs_valid_count(level, pad);
                let shape = grid_shape(level, pad);
                assert_eq!(formula, bfs, "level {level} pad {pad}");
                assert_eq!(shape.valid_count, bfs, "level {level} pad {pad}");
            }
        }
    }

    #[test]
    fn bfs_membership_matches_deficit_rule() {
        let shape = grid_shape(3, 2);
        let n = 8i32;
        let neighbors = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
        let mut frontier: HashSet<(i32, i32)> = HashSet::new();
        for i in 0..=n {
            for j in 0..=(n - i) {
                frontier.insert((i, j));
            }
        }
        let mut all = frontier.clone();
        for _ in 0..2 {
            let mut next = HashSet::new();
            for &(i, j) in &frontier {
                for (di, dj) in neighbors {
                    if !all.contains(&(i + di, j + dj)) {
                        next.insert((i + di, j + dj));
                    }
                }
            }
            all.extend(next.iter().copied());
            frontier = next;
        }
        for i in -2..=(n + 2) {
            for j in -2..=(n + 2) {
                assert_eq!(shape.is_valid(i, j), all.contains(&(i, j)), "({i},{j})");
            }
        }
    }

    #[test]
    fn rotation_permutes_valid_cells_and_interior() {
        for (level, pad) in [(3, 2), (2, 1), (1, 0)] {
            let shape = grid_shape(level, pad);
            let map = shape.rotation_map();
            let targets: HashSet<u32> = map.iter().map(|&(_, t)| t).collect();
            assert_eq!(targets.len(), shape.valid_count);
            for &(src, dst) in &map {
                assert!(shape.valid[dst as usize]);
                assert_eq!(
                    shape.interior[src as usize],
                    shape.interior[dst as usize]
                );
            }
        }
    }

    #[test]
    fn tap_counts() {
        assert_eq!(tap_count(1), 7);
        assert_eq!(tap_count(2), 19);
        assert_eq!(tap_offsets(1).len(), 7);
        assert_eq!(tap_offsets(2).len(), 19);
    }
}
