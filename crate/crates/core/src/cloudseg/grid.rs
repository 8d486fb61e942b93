use rustc_hash::FxHashMap as HashMap;

use crate::geom::Vec3;

type Key = (i64, i64, i64);

/// Uniform hash grid over a point slice for radius and k-nearest queries.
pub(crate) struct SpatialGrid<'a> {
    points: &'a [Vec3],
    cell: f64,
    cells: HashMap<Key, Vec<usize>>,
    /// Largest axis span of the points.
    extent: f64,
}

impl<'a> SpatialGrid<'a> {
    pub fn new(points: &'a [Vec3], cell: f64) -> Self {
        let mut cells: HashMap<Key, Vec<usize>> = HashMap::default();
        for (i, p) in points.iter().enumerate() {
            cells.entry(key(p, cell)).or_default().push(i);
        }
        let extent = (0..3)
            .map(|a| {
                let (lo, hi) = points
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[a]), hi.max(p[a])));
                hi - lo
            })
            .fold(0.0, f64::max);
        Self { points, cell, cells, extent }
    }

    /// Removes and appends to `out` every point within `radius` of `p`.
    /// Used for flood fills where each point is claimed once.
    pub fn take_within(&mut self, p: &Vec3, radius: f64, out: &mut Vec<usize>) {
        debug_assert!(radius <= self.cell + 1e-12);
        let (cx, cy, cz) = key(p, self.cell);
        let r2 = radius * radius;
        let points = self.points;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.cells.get_mut(&(cx + dx, cy + dy, cz + dz)) {
                        ids.retain(|&j| {
                            let near = (points[j] - p).norm_squared() <= r2;
                            if near {
                                out.push(j);
                            }
                            !near
                        });
                    }
                }
            }
        }
    }

    /// Distances to the `k` nearest other points of point `i`, ascending.
    pub fn knn_distances(&self, i: usize, k: usize) -> Vec<f64> {
        if k == 0 {
            return Vec::new();
        }
        let p = self.points[i];
        let (cx, cy, cz) = key(&p, self.cell);
        let mut found: Vec<f64> = Vec::new();
        let mut ring = 0i64;
        loop {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        if let Some(ids) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                            found.extend(ids.iter().filter(|&&j| j != i).map(|&j| (self.points[j] - p).norm()));
                        }
                    }
                }
            }
            if found.len() > k {
                found.select_nth_unstable_by(k - 1, f64::total_cmp);
                found.truncate(k);
            }
            found.sort_by(f64::total_cmp);
            // Everything outside the scanned cube is at least `ring * cell` away.
            let covered = ring as f64 * self.cell;
            if found.len() >= k && found[k - 1] <= covered {
                return found;
            }
            if covered >= self.extent {
                return found;
            }
            ring += 1;
        }
    }
}

fn key(p: &Vec3, cell: f64) -> Key {
    (
        (p.x / cell).floor() as i64,
        (p.y / cell).floor() as i64,
        (p.z / cell).floor() as i64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn knn_matches_brute_force() {
        let mut r = crate::rng::rng(5);
        let pts: Vec<Vec3> = (0..300)
            .map(|_| Vec3::new(r.random::<f64>(), r.random::<f64>(), r.random::<f64>() * 0.2))
            .collect();
        let grid = SpatialGrid::new(&pts, 0.05);
        for i in [0, 17, 299] {
            let mut brute: Vec<f64> = (0..pts.len()).filter(|&j| j != i).map(|j| (pts[j] - pts[i]).norm()).collect();
            brute.sort_by(f64::total_cmp);
            assert_eq!(grid.knn_distances(i, 8), brute[..8].to_vec());
        }
        let mut grid = grid;
        let mut near = Vec::new();
        grid.take_within(&pts[3], 0.05, &mut near);
        near.sort();
        let brute: Vec<usize> = (0..pts.len()).filter(|&j| (pts[j] - pts[3]).norm() <= 0.05).collect();
        assert_eq!(near, brute);
        let mut again = Vec::new();
        grid.take_within(&pts[3], 0.05, &mut again);
        assert!(again.is_empty());
    }
}
