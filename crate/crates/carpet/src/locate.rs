//! Spatial hashing for point identification up to a tolerance.

use std::collections::HashMap;

use crate::geometry::Point;

/// Uniform-grid index answering "which known point is within `tol` of z?".
///
/// Grid cells have side `2·tol`, so any match lies in the 3×3 block of
/// cells around the query.
pub(crate) struct PointLocator {
    tol: f64,
    cell: f64,
    grid: HashMap<(i64, i64), Vec<u32>>,
    points: Vec<Point>,
}

impl PointLocator {
    pub fn new(tol: f64) -> Self {
        assert!(tol > 0.0);
        PointLocator {
            tol,
            cell: 2.0 * tol,
            grid: HashMap::new(),
            points: Vec::new(),
        }
    }

    pub fn from_points(points: impl IntoIterator<Item = Point>, tol: f64) -> Self {
        let mut locator = Self::new(tol);
        for p in points {
            locator.insert_or_get(p);
        }
        locator
    }

    fn key(&self, p: Point) -> (i64, i64) {
        (
            (p.re / self.cell).floor() as i64,
            (p.im / self.cell).floor() as i64,
        )
    }

    /// Id of the first stored point within `tol`, if any.
    pub fn find(&self, p: Point) -> Option<u32> {
        let (gx, gy) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = self.grid.get(&(gx + dx, gy + dy)) {
                    for &i in bucket {
                        if (self.points[i as usize] - p).norm() <= self.tol {
                            return Some(i);
                        }
                    }
                }
            }
        }
        None
    }

    /// Id of the point matching `p`, inserting it as new if none matches.
    pub fn insert_or_get(&mut self, p: Point) -> u32 {
        if let Some(i) = self.find(p) {
            return i;
        }
        let i = self.points.len() as u32;
        self.points.push(p);
        self.grid.entry(self.key(p)).or_default().push(i);
        i
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.points.len()
    }
}
