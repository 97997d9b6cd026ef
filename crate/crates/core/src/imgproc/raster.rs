//! Even-odd scanline fill of simple polygons.
//!
//! Pixel `(c, r)` covers `[c, c+1) x [r, r+1)` and is sampled at its center
//! `(c + 0.5, r + 0.5)`. Centers lying exactly on an edge count as inside.

use crate::error::{Error, Result};
use crate::imgproc::hull::{Point, Polygon};
use crate::types::BinaryMask;

pub fn rasterize(poly: &Polygon, width: usize, height: usize) -> Result<BinaryMask> {
    if poly.area().abs() == 0.0 {
        return Err(Error::DegeneratePolygon("zero area".into()));
    }
    let mut mask = BinaryMask::empty(width, height);
    let verts = poly.vertices();
    let n = verts.len();
    let edges: Vec<(Point, Point)> = (0..n).map(|i| (verts[i], verts[(i + 1) % n])).collect();

    let (ymin, ymax) = verts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.y), hi.max(p.y))
        });
    let row_lo = ((ymin - 0.5).ceil().max(0.0)) as usize;
    let row_hi = ((ymax - 0.5).floor()).min(height as f64 - 1.0);
    if row_hi < 0.0 {
        return Ok(mask);
    }
    let row_hi = row_hi as usize;

    let mut crossings: Vec<f64> = Vec::new();
    for row in row_lo..=row_hi {
        let yc = row as f64 + 0.5;
        crossings.clear();
        for &(a, b) in &edges {
            // Half-open rule: each vertex is counted once.
            if (a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y) {
                crossings.push(x_at(a, b, yc));
            }
        }
        crossings.sort_by(|p, q| p.total_cmp(q));
        for pair in crossings.chunks_exact(2) {
            fill_span(&mut mask, row, pair[0], pair[1]);
        }
        // Centers on the boundary, including horizontal edges and the top/bottom
        // vertices the half-open rule skips.
        for &(a, b) in &edges {
            if a.y == yc && b.y == yc {
                fill_span(&mut mask, row, a.x.min(b.x), a.x.max(b.x));
            } else if (a.y <= yc && yc <= b.y) || (b.y <= yc && yc <= a.y) {
                let x = x_at(a, b, yc);
                let c = x - 0.5;
                if c == c.round() && c >= 0.0 && c < width as f64 {
                    mask.set(c as usize, row, true);
                }
            }
        }
    }
    Ok(mask)
}

fn x_at(a: Point, b: Point, y: f64) -> f64 {
    // Multiply before dividing so half-integer results stay exact.
    a.x + ((y - a.y) * (b.x - a.x)) / (b.y - a.y)
}

/// Sets every pixel in `row` whose center lies in `[x0, x1]`.
fn fill_span(mask: &mut BinaryMask, row: usize, x0: f64, x1: f64) {
    let width = mask.width();
    let first = (x0 - 0.5).ceil().max(0.0);
    let last = (x1 - 0.5).floor().min(width as f64 - 1.0);
    if last < first {
        return;
    }
    for col in first as usize..=last as usize {
        mask.set(col, row, true);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(pts: &[(f64, f64)]) -> Polygon {
        Polygon::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn square_covers_one_hundred_centers() {
        let p = poly(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]);
        let m = rasterize(&p, 20, 20).unwrap();
        assert_eq!(m.area(), 100);
        assert!(m.get(9, 9));
        assert!(!m.get(10, 10));
    }

    #[test]
    fn sliver_triangle_covers_nothing() {
        let p = poly(&[(0.6, 0.6), (0.9, 0.6), (0.9, 0.9)]);
        let m = rasterize(&p, 4, 4).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn full_frame_sets_everything() {
        let p = poly(&[(0.0, 0.0), (7.0, 0.0), (7.0, 5.0), (0.0, 5.0)]);
        assert_eq!(rasterize(&p, 7, 5).unwrap().area(), 35);
    }

    #[test]
    fn boundary_centers_are_inside() {
        // Square through pixel centers: corners (1.5, 1.5)..(4.5, 4.5).
        let p = poly(&[(1.5, 1.5), (4.5, 1.5), (4.5, 4.5), (1.5, 4.5)]);
        let m = rasterize(&p, 6, 6).unwrap();
        assert_eq!(m.area(), 16);
        // Diamond with vertices on centers.
        let d = poly(&[(2.5, 0.5), (4.5, 2.5), (2.5, 4.5), (0.5, 2.5)]);
        let m = rasterize(&d, 5, 5).unwrap();
        assert_eq!(m.area(), 13);
        assert!(m.get(2, 0) && m.get(4, 2) && m.get(2, 4) && m.get(0, 2) && m.get(3, 1));
    }

    #[test]
    fn concave_polygon_even_odd() {
        // U shape: notch between x in [2, 4] above y = 2.
        let p = poly(&[
            (0.0, 0.0),
            (6.0, 0.0),
            (6.0, 6.0),
            (4.0, 6.0),
            (4.0, 2.0),
            (2.0, 2.0),
            (2.0, 6.0),
            (0.0, 6.0),
        ]);
        let m = rasterize(&p, 6, 6).unwrap();
        assert_eq!(m.area(), 36 - 8);
        assert!(!m.get(2, 3) && !m.get(3, 5));
        assert!(m.get(2, 1) && m.get(1, 5));
    }

    #[test]
    fn clipped_to_grid() {
        let p = poly(&[(-5.0, -5.0), (50.0, -5.0), (50.0, 50.0), (-5.0, 50.0)]);
        assert_eq!(rasterize(&p, 4, 3).unwrap().area(), 12);
    }
}
