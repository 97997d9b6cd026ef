//! Simple polygons and the k-nearest-neighbours concave hull of Moreira and
//! Santos (2007), with a monotone-chain convex hull as the fallback.
//!
//! All predicates are orientation tests on `f64` coordinates. They are exact
//! for the pixel-center (half-integer) coordinates the synthesis stage feeds in.

use std::cmp::Ordering;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn dist2(self, o: Point) -> f64 {
        let d = self.sub(o);
        d.x * d.x + d.y * d.y
    }
}

fn cross(u: Point, v: Point) -> f64 {
    u.x * v.y - u.y * v.x
}

fn dot(u: Point, v: Point) -> f64 {
    u.x * v.x + u.y * v.y
}

/// Twice the signed area of triangle `abc`; positive when counter-clockwise
/// in a y-up frame.
fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(b.sub(a), c.sub(a))
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    orient(a, b, p) == 0.0
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection, touching and collinear overlap included.
fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(p1, q1, q2)
        || on_segment(p2, q1, q2)
        || on_segment(q1, p1, p2)
        || on_segment(q2, p1, p2)
}

/// A simple (non-self-intersecting) polygon with at least three vertices.
/// The closing edge from the last vertex back to the first is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegeneratePolygon(format!(
                "{} vertices",
                vertices.len()
            )));
        }
        if vertices
            .iter()
            .any(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::DegeneratePolygon("non-finite coordinate".into()));
        }
        if !is_simple(&vertices) {
            return Err(Error::DegeneratePolygon("self-intersecting".into()));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Signed shoelace area.
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Boundary-inclusive point containment.
    pub fn contains(&self, p: Point) -> bool {
        contains(&self.vertices, p)
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>() / 2.0
}

fn contains(v: &[Point], p: Point) -> bool {
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if on_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn is_simple(v: &[Point]) -> bool {
    let n = v.len();
    for i in 0..n {
        let (a1, a2) = (v[i], v[(i + 1) % n]);
        if a1 == a2 {
            return false;
        }
        for j in i + 1..n {
            let (b1, b2) = (v[j], v[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Neighbouring edges may only share their common vertex.
                let (shared, other_a, other_b) = if j == i + 1 {
                    (a2, a1, b2)
                } else {
                    (a1, a2, b1)
                };
                if orient(other_a, shared, other_b) == 0.0
                    && dot(other_a.sub(shared), other_b.sub(shared)) > 0.0
                {
                    return false;
                }
                continue;
            }
            if segments_intersect(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

fn dedup_points(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    pts
}

fn check_input(points: &[Point]) -> Result<Vec<Point>> {
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::DegeneratePolygon("non-finite coordinate".into()));
    }
    let pts = dedup_points(points);
    if pts.len() < 3 {
        return Err(Error::TooFewPoints(pts.len()));
    }
    let (a, b) = (pts[0], pts[1]);
    if pts[2..].iter().all(|&c| orient(a, b, c) == 0.0) {
        return Err(Error::CollinearPoints);
    }
    Ok(pts)
}

/// Monotone-chain convex hull; collinear boundary points are dropped.
pub fn convex_hull(points: &[Point]) -> Result<Polygon> {
    let pts = check_input(points)?;
    Ok(Polygon {
        vertices: monotone_chain(&pts),
    })
}

/// `pts` must be sorted by (x, y) and deduplicated.
fn monotone_chain(pts: &[Point]) -> Vec<Point> {
    let mut lower: Vec<Point> = Vec::new();
    for &p in pts {
        while lower.len() >= 2 && orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// k-nearest-neighbours concave hull.
///
/// Starting at the lowest point (smallest `y`, then smallest `x`), the hull
/// walks to whichever of the `k` nearest unused points makes the widest turn
/// away from the previous edge without crossing the hull built so far. If
/// the walk gets stuck, or the finished polygon misses a point, the whole
/// construction restarts with `k + 1`. Once `k` reaches the number of
/// points the convex hull is returned. The result contains every input
/// point, boundary inclusive.
pub fn concave_hull(points: &[Point], k: usize) -> Result<Polygon> {
    let pts = check_input(points)?;
    if pts.len() == 3 {
        return Polygon::new(pts);
    }
    let mut k = k.max(3);
    while k < pts.len() {
        if let Some(poly) = knn_walk(&pts, k) {
            return Ok(poly);
        }
        k += 1;
    }
    Ok(Polygon {
        vertices: monotone_chain(&pts),
    })
}

/// Orders directions by counter-clockwise angle from `reference`, in `[0, 2pi)`.
fn angle_cmp(reference: Point, u: Point, v: Point) -> Ordering {
    let half = |d: Point| {
        let c = cross(reference, d);
        if c > 0.0 || (c == 0.0 && dot(reference, d) > 0.0) {
            0
        } else {
            1
        }
    };
    half(u).cmp(&half(v)).then_with(|| {
        let c = cross(u, v);
        if c > 0.0 {
            Ordering::Less
        } else if c < 0.0 {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    })
}

fn knn_walk(pts: &[Point], k: usize) -> Option<Polygon> {
    let first = (0..pts.len())
        .min_by(|&a, &b| {
            pts[a]
                .y
                .total_cmp(&pts[b].y)
                .then(pts[a].x.total_cmp(&pts[b].x))
        })
        .expect("non-empty");
    let mut available: Vec<usize> = (0..pts.len()).filter(|&i| i != first).collect();
    let mut hull: Vec<usize> = vec![first];
    let mut current = first;
    // Backward direction from the current point toward the previous one.
    let mut reference = Point::new(1.0, 0.0);
    let mut candidates: Vec<usize> = Vec::with_capacity(k + 1);

    while !available.is_empty() {
        if hull.len() == 4 {
            available.push(first);
        }
        let here = pts[current];
        candidates.clear();
        candidates.extend_from_slice(&available);
        let by_distance = |a: &usize, b: &usize| {
            here.dist2(pts[*a])
                .total_cmp(&here.dist2(pts[*b]))
                .then(a.cmp(b))
        };
        if candidates.len() > k {
            candidates.select_nth_unstable_by(k - 1, by_distance);
            candidates.truncate(k);
        }
        candidates.sort_by(|a, b| {
            angle_cmp(reference, pts[*b].sub(here), pts[*a].sub(here))
                .then_with(|| by_distance(a, b))
        });

        let chosen = candidates.iter().copied().find(|&c| {
            let closing = c == first;
            let target = pts[c];
            // Skip the edge ending at `current`, and the first edge when closing.
            let last_edge = hull.len().saturating_sub(2);
            (0..hull.len().saturating_sub(1)).all(|i| {
                if i == last_edge || (closing && i == 0) {
                    return true;
                }
                !segments_intersect(here, target, pts[hull[i]], pts[hull[i + 1]])
            })
        })?;

        if chosen == first {
            break;
        }
        let pos = available
            .iter()
            .position(|&i| i == chosen)
            .expect("candidate is available");
        available.swap_remove(pos);
        reference = here.sub(pts[chosen]);
        hull.push(chosen);
        current = chosen;
    }
    if hull.len() < 3 {
        return None;
    }
    let vertices: Vec<Point> = hull.iter().map(|&i| pts[i]).collect();
    if signed_area(&vertices) == 0.0 || !is_simple(&vertices) {
        return None;
    }
    if !pts.iter().all(|&p| contains(&vertices, p)) {
        return None;
    }
    Some(Polygon { vertices })
}
