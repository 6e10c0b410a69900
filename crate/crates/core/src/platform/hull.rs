//! Convex polygon utilities for the cost-free region of accuracy pairs.

/// A point in the (true-positive, false-positive) plane.
pub type Point = (f64, f64);

/// Points closer than this to the region count as inside it.
pub const INSIDE_TOLERANCE: f64 = 1e-12;

/// Convex hull of a small point set, counter-clockwise, without collinear
/// vertices (Andrew's monotone chain). Degenerate inputs yield one or two
/// vertices.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// A closed convex region given by its counter-clockwise hull vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexRegion {
    vertices: Vec<Point>,
}

impl ConvexRegion {
    pub fn hull_of(points: &[Point]) -> Self {
        Self {
            vertices: convex_hull(points),
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Euclidean distance to the boundary.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        match self.vertices.len() {
            0 => f64::INFINITY,
            1 => segment_distance(p, self.vertices[0], self.vertices[0]),
            _ => self
                .edges()
                .map(|(a, b)| segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Inclusive membership test.
    pub fn contains(&self, p: Point) -> bool {
        if self.vertices.len() < 3 {
            return self.boundary_distance(p) <= INSIDE_TOLERANCE;
        }
        self.edges().all(|(a, b)| cross(a, b, p) >= 0.0) || self.boundary_distance(p) <= INSIDE_TOLERANCE
    }

    /// Distance to the region: zero inside, distance to the boundary outside.
    pub fn distance(&self, p: Point) -> f64 {
        if self.contains(p) {
            0.0
        } else {
            self.boundary_distance(p)
        }
    }
}
