//! Small 2D helpers shared by the track generator, the car and the renderer.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(libm::cos(theta), libm::sin(theta))
    }

    pub fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self.scale(1.0 / n)
        } else {
            Vec2::ZERO
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Even-odd crossing test. Points on a left/bottom edge count as inside and
/// points on a right/top edge as outside, so two polygons sharing an edge
/// never both claim a point on it.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn is_convex(poly: &[Vec2]) -> bool {
    let n = poly.len();
    let mut sign = 0.0f64;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        let z = b.sub(a).cross(c.sub(b));
        if z != 0.0 {
            if sign == 0.0 {
                sign = z.signum();
            } else if z.signum() != sign {
                return false;
            }
        }
    }
    true
}

/// Proper or touching intersection of segments `ab` and `cd`.
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Distance from `p` to segment `ab`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 {
        (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.sub(a.add(ab.scale(t))).norm()
}

/// Radius of the circle through three points; infinite when collinear.
pub fn circumradius(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let area2 = b.sub(a).cross(c.sub(a)).abs();
    if area2 == 0.0 {
        return f64::INFINITY;
    }
    b.sub(a).norm() * c.sub(b).norm() * a.sub(c).norm() / (2.0 * area2)
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Vec2> {
        vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn inside_outside() {
        let sq = square();
        assert!(point_in_polygon(Vec2::new(0.5, 0.5), &sq));
        assert!(!point_in_polygon(Vec2::new(1.5, 0.5), &sq));
        assert!(!point_in_polygon(Vec2::new(0.5, -0.1), &sq));
    }

    #[test]
    fn shared_edge_claimed_once() {
        let left = square();
        let right: Vec<Vec2> = left.iter().map(|p| p.add(Vec2::new(1.0, 0.0))).collect();
        for k in 1..10 {
            let p = Vec2::new(1.0, k as f64 / 10.0);
            assert!(point_in_polygon(p, &left) != point_in_polygon(p, &right));
        }
    }

    #[test]
    fn convexity() {
        assert!(is_convex(&square()));
        let dart = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 1.0),
            Vec2::new(0.0, 2.0),
            Vec2::new(0.5, 1.0),
        ];
        assert!(!is_convex(&dart));
    }

    #[test]
    fn crossing_segments() {
        let (a, b) = (Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0));
        assert!(segments_intersect(a, b, Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)));
        assert!(!segments_intersect(a, b, Vec2::new(2.0, 0.0), Vec2::new(3.0, 1.0)));
        assert!(segments_intersect(a, b, Vec2::new(1.0, 1.0), Vec2::new(2.0, 0.0)));
    }

    #[test]
    fn circle_radius() {
        let r = circumradius(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(-1.0, 0.0));
        assert!((r - 1.0).abs() < 1e-12);
        assert!(circumradius(Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)).is_infinite());
    }
}
