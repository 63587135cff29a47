//! Convex polygons: hull construction, containment, and separating-axis tests.

use serde::{Deserialize, Serialize};

use crate::affine::AffineMap;
use crate::geom::Vec2;

/// Counter-clockwise convex polygon. `closed` is false when the polygon is a
/// truncation of a hull with infinitely many vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    pub vertices: Vec<Vec2>,
    pub closed: bool,
}

impl ConvexPolygon {
    /// Convex hull of a point cloud (Andrew's monotone chain). Points closer than
    /// `tol` are merged and vertices within `tol` of the chord of their
    /// neighbours are dropped, so the result is strictly convex.
    pub fn hull_of(points: &[Vec2], tol: f64) -> ConvexPolygon {
        let mut pts: Vec<Vec2> = points.iter().copied().filter(|p| p.is_finite()).collect();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup_by(|a, b| a.dist(*b) <= tol);
        if pts.len() < 3 {
            return ConvexPolygon {
                vertices: pts,
                closed: true,
            };
        }
        let mut lower: Vec<Vec2> = Vec::with_capacity(pts.len());
        for &p in &pts {
            while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p, tol) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Vec2> = Vec::with_capacity(pts.len());
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p, tol) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        if lower.len() > 1 && lower[0].dist(lower[lower.len() - 1]) <= tol {
            lower.pop();
        }
        ConvexPolygon {
            vertices: lower,
            closed: true,
        }
    }

    /// Trusts the caller that `vertices` are convex and counter-clockwise.
    pub fn from_ccw(vertices: Vec<Vec2>, closed: bool) -> ConvexPolygon {
        ConvexPolygon { vertices, closed }
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> ConvexPolygon {
        ConvexPolygon::from_ccw(
            vec![
                Vec2::new(x0, y0),
                Vec2::new(x1, y0),
                Vec2::new(x1, y1),
                Vec2::new(x0, y1),
            ],
            true,
        )
    }

    /// Regular `n`-gon circumscribing the disc of the given radius.
    pub fn circumscribed(center: Vec2, radius: f64, n: usize) -> ConvexPolygon {
        let r = radius / (std::f64::consts::PI / n as f64).cos();
        let verts = (0..n)
            .map(|k| center + Vec2::from_angle(2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64) * r)
            .collect();
        ConvexPolygon::from_ccw(verts, true)
    }

    /// Intersection of half-planes `<x, n_k> <= h_k`, normals given in
    /// increasing angular order with consecutive gaps below π.
    pub fn from_halfplanes(normals: &[Vec2], offsets: &[f64], tol: f64) -> ConvexPolygon {
        assert_eq!(normals.len(), offsets.len());
        let k = normals.len();
        let mut pts = Vec::with_capacity(k);
        for i in 0..k {
            let j = (i + 1) % k;
            let (n1, n2) = (normals[i], normals[j]);
            let det = n1.cross(n2);
            if det.abs() < 1e-300 {
                continue;
            }
            let (h1, h2) = (offsets[i], offsets[j]);
            pts.push(Vec2::new((h1 * n2.y - h2 * n1.y) / det, (n1.x * h2 - n2.x * h1) / det));
        }
        ConvexPolygon::hull_of(&pts, tol)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Unit outward normals, one per edge.
    pub fn edge_normals(&self) -> Vec<Vec2> {
        self.edges()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (b - a).perp_cw().normalized())
            .collect()
    }

    /// `max <v, d>` over the vertices.
    pub fn support(&self, d: Vec2) -> f64 {
        self.vertices.iter().map(|v| v.dot(d)).fold(f64::NEG_INFINITY, f64::max)
    }

    fn support_min(&self, d: Vec2) -> f64 {
        self.vertices.iter().map(|v| v.dot(d)).fold(f64::INFINITY, f64::min)
    }

    /// Largest edge-wise signed distance of `p`: negative inside, and a lower
    /// bound on the Euclidean distance outside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        match self.vertices.len() {
            0 => f64::INFINITY,
            1 => p.dist(self.vertices[0]),
            2 => segment_distance(p, self.vertices[0], self.vertices[1]),
            _ => self
                .edges()
                .filter(|(a, b)| a != b)
                .map(|(a, b)| (p - a).dot((b - a).perp_cw().normalized()))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        self.signed_distance(p) <= tol
    }

    /// Euclidean distance from `p` to the polygon (zero inside).
    pub fn distance(&self, p: Vec2) -> f64 {
        if self.vertices.len() >= 3 && self.signed_distance(p) <= 0.0 {
            return 0.0;
        }
        match self.vertices.len() {
            0 => f64::INFINITY,
            1 => p.dist(self.vertices[0]),
            _ => self
                .edges()
                .map(|(a, b)| segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Separating-axis margin: the largest gap between the projections of the two
    /// polygons over all edge normals of either. Positive means disjoint.
    pub fn separation(&self, other: &ConvexPolygon) -> f64 {
        let mut axes = self.edge_normals();
        axes.extend(other.edge_normals());
        if axes.is_empty() {
            return match (self.vertices.first(), other.vertices.first()) {
                (Some(a), Some(b)) => a.dist(*b),
                _ => f64::INFINITY,
            };
        }
        let mut best = f64::NEG_INFINITY;
        for d in axes {
            let gap = (other.support_min(d) - self.support(d)).max(self.support_min(d) - other.support(d));
            best = best.max(gap);
        }
        best
    }

    /// Image under an affine map, re-oriented counter-clockwise.
    pub fn transformed(&self, f: &AffineMap) -> ConvexPolygon {
        let mut vertices: Vec<Vec2> = self.vertices.iter().map(|&v| f.apply(v)).collect();
        if f.linear.det() < 0.0 {
            vertices.reverse();
        }
        ConvexPolygon {
            vertices,
            closed: self.closed,
        }
    }

    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut best: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                best = best.max(v[i].dist(v[j]));
            }
        }
        best
    }

    /// Mitered outward offset; contains the Minkowski sum with a disc of radius `eps`.
    pub fn inflate(&self, eps: f64) -> ConvexPolygon {
        if self.vertices.len() < 3 {
            let c = self.vertices.first().copied().unwrap_or(Vec2::ZERO);
            let r = self.diameter() + eps;
            return ConvexPolygon::circumscribed(c, r, 8);
        }
        let normals = self.edge_normals();
        let offsets: Vec<f64> = self
            .edges()
            .filter(|(a, b)| a != b)
            .zip(&normals)
            .map(|((a, _), n)| a.dot(*n) + eps)
            .collect();
        ConvexPolygon::from_halfplanes(&normals, &offsets, 0.0)
    }

    pub fn area(&self) -> f64 {
        self.edges().map(|(a, b)| a.cross(b)).sum::<f64>() / 2.0
    }

    pub fn centroid_of_vertices(&self) -> Vec2 {
        let n = self.vertices.len().max(1) as f64;
        self.vertices.iter().fold(Vec2::ZERO, |acc, &v| acc + v) * (1.0 / n)
    }

    /// Minimum over consecutive vertex triples of the turn (cross product).
    pub fn min_turn(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                let c = self.vertices[(i + 2) % n];
                (b - a).cross(c - b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// One `x,y` line per vertex.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            s.push_str(&format!("{:.17e},{:.17e}\n", v.x, v.y));
        }
        s
    }
}

/// Signed turn of `a → b → c`, zeroed when `b` is within `tol` of the chord `ac`.
fn turn(a: Vec2, b: Vec2, c: Vec2, tol: f64) -> f64 {
    let cr = (b - a).cross(c - a);
    let len = a.dist(c);
    if len > 0.0 && cr.abs() / len <= tol {
        0.0
    } else {
        cr
    }
}

fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}
