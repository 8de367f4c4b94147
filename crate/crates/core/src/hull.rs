//! Incremental 3-D convex hull, used to estimate the Cartesian volume a
//! dataset covers.
//!
//! Plain f64 arithmetic with a 1e-9 m coplanarity tolerance; the volume is
//! reporting metadata, not a training input, so exact predicates are not
//! required.

use crate::math::Vec3;
use crate::{Error, Result};

const EPS: f64 = 1e-9;

#[derive(Clone, Copy)]
struct Face {
    v: [usize; 3],
    normal: Vec3,
    offset: f64,
}

impl Face {
    fn new(points: &[Vec3], a: usize, b: usize, c: usize, interior: Vec3) -> Face {
        let n = (points[b] - points[a]).cross(points[c] - points[a]);
        let mut face = Face { v: [a, b, c], normal: n, offset: n.dot(points[a]) };
        if face.signed_dist(interior) > 0.0 {
            face = Face {
                v: [a, c, b],
                normal: -n,
                offset: (-n).dot(points[a]),
            };
        }
        face
    }

    fn signed_dist(&self, p: Vec3) -> f64 {
        // Scaled by |normal|; callers compare against EPS * |normal|.
        self.normal.dot(p) - self.offset
    }

    fn visible_from(&self, p: Vec3) -> bool {
        self.signed_dist(p) > EPS * self.normal.norm().max(1e-300)
    }
}

/// Volume of the convex hull of `points`, in cubic meters.
///
/// Fails when fewer than four points remain after deduplication or when the
/// set is coplanar within the 1e-9 m tolerance.
pub fn convex_hull_volume_m3(points: &[Vec3]) -> Result<f64> {
    let (i0, i1, i2, i3) = initial_tetrahedron(points)?;
    let interior = (points[i0] + points[i1] + points[i2] + points[i3]).scaled(0.25);

    let mut faces = vec![
        Face::new(points, i0, i1, i2, interior),
        Face::new(points, i0, i1, i3, interior),
        Face::new(points, i0, i2, i3, interior),
        Face::new(points, i1, i2, i3, interior),
    ];

    for (idx, &p) in points.iter().enumerate() {
        if idx == i0 || idx == i1 || idx == i2 || idx == i3 {
            continue;
        }
        let visible: Vec<usize> =
            (0..faces.len()).filter(|&f| faces[f].visible_from(p)).collect();
        if visible.is_empty() {
            continue;
        }

        // Horizon: undirected edges belonging to exactly one visible face.
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &f in &visible {
            let v = faces[f].v;
            for (a, b) in [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])] {
                let key = (a.min(b), a.max(b));
                if let Some(pos) = edges.iter().position(|e| *e == key) {
                    edges.swap_remove(pos);
                } else {
                    edges.push(key);
                }
            }
        }

        let mut keep: Vec<Face> = (0..faces.len())
            .filter(|f| !visible.contains(f))
            .map(|f| faces[f])
            .collect();
        for (a, b) in edges {
            keep.push(Face::new(points, a, b, idx, interior));
        }
        faces = keep;
    }

    let mut volume = 0.0;
    for f in &faces {
        let (a, b, c) = (points[f.v[0]], points[f.v[1]], points[f.v[2]]);
        volume += (a - interior).dot((b - interior).cross(c - interior)) / 6.0;
    }
    Ok(volume.abs())
}

/// Same volume in cubic centimeters, the unit used in dataset metadata.
pub fn convex_hull_volume_cm3(points: &[Vec3]) -> Result<f64> {
    convex_hull_volume_m3(points).map(|v| v * 1e6)
}

fn initial_tetrahedron(points: &[Vec3]) -> Result<(usize, usize, usize, usize)> {
    if points.len() < 4 {
        return Err(Error::Dataset(format!(
            "convex hull needs at least 4 points, got {}",
            points.len()
        )));
    }
    let i0 = 0;
    let p0 = points[i0];

    let i1 = argmax(points, |p| (p - p0).norm());
    if (points[i1] - p0).norm() <= EPS {
        return Err(Error::Dataset("degenerate point set: all points coincide".into()));
    }
    let dir = points[i1] - p0;

    let i2 = argmax(points, |p| dir.cross(p - p0).norm());
    if dir.cross(points[i2] - p0).norm() <= EPS * dir.norm() {
        return Err(Error::Dataset("degenerate point set: all points collinear".into()));
    }

    let normal = dir.cross(points[i2] - p0);
    let i3 = argmax(points, |p| (normal.dot(p - p0) / normal.norm()).abs());
    if (normal.dot(points[i3] - p0) / normal.norm()).abs() <= EPS {
        return Err(Error::Dataset("degenerate point set: all points coplanar".into()));
    }
    Ok((i0, i1, i2, i3))
}

fn argmax(points: &[Vec3], score: impl Fn(Vec3) -> f64) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, &p) in points.iter().enumerate() {
        let s = score(p);
        if s > best_score {
            best_score = s;
            best = i;
        }
    }
    best
}
