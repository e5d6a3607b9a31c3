//! Delaunay triangulation of 2-D point sets, incremental Bowyer-Watson.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Magnitude of the deterministic jitter that breaks collinear and
/// co-circular degeneracies.
const JITTER: f64 = 1e-9;

/// Seed for the jitter stream; fixed so identical inputs triangulate
/// identically across runs.
const JITTER_SEED: u64 = 0x6d3c_de1a;

/// Edge set of the Delaunay triangulation, canonical `(a, b)` with `a < b`,
/// sorted. One point yields no edges; two points yield the single edge.
/// Duplicate points are rejected.
pub fn delaunay(points: &[[f64; 2]]) -> Result<Vec<(usize, usize)>> {
    for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate().skip(i + 1) {
            if p == q {
                return Err(Error::contract(format!(
                    "delaunay: duplicate points at indices {i} and {j}"
                )));
            }
        }
    }
    match points.len() {
        0 | 1 => return Ok(Vec::new()),
        2 => return Ok(vec![(0, 1)]),
        _ => {}
    }
    if let Some(order) = collinear_order(points) {
        // Limiting case: consecutive points along the line.
        return Ok(order
            .windows(2)
            .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
            .collect());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(JITTER_SEED);
    let pts: Vec<[f64; 2]> = points
        .iter()
        .map(|p| {
            [
                p[0] + JITTER * (rng.random::<f64>() * 2.0 - 1.0),
                p[1] + JITTER * (rng.random::<f64>() * 2.0 - 1.0),
            ]
        })
        .collect();

    let tris = bowyer_watson(&pts);
    let mut edges = Vec::new();
    for &(a, b, c) in &tris {
        for (u, v) in [(a, b), (b, c), (a, c)] {
            edges.push((u.min(v), u.max(v)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

/// When every point lies on one line (to within the jitter scale), returns
/// the indices ordered along that line.
fn collinear_order(points: &[[f64; 2]]) -> Option<Vec<usize>> {
    let a = points[0];
    let far = points
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|(_, p), (_, q)| {
            let dp = (p[0] - a[0]).powi(2) + (p[1] - a[1]).powi(2);
            let dq = (q[0] - a[0]).powi(2) + (q[1] - a[1]).powi(2);
            dp.partial_cmp(&dq).unwrap()
        })
        .map(|(i, _)| i)?;
    let b = points[far];
    let dir = [b[0] - a[0], b[1] - a[1]];
    let len = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    if len == 0.0 {
        return None;
    }
    for p in points {
        let cross = (p[0] - a[0]) * dir[1] - (p[1] - a[1]) * dir[0];
        if (cross / len).abs() > 10.0 * JITTER {
            return None;
        }
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let ti = (points[i][0] - a[0]) * dir[0] + (points[i][1] - a[1]) * dir[1];
        let tj = (points[j][0] - a[0]) * dir[0] + (points[j][1] - a[1]) * dir[1];
        ti.partial_cmp(&tj).unwrap().then(i.cmp(&j))
    });
    Some(order)
}

/// Triangles of the triangulation, by point index.
fn bowyer_watson(pts: &[[f64; 2]]) -> Vec<(usize, usize, usize)> {
    let n = pts.len();
    // Super-triangle comfortably containing every point.
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in pts {
        min_x = min_x.min(p[0]);
        min_y = min_y.min(p[1]);
        max_x = max_x.max(p[0]);
        max_y = max_y.max(p[1]);
    }
    let span = (max_x - min_x).max(max_y - min_y).max(1.0);
    let cx = (min_x + max_x) / 2.0;
    let cy = (min_y + max_y) / 2.0;
    let mut all: Vec<[f64; 2]> = pts.to_vec();
    all.push([cx - 20.0 * span, cy - span]);
    all.push([cx + 20.0 * span, cy - span]);
    all.push([cx, cy + 20.0 * span]);
    let (s0, s1, s2) = (n, n + 1, n + 2);

    let mut tris: Vec<(usize, usize, usize)> = vec![(s0, s1, s2)];
    for p in 0..n {
        // Triangles whose circumcircle contains the new point.
        let mut bad = Vec::new();
        for (t, &(a, b, c)) in tris.iter().enumerate() {
            if in_circumcircle(all[a], all[b], all[c], all[p]) {
                bad.push(t);
            }
        }
        // Boundary of the cavity: edges belonging to exactly one bad triangle.
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        for &t in &bad {
            let (a, b, c) = tris[t];
            for (u, v) in [(a, b), (b, c), (c, a)] {
                let key = (u.min(v), u.max(v));
                if let Some(pos) = boundary.iter().position(|&e| e == key) {
                    boundary.remove(pos);
                } else {
                    boundary.push(key);
                }
            }
        }
        for &t in bad.iter().rev() {
            tris.swap_remove(t);
        }
        for &(u, v) in &boundary {
            tris.push((u, v, p));
        }
    }
    tris.retain(|&(a, b, c)| a < n && b < n && c < n);
    tris
}

/// Strict test: does `p` lie inside the circumcircle of `(a, b, c)`?
fn in_circumcircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], p: [f64; 2]) -> bool {
    let (ax, ay) = (a[0] - p[0], a[1] - p[1]);
    let (bx, by) = (b[0] - p[0], b[1] - p[1]);
    let (cx, cy) = (c[0] - p[0], c[1] - p[1]);
    let det = (ax * ax + ay * ay) * (bx * cy - cx * by)
        - (bx * bx + by * by) * (ax * cy - cx * ay)
        + (cx * cx + cy * cy) * (ax * by - bx * ay);
    // det sign encodes containment relative to orientation.
    let orient = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    if orient > 0.0 {
        det > 0.0
    } else {
        det < 0.0
    }
}
