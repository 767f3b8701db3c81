//! Level-set extraction by marching squares, with periodic wrap-around.
//!
//! Periodic contours are traced in unwrapped coordinates, so a loop that
//! crosses the zone boundary stays geometrically connected.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
    /// Net number of periods traversed along each axis (closed, periodic only).
    pub winding: [i64; 2],
}

impl Polyline {
    /// Shoelace area; positive for counter-clockwise loops.
    pub fn signed_area(&self) -> f64 {
        let p = &self.points;
        let mut acc = 0.0;
        for w in p.windows(2) {
            acc += w[0][0] * w[1][1] - w[1][0] * w[0][1];
        }
        0.5 * acc
    }

    pub fn length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }

    /// Closed with zero winding, i.e. contractible on the torus.
    pub fn is_loop(&self) -> bool {
        self.closed && self.winding == [0, 0]
    }

    pub fn centroid(&self) -> [f64; 2] {
        let n = self.points.len().max(1) as f64;
        let (sx, sy) = self.points.iter().fold((0.0, 0.0), |a, p| (a.0 + p[0], a.1 + p[1]));
        [sx / n, sy / n]
    }

    /// Radial distances from `center`, using the nearest periodic image
    /// of each point when `period` is given.
    pub fn radii(&self, center: [f64; 2], period: Option<[f64; 2]>) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| {
                let mut dx = p[0] - center[0];
                let mut dy = p[1] - center[1];
                if let Some([px, py]) = period {
                    dx -= px * (dx / px).round();
                    dy -= py * (dy / py).round();
                }
                dx.hypot(dy)
            })
            .collect()
    }

    /// Smallest `| |p - center| - radius |` over the vertices.
    pub fn min_distance_to_circle(&self, center: [f64; 2], radius: f64, period: Option<[f64; 2]>) -> f64 {
        self.radii(center, period)
            .into_iter()
            .map(|r| (r - radius).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Winding number of the polyline around `p` (closed loops only).
    pub fn winding_about(&self, p: [f64; 2]) -> i64 {
        let mut total = 0.0;
        for w in self.points.windows(2) {
            let a = (w[0][1] - p[1]).atan2(w[0][0] - p[0]);
            let b = (w[1][1] - p[1]).atan2(w[1][0] - p[0]);
            let mut d = b - a;
            if d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            } else if d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            total += d;
        }
        (total / (2.0 * std::f64::consts::PI)).round() as i64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub level: f64,
    pub periodic: bool,
    pub lines: Vec<Polyline>,
}

impl ContourSet {
    pub fn closed_loops(&self) -> impl Iterator<Item = &Polyline> {
        self.lines.iter().filter(|l| l.is_loop())
    }
}

/// Sample layout for [`marching_squares`]: `n` nodes per axis starting at
/// `origin` with spacing `step`, row-major with x fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourGrid {
    pub n: [usize; 2],
    pub origin: [f64; 2],
    pub step: [f64; 2],
    pub periodic: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

struct Segment {
    ends: [(Edge, [f64; 2]); 2],
}

pub fn marching_squares(values: &[f64], grid: ContourGrid, level: f64) -> Result<ContourSet> {
    let [nx, ny] = grid.n;
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument("contour grid needs at least 2 x 2 nodes".into()));
    }
    if values.len() != nx * ny {
        return Err(Error::Dimension {
            expected: nx * ny,
            got: values.len(),
        });
    }
    let (cx, cy) = if grid.periodic { (nx, ny) } else { (nx - 1, ny - 1) };
    let at = |i: usize, j: usize| values[(j % ny) * nx + (i % nx)];
    let pos = |i: usize, j: usize| [grid.origin[0] + i as f64 * grid.step[0], grid.origin[1] + j as f64 * grid.step[1]];
    let hkey = |i: usize, j: usize| Edge::H(i % nx, j % ny);
    let vkey = |i: usize, j: usize| Edge::V(i % nx, j % ny);

    let mut segments = Vec::new();
    for j in 0..cy {
        for i in 0..cx {
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            if c.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let p = [pos(i, j), pos(i + 1, j), pos(i + 1, j + 1), pos(i, j + 1)];
            let above: Vec<bool> = c.iter().map(|&v| v > level).collect();
            // Edges: bottom (0-1), right (1-2), top (3-2), left (0-3).
            let corners = [(0, 1), (1, 2), (3, 2), (0, 3)];
            let keys = [hkey(i, j), vkey(i + 1, j), hkey(i, j + 1), vkey(i, j)];
            let cross: Vec<Option<(Edge, [f64; 2])>> = (0..4)
                .map(|e| {
                    let (a, b) = corners[e];
                    if above[a] == above[b] {
                        return None;
                    }
                    let t = (level - c[a]) / (c[b] - c[a]);
                    Some((
                        keys[e],
                        [p[a][0] + t * (p[b][0] - p[a][0]), p[a][1] + t * (p[b][1] - p[a][1])],
                    ))
                })
                .collect();
            let hit: Vec<usize> = (0..4).filter(|&e| cross[e].is_some()).collect();
            let pairs: Vec<(usize, usize)> = match hit.len() {
                2 => vec![(hit[0], hit[1])],
                4 => {
                    let center = 0.25 * c.iter().sum::<f64>();
                    if (center > level) == above[0] {
                        vec![(0, 1), (2, 3)]
                    } else {
                        vec![(0, 3), (1, 2)]
                    }
                }
                _ => vec![],
            };
            for (a, b) in pairs {
                segments.push(Segment {
                    ends: [cross[a].unwrap(), cross[b].unwrap()],
                });
            }
        }
    }

    let mut by_edge: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (s, seg) in segments.iter().enumerate() {
        for e in &seg.ends {
            by_edge.entry(e.0).or_default().push(s);
        }
    }
    let mut used = vec![false; segments.len()];
    // Follows the chain leaving `seg` through end `out`, appending unwrapped points.
    let walk = |start: usize, out: usize, pts: &mut Vec<[f64; 2]>, used: &mut Vec<bool>| -> Edge {
        let mut seg = start;
        let mut edge = segments[seg].ends[out].0;
        loop {
            let next = by_edge[&edge].iter().copied().find(|&t| t != seg && !used[t]);
            let Some(t) = next else { return edge };
            used[t] = true;
            let s = &segments[t];
            let (shared, other) = if s.ends[0].0 == edge { (0, 1) } else { (1, 0) };
            let last = *pts.last().unwrap();
            let d = [s.ends[other].1[0] - s.ends[shared].1[0], s.ends[other].1[1] - s.ends[shared].1[1]];
            pts.push([last[0] + d[0], last[1] + d[1]]);
            edge = s.ends[other].0;
            seg = t;
        }
    };

    let period = [nx as f64 * grid.step[0], ny as f64 * grid.step[1]];
    let mut lines = Vec::new();
    for s0 in 0..segments.len() {
        if used[s0] {
            continue;
        }
        used[s0] = true;
        let mut fwd = vec![segments[s0].ends[0].1, segments[s0].ends[1].1];
        let end_edge = walk(s0, 1, &mut fwd, &mut used);
        let closed = end_edge == segments[s0].ends[0].0 && fwd.len() > 2;
        let points = if closed {
            fwd
        } else {
            let mut back = vec![segments[s0].ends[0].1];
            walk(s0, 0, &mut back, &mut used);
            back.reverse();
            back.extend_from_slice(&fwd[1..]);
            back
        };
        let winding = if closed && grid.periodic {
            let (a, b) = (points[0], *points.last().unwrap());
            [((b[0] - a[0]) / period[0]).round() as i64, ((b[1] - a[1]) / period[1]).round() as i64]
        } else {
            [0, 0]
        };
        lines.push(Polyline { points, closed, winding });
    }
    Ok(ContourSet {
        level,
        periodic: grid.periodic,
        lines,
    })
}
