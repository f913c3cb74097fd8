//! Discrete directional geometry: almost lines, half-planes, the `G_n` map and
//! the surfaces built from a direction profile.
//!
//! Directions follow `u(θ) = (cos θ, sin θ)`; components with magnitude below
//! `1e-12` are snapped to zero. The half-plane anchored at `a` is the set of
//! cells `z` with `<z - a, u(θ)> <= 0`, its boundary the almost line through
//! `a`, which runs at angle `θ` from the vertical axis.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Coord, Rect};
use crate::lyapunov::{DirectionProfile, ANGLE_TOLERANCE};

const SNAP: f64 = 1e-12;
const SLACK: f64 = 1e-9;

/// `u(θ)` with near-zero components snapped to zero.
pub fn direction(theta: f64) -> (f64, f64) {
    let snap = |v: f64| if v.abs() < SNAP { 0.0 } else { v };
    (snap(theta.cos()), snap(theta.sin()))
}

#[inline]
pub fn dot(z: Coord, u: (f64, f64)) -> f64 {
    z.i as f64 * u.0 + z.j as f64 * u.1
}

/// Rounds each component away from zero (values within `1e-9` of an integer
/// snap to it).
fn ceil_away(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() <= SLACK {
        r as i64
    } else if x > 0.0 {
        x.ceil() as i64
    } else {
        x.floor() as i64
    }
}

/// Lattice point at distance `distance` along `u(θ)`, rounded away from the
/// origin componentwise, so `<anchor, u(θ)> >= distance`.
pub fn anchor_point(theta: f64, distance: f64) -> Coord {
    let (c, s) = direction(theta);
    Coord::new(ceil_away(distance * c), ceil_away(distance * s))
}

/// Cells of the almost line at angle `θ` from the vertical through `anchor`,
/// for indices `k_min..=k_max`; index 0 is the anchor cell.
///
/// The line `anchor + t (sin θ, cos θ)` is traversed exactly, emitting every
/// cell `floor(p)` it enters; when it crosses a lattice corner the step is
/// diagonal. Negative indices traverse the opposite direction.
pub fn almost_line(theta: f64, anchor: Coord, k_min: i64, k_max: i64) -> Vec<Coord> {
    assert!(k_min <= k_max, "empty index range");
    let (c, s) = direction(theta);
    let mut out = Vec::with_capacity((k_max - k_min + 1) as usize);
    if k_min < 0 {
        let mut neg = traverse((-s, -c), anchor, (-k_min) as usize);
        neg.reverse();
        let skip = if k_max < 0 { (-k_max - 1) as usize } else { 0 };
        out.extend(neg.iter().take(neg.len() - skip));
    }
    if k_max >= 0 {
        let pos = traverse((s, c), anchor, k_max as usize + 1);
        out.extend(pos.into_iter().skip(k_min.max(0) as usize));
    }
    out
}

/// First `count` cells of the ray `anchor + t d`, `t > 0`.
fn traverse(d: (f64, f64), anchor: Coord, count: usize) -> Vec<Coord> {
    let axis = |v: f64| -> (i64, i64, f64) {
        if v > 0.0 {
            (0, 1, 1.0 / v)
        } else if v < 0.0 {
            (-1, -1, 1.0 / -v)
        } else {
            (0, 0, f64::INFINITY)
        }
    };
    let (oi, si, di) = axis(d.0);
    let (oj, sj, dj) = axis(d.1);
    let mut cell = Coord::new(anchor.i + oi, anchor.j + oj);
    let (mut ti, mut tj) = (di, dj);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        out.push(cell);
        if (ti - tj).abs() < SLACK {
            cell = Coord::new(cell.i + si, cell.j + sj);
            ti += di;
            tj += dj;
        } else if ti < tj {
            cell.i += si;
            ti += di;
        } else {
            cell.j += sj;
            tj += dj;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    theta: f64,
    anchor: Coord,
    u: (f64, f64),
    level: f64,
}

impl HalfPlane {
    pub fn new(theta: f64, anchor: Coord) -> Self {
        let u = direction(theta);
        HalfPlane { theta, anchor, u, level: dot(anchor, u) }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn anchor(&self) -> Coord {
        self.anchor
    }

    /// `<cell - anchor, u(θ)> <= 0`, boundary inclusive.
    #[inline]
    pub fn contains(&self, cell: Coord) -> bool {
        dot(cell, self.u) - self.level <= SLACK
    }
}

pub fn half_plane_membership(theta: f64, anchor: Coord, cell: Coord) -> bool {
    HalfPlane::new(theta, anchor).contains(cell)
}

/// `(ceil(sqrt2 n cos θ), ceil(sqrt2 n sin θ))` on `[0, π]`, `(0, 0)` on
/// `(π, 2π]`.
pub fn g_n(theta: f64, n: usize) -> Coord {
    if theta > PI + ANGLE_TOLERANCE {
        return Coord::ORIGIN;
    }
    let (c, s) = direction(theta);
    let r = SQRT_2 * n as f64;
    let up = |x: f64| {
        let near = x.round();
        if (x - near).abs() <= SLACK { near as i64 } else { x.ceil() as i64 }
    };
    Coord::new(up(r * c), up(r * s))
}

/// Finite set of lattice cells, sorted by `(i, j)` without duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CellSet {
    cells: Vec<Coord>,
}

impl CellSet {
    pub fn from_cells(mut cells: Vec<Coord>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        CellSet { cells }
    }

    pub fn from_rect(rect: Rect) -> Self {
        let mut cells: Vec<Coord> = rect.cells().collect();
        cells.sort_unstable();
        CellSet { cells }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Coord] {
        &self.cells
    }

    pub fn iter(&self) -> impl Iterator<Item = Coord> + '_ {
        self.cells.iter().copied()
    }

    pub fn contains(&self, c: Coord) -> bool {
        self.cells.binary_search(&c).is_ok()
    }

    pub fn intersection(&self, other: &CellSet) -> CellSet {
        let (mut a, mut b) = (0, 0);
        let mut out = Vec::new();
        while a < self.cells.len() && b < other.cells.len() {
            match self.cells[a].cmp(&other.cells[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    out.push(self.cells[a]);
                    a += 1;
                    b += 1;
                }
            }
        }
        CellSet { cells: out }
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.intersection(other).len() == self.len()
    }

    /// Smallest rectangle containing every cell.
    pub fn bounding_rect(&self) -> Rect {
        self.cells.iter().fold(Rect::new(0, 0, 0, 0), |acc, &c| acc.union(&Rect::new(c.i, c.j, c.i + 1, c.j + 1)))
    }

    /// `i,j` rows; with `area` a trailing `# area=<count>` line.
    pub fn to_csv(&self, area: bool) -> String {
        let mut s = String::with_capacity(12 * self.cells.len() + 16);
        s.push_str("i,j\n");
        for c in &self.cells {
            let _ = writeln!(s, "{},{}", c.i, c.j);
        }
        if area {
            let _ = writeln!(s, "# area={}", self.cells.len());
        }
        s
    }
}

/// A surface with the continuous polygon it discretizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Surface {
    pub cells: CellSet,
    /// Shoelace area of the continuous region.
    pub polygon_area: f64,
    pub polygon_perimeter: f64,
}

impl Surface {
    /// `|count - area| <= perimeter + 1`.
    pub fn area_consistent(&self) -> bool {
        (self.cells.len() as f64 - self.polygon_area).abs() <= self.polygon_perimeter + 1.0
    }
}

fn check_grid(n: usize, profile: &DirectionProfile) -> Result<Vec<(f64, Coord)>> {
    if n == 0 {
        return Err(Error::InvalidArgument("surfaces need n >= 1".into()));
    }
    if profile.horizon() != n {
        return Err(Error::GridMismatch(format!("profile horizon {} but n = {n}", profile.horizon())));
    }
    (0..=n)
        .map(|k| {
            let theta = if k == n { TAU } else { TAU * k as f64 / n as f64 };
            profile
                .entry_at(theta)
                .map(|e| (theta, e.anchor))
                .ok_or_else(|| Error::GridMismatch(format!("profile lacks angle 2π·{k}/{n}")))
        })
        .collect()
}

/// Polygon vertices `G_n(θ_k) + G_nF(θ_k)`, `θ_k = 2πk/n`, `k = 0..=n`.
pub fn surface_vertices(n: usize, profile: &DirectionProfile) -> Result<Vec<Coord>> {
    Ok(check_grid(n, profile)?.into_iter().map(|(t, a)| g_n(t, n) + a).collect())
}

#[inline]
fn cross(a: Coord, b: Coord) -> i64 {
    a.i * b.j - a.j * b.i
}

/// Closed triangle `(0, a, b)` membership, exact.
fn in_fan_triangle(z: Coord, a: Coord, b: Coord) -> bool {
    let area = cross(a, b);
    if area == 0 {
        // Degenerate: on either segment from the origin or on [a, b].
        let on_seg = |p: Coord, q: Coord| {
            cross(q - p, z - p) == 0
                && z.i >= p.i.min(q.i)
                && z.i <= p.i.max(q.i)
                && z.j >= p.j.min(q.j)
                && z.j <= p.j.max(q.j)
        };
        return on_seg(Coord::ORIGIN, a) || on_seg(Coord::ORIGIN, b) || on_seg(a, b);
    }
    let s = area.signum();
    cross(a, z) * s >= 0 && cross(b - a, z - a) * s >= 0 && cross(z, b) * s >= 0
}

/// `T_n`: the origin plus the closed fan triangles `(0, P_k, P_{k+1})`.
pub fn surface_t(n: usize, profile: &DirectionProfile) -> Result<Surface> {
    let p = surface_vertices(n, profile)?;
    let mut cells = vec![Coord::ORIGIN];
    let mut area = 0.0;
    for w in p.windows(2) {
        let (a, b) = (w[0], w[1]);
        area += cross(a, b).abs() as f64 / 2.0;
        let bb = Rect::new(0.min(a.i).min(b.i), 0.min(a.j).min(b.j), 0.max(a.i).max(b.i) + 1, 0.max(a.j).max(b.j) + 1);
        cells.extend(bb.cells().filter(|&z| in_fan_triangle(z, a, b)));
    }
    let len = |v: Coord| ((v.i * v.i + v.j * v.j) as f64).sqrt();
    let perimeter = p.windows(2).map(|w| len(w[1] - w[0])).sum::<f64>() + len(p[0]) + len(p[n]);
    Ok(Surface { cells: CellSet::from_cells(cells), polygon_area: area, polygon_perimeter: perimeter })
}

/// Radial reading of `T_n`: cells `z` with `|z| <= |P_k|` for the grid angle
/// `θ_k` nearest the direction of `z`, plus the origin.
pub fn surface_t_radial(n: usize, profile: &DirectionProfile) -> Result<CellSet> {
    let p = surface_vertices(n, profile)?;
    let norm2 = |v: Coord| v.i * v.i + v.j * v.j;
    let reach = p.iter().map(|&v| norm2(v)).max().unwrap_or(0);
    let r = (reach as f64).sqrt().ceil() as i64;
    let step = TAU / n as f64;
    let cells = Rect::new(-r, -r, r + 1, r + 1)
        .cells()
        .filter(|&z| {
            if z == Coord::ORIGIN {
                return true;
            }
            let angle = (z.j as f64).atan2(z.i as f64).rem_euclid(TAU);
            let k = ((angle / step).round() as usize).min(n);
            norm2(z) <= norm2(p[k])
        })
        .collect();
    Ok(CellSet::from_cells(cells))
}

/// `R_n = [-Λ(π), Λ(0) + n) x [-Λ(3π/2), Λ(π/2) + n)`.
pub fn surface_r(n: usize, profile: &DirectionProfile) -> Result<Rect> {
    let [l0, l90, l180, l270] = profile.cardinal_extents()?;
    let n = n as i64;
    Ok(Rect::new(-l180, -l270, l0 + n, l90 + n))
}

/// Offset under each `T_n*` half-plane: `G_n(θ)` on `[0, 3π/2]`, the square
/// corner `(n-1, 0)` on `(3π/2, 2π]`.
fn star_offset(theta: f64, n: usize) -> Coord {
    if theta > 3.0 * FRAC_PI_2 + ANGLE_TOLERANCE {
        Coord::new(n as i64 - 1, 0)
    } else {
        g_n(theta, n)
    }
}

/// Half-planes whose intersection is `T_n*` before clipping.
pub fn star_half_planes(n: usize, profile: &DirectionProfile) -> Result<Vec<HalfPlane>> {
    Ok(check_grid(n, profile)?.into_iter().map(|(t, a)| HalfPlane::new(t, star_offset(t, n) + a)).collect())
}

/// `T_n*`: the half-plane intersection clipped to `R_n`.
pub fn surface_t_star(n: usize, profile: &DirectionProfile) -> Result<Surface> {
    let planes = star_half_planes(n, profile)?;
    let rect = surface_r(n, profile)?;
    let rows: Vec<Vec<Coord>> = (rect.j0..rect.j1)
        .into_par_iter()
        .map(|j| {
            (rect.i0..rect.i1)
                .map(|i| Coord::new(i, j))
                .filter(|&z| planes.iter().all(|h| h.contains(z)))
                .collect()
        })
        .collect();
    let cells = CellSet::from_cells(rows.into_iter().flatten().collect());
    let poly = clip_polygon(&rect, &planes);
    Ok(Surface { cells, polygon_area: shoelace(&poly), polygon_perimeter: perimeter(&poly) })
}

/// Sutherland–Hodgman clipping of the closed cell-centre rectangle of `rect`.
fn clip_polygon(rect: &Rect, planes: &[HalfPlane]) -> Vec<(f64, f64)> {
    let (i0, j0, i1, j1) = (rect.i0 as f64, rect.j0 as f64, (rect.i1 - 1) as f64, (rect.j1 - 1) as f64);
    let mut poly = vec![(i0, j0), (i1, j0), (i1, j1), (i0, j1)];
    for h in planes {
        if poly.is_empty() {
            break;
        }
        let f = |p: (f64, f64)| p.0 * h.u.0 + p.1 * h.u.1 - h.level;
        let mut out = Vec::with_capacity(poly.len() + 1);
        for k in 0..poly.len() {
            let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
            let (fa, fb) = (f(a), f(b));
            if fa <= 0.0 {
                out.push(a);
            }
            if (fa <= 0.0) != (fb <= 0.0) {
                let t = fa / (fa - fb);
                out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
            }
        }
        poly = out;
    }
    poly
}

fn shoelace(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    (0..n).map(|k| poly[k].0 * poly[(k + 1) % n].1 - poly[(k + 1) % n].0 * poly[k].1).sum::<f64>().abs() / 2.0
}

fn perimeter(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    (0..n).map(|k| (poly[(k + 1) % n].0 - poly[k].0).hypot(poly[(k + 1) % n].1 - poly[k].1)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommonSurface {
    pub cells: CellSet,
    pub t_star_len: usize,
    /// `|T_n**| / |T_n*|`.
    pub ratio: f64,
}

/// `T_n** = T_n ∩ T_n*`.
pub fn surface_t_dstar(n: usize, profile: &DirectionProfile) -> Result<CommonSurface> {
    let t = surface_t(n, profile)?;
    let star = surface_t_star(n, profile)?;
    let cells = t.cells.intersection(&star.cells);
    let ratio = if star.cells.is_empty() { 1.0 } else { cells.len() as f64 / star.cells.len() as f64 };
    Ok(CommonSurface { t_star_len: star.cells.len(), cells, ratio })
}
