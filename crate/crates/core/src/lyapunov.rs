//! Directional propagation extents `Λ_n(θ)`, exponent estimates and their
//! diagnostics.
//!
//! `Λ_n(θ)` is the smallest integer distance `d` such that the half-plane of
//! cells with `<z, u(θ)> <= d` determines the first `n` iterates on the
//! half-plane `<z, u(θ)> <= 0`. For linear rules this is
//! `ceil(max(0, max_{k <= n} max_{w in D_k} <w, u(θ)>))` where `D_k` is the
//! dependence set of the k-th iterate.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{anchor_point, direction, dot};
use crate::grid::{sample_window, Boundary, Configuration, Coord, KernelPowers, MeasureSpec, Rect, RuleSpec,
    SampleStream};

/// Angles closer than this are the same grid angle.
pub const ANGLE_TOLERANCE: f64 = 1e-9;

/// Slack used when rounding real extents up to integer distances.
const ROUND_SLACK: f64 = 1e-9;

/// Largest damage-spreading window, in cells.
pub const MAX_SAMPLE_CELLS: usize = 1 << 24;

/// Half-side of the observed box in the sampled extent.
const OBSERVE: i64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    SampledLowerBound,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::SampledLowerBound => "sampled-lower-bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Strategy {
    Exact,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub theta: f64,
    /// Integer-valued.
    pub lambda_n: f64,
    pub lambda_hat: f64,
    pub method: Method,
    /// Lattice anchor at distance `lambda_n` along `u(θ)`, rounded away from
    /// the origin so that `<anchor, u(θ)> >= lambda_n`.
    pub anchor: Coord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionProfile {
    rule: String,
    radius: u32,
    horizon: usize,
    angle_count: usize,
    /// `ceil(r n sqrt 2)`: no extent exceeds it.
    light_cone: f64,
    entries: Vec<ProfileEntry>,
    /// Result of `Λ_n <= Λ_{n/2} + Λ_{n - n/2}` on every angle (exact only).
    subadditive: Option<bool>,
}

impl DirectionProfile {
    /// Assembles a profile from precomputed entries, sorted by angle.
    pub fn from_entries(
        rule: impl Into<String>,
        radius: u32,
        horizon: usize,
        angle_count: usize,
        mut entries: Vec<ProfileEntry>,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        entries.sort_by(|a, b| a.theta.total_cmp(&b.theta));
        Ok(DirectionProfile {
            rule: rule.into(),
            radius,
            horizon,
            angle_count,
            light_cone: light_cone(radius, horizon),
            entries,
            subadditive: None,
        })
    }

    pub fn rule(&self) -> &str {
        &self.rule
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn angle_count(&self) -> usize {
        self.angle_count
    }

    pub fn light_cone(&self) -> f64 {
        self.light_cone
    }

    pub fn entries(&self) -> &[ProfileEntry] {
        &self.entries
    }

    pub fn subadditive(&self) -> Option<bool> {
        self.subadditive
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().all(|e| e.method == Method::Exact)
    }

    pub fn entry_at(&self, theta: f64) -> Option<&ProfileEntry> {
        let k = self.entries.partition_point(|e| e.theta < theta - ANGLE_TOLERANCE);
        self.entries.get(k).filter(|e| (e.theta - theta).abs() <= ANGLE_TOLERANCE)
    }

    pub fn lambda_hat_at(&self, theta: f64) -> Option<f64> {
        self.entry_at(theta).map(|e| e.lambda_hat)
    }

    /// `λ̂` at `0, π/2, π, 3π/2`.
    pub fn cardinals(&self) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for (k, theta) in [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2].into_iter().enumerate() {
            out[k] = self.lambda_hat_at(theta).ok_or(Error::MissingCardinal(theta))?;
        }
        Ok(out)
    }

    /// `Λ_n` at `0, π/2, π, 3π/2`.
    pub fn cardinal_extents(&self) -> Result<[i64; 4]> {
        let mut out = [0; 4];
        for (k, theta) in [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2].into_iter().enumerate() {
            out[k] = self.entry_at(theta).ok_or(Error::MissingCardinal(theta))?.lambda_n as i64;
        }
        Ok(out)
    }

    /// CSV with header `theta,lambda_n,lambda_hat,method,anchor_i,anchor_j`
    /// and a trailing `# rule=.. radius=.. n=.. angles=..` line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,lambda_n,lambda_hat,method,anchor_i,anchor_j\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                fmt_sig(e.theta, 12),
                e.lambda_n,
                e.lambda_hat,
                e.method.as_str(),
                e.anchor.i,
                e.anchor.j
            );
        }
        let _ = writeln!(
            s,
            "# rule={} radius={} n={} angles={}",
            self.rule.replace(char::is_whitespace, "_"),
            self.radius,
            self.horizon,
            self.angle_count
        );
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::ProfileCsv { line, message };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "theta,lambda_n,lambda_hat,method,anchor_i,anchor_j" => {}
            _ => return Err(err(1, "missing header".into())),
        }
        let mut entries = Vec::new();
        let (mut rule, mut radius, mut horizon, mut angles) = (String::new(), None, None, None);
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for field in meta.split_whitespace() {
                    let Some((k, v)) = field.split_once('=') else { continue };
                    let parse = |v: &str| v.parse::<usize>().map_err(|_| err(lineno, format!("invalid {k} `{v}`")));
                    match k {
                        "rule" => rule = v.to_string(),
                        "radius" => radius = Some(parse(v)? as u32),
                        "n" => horizon = Some(parse(v)?),
                        "angles" => angles = Some(parse(v)?),
                        _ => {}
                    }
                }
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(err(lineno, format!("expected 6 fields, found {}", f.len())));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err(lineno, format!("invalid number `{s}`")));
            let int = |s: &str| s.trim().parse::<i64>().map_err(|_| err(lineno, format!("invalid integer `{s}`")));
            let method = match f[3].trim() {
                "exact" => Method::Exact,
                "sampled-lower-bound" => Method::SampledLowerBound,
                other => return Err(err(lineno, format!("unknown method `{other}`"))),
            };
            entries.push(ProfileEntry {
                theta: num(f[0])?,
                lambda_n: num(f[1])?,
                lambda_hat: num(f[2])?,
                method,
                anchor: Coord::new(int(f[4])?, int(f[5])?),
            });
        }
        let last = text.lines().count();
        let horizon = horizon.ok_or_else(|| err(last, "missing `# ... n=<horizon>` line".into()))?;
        let radius = radius.ok_or_else(|| err(last, "missing `# ... radius=<r>` line".into()))?;
        let angles = angles.unwrap_or(entries.len().saturating_sub(1));
        if let Ok(grid) = angle_grid(angles) {
            for e in &mut entries {
                if let Some(&g) = grid.iter().find(|&&g| (g - e.theta).abs() <= ANGLE_TOLERANCE) {
                    e.theta = g;
                }
            }
        }
        DirectionProfile::from_entries(rule, radius, horizon, angles, entries)
    }
}

/// Formats with `digits` significant digits, shortest round-trip form.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap();
    format!("{rounded}")
}

/// `ceil(r n sqrt 2)`.
pub fn light_cone(radius: u32, n: usize) -> f64 {
    (radius as f64 * n as f64 * std::f64::consts::SQRT_2 - ROUND_SLACK).ceil().max(0.0)
}

/// Uniform grid `2πk/M`, `k = 0..=M`, with the four cardinals (and `2π`)
/// present as exact constants.
pub fn angle_grid(m: usize) -> Result<Vec<f64>> {
    if m < 4 {
        return Err(Error::InvalidArgument(format!("angle count {m} < 4")));
    }
    let cardinal = |k: usize| -> f64 {
        match 4 * k / m {
            0 => 0.0,
            1 => FRAC_PI_2,
            2 => PI,
            3 => 3.0 * FRAC_PI_2,
            _ => TAU,
        }
    };
    let mut out: Vec<f64> = (0..=m)
        .map(|k| if (4 * k) % m == 0 { cardinal(k) } else { TAU * k as f64 / m as f64 })
        .collect();
    for c in [FRAC_PI_2, PI, 3.0 * FRAC_PI_2] {
        if !out.iter().any(|t| (t - c).abs() <= ANGLE_TOLERANCE) {
            out.push(c);
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn round_up(x: f64) -> f64 {
    (x - ROUND_SLACK).ceil().max(0.0)
}

/// Cumulative convex hulls of `D_0 ∪ .. ∪ D_k` for a linear rule.
#[derive(Debug, Clone)]
pub struct DependenceHulls {
    hulls: Vec<Vec<Coord>>,
}

impl DependenceHulls {
    pub fn new(rule: &RuleSpec, n: usize) -> Result<Self> {
        let mut hulls = Vec::with_capacity(n + 1);
        hulls.push(vec![Coord::ORIGIN]);
        for kernel in KernelPowers::new(rule)?.take(n) {
            let mut pts: Vec<Coord> = hulls.last().unwrap().clone();
            pts.extend(kernel.support());
            hulls.push(convex_hull(pts));
        }
        Ok(DependenceHulls { hulls })
    }

    pub fn horizon(&self) -> usize {
        self.hulls.len() - 1
    }

    /// `max(0, max_{k <= n} max_{w in D_k} <w, u(θ)>)`.
    pub fn support_function(&self, theta: f64, n: usize) -> f64 {
        let u = direction(theta);
        self.hulls[n].iter().map(|&w| dot(w, u)).fold(0.0, f64::max)
    }

    /// Integer-valued `Λ_n(θ)`.
    pub fn extent(&self, theta: f64, n: usize) -> f64 {
        round_up(self.support_function(theta, n))
    }
}

/// Andrew's monotone chain; collinear points dropped.
fn convex_hull(mut pts: Vec<Coord>) -> Vec<Coord> {
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: Coord, a: Coord, b: Coord| (a.i - o.i) * (b.j - o.j) - (a.j - o.j) * (b.i - o.i);
    let mut hull: Vec<Coord> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Coord>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Exact `Λ_n(θ)` for a linear rule.
pub fn exact_directional_extent(rule: &RuleSpec, theta: f64, n: usize) -> Result<f64> {
    Ok(DependenceHulls::new(rule, n)?.extent(theta, n))
}

/// Damage reading of the extent for a linear rule: how far along `u(θ)` a
/// change at the origin can travel within `n` steps. A change at `0` reaches
/// `-D_k`, so this is the dependence extent at `θ + π`.
pub fn damage_extent(rule: &RuleSpec, theta: f64, n: usize) -> Result<f64> {
    Ok(DependenceHulls::new(rule, n)?.extent(theta + PI, n))
}

/// Certified lower bound on `Λ_n(θ)` by damage spreading.
///
/// For each sample a configuration is drawn from the uniform measure; for
/// candidate distances `d`, every cell with `<z, u(θ)> > d` is perturbed with
/// probability 1/2, and `d` is insufficient if any of the first `n` iterates
/// changes on the observed cells `<z, u(θ)> <= 0` within `[-2, 2]^2`. Returns
/// one more than the largest insufficient `d` seen, or 0.
pub fn sampled_extent(rule: &RuleSpec, theta: f64, n: usize, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let r = rule.radius() as i64;
    let half = OBSERVE + r * n as i64;
    let side = (2 * half + 1) as usize;
    if side.saturating_mul(side) > MAX_SAMPLE_CELLS {
        return Err(Error::WindowTooLarge { width: side, height: side });
    }
    let window = Rect::new(-half, -half, half + 1, half + 1);
    let u = direction(theta);
    let observed: Vec<Coord> =
        Rect::new(-OBSERVE, -OBSERVE, OBSERVE + 1, OBSERVE + 1).cells().filter(|&z| dot(z, u) <= ROUND_SLACK).collect();
    let measure = MeasureSpec::uniform(rule.alphabet())?;
    let q = rule.alphabet() as u64;
    let top = light_cone(rule.radius(), n) as i64;

    let mut best = 0i64;
    for s in 0..samples as u64 {
        let x = sample_window(&measure, window, seed, 2 * s, Boundary::Shrink)?;
        let mut x_orbit = Vec::with_capacity(n);
        let mut cur = x.clone();
        for _ in 0..n {
            cur = cur.step(rule, 1)?;
            x_orbit.push(cur.clone());
        }
        let mut d = top;
        while d >= best {
            let mut y = x.clone();
            let mut stream = SampleStream::new(seed ^ (d as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15), 2 * s + 1);
            for z in window.cells() {
                if dot(z, u) > d as f64 + ROUND_SLACK && stream.next_u64() >> 63 == 1 {
                    let old = y.get(z).unwrap();
                    let bump = 1 + stream.below(q - 1) as u8;
                    y.set(z, ((old as u64 + bump as u64) % q) as u8);
                }
            }
            if differs_within(&y, &x_orbit, rule, &observed)? {
                best = best.max(d + 1);
                break;
            }
            d -= 1;
        }
    }
    Ok(best as f64)
}

fn differs_within(y: &Configuration, x_orbit: &[Configuration], rule: &RuleSpec, observed: &[Coord]) -> Result<bool> {
    let mut cur = y.clone();
    for x_k in x_orbit {
        cur = cur.step(rule, 1)?;
        if observed.iter().any(|&z| cur.get(z) != x_k.get(z)) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// `Λ_n` on the grid of [`angle_grid`]`(m)`.
pub fn profile(rule: &RuleSpec, n: usize, m: usize, strategy: Strategy) -> Result<DirectionProfile> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let angles = angle_grid(m)?;
    let entry = |theta: f64, lambda_n: f64, method| ProfileEntry {
        theta,
        lambda_n,
        lambda_hat: lambda_n / n as f64,
        method,
        anchor: anchor_point(theta, lambda_n),
    };
    let name = rule.name().to_string();
    match strategy {
        Strategy::Exact => {
            let hulls = DependenceHulls::new(rule, n)?;
            let entries: Vec<ProfileEntry> =
                angles.iter().map(|&t| entry(t, hulls.extent(t, n), Method::Exact)).collect();
            let (a, b) = (n / 2, n - n / 2);
            let subadditive = angles.iter().all(|&t| hulls.extent(t, n) <= hulls.extent(t, a) + hulls.extent(t, b));
            let mut p = DirectionProfile::from_entries(name, rule.radius(), n, m, entries)?;
            p.subadditive = Some(subadditive);
            Ok(p)
        }
        Strategy::Sampled { samples, seed } => {
            let values: Vec<Result<f64>> =
                angles.par_iter().map(|&t| sampled_extent(rule, t, n, samples, seed)).collect();
            let mut entries = Vec::with_capacity(angles.len());
            for (&t, v) in angles.iter().zip(values) {
                entries.push(entry(t, v?, Method::SampledLowerBound));
            }
            DirectionProfile::from_entries(name, rule.radius(), n, m, entries)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// `K = 2(r + 1)`.
    pub constant: f64,
    /// `c` in the `c / n` discretization allowance.
    pub slack: f64,
    /// Largest `|Δλ̂| / Δθ` over adjacent grid angles.
    pub max_ratio: f64,
    pub worst_theta: f64,
    pub passed: bool,
}

/// Checks `|λ̂(θ') - λ̂(θ)| <= 2(r+1)|θ' - θ| + 4 sqrt(2) / n` on adjacent
/// grid angles.
pub fn lipschitz_check(profile: &DirectionProfile, radius: u32) -> LipschitzReport {
    let constant = 2.0 * (radius as f64 + 1.0);
    let slack = 4.0 * std::f64::consts::SQRT_2;
    let allowance = slack / profile.horizon() as f64;
    let mut report = LipschitzReport { constant, slack, max_ratio: 0.0, worst_theta: 0.0, passed: true };
    for w in profile.entries().windows(2) {
        let dt = w[1].theta - w[0].theta;
        if dt <= ANGLE_TOLERANCE {
            continue;
        }
        let dl = (w[1].lambda_hat - w[0].lambda_hat).abs();
        if dl / dt > report.max_ratio {
            report.max_ratio = dl / dt;
            report.worst_theta = w[0].theta;
        }
        if dl > constant * dt + allowance {
            report.passed = false;
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub theta: f64,
    pub horizons: Vec<usize>,
    /// `Λ_n(θ) / n` per horizon.
    pub values: Vec<f64>,
    pub running_min: Vec<f64>,
    pub running_min_nonincreasing: bool,
    /// Sup over a 64-angle grid of `|λ̂_{n'} - λ̂_n|` for successive horizons.
    pub sup_deltas: Vec<f64>,
    pub expected: Option<f64>,
    /// `|last - expected| <= 2 / n_last`, when `expected` is given.
    pub within_tolerance: Option<bool>,
}

/// `Λ_n(θ)/n` over increasing horizons, all from one dependence computation.
pub fn convergence_check(
    rule: &RuleSpec,
    theta: f64,
    horizons: &[usize],
    expected: Option<f64>,
) -> Result<ConvergenceReport> {
    if horizons.is_empty() || horizons.contains(&0) || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("horizons must be positive and strictly increasing".into()));
    }
    let hulls = DependenceHulls::new(rule, *horizons.last().unwrap())?;
    let values: Vec<f64> = horizons.iter().map(|&n| hulls.extent(theta, n) / n as f64).collect();
    let running_min: Vec<f64> = values
        .iter()
        .scan(f64::INFINITY, |m, &v| {
            *m = m.min(v);
            Some(*m)
        })
        .collect();
    let grid = angle_grid(64)?;
    let sup_deltas = horizons
        .windows(2)
        .map(|w| {
            grid.iter()
                .map(|&t| (hulls.extent(t, w[1]) / w[1] as f64 - hulls.extent(t, w[0]) / w[0] as f64).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let last_n = *horizons.last().unwrap() as f64;
    Ok(ConvergenceReport {
        theta,
        horizons: horizons.to_vec(),
        running_min_nonincreasing: running_min.windows(2).all(|w| w[1] <= w[0]),
        within_tolerance: expected.map(|e| (values.last().unwrap() - e).abs() <= 2.0 / last_n),
        values,
        running_min,
        sup_deltas,
        expected,
    })
}
