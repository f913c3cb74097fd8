//! Shift entropy of product measures and the always finite entropy (AFE).
//!
//! All logarithms are natural. For a linear rule over a prime alphabet under
//! the uniform measure, the trajectory of the central `p x p` patch over
//! `n` steps is a linear image of the initial window, so every trajectory
//! cylinder has measure `q^-rank`: [`trajectory_rank`] gives
//! `-log μ(α_p^n(x)) = rank · ln q` exactly.

mod rank;

pub use rank::{is_prime, RankAccumulator};

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CellSet;
use crate::grid::{sample_window, Boundary, Configuration, Coord, KernelPowers, MeasureSpec, Rect, RuleKind,
    RuleSpec};

/// Column cap for the rank method.
pub const MAX_RANK_COLUMNS: usize = 20_000;

/// Cap on `p^2 (n+1) log2 q` for the empirical estimator.
pub const MAX_CODE_BITS: f64 = 24.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyMethod {
    RankExact,
    Empirical,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Nats,
}

/// `-log μ` (or a partition entropy) for one `(p, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub p: usize,
    pub n: usize,
    /// Nats.
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    /// Miller–Madow corrected plug-in entropy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distinct: Option<usize>,
}

/// `h_μ(F, α_p)`, the per-step growth at the largest horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slope {
    pub p: usize,
    pub nats: f64,
    /// In units of `ln q`.
    pub log_q: f64,
    /// Constant over the last three horizon increments.
    pub stabilized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub rule: String,
    pub method: EntropyMethod,
    pub q: u8,
    pub p_max: usize,
    pub n_max: usize,
    pub table: Vec<TableEntry>,
    pub slopes: Vec<Slope>,
    /// Growth of `h_μ(F, α_p)` from `p_max - 1` to `p_max` (or `h_μ(F, α_1)`
    /// when `p_max = 1`), in nats.
    pub afe_proxy: f64,
    pub afe_proxy_log_q: f64,
    /// `min_p h_μ(F, α_p) / p`, in nats.
    pub min_ratio: f64,
    pub units: Units,
    pub warnings: Vec<String>,
}

/// `-Σ_{c ∈ cells} ln w(x_c)`.
pub fn pattern_log_prob(measure: &MeasureSpec, config: &Configuration, cells: &CellSet) -> Result<f64> {
    if measure.alphabet() != config.alphabet() {
        return Err(Error::InvalidMeasure("measure and configuration alphabets differ".into()));
    }
    let valid = config.valid_region();
    if let Some(z) = cells.iter().find(|&z| !valid.contains(z)) {
        return Err(Error::CellOutsideValidRegion { i: z.i, j: z.j });
    }
    if measure.is_uniform() {
        return Ok(cells.len() as f64 * (measure.alphabet() as f64).ln());
    }
    let mut counts = vec![0u64; measure.alphabet() as usize];
    for z in cells.iter() {
        counts[config.get(z).unwrap() as usize] += 1;
    }
    Ok(counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| c as f64 * measure.surprisal(s as u8))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftMethod {
    ExactProduct,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftEntropyEstimate {
    pub weights: Vec<f64>,
    pub cells: usize,
    /// Nats per site.
    pub per_site: f64,
    pub method: ShiftMethod,
    pub units: Units,
}

/// Per-site entropy of a product measure; independent of the cell set.
pub fn shift_entropy(measure: &MeasureSpec, cells: &CellSet) -> Result<ShiftEntropyEstimate> {
    if cells.is_empty() {
        return Err(Error::InvalidArgument("empty cell set".into()));
    }
    Ok(ShiftEntropyEstimate {
        weights: measure.weights().to_vec(),
        cells: cells.len(),
        per_site: measure.marginal_entropy(),
        method: ShiftMethod::ExactProduct,
        units: Units::Nats,
    })
}

/// Plug-in per-site entropy of the symbol frequencies of `config` on `cells`.
pub fn shift_entropy_empirical(config: &Configuration, cells: &CellSet) -> Result<ShiftEntropyEstimate> {
    if cells.is_empty() {
        return Err(Error::InvalidArgument("empty cell set".into()));
    }
    let valid = config.valid_region();
    let mut counts = vec![0u64; config.alphabet() as usize];
    for z in cells.iter() {
        if !valid.contains(z) {
            return Err(Error::CellOutsideValidRegion { i: z.i, j: z.j });
        }
        counts[config.get(z).unwrap() as usize] += 1;
    }
    let total = cells.len() as f64;
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let per_site = -weights.iter().filter(|&&w| w > 0.0).map(|w| w * w.ln()).sum::<f64>();
    Ok(ShiftEntropyEstimate { weights, cells: cells.len(), per_site, method: ShiftMethod::Empirical, units: Units::Nats })
}

fn check_rank_method(rule: &RuleSpec) -> Result<()> {
    if !matches!(rule.kind(), RuleKind::Linear(_)) {
        return Err(Error::NonLinearRule);
    }
    if !is_prime(rule.alphabet()) {
        return Err(Error::NonPrimeAlphabet(rule.alphabet()));
    }
    Ok(())
}

/// Ranks for horizons `0..=n` of the map from the initial window of side
/// `p + 2rn` to the central `p x p` patches of `F^0 .. F^t`.
pub fn trajectory_ranks(rule: &RuleSpec, p: usize, n: usize) -> Result<Vec<usize>> {
    check_rank_method(rule)?;
    if p == 0 {
        return Err(Error::InvalidArgument("patch side must be positive".into()));
    }
    let pad = rule.radius() as usize * n;
    let side = p + 2 * pad;
    let cols = side.checked_mul(side).filter(|&c| c <= MAX_RANK_COLUMNS).ok_or_else(|| {
        Error::SizeCap(format!("window side {side} needs more than {MAX_RANK_COLUMNS} columns"))
    })?;
    let kernels = KernelPowers::up_to(rule, n)?;
    let mut acc = RankAccumulator::new(rule.alphabet(), cols)?;
    let mut ranks = Vec::with_capacity(n + 1);
    let mut row = Vec::new();
    for kernel in &kernels {
        for j in 0..p as i64 {
            for i in 0..p as i64 {
                row.clear();
                row.extend(kernel.terms().iter().map(|&(w, c)| {
                    let col = (j + w.j + pad as i64) as usize * side + (i + w.i + pad as i64) as usize;
                    (col, c)
                }));
                acc.push_sparse(&row);
            }
        }
        ranks.push(acc.rank());
    }
    Ok(ranks)
}

pub fn trajectory_rank(rule: &RuleSpec, p: usize, n: usize) -> Result<usize> {
    Ok(*trajectory_ranks(rule, p, n)?.last().unwrap())
}

/// Rank-exact AFE estimate over `p = 1..=p_max`, `n = 0..=n_max`.
pub fn afe_rank(rule: &RuleSpec, p_max: usize, n_max: usize) -> Result<EntropyEstimate> {
    check_rank_method(rule)?;
    if p_max == 0 || n_max == 0 {
        return Err(Error::InvalidArgument("p_max and n_max must be positive".into()));
    }
    let ln_q = (rule.alphabet() as f64).ln();
    let per_p: Vec<Result<Vec<usize>>> = (1..=p_max).into_par_iter().map(|p| trajectory_ranks(rule, p, n_max)).collect();
    let mut table = Vec::new();
    let mut slopes = Vec::new();
    let mut warnings = Vec::new();
    for (p, ranks) in (1..=p_max).zip(per_p) {
        let ranks = ranks?;
        for (n, &r) in ranks.iter().enumerate() {
            table.push(TableEntry {
                p,
                n,
                value: r as f64 * ln_q,
                rank: Some(r),
                corrected: None,
                std_error: None,
                distinct: None,
            });
        }
        let inc: Vec<usize> = ranks.windows(2).map(|w| w[1] - w[0]).collect();
        let last = *inc.last().unwrap();
        let stabilized = inc.len() >= 3 && inc[inc.len() - 3..].iter().all(|&d| d == last);
        if !stabilized {
            warnings.push(format!("slope for p={p} not stabilized over the last 3 horizons"));
        }
        slopes.push(Slope { p, nats: last as f64 * ln_q, log_q: last as f64, stabilized });
    }
    let proxy_log_q = match slopes.len() {
        1 => slopes[0].log_q,
        k => slopes[k - 1].log_q - slopes[k - 2].log_q,
    };
    let min_ratio = slopes.iter().map(|s| s.nats / s.p as f64).fold(f64::INFINITY, f64::min);
    Ok(EntropyEstimate {
        rule: rule.name().to_string(),
        method: EntropyMethod::RankExact,
        q: rule.alphabet(),
        p_max,
        n_max,
        table,
        slopes,
        afe_proxy: proxy_log_q * ln_q,
        afe_proxy_log_q: proxy_log_q,
        min_ratio,
        units: Units::Nats,
        warnings,
    })
}

/// Plug-in estimate of the trajectory partition entropies for one `p`.
///
/// Each sample draws a window of side `p + 2rn`, evolves it `n` steps and
/// encodes the central patches; horizon `t` uses the first `t + 1` patches.
pub fn afe_empirical(
    rule: &RuleSpec,
    measure: &MeasureSpec,
    p: usize,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<EntropyEstimate> {
    if measure.alphabet() != rule.alphabet() {
        return Err(Error::InvalidMeasure("measure and rule alphabets differ".into()));
    }
    if p == 0 || samples == 0 {
        return Err(Error::InvalidArgument("p and samples must be positive".into()));
    }
    let q = rule.alphabet() as u64;
    let bits = (p * p * (n + 1)) as f64 * (q as f64).log2();
    if bits > MAX_CODE_BITS {
        return Err(Error::SizeCap(format!("code space of {bits:.1} bits exceeds {MAX_CODE_BITS}")));
    }
    let pad = rule.radius() as i64 * n as i64;
    let window = Rect::new(-pad, -pad, p as i64 + pad, p as i64 + pad);
    let codes: Vec<Result<Vec<u64>>> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let mut x = sample_window(measure, window, seed, s, Boundary::Shrink)?;
            let mut code = 0u64;
            let mut per_horizon = Vec::with_capacity(n + 1);
            for t in 0..=n {
                if t > 0 {
                    x = x.step(rule, 1)?;
                }
                for j in 0..p as i64 {
                    for i in 0..p as i64 {
                        code = code * q + x.get(Coord::new(i, j)).unwrap() as u64;
                    }
                }
                per_horizon.push(code);
            }
            Ok(per_horizon)
        })
        .collect();
    let codes: Vec<Vec<u64>> = codes.into_iter().collect::<Result<_>>()?;
    let total = samples as f64;
    let mut table = Vec::with_capacity(n + 1);
    for t in 0..=n {
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for c in &codes {
            *counts.entry(c[t]).or_default() += 1;
        }
        let mut freqs: Vec<f64> = counts.values().map(|&c| c as f64 / total).collect();
        freqs.sort_by(f64::total_cmp);
        let plugin = -freqs.iter().map(|f| f * f.ln()).sum::<f64>();
        let second = freqs.iter().map(|f| f * f.ln() * f.ln()).sum::<f64>();
        let k = freqs.len() as f64;
        let var = (second - plugin * plugin).max(0.0);
        table.push(TableEntry {
            p,
            n: t,
            value: plugin,
            rank: None,
            corrected: Some(plugin + (k - 1.0) / (2.0 * total)),
            std_error: Some((var / total + (k - 1.0) / (2.0 * total * total)).sqrt()),
            distinct: Some(freqs.len()),
        });
    }
    let mut warnings = vec!["plug-in partition entropy: an upper-biased proxy for the almost-everywhere limit".into()];
    let space = (q as f64).powf((p * p * (n + 1)) as f64);
    if total < 10.0 * space {
        warnings.push(format!("undersampled: {samples} samples for a code space of {space}"));
    }
    let ln_q = (q as f64).ln();
    let slope = if n == 0 { table[0].corrected.unwrap() } else { table[n].corrected.unwrap() - table[n - 1].corrected.unwrap() };
    Ok(EntropyEstimate {
        rule: rule.name().to_string(),
        method: EntropyMethod::Empirical,
        q: rule.alphabet(),
        p_max: p,
        n_max: n,
        table,
        slopes: vec![Slope { p, nats: slope, log_q: slope / ln_q, stabilized: false }],
        afe_proxy: slope / p as f64,
        afe_proxy_log_q: slope / p as f64 / ln_q,
        min_ratio: slope / p as f64,
        units: Units::Nats,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub n: usize,
    /// `ceil(εn)`.
    pub p: usize,
    pub rank: usize,
    /// `rank ln q / ceil(εn²)`, nats.
    pub value: f64,
    pub value_log_q: f64,
    pub exceeds_afe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonDiagnostic {
    pub afe: f64,
    pub rows: Vec<EpsilonRow>,
}

/// `rank(ceil(εn), n) ln q / ceil(εn²)` over an `(ε, n)` grid.
pub fn afe_epsilon_diagnostic(rule: &RuleSpec, epsilons: &[f64], horizons: &[usize]) -> Result<EpsilonDiagnostic> {
    if epsilons.is_empty() || horizons.is_empty() {
        return Err(Error::GridTooCoarse("empty epsilon or horizon list".into()));
    }
    let afe = afe_rank(rule, 4, 8)?.afe_proxy;
    let ln_q = (rule.alphabet() as f64).ln();
    let mut rows = Vec::new();
    for &epsilon in epsilons {
        for &n in horizons {
            let p = (epsilon * n as f64 - 1e-9).ceil();
            let denom = (epsilon * (n * n) as f64 - 1e-9).ceil();
            if epsilon.is_nan() || epsilon <= 0.0 || p < 1.0 || n == 0 {
                return Err(Error::GridTooCoarse(format!("ceil({epsilon} * {n}) < 1")));
            }
            let rank = trajectory_rank(rule, p as usize, n)?;
            let value = rank as f64 * ln_q / denom;
            rows.push(EpsilonRow {
                epsilon,
                n,
                p: p as usize,
                rank,
                value,
                value_log_q: value / ln_q,
                exceeds_afe: value > afe + 1e-12,
            });
        }
    }
    Ok(EpsilonDiagnostic { afe, rows })
}
