//! Brute-force reference values for the CMC, independent of the merge
//! enumeration in [`crate::engine`].
//!
//! For a total order on `Y` the inner maximisation over monotone `g` is solved
//! exactly: with `c(y) = E[f(X) | Y = y]` (for standardised `f`), the best
//! unit-variance monotone `g` is the normalised weighted isotonic projection
//! of `c` when that projection is non-constant. Otherwise `c` lies in the
//! polar cone and the optimum is attained on an extreme ray of the monotone
//! cone, i.e. on a centred up-set indicator. The outer search grids `f` over
//! monotone profiles and then polishes the best profile by alternating exact
//! best responses. Every value produced is attained by a feasible pair, so the
//! oracle is a lower bound on the CMC.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dist::{pair_stats, strip_zero_support, JointPmf, ScoredPair};
use crate::error::{Error, Result};
use crate::order::{enumerate_monotone_boolean, is_monotone, Poset};

/// Largest alphabet gridded when at least one side is totally ordered.
pub const MAX_TOTAL_ORDER_SIZE: usize = 5;
/// Largest alphabet gridded when both sides are general posets.
pub const MAX_GENERAL_ORDER_SIZE: usize = 4;

const CONSTANT_VAR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub grid_step: f64,
    pub refine_iters: usize,
    /// Refinement starts: the best grid profile plus `restart_count - 1`
    /// seeded random monotone profiles.
    pub restart_count: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            grid_step: 0.05,
            refine_iters: 50,
            restart_count: 1,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn new(grid_step: f64, refine_iters: usize) -> Self {
        OracleConfig {
            grid_step,
            refine_iters,
            ..Self::default()
        }
    }

    fn levels(&self) -> Result<u16> {
        if !(self.grid_step > 0.0 && self.grid_step <= 0.5) {
            return Err(Error::InvalidConfig(format!(
                "grid step {} outside (0, 0.5]",
                self.grid_step
            )));
        }
        if self.restart_count == 0 {
            return Err(Error::InvalidConfig("restart count must be positive".into()));
        }
        Ok((1.0 / self.grid_step).round() as u16)
    }
}

/// Weighted least-squares projection onto non-decreasing sequences (pool
/// adjacent violators).
pub fn pava_isotonic(targets: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if targets.len() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} targets with {} weights",
            targets.len(),
            weights.len()
        )));
    }
    if let Some(&w) = weights.iter().find(|&&w| !(w > 0.0)) {
        return Err(Error::InvalidConfig(format!("weight {w} is not positive")));
    }
    // (weighted mean, total weight, length) per pooled block
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(targets.len());
    for (&t, &w) in targets.iter().zip(weights) {
        let mut block = (t, w, 1);
        while let Some(&(mean, weight, len)) = blocks.last() {
            if mean < block.0 {
                break;
            }
            blocks.pop();
            let total = weight + block.1;
            block = ((mean * weight + block.0 * block.1) / total, total, len + block.2);
        }
        blocks.push(block);
    }
    Ok(blocks
        .into_iter()
        .flat_map(|(mean, _, len)| std::iter::repeat_n(mean, len))
        .collect())
}

/// `f` centred and scaled to unit variance under `weights`, or `None` if
/// (numerically) constant.
fn standardise(f: &[f64], weights: &[f64]) -> Option<Vec<f64>> {
    let mean: f64 = f.iter().zip(weights).map(|(v, p)| v * p).sum();
    let var: f64 = f.iter().zip(weights).map(|(v, p)| p * (v - mean).powi(2)).sum();
    (var > CONSTANT_VAR).then(|| {
        let sd = var.sqrt();
        f.iter().map(|v| (v - mean) / sd).collect()
    })
}

/// `E[f(X) | Y = y]`.
fn conditional_means(pmf: &JointPmf, f: &[f64], py: &[f64]) -> Vec<f64> {
    (0..pmf.cols())
        .map(|y| (0..pmf.rows()).map(|x| pmf.at(x, y) * f[x]).sum::<f64>() / py[y])
        .collect()
}

/// Exact best monotone `g` for a fixed `f` when the isotonic projection of the
/// conditional means is non-constant; `None` otherwise.
///
/// The returned value is `Cov(f / sd(f), g)` with `g` centred and of unit variance.
pub fn best_response_g(pmf: &JointPmf, f: &[f64], y_order: &Poset) -> Result<Option<(Vec<f64>, f64)>> {
    let linear = y_order.linear_order().ok_or(Error::RequiresTotalOrder)?;
    let (px, py) = (pmf.marginal_x(), pmf.marginal_y());
    if f.len() != pmf.rows() || linear.len() != pmf.cols() {
        return Err(Error::ShapeMismatch("function or order does not match the pmf".into()));
    }
    if let Some(y) = py.iter().position(|&p| p <= 0.0) {
        return Err(Error::ZeroMarginal(y));
    }
    let f = standardise(f, &px).ok_or(Error::ZeroVariance("f"))?;
    let c = conditional_means(pmf, &f, &py);
    let sorted_c: Vec<f64> = linear.iter().map(|&y| c[y]).collect();
    let sorted_w: Vec<f64> = linear.iter().map(|&y| py[y]).collect();
    let projected = pava_isotonic(&sorted_c, &sorted_w)?;
    let mut g = vec![0.0; c.len()];
    for (k, &y) in linear.iter().enumerate() {
        g[y] = projected[k];
    }
    let var_c: f64 = c.iter().zip(&py).map(|(v, p)| p * v * v).sum();
    let var_g: f64 = g.iter().zip(&py).map(|(v, p)| p * v * v).sum();
    if var_g <= 1e-20 * var_c || var_g == 0.0 {
        return Ok(None);
    }
    let Some(g) = standardise(&g, &py) else {
        return Ok(None);
    };
    let value = pair_stats(pmf, &ScoredPair::new(f, g.clone()))?.cov;
    Ok(Some((g, value)))
}

/// Best centred, normalised up-set indicator of `y_order` against `f`.
///
/// When the isotonic projection vanishes this is the exact optimum over all
/// monotone `g`: the objective is non-positive on the cone's generators, and
/// `<c, sum a_i h_i> / |sum a_i h_i| >= min_i <c, h_i> / |h_i|` by the
/// triangle inequality.
pub fn best_threshold_g(pmf: &JointPmf, f: &[f64], y_order: &Poset) -> Result<(Vec<f64>, f64)> {
    let (px, py) = (pmf.marginal_x(), pmf.marginal_y());
    let f = standardise(f, &px).ok_or(Error::ZeroVariance("f"))?;
    let upsets: Vec<Vec<u8>> = match y_order.linear_order() {
        Some(linear) => (1..linear.len())
            .map(|cut| {
                let mut ind = vec![0u8; linear.len()];
                linear[cut..].iter().for_each(|&y| ind[y] = 1);
                ind
            })
            .collect(),
        None => enumerate_monotone_boolean(y_order)?,
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for ind in upsets {
        let raw: Vec<f64> = ind.iter().map(|&b| f64::from(b)).collect();
        let Some(g) = standardise(&raw, &py) else {
            continue;
        };
        let value = pair_stats(pmf, &ScoredPair::new(f.clone(), g.clone()))?.cov;
        if best.as_ref().is_none_or(|(_, v)| value > *v) {
            best = Some((g, value));
        }
    }
    best.ok_or(Error::DegenerateMarginal("y"))
}

fn best_monotone_g(pmf: &JointPmf, f: &[f64], y_order: &Poset) -> Result<(Vec<f64>, f64)> {
    match best_response_g(pmf, f, y_order)? {
        Some(found) => Ok(found),
        None => best_threshold_g(pmf, f, y_order),
    }
}

/// Result of [`grid_oracle`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub value: f64,
    pub witness: ScoredPair,
    pub profiles: usize,
}

/// Feasible lower bound on the CMC by exhaustive gridding plus alternating
/// exact best responses.
pub fn grid_oracle(pmf: &JointPmf, x_order: &Poset, y_order: &Poset, cfg: &OracleConfig) -> Result<OracleOutcome> {
    let levels = cfg.levels()?;
    let any_total = x_order.is_total() || y_order.is_total();
    let limit = if any_total {
        MAX_TOTAL_ORDER_SIZE
    } else {
        MAX_GENERAL_ORDER_SIZE
    };
    let largest = pmf.rows().max(pmf.cols());
    if largest > limit {
        return Err(Error::SizeTooLarge { size: largest, limit });
    }
    let s = strip_zero_support(pmf, x_order, y_order)?;
    let outcome = if s.y_order.is_total() {
        best_response_search(&s.pmf, &s.x_order, &s.y_order, levels, cfg)?
    } else if s.x_order.is_total() {
        let t = best_response_search(&s.pmf.transpose(), &s.y_order, &s.x_order, levels, cfg)?;
        OracleOutcome {
            witness: ScoredPair::new(t.witness.g, t.witness.f),
            ..t
        }
    } else {
        two_sided_search(&s.pmf, &s.x_order, &s.y_order, levels)?
    };
    // report the witness on the original alphabets (zero-mass symbols at 0 only
    // when that keeps monotonicity; otherwise copy a neighbour)
    let witness = ScoredPair::new(
        spread(&outcome.witness.f, &s.x_index, x_order),
        spread(&outcome.witness.g, &s.y_index, y_order),
    );
    Ok(OracleOutcome { witness, ..outcome })
}

fn spread(values: &[f64], kept: &[usize], order: &Poset) -> Vec<f64> {
    let floor = values.iter().copied().fold(f64::INFINITY, f64::min);
    (0..order.size())
        .map(|i| match kept.iter().position(|&k| k == i) {
            Some(k) => values[k],
            None => kept
                .iter()
                .zip(values)
                .filter(|(&j, _)| order.less(j, i))
                .map(|(_, &v)| v)
                .fold(floor, f64::max),
        })
        .collect()
}

/// All monotone level profiles of `order` on `0..=levels` whose minimum is 0.
fn monotone_profiles(order: &Poset, levels: u16) -> Vec<Vec<u16>> {
    let ext = order.linear_extension();
    let mut out = Vec::new();
    let mut current = vec![0u16; order.size()];
    fill_profiles(order, &ext, 0, levels, &mut current, &mut out);
    out
}

fn fill_profiles(order: &Poset, ext: &[usize], k: usize, levels: u16, current: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
    if k == ext.len() {
        // profiles differing by a shift coincide after standardisation
        if current.contains(&0) {
            out.push(current.clone());
        }
        return;
    }
    let x = ext[k];
    let floor = ext[..k]
        .iter()
        .filter(|&&y| order.less(y, x))
        .map(|&y| current[y])
        .max()
        .unwrap_or(0);
    for level in floor..=levels {
        current[x] = level;
        fill_profiles(order, ext, k + 1, levels, current, out);
    }
}

fn profile_values(profile: &[u16], levels: u16) -> Vec<f64> {
    profile.iter().map(|&l| f64::from(l) / f64::from(levels)).collect()
}

fn best_response_search(
    pmf: &JointPmf,
    x_order: &Poset,
    y_order: &Poset,
    levels: u16,
    cfg: &OracleConfig,
) -> Result<OracleOutcome> {
    let px = pmf.marginal_x();
    let profiles = monotone_profiles(x_order, levels);
    let scored: Vec<Option<(f64, usize)>> = profiles
        .par_iter()
        .enumerate()
        .map(|(k, profile)| {
            let f = profile_values(profile, levels);
            debug_assert!(is_monotone(&f, x_order, 0.0).unwrap_or(false));
            if standardise(&f, &px).is_none() {
                return Ok(None);
            }
            Ok(Some((best_monotone_g(pmf, &f, y_order)?.1, k)))
        })
        .collect::<Result<_>>()?;
    // maximum value, earliest profile on exact ties
    let (_, best_k) = scored
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .ok_or(Error::DegenerateMarginal("x"))?;

    let mut starts = vec![profile_values(&profiles[best_k], levels)];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 1..cfg.restart_count {
        starts.push(random_monotone(x_order, &mut rng));
    }
    let transposed = pmf.transpose();
    let mut best: Option<(f64, ScoredPair)> = None;
    for start in starts {
        let Some(f0) = standardise(&start, &px) else {
            continue;
        };
        let (value, pair) = alternate(pmf, &transposed, x_order, y_order, f0, cfg.refine_iters)?;
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, pair));
        }
    }
    let (value, witness) = best.ok_or(Error::DegenerateMarginal("x"))?;
    Ok(OracleOutcome {
        value,
        witness,
        profiles: profiles.len(),
    })
}

/// Alternating exact best responses; the objective never decreases.
fn alternate(
    pmf: &JointPmf,
    transposed: &JointPmf,
    x_order: &Poset,
    y_order: &Poset,
    f0: Vec<f64>,
    iters: usize,
) -> Result<(f64, ScoredPair)> {
    let (g, value) = best_monotone_g(pmf, &f0, y_order)?;
    let mut best = (value, ScoredPair::new(f0, g));
    if !x_order.is_total() {
        return Ok(best);
    }
    for _ in 0..iters {
        let (f, _) = best_monotone_g(transposed, &best.1.g, x_order)?;
        let (g, value) = best_monotone_g(pmf, &f, y_order)?;
        if value <= best.0 {
            break;
        }
        best = (value, ScoredPair::new(f, g));
    }
    Ok(best)
}

fn random_monotone(order: &Poset, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..order.size()).map(|_| rng.random::<f64>()).collect();
    (0..order.size())
        .map(|i| {
            (0..order.size())
                .filter(|&j| j == i || order.less(j, i))
                .map(|j| raw[j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

fn two_sided_search(pmf: &JointPmf, x_order: &Poset, y_order: &Poset, levels: u16) -> Result<OracleOutcome> {
    let (px, py) = (pmf.marginal_x(), pmf.marginal_y());
    let standardised = |order: &Poset, weights: &[f64]| -> Vec<Vec<f64>> {
        monotone_profiles(order, levels)
            .iter()
            .filter_map(|p| standardise(&profile_values(p, levels), weights))
            .collect()
    };
    let fs = standardised(x_order, &px);
    let gs = standardised(y_order, &py);
    if fs.is_empty() || gs.is_empty() {
        return Err(Error::DegenerateMarginal(if fs.is_empty() { "x" } else { "y" }));
    }
    let best = fs
        .par_iter()
        .enumerate()
        .map(|(a, f)| {
            let c: Vec<f64> = (0..pmf.cols())
                .map(|y| (0..pmf.rows()).map(|x| pmf.at(x, y) * f[x]).sum())
                .collect();
            gs.iter()
                .enumerate()
                .map(|(b, g)| (c.iter().zip(g).map(|(u, v)| u * v).sum::<f64>(), a, b))
                .reduce(|p, q| if q.0 > p.0 { q } else { p })
                .expect("non-empty g grid")
        })
        .reduce_with(|p, q| if q.0 > p.0 || (q.0 == p.0 && (q.1, q.2) < (p.1, p.2)) { q } else { p })
        .expect("non-empty f grid");
    Ok(OracleOutcome {
        value: best.0,
        witness: ScoredPair::new(fs[best.1].clone(), gs[best.2].clone()),
        profiles: fs.len() * gs.len(),
    })
}
