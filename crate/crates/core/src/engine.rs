//! Exact concordant monotone correlation (CMC) over partially ordered
//! alphabets.
//!
//! Every pair of achievable merge partitions is visited. For each, the merged
//! pmf's Witsenhausen matrix is decomposed, every admissible singular pair is
//! lifted back to the original alphabets, and a lifted pair is kept only if
//! it is monotone for both orders. The reported value is the best kept
//! covariance, so it is always attained by a feasible witness.
//!
//! In [`CmcMode::Extended`] every singular index `i >= 2` is tried with both
//! orientations (`cov = +lambda_i` and `cov = -lambda_i`), each with both
//! global signs. A constrained optimum lies in the relative interior of a face
//! of the product of monotone cones; on the merged problem of that face it is
//! a stationary point of the bilinear objective, i.e. a singular pair, so the
//! enumeration reaches it. [`CmcMode::PaperFaithful`] restricts candidates to
//! the second singular pair with `cov = +lambda_2` and its global negation.

use std::time::Instant;

use rayon::prelude::*;

use crate::dist::{merge_pmf, pair_stats, strip_zero_support, CorrelationReport, Diagnostics, JointPmf, ScoredPair, Stripped};
use crate::error::{Error, Result};
use crate::maxcorr::witsenhausen_svd;
use crate::order::{achievable_partitions, is_monotone, BlockPartition, Poset, DEFAULT_MONOTONE_TOL};

/// Default cap on the total number of strict relations of both orders.
pub const DEFAULT_RELATION_CAP: usize = 24;

/// Smallest `|s|` accepted by [`mgf_rhs`].
pub const MGF_S_MIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmcMode {
    PaperFaithful,
    Extended,
}

impl CmcMode {
    pub fn name(self) -> &'static str {
        match self {
            CmcMode::PaperFaithful => "paper-faithful",
            CmcMode::Extended => "extended",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmcOptions {
    pub mode: CmcMode,
    pub monotone_tol: f64,
    pub tie_tol: f64,
    pub parallel: bool,
    /// Worker threads when `parallel`; `None` uses the global pool.
    pub workers: Option<usize>,
    pub relation_cap: usize,
}

impl Default for CmcOptions {
    fn default() -> Self {
        CmcOptions {
            mode: CmcMode::Extended,
            monotone_tol: DEFAULT_MONOTONE_TOL,
            tie_tol: 1e-9,
            parallel: true,
            workers: None,
            relation_cap: DEFAULT_RELATION_CAP,
        }
    }
}

impl CmcOptions {
    pub fn paper_faithful() -> Self {
        CmcOptions {
            mode: CmcMode::PaperFaithful,
            ..Self::default()
        }
    }

    pub fn sequential() -> Self {
        CmcOptions {
            parallel: false,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.monotone_tol >= 0.0 && self.tie_tol >= 0.0) {
            return Err(Error::InvalidConfig("tolerances must be non-negative".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("worker count must be positive".into()));
        }
        Ok(())
    }
}

/// A lifted singular pair of one merged problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub x_blocks: BlockPartition,
    pub y_blocks: BlockPartition,
    /// 1-based singular index, at least 2.
    pub index: usize,
    /// Sign of the covariance relative to `lambda_index`.
    pub orientation: i8,
    /// Global sign applied to both functions.
    pub sign: i8,
    /// Lifted functions on the zero-mass-stripped alphabets.
    pub pair: ScoredPair,
    pub cov: f64,
}

// Position in the deterministic tie-break order.
type CandidateKey = (usize, usize, u8, u8);

struct PairOutcome {
    kept: Vec<(CandidateKey, Candidate)>,
    checked: u64,
    degenerate: bool,
}

/// Exact CMC of `pmf` with respect to the two orders.
pub fn cmc_exact(pmf: &JointPmf, x_order: &Poset, y_order: &Poset, opts: &CmcOptions) -> Result<CorrelationReport> {
    opts.validate()?;
    let started = Instant::now();
    let stripped = strip_zero_support(pmf, x_order, y_order)?;
    let relations = stripped.x_order.relation_count() + stripped.y_order.relation_count();
    if relations > opts.relation_cap {
        return Err(Error::EnumerationTooLarge {
            relations,
            cap: opts.relation_cap,
        });
    }
    let x_parts = achievable_partitions(&stripped.x_order);
    let y_parts = achievable_partitions(&stripped.y_order);
    let items: Vec<(usize, usize)> = (0..x_parts.len())
        .flat_map(|a| (0..y_parts.len()).map(move |b| (a, b)))
        .collect();

    let evaluate = |&(a, b): &(usize, usize)| {
        evaluate_pair(&stripped, &x_parts[a], &y_parts[b], a * y_parts.len() + b, opts)
    };
    let outcomes: Vec<PairOutcome> = if opts.parallel {
        match opts.workers {
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?
                .install(|| items.par_iter().map(evaluate).collect::<Result<_>>())?,
            None => items.par_iter().map(evaluate).collect::<Result<_>>()?,
        }
    } else {
        items.iter().map(evaluate).collect::<Result<_>>()?
    };

    let checked = outcomes.iter().map(|o| o.checked).sum();
    let degenerate = outcomes.iter().filter(|o| o.degenerate).count() as u64;
    let best = select(outcomes.into_iter().flat_map(|o| o.kept), opts.tie_tol);

    let mut diagnostics = Diagnostics {
        mode: Some(opts.mode.name().into()),
        partitions_enumerated: Some(items.len() as u64),
        candidates_checked: Some(checked),
        degenerate_spectra: Some(degenerate),
        runtime_seconds: None,
        notes: Vec::new(),
    };
    if degenerate > 0 {
        diagnostics.notes.push(format!(
            "{degenerate} merged problems have repeated singular values; vectors inside a repeated singular subspace are basis-dependent"
        ));
    }
    let report = match best {
        Some(candidate) => CorrelationReport {
            measure: "cmc".into(),
            value: candidate.cov.clamp(-1.0, 1.0),
            witness: Some(lift_witness(&stripped, x_order, y_order, &candidate.pair)),
            diagnostics,
        },
        None => {
            diagnostics.notes.push(format!(
                "no monotone candidate in {} mode over {} partition pairs",
                opts.mode.name(),
                items.len()
            ));
            CorrelationReport {
                measure: "cmc".into(),
                value: f64::NEG_INFINITY,
                witness: None,
                diagnostics,
            }
        }
    };
    let mut report = report;
    report.diagnostics.runtime_seconds = Some(started.elapsed().as_secs_f64());
    Ok(report)
}

fn evaluate_pair(
    stripped: &Stripped,
    x_blocks: &BlockPartition,
    y_blocks: &BlockPartition,
    item: usize,
    opts: &CmcOptions,
) -> Result<PairOutcome> {
    let mut outcome = PairOutcome {
        kept: Vec::new(),
        checked: 0,
        degenerate: false,
    };
    // unit variance is infeasible on a single merged symbol
    if x_blocks.block_count() < 2 || y_blocks.block_count() < 2 {
        return Ok(outcome);
    }
    let merged = merge_pmf(&stripped.pmf, x_blocks, y_blocks)?;
    let bundle = witsenhausen_svd(&merged)?;
    let sv = &bundle.singular_values;
    outcome.degenerate = sv.windows(2).skip(1).any(|w| (w[0] - w[1]).abs() <= opts.tie_tol);

    let mx = merged.marginal_x();
    let my = merged.marginal_y();
    let last = match opts.mode {
        CmcMode::PaperFaithful => sv.len().min(2),
        CmcMode::Extended => sv.len(),
    };
    let orientations: &[i8] = match opts.mode {
        CmcMode::PaperFaithful => &[1],
        CmcMode::Extended => &[1, -1],
    };
    for k in 1..last {
        let f: Vec<f64> = (0..x_blocks.size())
            .map(|x| {
                let b = x_blocks.block_of(x);
                bundle.left_vectors[k][b] / mx[b].sqrt()
            })
            .collect();
        let g: Vec<f64> = (0..y_blocks.size())
            .map(|y| {
                let b = y_blocks.block_of(y);
                bundle.right_vectors[k][b] / my[b].sqrt()
            })
            .collect();
        for (o_rank, &orientation) in orientations.iter().enumerate() {
            for (s_rank, sign) in [1i8, -1].into_iter().enumerate() {
                outcome.checked += 1;
                let fs = f64::from(sign);
                let gs = fs * f64::from(orientation);
                let f_signed: Vec<f64> = f.iter().map(|v| fs * v).collect();
                if !is_monotone(&f_signed, &stripped.x_order, opts.monotone_tol)? {
                    continue;
                }
                let g_signed: Vec<f64> = g.iter().map(|v| gs * v).collect();
                if !is_monotone(&g_signed, &stripped.y_order, opts.monotone_tol)? {
                    continue;
                }
                let candidate = Candidate {
                    x_blocks: x_blocks.clone(),
                    y_blocks: y_blocks.clone(),
                    index: k + 1,
                    orientation,
                    sign,
                    pair: ScoredPair::new(f_signed, g_signed),
                    cov: f64::from(orientation) * sv[k],
                };
                outcome.kept.push(((item, k, o_rank as u8, s_rank as u8), candidate));
            }
        }
    }
    // candidates more than tie_tol below this pair's best can never be selected
    if let Some(top) = outcome.kept.iter().map(|(_, c)| c.cov).reduce(f64::max) {
        outcome.kept.retain(|(_, c)| c.cov >= top - opts.tie_tol);
    }
    Ok(outcome)
}

/// Maximum covariance, ties within `tie_tol` of it resolved by the smallest key.
fn select(kept: impl Iterator<Item = (CandidateKey, Candidate)>, tie_tol: f64) -> Option<Candidate> {
    let all: Vec<_> = kept.collect();
    let top = all.iter().map(|(_, c)| c.cov).reduce(f64::max)?;
    all.into_iter()
        .filter(|(_, c)| c.cov >= top - tie_tol)
        .min_by_key(|(key, _)| *key)
        .map(|(_, c)| c)
}

/// Extends a witness on the stripped alphabets to the full ones. A zero-mass
/// symbol takes the largest value found strictly below it, or the global
/// minimum when nothing survives below it; both keep monotonicity.
fn lift_witness(stripped: &Stripped, x_order: &Poset, y_order: &Poset, pair: &ScoredPair) -> ScoredPair {
    let fill = |values: &[f64], kept: &[usize], order: &Poset| {
        let size = order.size();
        let floor = values.iter().copied().fold(f64::INFINITY, f64::min);
        let mut out = vec![0.0; size];
        let mut survivor = vec![None; size];
        for (k, &i) in kept.iter().enumerate() {
            survivor[i] = Some(k);
        }
        for i in 0..size {
            out[i] = match survivor[i] {
                Some(k) => values[k],
                None => kept
                    .iter()
                    .enumerate()
                    .filter(|&(_, &j)| order.less(j, i))
                    .map(|(k, _)| values[k])
                    .reduce(f64::max)
                    .unwrap_or(floor),
            };
        }
        out
    };
    ScoredPair::new(
        fill(&pair.f, &stripped.x_index, x_order),
        fill(&pair.g, &stripped.y_index, y_order),
    )
}

/// `max(0, cmc)`.
pub fn cmc_plus(pmf: &JointPmf, x_order: &Poset, y_order: &Poset, opts: &CmcOptions) -> Result<f64> {
    Ok(cmc_exact(pmf, x_order, y_order, opts)?.value.max(0.0))
}

/// CMC with the order on `X` reversed, i.e. the CMC of `(-X, Y)`.
pub fn cmc_x_reversed(pmf: &JointPmf, x_order: &Poset, y_order: &Poset, opts: &CmcOptions) -> Result<CorrelationReport> {
    let mut report = cmc_exact(pmf, &x_order.reverse(), y_order, opts)?;
    report.measure = "cmc_xrev".into();
    Ok(report)
}

/// `|M_XY(s1,s2) - M_X(s1) M_Y(s2)| / sqrt((M_X(2 s1) - M_X(s1)^2)(M_Y(2 s2) - M_Y(s2)^2))`,
/// i.e. the absolute correlation of `exp(s1 X)` and `exp(s2 Y)`.
pub fn mgf_rhs(pmf: &JointPmf, s1: f64, s2: f64) -> Result<f64> {
    let xv = pmf.x_values().ok_or(Error::MissingValues("x"))?;
    let yv = pmf.y_values().ok_or(Error::MissingValues("y"))?;
    for s in [s1, s2] {
        if !(s.abs() >= MGF_S_MIN) || !s.is_finite() {
            return Err(Error::SOutOfRange { s, min: MGF_S_MIN });
        }
    }
    let pair = ScoredPair::new(
        xv.iter().map(|x| (s1 * x).exp()).collect(),
        yv.iter().map(|y| (s2 * y).exp()).collect(),
    );
    // central second moments equal M(2s) - M(s)^2 without the cancellation
    let stats = pair_stats(pmf, &pair)?;
    let scale_f = stats.mean_f * stats.mean_f;
    let scale_g = stats.mean_g * stats.mean_g;
    if !(stats.var_f > 1e-14 * scale_f) {
        return Err(Error::DegenerateDenominator(s1));
    }
    if !(stats.var_g > 1e-14 * scale_g) {
        return Err(Error::DegenerateDenominator(s2));
    }
    Ok(stats.cov.abs() / (stats.var_f * stats.var_g).sqrt())
}

/// Supremum of [`mgf_rhs`] over a grid, next to the CMC values it bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct MgfBound {
    pub sup: f64,
    pub argmax: (f64, f64),
    pub cmc: f64,
    pub cmc_x_reversed: f64,
}

impl MgfBound {
    pub fn max_cmc(&self) -> f64 {
        self.cmc.max(self.cmc_x_reversed)
    }
}

pub fn mgf_bound_sup(
    pmf: &JointPmf,
    x_order: &Poset,
    y_order: &Poset,
    grid: &[(f64, f64)],
    opts: &CmcOptions,
) -> Result<MgfBound> {
    if grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sup = f64::NEG_INFINITY;
    let mut argmax = grid[0];
    for &(s1, s2) in grid {
        let v = mgf_rhs(pmf, s1, s2)?;
        if v > sup {
            sup = v;
            argmax = (s1, s2);
        }
    }
    Ok(MgfBound {
        sup,
        argmax,
        cmc: cmc_exact(pmf, x_order, y_order, opts)?.value,
        cmc_x_reversed: cmc_x_reversed(pmf, x_order, y_order, opts)?.value,
    })
}

/// `{±m : m in magnitudes}²`.
pub fn symmetric_grid(magnitudes: &[f64]) -> Vec<(f64, f64)> {
    let axis: Vec<f64> = magnitudes.iter().flat_map(|&m| [-m, m]).collect();
    axis.iter().flat_map(|&a| axis.iter().map(move |&b| (a, b))).collect()
}
