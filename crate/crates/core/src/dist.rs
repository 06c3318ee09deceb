//! Finite joint pmfs, their marginals, merged and product distributions, and
//! moments of scored function pairs.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::order::{index_labels, BlockPartition, Poset};

/// Tolerance on the total mass accepted before renormalisation.
pub const MASS_TOL: f64 = 1e-9;

/// Joint probability mass over `X x Y`, rows indexed by `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    x_labels: Vec<String>,
    y_labels: Vec<String>,
    x_values: Option<Vec<f64>>,
    y_values: Option<Vec<f64>>,
    mass: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl JointPmf {
    /// Validates and renormalises a pmf given as rows, with index labels.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        Self::new(index_labels(m), index_labels(n), rows)
    }

    pub fn new(x_labels: Vec<String>, y_labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 || rows[0].is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::ShapeMismatch(format!(
                "ragged pmf rows: expected {n} columns, found {}",
                bad.len()
            )));
        }
        if x_labels.len() != m || y_labels.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} labels for a {m}x{n} pmf",
                x_labels.len(),
                y_labels.len()
            )));
        }
        let pmf = JointPmf {
            x_labels,
            y_labels,
            x_values: None,
            y_values: None,
            mass: rows.into_iter().flatten().collect(),
            rows: m,
            cols: n,
        };
        let mut pmf = pmf.validate()?;
        let total: f64 = pmf.mass.iter().sum();
        pmf.mass.iter_mut().for_each(|p| *p /= total);
        Ok(pmf)
    }

    /// Attaches numeric embeddings of the labels.
    pub fn with_values(mut self, x_values: Option<Vec<f64>>, y_values: Option<Vec<f64>>) -> Result<Self> {
        self.x_values = x_values;
        self.y_values = y_values;
        self.validate()
    }

    /// Returns the pmf unchanged if its invariants hold.
    pub fn validate(self) -> Result<Self> {
        check_distinct(&self.x_labels)?;
        check_distinct(&self.y_labels)?;
        if self.mass.len() != self.rows * self.cols {
            return Err(Error::ShapeMismatch("mass length disagrees with shape".into()));
        }
        for (k, &p) in self.mass.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFiniteValue(p));
            }
            if p < 0.0 {
                return Err(Error::NegativeMass {
                    row: k / self.cols,
                    col: k % self.cols,
                    value: p,
                });
            }
        }
        let total: f64 = self.mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::MassNotOne(total));
        }
        for (values, len, side) in [
            (&self.x_values, self.rows, "x"),
            (&self.y_values, self.cols, "y"),
        ] {
            if let Some(v) = values {
                if v.len() != len {
                    return Err(Error::ShapeMismatch(format!(
                        "{} values for {len} {side} symbols",
                        v.len()
                    )));
                }
                if let Some(&bad) = v.iter().find(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteValue(bad));
                }
            }
        }
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.mass[x * self.cols + y]
    }

    /// Row-major mass.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.mass.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    pub fn x_values(&self) -> Option<&[f64]> {
        self.x_values.as_deref()
    }

    pub fn y_values(&self) -> Option<&[f64]> {
        self.y_values.as_deref()
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        self.mass.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for row in self.mass.chunks(self.cols) {
            for (acc, p) in out.iter_mut().zip(row) {
                *acc += p;
            }
        }
        out
    }

    /// Swaps the roles of `X` and `Y`.
    pub fn transpose(&self) -> JointPmf {
        let mut mass = vec![0.0; self.mass.len()];
        for x in 0..self.rows {
            for y in 0..self.cols {
                mass[y * self.rows + x] = self.at(x, y);
            }
        }
        JointPmf {
            x_labels: self.y_labels.clone(),
            y_labels: self.x_labels.clone(),
            x_values: self.y_values.clone(),
            y_values: self.x_values.clone(),
            mass,
            rows: self.cols,
            cols: self.rows,
        }
    }

    /// Product of the marginals, same alphabets.
    pub fn independent_part(&self) -> JointPmf {
        let (px, py) = (self.marginal_x(), self.marginal_y());
        let mut out = self.clone();
        for x in 0..self.rows {
            for y in 0..self.cols {
                out.mass[x * self.cols + y] = px[x] * py[y];
            }
        }
        out
    }

    /// Total variation distance to the product of the marginals.
    pub fn tv_to_independence(&self) -> f64 {
        let ind = self.independent_part();
        0.5 * self.mass.iter().zip(&ind.mass).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    /// JSON document `{x_labels, y_labels, x_values?, y_values?, pmf}`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut doc = serde_json::Map::new();
        doc.insert("x_labels".into(), serde_json::json!(self.x_labels));
        doc.insert("y_labels".into(), serde_json::json!(self.y_labels));
        if let Some(v) = &self.x_values {
            doc.insert("x_values".into(), serde_json::json!(v));
        }
        if let Some(v) = &self.y_values {
            doc.insert("y_values".into(), serde_json::json!(v));
        }
        doc.insert("pmf".into(), serde_json::json!(self.to_rows()));
        serde_json::Value::Object(doc)
    }

    /// Inverse of [`JointPmf::to_json`].
    pub fn from_json(doc: &serde_json::Value) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct Doc {
            x_labels: Vec<String>,
            y_labels: Vec<String>,
            x_values: Option<Vec<f64>>,
            y_values: Option<Vec<f64>>,
            pmf: Vec<Vec<f64>>,
        }
        let d: Doc = serde_json::from_value(doc.clone()).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        JointPmf::new(d.x_labels, d.y_labels, d.pmf)?.with_values(d.x_values, d.y_values)
    }
}

fn check_distinct(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    match labels.iter().find(|l| !seen.insert(l.as_str())) {
        Some(dup) => Err(Error::DuplicateLabel(dup.clone())),
        None => Ok(()),
    }
}

/// A pair of real functions, `f` on the `X` alphabet and `g` on `Y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredPair {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl ScoredPair {
    pub fn new(f: Vec<f64>, g: Vec<f64>) -> Self {
        ScoredPair { f, g }
    }

    pub fn negated(&self) -> ScoredPair {
        ScoredPair {
            f: self.f.iter().map(|v| -v).collect(),
            g: self.g.iter().map(|v| -v).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStats {
    pub mean_f: f64,
    pub mean_g: f64,
    pub var_f: f64,
    pub var_g: f64,
    pub cov: f64,
}

impl PairStats {
    /// Pearson coefficient of `f(X)` and `g(Y)`.
    pub fn correlation(&self) -> Option<f64> {
        let denom = (self.var_f * self.var_g).sqrt();
        (denom > 0.0).then(|| self.cov / denom)
    }
}

/// Exact weighted moments of `(f(X), g(Y))`.
pub fn pair_stats(pmf: &JointPmf, pair: &ScoredPair) -> Result<PairStats> {
    if pair.f.len() != pmf.rows() || pair.g.len() != pmf.cols() {
        return Err(Error::ShapeMismatch(format!(
            "scored pair of lengths ({}, {}) on a {}x{} pmf",
            pair.f.len(),
            pair.g.len(),
            pmf.rows(),
            pmf.cols()
        )));
    }
    let (px, py) = (pmf.marginal_x(), pmf.marginal_y());
    let mean_f: f64 = px.iter().zip(&pair.f).map(|(p, v)| p * v).sum();
    let mean_g: f64 = py.iter().zip(&pair.g).map(|(p, v)| p * v).sum();
    // central moments avoid cancellation when f or g carry a large offset
    let var_f = px.iter().zip(&pair.f).map(|(p, v)| p * (v - mean_f).powi(2)).sum();
    let var_g = py.iter().zip(&pair.g).map(|(p, v)| p * (v - mean_g).powi(2)).sum();
    let mut cov = 0.0;
    for x in 0..pmf.rows() {
        let fx = pair.f[x] - mean_f;
        for y in 0..pmf.cols() {
            cov += pmf.at(x, y) * fx * (pair.g[y] - mean_g);
        }
    }
    Ok(PairStats {
        mean_f,
        mean_g,
        var_f,
        var_g,
        cov,
    })
}

/// A pmf with zero-mass symbols removed, its restricted orders, and the
/// original index of every surviving symbol.
#[derive(Debug, Clone)]
pub struct Stripped {
    pub pmf: JointPmf,
    pub x_order: Poset,
    pub y_order: Poset,
    pub x_index: Vec<usize>,
    pub y_index: Vec<usize>,
}

/// Removes symbols with zero marginal mass and restricts both orders.
pub fn strip_zero_support(pmf: &JointPmf, x_order: &Poset, y_order: &Poset) -> Result<Stripped> {
    if x_order.size() != pmf.rows() || y_order.size() != pmf.cols() {
        return Err(Error::ShapeMismatch(format!(
            "orders of sizes ({}, {}) for a {}x{} pmf",
            x_order.size(),
            y_order.size(),
            pmf.rows(),
            pmf.cols()
        )));
    }
    let x_index = support(&pmf.marginal_x());
    let y_index = support(&pmf.marginal_y());
    if x_index.len() < 2 {
        return Err(Error::DegenerateMarginal("x"));
    }
    if y_index.len() < 2 {
        return Err(Error::DegenerateMarginal("y"));
    }
    let rows = x_index
        .iter()
        .map(|&x| y_index.iter().map(|&y| pmf.at(x, y)).collect())
        .collect();
    let pick = |labels: &[String], idx: &[usize]| idx.iter().map(|&i| labels[i].clone()).collect();
    let pick_values = |values: Option<&[f64]>, idx: &[usize]| values.map(|v| idx.iter().map(|&i| v[i]).collect());
    let stripped = JointPmf::new(pick(&pmf.x_labels, &x_index), pick(&pmf.y_labels, &y_index), rows)?
        .with_values(pick_values(pmf.x_values(), &x_index), pick_values(pmf.y_values(), &y_index))?;
    Ok(Stripped {
        pmf: stripped,
        x_order: x_order.restrict(&x_index)?,
        y_order: y_order.restrict(&y_index)?,
        x_index,
        y_index,
    })
}

fn support(marginal: &[f64]) -> Vec<usize> {
    marginal
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// Sums mass over merged blocks; merged labels are joined with `+`.
pub fn merge_pmf(pmf: &JointPmf, x_blocks: &BlockPartition, y_blocks: &BlockPartition) -> Result<JointPmf> {
    if x_blocks.size() != pmf.rows() || y_blocks.size() != pmf.cols() {
        return Err(Error::ShapeMismatch(format!(
            "partitions of sizes ({}, {}) for a {}x{} pmf",
            x_blocks.size(),
            y_blocks.size(),
            pmf.rows(),
            pmf.cols()
        )));
    }
    let (m, n) = (x_blocks.block_count(), y_blocks.block_count());
    let mut mass = vec![0.0; m * n];
    for x in 0..pmf.rows() {
        let bx = x_blocks.block_of(x);
        for y in 0..pmf.cols() {
            mass[bx * n + y_blocks.block_of(y)] += pmf.at(x, y);
        }
    }
    let join = |labels: &[String], part: &BlockPartition| -> Vec<String> {
        part.blocks()
            .iter()
            .map(|b| b.iter().map(|&i| labels[i].as_str()).collect::<Vec<_>>().join("+"))
            .collect()
    };
    Ok(JointPmf {
        x_labels: join(&pmf.x_labels, x_blocks),
        y_labels: join(&pmf.y_labels, y_blocks),
        x_values: None,
        y_values: None,
        mass,
        rows: m,
        cols: n,
    })
}

/// Independent product, composite symbol `(a, b)` at index `a * |second| + b`.
pub fn product_pmf(first: &JointPmf, second: &JointPmf) -> JointPmf {
    let pair_labels = |a: &[String], b: &[String]| -> Vec<String> {
        a.iter()
            .flat_map(|s| b.iter().map(move |t| format!("({s},{t})")))
            .collect()
    };
    let (m, n) = (first.rows * second.rows, first.cols * second.cols);
    let mut mass = vec![0.0; m * n];
    for x1 in 0..first.rows {
        for x2 in 0..second.rows {
            for y1 in 0..first.cols {
                for y2 in 0..second.cols {
                    mass[(x1 * second.rows + x2) * n + (y1 * second.cols + y2)] =
                        first.at(x1, y1) * second.at(x2, y2);
                }
            }
        }
    }
    JointPmf {
        x_labels: pair_labels(&first.x_labels, &second.x_labels),
        y_labels: pair_labels(&first.y_labels, &second.y_labels),
        x_values: None,
        y_values: None,
        mass,
        rows: m,
        cols: n,
    }
}

/// Empirical distribution of the sample rows over their distinct values.
pub fn empirical_from_samples(samples: &[(f64, f64)]) -> Result<JointPmf> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(&bad) = samples
        .iter()
        .flat_map(|(x, y)| [x, y])
        .find(|v| !v.is_finite())
    {
        return Err(Error::NonFiniteValue(bad));
    }
    // -0.0 and 0.0 are the same key
    let key = |v: f64| (v + 0.0).to_bits();
    let distinct = |pick: fn(&(f64, f64)) -> f64| {
        let mut values: Vec<f64> = samples.iter().map(|s| pick(s) + 0.0).collect();
        values.sort_by(f64::total_cmp);
        values.dedup_by(|a, b| key(*a) == key(*b));
        values
    };
    let xs = distinct(|s| s.0);
    let ys = distinct(|s| s.1);
    let index = |values: &[f64]| -> BTreeMap<u64, usize> {
        values.iter().enumerate().map(|(i, &v)| (key(v), i)).collect()
    };
    let (xi, yi) = (index(&xs), index(&ys));
    let mut counts = vec![vec![0usize; ys.len()]; xs.len()];
    for &(x, y) in samples {
        counts[xi[&key(x)]][yi[&key(y)]] += 1;
    }
    let total = samples.len() as f64;
    let rows = counts
        .into_iter()
        .map(|r| r.into_iter().map(|c| c as f64 / total).collect())
        .collect();
    let label = |v: &f64| format!("{v}");
    JointPmf::new(xs.iter().map(label).collect(), ys.iter().map(label).collect(), rows)?
        .with_values(Some(xs), Some(ys))
}

/// Enumeration diagnostics attached to a [`CorrelationReport`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partitions_enumerated: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates_checked: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degenerate_spectra: Option<u64>,
    #[serde(skip)]
    pub runtime_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// A correlation value with an optional certifying witness.
///
/// `value` is `-inf` when an enumeration found no feasible candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub measure: String,
    pub value: f64,
    pub witness: Option<ScoredPair>,
    pub diagnostics: Diagnostics,
}

impl CorrelationReport {
    pub fn has_witness(&self) -> bool {
        self.value.is_finite()
    }
}
