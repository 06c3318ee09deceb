//! Pearson, Spearman and Kendall tau-b coefficients of a finite joint pmf,
//! plus the generic rank correlation built from pair comparators.
//!
//! All quantities are population values computed by exact summation. Rank
//! based measures use the supplied total orders, not the numeric embeddings.

use crate::dist::{pair_stats, JointPmf, ScoredPair};
use crate::error::{Error, Result};
use crate::order::Poset;

/// Pearson coefficient of the numeric embeddings.
pub fn pearson(pmf: &JointPmf) -> Result<f64> {
    let xv = pmf.x_values().ok_or(Error::MissingValues("x"))?;
    let yv = pmf.y_values().ok_or(Error::MissingValues("y"))?;
    let stats = pair_stats(pmf, &ScoredPair::new(xv.to_vec(), yv.to_vec()))?;
    correlation_or_zero_variance(stats.cov, stats.var_f, stats.var_g)
}

fn correlation_or_zero_variance(cov: f64, var_f: f64, var_g: f64) -> Result<f64> {
    if var_f <= 0.0 {
        return Err(Error::ZeroVariance("x side"));
    }
    if var_g <= 0.0 {
        return Err(Error::ZeroVariance("y side"));
    }
    Ok((cov / (var_f * var_g).sqrt()).clamp(-1.0, 1.0))
}

/// Rank of every element within a total order (0 for the bottom).
fn ranks(order: &Poset) -> Result<Vec<usize>> {
    let linear = order.linear_order().ok_or(Error::RequiresTotalOrder)?;
    let mut rank = vec![0; linear.len()];
    for (r, &i) in linear.iter().enumerate() {
        rank[i] = r;
    }
    Ok(rank)
}

/// Mid-distribution grades `P(X < x) + p(x) / 2` along a total order.
pub fn grades(marginal: &[f64], order: &Poset) -> Result<Vec<f64>> {
    if marginal.len() != order.size() {
        return Err(Error::LengthMismatch {
            expected: order.size(),
            actual: marginal.len(),
        });
    }
    let linear = order.linear_order().ok_or(Error::RequiresTotalOrder)?;
    let mut out = vec![0.0; marginal.len()];
    let mut below = 0.0;
    for &i in &linear {
        out[i] = below + marginal[i] / 2.0;
        below += marginal[i];
    }
    Ok(out)
}

/// Pearson coefficient of the grade-transformed pair.
pub fn spearman(pmf: &JointPmf, x_order: &Poset, y_order: &Poset) -> Result<f64> {
    let gx = grades(&pmf.marginal_x(), x_order)?;
    let gy = grades(&pmf.marginal_y(), y_order)?;
    let stats = pair_stats(pmf, &ScoredPair::new(gx, gy))?;
    correlation_or_zero_variance(stats.cov, stats.var_f, stats.var_g)
}

/// Kendall tau-b, the Pearson coefficient of the comparison signs of two
/// independent draws.
pub fn kendall_tau_b(pmf: &JointPmf, x_order: &Poset, y_order: &Poset) -> Result<f64> {
    let rx = ranks(x_order)?;
    let ry = ranks(y_order)?;
    if rx.len() != pmf.rows() || ry.len() != pmf.cols() {
        return Err(Error::ShapeMismatch("orders do not match the pmf".into()));
    }
    let sign = |a: usize, b: usize| (a as f64 - b as f64).signum() * f64::from(a != b);
    let (m, n) = (pmf.rows(), pmf.cols());
    let mut concordance = 0.0;
    for x1 in 0..m {
        for y1 in 0..n {
            let p1 = pmf.at(x1, y1);
            if p1 == 0.0 {
                continue;
            }
            for x2 in 0..m {
                let sx = sign(rx[x1], rx[x2]);
                if sx == 0.0 {
                    continue;
                }
                for y2 in 0..n {
                    concordance += p1 * pmf.at(x2, y2) * sx * sign(ry[y1], ry[y2]);
                }
            }
        }
    }
    let untied = |marginal: Vec<f64>| 1.0 - marginal.iter().map(|p| p * p).sum::<f64>();
    correlation_or_zero_variance(concordance, untied(pmf.marginal_x()), untied(pmf.marginal_y()))
}

/// A real function of two symbols from one alphabet, non-decreasing in its
/// first argument and non-increasing in its second.
#[derive(Debug, Clone, PartialEq)]
pub struct PairComparator {
    size: usize,
    values: Vec<f64>,
}

impl PairComparator {
    /// Wraps a row-major `size x size` table after checking both monotonicity
    /// properties against `order`.
    pub fn new(values: Vec<Vec<f64>>, order: &Poset) -> Result<Self> {
        let size = order.size();
        if values.len() != size || values.iter().any(|r| r.len() != size) {
            return Err(Error::ShapeMismatch(format!("comparator table must be {size}x{size}")));
        }
        let values: Vec<f64> = values.into_iter().flatten().collect();
        let at = |a: usize, b: usize| values[a * size + b];
        for &(lo, hi) in order.strict_pairs() {
            for other in 0..size {
                if at(lo, other) > at(hi, other) {
                    return Err(Error::NotMonotoneComparator(format!(
                        "decreases in the first argument from {lo} to {hi} at {other}"
                    )));
                }
                if at(other, lo) < at(other, hi) {
                    return Err(Error::NotMonotoneComparator(format!(
                        "increases in the second argument from {lo} to {hi} at {other}"
                    )));
                }
            }
        }
        Ok(PairComparator { size, values })
    }

    /// `sign(rank(a) - rank(b))` along a total order.
    pub fn sign(order: &Poset) -> Result<Self> {
        let r = ranks(order)?;
        let table = r
            .iter()
            .map(|&a| r.iter().map(|&b| (a as f64 - b as f64).signum() * f64::from(a != b)).collect())
            .collect();
        Self::new(table, order)
    }

    /// `G(a) - G(b)` for the mid-distribution grades `G`.
    pub fn grade_difference(marginal: &[f64], order: &Poset) -> Result<Self> {
        let g = grades(marginal, order)?;
        let table = g.iter().map(|&a| g.iter().map(|&b| a - b).collect()).collect();
        Self::new(table, order)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.size + b]
    }
}

/// Pearson coefficient of `(fx(X1, X2), gy(Y1, Y2))` for two independent
/// draws `(X1, Y1)`, `(X2, Y2)` from `pmf`.
pub fn pair_rank_correlation(pmf: &JointPmf, fx: &PairComparator, gy: &PairComparator) -> Result<f64> {
    let (m, n) = (pmf.rows(), pmf.cols());
    if fx.size() != m || gy.size() != n {
        return Err(Error::ShapeMismatch("comparators do not match the pmf".into()));
    }
    let moments = |c: &PairComparator, marginal: &[f64]| {
        let (mut first, mut second) = (0.0, 0.0);
        for (a, pa) in marginal.iter().enumerate() {
            for (b, pb) in marginal.iter().enumerate() {
                let v = c.at(a, b);
                first += pa * pb * v;
                second += pa * pb * v * v;
            }
        }
        (first, second - first * first)
    };
    let (mean_f, var_f) = moments(fx, &pmf.marginal_x());
    let (mean_g, var_g) = moments(gy, &pmf.marginal_y());
    let mut cross = 0.0;
    for x1 in 0..m {
        for x2 in 0..m {
            let f = fx.at(x1, x2) - mean_f;
            if f == 0.0 {
                continue;
            }
            for y1 in 0..n {
                let p1 = pmf.at(x1, y1);
                if p1 == 0.0 {
                    continue;
                }
                for y2 in 0..n {
                    cross += p1 * pmf.at(x2, y2) * f * (gy.at(y1, y2) - mean_g);
                }
            }
        }
    }
    correlation_or_zero_variance(cross, var_f, var_g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dsbs() -> JointPmf {
        JointPmf::from_rows(vec![vec![0.4, 0.1], vec![0.1, 0.4]])
            .unwrap()
            .with_values(Some(vec![0.0, 1.0]), Some(vec![0.0, 1.0]))
            .unwrap()
    }

    fn chain(n: usize) -> Poset {
        Poset::chain(n).unwrap()
    }

    #[test]
    fn binary_instance_all_equal_point_six() {
        let j = dsbs();
        let c = chain(2);
        assert!((pearson(&j).unwrap() - 0.6).abs() < 1e-12);
        assert!((spearman(&j, &c, &c).unwrap() - 0.6).abs() < 1e-12);
        assert!((kendall_tau_b(&j, &c, &c).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn independent_gives_zero() {
        let j = dsbs().independent_part();
        let c = chain(2);
        assert!(pearson(&j).unwrap().abs() < 1e-15);
        assert!(spearman(&j, &c, &c).unwrap().abs() < 1e-15);
        assert!(kendall_tau_b(&j, &c, &c).unwrap().abs() < 1e-15);
        let sign = PairComparator::sign(&c).unwrap();
        assert!(pair_rank_correlation(&j, &sign, &sign).unwrap().abs() < 1e-15);
    }

    #[test]
    fn perfect_concordance() {
        let j = JointPmf::from_rows(vec![vec![0.2, 0.0, 0.0], vec![0.0, 0.5, 0.0], vec![0.0, 0.0, 0.3]])
            .unwrap()
            .with_values(Some(vec![1.0, 2.0, 3.0]), Some(vec![1.0, 2.0, 3.0]))
            .unwrap();
        let c = chain(3);
        assert!((pearson(&j).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&j, &c, &c).unwrap() - 1.0).abs() < 1e-12);
        assert!((kendall_tau_b(&j, &c, &c).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grades_examples() {
        assert_eq!(grades(&[0.5, 0.5], &chain(2)).unwrap(), vec![0.25, 0.75]);
        assert_eq!(grades(&[1.0], &chain(1)).unwrap(), vec![0.5]);
        let g = grades(&[0.2, 0.3, 0.5], &chain(3)).unwrap();
        for (a, b) in g.iter().zip([0.1, 0.35, 0.75]) {
            assert!((a - b).abs() < 1e-15);
        }
        let anti = Poset::antichain(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(grades(&[0.5, 0.5], &anti), Err(Error::RequiresTotalOrder));
    }

    #[test]
    fn grades_follow_the_order_not_the_index() {
        let g = grades(&[0.2, 0.3, 0.5], &chain(3).reverse()).unwrap();
        for (a, b) in g.iter().zip([0.9, 0.65, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn errors() {
        let j = JointPmf::from_rows(vec![vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        assert_eq!(pearson(&j), Err(Error::MissingValues("x")));
        let col = JointPmf::from_rows(vec![vec![0.5, 0.5]]).unwrap();
        assert!(matches!(kendall_tau_b(&col, &chain(1), &chain(2)), Err(Error::ZeroVariance(_))));
        let bad = PairComparator::new(vec![vec![0.0, 1.0], vec![0.0, 0.0]], &chain(2));
        assert!(matches!(bad, Err(Error::NotMonotoneComparator(_))));
    }

    #[test]
    fn comparator_instantiations() {
        let j = JointPmf::from_rows(vec![
            vec![0.10, 0.05, 0.02],
            vec![0.03, 0.20, 0.10],
            vec![0.05, 0.15, 0.30],
        ])
        .unwrap();
        let c = chain(3);
        let sign = PairComparator::sign(&c).unwrap();
        let tau = kendall_tau_b(&j, &c, &c).unwrap();
        assert!((pair_rank_correlation(&j, &sign, &sign).unwrap() - tau).abs() < 1e-12);
        let gx = PairComparator::grade_difference(&j.marginal_x(), &c).unwrap();
        let gy = PairComparator::grade_difference(&j.marginal_y(), &c).unwrap();
        let rho = spearman(&j, &c, &c).unwrap();
        assert!((pair_rank_correlation(&j, &gx, &gy).unwrap() - rho).abs() < 1e-12);
    }
}
