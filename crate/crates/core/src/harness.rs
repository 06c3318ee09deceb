//! Seeded verification suites for the structural properties of the CMC.
//!
//! Every suite draws its instances from a `ChaCha8Rng` seeded by the caller,
//! evaluates one violation number per trial (the property holds when it is at
//! most the suite tolerance) and keeps the worst trial. The per-trial
//! functions are public so a reported worst instance can be re-checked alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::classic::{kendall_tau_b, pearson, spearman};
use crate::dist::{product_pmf, JointPmf};
use crate::engine::{cmc_exact, cmc_plus, cmc_x_reversed, mgf_bound_sup, CmcOptions};
use crate::error::{Error, Result};
use crate::maxcorr::maximal_correlation;
use crate::order::{enumerate_monotone_boolean, Poset};

pub const SANDWICH_TOL: f64 = 1e-8;
pub const RANK_DOMINANCE_TOL: f64 = 1e-8;
pub const TENSORIZATION_TOL: f64 = 1e-6;
pub const FKG_TOL: f64 = 1e-9;
pub const MGF_TOL: f64 = 1e-7;
/// Total-variation distance above which a pmf counts as dependent.
pub const INDEPENDENCE_TV: f64 = 0.01;
/// CMC level that a dependent pmf must exceed in one orientation.
pub const INDEPENDENCE_FLOOR: f64 = 1e-6;
/// Largest side of the random instances drawn by the suites.
pub const MAX_RANDOM_SIDE: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub seed: u64,
    pub trials: usize,
    pub tolerance: f64,
    pub max_violation: f64,
    pub pass: bool,
    pub worst_instance: Option<Value>,
    pub log: Vec<String>,
}

impl VerifyReport {
    fn collect(suite: &str, seed: u64, tolerance: f64, outcomes: Vec<(f64, Value)>, log: Vec<String>) -> Self {
        let trials = outcomes.len();
        let mut max_violation = f64::NEG_INFINITY;
        let mut worst_instance = None;
        for (violation, instance) in outcomes {
            if worst_instance.is_none() || violation > max_violation {
                max_violation = violation;
                worst_instance = Some(instance);
            }
        }
        VerifyReport {
            suite: suite.into(),
            seed,
            trials,
            tolerance,
            max_violation,
            pass: max_violation <= tolerance,
            worst_instance,
            log,
        }
    }
}

/// Suite names accepted by [`run_suite`].
pub const SUITES: [&str; 7] = [
    "sandwich",
    "rank-dominance",
    "tensorization",
    "fkg",
    "mgf",
    "independence",
    "balanced-disagreement",
];

/// Parameters shared by the suites; each suite reads the ones it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteParams {
    pub seed: u64,
    pub trials: usize,
    /// Cube dimension for `fkg`.
    pub n: usize,
    /// Grid for `mgf`.
    pub grid: Vec<(f64, f64)>,
    pub options: CmcOptions,
}

pub fn run_suite(name: &str, params: &SuiteParams) -> Result<VerifyReport> {
    let SuiteParams {
        seed,
        trials,
        n,
        ref options,
        ..
    } = *params;
    match name {
        "sandwich" => verify_sandwich(seed, trials, options),
        "rank-dominance" => verify_rank_dominance(seed, trials, options),
        "tensorization" => verify_tensorization(seed, trials, options),
        "fkg" => {
            let biases = random_biases(seed, trials, n);
            verify_fkg(n, &biases, seed, options)
        }
        "mgf" => verify_mgf(seed, trials, &params.grid, options),
        "independence" => verify_independence(seed, trials, options),
        "balanced-disagreement" => verify_balanced_disagreement(),
        other => Err(Error::InvalidConfig(format!(
            "unknown suite {other:?}; expected one of {}",
            SUITES.join(", ")
        ))),
    }
}

/// `count` pmfs of shape `m x n` with symmetric Dirichlet(1) cell masses.
pub fn random_instances(seed: u64, count: usize, shape: (usize, usize)) -> Result<Vec<JointPmf>> {
    let (m, n) = shape;
    if m < 2 || n < 2 {
        return Err(Error::InvalidConfig(format!("random instances need sides >= 2, got {m}x{n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| dirichlet_pmf(&mut rng, m, n)).collect()
}

fn dirichlet_pmf(rng: &mut impl Rng, m: usize, n: usize) -> Result<JointPmf> {
    let cells: Vec<f64> = (0..m * n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = cells.iter().sum();
    JointPmf::from_rows(cells.chunks(n).map(|r| r.iter().map(|c| c / total).collect()).collect())
}

/// Random pmfs with both sides drawn from `2..=MAX_RANDOM_SIDE`, embedded at
/// their indices.
fn mixed_shape_instances(seed: u64, trials: usize) -> Result<Vec<JointPmf>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let m = rng.random_range(2..=MAX_RANDOM_SIDE);
            let n = rng.random_range(2..=MAX_RANDOM_SIDE);
            with_index_values(dirichlet_pmf(&mut rng, m, n)?)
        })
        .collect()
}

fn with_index_values(pmf: JointPmf) -> Result<JointPmf> {
    let xv = (0..pmf.rows()).map(|i| i as f64).collect();
    let yv = (0..pmf.cols()).map(|i| i as f64).collect();
    pmf.with_values(Some(xv), Some(yv))
}

fn total_orders(pmf: &JointPmf) -> Result<(Poset, Poset)> {
    Ok((Poset::total(pmf.x_labels().to_vec())?, Poset::total(pmf.y_labels().to_vec())?))
}

fn run_trials<T, F>(items: &[T], check: F) -> Result<Vec<f64>>
where
    T: Sync,
    F: Fn(&T) -> Result<f64> + Sync + Send,
{
    items.par_iter().map(check).collect()
}

/// `max(pearson - cmc, cmc - maxcorr)` under total orders.
pub fn sandwich_violation(pmf: &JointPmf, opts: &CmcOptions) -> Result<f64> {
    let (px, py) = total_orders(pmf)?;
    let r = pearson(pmf)?;
    let c = cmc_exact(pmf, &px, &py, opts)?.value;
    let m = maximal_correlation(pmf)?.value;
    Ok((r - c).max(c - m))
}

pub fn verify_sandwich(seed: u64, trials: usize, opts: &CmcOptions) -> Result<VerifyReport> {
    let pmfs = mixed_shape_instances(seed, trials)?;
    let v = run_trials(&pmfs, |p| sandwich_violation(p, opts))?;
    let outcomes = v.into_iter().zip(pmfs.iter().map(JointPmf::to_json)).collect();
    Ok(VerifyReport::collect("sandwich", seed, SANDWICH_TOL, outcomes, vec![]))
}

/// `max(tau_b, spearman) - cmc_plus` under total orders.
pub fn rank_dominance_violation(pmf: &JointPmf, opts: &CmcOptions) -> Result<f64> {
    let (px, py) = total_orders(pmf)?;
    let c = cmc_plus(pmf, &px, &py, opts)?;
    let tau = kendall_tau_b(pmf, &px, &py)?;
    let rho = spearman(pmf, &px, &py)?;
    Ok(tau.max(rho) - c)
}

pub fn verify_rank_dominance(seed: u64, trials: usize, opts: &CmcOptions) -> Result<VerifyReport> {
    let pmfs = mixed_shape_instances(seed, trials)?;
    let v = run_trials(&pmfs, |p| rank_dominance_violation(p, opts))?;
    let outcomes = v.into_iter().zip(pmfs.iter().map(JointPmf::to_json)).collect();
    Ok(VerifyReport::collect("rank-dominance", seed, RANK_DOMINANCE_TOL, outcomes, vec![]))
}

/// `|cmc_plus(first x second) - max(cmc_plus(first), cmc_plus(second))|`,
/// with total orders on the factors and product orders on the product.
pub fn tensorization_violation(first: &JointPmf, second: &JointPmf, opts: &CmcOptions) -> Result<f64> {
    let (ax, ay) = total_orders(first)?;
    let (bx, by) = total_orders(second)?;
    let factors = cmc_plus(first, &ax, &ay, opts)?.max(cmc_plus(second, &bx, &by, opts)?);
    let product = cmc_plus(&product_pmf(first, second), &ax.product(&bx), &ay.product(&by), opts)?;
    Ok((product - factors).abs())
}

/// The two-symbol pmf `diag(1/2, 1/2)` with `Y` ordered against `X`, whose CMC is -1.
pub fn anti_aligned_bit() -> Result<(JointPmf, Poset, Poset)> {
    let pmf = JointPmf::from_rows(vec![vec![0.5, 0.0], vec![0.0, 0.5]])?;
    let x = Poset::chain(2)?;
    let y = x.reverse();
    Ok((pmf, x, y))
}

/// CMC (unclipped) of two independent copies of [`anti_aligned_bit`].
pub fn anti_aligned_square() -> Result<f64> {
    let (pmf, x, y) = anti_aligned_bit()?;
    Ok(cmc_exact(&product_pmf(&pmf, &pmf), &x.product(&x), &y.product(&y), &CmcOptions::default())?.value)
}

pub fn verify_tensorization(seed: u64, trials: usize, opts: &CmcOptions) -> Result<VerifyReport> {
    let factors = random_instances(seed, 2 * trials, (2, 2))?;
    let pairs: Vec<(&JointPmf, &JointPmf)> = factors.chunks(2).map(|c| (&c[0], &c[1])).collect();
    let v = run_trials(&pairs, |(a, b)| tensorization_violation(a, b, opts))?;
    let mut outcomes: Vec<(f64, Value)> = v
        .into_iter()
        .zip(pairs.iter().map(|(a, b)| json!({"first": a.to_json(), "second": b.to_json()})))
        .collect();
    // unclipped tensorization fails: the square of a -1 instance is non-negative
    let square = anti_aligned_square()?;
    let (bit, _, _) = anti_aligned_bit()?;
    outcomes.push((
        -square,
        json!({"first": bit.to_json(), "second": bit.to_json(), "y_order": "reversed"}),
    ));
    let log = vec![format!("anti-aligned bit: factor cmc -1, product cmc {square}")];
    Ok(VerifyReport::collect("tensorization", seed, TENSORIZATION_TOL, outcomes, log))
}

/// `{0,1}^n` under the componentwise order; element `e` has bit `k` equal to
/// bit `n-1-k` of `e`.
pub fn boolean_cube(n: usize) -> Result<Poset> {
    let bit = Poset::chain(2)?;
    let mut cube = bit.clone();
    for _ in 1..n.max(1) {
        cube = cube.product(&bit);
    }
    Ok(cube)
}

/// `Y = X` for `n` independent bits with `P(bit k = 1) = biases[k]`.
pub fn fkg_instance(biases: &[f64]) -> Result<JointPmf> {
    let n = biases.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if let Some(&b) = biases.iter().find(|&&b| !(b > 0.0 && b < 1.0)) {
        return Err(Error::InvalidConfig(format!("bias {b} outside (0, 1)")));
    }
    let size = 1usize << n;
    let mut rows = vec![vec![0.0; size]; size];
    for (e, row) in rows.iter_mut().enumerate() {
        row[e] = (0..n)
            .map(|k| if e >> (n - 1 - k) & 1 == 1 { biases[k] } else { 1.0 - biases[k] })
            .product();
    }
    JointPmf::from_rows(rows)
}

/// CMC of [`fkg_instance`] with the cube order on `X` and its reverse on `Y`.
pub fn fkg_violation(biases: &[f64], opts: &CmcOptions) -> Result<f64> {
    let n = biases.len();
    let cube = boolean_cube(n)?;
    if n >= 3 {
        return Err(Error::CapExceeded {
            n,
            relations: cube.relation_count(),
        });
    }
    Ok(cmc_exact(&fkg_instance(biases)?, &cube, &cube.reverse(), opts)?.value)
}

/// `[0.5; n]` followed by `count - 1` bias vectors uniform on `[0.05, 0.95]^n`.
pub fn random_biases(seed: u64, count: usize, n: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| match k {
            0 => vec![0.5; n],
            _ => (0..n).map(|_| rng.random_range(0.05..0.95)).collect(),
        })
        .collect()
}

pub fn verify_fkg(n: usize, biases: &[Vec<f64>], seed: u64, opts: &CmcOptions) -> Result<VerifyReport> {
    if n == 0 {
        return Err(Error::InvalidConfig("fkg needs n >= 1".into()));
    }
    if let Some(b) = biases.iter().find(|b| b.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    if n >= 3 {
        return Err(Error::CapExceeded {
            n,
            relations: boolean_cube(n)?.relation_count(),
        });
    }
    let v = run_trials(biases, |b| fkg_violation(b, opts))?;
    let outcomes = v.into_iter().zip(biases.iter().map(|b| json!({"n": n, "biases": b}))).collect();
    Ok(VerifyReport::collect("fkg", seed, FKG_TOL, outcomes, vec![]))
}

/// `sup_grid mgf_rhs - max(cmc, cmc_x_reversed)` under total orders.
pub fn mgf_violation(pmf: &JointPmf, grid: &[(f64, f64)], opts: &CmcOptions) -> Result<f64> {
    let (px, py) = total_orders(pmf)?;
    let bound = mgf_bound_sup(pmf, &px, &py, grid, opts)?;
    Ok(bound.sup - bound.max_cmc())
}

pub fn verify_mgf(seed: u64, trials: usize, grid: &[(f64, f64)], opts: &CmcOptions) -> Result<VerifyReport> {
    let pmfs = mixed_shape_instances(seed, trials)?;
    let v = run_trials(&pmfs, |p| mgf_violation(p, grid, opts))?;
    let outcomes = v.into_iter().zip(pmfs.iter().map(JointPmf::to_json)).collect();
    Ok(VerifyReport::collect("mgf", seed, MGF_TOL, outcomes, vec![]))
}

/// Total variation to independence and `max(cmc, cmc_x_reversed)`.
pub fn independence_measures(pmf: &JointPmf, opts: &CmcOptions) -> Result<(f64, f64)> {
    let (px, py) = total_orders(pmf)?;
    let c = cmc_exact(pmf, &px, &py, opts)?.value;
    let r = cmc_x_reversed(pmf, &px, &py, opts)?.value;
    Ok((pmf.tv_to_independence(), c.max(r)))
}

/// `INDEPENDENCE_FLOOR - max(cmc, cmc_x_reversed)` for dependent pmfs, and
/// negative infinity when the TV distance is at most [`INDEPENDENCE_TV`].
pub fn independence_violation(pmf: &JointPmf, opts: &CmcOptions) -> Result<f64> {
    let (tv, c) = independence_measures(pmf, opts)?;
    Ok(if tv > INDEPENDENCE_TV {
        INDEPENDENCE_FLOOR - c
    } else {
        f64::NEG_INFINITY
    })
}

/// Random pmfs, exact products of their marginals, and mixtures that sit
/// close to the TV threshold, in rotation.
fn independence_instances(seed: u64, trials: usize) -> Result<Vec<JointPmf>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|k| {
            let m = rng.random_range(2..=MAX_RANDOM_SIDE);
            let n = rng.random_range(2..=MAX_RANDOM_SIDE);
            let pmf = dirichlet_pmf(&mut rng, m, n)?;
            match k % 3 {
                0 => Ok(pmf),
                1 => Ok(pmf.independent_part()),
                _ => {
                    let eps = rng.random_range(0.0..0.1);
                    let ind = pmf.independent_part();
                    let rows = ind
                        .to_rows()
                        .iter()
                        .zip(pmf.to_rows())
                        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (1.0 - eps) * p + eps * q).collect())
                        .collect();
                    JointPmf::from_rows(rows)
                }
            }
        })
        .collect()
}

pub fn verify_independence(seed: u64, trials: usize, opts: &CmcOptions) -> Result<VerifyReport> {
    let pmfs = independence_instances(seed, trials)?;
    let measured: Vec<(f64, f64)> = pmfs
        .par_iter()
        .map(|p| independence_measures(p, opts))
        .collect::<Result<_>>()?;
    let mut log = Vec::new();
    let mut outcomes = Vec::with_capacity(pmfs.len());
    for (k, (pmf, &(tv, c))) in pmfs.iter().zip(&measured).enumerate() {
        // the forward direction is reported, not asserted
        if c <= 1e-9 {
            log.push(format!("trial {k}: max cmc {c:.3e}, tv {tv:.3e}"));
        }
        let violation = if tv > INDEPENDENCE_TV {
            INDEPENDENCE_FLOOR - c
        } else {
            f64::NEG_INFINITY
        };
        outcomes.push((violation, pmf.to_json()));
    }
    Ok(VerifyReport::collect("independence", seed, 0.0, outcomes, log))
}

/// Minimum of `P(f(X) != g(X xor 1...1))` over balanced monotone boolean
/// `f, g` on `{0,1}^n`, with `X` uniform.
pub fn balanced_min_disagreement(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    if n > 3 {
        return Err(Error::SizeTooLarge { size: n, limit: 3 });
    }
    let size = 1usize << n;
    let balanced: Vec<Vec<u8>> = enumerate_monotone_boolean(&boolean_cube(n)?)?
        .into_iter()
        .filter(|f| f.iter().map(|&b| usize::from(b)).sum::<usize>() == size / 2)
        .collect();
    let worst = balanced
        .iter()
        .flat_map(|f| {
            balanced
                .iter()
                .map(move |g| (0..size).filter(|&e| f[e] != g[size - 1 - e]).count())
        })
        .min()
        .ok_or(Error::EmptyInput)?;
    Ok(worst as f64 / size as f64)
}

/// Exact values at `n = 1, 2` and positivity at `n = 3`.
pub fn verify_balanced_disagreement() -> Result<VerifyReport> {
    let mut outcomes = Vec::new();
    let mut log = Vec::new();
    for (n, expected) in [(1, Some(1.0)), (2, Some(0.5)), (3, None)] {
        let value = balanced_min_disagreement(n)?;
        log.push(format!("n = {n}: min disagreement {value}"));
        let violation = match expected {
            Some(e) => (value - e).abs(),
            None if value > 0.0 => 0.0,
            None => 1.0 - value,
        };
        outcomes.push((violation, json!({"n": n})));
    }
    Ok(VerifyReport::collect("balanced-disagreement", 0, 0.0, outcomes, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> CmcOptions {
        CmcOptions::default()
    }

    #[test]
    fn random_instances_are_deterministic() {
        let a = random_instances(1, 2, (3, 2)).unwrap();
        assert_eq!(a, random_instances(1, 2, (3, 2)).unwrap());
        assert_ne!(a, random_instances(2, 2, (3, 2)).unwrap());
        assert!(random_instances(1, 0, (2, 2)).unwrap().is_empty());
        assert!(random_instances(1, 1, (1, 2)).is_err());
        for p in &a {
            assert!(p.clone().validate().is_ok());
        }
    }

    #[test]
    fn binary_instance_meets_every_bound() {
        let j = with_index_values(JointPmf::from_rows(vec![vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap()).unwrap();
        assert!(sandwich_violation(&j, &opts()).unwrap().abs() < 1e-12);
        assert!(rank_dominance_violation(&j, &opts()).unwrap().abs() < 1e-12);
        assert!(tensorization_violation(&j, &j, &opts()).unwrap() < 1e-9);
        assert!(mgf_violation(&j, &[(1.0, 1.0)], &opts()).unwrap().abs() < 1e-9);
        assert!(independence_violation(&j, &opts()).unwrap() < 0.0);
        let ind = j.independent_part();
        assert_eq!(independence_violation(&ind, &opts()).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn anti_aligned_square_is_non_negative() {
        assert!(anti_aligned_square().unwrap() >= -1e-9);
    }

    #[test]
    fn fkg_examples() {
        assert!((fkg_violation(&[0.5], &opts()).unwrap() + 1.0).abs() < 1e-9);
        assert!(fkg_violation(&[0.5, 0.5], &opts()).unwrap() <= FKG_TOL);
        assert!(fkg_violation(&[0.3, 0.8], &opts()).unwrap() <= FKG_TOL);
        assert!(matches!(
            fkg_violation(&[0.5; 3], &opts()),
            Err(Error::CapExceeded { n: 3, relations: 19 })
        ));
    }

    #[test]
    fn cube_indices_complement_to_reversal() {
        let c = boolean_cube(2).unwrap();
        assert_eq!(c.relation_count(), 5);
        assert!(c.less(0, 3) && c.less(1, 3) && c.less(2, 3) && !c.comparable(1, 2));
        assert_eq!(boolean_cube(3).unwrap().relation_count(), 19);
    }

    #[test]
    fn balanced_disagreement_values() {
        assert_eq!(balanced_min_disagreement(1).unwrap(), 1.0);
        assert_eq!(balanced_min_disagreement(2).unwrap(), 0.5);
        assert!(balanced_min_disagreement(3).unwrap() > 0.0);
        assert!(matches!(balanced_min_disagreement(4), Err(Error::SizeTooLarge { .. })));
    }

    #[test]
    fn worst_instance_recomputes_its_violation() {
        let r = verify_sandwich(3, 6, &opts()).unwrap();
        let pmf = JointPmf::from_json(r.worst_instance.as_ref().unwrap()).unwrap();
        assert_eq!(sandwich_violation(&pmf, &opts()).unwrap(), r.max_violation);
    }

    #[test]
    fn unknown_suite_is_rejected() {
        let params = SuiteParams {
            seed: 0,
            trials: 1,
            n: 1,
            grid: vec![(1.0, 1.0)],
            options: opts(),
        };
        assert!(matches!(run_suite("nope", &params), Err(Error::InvalidConfig(_))));
        assert!(run_suite("fkg", &params).unwrap().pass);
    }
}
