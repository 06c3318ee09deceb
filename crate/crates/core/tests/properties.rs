use cmc_core::classic::{kendall_tau_b, pearson, spearman};
use cmc_core::dist::{pair_stats, product_pmf};
use cmc_core::engine::{cmc_exact, cmc_plus, CmcOptions};
use cmc_core::maxcorr::{maximal_correlation, witsenhausen_matrix, witsenhausen_svd};
use cmc_core::oracle::{grid_oracle, pava_isotonic, OracleConfig};
use cmc_core::order::{achievable_partitions, is_monotone, BlockPartition};
use cmc_core::{JointPmf, OrderKind, Poset};
use proptest::prelude::*;

fn pmf_strategy(max_side: usize, allow_zeros: bool) -> impl Strategy<Value = JointPmf> {
    (2..=max_side, 2..=max_side).prop_flat_map(move |(m, n)| {
        let cell = if allow_zeros {
            prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0].boxed()
        } else {
            (0.01f64..1.0).boxed()
        };
        prop::collection::vec(cell, m * n).prop_filter_map("empty marginal", move |cells| {
            let total: f64 = cells.iter().sum();
            let rows: Vec<Vec<f64>> = cells.chunks(n).map(|r| r.iter().map(|c| c / total).collect()).collect();
            let pmf = JointPmf::from_rows(rows).ok()?;
            let alive = |v: Vec<f64>| v.iter().filter(|&&p| p > 0.0).count() >= 2;
            (alive(pmf.marginal_x()) && alive(pmf.marginal_y())).then_some(pmf)
        })
    })
}

fn indexed(pmf: JointPmf) -> JointPmf {
    let xv = (0..pmf.rows()).map(|i| i as f64).collect();
    let yv = (0..pmf.cols()).map(|i| i as f64).collect();
    pmf.with_values(Some(xv), Some(yv)).unwrap()
}

fn totals(pmf: &JointPmf) -> (Poset, Poset) {
    (
        Poset::total(pmf.x_labels().to_vec()).unwrap(),
        Poset::total(pmf.y_labels().to_vec()).unwrap(),
    )
}

/// Random DAG on `n` nodes given as forward edges.
fn poset_strategy(max: usize) -> impl Strategy<Value = Poset> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec(any::<bool>(), n * n).prop_map(move |bits| {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| bits[i * n + j])
                .collect();
            let labels = (0..n).map(|i| format!("v{i}")).collect();
            Poset::from_pairs(labels, &pairs, OrderKind::Explicit).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_transitive_and_irreflexive(p in poset_strategy(6)) {
        let n = p.size();
        for a in 0..n {
            prop_assert!(!p.less(a, a));
            for b in 0..n {
                for c in 0..n {
                    if p.less(a, b) && p.less(b, c) {
                        prop_assert!(p.less(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn reverse_is_an_involution(p in poset_strategy(6)) {
        let twice = p.reverse().reverse();
        prop_assert_eq!(twice.strict_pairs(), p.strict_pairs());
        prop_assert_eq!(p.reverse().relation_count(), p.relation_count());
    }

    #[test]
    fn product_relation_count(a in poset_strategy(3), b in poset_strategy(3)) {
        // (i,k) <= (j,l) componentwise, minus the diagonal
        let weak = |p: &Poset| p.size() + p.relation_count();
        prop_assert_eq!(a.product(&b).relation_count(), weak(&a) * weak(&b) - a.size() * b.size());
    }

    #[test]
    fn linear_extension_respects_order(p in poset_strategy(6)) {
        let ext = p.linear_extension();
        let pos: Vec<usize> = (0..p.size()).map(|i| ext.iter().position(|&e| e == i).unwrap()).collect();
        for &(i, j) in p.strict_pairs() {
            prop_assert!(pos[i] < pos[j]);
        }
    }

    #[test]
    fn achievable_partitions_have_connected_monotone_blocks(p in poset_strategy(5)) {
        let parts = achievable_partitions(&p);
        prop_assert!(parts.contains(&BlockPartition::singletons(p.size())));
        let mut sorted = parts.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), parts.len());
        for part in &parts {
            for block in part.blocks() {
                // merged blocks are connected through comparable pairs
                let mut reached = vec![block[0]];
                let mut k = 0;
                while k < reached.len() {
                    let a = reached[k];
                    for &b in block {
                        if !reached.contains(&b) && p.comparable(a, b) {
                            reached.push(b);
                        }
                    }
                    k += 1;
                }
                prop_assert_eq!(reached.len(), block.len());
            }
        }
    }

    #[test]
    fn marginals_and_transpose(pmf in pmf_strategy(5, true)) {
        prop_assert!((pmf.marginal_x().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((pmf.marginal_y().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(pmf.transpose().transpose(), pmf.clone());
        prop_assert!(pmf.independent_part().tv_to_independence() < 1e-12);
        let tv = pmf.tv_to_independence();
        prop_assert!((0.0..=1.0).contains(&tv));
    }

    #[test]
    fn product_pmf_has_product_marginals(a in pmf_strategy(3, true), b in pmf_strategy(3, true)) {
        let p = product_pmf(&a, &b);
        let (ax, bx) = (a.marginal_x(), b.marginal_x());
        for (k, m) in p.marginal_x().iter().enumerate() {
            prop_assert!((m - ax[k / b.rows()] * bx[k % b.rows()]).abs() < 1e-12);
        }
    }

    #[test]
    fn classical_measures_are_bounded_and_symmetric(pmf in pmf_strategy(4, false)) {
        let pmf = indexed(pmf);
        let (px, py) = totals(&pmf);
        let t = pmf.transpose();
        for (v, w) in [
            (pearson(&pmf).unwrap(), pearson(&t).unwrap()),
            (spearman(&pmf, &px, &py).unwrap(), spearman(&t, &py, &px).unwrap()),
            (kendall_tau_b(&pmf, &px, &py).unwrap(), kendall_tau_b(&t, &py, &px).unwrap()),
        ] {
            prop_assert!(v.abs() <= 1.0 + 1e-12);
            prop_assert!((v - w).abs() < 1e-12);
        }
    }

    #[test]
    fn witsenhausen_top_triple(pmf in pmf_strategy(5, false)) {
        let svd = witsenhausen_svd(&pmf).unwrap();
        prop_assert!((svd.singular_values[0] - 1.0).abs() < 1e-12);
        prop_assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        let m = witsenhausen_matrix(&pmf).unwrap();
        prop_assert!(svd.check_contract(&m).is_ok());
        let rho = maximal_correlation(&pmf).unwrap().value;
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&rho));
    }

    #[test]
    fn cmc_witness_certifies_value(pmf in pmf_strategy(4, true)) {
        let (px, py) = totals(&pmf);
        let r = cmc_exact(&pmf, &px, &py, &CmcOptions::default()).unwrap();
        let w = r.witness.clone().unwrap();
        prop_assert!(is_monotone(&w.f, &px, 1e-9).unwrap());
        prop_assert!(is_monotone(&w.g, &py, 1e-9).unwrap());
        let stats = pair_stats(&pmf, &w).unwrap();
        prop_assert!(stats.mean_f.abs() < 1e-9 && stats.mean_g.abs() < 1e-9);
        prop_assert!((stats.var_f - 1.0).abs() < 1e-9 && (stats.var_g - 1.0).abs() < 1e-9);
        prop_assert!((stats.cov - r.value).abs() < 1e-9);
    }

    #[test]
    fn cmc_sandwich_and_symmetries(pmf in pmf_strategy(4, false)) {
        let pmf = indexed(pmf);
        let (px, py) = totals(&pmf);
        let opts = CmcOptions::default();
        let c = cmc_exact(&pmf, &px, &py, &opts).unwrap().value;
        prop_assert!(pearson(&pmf).unwrap() <= c + 1e-9);
        prop_assert!(c <= maximal_correlation(&pmf).unwrap().value + 1e-9);
        let ct = cmc_exact(&pmf.transpose(), &py, &px, &opts).unwrap().value;
        prop_assert!((c - ct).abs() < 1e-9);
        let both = cmc_exact(&pmf, &px.reverse(), &py.reverse(), &opts).unwrap().value;
        prop_assert!((c - both).abs() < 1e-9);
        prop_assert!(cmc_plus(&pmf, &px, &py, &opts).unwrap() >= 0.0);
    }

    #[test]
    fn parallel_and_sequential_agree(pmf in pmf_strategy(4, true)) {
        let (px, py) = totals(&pmf);
        let a = cmc_exact(&pmf, &px, &py, &CmcOptions::default()).unwrap();
        let b = cmc_exact(&pmf, &px, &py, &CmcOptions::sequential()).unwrap();
        prop_assert_eq!(a.value, b.value);
        prop_assert_eq!(a.witness, b.witness);
    }

    #[test]
    fn pava_is_monotone_and_mean_preserving(
        data in prop::collection::vec((-5.0f64..5.0, 0.01f64..3.0), 1..12)
    ) {
        let (t, w): (Vec<f64>, Vec<f64>) = data.into_iter().unzip();
        let fit = pava_isotonic(&t, &w).unwrap();
        prop_assert!(fit.windows(2).all(|p| p[0] <= p[1] + 1e-12));
        let mean = |v: &[f64]| v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!((mean(&fit) - mean(&t)).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn oracle_never_exceeds_exact(pmf in pmf_strategy(3, true)) {
        let (px, py) = totals(&pmf);
        let exact = cmc_exact(&pmf, &px, &py, &CmcOptions::default()).unwrap().value;
        let oracle = grid_oracle(&pmf, &px, &py, &OracleConfig::new(0.1, 20)).unwrap();
        prop_assert!(oracle.value <= exact + 1e-9);
        prop_assert!(is_monotone(&oracle.witness.f, &px, 1e-9).unwrap());
        prop_assert!(is_monotone(&oracle.witness.g, &py, 1e-9).unwrap());
    }
}
