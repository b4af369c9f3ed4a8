//! Cross-module checks: exact combinatorial predictions against the Monte
//! Carlo pipeline, and coherence against the representation-theoretic bounds.

use srip_core::dictionaries::{build_heisenberg_dict, build_oscillator_dict, coherence_report, Dictionary};
use srip_core::ffield::Prime;
use srip_core::paths::{
    enumerate_classes, exact_ew, fundamental_estimate_table, n_tau, predicted_moment, relation_check,
    trajectory_trend, AtomGram, NPolicy, PathClass,
};
use srip_core::spectra::moment_stats;

fn pr(p: u64) -> Prime {
    Prime::new(p).unwrap()
}

#[test]
fn oscillator_moments_match_path_expansion() {
    let d = build_oscillator_dict(pr(7)).unwrap();
    let g = AtomGram::new(&d);
    let mc = moment_stats(&d, 0.3, Some(4), 4, 4000, 7).unwrap();
    for row in &mc[1..] {
        let exact = predicted_moment(&g, 7, 4, row.k as usize).unwrap();
        assert!(exact.im.abs() < 1e-12);
        assert!(
            (row.mean - exact.re).abs() <= 3.5 * row.std_error,
            "k={}: exact {} mc {} +- {}",
            row.k,
            exact.re,
            row.mean,
            row.std_error
        );
    }
}

#[test]
fn single_basis_gram_is_identity_so_all_moments_vanish() {
    let d = Dictionary::single_basis(pr(11));
    let g = AtomGram::new(&d);
    for k in 2..=4 {
        assert_eq!(predicted_moment(&g, 11, 5, k).unwrap().norm(), 0.0);
    }
    let mc = moment_stats(&d, 0.3, Some(5), 4, 50, 1).unwrap();
    assert!(mc.iter().all(|r| r.mean == 0.0 && r.variance == 0.0));
}

#[test]
fn edge_class_trajectory_rises_to_one() {
    let c = PathClass::new(vec![1, 2, 1]).unwrap();
    let primes: Vec<Prime> = [5, 7, 11, 13].into_iter().map(pr).collect();
    let rows = fundamental_estimate_table(&[c], &primes, NPolicy::Epsilon(0.3), build_heisenberg_dict).unwrap();
    assert!(trajectory_trend(&rows));
    assert!((rows[0].n_tau_ew_re - 25.0 / 29.0).abs() < 1e-12);
}

#[test]
fn triangle_trajectory_falls_at_fixed_support() {
    let c = PathClass::new(vec![1, 2, 3, 1]).unwrap();
    let primes: Vec<Prime> = [5, 7, 11].into_iter().map(pr).collect();
    let fixed = fundamental_estimate_table(&[c.clone()], &primes, NPolicy::Fixed(5), build_heisenberg_dict).unwrap();
    assert!(trajectory_trend(&fixed));
    // with n = floor(p^0.7) the support jumps from 3 to 5 between p = 7 and 11
    let eps = fundamental_estimate_table(&[c], &primes, NPolicy::Epsilon(0.3), build_heisenberg_dict).unwrap();
    assert_eq!(eps.iter().map(|r| r.n).collect::<Vec<_>>(), vec![3, 3, 5]);
    assert!(!trajectory_trend(&eps));
}

#[test]
fn odd_classes_are_never_trees() {
    for k in [3, 5, 7, 9] {
        assert!(enumerate_classes(k).unwrap().iter().all(|c| !c.is_tree()));
    }
}

#[test]
fn relation_holds_exactly_on_oscillator_dictionary() {
    let d = build_oscillator_dict(pr(5)).unwrap();
    let g = AtomGram::new(&d);
    for (c, v) in [(vec![1, 2, 3, 2, 1], 3), (vec![1, 2, 3, 1], 2), (vec![1, 2, 1, 3, 1], 2)] {
        let pc = PathClass::new(c).unwrap();
        let r = relation_check(&pc, v, &d, &g).unwrap();
        assert!((r.exact - r.ew).norm() < 1e-13, "{pc}: {:?}", r);
    }
}

#[test]
fn class_normalizations_agree_asymptotically() {
    // for fixed |V|, n(n-1)...(n-|V|+1)/n^|V| -> 1
    let c = PathClass::new(vec![1, 2, 3, 1]).unwrap();
    let t = n_tau(&c, 1000, 101);
    assert!((t.exact / t.asymptotic - 1.0).abs() < 0.005);
}

#[test]
fn heisenberg_coherence_histogram_is_a_spike() {
    let r = coherence_report(&build_heisenberg_dict(pr(13)).unwrap());
    // every pair sits at mu = 1 up to rounding: top bin or overflow
    for b in r.histogram.iter().filter(|b| b.count > 0) {
        assert!(b.hi >= 1.0 - 1e-9 && b.lo <= 1.0 + 1e-9, "{b:?}");
    }
    let g = AtomGram::new(&build_heisenberg_dict(pr(5)).unwrap());
    assert!(exact_ew(&[1, 2, 1], &g).unwrap().re > 0.0);
}
