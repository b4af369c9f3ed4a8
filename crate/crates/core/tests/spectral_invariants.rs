//! Trend invariants of the Monte Carlo engine on the Heisenberg dictionary
//! ladder p = 31, 61, 101 (eps = 0.3, 200 trials, seed 42).

use std::sync::OnceLock;

use srip_core::dictionaries::{build_heisenberg_dict, Dictionary};
use srip_core::ffield::Prime;
use srip_core::paths::{n_tau, triangle_ew, PathClass};
use srip_core::spectra::{moment_stats, support_size, MomentRow};

fn dict(p: u64) -> &'static Dictionary {
    static D: [OnceLock<Dictionary>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let slot = match p {
        31 => &D[0],
        61 => &D[1],
        101 => &D[2],
        _ => unreachable!(),
    };
    slot.get_or_init(|| build_heisenberg_dict(Prime::new(p).unwrap()).unwrap())
}

fn moments(p: u64) -> Vec<MomentRow> {
    moment_stats(dict(p), 0.3, None, 6, 200, 42).unwrap()
}

#[test]
fn variance_times_n_stays_bounded() {
    let lo = moments(31);
    let hi = moments(101);
    let (n_lo, n_hi) = (support_size(31, 0.3) as f64, support_size(101, 0.3) as f64);
    for k in 1..=6 {
        let a = lo[k - 1].variance * n_lo;
        let b = hi[k - 1].variance * n_hi;
        // m_1 is identically zero up to rounding
        if k == 1 {
            assert!(a < 1e-20 && b < 1e-20);
            continue;
        }
        assert!(b <= 3.0 * a, "k={k}: Var*n {a} at p=31, {b} at p=101");
    }
}

#[test]
fn even_moments_approach_catalan() {
    let m = moments(101);
    assert!((m[1].mean - 1.0).abs() <= 0.10);
    assert!((m[3].mean - 2.0).abs() <= 0.30);
}

/// The odd-moment invariant as literally stated. On D_H the exact third
/// moment at n = floor(p^0.7) is 0.4036 at p = 31 and 0.4267 at p = 101
/// (see `third_moment_tracks_exact_prediction`), so this cannot hold.
#[test]
#[ignore = "|E m_3| on D_H rises from p=31 to p=101 at eps=0.3; the Monte Carlo faithfully follows it"]
fn third_moment_shrinks_from_31_to_101() {
    let a = moments(31)[2].mean.abs();
    let b = moments(101)[2].mean.abs();
    assert!(b < a, "|m3| p=31 {a}, p=101 {b}");
}

#[test]
fn third_moment_tracks_exact_prediction() {
    for p in [31u64, 101] {
        let n = support_size(p, 0.3);
        // the 3-cycle is the only class of length 3
        let tri = PathClass::new(vec![1, 2, 3, 1]).unwrap();
        let exact = n_tau(&tri, n, p).exact * triangle_ew(dict(p));
        let row = &moments(p)[2];
        assert!(
            (row.mean - exact).abs() <= 4.0 * row.std_error,
            "p={p}: exact {exact}, mc {} +- {}",
            row.mean,
            row.std_error
        );
    }
}

#[test]
fn third_moment_exact_values() {
    let tri = PathClass::new(vec![1, 2, 3, 1]).unwrap();
    let e = |p: u64| n_tau(&tri, support_size(p, 0.3), p).exact * triangle_ew(dict(p));
    assert!((e(31) - 0.4036).abs() < 5e-4);
    assert!((e(101) - 0.4267).abs() < 5e-4);
}
