//! Monte Carlo over random supports: Gram matrices, the normalized error
//! `E = √(p/n)(G − I)`, tail frequencies of `‖G − I‖`, spectral moments and
//! comparison with the semicircle law.
//!
//! Trial `t` of a campaign with seed `s` draws its support from
//! `ChaCha8Rng::seed_from_u64(s + t)`, so results do not depend on how trials
//! are scheduled across threads.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionaries::{DictKind, Dictionary};
use crate::error::{Error, Result};
use crate::linalg::{gram, hermitian_eigenvalues, CMatrix};

/// An injective, ordered choice of `n` atom indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Support {
    indices: Vec<usize>,
}

impl Support {
    /// Checks injectivity and the range `0..size`.
    pub fn new(indices: Vec<usize>, size: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter("support must be nonempty".into()));
        }
        if indices.len() > size {
            return Err(Error::NTooLarge {
                n: indices.len(),
                size,
            });
        }
        let mut seen = vec![false; size];
        for &i in &indices {
            if i >= size || seen[i] {
                return Err(Error::InvalidParameter(format!("support index {i} is repeated or out of range")));
            }
            seen[i] = true;
        }
        Ok(Support { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// First `n` entries of a Fisher-Yates shuffle of `0..size`. Untouched slots
/// are implicit, so the cost is `O(n)` regardless of `size`.
pub fn partial_shuffle(rng: &mut impl Rng, size: usize, n: usize) -> Result<Vec<usize>> {
    if n > size {
        return Err(Error::NTooLarge { n, size });
    }
    let mut moved: HashMap<usize, usize> = HashMap::with_capacity(2 * n);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let j = rng.random_range(i..size);
        let at_j = *moved.get(&j).unwrap_or(&j);
        let at_i = *moved.get(&i).unwrap_or(&i);
        moved.insert(j, at_i);
        out.push(at_j);
    }
    Ok(out)
}

/// A uniformly random support of size `n` drawn from `ChaCha8Rng(seed)`.
pub fn sample_support(dict: &Dictionary, n: usize, seed: u64) -> Result<Support> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_support_with(dict, n, &mut rng)
}

pub fn sample_support_with(dict: &Dictionary, n: usize, rng: &mut impl Rng) -> Result<Support> {
    if n == 0 {
        return Err(Error::InvalidParameter("support size must be at least 1".into()));
    }
    let indices = partial_shuffle(rng, dict.atom_count(), n)?;
    Ok(Support { indices })
}

/// Gram matrix of a support together with its normalized error and spectrum.
#[derive(Debug, Clone)]
pub struct GramSample {
    pub support: Support,
    pub g: CMatrix,
    pub e: CMatrix,
    /// Eigenvalues of `E`, ascending.
    pub eigenvalues_e: Vec<f64>,
    /// `√(n/p)`, so that `λ(G) = 1 + scale·λ(E)`.
    pub scale: f64,
}

impl GramSample {
    /// `‖G − I‖ = √(n/p)·max|λ(E)|`.
    pub fn op_norm_deviation(&self) -> f64 {
        self.scale * self.eigenvalues_e.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    /// Eigenvalues of `G`, ascending.
    pub fn eigenvalues_g(&self) -> Vec<f64> {
        self.eigenvalues_e.iter().map(|x| 1.0 + self.scale * x).collect()
    }

    /// `m_k = (1/n)Σ λ(E)^k`.
    pub fn moment(&self, k: u32) -> f64 {
        moment_of(&self.eigenvalues_e, k)
    }
}

fn moment_of(eigs: &[f64], k: u32) -> f64 {
    eigs.iter().map(|x| x.powi(k as i32)).sum::<f64>() / eigs.len() as f64
}

pub fn gram_sample(dict: &Dictionary, support: &Support) -> Result<GramSample> {
    let size = dict.atom_count();
    if let Some(&bad) = support.indices().iter().find(|&&i| i >= size) {
        return Err(Error::InvalidParameter(format!("atom index {bad} out of range 0..{size}")));
    }
    let atoms: Vec<_> = support.indices().iter().map(|&i| dict.atom(i)).collect();
    let g = gram(&atoms)?;
    let n = support.len();
    let p = dict.p().get() as f64;
    let inv_scale = (p / n as f64).sqrt();
    let e = CMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        (g[(i, j)] - delta) * inv_scale
    });
    let mut eigenvalues_e = hermitian_eigenvalues(&e)?;
    eigenvalues_e.reverse();
    Ok(GramSample {
        support: support.clone(),
        g,
        e,
        eigenvalues_e,
        scale: (n as f64 / p).sqrt(),
    })
}

/// `sup |‖Θ(f)‖ − ‖f‖|` over unit `f` supported on `S`:
/// `max(√λ_max − 1, 1 − √λ_min)` with `λ` the eigenvalues of `G`.
pub fn rip_deviation(sample: &GramSample) -> f64 {
    let lg = sample.eigenvalues_g();
    let lo = lg.first().copied().unwrap_or(1.0).max(0.0);
    let hi = lg.last().copied().unwrap_or(1.0).max(0.0);
    (hi.sqrt() - 1.0).max(1.0 - lo.sqrt()).max(0.0)
}

/// `floor(p^{1−ε})`, guarded against the float landing just below an integer.
pub fn support_size(p: u64, epsilon: f64) -> usize {
    let x = (p as f64).powf(1.0 - epsilon);
    (x + 1e-9).floor() as usize
}

/// Per-trial outcome of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    /// Eigenvalues of `E`, ascending.
    pub eigenvalues_e: Vec<f64>,
    /// `‖G − I‖`.
    pub op_norm: f64,
}

/// Runs `trials` independent Gram samples with supports of size `n`.
pub fn run_trials(dict: &Dictionary, n: usize, trials: u64, seed: u64) -> Result<Vec<TrialOutcome>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if n > dict.atom_count() {
        return Err(Error::NTooLarge {
            n,
            size: dict.atom_count(),
        });
    }
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = sample_support(dict, n, seed.wrapping_add(t))?;
            let g = gram_sample(dict, &s)?;
            Ok(TrialOutcome {
                trial: t,
                op_norm: g.op_norm_deviation(),
                eigenvalues_e: g.eigenvalues_e,
            })
        })
        .collect()
}

/// How a tail threshold was derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdKind {
    /// `p^{−ε/2}`.
    PowerEpsilon,
    /// `(n/p)^{1/(2+e)}`.
    SupportRatio { e: f64 },
    /// A caller-supplied value.
    Fixed,
}

impl ThresholdKind {
    pub fn name(&self) -> String {
        match self {
            ThresholdKind::PowerEpsilon => "p^(-eps/2)".into(),
            ThresholdKind::SupportRatio { e } => format!("(n/p)^(1/(2+{e}))"),
            ThresholdKind::Fixed => "fixed".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub threshold_kind: ThresholdKind,
    pub threshold: f64,
    /// Trials with `‖G − I‖ ≥ threshold`.
    pub exceed: u64,
    pub frequency: f64,
}

/// Thresholds for a tail campaign: always `p^{−ε/2}`, then one
/// `(n/p)^{1/(2+e)}` per exponent, then fixed values.
pub fn thresholds(p: u64, n: usize, epsilon: f64, exponents: &[f64], fixed: &[f64]) -> Vec<(ThresholdKind, f64)> {
    let pf = p as f64;
    let mut out = vec![(ThresholdKind::PowerEpsilon, pf.powf(-epsilon / 2.0))];
    for &e in exponents {
        out.push((ThresholdKind::SupportRatio { e }, (n as f64 / pf).powf(1.0 / (2.0 + e))));
    }
    out.extend(fixed.iter().map(|&t| (ThresholdKind::Fixed, t)));
    out
}

pub fn tail_frequencies(outcomes: &[TrialOutcome], thresholds: &[(ThresholdKind, f64)]) -> Vec<TailRow> {
    thresholds
        .iter()
        .map(|&(kind, t)| {
            let exceed = outcomes.iter().filter(|o| o.op_norm >= t).count() as u64;
            TailRow {
                threshold_kind: kind,
                threshold: t,
                exceed,
                frequency: exceed as f64 / outcomes.len() as f64,
            }
        })
        .collect()
}

/// Tail frequencies of `‖G(S) − I‖` with `n = floor(p^{1−ε})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SripResult {
    pub p: u64,
    pub n: usize,
    pub epsilon: f64,
    pub trials: u64,
    pub seed: u64,
    pub rows: Vec<TailRow>,
}

pub fn srip_probability(
    dict: &Dictionary,
    epsilon: f64,
    exponents: &[f64],
    fixed: &[f64],
    trials: u64,
    seed: u64,
) -> Result<SripResult> {
    let p = dict.p().get();
    let n = checked_support_size(dict, epsilon)?;
    let outcomes = run_trials(dict, n, trials, seed)?;
    Ok(SripResult {
        p,
        n,
        epsilon,
        trials,
        seed,
        rows: tail_frequencies(&outcomes, &thresholds(p, n, epsilon, exponents, fixed)),
    })
}

fn checked_support_size(dict: &Dictionary, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must lie in (0, 1)")));
    }
    let n = support_size(dict.p().get(), epsilon);
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "support size floor(p^(1-eps)) = {n} is below 2"
        )));
    }
    if n > dict.atom_count() {
        return Err(Error::NTooLarge {
            n,
            size: dict.atom_count(),
        });
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub k: u32,
    pub mean: f64,
    /// Unbiased sample variance (0 for a single trial).
    pub variance: f64,
    /// `√(variance / trials)`.
    pub std_error: f64,
    pub semicircle: f64,
}

/// Mean and variance of `m_k` for `k = 1..=kmax`.
pub fn moment_rows(outcomes: &[TrialOutcome], kmax: u32) -> Result<Vec<MomentRow>> {
    if kmax == 0 {
        return Err(Error::InvalidParameter("kmax must be at least 1".into()));
    }
    let t = outcomes.len() as f64;
    (1..=kmax)
        .map(|k| {
            let xs: Vec<f64> = outcomes.iter().map(|o| moment_of(&o.eigenvalues_e, k)).collect();
            let mean = xs.iter().sum::<f64>() / t;
            let variance = if xs.len() > 1 {
                xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0)
            } else {
                0.0
            };
            Ok(MomentRow {
                k,
                mean,
                variance,
                std_error: (variance / t).sqrt(),
                semicircle: semicircle_moment(k)?,
            })
        })
        .collect()
}

/// Moment statistics over `trials` supports. `n` defaults to `floor(p^{1−ε})`.
pub fn moment_stats(
    dict: &Dictionary,
    epsilon: f64,
    n: Option<usize>,
    kmax: u32,
    trials: u64,
    seed: u64,
) -> Result<Vec<MomentRow>> {
    let n = match n {
        Some(n) => n,
        None => checked_support_size(dict, epsilon)?,
    };
    moment_rows(&run_trials(dict, n, trials, seed)?, kmax)
}

/// `κ_m = binom(2m, m)/(m + 1)`, exact.
pub fn catalan(m: u32) -> Result<u64> {
    // κ_{i+1} = κ_i·2(2i+1)/(i+2); the division is exact
    let overflow = || Error::Overflow(format!("catalan({m})"));
    let mut c: u128 = 1;
    for i in 0..m as u128 {
        c = c.checked_mul(2 * (2 * i + 1)).ok_or_else(overflow)? / (i + 2);
        if c > u64::MAX as u128 {
            return Err(overflow());
        }
    }
    Ok(c as u64)
}

/// `k`-th moment of the semicircle law: `κ_{k/2}` for even `k`, 0 for odd.
pub fn semicircle_moment(k: u32) -> Result<f64> {
    if k % 2 == 1 {
        Ok(0.0)
    } else {
        Ok(catalan(k / 2)? as f64)
    }
}

/// `(2π)⁻¹√(4 − x²)` on `[−2, 2]`, zero outside.
pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        (x * (4.0 - x * x).sqrt() / 4.0 + (x / 2.0).asin()) / PI + 0.5
    }
}

/// Inverse of [`semicircle_cdf`] by bisection, `u ∈ [0, 1]`.
pub fn semicircle_quantile(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    let (mut lo, mut hi) = (-2.0_f64, 2.0_f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if semicircle_cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Two-sided Kolmogorov-Smirnov distance between the empirical law of
/// `sample` and the semicircle.
pub fn ks_statistic(sample: &[f64]) -> f64 {
    if sample.is_empty() {
        return 0.0;
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = semicircle_cdf(x);
        d.max((i + 1) as f64 / n - f).max(f - i as f64 / n)
    })
}

/// Histogram of pooled eigenvalues on `[lo, hi)`, with out-of-range counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl Histogram {
    pub fn build(values: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let mut counts = vec![0; bins];
        let (mut below, mut above) = (0, 0);
        let width = (hi - lo) / bins as f64;
        for &v in values {
            if v < lo {
                below += 1;
            } else if v >= hi {
                above += 1;
            } else {
                counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
            }
        }
        Histogram {
            lo,
            hi,
            counts,
            below,
            above,
        }
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let w = (self.hi - self.lo) / self.counts.len() as f64;
        (self.lo + i as f64 * w, self.lo + (i + 1) as f64 * w)
    }
}

/// Parameters of a spectral campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub epsilon: f64,
    /// Overrides `floor(p^{1−ε})` when set.
    pub n: Option<usize>,
    pub kmax: u32,
    pub trials: u64,
    pub seed: u64,
    /// Exponents `e` for the `(n/p)^{1/(2+e)}` thresholds.
    pub ratio_exponents: Vec<f64>,
    pub fixed_thresholds: Vec<f64>,
    pub histogram_bins: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            epsilon: 0.3,
            n: None,
            kmax: 6,
            trials: 200,
            seed: 42,
            ratio_exponents: vec![1.0],
            fixed_thresholds: Vec::new(),
            histogram_bins: 48,
        }
    }
}

/// Everything measured by one campaign; serializes to the JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub version: String,
    pub kind: DictKind,
    pub p: u64,
    pub n: usize,
    pub epsilon: f64,
    pub trials: u64,
    pub seed: u64,
    pub srip: Vec<TailRow>,
    pub moments: Vec<MomentRow>,
    /// Pooled eigenvalues of `E` on `[−3, 3)`.
    pub histogram: Histogram,
    pub ks_pooled: f64,
    pub ks_per_trial_mean: f64,
    pub ks_per_trial_max: f64,
}

/// Runs a campaign and keeps the per-trial outcomes for CSV export.
pub fn spectral_campaign(dict: &Dictionary, cfg: &SpectralConfig) -> Result<(SpectralReport, Vec<TrialOutcome>)> {
    let p = dict.p().get();
    let n = match cfg.n {
        Some(n) => n,
        None => checked_support_size(dict, cfg.epsilon)?,
    };
    if cfg.histogram_bins == 0 {
        return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
    }
    let outcomes = run_trials(dict, n, cfg.trials, cfg.seed)?;
    let pooled: Vec<f64> = outcomes.iter().flat_map(|o| o.eigenvalues_e.iter().copied()).collect();
    let per_trial: Vec<f64> = outcomes.iter().map(|o| ks_statistic(&o.eigenvalues_e)).collect();
    let report = SpectralReport {
        version: crate::VERSION.to_string(),
        kind: dict.kind(),
        p,
        n,
        epsilon: cfg.epsilon,
        trials: cfg.trials,
        seed: cfg.seed,
        srip: tail_frequencies(
            &outcomes,
            &thresholds(p, n, cfg.epsilon, &cfg.ratio_exponents, &cfg.fixed_thresholds),
        ),
        moments: moment_rows(&outcomes, cfg.kmax)?,
        histogram: Histogram::build(&pooled, -3.0, 3.0, cfg.histogram_bins),
        ks_pooled: ks_statistic(&pooled),
        ks_per_trial_mean: per_trial.iter().sum::<f64>() / per_trial.len() as f64,
        ks_per_trial_max: per_trial.iter().copied().fold(0.0, f64::max),
    };
    Ok((report, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionaries::build_heisenberg_dict;
    use crate::ffield::Prime;
    use crate::linalg::op_norm;
    use num_complex::Complex64;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};

    fn dh(p: u64) -> Dictionary {
        build_heisenberg_dict(Prime::new(p).unwrap()).unwrap()
    }

    #[test]
    fn catalan_values() {
        let want = [1u64, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796];
        for (m, &c) in want.iter().enumerate() {
            assert_eq!(catalan(m as u32).unwrap(), c);
        }
        for m in 0..10u32 {
            let rec: u64 = (0..=m).map(|i| catalan(i).unwrap() * catalan(m - i).unwrap()).sum();
            assert_eq!(catalan(m + 1).unwrap(), rec);
        }
        assert!(catalan(35).is_ok());
        assert!(matches!(catalan(40), Err(Error::Overflow(_))));
    }

    #[test]
    fn semicircle_basics() {
        assert_eq!(semicircle_moment(3).unwrap(), 0.0);
        assert_eq!(semicircle_moment(4).unwrap(), 2.0);
        assert_eq!(semicircle_cdf(-2.0), 0.0);
        assert_eq!(semicircle_cdf(2.0), 1.0);
        assert!((semicircle_cdf(0.0) - 0.5).abs() < 1e-15);
        // density integrates to the cdf
        let h = 1e-4;
        let mut acc = 0.0;
        let mut x = -2.0;
        while x < 1.0 - 1e-12 {
            acc += h * semicircle_density(x + h / 2.0);
            x += h;
        }
        assert!((acc - semicircle_cdf(1.0)).abs() < 1e-6);
        for u in [0.01, 0.3, 0.5, 0.77, 0.999] {
            assert!((semicircle_cdf(semicircle_quantile(u)) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn ks_self_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..100_000).map(|_| semicircle_quantile(rng.random())).collect();
        assert!(ks_statistic(&xs) <= 0.01);
        // a point mass at 0 sits 1/2 away
        assert!((ks_statistic(&[0.0; 10]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn support_sampling() {
        let d = dh(5);
        let s = sample_support(&d, 30, 1).unwrap();
        let mut v = s.indices().to_vec();
        v.sort();
        assert_eq!(v, (0..30).collect::<Vec<_>>());
        assert_eq!(sample_support(&d, 6, 77).unwrap(), sample_support(&d, 6, 77).unwrap());
        assert_eq!(sample_support(&d, 31, 1), Err(Error::NTooLarge { n: 31, size: 30 }));
        assert!(Support::new(vec![1, 1], 30).is_err());
        assert!(Support::new(vec![1, 30], 30).is_err());
    }

    #[test]
    fn support_inclusion_is_uniform() {
        let d = dh(5);
        let draws = 100_000u64;
        let mut counts = [0u64; 30];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..draws {
            for &i in sample_support_with(&d, 6, &mut rng).unwrap().indices() {
                counts[i] += 1;
            }
        }
        let q = 6.0 / 30.0;
        let mean = draws as f64 * q;
        let sd = (draws as f64 * q * (1.0 - q)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() <= 3.0 * sd, "{c} vs {mean}");
        }
    }

    #[test]
    fn gram_sample_trivial_cases() {
        let d = dh(7);
        // atoms 0..7 form one basis
        let s = Support::new(vec![3, 0, 5], d.atom_count()).unwrap();
        let g = gram_sample(&d, &s).unwrap();
        assert!(g.g.max_abs_diff(&CMatrix::identity(3)) < 1e-12);
        assert!(g.eigenvalues_e.iter().all(|x| x.abs() < 1e-10));
        let one = gram_sample(&d, &Support::new(vec![9], d.atom_count()).unwrap()).unwrap();
        assert!((one.g[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(one.e[(0, 0)].norm() < 1e-10);
    }

    #[test]
    fn per_trial_identities() {
        let d = dh(11);
        for seed in 0..20 {
            let s = sample_support(&d, 7, seed).unwrap();
            let g = gram_sample(&d, &s).unwrap();
            assert!(g.eigenvalues_e.iter().sum::<f64>().abs() < 1e-8);
            assert!(g.e.trace().norm() < 1e-8);
            assert!(g.e.hermitian_deviation() == 0.0);
            for i in 0..7 {
                assert!((g.g[(i, i)].re - 1.0).abs() < 1e-9);
            }
            let direct = op_norm(&(&g.g - &CMatrix::identity(7))).unwrap();
            assert!((direct - g.op_norm_deviation()).abs() < 1e-10);
            let r = rip_deviation(&g);
            let o = g.op_norm_deviation();
            assert!(r <= o + 1e-9 && o <= 2.0 * r + r * r + 1e-9);
        }
    }

    #[test]
    fn rip_deviation_examples() {
        let mk = |eigs: Vec<f64>| GramSample {
            support: Support { indices: vec![0, 1] },
            g: CMatrix::identity(2),
            e: CMatrix::zeros(2, 2),
            eigenvalues_e: eigs,
            scale: 1.0,
        };
        assert_eq!(rip_deviation(&mk(vec![0.0, 0.0])), 0.0);
        // eigenvalues of G are {1, 4}
        assert!((rip_deviation(&mk(vec![0.0, 3.0])) - 1.0).abs() < 1e-15);
        // λ_min < 0 clamps to 0
        assert!((rip_deviation(&mk(vec![-1.5, 0.0])) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rip_deviation_matches_random_search() {
        let d = dh(11);
        let s = sample_support(&d, 8, 3).unwrap();
        let g = gram_sample(&d, &s).unwrap();
        let atoms: Vec<_> = s.indices().iter().map(|&i| d.atom(i)).collect();
        let deviation = |f: &[Complex64]| {
            let mut x = vec![Complex64::new(0.0, 0.0); 11];
            for (c, a) in f.iter().zip(&atoms) {
                for (o, v) in x.iter_mut().zip(a.iter()) {
                    *o += c * v;
                }
            }
            (crate::linalg::norm(&x) - 1.0).abs()
        };
        // random search: proposals around the incumbent with a shrinking step
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut cur = vec![Complex64::new(1.0, 0.0); 8];
        let mut best = 0.0;
        for it in 0..10_000 {
            let step = 2.0 * (1.0 - it as f64 / 10_000.0) + 1e-3;
            let mut f: Vec<Complex64> = cur
                .iter()
                .map(|c| c + step * Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let nf = crate::linalg::norm(&f);
            f.iter_mut().for_each(|x| *x /= nf);
            let v = deviation(&f);
            if v > best {
                best = v;
                cur = f;
            }
        }
        let exact = rip_deviation(&g);
        assert!(best <= exact + 1e-12);
        assert!(best >= 0.98 * exact, "search {best} exact {exact}");
    }

    #[test]
    fn single_basis_control_has_zero_tail() {
        let d = Dictionary::single_basis(Prime::new(31).unwrap());
        let r = srip_probability(&d, 0.3, &[1.0], &[1e-6], 50, 42).unwrap();
        assert!(r.rows.iter().all(|row| row.frequency == 0.0));
    }

    #[test]
    fn tail_is_monotone_in_threshold() {
        let d = dh(13);
        let fixed: Vec<f64> = (1..20).map(|i| i as f64 * 0.1).collect();
        let r = srip_probability(&d, 0.3, &[], &fixed, 100, 2).unwrap();
        let f: Vec<f64> = r.rows[1..].iter().map(|x| x.frequency).collect();
        assert!(f.windows(2).all(|w| w[0] >= w[1]));
        assert!(r.rows.iter().all(|x| (0.0..=1.0).contains(&x.frequency)));
    }

    #[test]
    fn parameter_errors() {
        let d = dh(5);
        assert!(srip_probability(&d, 0.3, &[], &[], 0, 1).is_err());
        // floor(5^0.05) = 1
        assert!(srip_probability(&d, 0.95, &[], &[], 5, 1).is_err());
        assert!(moment_stats(&d, 0.3, Some(3), 0, 5, 1).is_err());
        assert_eq!(
            run_trials(&d, 40, 3, 0).unwrap_err(),
            Error::NTooLarge { n: 40, size: 30 }
        );
    }

    #[test]
    fn first_moment_vanishes() {
        let d = dh(11);
        let rows = moment_stats(&d, 0.3, Some(5), 4, 200, 9).unwrap();
        assert!(rows[0].mean.abs() < 1e-9);
        assert!(rows.iter().all(|r| r.variance >= 0.0));
    }

    #[test]
    fn support_size_rounding() {
        assert_eq!(support_size(101, 0.3), 25);
        assert_eq!(support_size(31, 0.3), 11);
        assert_eq!(support_size(61, 0.3), 17);
        assert_eq!(support_size(100, 0.5), 10);
    }

    #[test]
    fn campaign_is_deterministic() {
        let d = dh(11);
        let cfg = SpectralConfig {
            trials: 40,
            ..Default::default()
        };
        let (a, _) = spectral_campaign(&d, &cfg).unwrap();
        let (b, _) = spectral_campaign(&d, &cfg).unwrap();
        assert_eq!(a, b);
        let total: u64 = a.histogram.counts.iter().sum::<u64>() + a.histogram.below + a.histogram.above;
        assert_eq!(total, 40 * a.n as u64);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn shuffle_is_injective(size in 1usize..500, frac in 0.0f64..=1.0, seed: u64) {
            let n = ((size as f64) * frac) as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = partial_shuffle(&mut rng, size, n).unwrap();
            prop_assert_eq!(v.len(), n);
            let mut s = v.clone();
            s.sort();
            s.dedup();
            prop_assert_eq!(s.len(), n);
            prop_assert!(v.iter().all(|&i| i < size));
        }

        #[test]
        fn cdf_is_monotone(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(semicircle_cdf(lo) <= semicircle_cdf(hi) + 1e-15);
        }
    }
}
