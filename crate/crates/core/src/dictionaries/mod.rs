//! The Heisenberg (`D_H`), oscillator (`D_O`) and extended oscillator (`D_EO`)
//! dictionaries, their coherence checks and the synthesis map `Θ`.
//!
//! Each dictionary is a disjoint union of orthonormal bases of `C^p`, every
//! basis being the joint eigenbasis of a commutative family of operators:
//!
//! - `D_H`: for each of the `p + 1` lines `L ⊂ F_p²`, the eigenbasis of `π(l₀)`
//!   for a nonzero `l₀ ∈ L` (`μ = 1`);
//! - `D_O`: for each of the `p(p − 1)/2` non-split tori `T ⊂ SL₂(F_p)`, the
//!   eigenbasis of `ρ(t₀)` for a generator `t₀` (`μ = 4`);
//! - `D_EO`: the translates `π(v)B_T` for `v ∈ F_p²` (`μ = 4`).

mod io;

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use io::{decode, encode, read_from, write_to, FILE_MAGIC, FILE_VERSION};

use crate::error::{Error, Result};
use crate::ffield::{find_nonresidue, norm_one_generator, primitive_root, Fp, Prime};
use crate::linalg::{inner, normalize_phase, unitary_eigenbasis, CMatrix};
use crate::repn::{heis_op, weil_gen, weil_op, HeisenbergElement, SL2Element, WeilGenerator};

/// Tolerance for coherence bounds, `|⟨x,y⟩| ≤ μ/√p + COHERENCE_TOL`.
pub const COHERENCE_TOL: f64 = 1e-9;
/// Tolerance on `|⟨b_i, b_j⟩ − δ_ij|` within one basis.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

/// A line through the origin of `F_p²`: `{(τ, mτ)}` or the vertical `{(0, w)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Line {
    Slope(u64),
    Vertical,
}

impl Line {
    /// A nonzero point spanning the line.
    pub fn spanning_vector(&self, p: Prime) -> (Fp, Fp) {
        match *self {
            Line::Slope(m) => (p.one(), p.elem(m)),
            Line::Vertical => (p.zero(), p.one()),
        }
    }

    pub fn contains(&self, v: (Fp, Fp)) -> bool {
        match *self {
            Line::Slope(m) => v.1 == v.0 * v.0.modulus().elem(m),
            Line::Vertical => v.0.is_zero(),
        }
    }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Line::Slope(m) => write!(f, "{m}"),
            Line::Vertical => f.write_str("inf"),
        }
    }
}

/// All `p + 1` lines: slopes `0..p` then the vertical line.
pub fn lines(p: Prime) -> Vec<Line> {
    (0..p.get()).map(Line::Slope).chain([Line::Vertical]).collect()
}

/// A maximal non-split torus of `SL₂(F_p)`: a cyclic subgroup of order `p + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Torus {
    generator: SL2Element,
    elements: Vec<SL2Element>,
}

impl Torus {
    /// The cyclic group generated by `generator`, elements sorted by entries.
    pub fn generated_by(generator: SL2Element) -> Self {
        let order = generator.order();
        let mut elements: Vec<SL2Element> = (0..order).map(|k| generator.pow(k)).collect();
        elements.sort_by_key(|g| g.key());
        Torus { generator, elements }
    }

    pub fn generator(&self) -> &SL2Element {
        &self.generator
    }

    pub fn elements(&self) -> &[SL2Element] {
        &self.elements
    }

    pub fn conjugate(&self, g: &SL2Element) -> Torus {
        let g_inv = g.inverse();
        let conj = |x: &SL2Element| g.mul(x).mul(&g_inv);
        let mut elements: Vec<SL2Element> = self.elements.iter().map(conj).collect();
        elements.sort_by_key(|x| x.key());
        Torus {
            generator: conj(&self.generator),
            elements,
        }
    }

    fn canonical_key(&self) -> Vec<[u64; 4]> {
        self.elements.iter().map(|g| g.key()).collect()
    }
}

/// `T₀ = {[[a, bδ], [b, a]] : a² − δb² = 1}`, the norm-one elements of
/// `F_p[√δ]` acting on the basis `(1, √δ)`.
pub fn model_torus(p: Prime) -> Torus {
    let delta = find_nonresidue(p);
    let g = norm_one_generator(p, delta).expect("smallest non-residue");
    let t0 = SL2Element::new(g.a, g.b * delta, g.b, g.a).expect("norm one means det one");
    Torus::generated_by(t0)
}

/// All non-split tori, as the distinct conjugates `gT₀g⁻¹` over
/// `g ∈ SL₂(F_p)`, ordered by their sorted element lists.
///
/// The normalizer of `T₀` has order `2(p + 1)`, so there are
/// `|SL₂| / 2(p + 1) = p(p − 1)/2` of them; `p(p − 1)` counts the cosets
/// `SL₂/T₀`, and each torus arises from two of them.
pub fn nonsplit_tori(p: Prime) -> Result<Vec<Torus>> {
    let t0 = model_torus(p);
    let mut seen: BTreeMap<Vec<[u64; 4]>, Torus> = BTreeMap::new();
    for g in SL2Element::all(p) {
        let t = t0.conjugate(&g);
        seen.entry(t.canonical_key()).or_insert(t);
    }
    let expected = nonsplit_torus_count(p);
    if seen.len() != expected {
        return Err(Error::CountMismatch {
            expected,
            found: seen.len(),
        });
    }
    Ok(seen.into_values().collect())
}

/// `p(p − 1)/2`.
pub fn nonsplit_torus_count(p: Prime) -> usize {
    (p.get() * (p.get() - 1) / 2) as usize
}

/// Which family a dictionary belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictKind {
    Heisenberg,
    Oscillator,
    ExtendedOscillator,
}

impl DictKind {
    pub fn code(self) -> u8 {
        match self {
            DictKind::Heisenberg => 0,
            DictKind::Oscillator => 1,
            DictKind::ExtendedOscillator => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DictKind::Heisenberg),
            1 => Some(DictKind::Oscillator),
            2 => Some(DictKind::ExtendedOscillator),
            _ => None,
        }
    }

    /// Coherence coefficient guaranteed for this family.
    pub fn mu(self) -> f64 {
        match self {
            DictKind::Heisenberg => 1.0,
            DictKind::Oscillator | DictKind::ExtendedOscillator => 4.0,
        }
    }
}

impl fmt::Display for DictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DictKind::Heisenberg => "heisenberg",
            DictKind::Oscillator => "oscillator",
            DictKind::ExtendedOscillator => "extended_oscillator",
        })
    }
}

/// Identifies the commutative family a basis diagonalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisLabel {
    Line(Line),
    Torus { generator: SL2Element },
    TranslatedTorus { generator: SL2Element, tau: u64, w: u64 },
    /// The standard basis used on its own, e.g. as a control dictionary.
    Standard,
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gen = |f: &mut fmt::Formatter<'_>, g: &SL2Element| {
            let [a, b, c, d] = g.key();
            write!(f, "torus:{a},{b},{c},{d}")
        };
        match self {
            BasisLabel::Line(l) => write!(f, "line:{l}"),
            BasisLabel::Torus { generator } => gen(f, generator),
            BasisLabel::TranslatedTorus { generator, tau, w } => {
                gen(f, generator)?;
                write!(f, ";v:{tau},{w}")
            }
            BasisLabel::Standard => f.write_str("standard"),
        }
    }
}

impl BasisLabel {
    /// Inverse of `Display`.
    pub fn parse(s: &str, p: Prime) -> Result<Self> {
        let bad = || Error::Format(format!("bad basis label {s:?}"));
        let ints = |t: &str, n: usize| -> Result<Vec<u64>> {
            let v: Vec<u64> = t
                .split(',')
                .map(|x| x.parse::<u64>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            if v.len() != n || v.iter().any(|&x| x >= p.get()) {
                return Err(bad());
            }
            Ok(v)
        };
        if s == "standard" {
            return Ok(BasisLabel::Standard);
        }
        if let Some(rest) = s.strip_prefix("line:") {
            if rest == "inf" {
                return Ok(BasisLabel::Line(Line::Vertical));
            }
            return Ok(BasisLabel::Line(Line::Slope(ints(rest, 1)?[0])));
        }
        if let Some(rest) = s.strip_prefix("torus:") {
            let (g, v) = match rest.split_once(";v:") {
                Some((g, v)) => (g, Some(v)),
                None => (rest, None),
            };
            let e = ints(g, 4)?;
            let generator = SL2Element::from_u64(p, e[0], e[1], e[2], e[3]).map_err(|_| bad())?;
            return Ok(match v {
                None => BasisLabel::Torus { generator },
                Some(v) => {
                    let v = ints(v, 2)?;
                    BasisLabel::TranslatedTorus {
                        generator,
                        tau: v[0],
                        w: v[1],
                    }
                }
            });
        }
        Err(bad())
    }
}

/// `p` orthonormal, phase-normalized atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    pub label: BasisLabel,
    pub atoms: Vec<Vec<Complex64>>,
}

impl OrthonormalBasis {
    /// `max |⟨b_i, b_j⟩ − δ_ij|`.
    pub fn gram_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for (i, x) in self.atoms.iter().enumerate() {
            for (j, y) in self.atoms.iter().enumerate().skip(i) {
                let g = inner(x, y);
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((g - target).norm());
            }
        }
        dev
    }
}

/// A disjoint union of orthonormal bases of `C^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    p: Prime,
    kind: DictKind,
    mu: f64,
    bases: Vec<OrthonormalBasis>,
}

impl Dictionary {
    /// Assembles a dictionary, checking shapes and within-basis orthonormality.
    /// Cross-basis coherence is not checked here; see [`coherence_report`].
    pub fn new(p: Prime, kind: DictKind, mu: f64, bases: Vec<OrthonormalBasis>) -> Result<Self> {
        let n = p.as_usize();
        for b in &bases {
            if b.atoms.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: b.atoms.len(),
                });
            }
            if let Some(a) = b.atoms.iter().find(|a| a.len() != n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: a.len(),
                });
            }
            let dev = b.gram_deviation();
            if !(dev <= ORTHONORMAL_TOL) {
                return Err(Error::NotOrthonormal(dev));
            }
        }
        Ok(Dictionary { p, kind, mu, bases })
    }

    /// The standard basis alone: every pair of distinct atoms is orthogonal.
    pub fn single_basis(p: Prime) -> Self {
        let atoms = CMatrix::identity(p.as_usize()).columns();
        Dictionary {
            p,
            kind: DictKind::Heisenberg,
            mu: 1.0,
            bases: vec![OrthonormalBasis {
                label: BasisLabel::Standard,
                atoms,
            }],
        }
    }

    pub fn p(&self) -> Prime {
        self.p
    }

    pub fn kind(&self) -> DictKind {
        self.kind
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn bases(&self) -> &[OrthonormalBasis] {
        &self.bases
    }

    pub fn basis_count(&self) -> usize {
        self.bases.len()
    }

    pub fn atom_count(&self) -> usize {
        self.bases.len() * self.p.as_usize()
    }

    /// Atom `i`, numbered basis by basis.
    pub fn atom(&self, i: usize) -> &[Complex64] {
        let n = self.p.as_usize();
        &self.bases[i / n].atoms[i % n]
    }

    /// Index of the basis containing atom `i`.
    pub fn basis_of(&self, i: usize) -> usize {
        i / self.p.as_usize()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &[Complex64]> {
        self.bases.iter().flat_map(|b| b.atoms.iter().map(|a| a.as_slice()))
    }

    /// The full `|D| x |D|` Gram matrix `G_ij = ⟨φ_i, φ_j⟩`.
    pub fn gram_matrix(&self) -> CMatrix {
        let atoms: Vec<&[Complex64]> = self.atoms().collect();
        crate::linalg::gram(&atoms).expect("atoms share the dimension p")
    }
}

fn standard_basis_by_character(p: Prime) -> Vec<Vec<Complex64>> {
    // e_s is the ψ(s)-eigenvector of π(0,1,0); decreasing angle means s = p−1, …, 0
    let id = CMatrix::identity(p.as_usize()).columns();
    id.into_iter().rev().collect()
}

/// The basis attached to a line: eigenvectors of `π(l₀)` for the spanning
/// vector `l₀`. The vertical line gives the standard (delta) basis directly.
pub fn heisenberg_basis(p: Prime, line: Line) -> Result<OrthonormalBasis> {
    let atoms = match line {
        Line::Vertical => standard_basis_by_character(p),
        Line::Slope(_) => {
            let (tau, w) = line.spanning_vector(p);
            let op = heis_op(&HeisenbergElement::new(tau, w, p.zero()));
            unitary_eigenbasis(&op.matrix)?.vectors
        }
    };
    Ok(OrthonormalBasis {
        label: BasisLabel::Line(line),
        atoms,
    })
}

/// The eigenbasis of `ρ(t₀)` for the torus generator `t₀`.
pub fn oscillator_basis(torus: &Torus) -> Result<OrthonormalBasis> {
    let op = weil_op(torus.generator());
    Ok(OrthonormalBasis {
        label: BasisLabel::Torus {
            generator: *torus.generator(),
        },
        atoms: unitary_eigenbasis(&op.matrix)?.vectors,
    })
}

fn verified(dict: Dictionary) -> Result<Dictionary> {
    let report = coherence_report(&dict);
    if !report.pass {
        return Err(Error::CoherenceViolation {
            observed: report.cross_max,
            mu: dict.mu,
        });
    }
    Ok(dict)
}

/// `D_H`: `p + 1` bases, `p(p + 1)` atoms, `μ = 1`, coherence verified.
pub fn build_heisenberg_dict(p: Prime) -> Result<Dictionary> {
    let bases = lines(p)
        .into_par_iter()
        .map(|l| heisenberg_basis(p, l))
        .collect::<Result<Vec<_>>>()?;
    verified(Dictionary::new(p, DictKind::Heisenberg, 1.0, bases)?)
}

/// `D_O`: `p(p − 1)/2` bases, `p²(p − 1)/2` atoms, `μ = 4`, coherence verified.
pub fn build_oscillator_dict(p: Prime) -> Result<Dictionary> {
    let tori = nonsplit_tori(p)?;
    let bases = tori
        .par_iter()
        .map(oscillator_basis)
        .collect::<Result<Vec<_>>>()?;
    verified(Dictionary::new(p, DictKind::Oscillator, 4.0, bases)?)
}

/// A seeded subset of the translations `v ∈ F_p²` used for `D_EO`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationSubsample {
    /// Number of translations kept, including `v = 0`.
    pub count: usize,
    pub seed: u64,
}

/// The translations retained for `D_EO`, sorted lexicographically. `v = 0` is
/// always included so the untranslated `D_O` bases are part of the result.
pub fn retained_translations(p: Prime, subsample: Option<TranslationSubsample>) -> Result<Vec<(u64, u64)>> {
    let q = p.get();
    let total = (q * q) as usize;
    let mut idx: Vec<usize> = match subsample {
        None => (0..total).collect(),
        Some(s) => {
            if s.count == 0 || s.count > total {
                return Err(Error::InvalidParameter(format!(
                    "translation subsample count {} must lie in 1..={total}",
                    s.count
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            // draw from the nonzero translations, then add v = 0
            let mut v: Vec<usize> = sample(&mut rng, total - 1, s.count - 1)
                .into_iter()
                .map(|i| i + 1)
                .collect();
            v.push(0);
            v
        }
    };
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| (i as u64 / q, i as u64 % q)).collect())
}

/// `D_EO`: bases `π(v)B_T` for every non-split torus `T` and retained `v`.
/// Without a subsample this is all `p³(p − 1)/2` bases; coherence is checked
/// across every retained pair.
pub fn build_extended_oscillator_dict(p: Prime, subsample: Option<TranslationSubsample>) -> Result<Dictionary> {
    let translations = retained_translations(p, subsample)?;
    let tori = nonsplit_tori(p)?;
    let base = tori
        .par_iter()
        .map(oscillator_basis)
        .collect::<Result<Vec<_>>>()?;
    let mut bases = Vec::with_capacity(base.len() * translations.len());
    for (torus, b) in tori.iter().zip(&base) {
        for &(tau, w) in &translations {
            let op = heis_op(&HeisenbergElement::from_u64(p, tau, w, 0));
            let atoms = b
                .atoms
                .iter()
                .map(|a| {
                    let mut x = op.matrix.mul_vec(a);
                    normalize_phase(&mut x);
                    x
                })
                .collect();
            bases.push(OrthonormalBasis {
                label: BasisLabel::TranslatedTorus {
                    generator: *torus.generator(),
                    tau,
                    w,
                },
                atoms,
            });
        }
    }
    verified(Dictionary::new(p, DictKind::ExtendedOscillator, 4.0, bases)?)
}

/// One histogram bin of scaled coherence values `√p·|⟨φ,ϕ⟩|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

/// Result of an exhaustive cross-basis pair scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub p: u64,
    pub kind: DictKind,
    pub mu: f64,
    pub basis_count: usize,
    pub atom_count: usize,
    /// Number of atom pairs drawn from distinct bases.
    pub cross_pairs: u64,
    /// `max √p·|⟨φ,ϕ⟩|` over cross pairs (0 when there are none).
    pub cross_max: f64,
    /// `min √p·|⟨φ,ϕ⟩|` over cross pairs (0 when there are none).
    pub cross_min: f64,
    /// Bins of width `μ/16` on `[0, μ]`; values above `μ` land in a final
    /// overflow bin with `hi = +inf`.
    pub histogram: Vec<HistogramBin>,
    /// `max |⟨b_i, b_j⟩ − δ_ij|` inside a basis.
    pub within_max_deviation: f64,
    /// True when the dictionary has a single basis and the bound holds vacuously.
    pub vacuous: bool,
    pub pass: bool,
}

const HIST_BINS: usize = 16;

#[derive(Clone)]
struct PairStats {
    pairs: u64,
    max: f64,
    min: f64,
    hist: Vec<u64>,
}

impl PairStats {
    fn new() -> Self {
        PairStats {
            pairs: 0,
            max: 0.0,
            min: f64::INFINITY,
            hist: vec![0; HIST_BINS + 1],
        }
    }

    fn merge(mut self, other: PairStats) -> PairStats {
        self.pairs += other.pairs;
        self.max = self.max.max(other.max);
        self.min = self.min.min(other.min);
        for (a, b) in self.hist.iter_mut().zip(other.hist) {
            *a += b;
        }
        self
    }
}

/// Scans every cross-basis atom pair and reports `√p·|⟨φ,ϕ⟩|` statistics.
pub fn coherence_report(dict: &Dictionary) -> CoherenceReport {
    let p = dict.p();
    let sqrt_p = (p.get() as f64).sqrt();
    let mu = dict.mu();
    let width = mu / HIST_BINS as f64;
    let bases = dict.bases();
    let stats = (0..bases.len())
        .into_par_iter()
        .map(|i| {
            let mut s = PairStats::new();
            for other in &bases[i + 1..] {
                for x in &bases[i].atoms {
                    for y in &other.atoms {
                        let v = inner(x, y).norm() * sqrt_p;
                        s.pairs += 1;
                        s.max = s.max.max(v);
                        s.min = s.min.min(v);
                        let bin = if v > mu { HIST_BINS } else { ((v / width) as usize).min(HIST_BINS - 1) };
                        s.hist[bin] += 1;
                    }
                }
            }
            s
        })
        .reduce(PairStats::new, PairStats::merge);
    let within = bases
        .par_iter()
        .map(|b| b.gram_deviation())
        .reduce(|| 0.0, f64::max);
    let histogram = stats
        .hist
        .iter()
        .enumerate()
        .map(|(k, &count)| HistogramBin {
            lo: k as f64 * width,
            hi: if k == HIST_BINS { f64::INFINITY } else { (k + 1) as f64 * width },
            count,
        })
        .collect();
    let vacuous = stats.pairs == 0;
    let pass = stats.max <= mu + COHERENCE_TOL * sqrt_p && within <= ORTHONORMAL_TOL;
    CoherenceReport {
        p: p.get(),
        kind: dict.kind(),
        mu,
        basis_count: dict.basis_count(),
        atom_count: dict.atom_count(),
        cross_pairs: stats.pairs,
        cross_max: stats.max,
        cross_min: if vacuous { 0.0 } else { stats.min },
        histogram,
        within_max_deviation: within,
        vacuous,
        pass,
    }
}

/// Coherence over randomly drawn cross-basis atom pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCoherence {
    pub pairs: u64,
    pub seed: u64,
    pub max: f64,
    pub min: f64,
}

/// Draws `pairs` atom pairs from distinct bases (uniform over such pairs).
pub fn sampled_coherence(dict: &Dictionary, pairs: u64, seed: u64) -> Result<SampledCoherence> {
    use rand::Rng;
    if dict.basis_count() < 2 {
        return Err(Error::InvalidParameter("need at least two bases to sample cross pairs".into()));
    }
    let sqrt_p = (dict.p().get() as f64).sqrt();
    let n = dict.atom_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max: f64 = 0.0;
    let mut min = f64::INFINITY;
    let mut drawn = 0;
    while drawn < pairs {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if dict.basis_of(i) == dict.basis_of(j) {
            continue;
        }
        let v = inner(dict.atom(i), dict.atom(j)).norm() * sqrt_p;
        max = max.max(v);
        min = min.min(v);
        drawn += 1;
    }
    Ok(SampledCoherence { pairs, seed, max, min })
}

/// `Θ(f) = Σ_φ f(φ)·φ`.
pub fn resolve(coefficients: &[Complex64], dict: &Dictionary) -> Result<Vec<Complex64>> {
    if coefficients.len() != dict.atom_count() {
        return Err(Error::DimensionMismatch {
            expected: dict.atom_count(),
            got: coefficients.len(),
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); dict.p().as_usize()];
    for (c, atom) in coefficients.iter().zip(dict.atoms()) {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (o, a) in out.iter_mut().zip(atom) {
            *o += c * a;
        }
    }
    Ok(out)
}

/// The `p − 1` functions `φ_χ(t) = χ(t)/√(p−1)` (and `φ_χ(0) = 0`) attached to
/// the diagonal split torus, one per multiplicative character `χ` of `F_p^×`.
/// They are not part of `D_O`.
pub fn split_torus_system(p: Prime) -> Vec<Vec<Complex64>> {
    let q = p.get();
    let g = primitive_root(p);
    // discrete log table: log[g^k] = k
    let mut log = vec![0u64; q as usize];
    for k in 0..q - 1 {
        log[g.pow(k).value() as usize] = k;
    }
    let scale = 1.0 / ((q - 1) as f64).sqrt();
    (0..q - 1)
        .map(|j| {
            (0..q)
                .map(|t| {
                    if t == 0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        let angle = std::f64::consts::TAU * (j * log[t as usize]) as f64 / (q - 1) as f64;
                        Complex64::from_polar(scale, angle)
                    }
                })
                .collect()
        })
        .collect()
}

/// Largest eigenvector residual `‖S_a φ − (φ†S_a φ)φ‖` of the split-torus
/// system over all scalings `a ∈ F_p^×`.
pub fn validate_split_torus(p: Prime) -> Result<f64> {
    let system = split_torus_system(p);
    let mut worst: f64 = 0.0;
    for a in 1..p.get() {
        let s = weil_gen(p, WeilGenerator::Scaling(a))?.matrix;
        for phi in &system {
            let sphi = s.mul_vec(phi);
            let lambda = inner(&sphi, phi);
            let r = sphi
                .iter()
                .zip(phi)
                .map(|(x, y)| (x - lambda * y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
    }
    Ok(worst)
}
