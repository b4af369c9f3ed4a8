//! Closed paths, their isomorphism classes and exact path weights.
//!
//! A closed path of length `k` is a vertex sequence `γ(0), …, γ(k)` with
//! `γ(0) = γ(k)`; it is strict when consecutive vertices differ. Its class is
//! the first-visit renumbering, e.g. `(a, b, c, a, b, a) ↦ (1, 2, 3, 1, 2, 1)`.
//! Given an assignment `S` of dictionary atoms to the vertices, the weight is
//! `w_γ(S) = Π_j ⟨S(γ(j)), S(γ(j+1))⟩`, and `E w_γ` averages it over all
//! injective assignments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dictionaries::Dictionary;
use crate::error::{Error, Result};
use crate::ffield::Prime;
use crate::linalg::{inner, CMatrix};
use crate::spectra::{partial_shuffle, support_size};

/// Largest path length handled by [`enumerate_classes`].
pub const MAX_CLASS_LENGTH: usize = 10;
/// Largest vertex count handled by [`exact_ew`].
pub const MAX_EXACT_VERTICES: usize = 4;
/// Largest number of injective assignments [`exact_ew`] will enumerate.
pub const MAX_EXACT_ASSIGNMENTS: u128 = 2_000_000_000;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// First-visit renumbering of a closed vertex sequence (labels start at 1).
pub fn canonicalize<T: Ord + Copy>(path: &[T]) -> Vec<usize> {
    let mut seen: BTreeMap<T, usize> = BTreeMap::new();
    path.iter()
        .map(|v| {
            let next = seen.len() + 1;
            *seen.entry(*v).or_insert(next)
        })
        .collect()
}

fn is_strict_closed<T: PartialEq>(path: &[T]) -> bool {
    path.len() >= 2 && path.first() == path.last() && path.windows(2).all(|w| w[0] != w[1])
}

/// An isomorphism class of strict closed paths, stored as its first-visit tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PathClass {
    canonical: Vec<usize>,
    vertex_count: usize,
    is_tree: bool,
}

impl PathClass {
    /// Validates a first-visit tuple.
    pub fn new(canonical: Vec<usize>) -> Result<Self> {
        let bad = |why: &str| Error::InvalidParameter(format!("{canonical:?} is not a path class: {why}"));
        if !is_strict_closed(&canonical) {
            return Err(bad("must be strict and closed with length >= 1"));
        }
        if canonicalize(&canonical) != canonical {
            return Err(bad("not in first-visit numbering"));
        }
        let vertex_count = *canonical.iter().max().unwrap();
        let is_tree = tree_test(&canonical);
        Ok(PathClass {
            canonical,
            vertex_count,
            is_tree,
        })
    }

    /// The class of an arbitrary labelled strict closed path.
    pub fn of<T: Ord + Copy>(path: &[T]) -> Result<Self> {
        PathClass::new(canonicalize(path))
    }

    pub fn canonical(&self) -> &[usize] {
        &self.canonical
    }

    /// Number of steps `k`.
    pub fn len(&self) -> usize {
        self.canonical.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn is_tree(&self) -> bool {
        self.is_tree
    }
}

impl fmt::Display for PathClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.canonical.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

impl std::str::FromStr for PathClass {
    type Err = Error;

    /// Accepts `1,2,1`, `(1,2,1)` or `1-2-1`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let v = t
            .split([',', '-'])
            .map(|x| x.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse path class {s:?}")))?;
        PathClass::new(v)
    }
}

/// Undirected edges with crossing counts per direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphFacts {
    pub vertex_count: usize,
    /// `((a, b), crossings a→b, crossings b→a)` with `a < b`.
    pub edges: Vec<((usize, usize), usize, usize)>,
    pub connected: bool,
    pub is_tree: bool,
}

pub fn classify(pc: &PathClass) -> GraphFacts {
    let mut edges: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    for w in pc.canonical.windows(2) {
        let (a, b) = (w[0], w[1]);
        let e = edges.entry((a.min(b), a.max(b))).or_default();
        if a < b {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    GraphFacts {
        vertex_count: pc.vertex_count,
        edges: edges.into_iter().map(|(k, (f, b))| (k, f, b)).collect(),
        // a closed walk visits a connected graph
        connected: true,
        is_tree: pc.is_tree,
    }
}

fn tree_test(c: &[usize]) -> bool {
    let vertices = *c.iter().max().unwrap();
    let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for w in c.windows(2) {
        *directed.entry((w[0], w[1])).or_default() += 1;
    }
    let undirected: BTreeSet<(usize, usize)> = directed.keys().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    undirected.len() + 1 == vertices
        && undirected
            .iter()
            .all(|&(a, b)| directed.get(&(a, b)) == Some(&1) && directed.get(&(b, a)) == Some(&1))
}

/// Every class of strict closed paths of length `k`, in lexicographic order.
pub fn enumerate_classes(k: usize) -> Result<Vec<PathClass>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("path length {k} must be at least 2")));
    }
    if k > MAX_CLASS_LENGTH {
        return Err(Error::BudgetExceeded(format!(
            "path classes are enumerated up to length {MAX_CLASS_LENGTH}, got {k}"
        )));
    }
    fn grow(prefix: &mut Vec<usize>, max: usize, k: usize, out: &mut Vec<PathClass>) {
        let j = prefix.len();
        let last = prefix[j - 1];
        if j == k {
            if last != 1 {
                prefix.push(1);
                out.push(PathClass::new(prefix.clone()).expect("generated in canonical form"));
                prefix.pop();
            }
            return;
        }
        for v in 1..=max + 1 {
            if v != last {
                prefix.push(v);
                grow(prefix, max.max(v), k, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    grow(&mut vec![1], 1, k, &mut out);
    Ok(out)
}

/// Classes of a given length that are trees.
pub fn tree_classes(k: usize) -> Result<Vec<PathClass>> {
    Ok(enumerate_classes(k)?.into_iter().filter(|c| c.is_tree()).collect())
}

/// A sequence of `±1` with nonnegative prefix sums and total zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DyckWord(Vec<i8>);

impl DyckWord {
    pub fn new(letters: Vec<i8>) -> Result<Self> {
        let mut h: i64 = 0;
        for &d in &letters {
            if d != 1 && d != -1 {
                return Err(Error::InvalidParameter(format!("Dyck letter {d} is not ±1")));
            }
            h += d as i64;
            if h < 0 {
                return Err(Error::InvalidParameter("Dyck prefix sum went negative".into()));
            }
        }
        if h != 0 || letters.is_empty() {
            return Err(Error::InvalidParameter("Dyck word must be nonempty with total sum 0".into()));
        }
        Ok(DyckWord(letters))
    }

    pub fn letters(&self) -> &[i8] {
        &self.0
    }

    /// All Dyck words of length `2m`.
    pub fn all(m: usize) -> Vec<DyckWord> {
        fn go(open: usize, close: usize, m: usize, cur: &mut Vec<i8>, out: &mut Vec<DyckWord>) {
            if cur.len() == 2 * m {
                out.push(DyckWord(cur.clone()));
                return;
            }
            if open < m {
                cur.push(1);
                go(open + 1, close, m, cur, out);
                cur.pop();
            }
            if close < open {
                cur.push(-1);
                go(open, close + 1, m, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if m > 0 {
            go(0, 0, m, &mut Vec::new(), &mut out);
        }
        out
    }
}

impl fmt::Display for DyckWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &d in &self.0 {
            f.write_str(if d > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// Step `i` gets `+1` exactly when `γ(i)` is visited for the first time,
/// i.e. when the edge `{γ(i−1), γ(i)}` is crossed for the first time.
pub fn dyck_encode(tree: &PathClass) -> Result<DyckWord> {
    if !tree.is_tree() {
        return Err(Error::NotATree);
    }
    let mut seen = 1;
    let letters = tree.canonical[1..]
        .iter()
        .map(|&v| {
            if v > seen {
                seen = v;
                1
            } else {
                -1
            }
        })
        .collect();
    DyckWord::new(letters)
}

/// Walks the tree: `+1` steps to a fresh vertex, `−1` back to the parent.
pub fn dyck_decode(word: &DyckWord) -> PathClass {
    let mut stack = vec![1];
    let mut next = 2;
    let mut path = vec![1];
    for &d in word.letters() {
        if d > 0 {
            stack.push(next);
            next += 1;
        } else {
            stack.pop();
        }
        path.push(*stack.last().expect("prefix sums are nonnegative"));
    }
    PathClass::new(path).expect("a Dyck word walks a tree")
}

/// `n(n − 1)···(n − m + 1)` as a float.
pub fn falling_factorial(n: usize, m: usize) -> f64 {
    (0..m).map(|i| n as f64 - i as f64).product()
}

/// Normalization factors attached to a class at support size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NTau {
    /// `p^{k/2}·n^{|V| − 1 − k/2}`.
    pub asymptotic: f64,
    /// `|[γ]| = n(n − 1)···(n − |V| + 1)`, labelled paths on `[n]` in the class.
    pub class_size: f64,
    /// `n^{−1}(p/n)^{k/2}·|[γ]|`, the exact coefficient of `E w_τ` in `E m_k`.
    pub exact: f64,
}

pub fn n_tau(pc: &PathClass, n: usize, p: u64) -> NTau {
    let k = pc.len() as f64;
    let v = pc.vertex_count() as f64;
    let (nf, pf) = (n as f64, p as f64);
    let class_size = falling_factorial(n, pc.vertex_count());
    NTau {
        asymptotic: pf.powf(k / 2.0) * nf.powf(v - 1.0 - k / 2.0),
        class_size,
        exact: (pf / nf).powf(k / 2.0) * class_size / nf,
    }
}

/// All strict closed paths of length `k` on vertices `0..n`.
pub fn labeled_paths(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            if *cur.last().unwrap() != cur[0] {
                cur.push(cur[0]);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        let last = *cur.last().unwrap();
        for v in 0..n {
            if v != last {
                cur.push(v);
                go(n, k, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    if k >= 2 {
        for s in 0..n {
            go(n, k, &mut vec![s], &mut out);
        }
    }
    out
}

/// `Σ_γ Π_j M[γ(j), γ(j+1)]` over strict closed paths of length `k` on `[n]`.
/// Equals `Tr(M^k)` when `M` has zero diagonal.
pub fn path_sum(m: &CMatrix, k: usize) -> Result<Complex64> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    Ok(labeled_paths(m.rows(), k)
        .iter()
        .map(|g| g.windows(2).map(|w| m[(w[0], w[1])]).product::<Complex64>())
        .sum())
}

/// All pairwise inner products `⟨φ_i, φ_j⟩` of a dictionary.
pub struct AtomGram {
    size: usize,
    data: Vec<Complex64>,
}

impl AtomGram {
    pub fn new(dict: &Dictionary) -> Self {
        let size = dict.atom_count();
        let rows: Vec<Vec<Complex64>> = (0..size)
            .into_par_iter()
            .map(|i| (0..size).map(|j| inner(dict.atom(i), dict.atom(j))).collect())
            .collect();
        AtomGram {
            size,
            data: rows.concat(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.size + j]
    }

    /// `w_γ(S)` for a vertex sequence `path` and assignment `atoms[v]`.
    pub fn weight(&self, path: &[usize], atoms: &[usize]) -> Complex64 {
        path.windows(2).map(|w| self.get(atoms[w[0]], atoms[w[1]])).product()
    }
}

/// Relabels a closed vertex sequence to `0..m` in first-visit order.
fn compact(path: &[usize]) -> (Vec<usize>, usize) {
    let c: Vec<usize> = canonicalize(path).into_iter().map(|v| v - 1).collect();
    let m = c.iter().max().map_or(0, |x| x + 1);
    (c, m)
}

/// `E w_γ` over injective assignments of the vertices of any closed vertex
/// sequence (strictness is not required). The sequence is first put in
/// first-visit form, so every labelled representative of a class gives the
/// same bits.
pub fn exact_ew(path: &[usize], gram: &AtomGram) -> Result<Complex64> {
    exact_ew_raw(&compact(path).0, gram)
}

/// [`exact_ew`] without the first-visit relabelling: vertices are assigned
/// in increasing label order, so the summation order follows the labels.
pub fn exact_ew_labeled(path: &[usize], gram: &AtomGram) -> Result<Complex64> {
    let labels: BTreeSet<usize> = path.iter().copied().collect();
    let index: BTreeMap<usize, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let relabeled: Vec<usize> = path.iter().map(|v| index[v]).collect();
    exact_ew_raw(&relabeled, gram)
}

fn exact_ew_raw(c: &[usize], gram: &AtomGram) -> Result<Complex64> {
    if c.len() <= 1 {
        return Ok(ONE);
    }
    if c.first() != c.last() {
        return Err(Error::InvalidParameter("path is not closed".into()));
    }
    let m = c.iter().max().unwrap() + 1;
    let d = gram.size();
    if m > MAX_EXACT_VERTICES {
        return Err(Error::BudgetExceeded(format!(
            "exact expectation needs at most {MAX_EXACT_VERTICES} vertices, got {m}"
        )));
    }
    if m > d {
        return Err(Error::NTooLarge { n: m, size: d });
    }
    let count: u128 = (0..m).map(|i| (d - i) as u128).product();
    if count > MAX_EXACT_ASSIGNMENTS {
        return Err(Error::BudgetExceeded(format!(
            "{count} injective assignments exceed the limit {MAX_EXACT_ASSIGNMENTS}"
        )));
    }
    let steps: Vec<(usize, usize)> = c.windows(2).map(|w| (w[0], w[1])).collect();
    let partial: Vec<Complex64> = (0..d)
        .into_par_iter()
        .map(|a0| {
            let mut atoms = [a0, 0, 0, 0];
            let mut acc = ZERO;
            let w = |atoms: &[usize; 4]| -> Complex64 {
                steps.iter().map(|&(x, y)| gram.get(atoms[x], atoms[y])).product()
            };
            match m {
                1 => acc += w(&atoms),
                2 => {
                    for a1 in (0..d).filter(|&a| a != a0) {
                        atoms[1] = a1;
                        acc += w(&atoms);
                    }
                }
                3 => {
                    for a1 in (0..d).filter(|&a| a != a0) {
                        atoms[1] = a1;
                        for a2 in (0..d).filter(|&a| a != a0 && a != a1) {
                            atoms[2] = a2;
                            acc += w(&atoms);
                        }
                    }
                }
                _ => {
                    for a1 in (0..d).filter(|&a| a != a0) {
                        atoms[1] = a1;
                        for a2 in (0..d).filter(|&a| a != a0 && a != a1) {
                            atoms[2] = a2;
                            for a3 in (0..d).filter(|&a| a != a0 && a != a1 && a != a2) {
                                atoms[3] = a3;
                                acc += w(&atoms);
                            }
                        }
                    }
                }
            }
            acc
        })
        .collect();
    // fixed left-to-right order keeps the result independent of scheduling
    let total: Complex64 = partial.iter().sum();
    Ok(total / count as f64)
}

/// `E w` of the 3-cycle `(1,2,3,1)` on a union of `|X|` orthonormal bases of
/// `C^p`, without enumeration. The frame operator is `|X|·I`, so
/// `Tr G³ = |X|³p` and `Tr G² = |X|²p`; removing assignments with coincident
/// vertices leaves `|X|p(|X| − 1)(|X| − 2)` out of `N(N − 1)(N − 2)`.
pub fn triangle_ew(dict: &Dictionary) -> f64 {
    let x = dict.basis_count() as f64;
    let p = dict.p().get() as f64;
    let n = dict.atom_count() as f64;
    x * p * (x - 1.0) * (x - 2.0) / (n * (n - 1.0) * (n - 2.0))
}

/// `E m_k` from the path expansion: `Σ_τ n^{−1}(p/n)^{k/2}|[τ]|·E w_τ`.
pub fn predicted_moment(gram: &AtomGram, p: u64, n: usize, k: usize) -> Result<Complex64> {
    if k < 2 {
        return Ok(ZERO);
    }
    let mut total = ZERO;
    for c in enumerate_classes(k)? {
        if c.vertex_count() > n {
            continue;
        }
        total += n_tau(&c, n, p).exact * exact_ew(c.canonical(), gram)?;
    }
    Ok(total)
}

/// How the support size follows `p` along a ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NPolicy {
    /// `n = floor(p^{1−ε})`.
    Epsilon(f64),
    Fixed(usize),
}

impl NPolicy {
    pub fn n_for(&self, p: u64) -> usize {
        match *self {
            NPolicy::Epsilon(eps) => support_size(p, eps),
            NPolicy::Fixed(n) => n,
        }
    }
}

/// One entry of the fundamental-estimate table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub class: String,
    pub is_tree: bool,
    pub p: u64,
    pub n: usize,
    pub n_tau: f64,
    pub ew_re: f64,
    pub ew_im: f64,
    /// `n(τ)·E w_τ` with the `p^{k/2}n^{|V|−1−k/2}` normalization.
    pub n_tau_ew_re: f64,
    pub n_tau_ew_im: f64,
}

/// `n(τ)·E w_τ` for each class and each prime of the ladder.
pub fn fundamental_estimate_table(
    classes: &[PathClass],
    primes: &[Prime],
    policy: NPolicy,
    build: impl Fn(Prime) -> Result<Dictionary>,
) -> Result<Vec<EstimateRow>> {
    let mut rows = Vec::new();
    for &p in primes {
        let gram = AtomGram::new(&build(p)?);
        let n = policy.n_for(p.get());
        for c in classes {
            let ew = exact_ew(c.canonical(), &gram)?;
            let nt = n_tau(c, n, p.get()).asymptotic;
            rows.push(EstimateRow {
                class: c.to_string(),
                is_tree: c.is_tree(),
                p: p.get(),
                n,
                n_tau: nt,
                ew_re: ew.re,
                ew_im: ew.im,
                n_tau_ew_re: nt * ew.re,
                n_tau_ew_im: nt * ew.im,
            });
        }
    }
    Ok(rows)
}

/// Whether a trajectory moves the way the limit predicts: tree classes
/// strictly increase toward 1 from below, other classes strictly decrease in
/// modulus.
pub fn trajectory_trend(rows: &[EstimateRow]) -> bool {
    let Some(first) = rows.first() else {
        return true;
    };
    let vals: Vec<f64> = rows.iter().map(|r| r.n_tau_ew_re.hypot(r.n_tau_ew_im)).collect();
    if first.is_tree {
        vals.windows(2).all(|w| w[0] < w[1]) && vals.iter().all(|&v| v < 1.0)
    } else {
        vals.windows(2).all(|w| w[0] > w[1])
    }
}

/// A class representative rotated so that `v` sits at an interior position,
/// with the surgeries that delete or replace `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Surgery {
    /// Rotated closed sequence with `v` at `index`.
    pub path: Vec<usize>,
    pub index: usize,
    pub v: usize,
    pub left: usize,
    pub right: usize,
    /// `γ_v̂`: length `k − 1` if `left ≠ right`, else `k − 2`.
    pub deleted: Vec<usize>,
}

impl Surgery {
    pub fn new(pc: &PathClass, v: usize) -> Result<Self> {
        let k = pc.len();
        let body = &pc.canonical[..k];
        let hits: Vec<usize> = (0..k).filter(|&i| body[i] == v).collect();
        if hits.len() != 1 {
            return Err(Error::VertexNotSingleVisit(v));
        }
        // rotate so v lands at position 1
        let start = (hits[0] + k - 1) % k;
        let mut path: Vec<usize> = (0..k).map(|i| body[(start + i) % k]).collect();
        path.push(path[0]);
        let (left, right) = (path[0], path[2]);
        let deleted = if left != right {
            [&path[..1], &path[2..]].concat()
        } else {
            [&path[..1], &path[3..]].concat()
        };
        Ok(Surgery {
            path,
            index: 1,
            v,
            left,
            right,
            deleted,
        })
    }

    /// `γ_u`: `v` replaced by `u`.
    pub fn replaced(&self, u: usize) -> Vec<usize> {
        let mut g = self.path.clone();
        g[self.index] = u;
        g
    }

    /// Vertices other than `v`, `v_l`, `v_r`.
    pub fn others(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.path.iter().copied().collect();
        set.into_iter()
            .filter(|&u| u != self.v && u != self.left && u != self.right)
            .collect()
    }
}

fn path_weight(dict: &Dictionary, path: &[usize], assign: &BTreeMap<usize, usize>) -> Complex64 {
    path.windows(2)
        .map(|w| inner(dict.atom(assign[&w[0]]), dict.atom(assign[&w[1]])))
        .product()
}

/// Max over sampled injective `S` on `V_γ ∖ {v}` of
/// `|Σ_{b∈D} w_γ(S⊔b) − |X|·w_{γ_v̂}(S)|`.
pub fn completeness_identity_check(
    pc: &PathClass,
    v: usize,
    dict: &Dictionary,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let s = Surgery::new(pc, v)?;
    let rest: Vec<usize> = (1..=pc.vertex_count()).filter(|&u| u != v).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = dict.basis_count() as f64;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let image = partial_shuffle(&mut rng, dict.atom_count(), rest.len())?;
        let mut assign: BTreeMap<usize, usize> = rest.iter().copied().zip(image).collect();
        let rhs = x * path_weight(dict, &s.deleted, &assign);
        let mut lhs = ZERO;
        for b in 0..dict.atom_count() {
            assign.insert(v, b);
            lhs += path_weight(dict, &s.path, &assign);
        }
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// The two sides of the recursion for `E w_γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationCheck {
    pub ew: Complex64,
    /// `p^{−1}E w_{γ_v̂} − (p|X|)^{−1}Σ_u E w_{γ_u}`.
    pub asymptotic: Complex64,
    /// The same expansion with exact coefficients; equals `ew` to rounding.
    pub exact: Complex64,
    /// `|ew − asymptotic| / |ew|`.
    pub relative_gap: f64,
}

pub fn relation_check(pc: &PathClass, v: usize, dict: &Dictionary, gram: &AtomGram) -> Result<RelationCheck> {
    let s = Surgery::new(pc, v)?;
    let p = dict.p().get() as f64;
    let x = dict.basis_count() as f64;
    let ew = exact_ew(pc.canonical(), gram)?;
    let e_del = exact_ew(&s.deleted, gram)?;
    let others = s.others();
    let sum_u = others
        .iter()
        .map(|&u| exact_ew(&s.replaced(u), gram))
        .sum::<Result<Complex64>>()?;
    let asymptotic = e_del / p - sum_u / (p * x);
    // b ranges over D minus the |V| − 1 atoms already used; v_l and v_r give
    // back γ_v̂ (once if they coincide)
    let repeats = if s.left == s.right { 1.0 } else { 2.0 };
    let free = (dict.atom_count() - (pc.vertex_count() - 1)) as f64;
    let exact = ((x - repeats) * e_del - sum_u) / free;
    Ok(RelationCheck {
        ew,
        asymptotic,
        exact,
        relative_gap: (ew - asymptotic).norm() / ew.norm(),
    })
}

/// Splices `γ₂` into `γ₁` at the first vertex of `γ₁` that `γ₂` visits.
/// Both are closed sequences of the same length `k`; the result has length
/// `2k` and weight `w_{γ₁}·w_{γ₂}`.
pub fn concat(g1: &[usize], g2: &[usize]) -> Result<Vec<usize>> {
    if g1.len() != g2.len() || !is_strict_closed(g1) || !is_strict_closed(g2) {
        return Err(Error::InvalidParameter("need two strict closed paths of equal length".into()));
    }
    let k = g1.len() - 1;
    let i1 = (0..=k)
        .find(|&i| g2.contains(&g1[i]))
        .ok_or_else(|| Error::InvalidParameter("paths share no vertex".into()))?;
    let i2 = (0..=k).find(|&i| g2[i] == g1[i1]).unwrap();
    let mut out = Vec::with_capacity(2 * k + 1);
    out.extend_from_slice(&g1[..=i1]);
    for j in i1 + 1..=i1 + k {
        out.push(g2[(i2 + j - i1) % k]);
    }
    out.extend_from_slice(&g1[i1 + 1..]);
    Ok(out)
}

/// Row of the class table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassRow {
    pub class: String,
    pub k: usize,
    pub vertex_count: usize,
    pub is_tree: bool,
    /// Dyck word for trees, empty otherwise.
    pub dyck: String,
}

pub fn class_rows(k: usize) -> Result<Vec<ClassRow>> {
    enumerate_classes(k)?
        .iter()
        .map(|c| {
            Ok(ClassRow {
                class: c.to_string(),
                k,
                vertex_count: c.vertex_count(),
                is_tree: c.is_tree(),
                dyck: if c.is_tree() { dyck_encode(c)?.to_string() } else { String::new() },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionaries::build_heisenberg_dict;
    use crate::spectra::catalan;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};
    use rand::seq::SliceRandom;
    use rand::Rng;
    use std::collections::HashMap;

    fn pc(v: &[usize]) -> PathClass {
        PathClass::new(v.to_vec()).unwrap()
    }

    fn dh(p: u64) -> Dictionary {
        build_heisenberg_dict(Prime::new(p).unwrap()).unwrap()
    }

    #[test]
    fn canonical_form() {
        assert_eq!(canonicalize(&['a', 'b', 'c', 'a', 'b', 'a']), vec![1, 2, 3, 1, 2, 1]);
        assert!(enumerate_classes(5).unwrap().contains(&pc(&[1, 2, 3, 1, 2, 1])));
        assert_eq!(enumerate_classes(2).unwrap(), vec![pc(&[1, 2, 1])]);
        assert!(PathClass::new(vec![1, 1]).is_err());
        assert!(PathClass::new(vec![2, 1, 2]).is_err());
        assert!(PathClass::new(vec![1, 2, 3]).is_err());
        assert_eq!("1-2-3-1".parse::<PathClass>().unwrap(), pc(&[1, 2, 3, 1]));
        assert_eq!(pc(&[1, 2, 3, 1]).to_string().parse::<PathClass>().unwrap(), pc(&[1, 2, 3, 1]));
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for k in 2..=6 {
            let brute: BTreeSet<Vec<usize>> = labeled_paths(k, k).iter().map(|g| canonicalize(g)).collect();
            let gen: BTreeSet<Vec<usize>> = enumerate_classes(k).unwrap().iter().map(|c| c.canonical.clone()).collect();
            assert_eq!(brute, gen, "k={k}");
        }
        assert!(matches!(enumerate_classes(11), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn class_sizes_partition_labeled_paths() {
        for k in 2..=6 {
            for n in 1..=8 {
                let labeled = labeled_paths(n, k).len() as f64;
                let by_class: f64 = enumerate_classes(k).unwrap().iter().map(|c| n_tau(c, n, 5).class_size).sum();
                assert_eq!(labeled, by_class, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn tree_facts() {
        assert!(pc(&[1, 2, 1]).is_tree());
        assert!(!pc(&[1, 2, 3, 1]).is_tree());
        // same edge twice in one direction
        assert!(!pc(&[1, 2, 1, 2, 1]).is_tree());
        for k in 2..=10 {
            for c in enumerate_classes(k).unwrap() {
                if c.is_tree() {
                    assert_eq!(k, 2 * (c.vertex_count() - 1));
                }
                if k % 2 == 1 {
                    assert!(!c.is_tree());
                }
            }
        }
        let f = classify(&pc(&[1, 2, 3, 2, 1]));
        assert_eq!(f.edges, vec![((1, 2), 1, 1), ((2, 3), 1, 1)]);
        assert!(f.connected && f.is_tree);
    }

    #[test]
    fn tree_counts_are_catalan() {
        for m in 1..=5 {
            assert_eq!(tree_classes(2 * m).unwrap().len() as u64, catalan(m as u32).unwrap());
        }
    }

    #[test]
    fn dyck_round_trip() {
        assert_eq!(dyck_encode(&pc(&[1, 2, 1])).unwrap().letters(), &[1, -1]);
        assert_eq!(dyck_encode(&pc(&[1, 2, 3, 1])), Err(Error::NotATree));
        for m in 1..=5 {
            let trees = tree_classes(2 * m).unwrap();
            for t in &trees {
                assert_eq!(&dyck_decode(&dyck_encode(t).unwrap()), t);
            }
            let words: BTreeSet<Vec<i8>> = trees.iter().map(|t| dyck_encode(t).unwrap().0).collect();
            let all: BTreeSet<Vec<i8>> = DyckWord::all(m).into_iter().map(|w| w.0).collect();
            assert_eq!(words, all);
        }
        assert!(DyckWord::new(vec![1, 1, -1]).is_err());
        assert!(DyckWord::new(vec![-1, 1]).is_err());
    }

    #[test]
    fn n_tau_values() {
        let t = n_tau(&pc(&[1, 2, 1]), 7, 13);
        assert_eq!(t.asymptotic, 13.0);
        assert_eq!(n_tau(&pc(&[1, 2, 3, 1, 2, 1]), 10, 5).class_size, 720.0);
        // |V| − 1 − k/2 < 0: n(τ)·p^{−k/2} = n^{|V|−1−k/2} → 0 as n grows with p
        let c = pc(&[1, 2, 1, 2, 1]);
        let scaled = |p: u64| n_tau(&c, support_size(p, 0.3), p).asymptotic / (p as f64).powi(2);
        assert!(scaled(10007) < scaled(101));
        assert!((n_tau(&c, 4, 9).asymptotic - 81.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn trace_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=6 {
            let mut m = CMatrix::zeros(n, n);
            for i in 0..n {
                for j in i + 1..n {
                    let z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
            for k in 2..=5 {
                let mut pow = CMatrix::identity(n);
                for _ in 0..k {
                    pow = pow.matmul(&m);
                }
                assert!((path_sum(&m, k).unwrap() - pow.trace()).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn edge_class_closed_form() {
        for q in [5u64, 7, 11] {
            let g = AtomGram::new(&dh(q));
            let ew = exact_ew(&[1, 2, 1], &g).unwrap();
            let pf = q as f64;
            assert!((ew.re - pf / (pf * pf + pf - 1.0)).abs() < 1e-12);
            assert!(ew.im.abs() < 1e-12);
        }
    }

    #[test]
    fn triangle_closed_form() {
        for q in [5u64, 7] {
            let g = AtomGram::new(&dh(q));
            let ew = exact_ew(&[1, 2, 3, 1], &g).unwrap();
            let pf = q as f64;
            let big_n = pf * (pf + 1.0);
            let want = (pf - 1.0) * pf / ((big_n - 1.0) * (big_n - 2.0));
            assert!((ew - Complex64::new(want, 0.0)).norm() < 1e-12, "p={q} {ew}");
        }
    }

    #[test]
    fn triangle_closed_form_any_union_of_bases() {
        use crate::dictionaries::build_oscillator_dict;
        for d in [dh(7), build_oscillator_dict(Prime::new(5).unwrap()).unwrap()] {
            let g = AtomGram::new(&d);
            let ew = exact_ew(&[1, 2, 3, 1], &g).unwrap();
            assert!((ew.re - triangle_ew(&d)).abs() < 1e-12 && ew.im.abs() < 1e-12);
        }
        assert_eq!(triangle_ew(&Dictionary::single_basis(Prime::new(5).unwrap())), 0.0);
    }

    #[test]
    fn single_basis_expectations_vanish() {
        let g = AtomGram::new(&Dictionary::single_basis(Prime::new(7).unwrap()));
        for c in [&[1usize, 2, 1][..], &[1, 2, 3, 1], &[1, 2, 3, 2, 1]] {
            assert_eq!(exact_ew(c, &g).unwrap(), ZERO);
        }
    }

    #[test]
    fn class_invariance_of_expectation() {
        let g = AtomGram::new(&dh(5));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for c in [pc(&[1, 2, 3, 1]), pc(&[1, 2, 3, 2, 1]), pc(&[1, 2, 1, 3, 1])] {
            let base = exact_ew(c.canonical(), &g).unwrap();
            for _ in 0..5 {
                let mut labels: Vec<usize> = (10..20).collect();
                labels.shuffle(&mut rng);
                let rep: Vec<usize> = c.canonical().iter().map(|&v| labels[v]).collect();
                assert_eq!(exact_ew(&rep, &g).unwrap(), base);
                assert!((exact_ew_labeled(&rep, &g).unwrap() - base).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn budgets() {
        let g = AtomGram::new(&dh(5));
        assert!(matches!(exact_ew(&[1, 2, 3, 4, 5, 1], &g), Err(Error::BudgetExceeded(_))));
        assert_eq!(exact_ew(&[3], &g).unwrap(), ONE);
    }

    #[test]
    fn predicted_moments_small_cases() {
        let d = dh(7);
        let g = AtomGram::new(&d);
        assert_eq!(predicted_moment(&g, 7, 4, 1).unwrap(), ZERO);
        // m_2 = (1/n)(p/n)Σ_{i≠j}|G_ij|² has expectation (p/n)(n−1)E|⟨a,b⟩|²
        let m2 = predicted_moment(&g, 7, 4, 2).unwrap();
        let want = 7.0 / 4.0 * 3.0 * 7.0 / (49.0 + 7.0 - 1.0);
        assert!((m2.re - want).abs() < 1e-12);
    }

    #[test]
    fn completeness_identity() {
        let d = dh(5);
        let r = completeness_identity_check(&pc(&[1, 2, 3, 2, 1]), 3, &d, 100, 1).unwrap();
        assert!(r <= 1e-8, "{r}");
        // v_l ≠ v_r case
        let r = completeness_identity_check(&pc(&[1, 2, 3, 1]), 2, &d, 50, 2).unwrap();
        assert!(r <= 1e-8, "{r}");
        let single = Dictionary::single_basis(Prime::new(7).unwrap());
        let r = completeness_identity_check(&pc(&[1, 2, 3, 1]), 3, &single, 50, 3).unwrap();
        assert!(r <= 1e-10);
        assert_eq!(
            completeness_identity_check(&pc(&[1, 2, 1, 3, 1]), 1, &d, 1, 0),
            Err(Error::VertexNotSingleVisit(1))
        );
    }

    #[test]
    fn surgery_shapes() {
        let s = Surgery::new(&pc(&[1, 2, 3, 2, 1]), 3).unwrap();
        assert_eq!(s.path, vec![2, 3, 2, 1, 2]);
        assert_eq!(s.deleted, vec![2, 1, 2]);
        assert_eq!(s.others(), vec![1]);
        let s = Surgery::new(&pc(&[1, 2, 3, 1]), 1).unwrap();
        assert_eq!(s.path, vec![3, 1, 2, 3]);
        assert_eq!(s.deleted, vec![3, 2, 3]);
        assert_eq!(s.replaced(2), vec![3, 2, 2, 3]);
    }

    #[test]
    fn relation_exact_and_asymptotic() {
        let c = pc(&[1, 2, 3, 2, 1]);
        let mut gaps = Vec::new();
        for q in [5u64, 7, 11] {
            let d = dh(q);
            let g = AtomGram::new(&d);
            let r = relation_check(&c, 3, &d, &g).unwrap();
            assert!((r.exact - r.ew).norm() <= 1e-12 * r.ew.norm().max(1e-300) + 1e-15);
            gaps.push(r.relative_gap);
        }
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        // v_l ≠ v_r
        let d = dh(5);
        let g = AtomGram::new(&d);
        let r = relation_check(&pc(&[1, 2, 3, 1]), 2, &d, &g).unwrap();
        assert!((r.exact - r.ew).norm() < 1e-14);
    }

    #[test]
    fn concat_weight_and_non_injectivity() {
        let d = dh(5);
        let g = AtomGram::new(&d);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let paths = labeled_paths(4, 3);
        for _ in 0..200 {
            let a = paths[rng.random_range(0..paths.len())].clone();
            let b = paths[rng.random_range(0..paths.len())].clone();
            let Ok(c) = concat(&a, &b) else { continue };
            assert_eq!(c.len(), 7);
            assert!(is_strict_closed(&c));
            let atoms = partial_shuffle(&mut rng, g.size(), 4).unwrap();
            let lhs = g.weight(&c, &atoms);
            let rhs = g.weight(&a, &atoms) * g.weight(&b, &atoms);
            assert!((lhs - rhs).norm() < 1e-12);
        }
        // two different pairs, one image
        let x = concat(&[0, 1, 0], &[1, 0, 1]).unwrap();
        let y = concat(&[0, 1, 0], &[0, 1, 0]).unwrap();
        assert_eq!(x, y);
        assert_eq!(x, vec![0, 1, 0, 1, 0]);
        assert!(concat(&[0, 1, 0], &[2, 3, 2]).is_err());
    }

    #[test]
    fn concat_collisions_are_rare_but_present() {
        let paths = labeled_paths(3, 3);
        let mut images: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut pairs = 0;
        for a in &paths {
            for b in &paths {
                if let Ok(c) = concat(a, b) {
                    *images.entry(c).or_default() += 1;
                    pairs += 1;
                }
            }
        }
        assert!(images.len() < pairs);
    }

    #[test]
    fn class_rows_table() {
        let rows = class_rows(4).unwrap();
        assert_eq!(rows.len(), enumerate_classes(4).unwrap().len());
        let t: Vec<_> = rows.iter().filter(|r| r.is_tree).map(|r| r.dyck.as_str()).collect();
        assert_eq!(t, vec!["+-+-", "++--"]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn canonicalize_is_idempotent(raw in proptest::collection::vec(0usize..6, 2..10)) {
            let mut g = raw.clone();
            g.dedup();
            let first = g[0];
            if *g.last().unwrap() != first { g.push(first); }
            if g.len() >= 3 {
                let c = canonicalize(&g);
                prop_assert_eq!(canonicalize(&c), c.clone());
                let pc = PathClass::of(&g).unwrap();
                prop_assert_eq!(pc.canonical(), &c[..]);
                prop_assert!(pc.vertex_count() <= pc.len());
            }
        }
    }
}
