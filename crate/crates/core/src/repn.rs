//! Explicit matrices for the Heisenberg representation `π`, the Weil
//! representation `ρ` of `SL₂(F_p)` and the Heisenberg-Weil representation
//! `τ(g, h) = ρ(g)π(h)` of the Jacobi group, all acting on `C(F_p) = C^p`.
//!
//! `ρ` is only determined up to a unit scalar by the intertwining condition
//! `ρ(g)π(h)ρ(g)⁻¹ = π(g·h)`. The matrices built here satisfy that condition
//! exactly and leave the scalar arbitrary; every consumer downstream
//! (eigenspaces, coherence, Gram matrices) is insensitive to it.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffield::{legendre, Fp, Prime};
use crate::linalg::CMatrix;

/// `(v, z)` with `v = (τ, w) ∈ F_p²` and central coordinate `z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HeisenbergElement {
    pub tau: Fp,
    pub w: Fp,
    pub z: Fp,
}

/// The symplectic form `ω((τ,w),(τ',w')) = τw' − wτ'`.
pub fn symplectic_form(v: (Fp, Fp), u: (Fp, Fp)) -> Fp {
    v.0 * u.1 - v.1 * u.0
}

impl HeisenbergElement {
    pub fn new(tau: Fp, w: Fp, z: Fp) -> Self {
        HeisenbergElement { tau, w, z }
    }

    pub fn from_u64(p: Prime, tau: u64, w: u64, z: u64) -> Self {
        Self::new(p.elem(tau), p.elem(w), p.elem(z))
    }

    pub fn identity(p: Prime) -> Self {
        Self::new(p.zero(), p.zero(), p.zero())
    }

    pub fn modulus(&self) -> Prime {
        self.tau.modulus()
    }

    pub fn vector(&self) -> (Fp, Fp) {
        (self.tau, self.w)
    }

    /// `(v,z)·(v',z') = (v+v', z+z'+½ω(v,v'))`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let half = self.modulus().half();
        Self::new(
            self.tau + rhs.tau,
            self.w + rhs.w,
            self.z + rhs.z + half * symplectic_form(self.vector(), rhs.vector()),
        )
    }

    pub fn inverse(&self) -> Self {
        Self::new(-self.tau, -self.w, -self.z)
    }
}

impl fmt::Display for HeisenbergElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.tau, self.w, self.z)
    }
}

/// `[[a, b], [c, d]]` with `ad − bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SL2Element {
    a: Fp,
    b: Fp,
    c: Fp,
    d: Fp,
}

impl SL2Element {
    pub fn new(a: Fp, b: Fp, c: Fp, d: Fp) -> Result<Self> {
        let det = a * d - b * c;
        if det.value() != 1 {
            return Err(Error::NotUnimodular {
                a: a.value(),
                b: b.value(),
                c: c.value(),
                d: d.value(),
                det: det.value(),
                p: a.modulus().get(),
            });
        }
        Ok(SL2Element { a, b, c, d })
    }

    pub fn from_u64(p: Prime, a: u64, b: u64, c: u64, d: u64) -> Result<Self> {
        Self::new(p.elem(a), p.elem(b), p.elem(c), p.elem(d))
    }

    pub fn identity(p: Prime) -> Self {
        SL2Element {
            a: p.one(),
            b: p.zero(),
            c: p.zero(),
            d: p.one(),
        }
    }

    /// `diag(a, a⁻¹)`.
    pub fn diagonal(a: Fp) -> Result<Self> {
        let inv = a.inv().ok_or(Error::ZeroScaling)?;
        let p = a.modulus();
        Ok(SL2Element {
            a,
            b: p.zero(),
            c: p.zero(),
            d: inv,
        })
    }

    /// `[[1, 0], [u, 1]]`.
    pub fn lower(u: Fp) -> Self {
        let p = u.modulus();
        SL2Element {
            a: p.one(),
            b: p.zero(),
            c: u,
            d: p.one(),
        }
    }

    /// The Weyl element `[[0, 1], [−1, 0]]`.
    pub fn weyl(p: Prime) -> Self {
        SL2Element {
            a: p.zero(),
            b: p.one(),
            c: -p.one(),
            d: p.zero(),
        }
    }

    pub fn entries(&self) -> [Fp; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Entries as integers, used as a total order for canonical sorting.
    pub fn key(&self) -> [u64; 4] {
        [self.a.value(), self.b.value(), self.c.value(), self.d.value()]
    }

    pub fn modulus(&self) -> Prime {
        self.a.modulus()
    }

    pub fn is_identity(&self) -> bool {
        self.key() == [1, 0, 0, 1]
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        SL2Element {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn inverse(&self) -> Self {
        SL2Element {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = *self;
        let mut acc = Self::identity(self.modulus());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn order(&self) -> u64 {
        let mut x = *self;
        let mut k = 1;
        while !x.is_identity() {
            x = x.mul(self);
            k += 1;
        }
        k
    }

    /// `gv = (aτ + bw, cτ + dw)`.
    pub fn apply(&self, v: (Fp, Fp)) -> (Fp, Fp) {
        (self.a * v.0 + self.b * v.1, self.c * v.0 + self.d * v.1)
    }

    /// Action on the Heisenberg group, `g(v, z) = (gv, z)`.
    pub fn act(&self, h: &HeisenbergElement) -> HeisenbergElement {
        let (tau, w) = self.apply(h.vector());
        HeisenbergElement::new(tau, w, h.z)
    }

    /// All `p(p² − 1)` elements of `SL₂(F_p)` in lexicographic order of `(a, b, c, d)`.
    pub fn all(p: Prime) -> Vec<SL2Element> {
        let mut out = Vec::with_capacity((p.get() * (p.get() * p.get() - 1)) as usize);
        for a in p.elements() {
            for b in p.elements() {
                for c in p.elements() {
                    if let Some(ai) = a.inv() {
                        let d = (p.one() + b * c) * ai;
                        out.push(SL2Element { a, b, c, d });
                    } else if !b.is_zero() && (b * c).value() == p.get() - 1 {
                        // a = 0 forces bc = −1, d free
                        for d in p.elements() {
                            out.push(SL2Element { a, b, c, d });
                        }
                    }
                }
            }
        }
        out.sort_by_key(|g| g.key());
        out
    }
}

impl fmt::Display for SL2Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}

/// An element `(g, h)` of the Jacobi group `SL₂ ⋉ H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JacobiElement {
    pub g: SL2Element,
    pub h: HeisenbergElement,
}

impl JacobiElement {
    /// `(g₁,h₁)(g₂,h₂) = (g₁g₂, g₂⁻¹(h₁)·h₂)`, matching `τ(g,h) = ρ(g)π(h)`.
    pub fn mul(&self, rhs: &Self) -> Self {
        JacobiElement {
            g: self.g.mul(&rhs.g),
            h: rhs.g.inverse().act(&self.h).mul(&rhs.h),
        }
    }
}

/// The three generator families of the Weil representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeilGenerator {
    /// `S_a f(t) = σ(a) f(a⁻¹t)`, realizing `diag(a, a⁻¹)`.
    Scaling(u64),
    /// `M_u f(t) = ψ(−(u/2)t²) f(t)`, realizing `[[1,0],[u,1]]`.
    Chirp(u64),
    /// `F f(w) = p^{-1/2} Σ_t ψ(wt) f(t)`, realizing the Weyl element.
    Fourier,
}

/// Which group element an operator realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Heisenberg(HeisenbergElement),
    Weil(SL2Element),
    Jacobi(SL2Element, HeisenbergElement),
}

/// A `p x p` unitary together with the group element it represents.
#[derive(Debug, Clone)]
pub struct UnitaryOp {
    pub matrix: CMatrix,
    pub provenance: Provenance,
}

/// `ψ(−(u/2)x²)`, the chirp factor.
#[inline]
fn chirp(table: &[Complex64], p: Prime, u: Fp, x: Fp) -> Complex64 {
    let e = -(u * p.half() * x * x);
    table[e.value() as usize]
}

/// `π(τ, w, z) = ψ(z − ½τw)·π(τ,0)·π(0,w)`, built entrywise:
/// `π(h)f(s) = ψ(z − ½τw + w(s+τ)) f(s+τ)`.
pub fn heis_op(h: &HeisenbergElement) -> UnitaryOp {
    let p = h.modulus();
    let n = p.as_usize();
    let table = p.psi_table();
    let base = h.z - p.half() * h.tau * h.w;
    let mut m = CMatrix::zeros(n, n);
    for s in p.elements() {
        let shifted = s + h.tau;
        let phase = base + h.w * shifted;
        m[(s.value() as usize, shifted.value() as usize)] = table[phase.value() as usize];
    }
    UnitaryOp {
        matrix: m,
        provenance: Provenance::Heisenberg(*h),
    }
}

/// The exact matrix of a Weil generator.
pub fn weil_gen(p: Prime, kind: WeilGenerator) -> Result<UnitaryOp> {
    let n = p.as_usize();
    let table = p.psi_table();
    match kind {
        WeilGenerator::Scaling(a) => {
            let a = p.elem(a);
            let g = SL2Element::diagonal(a)?;
            Ok(UnitaryOp {
                matrix: scaling_matrix(p, a),
                provenance: Provenance::Weil(g),
            })
        }
        WeilGenerator::Chirp(u) => {
            let u = p.elem(u);
            let diag: Vec<Complex64> = p.elements().map(|t| chirp(&table, p, u, t)).collect();
            Ok(UnitaryOp {
                matrix: CMatrix::diagonal(&diag),
                provenance: Provenance::Weil(SL2Element::lower(u)),
            })
        }
        WeilGenerator::Fourier => {
            let scale = 1.0 / (n as f64).sqrt();
            let m = CMatrix::from_fn(n, n, |w, t| table[(w * t) % n] * scale);
            Ok(UnitaryOp {
                matrix: m,
                provenance: Provenance::Weil(SL2Element::weyl(p)),
            })
        }
    }
}

fn scaling_matrix(p: Prime, a: Fp) -> CMatrix {
    let n = p.as_usize();
    let ai = a.inv().expect("nonzero scaling");
    let sigma = legendre(a) as f64;
    let mut m = CMatrix::zeros(n, n);
    for s in p.elements() {
        m[(s.value() as usize, (ai * s).value() as usize)] = Complex64::new(sigma, 0.0);
    }
    m
}

/// `ρ(g)` up to a global unit scalar, through the factorization
///
/// - `b ≠ 0`: `g = diag(b, b⁻¹)·u(bd)·w·u(a/b)`, so `ρ(g) = S_b M_{bd} F M_{a/b}`;
/// - `b = 0`: `g = u(c/a)·diag(a, a⁻¹)`, so `ρ(g) = M_{c/a} S_a`,
///
/// where `u(s) = [[1,0],[s,1]]` and `w` is the Weyl element. Entries are
/// written directly from the closed forms of the factors.
pub fn weil_op(g: &SL2Element) -> UnitaryOp {
    let p = g.modulus();
    let n = p.as_usize();
    let table = p.psi_table();
    let [a, b, c, d] = g.entries();
    let matrix = if let Some(b_inv) = b.inv() {
        let sigma = legendre(b) as f64;
        let u_left = b * d;
        let u_right = a * b_inv;
        let scale = sigma / (n as f64).sqrt();
        let mut m = CMatrix::zeros(n, n);
        for s in p.elements() {
            let r = b_inv * s;
            let left = chirp(&table, p, u_left, r) * scale;
            for t in p.elements() {
                let f = table[(r * t).value() as usize];
                m[(s.value() as usize, t.value() as usize)] = left * f * chirp(&table, p, u_right, t);
            }
        }
        m
    } else {
        let a_inv = a.inv().expect("b = 0 and det = 1 force a != 0");
        let sigma = legendre(a) as f64;
        let u = c * a_inv;
        let mut m = CMatrix::zeros(n, n);
        for s in p.elements() {
            m[(s.value() as usize, (a_inv * s).value() as usize)] = chirp(&table, p, u, s) * sigma;
        }
        m
    };
    UnitaryOp {
        matrix,
        provenance: Provenance::Weil(*g),
    }
}

/// `τ(g, h) = ρ(g)·π(h)`.
pub fn jacobi_op(g: &SL2Element, h: &HeisenbergElement) -> Result<UnitaryOp> {
    if g.modulus() != h.modulus() {
        return Err(Error::InvalidParameter(
            "group elements over different fields".into(),
        ));
    }
    let rho = weil_op(g);
    let pi = heis_op(h);
    // π(h) is a monomial matrix: column j of ρπ is a scaled column of ρ.
    let n = g.modulus().as_usize();
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        let col = (0..n).find(|&j| pi.matrix[(i, j)].norm() > 0.5).expect("monomial row");
        let coef = pi.matrix[(i, col)];
        for r in 0..n {
            m[(r, col)] += rho.matrix[(r, i)] * coef;
        }
    }
    Ok(UnitaryOp {
        matrix: m,
        provenance: Provenance::Jacobi(*g, *h),
    })
}
