//! Exact arithmetic in `F_p` and in the quadratic extension `F_p[√δ]`.
//!
//! Everything here is integer arithmetic reduced mod `p`. Complex numbers only
//! appear through the additive character [`psi`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest modulus accepted. Keeps every product of two residues inside `u64`
/// and bounds the dense `p x p` matrices built elsewhere.
pub const MAX_PRIME: u64 = 1 << 16;

/// An odd prime `p >= 5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Prime(u64);

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl Prime {
    /// Validates `p`. `p = 2` and `p = 3` are rejected: the Weil representation
    /// is not uniquely linearizable over `F_3` and the constructions need `p` odd.
    pub fn new(p: u64) -> Result<Self> {
        if p < 5 || p > MAX_PRIME || !is_prime(p) {
            return Err(Error::InvalidPrime(p));
        }
        Ok(Prime(p))
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn as_usize(self) -> usize {
        self.0 as usize
    }

    /// The residue of `v` as a field element.
    #[inline]
    pub fn elem(self, v: u64) -> Fp {
        Fp {
            value: v % self.0,
            p: self,
        }
    }

    /// Residue of a signed integer.
    #[inline]
    pub fn elem_i64(self, v: i64) -> Fp {
        let p = self.0 as i64;
        Fp {
            value: v.rem_euclid(p) as u64,
            p: self,
        }
    }

    #[inline]
    pub fn zero(self) -> Fp {
        self.elem(0)
    }

    #[inline]
    pub fn one(self) -> Fp {
        self.elem(1)
    }

    /// The inverse of 2, used wherever the constructions divide by two.
    #[inline]
    pub fn half(self) -> Fp {
        Fp {
            value: (self.0 + 1) / 2,
            p: self,
        }
    }

    /// All residues `0..p` in increasing order.
    pub fn elements(self) -> impl Iterator<Item = Fp> {
        (0..self.0).map(move |v| self.elem(v))
    }

    /// The `p` values of [`psi`], indexed by residue.
    pub fn psi_table(self) -> Vec<Complex64> {
        self.elements().map(psi).collect()
    }
}

impl TryFrom<u64> for Prime {
    type Error = Error;

    fn try_from(p: u64) -> Result<Self> {
        Prime::new(p)
    }
}

impl From<Prime> for u64 {
    fn from(p: Prime) -> u64 {
        p.0
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// An element of `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp {
    value: u64,
    p: Prime,
}

impl Fp {
    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> Prime {
        self.p
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn pow(self, mut e: u64) -> Fp {
        let p = self.p.0;
        let mut base = self.value;
        let mut acc = 1 % p;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        Fp {
            value: acc,
            p: self.p,
        }
    }

    /// Multiplicative inverse via Fermat; `None` for zero.
    pub fn inv(self) -> Option<Fp> {
        if self.is_zero() {
            None
        } else {
            Some(self.pow(self.p.0 - 2))
        }
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.value.fmt(f)
    }
}

impl Add for Fp {
    type Output = Fp;
    #[inline]
    fn add(self, rhs: Fp) -> Fp {
        debug_assert_eq!(self.p, rhs.p);
        let s = self.value + rhs.value;
        Fp {
            value: if s >= self.p.0 { s - self.p.0 } else { s },
            p: self.p,
        }
    }
}

impl Sub for Fp {
    type Output = Fp;
    #[inline]
    fn sub(self, rhs: Fp) -> Fp {
        debug_assert_eq!(self.p, rhs.p);
        Fp {
            value: (self.value + self.p.0 - rhs.value) % self.p.0,
            p: self.p,
        }
    }
}

impl Mul for Fp {
    type Output = Fp;
    #[inline]
    fn mul(self, rhs: Fp) -> Fp {
        debug_assert_eq!(self.p, rhs.p);
        Fp {
            value: self.value * rhs.value % self.p.0,
            p: self.p,
        }
    }
}

impl Neg for Fp {
    type Output = Fp;
    #[inline]
    fn neg(self) -> Fp {
        Fp {
            value: (self.p.0 - self.value) % self.p.0,
            p: self.p,
        }
    }
}

/// The additive character `ψ(z) = exp(2πi z / p)`.
#[inline]
pub fn psi(z: Fp) -> Complex64 {
    let theta = std::f64::consts::TAU * z.value as f64 / z.p.0 as f64;
    let (s, c) = theta.sin_cos();
    Complex64::new(c, s)
}

/// The Legendre symbol, computed by Euler's criterion `a^((p-1)/2)`.
pub fn legendre(a: Fp) -> i8 {
    if a.is_zero() {
        return 0;
    }
    let r = a.pow((a.p.0 - 1) / 2);
    if r.value == 1 {
        1
    } else {
        -1
    }
}

/// Smallest positive quadratic non-residue mod `p`.
pub fn find_nonresidue(p: Prime) -> Fp {
    (2..p.get())
        .map(|v| p.elem(v))
        .find(|&a| legendre(a) == -1)
        .expect("every odd prime has a quadratic non-residue")
}

/// `a + b√δ` in `F_p[√δ] ≅ F_{p²}`, with `δ` a fixed non-residue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp2 {
    pub a: Fp,
    pub b: Fp,
    pub delta: Fp,
}

impl Fp2 {
    pub fn new(a: Fp, b: Fp, delta: Fp) -> Result<Self> {
        if legendre(delta) != -1 {
            return Err(Error::NotNonResidue(delta.value(), delta.modulus().get()));
        }
        Ok(Fp2 { a, b, delta })
    }

    pub fn one(delta: Fp) -> Self {
        let p = delta.modulus();
        Fp2 {
            a: p.one(),
            b: p.zero(),
            delta,
        }
    }

    /// `a² − δb²`.
    pub fn norm(self) -> Fp {
        self.a * self.a - self.delta * self.b * self.b
    }

    pub fn is_one(self) -> bool {
        self.a.value() == 1 && self.b.is_zero()
    }

    pub fn pow(self, mut e: u64) -> Fp2 {
        let mut base = self;
        let mut acc = Fp2::one(self.delta);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// Multiplicative order by repeated multiplication (`None` for zero).
    pub fn order(self) -> Option<u64> {
        if self.a.is_zero() && self.b.is_zero() {
            return None;
        }
        let mut x = self;
        let mut k = 1;
        while !x.is_one() {
            x = x * self;
            k += 1;
        }
        Some(k)
    }
}

impl Mul for Fp2 {
    type Output = Fp2;
    fn mul(self, rhs: Fp2) -> Fp2 {
        debug_assert_eq!(self.delta, rhs.delta);
        Fp2 {
            a: self.a * rhs.a + self.delta * self.b * rhs.b,
            b: self.a * rhs.b + self.b * rhs.a,
            delta: self.delta,
        }
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Smallest generator of the cyclic group `F_p^×`.
pub fn primitive_root(p: Prime) -> Fp {
    let order = p.get() - 1;
    let factors = prime_factors(order);
    (2..p.get())
        .map(|v| p.elem(v))
        .find(|g| factors.iter().all(|&q| g.pow(order / q).value() != 1))
        .expect("F_p^x is cyclic")
}

/// Generator of the norm-one subgroup of `F_{p²}^×`, which is cyclic of order
/// `p + 1`. Returns the lexicographically smallest `(a, b)` that generates.
pub fn norm_one_generator(p: Prime, delta: Fp) -> Result<Fp2> {
    if legendre(delta) != -1 {
        return Err(Error::NotNonResidue(delta.value(), p.get()));
    }
    let order = p.get() + 1;
    let factors = prime_factors(order);
    for a in p.elements() {
        for b in p.elements() {
            let x = Fp2 { a, b, delta };
            if x.norm().value() != 1 {
                continue;
            }
            if factors.iter().all(|&q| !x.pow(order / q).is_one()) {
                return Ok(x);
            }
        }
    }
    unreachable!("the norm-one group is cyclic of order p + 1")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn primes_to_31() -> Vec<Prime> {
        [5, 7, 11, 13, 17, 19, 23, 29, 31]
            .into_iter()
            .map(|p| Prime::new(p).unwrap())
            .collect()
    }

    #[test]
    fn rejects_bad_moduli() {
        for p in [0, 1, 2, 3, 4, 9, 15, 21] {
            assert_eq!(Prime::new(p), Err(Error::InvalidPrime(p)));
        }
        assert!(Prime::new(5).is_ok());
    }

    #[test]
    fn psi_basic_values() {
        let p = Prime::new(7).unwrap();
        assert_eq!(psi(p.zero()), Complex64::new(1.0, 0.0));
        for z in p.elements() {
            let prod = psi(z) * psi(-z);
            assert!((prod - 1.0).norm() < 1e-15);
            assert!((psi(z).norm() - 1.0).abs() < 1e-15);
        }
        // geometric sum of the p-th roots of unity
        let s: Complex64 = p.elements().map(psi).sum();
        assert!(s.norm() < 1e-12);
    }

    #[test]
    fn psi_is_a_character() {
        for p in primes_to_31() {
            for x in p.elements() {
                for y in p.elements() {
                    assert!((psi(x) * psi(y) - psi(x + y)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn character_orthogonality() {
        for p in primes_to_31() {
            for a in p.elements() {
                let s: Complex64 = p.elements().map(|z| psi(a * z)).sum();
                let expect = if a.is_zero() { p.get() as f64 } else { 0.0 };
                assert!((s - expect).norm() < 1e-10, "p={p} a={a}");
            }
        }
    }

    #[test]
    fn legendre_small_cases() {
        let p5 = Prime::new(5).unwrap();
        assert_eq!(legendre(p5.elem(1)), 1);
        assert_eq!(legendre(p5.elem(4)), 1);
        assert_eq!(legendre(p5.elem(2)), -1);
        assert_eq!(legendre(p5.elem(0)), 0);
    }

    #[test]
    fn legendre_matches_square_tables() {
        for p in primes_to_31() {
            let squares: std::collections::HashSet<u64> =
                p.elements().filter(|x| !x.is_zero()).map(|x| (x * x).value()).collect();
            for a in p.elements() {
                let expect = if a.is_zero() {
                    0
                } else if squares.contains(&a.value()) {
                    1
                } else {
                    -1
                };
                assert_eq!(legendre(a), expect, "p={p} a={a}");
            }
            for a in p.elements().filter(|x| !x.is_zero()) {
                for b in p.elements().filter(|x| !x.is_zero()) {
                    assert_eq!(legendre(a * b), legendre(a) * legendre(b));
                }
            }
        }
    }

    #[test]
    fn smallest_nonresidues() {
        assert_eq!(find_nonresidue(Prime::new(5).unwrap()).value(), 2);
        assert_eq!(find_nonresidue(Prime::new(7).unwrap()).value(), 3);
        for p in [5, 7, 11, 13, 31] {
            let p = Prime::new(p).unwrap();
            assert_eq!(legendre(find_nonresidue(p)), -1);
        }
    }

    #[test]
    fn inverses_and_half() {
        for p in primes_to_31() {
            assert_eq!((p.half() * p.elem(2)).value(), 1);
            for a in p.elements().filter(|x| !x.is_zero()) {
                assert_eq!((a * a.inv().unwrap()).value(), 1);
            }
            assert_eq!(p.zero().inv(), None);
        }
    }

    #[test]
    fn norm_one_generator_has_order_p_plus_one() {
        for p in primes_to_31() {
            let delta = find_nonresidue(p);
            let g = norm_one_generator(p, delta).unwrap();
            assert_eq!(g.norm().value(), 1);
            assert_eq!(g.order(), Some(p.get() + 1), "p={p}");
            let half = g.pow((p.get() + 1) / 2);
            assert_eq!((half.a.value(), half.b.value()), (p.get() - 1, 0));
        }
    }

    #[test]
    fn primitive_roots() {
        assert_eq!(primitive_root(Prime::new(5).unwrap()).value(), 2);
        assert_eq!(primitive_root(Prime::new(7).unwrap()).value(), 3);
        for p in primes_to_31() {
            let g = primitive_root(p);
            let powers: std::collections::HashSet<u64> = (0..p.get() - 1).map(|k| g.pow(k).value()).collect();
            assert_eq!(powers.len() as u64, p.get() - 1);
        }
    }

    #[test]
    fn norm_one_generator_rejects_residue() {
        let p = Prime::new(7).unwrap();
        assert!(norm_one_generator(p, p.elem(2)).is_err());
    }
}
