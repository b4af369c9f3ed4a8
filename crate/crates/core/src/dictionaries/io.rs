//! Little-endian binary format for dictionaries.
//!
//! ```text
//! magic       8 bytes  "SRIPDCT1"
//! version     u32      1
//! p           u32
//! kind        u8       0 = heisenberg, 1 = oscillator, 2 = extended oscillator
//! bases       u32
//! mu          f64
//! per basis:  u32 label length, UTF-8 label, then p atoms of p (f64 re, f64 im)
//! ```

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{BasisLabel, DictKind, Dictionary, OrthonormalBasis};
use crate::error::{Error, Result};
use crate::ffield::Prime;

pub const FILE_MAGIC: &[u8; 8] = b"SRIPDCT1";
pub const FILE_VERSION: u32 = 1;

/// Orthonormality tolerance applied to every decoded basis.
const DECODE_TOL: f64 = 1e-8;

pub fn encode(dict: &Dictionary) -> Vec<u8> {
    let p = dict.p().as_usize();
    let mut out = Vec::with_capacity(29 + dict.basis_count() * (16 + 16 * p * p));
    out.extend_from_slice(FILE_MAGIC);
    out.extend_from_slice(&FILE_VERSION.to_le_bytes());
    out.extend_from_slice(&(dict.p().get() as u32).to_le_bytes());
    out.push(dict.kind().code());
    out.extend_from_slice(&(dict.basis_count() as u32).to_le_bytes());
    out.extend_from_slice(&dict.mu().to_le_bytes());
    for b in dict.bases() {
        let label = b.label.to_string();
        out.extend_from_slice(&(label.len() as u32).to_le_bytes());
        out.extend_from_slice(label.as_bytes());
        for atom in &b.atoms {
            for z in atom {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Dictionary> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if c.take(8)? != FILE_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = c.u32()?;
    if version != FILE_VERSION {
        return Err(Error::VersionMismatch(version));
    }
    let p = Prime::new(c.u32()? as u64).map_err(|e| Error::Format(e.to_string()))?;
    let kind = c.u8()?;
    let kind = DictKind::from_code(kind).ok_or_else(|| Error::Format(format!("unknown kind {kind}")))?;
    let count = c.u32()? as usize;
    let mu = c.f64()?;
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::Format(format!("bad mu {mu}")));
    }
    let n = p.as_usize();
    // each basis needs at least this many bytes; reject absurd counts up front
    let min_basis = 4 + 16 * n * n;
    if count.saturating_mul(min_basis) > bytes.len() {
        return Err(Error::Format(format!("basis count {count} exceeds file size")));
    }
    let mut bases = Vec::with_capacity(count);
    for _ in 0..count {
        let len = c.u32()? as usize;
        let label = std::str::from_utf8(c.take(len)?).map_err(|_| Error::Format("label is not UTF-8".into()))?;
        let label = BasisLabel::parse(label, p)?;
        let mut atoms = Vec::with_capacity(n);
        for _ in 0..n {
            let mut atom = Vec::with_capacity(n);
            for _ in 0..n {
                let re = c.f64()?;
                let im = c.f64()?;
                if !re.is_finite() || !im.is_finite() {
                    return Err(Error::IntegrityFailure("non-finite entry".into()));
                }
                atom.push(Complex64::new(re, im));
            }
            atoms.push(atom);
        }
        let basis = OrthonormalBasis { label, atoms };
        let dev = basis.gram_deviation();
        if !(dev <= DECODE_TOL) {
            return Err(Error::IntegrityFailure(format!(
                "basis {} deviates from orthonormal by {dev:e}",
                basis.label
            )));
        }
        bases.push(basis);
    }
    if c.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Ok(Dictionary { p, kind, mu, bases })
}

pub fn write_to(dict: &Dictionary, mut w: impl Write) -> std::io::Result<()> {
    w.write_all(&encode(dict))
}

pub fn read_from(mut r: impl Read) -> std::result::Result<Dictionary, Box<dyn std::error::Error + Send + Sync>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    Ok(decode(&buf)?)
}
