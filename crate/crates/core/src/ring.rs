//! Arithmetic in the quotient ring `F2[X]/(X^p - 1)`.
//!
//! A [`PolyGF2`] stands for one `p x p` binary circulant block: the
//! coefficient vector is the first row of the circulant, and every further
//! row is the previous one shifted cyclically to the right by one position.
//! Ring addition and multiplication then coincide with matrix addition and
//! multiplication of the corresponding circulants.
//!
//! Polynomials are kept in sparse form (sorted list of exponents with
//! coefficient one). A packed bit representation, [`DenseBits`], is used for
//! heavy products, for the extended Euclidean algorithm and as the conversion
//! target of test oracles.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Sparse polynomial in `F2[X]/(X^p - 1)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PolyGF2 {
    p: usize,
    support: Vec<u32>,
}

fn check_modulus(p: usize) -> Result<()> {
    if p == 0 || p % 2 == 0 || p > u32::MAX as usize {
        return Err(Error::InvalidModulus(p));
    }
    Ok(())
}

impl PolyGF2 {
    /// The zero polynomial.
    pub fn zero(p: usize) -> Result<Self> {
        check_modulus(p)?;
        Ok(PolyGF2 { p, support: Vec::new() })
    }

    /// The multiplicative identity.
    pub fn one(p: usize) -> Result<Self> {
        Self::monomial(p, 0)
    }

    /// `X^k` (with `k` reduced mod `p`).
    pub fn monomial(p: usize, k: usize) -> Result<Self> {
        check_modulus(p)?;
        Ok(PolyGF2 { p, support: vec![(k % p) as u32] })
    }

    /// Builds a polynomial as the sum of the monomials `X^e` for `e` in
    /// `exponents`. Repeated exponents cancel in pairs.
    pub fn from_exponents(p: usize, exponents: &[usize]) -> Result<Self> {
        check_modulus(p)?;
        let mut support = Vec::with_capacity(exponents.len());
        for &exp in exponents {
            if exp >= p {
                return Err(Error::ExponentOutOfRange { exp, p });
            }
            support.push(exp as u32);
        }
        Ok(PolyGF2 { p, support: cancel_pairs(support) })
    }

    /// Builds a polynomial from its coefficient vector (`bits[i]` is the
    /// coefficient of `X^i`).
    pub fn from_bits(p: usize, bits: &[u8]) -> Result<Self> {
        check_modulus(p)?;
        if bits.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "coefficient vector of length {} for p = {}",
                bits.len(),
                p
            )));
        }
        let support = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b & 1 == 1)
            .map(|(i, _)| i as u32)
            .collect();
        Ok(PolyGF2 { p, support })
    }

    pub(crate) fn from_sorted_unchecked(p: usize, support: Vec<u32>) -> Self {
        debug_assert!(support.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(support.last().map_or(true, |&e| (e as usize) < p));
        PolyGF2 { p, support }
    }

    pub fn modulus(&self) -> usize {
        self.p
    }

    /// Sorted exponents with non-zero coefficient.
    pub fn support(&self) -> &[u32] {
        &self.support
    }

    /// Hamming weight of the coefficient vector.
    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.support.len() == 1 && self.support[0] == 0
    }

    pub fn coeff(&self, i: usize) -> bool {
        self.support.binary_search(&((i % self.p) as u32)).is_ok()
    }

    /// Coefficient vector of length `p`.
    pub fn to_bits(&self) -> Vec<u8> {
        let mut bits = vec![0u8; self.p];
        for &e in &self.support {
            bits[e as usize] = 1;
        }
        bits
    }

    pub fn to_dense(&self) -> DenseBits {
        let mut d = DenseBits::zeros(self.p);
        for &e in &self.support {
            d.toggle(e as usize);
        }
        d
    }

    fn check_same(&self, other: &PolyGF2) -> Result<()> {
        if self.p != other.p {
            return Err(Error::ModulusMismatch(self.p, other.p));
        }
        Ok(())
    }

    /// Ring addition: symmetric difference of the supports.
    pub fn add(&self, other: &PolyGF2) -> Result<PolyGF2> {
        self.check_same(other)?;
        let (a, b) = (&self.support, &other.support);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Ok(PolyGF2 { p: self.p, support: out })
    }

    /// Ring multiplication (cyclic convolution).
    ///
    /// Uses pair enumeration while `wt(a) * wt(b) <= p`, and a packed
    /// rotate-and-xor convolution above that.
    pub fn mul(&self, other: &PolyGF2) -> Result<PolyGF2> {
        self.mul_with_threshold(other, self.p)
    }

    /// As [`PolyGF2::mul`] with an explicit switch-over point for the dense
    /// path: the dense convolution is used when `wt(a) * wt(b) > dense_above`.
    pub fn mul_with_threshold(&self, other: &PolyGF2, dense_above: usize) -> Result<PolyGF2> {
        self.check_same(other)?;
        let work = self.weight().saturating_mul(other.weight());
        if work <= dense_above {
            Ok(self.mul_sparse(other))
        } else {
            Ok(self.mul_dense(other))
        }
    }

    fn mul_sparse(&self, other: &PolyGF2) -> PolyGF2 {
        let p = self.p as u64;
        let mut terms = Vec::with_capacity(self.weight() * other.weight());
        for &i in &self.support {
            for &j in &other.support {
                terms.push(((i as u64 + j as u64) % p) as u32);
            }
        }
        PolyGF2 { p: self.p, support: cancel_pairs(terms) }
    }

    fn mul_dense(&self, other: &PolyGF2) -> PolyGF2 {
        let (sparse, dense) = if self.weight() <= other.weight() {
            (self, other)
        } else {
            (other, self)
        };
        let d = dense.to_dense();
        let mut acc = DenseBits::zeros(self.p);
        let doubled = d.doubled();
        for &shift in &sparse.support {
            acc.xor_rotated(&doubled, shift as usize);
        }
        acc.to_poly()
    }

    /// `a(X^{-1})`: the circulant of the result is the transpose of the
    /// circulant of `a`.
    pub fn transpose(&self) -> PolyGF2 {
        let p = self.p as u32;
        let mut support: Vec<u32> = self
            .support
            .iter()
            .map(|&e| if e == 0 { 0 } else { p - e })
            .collect();
        support.sort_unstable();
        PolyGF2 { p: self.p, support }
    }

    /// Multiplies by `X^k`.
    pub fn shift(&self, k: usize) -> PolyGF2 {
        let p = self.p;
        let mut support: Vec<u32> = self
            .support
            .iter()
            .map(|&e| ((e as usize + k) % p) as u32)
            .collect();
        support.sort_unstable();
        PolyGF2 { p, support }
    }

    /// Multiplicative inverse via the extended Euclidean algorithm on
    /// `(a, X^p - 1)`.
    pub fn inverse(&self) -> Result<PolyGF2> {
        if self.is_zero() || self.weight() % 2 == 0 {
            return Err(Error::NotInvertible);
        }
        if self.weight() == 1 {
            return Ok(self.transpose());
        }
        let p = self.p;
        // r0 = X^p + 1, r1 = a; track t with t_i * a = r_i (mod X^p + 1).
        let mut r0 = BitPoly::zeros(p + 1);
        r0.set(0);
        r0.set(p);
        let mut r1 = BitPoly::zeros(p + 1);
        for &e in &self.support {
            r1.set(e as usize);
        }
        let mut t0 = BitPoly::zeros(p + 1);
        let mut t1 = BitPoly::zeros(p + 1);
        t1.set(0);

        while let Some(d1) = r1.degree() {
            while let Some(d0) = r0.degree() {
                if d0 < d1 {
                    break;
                }
                let s = d0 - d1;
                r0.xor_shifted(&r1, s);
                t0.xor_shifted(&t1, s);
            }
            std::mem::swap(&mut r0, &mut r1);
            std::mem::swap(&mut t0, &mut t1);
        }
        // r0 now holds the gcd, t0 the Bezout coefficient of a.
        if r0.degree() != Some(0) {
            return Err(Error::NotInvertible);
        }
        let mut bits = DenseBits::zeros(p);
        for i in t0.ones() {
            bits.toggle(i % p);
        }
        let inv = bits.to_poly();
        debug_assert!(self.mul(&inv).map(|x| x.is_one()).unwrap_or(false));
        Ok(inv)
    }

    /// Serializes as `p:<p>;supp:<e0>,<e1>,...`.
    pub fn to_text(&self) -> String {
        let supp: Vec<String> = self.support.iter().map(|e| e.to_string()).collect();
        format!("p:{};supp:{}", self.p, supp.join(","))
    }
}

impl fmt::Debug for PolyGF2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyGF2(p={}, {:?})", self.p, self.support)
    }
}

impl fmt::Display for PolyGF2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for PolyGF2 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed polynomial `{}`", s));
        let s = s.trim();
        let (head, tail) = s.split_once(';').ok_or_else(bad)?;
        let p: usize = head
            .strip_prefix("p:")
            .ok_or_else(bad)?
            .trim()
            .parse()
            .map_err(|_| bad())?;
        let supp = tail.trim().strip_prefix("supp:").ok_or_else(bad)?.trim();
        let exps = if supp.is_empty() {
            Vec::new()
        } else {
            supp.split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?
        };
        let poly = PolyGF2::from_exponents(p, &exps)?;
        if poly.weight() != exps.len() {
            return Err(Error::Parse(format!("repeated exponent in `{}`", s)));
        }
        Ok(poly)
    }
}

/// Sorts and removes pairs of equal exponents.
fn cancel_pairs(mut v: Vec<u32>) -> Vec<u32> {
    v.sort_unstable();
    let mut out = Vec::with_capacity(v.len());
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(v[i]);
        }
        i = j;
    }
    out
}

/// Packed coefficient vector of length `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseBits {
    len: usize,
    words: Vec<u64>,
}

impl DenseBits {
    pub fn zeros(len: usize) -> Self {
        DenseBits { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn toggle(&mut self, i: usize) {
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn to_poly(&self) -> PolyGF2 {
        let mut support = Vec::with_capacity(self.count_ones());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                support.push((wi * 64 + b) as u32);
                w &= w - 1;
            }
        }
        PolyGF2::from_sorted_unchecked(self.len, support)
    }

    /// Two back-to-back copies of the vector plus a padding word, so that any
    /// cyclic window of length `len` can be read with unaligned word loads.
    fn doubled(&self) -> Vec<u64> {
        let p = self.len;
        let mut out = vec![0u64; (2 * p).div_ceil(64) + 1];
        for copy in 0..2 {
            for (wi, &w) in self.words.iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    let b = w.trailing_zeros() as usize;
                    let pos = copy * p + wi * 64 + b;
                    out[pos / 64] |= 1 << (pos % 64);
                    w &= w - 1;
                }
            }
        }
        out
    }

    /// `self ^= rot(v, shift)` where `doubled` comes from [`DenseBits::doubled`]
    /// of `v` and `rot(v, s)[k] = v[(k - s) mod len]`.
    fn xor_rotated(&mut self, doubled: &[u64], shift: usize) {
        let p = self.len;
        let start = (p - shift % p) % p;
        let nwords = self.words.len();
        for w in 0..nwords {
            let off = start + 64 * w;
            let idx = off / 64;
            let sh = off % 64;
            let mut val = doubled[idx] >> sh;
            if sh > 0 {
                val |= doubled[idx + 1] << (64 - sh);
            }
            self.words[w] ^= val;
        }
        let tail = p % 64;
        if tail != 0 {
            self.words[nwords - 1] &= (1u64 << tail) - 1;
        }
    }
}

/// Ordinary (non-cyclic) polynomial over F2, used by the Euclidean algorithm.
struct BitPoly {
    words: Vec<u64>,
}

impl BitPoly {
    fn zeros(bits: usize) -> Self {
        BitPoly { words: vec![0; bits.div_ceil(64) + 1] }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn degree(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, &w)| i * 64 + 63 - w.leading_zeros() as usize)
    }

    /// `self ^= other * X^s`
    fn xor_shifted(&mut self, other: &BitPoly, s: usize) {
        let ws = s / 64;
        let bs = s % 64;
        let top = match other.degree() {
            Some(d) => d / 64,
            None => return,
        };
        for i in 0..=top {
            let w = other.words[i];
            if w == 0 {
                continue;
            }
            let j = i + ws;
            if j < self.words.len() {
                self.words[j] ^= w << bs;
            }
            if bs > 0 && j + 1 < self.words.len() {
                self.words[j + 1] ^= w >> (64 - bs);
            }
        }
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }
}
