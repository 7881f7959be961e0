//! Exact scalar rings: prime fields, small extension fields, the rationals,
//! the integers and the residue rings `Z/m`.
//!
//! A [`Ring`] is a cheap, shareable handle. Elements are plain [`Scalar`]
//! values interpreted by the ring that owns them; matrices carry the ring, so
//! ring agreement is checked once per matrix operation rather than per entry.
//! [`Element`] pairs a value with its ring for callers that want checked
//! scalar arithmetic.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Largest supported extension degree.
pub const MAX_EXTENSION_DEGREE: u32 = 4;

/// Serializable description of a scalar ring.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RingSpec {
    PrimeField {
        p: u64,
    },
    ExtensionField {
        p: u64,
        k: u32,
        /// Coefficients of the monic modulus, low degree first (length `k + 1`).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modulus: Option<Vec<u64>>,
    },
    Rationals,
    Integers,
    IntegersMod {
        m: u64,
    },
}

impl RingSpec {
    /// Parses either the JSON form or a short form such as `gf5`, `gf2^2`,
    /// `zmod4`, `q`, `z`.
    pub fn parse(text: &str) -> Result<RingSpec> {
        let t = text.trim();
        if t.starts_with('{') {
            return Ok(serde_json::from_str(t)?);
        }
        let lower = t.to_ascii_lowercase();
        let num = |s: &str| -> Result<u64> {
            s.trim()
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad ring spec `{text}`")))
        };
        match lower.as_str() {
            "q" | "rationals" => return Ok(RingSpec::Rationals),
            "z" | "integers" => return Ok(RingSpec::Integers),
            _ => {}
        }
        if let Some(rest) = lower.strip_prefix("gf") {
            let rest = rest.trim_start_matches('(').trim_end_matches(')');
            if let Some((p, k)) = rest.split_once('^') {
                return Ok(RingSpec::ExtensionField {
                    p: num(p)?,
                    k: num(k)? as u32,
                    modulus: None,
                });
            }
            return Ok(RingSpec::PrimeField { p: num(rest)? });
        }
        for prefix in ["zmod", "z/", "z_"] {
            if let Some(rest) = lower.strip_prefix(prefix) {
                return Ok(RingSpec::IntegersMod { m: num(rest)? });
            }
        }
        Err(Error::Parse(format!("bad ring spec `{text}`")))
    }
}

/// A ring element. The variant in use is fixed by the owning ring:
/// residues for finite rings (extension elements are packed base-`p`
/// coefficient vectors), big integers for `Z`, reduced fractions for `Q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    Res(u64),
    Int(BigInt),
    Rat(Box<BigRational>),
}

#[derive(Debug)]
enum Kind {
    Prime { p: u64 },
    Ext { p: u64, k: u32, modulus: Vec<u64>, order: u64 },
    Rationals,
    Integers,
    Mod { m: u64 },
}

#[derive(Debug)]
struct RingInner {
    spec: RingSpec,
    kind: Kind,
}

/// Handle to a scalar ring. Cloning is cheap.
#[derive(Clone)]
pub struct Ring {
    inner: Arc<RingInner>,
}

impl PartialEq for Ring {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.spec == other.inner.spec
    }
}

impl Eq for Ring {}

impl fmt::Debug for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ring({})", self.name())
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Deterministic Miller-Rabin, exact for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    let (s, carry) = a.overflowing_add(b);
    if carry || s >= m {
        s.wrapping_sub(m)
    } else {
        s
    }
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let g = BigInt::from(a).extended_gcd(&BigInt::from(m));
    if !g.gcd.is_one() {
        return None;
    }
    let x = g.x.mod_floor(&BigInt::from(m));
    x.to_u64()
}

/// Polynomial helpers over GF(p), coefficients low degree first.
mod poly {
    use super::{add_mod, inv_mod, mul_mod};

    pub fn trim(mut a: Vec<u64>) -> Vec<u64> {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    pub fn rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let b = trim(b.to_vec());
        let mut r = trim(a.to_vec());
        let lead_inv = inv_mod(*b.last().expect("nonzero divisor"), p).expect("prime field");
        while r.len() >= b.len() {
            let shift = r.len() - b.len();
            let coef = mul_mod(*r.last().unwrap(), lead_inv, p);
            for (i, &bi) in b.iter().enumerate() {
                let sub = mul_mod(coef, bi, p);
                r[shift + i] = add_mod(r[shift + i], p - sub, p);
            }
            r = trim(r);
        }
        r
    }

    /// Monic polynomials of exact degree `d`.
    pub fn monic_of_degree(d: usize, p: u64) -> impl Iterator<Item = Vec<u64>> {
        let count = p.pow(d as u32);
        (0..count).map(move |mut idx| {
            let mut c = Vec::with_capacity(d + 1);
            for _ in 0..d {
                c.push(idx % p);
                idx /= p;
            }
            c.push(1);
            c
        })
    }

    pub fn is_irreducible(f: &[u64], p: u64) -> bool {
        let deg = f.len() - 1;
        if deg == 0 {
            return false;
        }
        for d in 1..=deg / 2 {
            if monic_of_degree(d, p).any(|g| rem(f, &g, p).is_empty()) {
                return false;
            }
        }
        true
    }
}

impl Ring {
    pub fn new(spec: &RingSpec) -> Result<Ring> {
        let (spec, kind) = match spec {
            RingSpec::PrimeField { p } => {
                if !is_prime(*p) {
                    return Err(Error::NotPrime(*p));
                }
                (spec.clone(), Kind::Prime { p: *p })
            }
            RingSpec::ExtensionField { p, k, modulus } => {
                let (p, k) = (*p, *k);
                if !is_prime(p) {
                    return Err(Error::NotPrime(p));
                }
                if k == 0 || k > MAX_EXTENSION_DEGREE {
                    return Err(Error::UnsupportedRing(format!(
                        "extension degree {k} outside 1..={MAX_EXTENSION_DEGREE}"
                    )));
                }
                let order = p
                    .checked_pow(k)
                    .filter(|&q| q <= u32::MAX as u64)
                    .ok_or_else(|| Error::UnsupportedRing(format!("GF({p}^{k}) too large")))?;
                let modulus = match modulus {
                    Some(m) => {
                        let ok = m.len() == k as usize + 1
                            && m.last() == Some(&1)
                            && m.iter().all(|&c| c < p)
                            && poly::is_irreducible(m, p);
                        if !ok {
                            return Err(Error::BadModulus(m.clone()));
                        }
                        m.clone()
                    }
                    None => poly::monic_of_degree(k as usize, p)
                        .find(|f| poly::is_irreducible(f, p))
                        .expect("irreducible polynomials exist in every degree"),
                };
                let spec = RingSpec::ExtensionField { p, k, modulus: Some(modulus.clone()) };
                (spec, Kind::Ext { p, k, modulus, order })
            }
            RingSpec::Rationals => (spec.clone(), Kind::Rationals),
            RingSpec::Integers => (spec.clone(), Kind::Integers),
            RingSpec::IntegersMod { m } => {
                if *m < 2 {
                    return Err(Error::UnsupportedRing(format!("modulus {m} < 2")));
                }
                if *m > (1u64 << 62) {
                    return Err(Error::UnsupportedRing(format!("modulus {m} too large")));
                }
                (spec.clone(), Kind::Mod { m: *m })
            }
        };
        Ok(Ring { inner: Arc::new(RingInner { spec, kind }) })
    }

    pub fn prime_field(p: u64) -> Result<Ring> {
        Ring::new(&RingSpec::PrimeField { p })
    }

    pub fn extension_field(p: u64, k: u32) -> Result<Ring> {
        Ring::new(&RingSpec::ExtensionField { p, k, modulus: None })
    }

    pub fn rationals() -> Ring {
        Ring::new(&RingSpec::Rationals).unwrap()
    }

    pub fn integers() -> Ring {
        Ring::new(&RingSpec::Integers).unwrap()
    }

    pub fn integers_mod(m: u64) -> Result<Ring> {
        Ring::new(&RingSpec::IntegersMod { m })
    }

    /// Normalized spec (extension moduli are always filled in).
    pub fn spec(&self) -> &RingSpec {
        &self.inner.spec
    }

    pub fn name(&self) -> String {
        match &self.inner.kind {
            Kind::Prime { p } => format!("GF({p})"),
            Kind::Ext { p, k, .. } => format!("GF({p}^{k})"),
            Kind::Rationals => "Q".into(),
            Kind::Integers => "Z".into(),
            Kind::Mod { m } => format!("Z/{m}"),
        }
    }

    /// 0 for `Z` and `Q`.
    pub fn characteristic(&self) -> u64 {
        match &self.inner.kind {
            Kind::Prime { p } | Kind::Ext { p, .. } => *p,
            Kind::Mod { m } => *m,
            Kind::Rationals | Kind::Integers => 0,
        }
    }

    pub fn cardinality(&self) -> Option<u64> {
        match &self.inner.kind {
            Kind::Prime { p } => Some(*p),
            Kind::Ext { order, .. } => Some(*order),
            Kind::Mod { m } => Some(*m),
            Kind::Rationals | Kind::Integers => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.cardinality().is_some()
    }

    pub fn is_field(&self) -> bool {
        matches!(self.inner.kind, Kind::Prime { .. } | Kind::Ext { .. } | Kind::Rationals)
    }

    pub fn is_integers(&self) -> bool {
        matches!(self.inner.kind, Kind::Integers)
    }

    /// `Some(m)` for `Z/m`.
    pub fn residue_modulus(&self) -> Option<u64> {
        match self.inner.kind {
            Kind::Mod { m } => Some(m),
            _ => None,
        }
    }

    /// Degree over the prime field; 1 for everything but `GF(p^k)`.
    pub fn extension_degree(&self) -> usize {
        match &self.inner.kind {
            Kind::Ext { k, .. } => *k as usize,
            _ => 1,
        }
    }

    /// The ring additive maps are linear over: `GF(p)` for `GF(p^k)`, the
    /// ring itself otherwise.
    pub fn prime_ring(&self) -> Ring {
        match &self.inner.kind {
            Kind::Ext { p, .. } => Ring::prime_field(*p).unwrap(),
            _ => self.clone(),
        }
    }

    pub fn zero(&self) -> Scalar {
        match self.inner.kind {
            Kind::Rationals => Scalar::Rat(Box::new(BigRational::zero())),
            Kind::Integers => Scalar::Int(BigInt::zero()),
            _ => Scalar::Res(0),
        }
    }

    pub fn one(&self) -> Scalar {
        self.from_i64(1)
    }

    pub fn from_i64(&self, v: i64) -> Scalar {
        self.from_bigint(&BigInt::from(v))
    }

    /// Image of an integer under the unique ring map from `Z`.
    pub fn from_bigint(&self, v: &BigInt) -> Scalar {
        let reduce = |m: u64| v.mod_floor(&BigInt::from(m)).to_u64().unwrap();
        match &self.inner.kind {
            Kind::Prime { p } | Kind::Ext { p, .. } => Scalar::Res(reduce(*p)),
            Kind::Mod { m } => Scalar::Res(reduce(*m)),
            Kind::Integers => Scalar::Int(v.clone()),
            Kind::Rationals => Scalar::Rat(Box::new(BigRational::from_integer(v.clone()))),
        }
    }

    /// Integer representative: residues in `[0, m)` for `GF(p)` and `Z/m`,
    /// the value itself for `Z`. `None` for `Q` and extension fields.
    pub fn to_bigint(&self, x: &Scalar) -> Option<BigInt> {
        match (&self.inner.kind, x) {
            (Kind::Prime { .. } | Kind::Mod { .. }, Scalar::Res(r)) => Some(BigInt::from(*r)),
            (Kind::Integers, Scalar::Int(v)) => Some(v.clone()),
            _ => None,
        }
    }

    /// Builds a rational; only meaningful for `Q` and rings where `den` is a unit.
    pub fn fraction(&self, num: i64, den: i64) -> Result<Scalar> {
        let d = self.from_i64(den);
        let inv = self
            .inv(&d)
            .ok_or_else(|| Error::NotInvertible(format!("{den} in {}", self.name())))?;
        Ok(self.mul(&self.from_i64(num), &inv))
    }

    pub fn is_zero(&self, x: &Scalar) -> bool {
        match x {
            Scalar::Res(r) => *r == 0,
            Scalar::Int(v) => v.is_zero(),
            Scalar::Rat(q) => q.is_zero(),
        }
    }

    pub fn is_one(&self, x: &Scalar) -> bool {
        *x == self.one()
    }

    pub fn add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match (&self.inner.kind, a, b) {
            (Kind::Prime { p }, Scalar::Res(x), Scalar::Res(y)) => Scalar::Res(add_mod(*x, *y, *p)),
            (Kind::Mod { m }, Scalar::Res(x), Scalar::Res(y)) => Scalar::Res(add_mod(*x, *y, *m)),
            (Kind::Ext { p, k, .. }, Scalar::Res(x), Scalar::Res(y)) => {
                let (mut x, mut y, p) = (*x, *y, *p);
                let mut out = 0;
                let mut place = 1;
                for _ in 0..*k {
                    out += add_mod(x % p, y % p, p) * place;
                    x /= p;
                    y /= p;
                    place *= p;
                }
                Scalar::Res(out)
            }
            (Kind::Integers, Scalar::Int(x), Scalar::Int(y)) => Scalar::Int(x + y),
            (Kind::Rationals, Scalar::Rat(x), Scalar::Rat(y)) => Scalar::Rat(Box::new(&**x + &**y)),
            _ => panic!("scalar does not belong to {}", self.name()),
        }
    }

    pub fn neg(&self, a: &Scalar) -> Scalar {
        match (&self.inner.kind, a) {
            (Kind::Prime { p }, Scalar::Res(x)) => Scalar::Res(if *x == 0 { 0 } else { p - x }),
            (Kind::Mod { m }, Scalar::Res(x)) => Scalar::Res(if *x == 0 { 0 } else { m - x }),
            (Kind::Ext { p, .. }, Scalar::Res(_)) => {
                let c: Vec<u64> = self.ext_coeffs(a).iter().map(|&c| if c == 0 { 0 } else { p - c }).collect();
                Scalar::Res(self.ext_pack(&c))
            }
            (Kind::Integers, Scalar::Int(x)) => Scalar::Int(-x),
            (Kind::Rationals, Scalar::Rat(x)) => Scalar::Rat(Box::new(-&**x)),
            _ => panic!("scalar does not belong to {}", self.name()),
        }
    }

    pub fn sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match (&self.inner.kind, a, b) {
            (Kind::Prime { p }, Scalar::Res(x), Scalar::Res(y)) => Scalar::Res(mul_mod(*x, *y, *p)),
            (Kind::Mod { m }, Scalar::Res(x), Scalar::Res(y)) => Scalar::Res(mul_mod(*x, *y, *m)),
            (Kind::Ext { p, k, modulus, .. }, Scalar::Res(_), Scalar::Res(_)) => {
                let (x, y) = (self.ext_coeffs(a), self.ext_coeffs(b));
                let k = *k as usize;
                let mut prod = vec![0u64; 2 * k - 1];
                for (i, &xi) in x.iter().enumerate() {
                    if xi == 0 {
                        continue;
                    }
                    for (j, &yj) in y.iter().enumerate() {
                        prod[i + j] = add_mod(prod[i + j], mul_mod(xi, yj, *p), *p);
                    }
                }
                let r = poly::rem(&prod, modulus, *p);
                Scalar::Res(self.ext_pack(&r))
            }
            (Kind::Integers, Scalar::Int(x), Scalar::Int(y)) => Scalar::Int(x * y),
            (Kind::Rationals, Scalar::Rat(x), Scalar::Rat(y)) => Scalar::Rat(Box::new(&**x * &**y)),
            _ => panic!("scalar does not belong to {}", self.name()),
        }
    }

    /// Multiplicative inverse, `None` when `a` is not a unit.
    pub fn inv(&self, a: &Scalar) -> Option<Scalar> {
        if self.is_zero(a) {
            return None;
        }
        match (&self.inner.kind, a) {
            (Kind::Prime { p }, Scalar::Res(x)) => inv_mod(*x, *p).map(Scalar::Res),
            (Kind::Mod { m }, Scalar::Res(x)) => inv_mod(*x, *m).map(Scalar::Res),
            (Kind::Ext { order, .. }, Scalar::Res(_)) => Some(self.pow(a, order - 2)),
            (Kind::Integers, Scalar::Int(x)) => {
                if x.abs().is_one() {
                    Some(a.clone())
                } else {
                    None
                }
            }
            (Kind::Rationals, Scalar::Rat(x)) => Some(Scalar::Rat(Box::new(x.recip()))),
            _ => panic!("scalar does not belong to {}", self.name()),
        }
    }

    pub fn is_unit(&self, a: &Scalar) -> bool {
        self.inv(a).is_some()
    }

    pub fn pow(&self, a: &Scalar, mut e: u64) -> Scalar {
        let mut acc = self.one();
        let mut base = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Whether `2` is a unit, i.e. whether `1/2` (and the halved Jordan
    /// product) exists.
    pub fn two_invertible(&self) -> bool {
        self.is_unit(&self.from_i64(2))
    }

    /// All elements in index order. Errors on infinite rings.
    pub fn enumerate(&self) -> Result<Vec<Scalar>> {
        let card = self.cardinality().ok_or_else(|| Error::InfiniteRing(self.name()))?;
        Ok((0..card).map(Scalar::Res).collect())
    }

    /// Element with the given enumeration index (finite rings only).
    pub fn element(&self, index: u64) -> Scalar {
        debug_assert!(self.cardinality().is_some_and(|c| index < c));
        Scalar::Res(index)
    }

    /// Enumeration index of a finite-ring element.
    pub fn index_of(&self, x: &Scalar) -> u64 {
        match x {
            Scalar::Res(r) => *r,
            _ => panic!("index_of on an infinite ring"),
        }
    }

    /// Coordinates over the prime ring (the polynomial basis `1, w, w^2, ...`
    /// for `GF(p^k)`, a single coordinate otherwise).
    pub fn to_prime_coords(&self, x: &Scalar) -> Vec<Scalar> {
        match &self.inner.kind {
            Kind::Ext { .. } => self.ext_coeffs(x).into_iter().map(Scalar::Res).collect(),
            _ => vec![x.clone()],
        }
    }

    pub fn from_prime_coords(&self, coords: &[Scalar]) -> Scalar {
        match &self.inner.kind {
            Kind::Ext { .. } => {
                let c: Vec<u64> = coords
                    .iter()
                    .map(|s| match s {
                        Scalar::Res(r) => *r,
                        _ => panic!("prime coordinate is not a residue"),
                    })
                    .collect();
                Scalar::Res(self.ext_pack(&c))
            }
            _ => coords[0].clone(),
        }
    }

    /// The prime-ring basis of the ring as a module: `w^t`, `t < k`.
    pub fn prime_basis(&self) -> Vec<Scalar> {
        let k = self.extension_degree();
        (0..k)
            .map(|t| {
                let mut c = vec![Scalar::Res(0); k];
                c[t] = Scalar::Res(1);
                if k == 1 {
                    self.one()
                } else {
                    self.from_prime_coords(&c)
                }
            })
            .collect()
    }

    /// A short list of distinct nonzero scalars used to build structured
    /// sample points: `1`, `2` or `-1` when distinct, and the generator `w`
    /// for extension fields.
    pub fn probe_scalars(&self) -> Vec<Scalar> {
        let mut out = vec![self.one()];
        for cand in [self.from_i64(2), self.from_i64(-1)] {
            if !self.is_zero(&cand) && !out.contains(&cand) {
                out.push(cand);
                break;
            }
        }
        if self.extension_degree() > 1 {
            out.push(self.prime_basis()[1].clone());
        }
        out
    }

    /// Uniform for finite rings; small entries (`[-9, 9]`, denominators up to 5) otherwise.
    pub fn random<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Scalar {
        self.random_bounded(rng, 9)
    }

    pub fn random_bounded<R: rand::Rng + ?Sized>(&self, rng: &mut R, bound: i64) -> Scalar {
        match &self.inner.kind {
            Kind::Integers => Scalar::Int(BigInt::from(rng.gen_range(-bound..=bound))),
            Kind::Rationals => {
                let num = rng.gen_range(-bound..=bound);
                let den = rng.gen_range(1..=5i64);
                Scalar::Rat(Box::new(BigRational::new(num.into(), den.into())))
            }
            _ => Scalar::Res(rng.gen_range(0..self.cardinality().unwrap())),
        }
    }

    /// Checks that a value is a canonical element of this ring.
    pub fn validate(&self, x: &Scalar) -> Result<()> {
        let ok = match (&self.inner.kind, x) {
            (Kind::Prime { p }, Scalar::Res(r)) => r < p,
            (Kind::Ext { order, .. }, Scalar::Res(r)) => r < order,
            (Kind::Mod { m }, Scalar::Res(r)) => r < m,
            (Kind::Integers, Scalar::Int(_)) => true,
            (Kind::Rationals, Scalar::Rat(q)) => q.denom().is_positive(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::RingMismatch(format!("{x:?}"), self.name()))
        }
    }

    /// Parses a serialized scalar: a string such as `"3"` or `"-2/7"`, a JSON
    /// integer, or (extension fields) a coefficient list, low degree first.
    pub fn parse_scalar(&self, v: &Value) -> Result<Scalar> {
        let bad = || Error::Parse(format!("bad scalar {v} for {}", self.name()));
        match v {
            Value::Array(items) => {
                let k = self.extension_degree();
                if items.len() > k || !matches!(self.inner.kind, Kind::Ext { .. }) {
                    return Err(bad());
                }
                let prime = self.prime_ring();
                let mut coords = vec![prime.zero(); k];
                for (slot, item) in coords.iter_mut().zip(items) {
                    *slot = prime.parse_scalar(item)?;
                }
                Ok(self.from_prime_coords(&coords))
            }
            Value::Number(n) => {
                let i = n.as_i64().ok_or_else(bad)?;
                Ok(self.from_i64(i))
            }
            Value::String(s) => {
                let s = s.trim();
                let (num, den) = match s.split_once('/') {
                    Some((a, b)) => (a.trim(), Some(b.trim())),
                    None => (s, None),
                };
                let num: BigInt = num.parse().map_err(|_| bad())?;
                let x = self.from_bigint(&num);
                match den {
                    None => Ok(x),
                    Some(d) => {
                        let d: BigInt = d.parse().map_err(|_| bad())?;
                        let inv = self.inv(&self.from_bigint(&d)).ok_or_else(bad)?;
                        Ok(self.mul(&x, &inv))
                    }
                }
            }
            _ => Err(bad()),
        }
    }

    pub fn format_scalar(&self, x: &Scalar) -> Value {
        match (&self.inner.kind, x) {
            (Kind::Ext { .. }, _) => Value::Array(self.ext_coeffs(x).into_iter().map(Value::from).collect()),
            (_, Scalar::Res(r)) => Value::String(r.to_string()),
            (_, Scalar::Int(v)) => Value::String(v.to_string()),
            (_, Scalar::Rat(q)) => Value::String(if q.is_integer() {
                q.numer().to_string()
            } else {
                format!("{}/{}", q.numer(), q.denom())
            }),
        }
    }

    pub fn display_scalar(&self, x: &Scalar) -> String {
        match self.format_scalar(x) {
            Value::String(s) => s,
            other => other.to_string(),
        }
    }

    pub fn element_of(&self, value: Scalar) -> Element {
        Element { ring: self.clone(), value }
    }

    fn ext_coeffs(&self, x: &Scalar) -> Vec<u64> {
        let (Kind::Ext { p, k, .. }, Scalar::Res(mut r)) = (&self.inner.kind, x) else {
            panic!("not an extension field element");
        };
        (0..*k)
            .map(|_| {
                let c = r % p;
                r /= p;
                c
            })
            .collect()
    }

    fn ext_pack(&self, c: &[u64]) -> u64 {
        let Kind::Ext { p, .. } = &self.inner.kind else { unreachable!() };
        c.iter().rev().fold(0, |acc, &ci| acc * p + ci)
    }
}

/// A scalar tagged with its ring, for checked arithmetic.
#[derive(Clone, PartialEq, Eq)]
pub struct Element {
    ring: Ring,
    value: Scalar,
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in {}", self.ring.display_scalar(&self.value), self.ring.name())
    }
}

impl Element {
    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn value(&self) -> &Scalar {
        &self.value
    }

    fn same_ring(&self, other: &Element) -> Result<()> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch(self.ring.name(), other.ring.name()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.same_ring(other)?;
        Ok(self.ring.element_of(self.ring.add(&self.value, &other.value)))
    }

    pub fn mul(&self, other: &Element) -> Result<Element> {
        self.same_ring(other)?;
        Ok(self.ring.element_of(self.ring.mul(&self.value, &other.value)))
    }

    pub fn neg(&self) -> Element {
        self.ring.element_of(self.ring.neg(&self.value))
    }

    pub fn inv(&self) -> Result<Element> {
        self.ring
            .inv(&self.value)
            .map(|v| self.ring.element_of(v))
            .ok_or_else(|| Error::NotInvertible(format!("{self:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_rings() -> Vec<Ring> {
        vec![
            Ring::prime_field(2).unwrap(),
            Ring::prime_field(5).unwrap(),
            Ring::extension_field(2, 2).unwrap(),
            Ring::extension_field(3, 2).unwrap(),
            Ring::rationals(),
            Ring::integers(),
            Ring::integers_mod(4).unwrap(),
            Ring::integers_mod(6).unwrap(),
        ]
    }

    #[test]
    fn ring_make_examples() {
        let r = Ring::prime_field(5).unwrap();
        assert_eq!((r.characteristic(), r.cardinality()), (5, Some(5)));
        let r = Ring::integers_mod(4).unwrap();
        assert_eq!((r.characteristic(), r.cardinality()), (4, Some(4)));
        assert_eq!(Ring::prime_field(6).unwrap_err(), Error::NotPrime(6));
        assert!(Ring::integers_mod(1).is_err());
        let reducible = RingSpec::ExtensionField { p: 2, k: 2, modulus: Some(vec![1, 0, 1]) };
        assert!(matches!(Ring::new(&reducible), Err(Error::BadModulus(_))));
        assert!(Ring::rationals().cardinality().is_none());
    }

    #[test]
    fn table_modulus_is_first_irreducible() {
        let r = Ring::extension_field(2, 2).unwrap();
        assert_eq!(
            r.spec(),
            &RingSpec::ExtensionField { p: 2, k: 2, modulus: Some(vec![1, 1, 1]) }
        );
        let r = Ring::extension_field(3, 2).unwrap();
        assert_eq!(
            r.spec(),
            &RingSpec::ExtensionField { p: 3, k: 2, modulus: Some(vec![1, 0, 1]) }
        );
    }

    #[test]
    fn arithmetic_examples() {
        let f3 = Ring::prime_field(3).unwrap();
        assert_eq!(f3.add(&Scalar::Res(2), &Scalar::Res(2)), Scalar::Res(1));
        let q = Ring::rationals();
        let half = q.fraction(1, 2).unwrap();
        let two_thirds = q.fraction(2, 3).unwrap();
        assert_eq!(q.mul(&half, &two_thirds), q.fraction(1, 3).unwrap());
        let z4 = Ring::integers_mod(4).unwrap();
        assert_eq!(z4.mul(&Scalar::Res(2), &Scalar::Res(2)), Scalar::Res(0));
    }

    #[test]
    fn inverse_examples() {
        let f5 = Ring::prime_field(5).unwrap();
        assert_eq!(f5.inv(&Scalar::Res(2)), Some(Scalar::Res(3)));
        let z4 = Ring::integers_mod(4).unwrap();
        assert_eq!(z4.inv(&Scalar::Res(2)), None);
        let q = Ring::rationals();
        assert_eq!(q.inv(&q.fraction(3, 7).unwrap()), Some(q.fraction(7, 3).unwrap()));
        let z = Ring::integers();
        assert_eq!(z.inv(&z.from_i64(-1)), Some(z.from_i64(-1)));
        assert_eq!(z.inv(&z.from_i64(2)), None);
    }

    #[test]
    fn enumerate_examples() {
        let f2 = Ring::prime_field(2).unwrap();
        assert_eq!(f2.enumerate().unwrap(), vec![Scalar::Res(0), Scalar::Res(1)]);
        let z4 = Ring::integers_mod(4).unwrap();
        assert_eq!(z4.enumerate().unwrap().len(), 4);
        assert!(matches!(Ring::rationals().enumerate(), Err(Error::InfiniteRing(_))));
    }

    #[test]
    fn element_rejects_ring_mismatch() {
        let a = Ring::prime_field(3).unwrap().element_of(Scalar::Res(1));
        let b = Ring::prime_field(5).unwrap().element_of(Scalar::Res(1));
        assert!(matches!(a.add(&b), Err(Error::RingMismatch(..))));
        assert_eq!(a.add(&a).unwrap().value(), &Scalar::Res(2));
        assert!(Ring::integers_mod(4).unwrap().element_of(Scalar::Res(2)).inv().is_err());
    }

    #[test]
    fn ring_axioms_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for r in all_rings() {
            for _ in 0..200 {
                let (x, y, z) = (r.random(&mut rng), r.random(&mut rng), r.random(&mut rng));
                assert_eq!(r.add(&r.add(&x, &y), &z), r.add(&x, &r.add(&y, &z)));
                assert_eq!(r.mul(&r.mul(&x, &y), &z), r.mul(&x, &r.mul(&y, &z)));
                assert_eq!(r.add(&x, &y), r.add(&y, &x));
                assert_eq!(r.mul(&x, &y), r.mul(&y, &x));
                assert_eq!(r.mul(&x, &r.add(&y, &z)), r.add(&r.mul(&x, &y), &r.mul(&x, &z)));
                assert!(r.is_zero(&r.add(&x, &r.neg(&x))));
                r.validate(&r.mul(&x, &y)).unwrap();
            }
        }
    }

    #[test]
    fn finite_enumeration_closed_and_units_match_brute_force() {
        for r in all_rings().into_iter().filter(Ring::is_finite) {
            let elems = r.enumerate().unwrap();
            assert_eq!(elems.len() as u64, r.cardinality().unwrap());
            for x in &elems {
                for y in &elems {
                    assert!(elems.contains(&r.add(x, y)));
                    assert!(elems.contains(&r.mul(x, y)));
                }
                let brute = elems.iter().find(|y| r.is_one(&r.mul(x, y))).cloned();
                assert_eq!(r.inv(x), brute, "{} {:?}", r.name(), x);
            }
        }
    }

    #[test]
    fn gf256_inverse_matches_brute_force() {
        let r = Ring::extension_field(2, 4).unwrap();
        let r2 = Ring::extension_field(4, 1);
        assert!(r2.is_err());
        let elems = r.enumerate().unwrap();
        for x in &elems {
            let brute = elems.iter().find(|y| r.is_one(&r.mul(x, y))).cloned();
            assert_eq!(r.inv(x), brute);
        }
    }

    #[test]
    fn scalar_serialization() {
        let q = Ring::rationals();
        let x = q.fraction(-2, 7).unwrap();
        assert_eq!(q.format_scalar(&x), Value::from("-2/7"));
        assert_eq!(q.parse_scalar(&Value::from("-2/7")).unwrap(), x);
        let f4 = Ring::extension_field(2, 2).unwrap();
        let w = f4.prime_basis()[1].clone();
        assert_eq!(f4.format_scalar(&w), serde_json::json!([0, 1]));
        assert_eq!(f4.parse_scalar(&serde_json::json!([0, 1])).unwrap(), w);
        let f5 = Ring::prime_field(5).unwrap();
        assert_eq!(f5.parse_scalar(&Value::from("-1")).unwrap(), Scalar::Res(4));
    }

    #[test]
    fn ring_spec_json_forms() {
        let cases = [
            (r#"{"kind":"prime-field","p":5}"#, RingSpec::PrimeField { p: 5 }),
            (r#"{"kind":"integers-mod","m":4}"#, RingSpec::IntegersMod { m: 4 }),
            (r#"{"kind":"rationals"}"#, RingSpec::Rationals),
            (r#"{"kind":"integers"}"#, RingSpec::Integers),
            (
                r#"{"kind":"extension-field","p":2,"k":2,"modulus":[1,1,1]}"#,
                RingSpec::ExtensionField { p: 2, k: 2, modulus: Some(vec![1, 1, 1]) },
            ),
        ];
        for (text, spec) in cases {
            assert_eq!(RingSpec::parse(text).unwrap(), spec);
            assert_eq!(serde_json::to_string(&spec).unwrap(), text);
        }
        assert_eq!(RingSpec::parse("gf2^2").unwrap(), RingSpec::ExtensionField { p: 2, k: 2, modulus: None });
        assert_eq!(RingSpec::parse("zmod6").unwrap(), RingSpec::IntegersMod { m: 6 });
        assert_eq!(RingSpec::parse("GF(3)").unwrap(), RingSpec::PrimeField { p: 3 });
    }

    #[test]
    fn primality() {
        let small: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]);
        assert!(is_prime(18446744073709551557));
        assert!(!is_prime(3215031751));
    }
}
