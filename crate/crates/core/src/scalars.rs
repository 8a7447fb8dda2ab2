//! Exact coefficient domains: rationals, the prime field `F_p`, and
//! truncated p-adic integers `Z/p^k` with per-value precision.
//!
//! Every domain implements [`Scalar`], which is what the series and
//! group-ring code is generic over. Unlike `num_traits::Zero`, the zero and
//! one of a domain need a runtime descriptor (the prime, the precision), so
//! they are produced from a [`Scalar::Domain`] value.

use std::fmt;
use std::hash::Hash;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("precision exhausted: need at least {needed} p-adic digits, have {available}")]
    PrecisionExhausted { needed: u32, available: u32 },
    #[error("not divisible: {0}")]
    NotDivisible(String),
    #[error("denominator {denominator} is not invertible modulo {p}")]
    DenominatorNotInvertible { p: u64, denominator: String },
    #[error("exponent {exponent} cannot act on coefficients in {domain}")]
    IncompatibleExponent { exponent: String, domain: String },
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("coefficient domains differ: {0} vs {1}")]
    DomainMismatch(String, String),
    #[error("invalid literal `{0}`")]
    InvalidLiteral(String),
}

/// Deterministic trial-division primality test; moduli here are small.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// `v_p(n!)`, by Legendre's formula.
pub fn legendre_valuation(n: u64, p: u64) -> u64 {
    assert!(p >= 2, "legendre_valuation needs a prime");
    let mut total = 0;
    let mut q = n / p;
    while q > 0 {
        total += q;
        q /= p;
    }
    total
}

/// p-adic valuation of a nonzero integer, `None` for zero.
pub fn valuation(n: &BigInt, p: u64) -> Option<u32> {
    if n.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut m = n.abs();
    let mut v = 0;
    while (&m % &pb).is_zero() {
        m /= &pb;
        v += 1;
    }
    Some(v)
}

fn pow_u(p: u64, k: u32) -> BigUint {
    BigUint::from(p).pow(k)
}

/// Ring operations shared by every coefficient domain.
///
/// Arithmetic through the `std::ops` supertraits panics when the operands
/// live in incompatible domains (different primes); callers that mix
/// domains go through [`Scalar::meet`] first. Truncated p-adics combine at
/// the smaller precision.
pub trait Scalar:
    Clone
    + PartialEq
    + Eq
    + Hash
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Serialize
{
    type Domain: Clone + PartialEq + Eq + Hash + fmt::Debug + fmt::Display + Send + Sync;

    fn domain(&self) -> Self::Domain;
    /// Common domain two operands can be combined in, if any.
    fn meet(a: &Self::Domain, b: &Self::Domain) -> Option<Self::Domain>;
    /// Re-express `self` in a coarser domain produced by [`Scalar::meet`].
    fn reduce_to(&self, dom: &Self::Domain) -> Self;
    fn zero(dom: &Self::Domain) -> Self;
    fn one(dom: &Self::Domain) -> Self;
    fn from_integer(dom: &Self::Domain, n: &BigInt) -> Self;
    fn from_rational(dom: &Self::Domain, q: &Rational) -> Result<Self, ScalarError>;
    fn is_zero(&self) -> bool;
    fn is_one(&self) -> bool {
        *self == Self::one(&self.domain())
    }
    fn inverse(&self) -> Result<Self, ScalarError>;
    fn checked_div(&self, rhs: &Self) -> Result<Self, ScalarError>;
    /// `C(self, n)` computed inside the domain.
    fn binomial(&self, n: u64) -> Result<Self, ScalarError>;
    /// `C(a, n)` for a word exponent `a`, expressed in (a possibly coarser
    /// version of) `dom`.
    fn exponent_binomial(dom: &Self::Domain, a: &Exponent, n: u64) -> Result<Self, ScalarError>;
    /// Domain that all of `C(a, 1..=max_n)` fit in, or the precision error
    /// that makes at least one of them undetermined.
    fn exponent_domain(
        dom: &Self::Domain,
        a: &Exponent,
        max_n: u64,
    ) -> Result<Self::Domain, ScalarError>;
    /// The residue characteristic used by p-adic exponents, if any.
    fn prime(dom: &Self::Domain) -> Option<u64>;
    fn tag(dom: &Self::Domain) -> DomainTag;
}

/// Serializable description of a coefficient domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "domain", rename_all = "lowercase")]
pub enum DomainTag {
    Q,
    Fp { p: u64 },
    Zpk { p: u64, k: u32 },
}

// ---------------------------------------------------------------------------
// Rational

/// Exact rational number, always in lowest terms with positive denominator.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(BigRational);

/// Tag for the field of rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RationalField;

impl fmt::Display for RationalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Q")
    }
}

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self, ScalarError> {
        let d = denom.into();
        if d.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer.into(), d)))
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn recip(&self) -> Result<Self, ScalarError> {
        if self.0.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Rational(self.0.recip()))
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Self, ScalarError> {
        if rhs.0.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    pub fn binomial(&self, n: u64) -> Rational {
        let mut acc = BigRational::one();
        for i in 0..n {
            acc *= &self.0 - BigRational::from_integer(BigInt::from(i));
            acc /= BigRational::from_integer(BigInt::from(i + 1));
        }
        Rational(acc)
    }

    /// Lossy conversion for progress messages and thresholds in tests.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// `"n/d"` form, used for every JSON field holding a rational.
    pub fn to_fraction_string(&self) -> String {
        format!("{}/{}", self.0.numer(), self.0.denom())
    }

    /// Reduce into `Z/p^k`; the denominator must be a p-adic unit.
    pub fn to_residue(&self, p: u64, k: u32) -> Result<BigUint, ScalarError> {
        let m = BigInt::from(pow_u(p, k));
        let den = self.denom().mod_floor(&m);
        if (self.denom() % BigInt::from(p)).is_zero() {
            return Err(ScalarError::DenominatorNotInvertible {
                p,
                denominator: self.denom().to_string(),
            });
        }
        let inv = mod_inverse(&den, &m).ok_or_else(|| ScalarError::DenominatorNotInvertible {
            p,
            denominator: self.denom().to_string(),
        })?;
        let r = (self.numer() * inv).mod_floor(&m);
        Ok(r.to_biguint().expect("mod_floor is non-negative"))
    }
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let eg = a.extended_gcd(m);
    if !eg.gcd.is_one() {
        return None;
    }
    Some(eg.x.mod_floor(m))
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Rational {
    type Err = ScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ScalarError::InvalidLiteral(s.to_string());
        match s.split_once('/') {
            None => Ok(Rational::from_int(
                BigInt::from_str(s.trim()).map_err(|_| bad())?,
            )),
            Some((n, d)) => {
                let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
                let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
                if d.is_negative() {
                    return Err(bad());
                }
                Rational::new(n, d)
            }
        }
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_fraction_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, rhs: Rational) -> Rational {
        Rational(self.0 + rhs.0)
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, rhs: Rational) -> Rational {
        Rational(self.0 - rhs.0)
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, rhs: Rational) -> Rational {
        Rational(self.0 * rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Scalar for Rational {
    type Domain = RationalField;

    fn domain(&self) -> RationalField {
        RationalField
    }

    fn meet(_: &RationalField, _: &RationalField) -> Option<RationalField> {
        Some(RationalField)
    }

    fn reduce_to(&self, _: &RationalField) -> Self {
        self.clone()
    }

    fn zero(_: &RationalField) -> Self {
        Rational::zero()
    }

    fn one(_: &RationalField) -> Self {
        Rational::one()
    }

    fn from_integer(_: &RationalField, n: &BigInt) -> Self {
        Rational::from_int(n.clone())
    }

    fn from_rational(_: &RationalField, q: &Rational) -> Result<Self, ScalarError> {
        Ok(q.clone())
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn inverse(&self) -> Result<Self, ScalarError> {
        self.recip()
    }

    fn checked_div(&self, rhs: &Self) -> Result<Self, ScalarError> {
        Rational::checked_div(self, rhs)
    }

    fn binomial(&self, n: u64) -> Result<Self, ScalarError> {
        Ok(Rational::binomial(self, n))
    }

    fn exponent_binomial(_: &RationalField, a: &Exponent, n: u64) -> Result<Self, ScalarError> {
        match a.as_rational() {
            Some(q) => Ok(q.binomial(n)),
            None => Err(ScalarError::IncompatibleExponent {
                exponent: a.to_string(),
                domain: "Q".into(),
            }),
        }
    }

    fn exponent_domain(
        dom: &RationalField,
        a: &Exponent,
        _max_n: u64,
    ) -> Result<RationalField, ScalarError> {
        match a {
            Exponent::Padic { .. } => Err(ScalarError::IncompatibleExponent {
                exponent: a.to_string(),
                domain: "Q".into(),
            }),
            _ => Ok(*dom),
        }
    }

    fn prime(_: &RationalField) -> Option<u64> {
        None
    }

    fn tag(_: &RationalField) -> DomainTag {
        DomainTag::Q
    }
}

// ---------------------------------------------------------------------------
// Prime field

/// A validated prime `p`, describing the field `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, ScalarError> {
        // u128 products must not overflow
        if !is_prime(p) || p > u32::MAX as u64 {
            return Err(ScalarError::NotPrime(p));
        }
        Ok(PrimeField { p })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn elem(&self, v: i64) -> Fp {
        Fp {
            p: self.p,
            v: v.rem_euclid(self.p as i64) as u64,
        }
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.p)
    }
}

/// Element of `F_p`, stored as its least non-negative residue.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fp {
    p: u64,
    v: u64,
}

impl Fp {
    pub fn value(&self) -> u64 {
        self.v
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    fn check(&self, rhs: &Fp) {
        assert_eq!(self.p, rhs.p, "F_p operands with different primes");
    }

    fn pow(&self, mut e: u64) -> Fp {
        let mut base = self.v as u128;
        let m = self.p as u128;
        let mut acc = 1u128 % m;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % m;
            }
            base = base * base % m;
            e >>= 1;
        }
        Fp {
            p: self.p,
            v: acc as u64,
        }
    }
}

impl fmt::Debug for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.v, self.p)
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.v)
    }
}

impl Serialize for Fp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.v.to_string())
    }
}

impl Add for Fp {
    type Output = Fp;
    fn add(self, rhs: Fp) -> Fp {
        self.check(&rhs);
        Fp {
            p: self.p,
            v: ((self.v as u128 + rhs.v as u128) % self.p as u128) as u64,
        }
    }
}

impl Sub for Fp {
    type Output = Fp;
    fn sub(self, rhs: Fp) -> Fp {
        self.check(&rhs);
        Fp {
            p: self.p,
            v: ((self.v as u128 + (self.p - rhs.v) as u128) % self.p as u128) as u64,
        }
    }
}

impl Mul for Fp {
    type Output = Fp;
    fn mul(self, rhs: Fp) -> Fp {
        self.check(&rhs);
        Fp {
            p: self.p,
            v: ((self.v as u128 * rhs.v as u128) % self.p as u128) as u64,
        }
    }
}

impl Neg for Fp {
    type Output = Fp;
    fn neg(self) -> Fp {
        Fp {
            p: self.p,
            v: (self.p - self.v) % self.p,
        }
    }
}

impl Scalar for Fp {
    type Domain = PrimeField;

    fn domain(&self) -> PrimeField {
        PrimeField { p: self.p }
    }

    fn meet(a: &PrimeField, b: &PrimeField) -> Option<PrimeField> {
        (a == b).then_some(*a)
    }

    fn reduce_to(&self, _: &PrimeField) -> Self {
        *self
    }

    fn zero(dom: &PrimeField) -> Self {
        Fp { p: dom.p, v: 0 }
    }

    fn one(dom: &PrimeField) -> Self {
        Fp { p: dom.p, v: 1 % dom.p }
    }

    fn from_integer(dom: &PrimeField, n: &BigInt) -> Self {
        let v = n.mod_floor(&BigInt::from(dom.p));
        Fp {
            p: dom.p,
            v: v.to_u64().expect("residue fits"),
        }
    }

    fn from_rational(dom: &PrimeField, q: &Rational) -> Result<Self, ScalarError> {
        let r = q.to_residue(dom.p, 1)?;
        Ok(Fp {
            p: dom.p,
            v: r.to_u64().expect("residue fits"),
        })
    }

    fn is_zero(&self) -> bool {
        self.v == 0
    }

    fn inverse(&self) -> Result<Self, ScalarError> {
        if self.v == 0 {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(self.pow(self.p - 2))
    }

    fn checked_div(&self, rhs: &Self) -> Result<Self, ScalarError> {
        Ok(*self * rhs.inverse()?)
    }

    /// Only defined for `n < p`; larger `n` has `p | n!` and must be lifted
    /// through `Z/p^k`.
    fn binomial(&self, n: u64) -> Result<Self, ScalarError> {
        if n >= self.p {
            return Err(ScalarError::NotDivisible(format!(
                "C(a, {n}) in F_{p}: {p} divides {n}!, lift the exponent to Z_{p}",
                p = self.p
            )));
        }
        let dom = self.domain();
        let mut num = Fp::one(&dom);
        let mut den = Fp::one(&dom);
        for i in 0..n {
            num = num * (*self - dom.elem(i as i64));
            den = den * dom.elem(i as i64 + 1);
        }
        num.checked_div(&den)
    }

    fn exponent_binomial(dom: &PrimeField, a: &Exponent, n: u64) -> Result<Self, ScalarError> {
        match a {
            Exponent::Padic { value, precision } => {
                let lift = Padic::new(dom.p, *precision, value)?;
                let c = lift.binomial(n)?;
                Ok(Fp {
                    p: dom.p,
                    v: (&c.v % BigUint::from(dom.p)).to_u64().expect("residue fits"),
                })
            }
            _ => {
                let q = a.as_rational().expect("integer or rational exponent");
                check_denominator(&q, dom.p)?;
                Fp::from_rational(dom, &q.binomial(n))
            }
        }
    }

    fn exponent_domain(
        dom: &PrimeField,
        a: &Exponent,
        max_n: u64,
    ) -> Result<PrimeField, ScalarError> {
        match a {
            Exponent::Padic { precision, .. } => {
                let loss = legendre_valuation(max_n, dom.p);
                if (*precision as u64) <= loss {
                    return Err(ScalarError::PrecisionExhausted {
                        needed: loss as u32 + 1,
                        available: *precision,
                    });
                }
                Ok(*dom)
            }
            _ => {
                check_denominator(&a.as_rational().expect("rational"), dom.p)?;
                Ok(*dom)
            }
        }
    }

    fn prime(dom: &PrimeField) -> Option<u64> {
        Some(dom.p)
    }

    fn tag(dom: &PrimeField) -> DomainTag {
        DomainTag::Fp { p: dom.p }
    }
}

fn check_denominator(q: &Rational, p: u64) -> Result<(), ScalarError> {
    if (q.denom() % BigInt::from(p)).is_zero() {
        return Err(ScalarError::DenominatorNotInvertible {
            p,
            denominator: q.denom().to_string(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Truncated p-adics

/// `Z/p^k`: p-adic integers known modulo `p^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PadicRing {
    p: u64,
    k: u32,
}

impl PadicRing {
    pub fn new(p: u64, k: u32) -> Result<Self, ScalarError> {
        if !is_prime(p) {
            return Err(ScalarError::NotPrime(p));
        }
        if k == 0 {
            return Err(ScalarError::PrecisionExhausted {
                needed: 1,
                available: 0,
            });
        }
        Ok(PadicRing { p, k })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.k
    }

    pub fn modulus(&self) -> BigUint {
        pow_u(self.p, self.k)
    }
}

impl fmt::Display for PadicRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z/{}^{}", self.p, self.k)
    }
}

/// A p-adic integer known modulo `p^k`, stored as its least non-negative
/// residue.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Padic {
    p: u64,
    k: u32,
    v: BigUint,
}

impl Padic {
    pub fn new(p: u64, k: u32, value: &BigInt) -> Result<Self, ScalarError> {
        let ring = PadicRing::new(p, k)?;
        Ok(Padic::in_ring(&ring, value))
    }

    pub fn in_ring(ring: &PadicRing, value: &BigInt) -> Self {
        let m = BigInt::from(ring.modulus());
        Padic {
            p: ring.p,
            k: ring.k,
            v: value.mod_floor(&m).to_biguint().expect("non-negative"),
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.k
    }

    pub fn value(&self) -> &BigUint {
        &self.v
    }

    /// Valuation of the known residue; `None` when it is zero mod `p^k`.
    pub fn valuation(&self) -> Option<u32> {
        valuation(&BigInt::from(self.v.clone()), self.p)
    }

    /// Drop to precision `k <= self.precision()`.
    pub fn truncate(&self, k: u32) -> Result<Padic, ScalarError> {
        if k == 0 {
            return Err(ScalarError::PrecisionExhausted {
                needed: 1,
                available: 0,
            });
        }
        assert!(k <= self.k, "cannot raise p-adic precision");
        Ok(Padic {
            p: self.p,
            k,
            v: &self.v % pow_u(self.p, k),
        })
    }

    fn aligned(&self, rhs: &Padic) -> (BigUint, BigUint, PadicRing) {
        assert_eq!(self.p, rhs.p, "p-adic operands with different primes");
        let k = self.k.min(rhs.k);
        let m = pow_u(self.p, k);
        (&self.v % &m, &rhs.v % &m, PadicRing { p: self.p, k })
    }

    fn ring(&self) -> PadicRing {
        PadicRing {
            p: self.p,
            k: self.k,
        }
    }
}

impl fmt::Debug for Padic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Zp({};{}) [p={}]", self.v, self.k, self.p)
    }
}

impl fmt::Display for Padic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Zp({};{})", self.v, self.k)
    }
}

impl Serialize for Padic {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Padic", 2)?;
        st.serialize_field("v", &self.v.to_string())?;
        st.serialize_field("k", &self.k)?;
        st.end()
    }
}

impl Add for Padic {
    type Output = Padic;
    fn add(self, rhs: Padic) -> Padic {
        let (a, b, ring) = self.aligned(&rhs);
        Padic {
            p: ring.p,
            k: ring.k,
            v: (a + b) % ring.modulus(),
        }
    }
}

impl Sub for Padic {
    type Output = Padic;
    fn sub(self, rhs: Padic) -> Padic {
        let (a, b, ring) = self.aligned(&rhs);
        let m = ring.modulus();
        Padic {
            p: ring.p,
            k: ring.k,
            v: (a + &m - b) % m,
        }
    }
}

impl Mul for Padic {
    type Output = Padic;
    fn mul(self, rhs: Padic) -> Padic {
        let (a, b, ring) = self.aligned(&rhs);
        Padic {
            p: ring.p,
            k: ring.k,
            v: (a * b) % ring.modulus(),
        }
    }
}

impl Neg for Padic {
    type Output = Padic;
    fn neg(self) -> Padic {
        let m = self.ring().modulus();
        Padic {
            p: self.p,
            k: self.k,
            v: (&m - &self.v) % &m,
        }
    }
}

impl Scalar for Padic {
    type Domain = PadicRing;

    fn domain(&self) -> PadicRing {
        self.ring()
    }

    fn meet(a: &PadicRing, b: &PadicRing) -> Option<PadicRing> {
        (a.p == b.p).then(|| PadicRing {
            p: a.p,
            k: a.k.min(b.k),
        })
    }

    fn reduce_to(&self, dom: &PadicRing) -> Self {
        self.truncate(dom.k).expect("domains have positive precision")
    }

    fn zero(dom: &PadicRing) -> Self {
        Padic {
            p: dom.p,
            k: dom.k,
            v: BigUint::zero(),
        }
    }

    fn one(dom: &PadicRing) -> Self {
        Padic {
            p: dom.p,
            k: dom.k,
            v: BigUint::one(),
        }
    }

    fn from_integer(dom: &PadicRing, n: &BigInt) -> Self {
        Padic::in_ring(dom, n)
    }

    fn from_rational(dom: &PadicRing, q: &Rational) -> Result<Self, ScalarError> {
        Ok(Padic {
            p: dom.p,
            k: dom.k,
            v: q.to_residue(dom.p, dom.k)?,
        })
    }

    fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    fn inverse(&self) -> Result<Self, ScalarError> {
        Padic::one(&self.ring()).checked_div(self)
    }

    /// Division by `p^v * u` drops the precision by `v`; a dividend not
    /// divisible by `p^v` has no quotient in `Z_p`.
    fn checked_div(&self, rhs: &Self) -> Result<Self, ScalarError> {
        assert_eq!(self.p, rhs.p, "p-adic operands with different primes");
        let v = rhs.valuation().ok_or(ScalarError::DivisionByZero)?;
        let k = self.k.min(rhs.k);
        if k <= v {
            return Err(ScalarError::PrecisionExhausted {
                needed: v + 1,
                available: k,
            });
        }
        let pv = pow_u(self.p, v);
        let a = &self.v % pow_u(self.p, k);
        if !(&a % &pv).is_zero() {
            return Err(ScalarError::NotDivisible(format!(
                "{self} is not divisible by {p}^{v}",
                p = self.p
            )));
        }
        let out_k = k - v;
        let m = BigInt::from(pow_u(self.p, out_k));
        let unit = BigInt::from(&rhs.v / &pv);
        let inv = mod_inverse(&unit.mod_floor(&m), &m).expect("unit is invertible");
        let q = (BigInt::from(a / pv) * inv).mod_floor(&m);
        Ok(Padic {
            p: self.p,
            k: out_k,
            v: q.to_biguint().expect("non-negative"),
        })
    }

    /// Precision of the result is `k - v_p(n!)`.
    fn binomial(&self, n: u64) -> Result<Self, ScalarError> {
        let loss = legendre_valuation(n, self.p);
        if (self.k as u64) <= loss {
            return Err(ScalarError::PrecisionExhausted {
                needed: loss as u32 + 1,
                available: self.k,
            });
        }
        let ring = self.ring();
        let m = ring.modulus();
        let mut num = BigUint::one() % &m;
        for i in 0..n {
            let term = (&self.v + &m - (BigUint::from(i) % &m)) % &m;
            num = num * term % &m;
        }
        let mut fact = BigInt::one();
        for i in 1..=n {
            fact *= BigInt::from(i);
        }
        let num = Padic {
            p: self.p,
            k: self.k,
            v: num,
        };
        let den = Padic::in_ring(&ring, &fact);
        num.checked_div(&den)
    }

    fn exponent_binomial(dom: &PadicRing, a: &Exponent, n: u64) -> Result<Self, ScalarError> {
        match a {
            Exponent::Padic { value, precision } => {
                let lift = Padic::new(dom.p, *precision, value)?;
                let c = lift.binomial(n)?;
                let k = c.k.min(dom.k);
                c.truncate(k)
            }
            _ => {
                let q = a.as_rational().expect("integer or rational exponent");
                check_denominator(&q, dom.p)?;
                Padic::from_rational(dom, &q.binomial(n))
            }
        }
    }

    fn exponent_domain(
        dom: &PadicRing,
        a: &Exponent,
        max_n: u64,
    ) -> Result<PadicRing, ScalarError> {
        match a {
            Exponent::Padic { precision, .. } => {
                let loss = legendre_valuation(max_n, dom.p);
                if (*precision as u64) <= loss {
                    return Err(ScalarError::PrecisionExhausted {
                        needed: loss as u32 + 1,
                        available: *precision,
                    });
                }
                Ok(PadicRing {
                    p: dom.p,
                    k: dom.k.min(*precision - loss as u32),
                })
            }
            _ => {
                check_denominator(&a.as_rational().expect("rational"), dom.p)?;
                Ok(*dom)
            }
        }
    }

    fn prime(dom: &PadicRing) -> Option<u64> {
        Some(dom.p)
    }

    fn tag(dom: &PadicRing) -> DomainTag {
        DomainTag::Zpk { p: dom.p, k: dom.k }
    }
}

// ---------------------------------------------------------------------------
// Exponents

/// Exponent of a power in a group word.
///
/// Non-integral rationals are kept in lowest terms; a fraction that reduces
/// to an integer becomes [`Exponent::Integer`]. A p-adic exponent stores the
/// literal it was written with; the prime comes from the evaluation context.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Exponent {
    Integer(BigInt),
    Rational(Rational),
    Padic { value: BigInt, precision: u32 },
}

impl Exponent {
    pub fn int(n: i64) -> Self {
        Exponent::Integer(BigInt::from(n))
    }

    pub fn from_rational(q: Rational) -> Self {
        if q.is_integer() {
            Exponent::Integer(q.numer().clone())
        } else {
            Exponent::Rational(q)
        }
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            Exponent::Integer(n) => Some(Rational::from_int(n.clone())),
            Exponent::Rational(q) => Some(q.clone()),
            Exponent::Padic { .. } => None,
        }
    }

    pub fn as_integer(&self) -> Option<&BigInt> {
        match self {
            Exponent::Integer(n) => Some(n),
            _ => None,
        }
    }

    /// Product of two exponents, when both live in a common ring. A p-adic
    /// operand fixes the precision of the product.
    pub fn checked_mul(&self, rhs: &Exponent, p: Option<u64>) -> Option<Exponent> {
        match (self.as_rational(), rhs.as_rational()) {
            (Some(a), Some(b)) => Some(Exponent::from_rational(a * b)),
            _ => {
                let p = p?;
                let k = [self, rhs]
                    .iter()
                    .filter_map(|e| match e {
                        Exponent::Padic { precision, .. } => Some(*precision),
                        _ => None,
                    })
                    .min()?;
                let c = self.to_padic_at(p, k).ok()? * rhs.to_padic_at(p, k).ok()?;
                Some(Exponent::Padic {
                    value: BigInt::from(c.v),
                    precision: c.k,
                })
            }
        }
    }

    /// Interpret as an element of `Z/p^k`, never claiming more precision
    /// than a p-adic literal carries.
    pub fn to_padic_at(&self, p: u64, k: u32) -> Result<Padic, ScalarError> {
        let ring = PadicRing::new(p, k)?;
        match self {
            Exponent::Integer(n) => Ok(Padic::in_ring(&ring, n)),
            Exponent::Rational(q) => Padic::from_rational(&ring, q),
            Exponent::Padic { value, precision } => {
                Padic::new(p, (*precision).min(k), value)
            }
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Integer(n) => write!(f, "{n}"),
            Exponent::Rational(q) => write!(f, "({}/{})", q.numer(), q.denom()),
            Exponent::Padic { value, precision } => write!(f, "Zp({value};{precision})"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        match self {
            Exponent::Integer(n) => {
                let mut st = s.serialize_struct("Exponent", 2)?;
                st.serialize_field("type", "int")?;
                st.serialize_field("value", &n.to_string())?;
                st.end()
            }
            Exponent::Rational(q) => {
                let mut st = s.serialize_struct("Exponent", 2)?;
                st.serialize_field("type", "rational")?;
                st.serialize_field("value", &q.to_fraction_string())?;
                st.end()
            }
            Exponent::Padic { value, precision } => {
                let mut st = s.serialize_struct("Exponent", 3)?;
                st.serialize_field("type", "padic")?;
                st.serialize_field("v", &value.to_string())?;
                st.serialize_field("k", precision)?;
                st.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            #[serde(rename = "type")]
            kind: String,
            value: Option<String>,
            v: Option<String>,
            k: Option<u32>,
        }
        let raw = Raw::deserialize(d)?;
        let int = |s: &str| BigInt::from_str(s).map_err(D::Error::custom);
        match raw.kind.as_str() {
            "int" => Ok(Exponent::Integer(int(
                raw.value.as_deref().ok_or_else(|| D::Error::missing_field("value"))?,
            )?)),
            "rational" => {
                let q: Rational = raw
                    .value
                    .as_deref()
                    .ok_or_else(|| D::Error::missing_field("value"))?
                    .parse()
                    .map_err(D::Error::custom)?;
                Ok(Exponent::from_rational(q))
            }
            "padic" => Ok(Exponent::Padic {
                value: int(raw.v.as_deref().ok_or_else(|| D::Error::missing_field("v"))?)?,
                precision: raw.k.ok_or_else(|| D::Error::missing_field("k"))?,
            }),
            other => Err(D::Error::unknown_variant(other, &["int", "rational", "padic"])),
        }
    }
}

/// Accepts `n`, `(n)`, `n/d`, `(n/d)` and `Zp(v;k)`.
impl FromStr for Exponent {
    type Err = ScalarError;

    fn from_str(s: &str) -> Result<Self, ScalarError> {
        let bad = || ScalarError::InvalidLiteral(s.to_string());
        let t = s.trim();
        if let Some(inner) = t.strip_prefix("Zp(").and_then(|r| r.strip_suffix(')')) {
            let (v, k) = inner.split_once(';').ok_or_else(bad)?;
            let value = BigInt::from_str(v.trim()).map_err(|_| bad())?;
            let precision: u32 = k.trim().parse().map_err(|_| bad())?;
            return Ok(Exponent::Padic { value, precision });
        }
        let t = t
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .unwrap_or(t);
        let q = Rational::from_str(t).map_err(|_| bad())?;
        Ok(Exponent::from_rational(q))
    }
}

/// Parse a `Zp(v;k)` literal, with `p` supplied by the caller.
pub fn parse_padic_literal(s: &str, p: u64) -> Result<Padic, ScalarError> {
    let bad = || ScalarError::InvalidLiteral(s.to_string());
    let inner = s
        .trim()
        .strip_prefix("Zp(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(bad)?;
    let (v, k) = inner.split_once(';').ok_or_else(bad)?;
    let v = BigInt::from_str(v.trim()).map_err(|_| bad())?;
    let k: u32 = k.trim().parse().map_err(|_| bad())?;
    Padic::new(p, k, &v)
}

/// Sign-aware conversion used when expanding integer powers.
pub fn exponent_to_i64(n: &BigInt) -> Option<i64> {
    match n.sign() {
        Sign::NoSign => Some(0),
        _ => n.to_i64(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    #[test]
    fn exponent_from_str() {
        assert_eq!("3".parse::<Exponent>().unwrap(), Exponent::int(3));
        assert_eq!("(-2)".parse::<Exponent>().unwrap(), Exponent::int(-2));
        assert_eq!("(1/2)".parse::<Exponent>().unwrap(), Exponent::Rational(q(1, 2)));
        assert_eq!("4/2".parse::<Exponent>().unwrap(), Exponent::int(2));
        assert_eq!(
            "Zp(41;4)".parse::<Exponent>().unwrap(),
            Exponent::Padic { value: BigInt::from(41), precision: 4 }
        );
        assert!("Zp(1)".parse::<Exponent>().is_err());
        assert!("x".parse::<Exponent>().is_err());
    }

    #[test]
    fn binomial_of_half() {
        assert_eq!(q(1, 2).binomial(2), q(-1, 8));
        assert_eq!(q(7, 3).binomial(0), Rational::one());
        assert_eq!(q(7, 3).binomial(1), q(7, 3));
    }

    #[test]
    fn binomial_matches_pascal_triangle() {
        let mut row = vec![BigInt::one()];
        for n in 1..=8u64 {
            let mut next = vec![BigInt::one(); n as usize + 1];
            for i in 1..n as usize {
                next[i] = &row[i - 1] + &row[i];
            }
            row = next;
        }
        // row is now row 8; check row 5 separately with the example value
        assert_eq!(Rational::from_int(5).binomial(3), Rational::from_int(10));
        for (i, c) in row.iter().enumerate() {
            assert_eq!(
                Rational::from_int(8).binomial(i as u64),
                Rational::from_int(c.clone())
            );
        }
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_valuation(0, 5), 0);
        assert_eq!(legendre_valuation(6, 3), 2);
        for p in [2, 3, 5, 7, 11] {
            assert_eq!(legendre_valuation(p, p), 1);
        }
    }

    #[test]
    fn inverse_of_two_mod_81() {
        let two = Padic::new(3, 4, &BigInt::from(2)).unwrap();
        let inv = two.inverse().unwrap();
        assert_eq!(inv.value(), &BigUint::from(41u32));
        assert_eq!(inv.precision(), 4);
    }

    #[test]
    fn rational_addition() {
        assert_eq!(q(1, 2) + q(1, 3), q(5, 6));
        assert_eq!("5/6".parse::<Rational>().unwrap(), q(5, 6));
        assert_eq!(q(4, 2).to_string(), "2");
        assert_eq!(q(4, 2).to_fraction_string(), "2/1");
    }

    #[test]
    fn additive_inverse_everywhere() {
        let x = q(-7, 9);
        assert!((x.clone() + (-x)).is_zero());
        let f = PrimeField::new(7).unwrap();
        let y = f.elem(3);
        assert!(Scalar::is_zero(&(y + (-y))));
        let z = Padic::new(5, 3, &BigInt::from(17)).unwrap();
        assert!((z.clone() + (-z)).is_zero());
    }

    #[test]
    fn padic_division_loses_precision() {
        let a = Padic::new(3, 5, &BigInt::from(18)).unwrap();
        let b = Padic::new(3, 5, &BigInt::from(6)).unwrap();
        let c = a.checked_div(&b).unwrap();
        assert_eq!(c.precision(), 4);
        assert_eq!(c.value(), &BigUint::from(3u32));
        let one = Padic::new(3, 5, &BigInt::one()).unwrap();
        assert!(matches!(one.checked_div(&b), Err(ScalarError::NotDivisible(_))));
        let zero = Padic::new(3, 5, &BigInt::zero()).unwrap();
        assert_eq!(one.checked_div(&zero), Err(ScalarError::DivisionByZero));
    }

    #[test]
    fn padic_binomial_precision() {
        let a = Padic::new(2, 5, &BigInt::from(13)).unwrap();
        let c = a.binomial(4).unwrap();
        // v_2(4!) = 3
        assert_eq!(c.precision(), 2);
        assert_eq!(c.value(), &(BigUint::from(715u32) % BigUint::from(4u32)));
        assert_eq!(
            a.binomial(8),
            Err(ScalarError::PrecisionExhausted {
                needed: 8,
                available: 5
            })
        );
    }

    #[test]
    fn fp_binomial_rejects_p_dividing_factorial() {
        let f = PrimeField::new(3).unwrap();
        assert_eq!(f.elem(2).binomial(2).unwrap(), f.elem(1));
        assert!(matches!(
            f.elem(2).binomial(3),
            Err(ScalarError::NotDivisible(_))
        ));
        // the lifted route works
        let e = Exponent::Padic {
            value: BigInt::from(5),
            precision: 4,
        };
        assert_eq!(Fp::exponent_binomial(&f, &e, 3).unwrap(), f.elem(10));
    }

    #[test]
    fn not_prime_rejected() {
        assert_eq!(PrimeField::new(9), Err(ScalarError::NotPrime(9)));
        assert!(PadicRing::new(4, 2).is_err());
        assert!(PadicRing::new(5, 0).is_err());
    }

    #[test]
    fn denominators_checked() {
        let f = PrimeField::new(3).unwrap();
        let e = Exponent::from_rational(q(1, 3));
        assert!(matches!(
            Fp::exponent_binomial(&f, &e, 1),
            Err(ScalarError::DenominatorNotInvertible { .. })
        ));
        assert_eq!(
            Fp::exponent_binomial(&f, &Exponent::from_rational(q(1, 2)), 1).unwrap(),
            f.elem(2)
        );
    }

    #[test]
    fn padic_literal() {
        let z = parse_padic_literal("Zp(41;4)", 3).unwrap();
        assert_eq!(z.value(), &BigUint::from(41u32));
        let w = parse_padic_literal("Zp(-1;2)", 3).unwrap();
        assert_eq!(w.value(), &BigUint::from(8u32));
        assert!(parse_padic_literal("Zp(1,2)", 3).is_err());
    }

    #[test]
    fn exponent_json_round_trip() {
        for e in [
            Exponent::int(-3),
            Exponent::from_rational(q(2, 6)),
            Exponent::Padic {
                value: BigInt::from(41),
                precision: 4,
            },
        ] {
            let s = serde_json::to_string(&e).unwrap();
            assert_eq!(serde_json::from_str::<Exponent>(&s).unwrap(), e);
        }
        assert_eq!(
            serde_json::to_string(&Exponent::from_rational(q(1, 2))).unwrap(),
            r#"{"type":"rational","value":"1/2"}"#
        );
    }

    fn small_q() -> impl Strategy<Value = Rational> {
        (-40i64..40, 1i64..13).prop_map(|(n, d)| q(n, d))
    }

    proptest! {
        #[test]
        fn rational_field_axioms(a in small_q(), b in small_q(), c in small_q()) {
            prop_assert_eq!((a.clone() + b.clone()) + c.clone(), a.clone() + (b.clone() + c.clone()));
            prop_assert_eq!((a.clone() * b.clone()) * c.clone(), a.clone() * (b.clone() * c.clone()));
            prop_assert_eq!(a.clone() * (b.clone() + c.clone()), a.clone() * b.clone() + a.clone() * c.clone());
            if !a.is_zero() {
                prop_assert_eq!(a.clone() * a.recip().unwrap(), Rational::one());
            }
        }

        #[test]
        fn fp_field_axioms(p in prop::sample::select(vec![2u64, 3, 5, 7, 101]), a in 0i64..1000, b in 0i64..1000, c in 0i64..1000) {
            let f = PrimeField::new(p).unwrap();
            let (a, b, c) = (f.elem(a), f.elem(b), f.elem(c));
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!((a * b) * c, a * (b * c));
            prop_assert_eq!(a * (b + c), a * b + a * c);
            if !Scalar::is_zero(&a) {
                prop_assert_eq!(a * a.inverse().unwrap(), Fp::one(&f));
            }
        }

        #[test]
        fn pascal_identity(a in small_q(), n in 1u64..=12) {
            let one = Rational::one();
            prop_assert_eq!(
                a.binomial(n),
                (a.clone() - one.clone()).binomial(n - 1) + (a - one).binomial(n)
            );
        }

        #[test]
        fn padic_congruence_stability(p in prop::sample::select(vec![2u64, 3, 5]), a in -5000i64..5000, r in -50i64..50, k in 2u32..9, n in 0u64..12) {
            let pk = BigInt::from(p).pow(k);
            let a2 = BigInt::from(a) + BigInt::from(r) * pk;
            let x = Padic::new(p, k, &BigInt::from(a)).unwrap();
            let y = Padic::new(p, k + 3, &a2).unwrap();
            match (x.binomial(n), y.binomial(n)) {
                (Ok(bx), Ok(by)) => {
                    let kk = bx.precision();
                    prop_assert_eq!(kk as u64, k as u64 - legendre_valuation(n, p));
                    prop_assert_eq!(bx, by.truncate(kk).unwrap());
                }
                (Err(ScalarError::PrecisionExhausted { .. }), _) => {
                    prop_assert!(k as u64 <= legendre_valuation(n, p));
                }
                (bx, by) => prop_assert!(false, "unexpected {:?} {:?}", bx, by),
            }
        }

        #[test]
        fn reduction_commutes_with_binomial(p in prop::sample::select(vec![2u64, 3, 5, 7]), n0 in -60i64..60, d in 1i64..20, k in 1u32..8, m in 0u64..10) {
            prop_assume!(d % p as i64 != 0);
            let a = q(n0, d);
            let ring = PadicRing::new(p, k + legendre_valuation(m, p) as u32).unwrap();
            let lifted = Padic::from_rational(&ring, &a).unwrap();
            let via_padic = lifted.binomial(m).unwrap();
            let via_q = Padic::from_rational(&via_padic.domain(), &a.binomial(m)).unwrap();
            prop_assert_eq!(via_padic, via_q);
        }
    }
}
