//! Noncommutative power series in `y_1..y_d` truncated below degree `N`.
//!
//! The truncation bound is part of the ring, so combining series with
//! different bounds is an error rather than a silent loss of precision.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::scalars::{DomainTag, Exponent, Scalar, ScalarError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("series shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("constant term {0} is not invertible")]
    NotInvertible(String),
    #[error("binomial powers need constant term 1, found {0}")]
    ConstantTermNotOne(String),
    #[error("cannot truncate to degree {requested} above the bound {bound}")]
    TruncationTooLarge { requested: usize, bound: usize },
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// A word in the indeterminates, as 0-based generator indices.
///
/// Ordered graded-lexicographically: shorter monomials first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(pub Vec<u16>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(i: usize) -> Self {
        Monomial(vec![i as u16])
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn concat(&self, other: &Monomial) -> Monomial {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Monomial(v)
    }
}

impl From<Vec<usize>> for Monomial {
    fn from(v: Vec<usize>) -> Self {
        Monomial(v.into_iter().map(|i| i as u16).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, g) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "y{}", g + 1)?;
        }
        Ok(())
    }
}

/// Element of `A<<y_1..y_d>> / (degree >= N)`.
///
/// Invariants: no zero coefficients are stored, every monomial has degree
/// `< N` and indices `< d`, and every coefficient lives exactly in `domain`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruncatedSeries<S: Scalar> {
    d: usize,
    bound: usize,
    domain: S::Domain,
    terms: BTreeMap<Monomial, S>,
}

impl<S: Scalar> TruncatedSeries<S> {
    pub fn zero(d: usize, bound: usize, domain: S::Domain) -> Self {
        assert!(bound >= 1, "truncation bound must be positive");
        TruncatedSeries {
            d,
            bound,
            domain,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(d: usize, bound: usize, domain: S::Domain) -> Self {
        let c = S::one(&domain);
        Self::constant(d, bound, c)
    }

    pub fn constant(d: usize, bound: usize, c: S) -> Self {
        let mut s = Self::zero(d, bound, c.domain());
        if !c.is_zero() {
            s.terms.insert(Monomial::one(), c);
        }
        s
    }

    /// The indeterminate `y_i` (0-based).
    pub fn var(d: usize, bound: usize, domain: S::Domain, i: usize) -> Self {
        assert!(i < d, "indeterminate index out of range");
        let c = S::one(&domain);
        Self::from_terms(d, bound, domain, [(Monomial::var(i), c)])
    }

    /// `1 + y_i`, the Magnus image of the `i`-th free generator.
    pub fn magnus_generator(d: usize, bound: usize, domain: S::Domain, i: usize) -> Self {
        Self::from_terms(
            d,
            bound,
            domain.clone(),
            [(Monomial::one(), S::one(&domain)), (Monomial::var(i), S::one(&domain))],
        )
    }

    /// Build from terms, summing repeats and dropping zeros and monomials of
    /// degree `>= bound`.
    pub fn from_terms(
        d: usize,
        bound: usize,
        domain: S::Domain,
        terms: impl IntoIterator<Item = (Monomial, S)>,
    ) -> Self {
        let mut s = Self::zero(d, bound, domain);
        for (m, c) in terms {
            assert!(
                m.0.iter().all(|&g| (g as usize) < d),
                "monomial {m} uses an index >= {d}"
            );
            if m.degree() >= bound {
                continue;
            }
            let c = c.reduce_to(&s.domain);
            s.accumulate(m, c);
        }
        s
    }

    fn accumulate(&mut self, m: Monomial, c: S) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                if !c.is_zero() {
                    e.insert(c);
                }
            }
            Entry::Occupied(mut e) => {
                let sum = e.get().clone() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.d
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn domain(&self) -> &S::Domain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &S)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> S {
        self.terms
            .get(m)
            .cloned()
            .unwrap_or_else(|| S::zero(&self.domain))
    }

    pub fn constant_term(&self) -> S {
        self.coeff(&Monomial::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.constant_term().is_one()
    }

    /// Largest degree present, `None` for zero.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    fn common(&self, other: &Self) -> Result<S::Domain, SeriesError> {
        if self.d != other.d || self.bound != other.bound {
            return Err(SeriesError::ShapeMismatch(format!(
                "(d={}, N={}) vs (d={}, N={})",
                self.d, self.bound, other.d, other.bound
            )));
        }
        S::meet(&self.domain, &other.domain).ok_or_else(|| {
            SeriesError::ShapeMismatch(format!("{} vs {}", self.domain, other.domain))
        })
    }

    /// Same series viewed in a coarser domain.
    pub fn reduce_to(&self, domain: &S::Domain) -> Self {
        if *domain == self.domain {
            return self.clone();
        }
        Self::from_terms(
            self.d,
            self.bound,
            domain.clone(),
            self.terms.iter().map(|(m, c)| (m.clone(), c.reduce_to(domain))),
        )
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, SeriesError> {
        let dom = self.common(other)?;
        let mut out = self.reduce_to(&dom);
        for (m, c) in &other.terms {
            out.accumulate(m.clone(), c.reduce_to(&dom));
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.try_add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        TruncatedSeries {
            d: self.d,
            bound: self.bound,
            domain: self.domain.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, s: &S) -> Result<Self, SeriesError> {
        let dom = S::meet(&self.domain, &s.domain()).ok_or_else(|| {
            SeriesError::ShapeMismatch(format!("{} vs {}", self.domain, s.domain()))
        })?;
        let s = s.reduce_to(&dom);
        Ok(Self::from_terms(
            self.d,
            self.bound,
            dom.clone(),
            self.terms
                .iter()
                .map(|(m, c)| (m.clone(), c.reduce_to(&dom) * s.clone())),
        ))
    }

    /// Product, dropping every term of degree `>= N`.
    pub fn try_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        let dom = self.common(other)?;
        let limit = self.bound;
        let mut by_degree: Vec<Vec<(&Monomial, S)>> = vec![Vec::new(); limit];
        for (m, c) in &other.terms {
            by_degree[m.degree()].push((m, c.reduce_to(&dom)));
        }
        let mut acc: HashMap<Monomial, S> = HashMap::new();
        for (m1, c1) in &self.terms {
            let c1 = c1.reduce_to(&dom);
            for bucket in by_degree.iter().take(limit - m1.degree()) {
                for (m2, c2) in bucket {
                    let prod = c1.clone() * c2.clone();
                    if prod.is_zero() {
                        continue;
                    }
                    let key = m1.concat(m2);
                    match acc.get_mut(&key) {
                        Some(v) => *v = v.clone() + prod,
                        None => {
                            acc.insert(key, prod);
                        }
                    }
                }
            }
        }
        Ok(TruncatedSeries {
            d: self.d,
            bound: self.bound,
            domain: dom,
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        })
    }

    /// Inverse of a series with invertible constant term, by the Neumann
    /// series on the augmentation part.
    pub fn invert_unit(&self) -> Result<Self, SeriesError> {
        let c0 = self.constant_term();
        let c0_inv = c0.inverse().map_err(|e| match e {
            ScalarError::PrecisionExhausted { .. } => SeriesError::Scalar(e),
            _ => SeriesError::NotInvertible(c0.to_string()),
        })?;
        let dom = c0_inv.domain();
        let base = self.reduce_to(&dom);
        let mut aug = base.clone();
        aug.terms.remove(&Monomial::one());
        // s = c0 (1 + g) with g = c0^-1 * aug, and s^-1 = (sum (-g)^m) c0^-1
        let minus_g = aug.scale(&(-c0_inv.clone()))?;
        let one = Self::one(self.d, self.bound, dom);
        let mut total = one.clone();
        let mut power = one;
        for _ in 1..self.bound {
            power = power.try_mul(&minus_g)?;
            if power.is_zero() {
                break;
            }
            total = total.try_add(&power)?;
        }
        total.scale(&c0_inv)
    }

    /// `(1 + f)^a = 1 + sum_{n >= 1} C(a, n) f^n`, truncated.
    pub fn binomial_power(&self, a: &Exponent) -> Result<Self, SeriesError> {
        let c0 = self.constant_term();
        if !c0.is_one() {
            return Err(SeriesError::ConstantTermNotOne(c0.to_string()));
        }
        let dom = S::exponent_domain(&self.domain, a, (self.bound - 1) as u64)?;
        let base = self.reduce_to(&dom);
        let mut f = base.clone();
        f.terms.remove(&Monomial::one());
        let mut total = Self::one(self.d, self.bound, dom.clone());
        let mut power = total.clone();
        for n in 1..self.bound {
            power = power.try_mul(&f)?;
            if power.is_zero() {
                break;
            }
            let c = S::exponent_binomial(&dom, a, n as u64)?.reduce_to(&dom);
            total = total.try_add(&power.scale(&c)?)?;
        }
        Ok(total)
    }

    /// Drop every monomial of degree `>= new_bound`.
    pub fn truncate(&self, new_bound: usize) -> Result<Self, SeriesError> {
        if new_bound > self.bound {
            return Err(SeriesError::TruncationTooLarge {
                requested: new_bound,
                bound: self.bound,
            });
        }
        Ok(Self::from_terms(
            self.d,
            new_bound.max(1),
            self.domain.clone(),
            self.terms
                .iter()
                .filter(|(m, _)| m.degree() < new_bound)
                .map(|(m, c)| (m.clone(), c.clone())),
        ))
    }

    /// Same coefficients in a series ring with a larger bound (no new terms).
    pub fn lift_bound(&self, new_bound: usize) -> Self {
        assert!(new_bound >= self.bound);
        TruncatedSeries {
            bound: new_bound,
            ..self.clone()
        }
    }

    /// Lowest nonzero degree and the homogeneous slice there.
    pub fn lowest_term(&self) -> Option<(usize, Self)> {
        let deg = self.terms.keys().next()?.degree();
        let slice = self
            .terms
            .iter()
            .take_while(|(m, _)| m.degree() == deg)
            .map(|(m, c)| (m.clone(), c.clone()));
        Some((
            deg,
            Self::from_terms(self.d, self.bound, self.domain.clone(), slice),
        ))
    }

    /// Coefficient-wise change of domain, e.g. reduction mod `p`.
    pub fn map_coefficients<T: Scalar>(
        &self,
        domain: T::Domain,
        f: impl Fn(&S) -> Result<T, ScalarError>,
    ) -> Result<TruncatedSeries<T>, SeriesError> {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| Ok((m.clone(), f(c)?)))
            .collect::<Result<Vec<_>, ScalarError>>()?;
        Ok(TruncatedSeries::from_terms(self.d, self.bound, domain, terms))
    }
}

impl<S: Scalar> fmt::Debug for TruncatedSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[d={} N={} {}] {}", self.d, self.bound, self.domain, self)
    }
}

impl<S: Scalar> fmt::Display for TruncatedSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if m.0.is_empty() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "({c})*{m}")?;
            }
        }
        Ok(())
    }
}

struct TermJson<'a, S>(&'a Monomial, &'a S);

impl<S: Serialize> Serialize for TermJson<'_, S> {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        let mut st = s.serialize_struct("Term", 2)?;
        st.serialize_field("mon", &self.0 .0)?;
        st.serialize_field("c", self.1)?;
        st.end()
    }
}

/// `{"d":2,"N":5,"domain":"q","terms":[{"mon":[0,1],"c":"1/2"}]}`; the
/// prime (and precision) follow `domain` for the modular domains.
impl<S: Scalar> Serialize for TruncatedSeries<S> {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        let mut map = s.serialize_map(None)?;
        map.serialize_entry("d", &self.d)?;
        map.serialize_entry("N", &self.bound)?;
        match S::tag(&self.domain) {
            DomainTag::Q => map.serialize_entry("domain", "q")?,
            DomainTag::Fp { p } => {
                map.serialize_entry("domain", "fp")?;
                map.serialize_entry("p", &p)?;
            }
            DomainTag::Zpk { p, k } => {
                map.serialize_entry("domain", "zpk")?;
                map.serialize_entry("p", &p)?;
                map.serialize_entry("k", &k)?;
            }
        }
        let terms: Vec<_> = self.terms.iter().map(|(m, c)| TermJson(m, c)).collect();
        map.serialize_entry("terms", &terms)?;
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::{Fp, Padic, PadicRing, PrimeField, Rational, RationalField};
    use num_bigint::BigInt;
    use proptest::prelude::*;

    type Q = TruncatedSeries<Rational>;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn qs(bound: usize, terms: &[(&[usize], Rational)]) -> Q {
        Q::from_terms(
            2,
            bound,
            RationalField,
            terms.iter().map(|(m, c)| (Monomial::from(m.to_vec()), c.clone())),
        )
    }

    fn half() -> Exponent {
        Exponent::from_rational(q(1, 2))
    }

    #[test]
    fn additive_identities() {
        let s = qs(4, &[(&[], q(3, 1)), (&[0, 1], q(1, 2))]);
        let z = Q::zero(2, 4, RationalField);
        assert_eq!(s.try_add(&z).unwrap(), s);
        assert!(s.try_add(&s.neg()).unwrap().is_zero());
        let one_plus_y1 = Q::magnus_generator(2, 4, RationalField, 0);
        assert_eq!(
            one_plus_y1.scale(&q(2, 1)).unwrap(),
            qs(4, &[(&[], q(2, 1)), (&[0], q(2, 1))])
        );
    }

    #[test]
    fn product_expansion_and_noncommutativity() {
        let a = Q::magnus_generator(2, 3, RationalField, 0);
        let b = Q::magnus_generator(2, 3, RationalField, 1);
        assert_eq!(
            a.try_mul(&b).unwrap(),
            qs(
                3,
                &[(&[], q(1, 1)), (&[0], q(1, 1)), (&[1], q(1, 1)), (&[0, 1], q(1, 1))]
            )
        );
        let y1 = Q::var(2, 3, RationalField, 0);
        let y2 = Q::var(2, 3, RationalField, 1);
        assert_ne!(y1.try_mul(&y2).unwrap(), y2.try_mul(&y1).unwrap());
    }

    #[test]
    fn geometric_series_oracle() {
        // 1 - y + y^2 - y^3 + y^4 built term by term
        let geo = Q::from_terms(
            2,
            5,
            RationalField,
            (0..5).map(|m| {
                (
                    Monomial::from(vec![0; m]),
                    if m % 2 == 0 { q(1, 1) } else { q(-1, 1) },
                )
            }),
        );
        let a = Q::magnus_generator(2, 5, RationalField, 0);
        assert!(a.try_mul(&geo).unwrap().is_one());
        assert_eq!(a.invert_unit().unwrap(), geo);
    }

    #[test]
    fn inverse_of_two_variable_unit() {
        let s = qs(3, &[(&[], q(1, 1)), (&[0], q(1, 1)), (&[1], q(1, 1))]);
        let expected = qs(
            3,
            &[
                (&[], q(1, 1)),
                (&[0], q(-1, 1)),
                (&[1], q(-1, 1)),
                (&[0, 0], q(1, 1)),
                (&[0, 1], q(1, 1)),
                (&[1, 0], q(1, 1)),
                (&[1, 1], q(1, 1)),
            ],
        );
        let inv = s.invert_unit().unwrap();
        assert_eq!(inv, expected);
        assert!(s.try_mul(&inv).unwrap().is_one());
        assert!(Q::one(2, 3, RationalField).invert_unit().unwrap().is_one());
        assert!(matches!(
            Q::var(2, 3, RationalField, 0).invert_unit(),
            Err(SeriesError::NotInvertible(_))
        ));
        // non-unit constant over Z/3^2
        let ring = PadicRing::new(3, 2).unwrap();
        let c = TruncatedSeries::constant(1, 2, Padic::in_ring(&ring, &BigInt::from(3)));
        assert!(matches!(c.invert_unit(), Err(SeriesError::NotInvertible(_))));
    }

    #[test]
    fn binomial_power_examples() {
        let a = Q::magnus_generator(2, 4, RationalField, 0);
        assert_eq!(
            a.binomial_power(&Exponent::int(2)).unwrap(),
            a.try_mul(&a).unwrap()
        );
        let root = a.binomial_power(&half()).unwrap();
        assert_eq!(
            root,
            qs(
                4,
                &[
                    (&[], q(1, 1)),
                    (&[0], q(1, 2)),
                    (&[0, 0], q(-1, 8)),
                    (&[0, 0, 0], q(1, 16))
                ]
            )
        );
        assert_eq!(root.try_mul(&root).unwrap(), a);

        let f5 = PrimeField::new(5).unwrap();
        let b = TruncatedSeries::<Fp>::magnus_generator(2, 7, f5, 1);
        let r = b.binomial_power(&half()).unwrap();
        assert_eq!(r.try_mul(&r).unwrap(), b);
        let bad = b.binomial_power(&Exponent::from_rational(q(1, 5)));
        assert!(matches!(
            bad,
            Err(SeriesError::Scalar(ScalarError::DenominatorNotInvertible { .. }))
        ));
        let two = Q::one(2, 4, RationalField).scale(&q(2, 1)).unwrap();
        assert!(matches!(
            two.binomial_power(&half()),
            Err(SeriesError::ConstantTermNotOne(_))
        ));
    }

    #[test]
    fn padic_exponent_precision_checked_up_front() {
        let f2 = PrimeField::new(2).unwrap();
        let b = TruncatedSeries::<Fp>::magnus_generator(1, 5, f2, 0);
        // v_2(4!) = 3 so four digits are needed
        let short = Exponent::Padic {
            value: BigInt::from(5),
            precision: 3,
        };
        assert_eq!(
            b.binomial_power(&short),
            Err(SeriesError::Scalar(ScalarError::PrecisionExhausted {
                needed: 4,
                available: 3
            }))
        );
        let ok = Exponent::Padic {
            value: BigInt::from(5),
            precision: 4,
        };
        assert_eq!(
            b.binomial_power(&ok).unwrap(),
            b.binomial_power(&Exponent::int(5)).unwrap()
        );
        let ring = PadicRing::new(2, 6).unwrap();
        let c = TruncatedSeries::<Padic>::magnus_generator(1, 5, ring, 0);
        let r = c.binomial_power(&ok).unwrap();
        assert_eq!(r.domain().precision(), 1);
    }

    #[test]
    fn truncation_examples() {
        let s = qs(4, &[(&[], q(1, 1)), (&[0], q(1, 1)), (&[0, 1], q(1, 1))]);
        assert_eq!(s.truncate(4).unwrap(), s);
        let t = s.truncate(2).unwrap();
        assert_eq!(t, qs(2, &[(&[], q(1, 1)), (&[0], q(1, 1))]));
        assert_eq!(s.truncate(1).unwrap(), Q::one(2, 1, RationalField));
        assert!(s.truncate(5).is_err());
    }

    #[test]
    fn lowest_term_examples() {
        assert!(Q::zero(2, 4, RationalField).lowest_term().is_none());
        let s = qs(
            4,
            &[(&[0, 1], q(1, 1)), (&[1, 0], q(-1, 1)), (&[0, 0, 0], q(1, 1))],
        );
        let (deg, comp) = s.lowest_term().unwrap();
        assert_eq!(deg, 2);
        assert_eq!(comp, qs(4, &[(&[0, 1], q(1, 1)), (&[1, 0], q(-1, 1))]));
        let (deg, comp) = Q::magnus_generator(2, 4, RationalField, 0).lowest_term().unwrap();
        assert_eq!((deg, comp), (0, Q::one(2, 4, RationalField)));
    }

    #[test]
    fn shape_mismatch() {
        let a = Q::one(2, 3, RationalField);
        let b = Q::one(2, 4, RationalField);
        assert!(matches!(a.try_add(&b), Err(SeriesError::ShapeMismatch(_))));
        let c = Q::one(3, 3, RationalField);
        assert!(matches!(a.try_mul(&c), Err(SeriesError::ShapeMismatch(_))));
    }

    #[test]
    fn json_format() {
        let s = qs(5, &[(&[0, 1], q(1, 2))]);
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"d":2,"N":5,"domain":"q","terms":[{"mon":[0,1],"c":"1/2"}]}"#
        );
        let f3 = PrimeField::new(3).unwrap();
        let t = TruncatedSeries::<Fp>::magnus_generator(2, 2, f3, 1);
        assert_eq!(
            serde_json::to_string(&t).unwrap(),
            r#"{"d":2,"N":2,"domain":"fp","p":3,"terms":[{"mon":[],"c":"1"},{"mon":[1],"c":"1"}]}"#
        );
    }

    // -- property tests ----------------------------------------------------

    fn arb_q() -> impl Strategy<Value = Rational> {
        (-6i64..7, 1i64..5).prop_map(|(n, d)| q(n, d))
    }

    fn arb_series(bound: usize) -> impl Strategy<Value = Q> {
        prop::collection::vec(
            (prop::collection::vec(0usize..2, 0..bound), arb_q()),
            0..6,
        )
        .prop_map(move |terms| {
            Q::from_terms(
                2,
                bound,
                RationalField,
                terms.into_iter().map(|(m, c)| (Monomial::from(m), c)),
            )
        })
    }

    fn arb_unit(bound: usize) -> impl Strategy<Value = Q> {
        arb_series(bound).prop_map(move |s| {
            let mut s = s;
            s.terms.remove(&Monomial::one());
            s.try_add(&Q::one(2, bound, RationalField)).unwrap()
        })
    }

    fn arb_exp() -> impl Strategy<Value = Exponent> {
        (-4i64..5, 1i64..4).prop_map(|(n, d)| Exponent::from_rational(q(n, d)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ring_axioms(a in arb_series(5), b in arb_series(5), c in arb_series(5)) {
            let ab_c = a.try_mul(&b).unwrap().try_mul(&c).unwrap();
            let a_bc = a.try_mul(&b.try_mul(&c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            let lhs = a.try_mul(&b.try_add(&c).unwrap()).unwrap();
            let rhs = a.try_mul(&b).unwrap().try_add(&a.try_mul(&c).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
            let lhs = b.try_add(&c).unwrap().try_mul(&a).unwrap();
            let rhs = b.try_mul(&a).unwrap().try_add(&c.try_mul(&a).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn inverse_is_two_sided(u in arb_unit(5)) {
            let inv = u.invert_unit().unwrap();
            prop_assert!(u.try_mul(&inv).unwrap().is_one());
            prop_assert!(inv.try_mul(&u).unwrap().is_one());
        }

        #[test]
        fn action_laws(u in arb_unit(5), a in arb_exp(), b in arb_exp()) {
            let ua = u.binomial_power(&a).unwrap();
            let ub = u.binomial_power(&b).unwrap();
            let sum = Exponent::from_rational(a.as_rational().unwrap() + b.as_rational().unwrap());
            prop_assert_eq!(ua.try_mul(&ub).unwrap(), u.binomial_power(&sum).unwrap());
            let prod = a.checked_mul(&b, None).unwrap();
            prop_assert_eq!(ua.binomial_power(&b).unwrap(), u.binomial_power(&prod).unwrap());
        }

        #[test]
        fn truncation_coherence(a in arb_series(6), u in arb_unit(6), e in arb_exp(), n2 in 1usize..6) {
            let prod = a.try_mul(&u).unwrap().truncate(n2).unwrap();
            let prod2 = a.truncate(n2).unwrap().try_mul(&u.truncate(n2).unwrap()).unwrap();
            prop_assert_eq!(prod, prod2);
            let pw = u.binomial_power(&e).unwrap().truncate(n2).unwrap();
            let pw2 = u.truncate(n2).unwrap().binomial_power(&e).unwrap();
            prop_assert_eq!(pw, pw2);
        }

        #[test]
        fn mod_p_reduction_commutes(
            terms in prop::collection::vec((prop::collection::vec(0usize..2, 0..4), 0i64..1000), 0..6),
            terms2 in prop::collection::vec((prop::collection::vec(0usize..2, 1..4), 0i64..1000), 0..6),
            e in -5i64..6,
        ) {
            let ring = PadicRing::new(3, 4).unwrap();
            let f3 = PrimeField::new(3).unwrap();
            let mk = |t: &Vec<(Vec<usize>, i64)>| TruncatedSeries::<Padic>::from_terms(
                2, 4, ring, t.iter().map(|(m, c)| (Monomial::from(m.clone()), Padic::in_ring(&ring, &BigInt::from(*c)))));
            let red = |s: &TruncatedSeries<Padic>| s.map_coefficients(f3, |c| Ok(Fp::from_integer(&f3, &BigInt::from(c.value().clone())))).unwrap();
            let a = mk(&terms);
            let u = mk(&terms2).try_add(&TruncatedSeries::one(2, 4, ring)).unwrap();
            prop_assert_eq!(red(&a.try_mul(&u).unwrap()), red(&a).try_mul(&red(&u)).unwrap());
            prop_assert_eq!(red(&a.try_add(&u).unwrap()), red(&a).try_add(&red(&u)).unwrap());
            prop_assert_eq!(red(&u.invert_unit().unwrap()), red(&u).invert_unit().unwrap());
            let x = Exponent::int(e);
            prop_assert_eq!(red(&u.binomial_power(&x).unwrap()), red(&u).binomial_power(&x).unwrap());
        }
    }
}
