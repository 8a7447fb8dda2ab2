//! Magnus representation `x_i -> 1 + y_i` of words with exponents, and a
//! semi-decision procedure certifying that a word is nontrivial.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::scalars::{DomainTag, Scalar};
use crate::series::{SeriesError, TruncatedSeries};
use crate::wordexpr::WordExpr;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MagnusError {
    #[error("generator `{0}` is not one of the free generators")]
    UnknownGenerator(String),
    #[error("invalid degree schedule: {0}")]
    InvalidSchedule(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Free generator names, truncation bound and coefficient domain.
#[derive(Debug, Clone)]
pub struct MagnusContext<S: Scalar> {
    generators: Vec<String>,
    bound: usize,
    domain: S::Domain,
}

/// `x1, ..., xd`.
pub fn default_generators(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

impl<S: Scalar> MagnusContext<S> {
    pub fn new(d: usize, bound: usize, domain: S::Domain) -> Self {
        Self::with_generators(default_generators(d), bound, domain)
    }

    pub fn with_generators(generators: Vec<String>, bound: usize, domain: S::Domain) -> Self {
        assert!(bound >= 1, "truncation bound must be positive");
        MagnusContext {
            generators,
            bound,
            domain,
        }
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn domain(&self) -> &S::Domain {
        &self.domain
    }

    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    /// Same context at another truncation bound.
    pub fn at_bound(&self, bound: usize) -> Self {
        MagnusContext {
            bound,
            ..self.clone()
        }
    }

    pub fn one(&self) -> TruncatedSeries<S> {
        TruncatedSeries::one(self.rank(), self.bound, self.domain.clone())
    }

    fn generator_image(&self, name: &str) -> Result<TruncatedSeries<S>, MagnusError> {
        let i = self
            .generators
            .iter()
            .position(|g| g == name)
            .ok_or_else(|| MagnusError::UnknownGenerator(name.to_string()))?;
        Ok(TruncatedSeries::magnus_generator(
            self.rank(),
            self.bound,
            self.domain.clone(),
            i,
        ))
    }
}

/// Evaluate a word under `x_i -> 1 + y_i`; powers use the binomial series.
pub fn eval<S: Scalar>(
    w: &WordExpr,
    ctx: &MagnusContext<S>,
) -> Result<TruncatedSeries<S>, MagnusError> {
    Ok(match w {
        WordExpr::Generator { name } => ctx.generator_image(name)?,
        WordExpr::Product { factors } => {
            let mut acc = ctx.one();
            for f in factors {
                acc = acc.try_mul(&eval(f, ctx)?)?;
            }
            acc
        }
        WordExpr::Power { base, exponent } => eval(base, ctx)?.binomial_power(exponent)?,
        WordExpr::Commutator { u, v } => {
            let a = eval(u, ctx)?;
            let b = eval(v, ctx)?;
            a.try_mul(&b)?
                .try_mul(&a.invert_unit()?)?
                .try_mul(&b.invert_unit()?)?
        }
    })
}

/// Witness that a word survives in a nilpotent quotient: the lowest-degree
/// part of `phi(w) - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate<S: Scalar> {
    pub expr: WordExpr,
    pub degree: usize,
    /// Homogeneous of degree `degree`, stored at truncation `degree + 1`.
    pub component: TruncatedSeries<S>,
}

impl<S: Scalar> Serialize for Certificate<S> {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        let mut st = s.serialize_struct("Certificate", 4)?;
        st.serialize_field("expr", &self.expr.to_string())?;
        st.serialize_field("degree", &self.degree)?;
        st.serialize_field("component", &self.component)?;
        st.serialize_field("coefficients", &S::tag(self.component.domain()))?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certification<S: Scalar> {
    Certified(Certificate<S>),
    /// Nothing seen below `max_bound`; triviality is never claimed.
    Inconclusive { max_bound: usize },
}

/// Doubling schedule `2, 4, 8, ...` up to and including `max_bound`.
pub fn default_schedule(max_bound: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = 2;
    while n < max_bound {
        out.push(n);
        n *= 2;
    }
    out.push(max_bound.max(2));
    out
}

pub const DEFAULT_MAX_BOUND: usize = 16;

/// Evaluate at each truncation bound of `schedule` in turn and certify at
/// the first one where `phi(w) != 1`.
pub fn certify_nontrivial<S: Scalar>(
    w: &WordExpr,
    ctx: &MagnusContext<S>,
    schedule: &[usize],
) -> Result<Certification<S>, MagnusError> {
    if schedule.is_empty() {
        return Err(MagnusError::InvalidSchedule("empty".into()));
    }
    if schedule.windows(2).any(|p| p[0] >= p[1]) || schedule[0] < 1 {
        return Err(MagnusError::InvalidSchedule(format!(
            "{schedule:?} is not strictly increasing"
        )));
    }
    for &bound in schedule {
        let value = eval(w, &ctx.at_bound(bound))?;
        let aug = value.try_sub(&ctx.at_bound(bound).one())?;
        if let Some((degree, _)) = aug.lowest_term() {
            // recompute at the smallest bound that sees this degree
            let exact = eval(w, &ctx.at_bound(degree + 1))?;
            let aug = exact.try_sub(&ctx.at_bound(degree + 1).one())?;
            let (d2, component) = aug
                .lowest_term()
                .expect("a term of this degree survives truncation");
            debug_assert_eq!(d2, degree);
            return Ok(Certification::Certified(Certificate {
                expr: w.clone(),
                degree,
                component,
            }));
        }
    }
    Ok(Certification::Inconclusive {
        max_bound: *schedule.last().unwrap(),
    })
}

/// Description of the quotient in which a certified word is nontrivial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NilpotenceWitness {
    /// Nilpotency class of the separating quotient.
    pub class: usize,
    /// Truncation bound `n + 1` of the unit group `1 + Delta / (1 + Delta)^(n+1)`.
    pub quotient_bound: usize,
    pub statement: String,
}

pub fn nilpotence_witness<S: Scalar>(cert: &Certificate<S>) -> NilpotenceWitness {
    let n = cert.degree;
    let ring = match S::tag(cert.component.domain()) {
        DomainTag::Q => "torsion-free nilpotent".to_string(),
        DomainTag::Fp { p } | DomainTag::Zpk { p, .. } => format!("finite {p}-group"),
    };
    let statement = if n == 1 {
        format!(
            "`{}` has nonzero image in the abelianization (degree-1 part {})",
            cert.expr, cert.component
        )
    } else {
        format!(
            "`{}` is nontrivial in 1 + Delta / (1 + Delta)^{} ({ring} quotient of class {n}); leading part {}",
            cert.expr,
            n + 1,
            cert.component
        )
    };
    NilpotenceWitness {
        class: n,
        quotient_bound: n + 1,
        statement,
    }
}
