//! Fox calculus, matrices over group algebras, finite-level rank functions
//! and the mod-p first Betti number approximation along `Q_n`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pquot::{hom_from_words, FiniteQuotient, ImageGroup, QuotientError, RelatorCheck};
use crate::scalars::{PrimeField, Rational, Scalar};
use crate::wordexpr::{parse_in, reduce_letters, Letter, ParseError, WordError, WordExpr};
use crate::Fp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoxError {
    #[error("relator {0} is trivial after free reduction")]
    EmptyRelator(usize),
    #[error("relator {0} has a non-integer exponent")]
    NonIntegerRelator(usize),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("duplicate generator `{0}`")]
    DuplicateGenerator(String),
    #[error("matrix shapes {0:?} and {1:?} do not fit")]
    Shape((usize, usize), (usize, usize)),
    #[error("coefficients mod {found} cannot be induced to a mod-{expected} quotient")]
    PrimeMismatch { expected: u64, found: u64 },
    #[error("ambient rank must be at least 1")]
    ZeroRank,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Quotient(#[from] QuotientError),
}

/// Word in the generators of a presentation, by generator index.
pub type Word = Vec<Letter<usize>>;

/// A finite presentation with integer-exponent relators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    generators: Vec<String>,
    relators: Vec<WordExpr>,
    reduced: Vec<Word>,
}

impl Presentation {
    pub fn new(generators: Vec<String>, relators: Vec<WordExpr>) -> Result<Self, FoxError> {
        for (i, g) in generators.iter().enumerate() {
            if generators[..i].contains(g) {
                return Err(FoxError::DuplicateGenerator(g.clone()));
            }
        }
        let pos: HashMap<&str, usize> = generators
            .iter()
            .enumerate()
            .map(|(i, g)| (g.as_str(), i))
            .collect();
        let mut reduced = Vec::with_capacity(relators.len());
        for (i, r) in relators.iter().enumerate() {
            if !r.is_integral() {
                return Err(FoxError::NonIntegerRelator(i));
            }
            let letters = r
                .free_reduce()?
                .into_iter()
                .map(|l| {
                    pos.get(l.gen.as_str())
                        .map(|&g| Letter::new(g, l.inverse))
                        .ok_or_else(|| FoxError::UnknownGenerator(l.gen.clone()))
                })
                .collect::<Result<Word, _>>()?;
            if letters.is_empty() {
                return Err(FoxError::EmptyRelator(i));
            }
            reduced.push(letters);
        }
        Ok(Presentation {
            generators,
            relators,
            reduced,
        })
    }

    /// Free group on the given generators.
    pub fn free(generators: Vec<String>) -> Self {
        Presentation::new(generators, Vec::new()).expect("no relators")
    }

    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    pub fn relators(&self) -> &[WordExpr] {
        &self.relators
    }

    /// Freely reduced relators as index words.
    pub fn relator_words(&self) -> &[Word] {
        &self.reduced
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g == name)
    }

    /// Index word of an integer-exponent expression in the generators.
    pub fn word(&self, w: &WordExpr) -> Result<Word, FoxError> {
        w.free_reduce()?
            .into_iter()
            .map(|l| {
                self.generator_index(&l.gen)
                    .map(|g| Letter::new(g, l.inverse))
                    .ok_or_else(|| FoxError::UnknownGenerator(l.gen.clone()))
            })
            .collect()
    }
}

/// How relators that do not vanish in `Q_n` are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelatorPolicy {
    /// Every relator must map to the identity; otherwise the level fails.
    #[default]
    Require,
    /// Quotient the image by the normal closure of the relator images.
    Factor,
}

/// A presentation together with images of its generators in the free
/// group on `x1..xd` with rational or p-adic exponents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappedPresentation {
    pub presentation: Presentation,
    pub rho: BTreeMap<String, WordExpr>,
    pub ambient_rank: usize,
}

impl MappedPresentation {
    pub fn new(
        presentation: Presentation,
        rho: BTreeMap<String, WordExpr>,
        ambient_rank: usize,
    ) -> Result<Self, FoxError> {
        if ambient_rank == 0 {
            return Err(FoxError::ZeroRank);
        }
        let ambient = crate::magnus::default_generators(ambient_rank);
        for g in presentation.generators() {
            let w = rho
                .get(g)
                .ok_or_else(|| WordError::MissingImage(g.clone()))?;
            if let Some(x) = w.generators().into_iter().find(|x| !ambient.contains(x)) {
                return Err(FoxError::UnknownGenerator(x));
            }
        }
        Ok(MappedPresentation {
            presentation,
            rho,
            ambient_rank,
        })
    }

    /// The free group of rank `d` mapped identically onto `x1..xd`.
    pub fn free(names: &[&str]) -> Self {
        let gens: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let rho = gens
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), WordExpr::gen(format!("x{}", i + 1))))
            .collect();
        MappedPresentation::new(Presentation::free(gens), rho, names.len()).expect("valid")
    }

    /// The finite quotient of the presented group at level `n`, with the
    /// flag telling whether every relator already vanished in `Q_n`.
    pub fn level_group(
        &self,
        quotient: Arc<FiniteQuotient>,
        policy: RelatorPolicy,
    ) -> Result<LevelGroup, FoxError> {
        let hom = hom_from_words(self.presentation.generators(), &self.rho, quotient)?;
        let check = hom.check_relators(self.presentation.relators())?;
        let relators_vanish = check.holds();
        let group = match (check, policy) {
            (RelatorCheck::Holds, _) => hom.image().clone(),
            (RelatorCheck::Violated { relator, .. }, RelatorPolicy::Require) => {
                return Err(QuotientError::RelatorViolation {
                    relator: relator.to_string(),
                    level: hom.quotient().level(),
                }
                .into())
            }
            (RelatorCheck::Violated { .. }, RelatorPolicy::Factor) => {
                hom.image_mod_relators(self.presentation.relators())?
            }
        };
        Ok(LevelGroup {
            dense: relators_vanish && hom.check_density(),
            relators_vanish,
            group,
        })
    }

    pub fn to_file(&self, p: u64, mode: RelatorPolicy) -> PresentationFile {
        PresentationFile {
            p,
            ambient_rank: self.ambient_rank,
            generators: self.presentation.generators().to_vec(),
            relators: self.presentation.relators().iter().map(|r| r.to_string()).collect(),
            rho: self.rho.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
            mode,
        }
    }
}

/// The group `G/G_n` seen at one level.
#[derive(Debug, Clone)]
pub struct LevelGroup {
    pub group: ImageGroup,
    pub relators_vanish: bool,
    /// Relators vanish and the image is all of `Q_n`.
    pub dense: bool,
}

/// On-disk form of a mapped presentation, words as strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentationFile {
    pub p: u64,
    pub ambient_rank: usize,
    pub generators: Vec<String>,
    #[serde(default)]
    pub relators: Vec<String>,
    pub rho: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "is_require")]
    pub mode: RelatorPolicy,
}

fn is_require(m: &RelatorPolicy) -> bool {
    *m == RelatorPolicy::Require
}

impl PresentationFile {
    pub fn to_mapped(&self) -> Result<MappedPresentation, FoxError> {
        let relators = self
            .relators
            .iter()
            .map(|r| parse_in(r, &self.generators))
            .collect::<Result<Vec<_>, _>>()?;
        let presentation = Presentation::new(self.generators.clone(), relators)?;
        let ambient = crate::magnus::default_generators(self.ambient_rank);
        let rho = self
            .rho
            .iter()
            .map(|(k, v)| Ok((k.clone(), parse_in(v, &ambient)?)))
            .collect::<Result<BTreeMap<_, _>, FoxError>>()?;
        MappedPresentation::new(presentation, rho, self.ambient_rank)
    }
}

// ---------------------------------------------------------------------------
// Group ring

/// Element of the group ring of a free group: a finite combination of
/// reduced words with nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupRingElem<S: Scalar> {
    domain: S::Domain,
    terms: BTreeMap<Word, S>,
}

impl<S: Scalar> GroupRingElem<S> {
    pub fn zero(domain: S::Domain) -> Self {
        GroupRingElem {
            domain,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(domain: S::Domain) -> Self {
        Self::monomial(domain.clone(), Vec::new(), S::one(&domain))
    }

    /// `c * w`, with `w` reduced first.
    pub fn monomial(domain: S::Domain, w: Word, c: S) -> Self {
        let mut e = Self::zero(domain);
        e.add_term(reduce_letters(w), c);
        e
    }

    pub fn word(domain: S::Domain, w: Word) -> Self {
        let one = S::one(&domain);
        Self::monomial(domain, w, one)
    }

    /// `g - 1` for a single generator.
    pub fn generator_minus_one(domain: S::Domain, g: usize) -> Self {
        Self::word(domain.clone(), vec![Letter::new(g, false)]).sub(&Self::one(domain))
    }

    fn add_term(&mut self, w: Word, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&w) {
            Some(old) => {
                let s = old + c;
                if !s.is_zero() {
                    self.terms.insert(w, s);
                }
            }
            None => {
                self.terms.insert(w, c);
            }
        }
    }

    pub fn domain(&self) -> &S::Domain {
        &self.domain
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &S)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, w: &[Letter<usize>]) -> S {
        self.terms
            .get(w)
            .cloned()
            .unwrap_or_else(|| S::zero(&self.domain))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        GroupRingElem {
            domain: self.domain.clone(),
            terms: self.terms.iter().map(|(w, c)| (w.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.domain.clone());
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                let mut w = u.clone();
                w.extend(v.iter().cloned());
                out.add_term(reduce_letters(w), a.clone() * b.clone());
            }
        }
        out
    }

    /// Sum of coefficients.
    pub fn augmentation(&self) -> S {
        self.terms
            .values()
            .fold(S::zero(&self.domain), |acc, c| acc + c.clone())
    }

    /// Render with generator names, e.g. `1 - a b a^-1`.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        DisplayElem { e: self, names }
    }
}

struct DisplayElem<'a, S: Scalar> {
    e: &'a GroupRingElem<S>,
    names: &'a [String],
}

impl<S: Scalar> fmt::Display for DisplayElem<'_, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.e.is_zero() {
            return f.write_str("0");
        }
        for (i, (w, c)) in self.e.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            let word: Vec<String> = w
                .iter()
                .map(|l| {
                    let n = &self.names[l.gen];
                    if l.inverse {
                        format!("{n}^-1")
                    } else {
                        n.clone()
                    }
                })
                .collect();
            match (c.is_one(), w.is_empty()) {
                (_, true) => write!(f, "{c}")?,
                (true, false) => write!(f, "{}", word.join(" "))?,
                (false, false) => write!(f, "({c}) {}", word.join(" "))?,
            }
        }
        Ok(())
    }
}

/// Fox derivative `∂w/∂x` of a word in generator indices.
pub fn fox_derivative<S: Scalar>(w: &[Letter<usize>], x: usize, domain: &S::Domain) -> GroupRingElem<S> {
    let w = reduce_letters(w.to_vec());
    let mut out = GroupRingElem::zero(domain.clone());
    for (i, l) in w.iter().enumerate() {
        if l.gen != x {
            continue;
        }
        if l.inverse {
            out.add_term(w[..=i].to_vec(), -S::one(domain));
        } else {
            out.add_term(w[..i].to_vec(), S::one(domain));
        }
    }
    out
}

/// Relator-by-generator Jacobian.
pub fn fox_jacobian<S: Scalar>(p: &Presentation, domain: &S::Domain) -> GroupRingMatrix<S> {
    let n = p.generators().len();
    let mut m = GroupRingMatrix::zero(p.relator_words().len(), n, domain.clone());
    for (i, r) in p.relator_words().iter().enumerate() {
        for x in 0..n {
            m.set(i, x, fox_derivative(r, x, domain));
        }
    }
    m
}

/// Column of `x - 1` over the generators.
pub fn augmentation_column<S: Scalar>(num_generators: usize, domain: &S::Domain) -> GroupRingMatrix<S> {
    let mut m = GroupRingMatrix::zero(num_generators, 1, domain.clone());
    for x in 0..num_generators {
        m.set(x, 0, GroupRingElem::generator_minus_one(domain.clone(), x));
    }
    m
}

/// Rectangular matrix over a free group ring, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupRingMatrix<S: Scalar> {
    rows: usize,
    cols: usize,
    domain: S::Domain,
    entries: Vec<GroupRingElem<S>>,
}

impl<S: Scalar> GroupRingMatrix<S> {
    pub fn zero(rows: usize, cols: usize, domain: S::Domain) -> Self {
        GroupRingMatrix {
            rows,
            cols,
            entries: vec![GroupRingElem::zero(domain.clone()); rows * cols],
            domain,
        }
    }

    pub fn identity(k: usize, domain: S::Domain) -> Self {
        let mut m = Self::zero(k, k, domain.clone());
        for i in 0..k {
            m.set(i, i, GroupRingElem::one(domain.clone()));
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<GroupRingElem<S>>>, domain: S::Domain) -> Result<Self, FoxError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(FoxError::Shape((r, c), (1, bad.len())));
        }
        Ok(GroupRingMatrix {
            rows: r,
            cols: c,
            domain,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn domain(&self) -> &S::Domain {
        &self.domain
    }

    pub fn get(&self, i: usize, j: usize) -> &GroupRingElem<S> {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: GroupRingElem<S>) {
        self.entries[i * self.cols + j] = e;
    }

    pub fn mul(&self, other: &Self) -> Result<Self, FoxError> {
        if self.cols != other.rows {
            return Err(FoxError::Shape((self.rows, self.cols), (other.rows, other.cols)));
        }
        let mut out = Self::zero(self.rows, other.cols, self.domain.clone());
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = GroupRingElem::zero(self.domain.clone());
                for k in 0..self.cols {
                    acc = acc.add(&self.get(i, k).mul(other.get(k, j)));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// `[a b; c d]` from four blocks with matching sizes.
    pub fn blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self, FoxError> {
        if a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols {
            return Err(FoxError::Shape((a.rows, a.cols), (d.rows, d.cols)));
        }
        let rows = a.rows + c.rows;
        let cols = a.cols + b.cols;
        let mut out = Self::zero(rows, cols, a.domain.clone());
        for (m, r0, c0) in [(a, 0, 0), (b, 0, a.cols), (c, a.rows, 0), (d, a.rows, a.cols)] {
            for i in 0..m.rows {
                for j in 0..m.cols {
                    out.set(r0 + i, c0 + j, m.get(i, j).clone());
                }
            }
        }
        Ok(out)
    }

    pub fn block_diag(a: &Self, b: &Self) -> Self {
        let z1 = Self::zero(a.rows, b.cols, a.domain.clone());
        let z2 = Self::zero(b.rows, a.cols, a.domain.clone());
        Self::blocks(a, &z1, &z2, b).expect("shapes fit")
    }
}

// ---------------------------------------------------------------------------
// Sparse F_p matrices

/// Sparse matrix over `F_p`; each row sorted by column with nonzero values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpMatrix {
    p: u64,
    rows: usize,
    cols: usize,
    data: Vec<Vec<(usize, u64)>>,
}

impl FpMatrix {
    pub fn zero(p: u64, rows: usize, cols: usize) -> Self {
        FpMatrix {
            p,
            rows,
            cols,
            data: vec![Vec::new(); rows],
        }
    }

    pub fn identity(p: u64, k: usize) -> Self {
        let mut m = Self::zero(p, k, k);
        for i in 0..k {
            m.data[i].push((i, 1 % p));
        }
        m.data.iter_mut().for_each(|r| r.retain(|&(_, v)| v != 0));
        m
    }

    /// From dense rows of residues (reduced mod p).
    pub fn from_dense(p: u64, rows: &[Vec<u64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let data = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter_map(|(j, &v)| (v % p != 0).then_some((j, v % p)))
                    .collect()
            })
            .collect();
        FpMatrix {
            p,
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[(usize, u64)] {
        &self.data[i]
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map_or(0, |k| self.data[i][k].1)
    }

    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        let mut out = vec![vec![0; self.cols]; self.rows];
        for (i, r) in self.data.iter().enumerate() {
            for &(j, v) in r {
                out[i][j] = v;
            }
        }
        out
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn vstack(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        FpMatrix {
            p: self.p,
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }
}

fn inv_mod(a: u64, p: u64) -> u64 {
    let mut r = 1u64;
    let mut b = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// `row -= f * pivot`, both sorted sparse rows.
fn axpy(row: &[(usize, u64)], f: u64, pivot: &[(usize, u64)], p: u64) -> Vec<(usize, u64)> {
    let mut out = Vec::with_capacity(row.len() + pivot.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < pivot.len() {
        let ci = row.get(i).map_or(usize::MAX, |e| e.0);
        let cj = pivot.get(j).map_or(usize::MAX, |e| e.0);
        if ci < cj {
            out.push(row[i]);
            i += 1;
        } else {
            let sub = f * pivot[j].1 % p;
            let v = if ci == cj {
                let v = (row[i].1 + p - sub) % p;
                i += 1;
                v
            } else {
                (p - sub) % p
            };
            j += 1;
            if v != 0 {
                out.push((cj, v));
            }
        }
    }
    out
}

/// Exact rank over `F_p` by row reduction, pivoting on each row's first
/// nonzero column.
pub fn rank_fp(m: &FpMatrix) -> usize {
    let p = m.p;
    let mut pivots: HashMap<usize, Vec<(usize, u64)>> = HashMap::new();
    for r in &m.data {
        let mut row = r.clone();
        while let Some(&(c, v)) = row.first() {
            match pivots.get(&c) {
                Some(piv) => row = axpy(&row, v, piv, p),
                None => {
                    let inv = inv_mod(v, p);
                    row.iter_mut().for_each(|e| e.1 = e.1 * inv % p);
                    pivots.insert(c, row);
                    break;
                }
            }
        }
    }
    pivots.len()
}

// ---------------------------------------------------------------------------
// Induction to finite levels

/// Expand each entry through the right-regular representation of the finite
/// group: block `(i, j)` has, in row `q`, coefficient `c_w` at column
/// `q * w` for each term `c_w w`.
pub fn induce_matrix(m: &GroupRingMatrix<Fp>, group: &ImageGroup) -> Result<FpMatrix, FoxError> {
    let p = m.domain().p();
    let qp = group.quotient().p();
    if p != qp {
        return Err(FoxError::PrimeMismatch { expected: qp, found: p });
    }
    let n = group.order();
    let mut cache: HashMap<&Word, Vec<usize>> = HashMap::new();
    for e in &m.entries {
        for (w, _) in e.terms() {
            cache.entry(w).or_insert_with(|| group.word_perm(w));
        }
    }
    let mut out = FpMatrix::zero(p, m.rows * n, m.cols * n);
    for i in 0..m.rows {
        #[allow(clippy::needless_range_loop)]
        for q in 0..n {
            let mut row: Vec<(usize, u64)> = Vec::new();
            for j in 0..m.cols {
                for (w, c) in m.get(i, j).terms() {
                    row.push((j * n + cache[w][q], c.value()));
                }
            }
            row.sort_unstable_by_key(|e| e.0);
            let mut merged: Vec<(usize, u64)> = Vec::with_capacity(row.len());
            for (c, v) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 = (last.1 + v) % p,
                    _ => merged.push((c, v)),
                }
            }
            merged.retain(|e| e.1 != 0);
            out.data[i * n + q] = merged;
        }
    }
    Ok(out)
}

/// Normalized finite-level rank of a group-ring matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankReport {
    pub level: usize,
    /// `|Q_n|`.
    pub order: usize,
    /// `|G : G_n|`, the order of the finite group the matrix is induced to.
    pub index: usize,
    pub raw_rank: usize,
    pub rank: Rational,
}

pub fn sylvester_rank(m: &GroupRingMatrix<Fp>, group: &ImageGroup) -> Result<RankReport, FoxError> {
    let raw = rank_fp(&induce_matrix(m, group)?);
    Ok(RankReport {
        level: group.quotient().level(),
        order: group.quotient().order(),
        index: group.order(),
        raw_rank: raw,
        rank: Rational::new(raw as i64, group.order() as i64).expect("nonzero order"),
    })
}

// ---------------------------------------------------------------------------
// Betti numbers

/// One level of the mod-p first Betti number approximation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelRecord {
    pub n: usize,
    /// `|Q_n|`.
    pub order: usize,
    /// `|G : G_n|`.
    pub index: usize,
    pub rank_d1: usize,
    pub rank_d2: usize,
    /// `dim H_1(G_n; F_p)`.
    pub h1: usize,
    /// `h1 / index`.
    pub b: Rational,
    pub dense: bool,
    pub relators_vanish: bool,
    /// `b >= (d - 1) + 1/|Q_n|`.
    pub lower_bound_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Beta1Report {
    pub p: u64,
    pub ambient_rank: usize,
    pub mode: RelatorPolicy,
    pub levels: Vec<LevelRecord>,
    /// Observed only: `b_n` does not increase as `n` grows over the levels given.
    pub nonincreasing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Beta1Options {
    pub policy: RelatorPolicy,
    pub cap: usize,
    /// Compute levels on the rayon pool.
    pub parallel: bool,
}

impl Default for Beta1Options {
    fn default() -> Self {
        Beta1Options {
            policy: RelatorPolicy::Require,
            cap: crate::pquot::DEFAULT_CAP,
            parallel: false,
        }
    }
}

/// `dim H_1` of the kernel of `G -> group`, with coefficients in `F_p`,
/// from the presentation complex induced to the finite group.
pub fn h1_at(
    g: &MappedPresentation,
    lg: &LevelGroup,
) -> Result<LevelRecord, FoxError> {
    let q = lg.group.quotient();
    let field = q.field();
    let pres = &g.presentation;
    let d1 = augmentation_column::<Fp>(pres.generators().len(), &field);
    let d2 = fox_jacobian::<Fp>(pres, &field);
    let n = lg.group.order();
    let rank_d1 = rank_fp(&induce_matrix(&d1, &lg.group)?);
    let rank_d2 = rank_fp(&induce_matrix(&d2, &lg.group)?);
    let h1 = pres.generators().len() * n - rank_d1 - rank_d2;
    let b = Rational::new(h1 as i64, n as i64).expect("nonzero");
    let bound = Rational::from_int(g.ambient_rank as i64 - 1)
        + Rational::new(1, q.order() as i64).expect("nonzero");
    Ok(LevelRecord {
        n: q.level(),
        order: q.order(),
        index: n,
        rank_d1,
        rank_d2,
        h1,
        lower_bound_ok: b >= bound,
        b,
        dense: lg.dense,
        relators_vanish: lg.relators_vanish,
    })
}

fn beta1_level(
    g: &MappedPresentation,
    field: PrimeField,
    n: usize,
    opts: &Beta1Options,
) -> Result<LevelRecord, FoxError> {
    let q = Arc::new(FiniteQuotient::build(field.p(), g.ambient_rank, n, opts.cap)?);
    let lg = g.level_group(q, opts.policy)?;
    h1_at(g, &lg)
}

/// `b_n = dim H_1(G_n; F_p) / |G : G_n|` at each requested level.
pub fn beta1_sequence(
    g: &MappedPresentation,
    p: u64,
    levels: &[usize],
    opts: &Beta1Options,
) -> Result<Beta1Report, FoxError> {
    beta1_sequence_with(g, p, levels, opts, |_| {})
}

/// As [`beta1_sequence`], calling `on_level` after each completed level
/// (in level order, also when running in parallel).
pub fn beta1_sequence_with(
    g: &MappedPresentation,
    p: u64,
    levels: &[usize],
    opts: &Beta1Options,
    mut on_level: impl FnMut(&LevelRecord),
) -> Result<Beta1Report, FoxError> {
    let field = PrimeField::new(p).map_err(QuotientError::from)?;
    let records = if opts.parallel {
        let results: Vec<Result<LevelRecord, FoxError>> = levels
            .par_iter()
            .map(|&n| beta1_level(g, field, n, opts))
            .collect();
        let mut out = Vec::with_capacity(results.len());
        for r in results {
            let r = r?;
            on_level(&r);
            out.push(r);
        }
        out
    } else {
        let mut out = Vec::with_capacity(levels.len());
        for &n in levels {
            let r = beta1_level(g, field, n, opts)?;
            on_level(&r);
            out.push(r);
        }
        out
    };
    let mut by_level: Vec<&LevelRecord> = records.iter().collect();
    by_level.sort_by_key(|r| r.n);
    let nonincreasing = by_level.windows(2).all(|w| w[1].b <= w[0].b);
    Ok(Beta1Report {
        p,
        ambient_rank: g.ambient_rank,
        mode: opts.policy,
        levels: records,
        nonincreasing,
    })
}

// ---------------------------------------------------------------------------
// Sylvester axioms

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axiom {
    SMat1,
    SMat2,
    SMat3,
    SMat4,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomFailure {
    pub axiom: Axiom,
    pub trial: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub seed: u64,
    pub trials: usize,
    pub checks: usize,
    pub failure: Option<AxiomFailure>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxiomBounds {
    pub max_dim: usize,
    pub max_terms: usize,
    pub max_word_len: usize,
}

impl Default for AxiomBounds {
    fn default() -> Self {
        AxiomBounds {
            max_dim: 3,
            max_terms: 3,
            max_word_len: 4,
        }
    }
}

fn random_elem(rng: &mut ChaCha8Rng, field: PrimeField, gens: usize, b: &AxiomBounds) -> GroupRingElem<Fp> {
    let mut e = GroupRingElem::zero(field);
    for _ in 0..rng.gen_range(0..=b.max_terms) {
        let len = rng.gen_range(0..=b.max_word_len);
        let w: Word = (0..len)
            .map(|_| Letter::new(rng.gen_range(0..gens), rng.gen_bool(0.5)))
            .collect();
        let c = field.elem(rng.gen_range(1..field.p() as i64));
        e = e.add(&GroupRingElem::monomial(field, w, c));
    }
    e
}

fn random_matrix(
    rng: &mut ChaCha8Rng,
    field: PrimeField,
    gens: usize,
    rows: usize,
    cols: usize,
    b: &AxiomBounds,
) -> GroupRingMatrix<Fp> {
    let mut m = GroupRingMatrix::zero(rows, cols, field);
    for i in 0..rows {
        for j in 0..cols {
            m.set(i, j, random_elem(rng, field, gens, b));
        }
    }
    m
}

/// Randomized check of the four Sylvester matrix rank axioms for the
/// normalized rank over `group`. Deterministic in `seed`.
pub fn sylvester_axiom_suite(
    group: &ImageGroup,
    trials: usize,
    bounds: AxiomBounds,
    seed: u64,
) -> Result<AxiomReport, FoxError> {
    let field = group.quotient().field();
    let gens = group.num_generators();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rk = |m: &GroupRingMatrix<Fp>| sylvester_rank(m, group).map(|r| r.rank);
    let mut checks = 0;
    let fail = |axiom, trial, checks, detail: String| AxiomReport {
        seed,
        trials,
        checks,
        failure: Some(AxiomFailure { axiom, trial, detail }),
    };
    for t in 0..trials {
        let dim = |rng: &mut ChaCha8Rng| rng.gen_range(1..=bounds.max_dim);
        let (r0, c0) = (dim(&mut rng), dim(&mut rng));
        let zero = rk(&GroupRingMatrix::zero(r0, c0, field))?;
        let one = rk(&GroupRingMatrix::identity(1, field))?;
        checks += 1;
        if zero != Rational::zero() || one != Rational::one() {
            return Ok(fail(Axiom::SMat1, t, checks, format!("rk(0) = {zero}, rk(1) = {one}")));
        }

        let (a, b, c) = (dim(&mut rng), dim(&mut rng), dim(&mut rng));
        let m1 = random_matrix(&mut rng, field, gens, a, b, &bounds);
        let m2 = random_matrix(&mut rng, field, gens, b, c, &bounds);
        let (k1, k2) = (rk(&m1)?, rk(&m2)?);
        let k12 = rk(&m1.mul(&m2)?)?;
        checks += 1;
        if k12 > k1.clone().min(k2.clone()) {
            return Ok(fail(Axiom::SMat2, t, checks, format!("rk(M1 M2) = {k12} > min({k1}, {k2})")));
        }

        let m3 = random_matrix(&mut rng, field, gens, b, c, &bounds);
        let k3 = rk(&m3)?;
        let kd = rk(&GroupRingMatrix::block_diag(&m1, &m3))?;
        checks += 1;
        if kd != k1.clone() + k3.clone() {
            return Ok(fail(Axiom::SMat3, t, checks, format!("rk(diag) = {kd} != {k1} + {k3}")));
        }

        let m4 = random_matrix(&mut rng, field, gens, a, c, &bounds);
        let zero_block = GroupRingMatrix::zero(b, b, field);
        let tri = GroupRingMatrix::blocks(&m1, &m4, &zero_block, &m3)?;
        let kt = rk(&tri)?;
        checks += 1;
        if kt < k1.clone() + k3.clone() {
            return Ok(fail(Axiom::SMat4, t, checks, format!("rk(triangular) = {kt} < {k1} + {k3}")));
        }
    }
    Ok(AxiomReport {
        seed,
        trials,
        checks,
        failure: None,
    })
}
