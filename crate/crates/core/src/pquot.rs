//! Finite p-quotients `Q_n`: the image of the free group in the units of
//! `F_p<y_1..y_d>` truncated at degree `n`, enumerated by breadth-first
//! closure. Their kernels form the dimension-subgroup chain.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::magnus::{eval, MagnusContext, MagnusError};
use crate::scalars::{PrimeField, ScalarError};
use crate::wordexpr::{Letter, WordError, WordExpr};
use crate::{FpMagnusContext, FpSeries};

/// Default bound on the number of enumerated group elements.
pub const DEFAULT_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuotientError {
    #[error("quotient level must be at least 2, got {0}")]
    InvalidLevel(usize),
    #[error("enumeration cap {cap} exceeded ({reached} elements reached)")]
    CapExceeded { cap: usize, reached: usize },
    #[error("relator `{relator}` is not trivial in the level-{level} quotient")]
    RelatorViolation { relator: String, level: usize },
    #[error("element {0} is not in the quotient")]
    NotInQuotient(String),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Eval(#[from] MagnusError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// The finite p-group `Q_n` with its elements as canonical series.
#[derive(Debug)]
pub struct FiniteQuotient {
    field: PrimeField,
    d: usize,
    level: usize,
    elements: Vec<FpSeries>,
    index: HashMap<FpSeries, usize>,
    /// `right[2i][q] = q x_i`, `right[2i + 1][q] = q x_i^-1`.
    right: Vec<Vec<usize>>,
}

impl FiniteQuotient {
    /// Breadth-first closure of `{1 + y_i, (1 + y_i)^-1}` from the identity.
    pub fn build(p: u64, d: usize, level: usize, cap: usize) -> Result<Self, QuotientError> {
        if level < 2 {
            return Err(QuotientError::InvalidLevel(level));
        }
        let field = PrimeField::new(p)?;
        let mut gens = Vec::with_capacity(2 * d);
        for i in 0..d {
            let g = FpSeries::magnus_generator(d, level, field, i);
            let inv = g.invert_unit().expect("1 + y is a unit");
            gens.push(g);
            gens.push(inv);
        }
        let one = FpSeries::one(d, level, field);
        let (elements, index, right) = bfs_closure(one, &gens, cap, |a, b| {
            a.try_mul(b).expect("same ring")
        })?;
        Ok(FiniteQuotient {
            field,
            d,
            level,
            elements,
            index,
            right,
        })
    }

    pub fn p(&self) -> u64 {
        self.field.p()
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rank(&self) -> usize {
        self.d
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[FpSeries] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &FpSeries {
        &self.elements[i]
    }

    pub fn index_of(&self, s: &FpSeries) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn identity(&self) -> usize {
        0
    }

    /// Index of `1 + y_i`.
    pub fn generator(&self, i: usize) -> usize {
        self.right[2 * i][0]
    }

    pub fn right_by_generator(&self, i: usize, inverse: bool) -> &[usize] {
        &self.right[2 * i + inverse as usize]
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        let s = self.elements[a]
            .try_mul(&self.elements[b])
            .expect("same ring");
        self.index[&s]
    }

    pub fn inverse(&self, a: usize) -> usize {
        let s = self.elements[a].invert_unit().expect("units");
        self.index[&s]
    }

    /// Magnus context at this level over `F_p`, with generators `x1..xd`.
    pub fn context(&self) -> FpMagnusContext {
        MagnusContext::new(self.d, self.level, self.field)
    }

    /// Element represented by a word in `x1..xd`.
    pub fn eval_word(&self, w: &WordExpr) -> Result<usize, QuotientError> {
        let s = eval(w, &self.context())?;
        self.index_of(&s)
            .ok_or_else(|| QuotientError::NotInQuotient(s.to_string()))
    }

    /// Images of all elements under truncation to a lower level.
    pub fn projection_to(&self, lower: &FiniteQuotient) -> Vec<usize> {
        assert!(lower.level <= self.level && lower.d == self.d && lower.p() == self.p());
        self.elements
            .iter()
            .map(|s| {
                let t = s.truncate(lower.level).expect("lower level");
                lower.index[&t]
            })
            .collect()
    }

    /// `log_p |Q_n|`.
    pub fn log_order(&self) -> u32 {
        let mut n = self.order();
        let mut k = 0;
        while n > 1 {
            n /= self.p() as usize;
            k += 1;
        }
        k
    }

    pub fn info(&self) -> QuotientInfo {
        QuotientInfo {
            p: self.p(),
            d: self.d,
            n: self.level,
            order: self.order(),
            log_p_order: self.log_order(),
            generators: (0..self.d).map(|i| self.elements[self.generator(i)].clone()).collect(),
        }
    }
}

/// Exportable metadata; the element table itself is not serialized.
#[derive(Debug, Clone, Serialize)]
pub struct QuotientInfo {
    pub p: u64,
    pub d: usize,
    pub n: usize,
    pub order: usize,
    pub log_p_order: u32,
    pub generators: Vec<FpSeries>,
}

type Closure<T> = (Vec<T>, HashMap<T, usize>, Vec<Vec<usize>>);

/// BFS from `start`, right-multiplying by `gens` in order; returns the
/// elements, their index and the right-multiplication tables.
fn bfs_closure<T: Clone + Eq + std::hash::Hash>(
    start: T,
    gens: &[T],
    cap: usize,
    mul: impl Fn(&T, &T) -> T,
) -> Result<Closure<T>, QuotientError> {
    let mut elements = vec![start.clone()];
    let mut index = HashMap::from([(start, 0usize)]);
    let mut right: Vec<Vec<usize>> = vec![Vec::new(); gens.len()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for (j, g) in gens.iter().enumerate() {
            let prod = mul(&elements[i], g);
            let k = match index.get(&prod) {
                Some(&k) => k,
                None => {
                    let k = elements.len();
                    if k >= cap {
                        return Err(QuotientError::CapExceeded { cap, reached: k });
                    }
                    elements.push(prod.clone());
                    index.insert(prod, k);
                    queue.push_back(k);
                    k
                }
            };
            let table = &mut right[j];
            if table.len() <= i {
                table.resize(i + 1, usize::MAX);
            }
            table[i] = k;
        }
    }
    for t in &mut right {
        t.resize(elements.len(), usize::MAX);
    }
    Ok((elements, index, right))
}

/// Outcome of checking relators under a homomorphism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelatorCheck {
    Holds,
    Violated { index: usize, relator: WordExpr },
}

impl RelatorCheck {
    pub fn holds(&self) -> bool {
        matches!(self, RelatorCheck::Holds)
    }
}

/// A homomorphism from a presented group into `Q_n`, given by words with
/// exponents in `x1..xd`, together with its image subgroup.
#[derive(Debug)]
pub struct QuotientHom {
    quotient: Arc<FiniteQuotient>,
    generators: Vec<String>,
    rho: BTreeMap<String, WordExpr>,
    images: Vec<usize>,
    image: ImageGroup,
}

pub fn hom_from_words(
    generators: &[String],
    rho: &BTreeMap<String, WordExpr>,
    quotient: Arc<FiniteQuotient>,
) -> Result<QuotientHom, QuotientError> {
    let images = generators
        .iter()
        .map(|g| {
            let w = rho
                .get(g)
                .ok_or_else(|| WordError::MissingImage(g.clone()))?;
            quotient.eval_word(w)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let image = ImageGroup::image_of(&quotient, &images);
    Ok(QuotientHom {
        quotient,
        generators: generators.to_vec(),
        rho: rho.clone(),
        images,
        image,
    })
}

impl QuotientHom {
    pub fn quotient(&self) -> &Arc<FiniteQuotient> {
        &self.quotient
    }

    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    pub fn rho(&self) -> &BTreeMap<String, WordExpr> {
        &self.rho
    }

    /// Indices in `Q` of the generator images.
    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// The image subgroup (a genuine homomorphic image only when the
    /// presentation's relators hold, see [`QuotientHom::check_relators`]).
    pub fn image(&self) -> &ImageGroup {
        &self.image
    }

    pub fn image_order(&self) -> usize {
        self.image.order()
    }

    /// `|Q : image|`.
    pub fn index(&self) -> usize {
        self.quotient.order() / self.image.order()
    }

    /// The image is all of `Q_n`.
    pub fn check_density(&self) -> bool {
        self.image.order() == self.quotient.order()
    }

    /// Element of `Q` represented by a word in the presentation generators.
    pub fn eval_word(&self, w: &WordExpr) -> Result<usize, QuotientError> {
        let in_x = w.substitute(&self.rho)?;
        self.quotient.eval_word(&in_x)
    }

    /// First relator that does not map to the identity, if any.
    pub fn check_relators(&self, relators: &[WordExpr]) -> Result<RelatorCheck, QuotientError> {
        for (index, r) in relators.iter().enumerate() {
            if self.eval_word(r)? != self.quotient.identity() {
                return Ok(RelatorCheck::Violated {
                    index,
                    relator: r.clone(),
                });
            }
        }
        Ok(RelatorCheck::Holds)
    }

    /// The finite quotient of the presented group seen at this level:
    /// the image itself when the relators hold, otherwise the image modulo
    /// the normal closure of the relator images.
    pub fn image_mod_relators(&self, relators: &[WordExpr]) -> Result<ImageGroup, QuotientError> {
        let rel: Vec<usize> = relators
            .iter()
            .map(|r| self.eval_word(r))
            .collect::<Result<_, _>>()?;
        Ok(self.image.factor(&self.quotient, &self.images, &rel))
    }
}

/// A finite group given by right-multiplication tables for the images of
/// the presentation generators.
///
/// Elements are numbered `0..order` in breadth-first order from the
/// identity (element 0). Each element is a coset of a normal subgroup `K`
/// of the image in `Q`; `K` is trivial unless relators were factored out.
#[derive(Debug, Clone)]
pub struct ImageGroup {
    quotient: Arc<FiniteQuotient>,
    /// Representative in `Q` of each element.
    reps: Vec<usize>,
    /// Element containing each member of the image in `Q`.
    locate: HashMap<usize, usize>,
    /// `right[2s][e]` = `e * rho(s)`, `right[2s + 1][e] = e * rho(s)^-1`.
    right: Vec<Vec<usize>>,
    kernel_order: usize,
}

impl ImageGroup {
    fn image_of(q: &Arc<FiniteQuotient>, images: &[usize]) -> ImageGroup {
        let gens = with_inverses(q, images);
        let (reps, index, right) = bfs_closure(q.identity(), &gens, usize::MAX, |a, b| q.mul(*a, *b))
            .expect("no cap on subgroups of an enumerated group");
        ImageGroup {
            quotient: Arc::clone(q),
            reps,
            locate: index,
            right,
            kernel_order: 1,
        }
    }

    fn factor(&self, q: &Arc<FiniteQuotient>, images: &[usize], relators: &[usize]) -> ImageGroup {
        let kernel = normal_closure(q, images, relators);
        if kernel.len() == 1 {
            return self.clone();
        }
        let mut locate: HashMap<usize, usize> = HashMap::new();
        let mut reps = Vec::new();
        for &x in &self.reps {
            if locate.contains_key(&x) {
                continue;
            }
            let id = reps.len();
            reps.push(x);
            for &k in &kernel {
                locate.insert(q.mul(x, k), id);
            }
        }
        let right = self
            .right
            .iter()
            .map(|table| {
                reps.iter()
                    .map(|x| {
                        let e = self.locate[x];
                        locate[&self.reps[table[e]]]
                    })
                    .collect()
            })
            .collect();
        ImageGroup {
            quotient: Arc::clone(q),
            reps,
            locate,
            right,
            kernel_order: kernel.len(),
        }
    }

    pub fn order(&self) -> usize {
        self.reps.len()
    }

    pub fn quotient(&self) -> &Arc<FiniteQuotient> {
        &self.quotient
    }

    /// `|K|`, the order of the factored-out normal subgroup.
    pub fn kernel_order(&self) -> usize {
        self.kernel_order
    }

    pub fn num_generators(&self) -> usize {
        self.right.len() / 2
    }

    /// Representative in `Q` of element `e`.
    pub fn representative(&self, e: usize) -> usize {
        self.reps[e]
    }

    /// Element containing the `Q`-element `x`, if `x` lies in the image.
    pub fn locate(&self, x: usize) -> Option<usize> {
        self.locate.get(&x).copied()
    }

    /// Right multiplication by the `s`-th generator image (or its inverse).
    pub fn right_by_generator(&self, s: usize, inverse: bool) -> &[usize] {
        &self.right[2 * s + inverse as usize]
    }

    /// `e -> e w` for every element, walking the tables letter by letter.
    pub fn word_perm(&self, word: &[Letter<usize>]) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.order()).collect();
        for l in word {
            let t = self.right_by_generator(l.gen, l.inverse);
            for x in perm.iter_mut() {
                *x = t[*x];
            }
        }
        perm
    }

    /// Element reached from the identity along `word`.
    pub fn word_element(&self, word: &[Letter<usize>]) -> usize {
        word.iter()
            .fold(0, |e, l| self.right_by_generator(l.gen, l.inverse)[e])
    }

    /// `e -> e g` for an element `g` given by a `Q`-element in the image.
    pub fn element_perm(&self, g: usize) -> Option<Vec<usize>> {
        self.locate(g)?;
        Some(
            self.reps
                .iter()
                .map(|&x| self.locate[&self.quotient.mul(x, g)])
                .collect(),
        )
    }
}

fn with_inverses(q: &FiniteQuotient, elems: &[usize]) -> Vec<usize> {
    elems.iter().flat_map(|&g| [g, q.inverse(g)]).collect()
}

/// Elements of the normal closure of `relators` in `<images>`.
fn normal_closure(q: &Arc<FiniteQuotient>, images: &[usize], relators: &[usize]) -> Vec<usize> {
    let mut kgens: Vec<usize> = Vec::new();
    for &r in relators {
        if r != q.identity() && !kgens.contains(&r) {
            kgens.push(r);
        }
    }
    let conj: Vec<(usize, usize)> = images.iter().map(|&s| (s, q.inverse(s))).collect();
    loop {
        let gens = with_inverses(q, &kgens);
        let (members, _, _) = bfs_closure(q.identity(), &gens, usize::MAX, |a, b| q.mul(*a, *b))
            .expect("no cap");
        let set: HashSet<usize> = members.iter().copied().collect();
        let missing = kgens.iter().find_map(|&k| {
            conj.iter()
                .map(|&(s, s_inv)| q.mul(q.mul(s_inv, k), s))
                .find(|c| !set.contains(c))
        });
        match missing {
            Some(c) => kgens.push(c),
            None => return members,
        }
    }
}
