//! Root and centralizer extensions of mapped presentations, the
//! augmentation-ideal amalgam check at finite levels, and the
//! strong-embedding probe.

use std::collections::HashSet;
use std::sync::Arc;

use num_bigint::{BigInt, RandBigInt};
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::foxrank::{
    beta1_sequence, rank_fp, Beta1Options, FoxError, FpMatrix, MappedPresentation, Presentation,
    RelatorPolicy, Word,
};
use crate::pquot::{FiniteQuotient, ImageGroup};
use crate::scalars::{Exponent, Rational, ScalarError};
use crate::wordexpr::{parse_in, reduce_letters, Letter, WordExpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtError {
    #[error("root degree {m} is not invertible in Z_{p}")]
    RootNotInvertible { m: u64, p: u64 },
    #[error("root degree must be at least 2, got {0}")]
    DegreeTooSmall(u64),
    #[error("extension word is trivial")]
    EmptyWord,
    #[error("extension word is a proper power ({exponent}-th power of `{root}`)")]
    ProperPower { root: String, exponent: usize },
    #[error("expected {expected} exponents for the new generators, got {found}")]
    MissingLambda { expected: usize, found: usize },
    #[error("exponent {0} carries no p-adic digits")]
    PrecisionInsufficient(String),
    #[error("exponent {exponent} is not in Z_{p}")]
    NotPadicInteger { exponent: String, p: u64 },
    #[error("generator `{0}` already exists")]
    NameClash(String),
    #[error("a centralizer extension needs at least one new generator")]
    NoNewGenerators,
    #[error("the {0} generators do not contain the A generators at this level")]
    NotASubgroup(&'static str),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Fox(#[from] FoxError),
}

impl From<crate::wordexpr::ParseError> for ExtError {
    fn from(e: crate::wordexpr::ParseError) -> Self {
        ExtError::Fox(e.into())
    }
}

impl From<crate::pquot::QuotientError> for ExtError {
    fn from(e: crate::pquot::QuotientError) -> Self {
        ExtError::Fox(e.into())
    }
}

/// The two ways of enlarging a group inside its pro-p completion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtensionKind {
    /// Adjoin `t` with `t^m = w`.
    Root { w: WordExpr, m: u64 },
    /// Adjoin commuting `t_1..t_k`, each commuting with `w`, mapped to
    /// `rho(w)^lambda_j`.
    Centralizer { w: WordExpr, lambdas: Vec<Exponent> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionSpec {
    pub kind: ExtensionKind,
    pub new_gens: Vec<String>,
}

impl ExtensionSpec {
    pub fn root(w: WordExpr, m: u64, new_gen: impl Into<String>) -> Self {
        ExtensionSpec {
            kind: ExtensionKind::Root { w, m },
            new_gens: vec![new_gen.into()],
        }
    }

    pub fn centralizer(w: WordExpr, lambdas: Vec<Exponent>, new_gens: Vec<String>) -> Self {
        ExtensionSpec {
            kind: ExtensionKind::Centralizer { w, lambdas },
            new_gens,
        }
    }

    fn word(&self) -> &WordExpr {
        match &self.kind {
            ExtensionKind::Root { w, .. } | ExtensionKind::Centralizer { w, .. } => w,
        }
    }
}

/// On-disk form, words and exponents as strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExtensionSpecFile {
    Root {
        w: String,
        m: u64,
        new_gen: String,
    },
    Centralizer {
        w: String,
        lambdas: Vec<String>,
        new_gens: Vec<String>,
    },
}

impl ExtensionSpecFile {
    /// Parse against the generators of the base presentation.
    pub fn to_spec(&self, base_generators: &[String]) -> Result<ExtensionSpec, ExtError> {
        Ok(match self {
            ExtensionSpecFile::Root { w, m, new_gen } => {
                ExtensionSpec::root(parse_in(w, base_generators)?, *m, new_gen.clone())
            }
            ExtensionSpecFile::Centralizer {
                w,
                lambdas,
                new_gens,
            } => ExtensionSpec::centralizer(
                parse_in(w, base_generators)?,
                lambdas
                    .iter()
                    .map(|l| l.parse())
                    .collect::<Result<_, ScalarError>>()?,
                new_gens.clone(),
            ),
        })
    }
}

/// Cyclically reduced core of a reduced word.
fn cyclic_core(w: &[Letter<usize>]) -> &[Letter<usize>] {
    let (mut i, mut j) = (0, w.len());
    while j > i + 1 && w[i] == w[j - 1].inv() {
        i += 1;
        j -= 1;
    }
    &w[i..j]
}

/// `(u, k)` with `w` conjugate to `u^k`, `k` maximal.
fn primitive_root(w: &[Letter<usize>]) -> (Vec<Letter<usize>>, usize) {
    let core = cyclic_core(w);
    let n = core.len();
    for period in 1..=n {
        if n.is_multiple_of(period) && (period..n).all(|i| core[i] == core[i - period]) {
            return (core[..period].to_vec(), n / period);
        }
    }
    (core.to_vec(), 1)
}

fn word_string(w: &[Letter<usize>], names: &[String]) -> String {
    w.iter()
        .map(|l| {
            if l.inverse {
                format!("{}^-1", names[l.gen])
            } else {
                names[l.gen].clone()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn check_padic_exponent(e: &Exponent, p: u64) -> Result<(), ExtError> {
    match e {
        Exponent::Padic { precision: 0, .. } => Err(ExtError::PrecisionInsufficient(e.to_string())),
        Exponent::Rational(q) if q.denom().is_multiple_of(&BigInt::from(p)) => {
            Err(ExtError::NotPadicInteger {
                exponent: e.to_string(),
                p,
            })
        }
        _ => Ok(()),
    }
}

/// Adjoin a root or a free abelian centralizer to `base`, extending `rho`.
///
/// The word must be a nontrivial integer word in the base generators that
/// is not a proper power; whether it generates a maximal abelian subgroup
/// is up to the caller.
pub fn extend_presentation(
    base: &MappedPresentation,
    spec: &ExtensionSpec,
    p: u64,
) -> Result<MappedPresentation, ExtError> {
    let gens = base.presentation.generators();
    for g in &spec.new_gens {
        if gens.contains(g) || spec.new_gens.iter().filter(|h| *h == g).count() > 1 {
            return Err(ExtError::NameClash(g.clone()));
        }
    }
    let word = base.presentation.word(spec.word())?;
    if word.is_empty() {
        return Err(ExtError::EmptyWord);
    }
    let (root, k) = primitive_root(&word);
    if k > 1 {
        return Err(ExtError::ProperPower {
            root: word_string(&root, gens),
            exponent: k,
        });
    }
    let w = spec.word().clone();
    let rho_w = w.substitute(&base.rho).map_err(FoxError::from)?;
    let mut new_generators = gens.to_vec();
    let mut relators = base.presentation.relators().to_vec();
    let mut rho = base.rho.clone();
    match &spec.kind {
        ExtensionKind::Root { m, .. } => {
            if *m < 2 {
                return Err(ExtError::DegreeTooSmall(*m));
            }
            if m.gcd(&p) != 1 {
                return Err(ExtError::RootNotInvertible { m: *m, p });
            }
            let t = spec.new_gens.first().ok_or(ExtError::NoNewGenerators)?;
            new_generators.push(t.clone());
            relators.push(WordExpr::product(vec![
                WordExpr::pow(WordExpr::gen(t.clone()), Exponent::int(*m as i64)),
                w.inverse(),
            ]));
            let inv_m = Rational::new(1, *m as i64)?;
            rho.insert(t.clone(), WordExpr::pow(rho_w, Exponent::from_rational(inv_m)));
        }
        ExtensionKind::Centralizer { lambdas, .. } => {
            if spec.new_gens.is_empty() {
                return Err(ExtError::NoNewGenerators);
            }
            if lambdas.len() != spec.new_gens.len() {
                return Err(ExtError::MissingLambda {
                    expected: spec.new_gens.len(),
                    found: lambdas.len(),
                });
            }
            for l in lambdas {
                check_padic_exponent(l, p)?;
            }
            for (j, (t, l)) in spec.new_gens.iter().zip(lambdas).enumerate() {
                new_generators.push(t.clone());
                let tg = WordExpr::gen(t.clone());
                relators.push(WordExpr::commutator(tg.clone(), w.clone()));
                for u in &spec.new_gens[..j] {
                    relators.push(WordExpr::commutator(WordExpr::gen(u.clone()), tg.clone()));
                }
                rho.insert(t.clone(), WordExpr::pow(rho_w.clone(), l.clone()));
            }
        }
    }
    let presentation = Presentation::new(new_generators, relators)?;
    Ok(MappedPresentation::new(presentation, rho, base.ambient_rank)?)
}

/// A p-adic integer with `precision` digits that does not agree mod `p^k`
/// with any fraction `a/b`, `|a|, b <= B`, where `B = min(1000, sqrt(p^k)/4)`.
/// Deterministic in `seed`.
pub fn suggest_lambda(p: u64, precision: u32, seed: u64) -> Exponent {
    let modulus = BigInt::from(p).pow(precision);
    let bound: i64 = (modulus.sqrt() / 4u32).min(BigInt::from(1000)).try_into().expect("small");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = &modulus / 2;
    loop {
        let v = rng.gen_bigint_range(&BigInt::zero(), &modulus);
        let short = (1..=bound).filter(|b| b % p as i64 != 0).any(|b| {
            let mut r = (&v * b).mod_floor(&modulus);
            if r > half {
                r -= &modulus;
            }
            r.abs() <= BigInt::from(bound)
        });
        if !short {
            return Exponent::Padic {
                value: v,
                precision,
            };
        }
    }
}

// ---------------------------------------------------------------------------
// Amalgam check

/// Dimensions of augmentation-ideal subspaces of `F_p[G/G_n]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AmalgamReport {
    pub level: usize,
    /// `|Q_n|`.
    pub order: usize,
    /// `|G : G_n|`, the dimension of the ambient algebra.
    pub index: usize,
    pub dim_h: usize,
    pub dim_b: usize,
    pub dim_a: usize,
    pub dim_intersection: usize,
    /// The A-subspace lies in the intersection of the H- and B-subspaces.
    pub containment: bool,
    /// `dim_intersection - dim_a`.
    pub gap: usize,
    pub normalized_a: Rational,
    pub normalized_intersection: Rational,
}

/// Rows `e_{q s} - e_q` for every `q` and every generator `s`.
fn ideal_rows(group: &ImageGroup, words: &[Word]) -> FpMatrix {
    let n = group.order();
    let p = group.quotient().p();
    let mut rows = Vec::with_capacity(n * words.len());
    for w in words {
        let perm = group.word_perm(w);
        for (q, &qs) in perm.iter().enumerate() {
            let mut r = vec![0u64; n];
            r[q] = (r[q] + p - 1) % p;
            r[qs] = (r[qs] + 1) % p;
            rows.push(r);
        }
    }
    if rows.is_empty() {
        return FpMatrix::zero(p, 0, n);
    }
    FpMatrix::from_dense(p, &rows)
}

fn subgroup_elements(group: &ImageGroup, words: &[Word]) -> HashSet<usize> {
    let perms: Vec<Vec<usize>> = words.iter().map(|w| group.word_perm(w)).collect();
    let mut seen = HashSet::from([0usize]);
    let mut stack = vec![0usize];
    while let Some(e) = stack.pop() {
        for perm in &perms {
            if seen.insert(perm[e]) {
                stack.push(perm[e]);
            }
        }
    }
    seen
}

/// Compare `I_H`, `I_B`, `I_A` images in the group algebra of the level-`n`
/// quotient of `g`.
#[allow(clippy::too_many_arguments)]
pub fn amalgam_check(
    g: &MappedPresentation,
    h_gens: &[WordExpr],
    b_gens: &[WordExpr],
    a_gens: &[WordExpr],
    p: u64,
    level: usize,
    policy: RelatorPolicy,
    cap: usize,
) -> Result<AmalgamReport, ExtError> {
    let to_words = |ws: &[WordExpr]| -> Result<Vec<Word>, ExtError> {
        ws.iter()
            .map(|w| Ok(reduce_letters(g.presentation.word(w)?)))
            .collect()
    };
    let (h, b, a) = (to_words(h_gens)?, to_words(b_gens)?, to_words(a_gens)?);
    let q = Arc::new(FiniteQuotient::build(p, g.ambient_rank, level, cap)?);
    let group = g.level_group(q, policy)?.group;

    let a_elems: Vec<usize> = a.iter().map(|w| group.word_element(w)).collect();
    for (name, gens) in [("H", &h), ("B", &b)] {
        let sub = subgroup_elements(&group, gens);
        if !a_elems.iter().all(|e| sub.contains(e)) {
            return Err(ExtError::NotASubgroup(name));
        }
    }

    let (mh, mb, ma) = (ideal_rows(&group, &h), ideal_rows(&group, &b), ideal_rows(&group, &a));
    let (dim_h, dim_b, dim_a) = (rank_fp(&mh), rank_fp(&mb), rank_fp(&ma));
    let dim_sum = rank_fp(&mh.vstack(&mb));
    let dim_intersection = dim_h + dim_b - dim_sum;
    let containment = rank_fp(&mh.vstack(&ma)) == dim_h && rank_fp(&mb.vstack(&ma)) == dim_b;
    let n = group.order() as i64;
    Ok(AmalgamReport {
        level,
        order: group.quotient().order(),
        index: group.order(),
        dim_h,
        dim_b,
        dim_a,
        dim_intersection,
        containment,
        gap: dim_intersection.saturating_sub(dim_a),
        normalized_a: Rational::new(dim_a as i64, n)?,
        normalized_intersection: Rational::new(dim_intersection as i64, n)?,
    })
}

// ---------------------------------------------------------------------------
// Strong embedding probe

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeLevel {
    pub n: usize,
    pub order: usize,
    pub index: usize,
    pub b: Rational,
    pub b_plus_one: Rational,
    /// `b + 1 - d`.
    pub gap: Rational,
    pub dense: bool,
    /// Dense and `b + 1 >= d`.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeReport {
    pub p: u64,
    pub ambient_rank: usize,
    pub levels: Vec<ProbeLevel>,
    pub consistent_with_strong: bool,
}

/// Compare `b_n + 1` with the ambient rank along the given levels.
pub fn strong_embedding_probe(
    g: &MappedPresentation,
    p: u64,
    levels: &[usize],
    opts: &Beta1Options,
) -> Result<ProbeReport, ExtError> {
    let rep = beta1_sequence(g, p, levels, opts)?;
    let d = Rational::from_int(g.ambient_rank as i64);
    let levels: Vec<ProbeLevel> = rep
        .levels
        .iter()
        .map(|r| {
            let b1 = r.b.clone() + Rational::one();
            ProbeLevel {
                n: r.n,
                order: r.order,
                index: r.index,
                gap: b1.clone() - d.clone(),
                consistent: r.dense && b1 >= d,
                b: r.b.clone(),
                b_plus_one: b1,
                dense: r.dense,
            }
        })
        .collect();
    Ok(ProbeReport {
        p,
        ambient_rank: g.ambient_rank,
        consistent_with_strong: levels.iter().all(|l| l.consistent),
        levels,
    })
}
