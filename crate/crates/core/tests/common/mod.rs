//! Independent oracles shared by the integration and acceptance tests.
//! Nothing here calls into the library's arithmetic.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

// ---------------------------------------------------------------------------
// Dense linear algebra mod p

/// Textbook Gaussian elimination over `F_p` on a dense copy.
pub fn dense_rank_mod_p(rows: &[Vec<u64>], p: u64) -> usize {
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|v| v % p).collect()).collect();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..ncols {
        let Some(piv) = (rank..m.len()).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = pow_mod(m[rank][c], p - 2, p);
        for v in m[rank].iter_mut() {
            *v = *v * inv % p;
        }
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let f = m[r][c];
                let pivot_row = m[rank].clone();
                for (x, &y) in m[r].iter_mut().zip(&pivot_row) {
                    *x = (*x + p * p - f * y) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

pub fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

// ---------------------------------------------------------------------------
// Noncommutative polynomials over Q, truncated

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Words in `0..d` (the variables `y_{i+1}`) to coefficients; all words of
/// length `>= bound` are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NcPoly {
    pub bound: usize,
    pub terms: BTreeMap<Vec<usize>, Q>,
}

impl NcPoly {
    pub fn constant(bound: usize, c: Q) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        NcPoly { bound, terms }
    }

    pub fn one(bound: usize) -> Self {
        Self::constant(bound, Q::one())
    }

    /// `1 + y_i`.
    pub fn generator(bound: usize, i: usize) -> Self {
        let mut p = Self::one(bound);
        if bound > 1 {
            p.terms.insert(vec![i], Q::one());
        }
        p
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (w, c) in &o.terms {
            let e = terms.entry(w.clone()).or_insert_with(Q::zero);
            *e += c;
            if e.is_zero() {
                terms.remove(w);
            }
        }
        NcPoly { bound: self.bound, terms }
    }

    pub fn scale(&self, s: &Q) -> Self {
        NcPoly {
            bound: self.bound,
            terms: if s.is_zero() {
                BTreeMap::new()
            } else {
                self.terms.iter().map(|(w, c)| (w.clone(), c * s)).collect()
            },
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = NcPoly::constant(self.bound, Q::zero());
        for (u, a) in &self.terms {
            for (v, b) in &o.terms {
                if u.len() + v.len() >= self.bound {
                    continue;
                }
                let mut w = u.clone();
                w.extend(v);
                let e = out.terms.entry(w.clone()).or_insert_with(Q::zero);
                *e += a * b;
                if e.is_zero() {
                    out.terms.remove(&w);
                }
            }
        }
        out
    }

    /// `(1 + f)^a` for `self = 1 + f`, by the binomial series.
    pub fn power(&self, a: &Q) -> Self {
        let mut f = self.clone();
        f.terms.remove(&Vec::new());
        assert_eq!(self.terms.get(&Vec::new()), Some(&Q::one()));
        let mut acc = NcPoly::one(self.bound);
        let mut fk = NcPoly::one(self.bound);
        let mut binom = Q::one();
        for k in 1..self.bound {
            fk = fk.mul(&f);
            binom = binom * (a - Q::from_integer(BigInt::from(k - 1))) / Q::from_integer(BigInt::from(k));
            acc = acc.add(&fk.scale(&binom));
        }
        acc
    }

    /// Coefficients of words of a given length.
    pub fn component(&self, deg: usize) -> BTreeMap<Vec<usize>, Q> {
        self.terms
            .iter()
            .filter(|(w, _)| w.len() == deg)
            .map(|(w, c)| (w.clone(), c.clone()))
            .collect()
    }

    /// Lowest degree of `self - 1`.
    pub fn defect_degree(&self) -> Option<usize> {
        let d = self.add(&NcPoly::constant(self.bound, -Q::one()));
        d.terms.keys().map(|w| w.len()).min()
    }
}

/// Letters `(generator, rational exponent)`.
pub type QWord = Vec<(usize, Q)>;

pub fn nc_eval(word: &QWord, bound: usize) -> NcPoly {
    word.iter().fold(NcPoly::one(bound), |acc, (g, e)| {
        acc.mul(&NcPoly::generator(bound, *g).power(e))
    })
}

/// Text form for the library parser, generators `x1..xd`.
pub fn qword_text(word: &QWord) -> String {
    if word.is_empty() {
        return "1".into();
    }
    word.iter()
        .map(|(g, e)| {
            if e.is_integer() {
                format!("x{}^({})", g + 1, e.numer())
            } else {
                format!("x{}^({}/{})", g + 1, e.numer(), e.denom())
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

// ---------------------------------------------------------------------------
// Rational Heisenberg group

/// Upper unitriangular 3x3 matrix `[[1, a, c], [0, 1, b], [0, 0, 1]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Heis {
    pub a: Q,
    pub b: Q,
    pub c: Q,
}

impl Heis {
    pub fn one() -> Self {
        Heis { a: Q::zero(), b: Q::zero(), c: Q::zero() }
    }

    pub fn mul(&self, o: &Heis) -> Heis {
        Heis {
            a: &self.a + &o.a,
            b: &self.b + &o.b,
            c: &self.c + &o.c + &self.a * &o.b,
        }
    }

    /// `g^t` for rational `t`: `I + tN + t(t-1)/2 N^2`.
    pub fn power(&self, t: &Q) -> Heis {
        let half = q(1, 2);
        Heis {
            a: t * &self.a,
            b: t * &self.b,
            c: t * &self.c + &half * t * (t - Q::one()) * &self.a * &self.b,
        }
    }
}

/// Image of a word under `x1 -> E12`, `x2 -> E23` (other generators trivial).
pub fn heis_eval(word: &QWord) -> Heis {
    word.iter().fold(Heis::one(), |acc, (g, e)| {
        let gen = match g {
            0 => Heis { a: Q::one(), b: Q::zero(), c: Q::zero() },
            1 => Heis { a: Q::zero(), b: Q::one(), c: Q::zero() },
            _ => Heis::one(),
        };
        acc.mul(&gen.power(e))
    })
}

// ---------------------------------------------------------------------------
// Counting

fn mobius(mut n: u64) -> i64 {
    let mut r = 1;
    let mut f = 2;
    while f * f <= n {
        if n.is_multiple_of(f) {
            n /= f;
            if n.is_multiple_of(f) {
                return 0;
            }
            r = -r;
        }
        f += 1;
    }
    if n > 1 {
        r = -r;
    }
    r
}

/// Number of Lyndon words of length `m` on `d` letters.
pub fn necklaces(d: u64, m: u64) -> u64 {
    let s: i64 = (1..=m)
        .filter(|e| m.is_multiple_of(*e))
        .map(|e| mobius(e) * (d as i64).pow((m / e) as u32))
        .sum();
    (s / m as i64) as u64
}

/// `log_p |Q_n|` from the Jennings ranks `e_k = sum_{p^j | k} M(k/p^j)`.
pub fn jennings_log_order(p: u64, d: u64, n: usize) -> u64 {
    (1..n as u64)
        .map(|k| {
            let mut e = 0;
            let mut pj = 1;
            while k % pj == 0 {
                e += necklaces(d, k / pj);
                pj *= p;
            }
            e
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Commutative truncated ring: F_p[y1, y2] / (total degree >= n)

/// Dense coefficient table indexed by `(i, j)` with `i + j < n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Comm {
    pub n: usize,
    pub p: u64,
    pub c: Vec<u64>,
}

impl Comm {
    fn idx(n: usize, i: usize, j: usize) -> usize {
        i * n + j
    }

    pub fn one(n: usize, p: u64) -> Self {
        let mut c = vec![0; n * n];
        c[0] = 1;
        Comm { n, p, c }
    }

    pub fn var_plus_one(n: usize, p: u64, which: usize) -> Self {
        let mut e = Self::one(n, p);
        if n > 1 {
            let k = if which == 0 { Self::idx(n, 1, 0) } else { Self::idx(n, 0, 1) };
            e.c[k] = 1;
        }
        e
    }

    pub fn mul(&self, o: &Comm) -> Comm {
        let n = self.n;
        let mut c = vec![0; n * n];
        for i1 in 0..n {
            for j1 in 0..n - i1 {
                let a = self.c[Self::idx(n, i1, j1)];
                if a == 0 {
                    continue;
                }
                for i2 in 0..n - i1 - j1 {
                    for j2 in 0..n - i1 - j1 - i2 {
                        let b = o.c[Self::idx(n, i2, j2)];
                        let k = Self::idx(n, i1 + i2, j1 + j2);
                        c[k] = (c[k] + a * b) % self.p;
                    }
                }
            }
        }
        Comm { n, p: self.p, c }
    }
}

/// Order of the group generated by `1 + y1`, `1 + y2` in the commutative
/// truncated ring, by breadth-first closure.
pub fn abelian_image_order(p: u64, n: usize) -> usize {
    let gens = [Comm::var_plus_one(n, p, 0), Comm::var_plus_one(n, p, 1)];
    let one = Comm::one(n, p);
    let mut seen = HashSet::from([one.clone()]);
    let mut queue = VecDeque::from([one]);
    while let Some(x) = queue.pop_front() {
        for g in &gens {
            let y = x.mul(g);
            if seen.insert(y.clone()) {
                queue.push_back(y);
            }
        }
    }
    seen.len()
}

/// `dim H_1` with `F_p` coefficients of the cover of the 2-torus with deck
/// group `Z/m1 x Z/m2`, from its cellular chain complex built directly on
/// the grid: vertices `(i, j)`, edges right and up, squares.
pub fn torus_cover_h1(m1: usize, m2: usize, p: u64) -> usize {
    let v = |i: usize, j: usize| (i % m1) * m2 + (j % m2);
    let nv = m1 * m2;
    // edges: [0, nv) horizontal from (i,j), [nv, 2nv) vertical from (i,j)
    let mut d1 = Vec::new();
    for i in 0..m1 {
        for j in 0..m2 {
            for target in [v(i + 1, j), v(i, j + 1)] {
                let mut row = vec![0u64; nv];
                row[v(i, j)] = (row[v(i, j)] + p - 1) % p;
                row[target] = (row[target] + 1) % p;
                d1.push(row);
            }
        }
    }
    let e = |i: usize, j: usize, vertical: bool| 2 * v(i, j) + vertical as usize;
    let mut d2 = Vec::new();
    for i in 0..m1 {
        for j in 0..m2 {
            let mut row = vec![0u64; 2 * nv];
            // boundary of the square at (i, j): h(i,j) + v(i+1,j) - h(i,j+1) - v(i,j)
            for (k, s) in [
                (e(i, j, false), 1),
                (e(i + 1, j, true), 1),
                (e(i, j + 1, false), p - 1),
                (e(i, j, true), p - 1),
            ] {
                row[k] = (row[k] + s) % p;
            }
            d2.push(row);
        }
    }
    // edges were pushed in the order (v, horizontal), (v, vertical)
    2 * nv - dense_rank_mod_p(&d1, p) - dense_rank_mod_p(&d2, p)
}

/// Multiplicative order of `1 + y_which` in the commutative truncated ring.
pub fn comm_generator_order(p: u64, n: usize, which: usize) -> usize {
    let g = Comm::var_plus_one(n, p, which);
    let one = Comm::one(n, p);
    let mut x = g.clone();
    let mut k = 1;
    while x != one {
        x = x.mul(&g);
        k += 1;
    }
    k
}
