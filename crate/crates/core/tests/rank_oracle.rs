mod common;

use std::sync::Arc;

use common::dense_rank_mod_p;
use proptest::prelude::*;
use qgroup::foxrank::{
    induce_matrix, rank_fp, FpMatrix, GroupRingElem, GroupRingMatrix, MappedPresentation, RelatorPolicy,
};
use qgroup::pquot::{FiniteQuotient, DEFAULT_CAP};
use qgroup::{Fp, Letter, PrimeField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dense(rng: &mut ChaCha8Rng, rows: usize, cols: usize, p: u64, density: f64) -> Vec<Vec<u64>> {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| if rng.gen_bool(density) { rng.gen_range(0..p) } else { 0 })
                .collect()
        })
        .collect()
}

fn dense_mul(a: &[Vec<u64>], b: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let inner = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|r| {
            (0..cols)
                .map(|j| (0..inner).map(|k| r[k] * b[k][j] % p).sum::<u64>() % p)
                .collect()
        })
        .collect()
}

#[test]
fn random_50_by_50_over_f3() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for trial in 0..20 {
        // low-rank products as well as full random matrices
        let m = if trial % 2 == 0 {
            random_dense(&mut rng, 50, 50, 3, 0.3)
        } else {
            let k = rng.gen_range(5..45);
            let a = random_dense(&mut rng, 50, k, 3, 0.5);
            let b = random_dense(&mut rng, k, 50, 3, 0.5);
            dense_mul(&a, &b, 3)
        };
        assert_eq!(rank_fp(&FpMatrix::from_dense(3, &m)), dense_rank_mod_p(&m, 3), "trial {trial}");
    }
}

proptest! {
    #[test]
    fn sparse_rank_matches_dense(
        p in prop::sample::select(vec![2u64, 3, 5, 7, 101]),
        rows in 0usize..12,
        cols in 1usize..12,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_dense(&mut rng, rows, cols, p, 0.4);
        prop_assert_eq!(rank_fp(&FpMatrix::from_dense(p, &m)), dense_rank_mod_p(&m, p));
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, field: PrimeField, rows: usize, cols: usize) -> GroupRingMatrix<Fp> {
    let mut m = GroupRingMatrix::zero(rows, cols, field);
    for i in 0..rows {
        for j in 0..cols {
            let mut e = GroupRingElem::zero(field);
            for _ in 0..rng.gen_range(0..3) {
                let w: Vec<Letter<usize>> = (0..rng.gen_range(0..4))
                    .map(|_| Letter::new(rng.gen_range(0..2), rng.gen_bool(0.5)))
                    .collect();
                e = e.add(&GroupRingElem::monomial(field, w, field.elem(rng.gen_range(1..field.p() as i64))));
            }
            m.set(i, j, e);
        }
    }
    m
}

/// Inducing through the right-regular representation is multiplicative.
#[test]
fn induction_is_multiplicative() {
    for (p, n) in [(2u64, 3usize), (3, 2), (3, 3)] {
        let field = PrimeField::new(p).unwrap();
        let q = Arc::new(FiniteQuotient::build(p, 2, n, DEFAULT_CAP).unwrap());
        let group = MappedPresentation::free(&["a", "b"])
            .level_group(q, RelatorPolicy::Require)
            .unwrap()
            .group;
        let mut rng = ChaCha8Rng::seed_from_u64(p * 10 + n as u64);
        for _ in 0..5 {
            let a = random_matrix(&mut rng, field, 2, 3);
            let b = random_matrix(&mut rng, field, 3, 2);
            let lhs = induce_matrix(&a.mul(&b).unwrap(), &group).unwrap().to_dense();
            let ia = induce_matrix(&a, &group).unwrap().to_dense();
            let ib = induce_matrix(&b, &group).unwrap().to_dense();
            assert_eq!(lhs, dense_mul(&ia, &ib, p));
        }
    }
}

/// `g - 1` for `g` of order `m` in the image induces a matrix of rank
/// `|G| - |G|/m`.
#[test]
fn cyclic_element_ranks() {
    let field = PrimeField::new(3).unwrap();
    let q = Arc::new(FiniteQuotient::build(3, 2, 4, DEFAULT_CAP).unwrap());
    let group = MappedPresentation::free(&["a", "b"])
        .level_group(q, RelatorPolicy::Require)
        .unwrap()
        .group;
    let a = vec![Letter::new(0usize, false)];
    let m = GroupRingMatrix::from_rows(
        vec![vec![GroupRingElem::word(field, a.clone()).sub(&GroupRingElem::one(field))]],
        field,
    )
    .unwrap();
    let big = induce_matrix(&m, &group).unwrap();
    // 1 + y1 has order 9 at level 4 over F_3
    assert_eq!(rank_fp(&big), group.order() - group.order() / 9);
    assert_eq!(rank_fp(&big), dense_rank_mod_p(&big.to_dense(), 3));
}
