#![allow(dead_code)]

use momexp::matrix::{ExactMatrix, Matrix};
use momexp::scalar::exact;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random integer matrix with entries in `-bound..=bound`.
pub fn random_int_matrix(rng: &mut StdRng, n: usize, bound: i64) -> ExactMatrix {
    Matrix::from_fn(n, n, |_, _| exact(rng.random_range(-bound..=bound), 0))
}

/// Unimodular integer matrix: permuted product of unit lower and upper
/// triangular factors with small entries.
pub fn random_unimodular(rng: &mut StdRng, n: usize) -> ExactMatrix {
    let lower = Matrix::from_fn(n, n, |r, c| match r.cmp(&c) {
        std::cmp::Ordering::Equal => exact(1, 0),
        std::cmp::Ordering::Greater => exact(rng.random_range(-1..=1), 0),
        std::cmp::Ordering::Less => exact(0, 0),
    });
    let upper = Matrix::from_fn(n, n, |r, c| match r.cmp(&c) {
        std::cmp::Ordering::Equal => exact(1, 0),
        std::cmp::Ordering::Less => exact(rng.random_range(-1..=1), 0),
        std::cmp::Ordering::Greater => exact(0, 0),
    });
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let pm = Matrix::from_fn(n, n, |r, c| if perm[r] == c { exact(1, 0) } else { exact(0, 0) });
    pm.matmul(&lower).unwrap().matmul(&upper).unwrap()
}

/// A synthetic instance `P J P^{-1}` with its block list `(λ, size)`,
/// sorted for multiset comparison.
pub struct JordanInstance {
    pub a: ExactMatrix,
    pub blocks: Vec<(i64, usize)>,
}

pub fn random_jordan_instance(rng: &mut StdRng) -> JordanInstance {
    let n = rng.random_range(1..=6usize);
    let mut eigen_pool: Vec<i64> = (-4..=4).collect();
    eigen_pool.shuffle(rng);
    let distinct = rng.random_range(1..=n.min(4));
    let eigen = &eigen_pool[..distinct];
    let mut blocks = Vec::new();
    let mut left = n;
    while left > 0 {
        let size = rng.random_range(1..=left.min(3));
        let lambda = eigen[rng.random_range(0..distinct)];
        blocks.push((lambda, size));
        left -= size;
    }
    let js: Vec<ExactMatrix> = blocks.iter().map(|&(l, s)| Matrix::jordan_block(exact(l, 0), s)).collect();
    let j = Matrix::block_diagonal(&js).unwrap();
    let p = random_unimodular(rng, n);
    let a = p.matmul(&j).unwrap().matmul(&p.inverse().unwrap()).unwrap();
    blocks.sort();
    JordanInstance { a, blocks }
}
