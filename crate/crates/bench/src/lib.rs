//! Shared inputs for the benchmarks.

use momexp::matrix::{exact_matrix, ExactMatrix};

/// `[[1,0,1],[1,2,0],[0,0,1]]`: eigenvalue 1 with a 2-block, eigenvalue 2.
pub fn defective_3x3() -> ExactMatrix {
    exact_matrix(&[&[1, 0, 1], &[1, 2, 0], &[0, 0, 1]])
}

/// `[[0,1,1],[-1,2,1],[1,-1,1]]`: a single 3-block at eigenvalue 1.
pub fn single_block_3x3() -> ExactMatrix {
    exact_matrix(&[&[0, 1, 1], &[-1, 2, 1], &[1, -1, 1]])
}

/// A 6x6 integer matrix with Jordan blocks (2, 3), (2, 1), (-1, 2).
pub fn mixed_6x6() -> ExactMatrix {
    let j = exact_matrix(&[
        &[2, 1, 0, 0, 0, 0],
        &[0, 2, 1, 0, 0, 0],
        &[0, 0, 2, 0, 0, 0],
        &[0, 0, 0, 2, 0, 0],
        &[0, 0, 0, 0, -1, 1],
        &[0, 0, 0, 0, 0, -1],
    ]);
    let p = exact_matrix(&[
        &[1, 1, 0, 0, 0, 0],
        &[0, 1, 1, 0, 0, 1],
        &[0, 0, 1, 1, 0, 0],
        &[1, 0, 0, 1, 1, 0],
        &[0, 0, 0, 0, 1, 1],
        &[0, 1, 0, 0, 0, 1],
    ]);
    p.matmul(&j).unwrap().matmul(&p.inverse().unwrap()).unwrap()
}
