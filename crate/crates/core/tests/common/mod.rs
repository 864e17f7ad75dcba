//! Dense-matrix oracles and shared fixtures for the integration tests.
#![allow(dead_code)]

use hwa_ldpc::crypto::SystemParams;
use hwa_ldpc::{BaseMatrix, BlockCirculantMatrix, PolyGF2};

pub type Dense = Vec<Vec<u8>>;

/// Circulant whose row `r` is the first row cyclically shifted `r` times.
pub fn circulant(a: &PolyGF2) -> Dense {
    let p = a.modulus();
    let first = a.to_bits();
    (0..p).map(|r| (0..p).map(|c| first[(c + p - r) % p]).collect()).collect()
}

pub fn expand(m: &BlockCirculantMatrix) -> Dense {
    let p = m.modulus();
    let mut out = vec![vec![0u8; m.cols() * p]; m.rows() * p];
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let c = circulant(m.block(i, j));
            for r in 0..p {
                for s in 0..p {
                    out[i * p + r][j * p + s] = c[r][s];
                }
            }
        }
    }
    out
}

pub fn mul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    assert_eq!(a[0].len(), k);
    let mut out = vec![vec![0u8; m]; n];
    for i in 0..n {
        for l in 0..k {
            if a[i][l] == 1 {
                for j in 0..m {
                    out[i][j] ^= b[l][j];
                }
            }
        }
    }
    out
}

pub fn vec_mul(v: &[u8], a: &Dense) -> Vec<u8> {
    mul(&vec![v.to_vec()], a).remove(0)
}

pub fn transpose(a: &Dense) -> Dense {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn identity(n: usize) -> Dense {
    (0..n).map(|i| (0..n).map(|j| u8::from(i == j)).collect()).collect()
}

/// Gauss-Jordan inverse over GF(2), `None` when singular.
pub fn inverse(a: &Dense) -> Option<Dense> {
    let n = a.len();
    let mut m: Dense = a.iter().zip(identity(n)).map(|(r, e)| r.iter().copied().chain(e).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| m[r][col] == 1)?;
        m.swap(col, pivot);
        for r in 0..n {
            if r != col && m[r][col] == 1 {
                let src = m[col].clone();
                for (x, y) in m[r].iter_mut().zip(src) {
                    *x ^= y;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn b(rows: &[&[u32]]) -> BaseMatrix {
    BaseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

pub fn punctured_right(m: BaseMatrix) -> BaseMatrix {
    let c = m.cols();
    m.with_punctured((0..c).map(|j| j >= c / 2).collect()).unwrap()
}

/// Ensembles of the threshold table at n = 9602.
pub const N: usize = 9602;

pub fn ensemble_params(name: &str) -> SystemParams {
    match name {
        "A" => SystemParams::new(4801, vec![45, 45], vec![1, 0], 0),
        "B" => SystemParams::new(4801, vec![15, 15], vec![2, 1], 0),
        "C" => SystemParams::new(4801, vec![9, 9], vec![3, 2], 0),
        "D" => SystemParams::new(4801, vec![5, 5], vec![5, 4], 0),
        "LEDA" => SystemParams::new(14939, vec![11, 11], vec![4, 3], 0),
        _ => panic!("unknown ensemble {name}"),
    }
}
