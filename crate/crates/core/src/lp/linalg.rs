use num_traits::{One, Zero};

use crate::rational::Rational;

pub(crate) type Matrix = Vec<Vec<Rational>>;

/// Gauss-Jordan inverse of a square rational matrix, `None` when singular.
pub(crate) fn invert(m: &Matrix) -> Option<Matrix> {
    let n = m.len();
    let mut a: Matrix = m.clone();
    let mut inv: Matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                .collect()
        })
        .collect();

    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        inv.swap(col, pivot);

        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] = &a[col][j] / &p;
            inv[col][j] = &inv[col][j] / &p;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for j in 0..n {
                let da = &factor * &a[col][j];
                a[r][j] -= da;
                let di = &factor * &inv[col][j];
                inv[r][j] -= di;
            }
        }
    }
    Some(inv)
}

pub(crate) fn mat_vec(m: &Matrix, v: &[Rational]) -> Vec<Rational> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Row vector times matrix: `v^T M`.
pub(crate) fn vec_mat(v: &[Rational], m: &Matrix) -> Vec<Rational> {
    let n = m.first().map_or(0, Vec::len);
    (0..n)
        .map(|c| v.iter().zip(m).map(|(a, row)| a * &row[c]).sum())
        .collect()
}
