//! Small dense real linear algebra used on probability matrices.
//!
//! Matrices are row-major `&[f64]` buffers of side `n`. Sizes here never
//! exceed 37x37, so everything is done directly without blocking.

use nalgebra::DMatrix;

/// Determinant by LU factorization with partial pivoting. Destroys `a`.
pub fn lu_det_in_place(a: &mut [f64], n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let mut det = 1.0;
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            det = -det;
        }
        let d = a[col * n + col];
        det *= d;
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f != 0.0 {
                for c in col + 1..n {
                    a[row * n + c] -= f * a[col * n + c];
                }
            }
        }
    }
    det
}

pub fn det(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "determinant of a non-square matrix");
    if n == 0 {
        return 1.0;
    }
    let mut buf: Vec<f64> = (0..n * n).map(|idx| m[(idx / n, idx % n)]).collect();
    lu_det_in_place(&mut buf, n)
}

/// Determinant of `m` with the listed rows and columns deleted.
pub fn det_without(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    let keep_r: Vec<usize> = (0..m.nrows()).filter(|r| !rows.contains(r)).collect();
    let keep_c: Vec<usize> = (0..m.ncols()).filter(|c| !cols.contains(c)).collect();
    let n = keep_r.len();
    debug_assert_eq!(n, keep_c.len());
    if n == 0 {
        return 1.0;
    }
    let mut buf = Vec::with_capacity(n * n);
    for &r in &keep_r {
        for &c in &keep_c {
            buf.push(m[(r, c)]);
        }
    }
    lu_det_in_place(&mut buf, n)
}

/// Classical adjugate: transpose of the cofactor matrix.
pub fn adjugate(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    DMatrix::from_fn(n, n, |j, i| {
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        sign * det_without(m, &[i], &[j])
    })
}
