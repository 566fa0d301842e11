//! Small dense solvers backing the spectral analysis: LU inversion and
//! nullspace bases over the reals and over the complex numbers.

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::scalar::Scalar;

/// Inverse via LU with partial pivoting, together with the 1-norm condition
/// estimate `|A|_1 |A^-1|_1`. `None` when a pivot falls to roundoff level
/// relative to the matrix scale.
pub fn invert<S: Scalar>(a: &Array2<S>) -> Option<(Array2<S>, S)> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let scale = a
        .iter()
        .fold(S::zero(), |m, &x| m.max(x.abs()))
        .max(S::one());
    let tiny = scale * S::epsilon() * S::from_usize(n).unwrap();

    let mut lu = a.clone();
    // perm[i] = original row now sitting at position i
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if lu[(i, k)].abs() > lu[(piv, k)].abs() {
                piv = i;
            }
        }
        if lu[(piv, k)].abs() <= tiny {
            return None;
        }
        if piv != k {
            perm.swap(piv, k);
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / lu[(k, k)];
            lu[(i, k)] = f;
            for j in k + 1..n {
                let d = f * lu[(k, j)];
                lu[(i, j)] -= d;
            }
        }
    }

    let mut inv = Array2::zeros((n, n));
    for c in 0..n {
        // solve L U x = P e_c
        let mut x = vec![S::zero(); n];
        for (i, &p) in perm.iter().enumerate() {
            x[i] = if p == c { S::one() } else { S::zero() };
        }
        for i in 1..n {
            for j in 0..i {
                let d = lu[(i, j)] * x[j];
                x[i] -= d;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let d = lu[(i, j)] * x[j];
                x[i] -= d;
            }
            x[i] /= lu[(i, i)];
        }
        for (i, &xi) in x.iter().enumerate() {
            inv[(i, c)] = xi;
        }
    }

    let cond = one_norm(a) * one_norm(&inv);
    Some((inv, cond))
}

/// Max column absolute sum.
pub fn one_norm<S: Scalar>(a: &Array2<S>) -> S {
    (0..a.ncols())
        .map(|j| a.column(j).iter().fold(S::zero(), |s, &x| s + x.abs()))
        .fold(S::zero(), S::max)
}

/// Basis of `{x : A x = 0}` over the reals, by Gauss-Jordan elimination
/// with partial pivoting. Pivots at or below `tol` in absolute value are
/// treated as zero. The threshold is deliberately absolute: callers feed
/// constraint rows built from unit max-norm vectors, and a matrix whose
/// entries are all roundoff must come out as rank zero rather than
/// inheriting rank from its own noise scale.
pub fn real_nullspace<S: Scalar>(a: &Array2<S>, tol: S) -> Vec<Array1<S>> {
    let (rows, cols) = a.dim();
    if rows == 0 {
        return (0..cols)
            .map(|j| Array1::from_shape_fn(cols, |i| if i == j { S::one() } else { S::zero() }))
            .collect();
    }
    let thresh = tol;
    let mut m = a.clone();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0usize;
    for c in 0..cols {
        let mut piv = r;
        for i in r + 1..rows {
            if m[(i, c)].abs() > m[(piv, c)].abs() {
                piv = i;
            }
        }
        if r >= rows || m[(piv, c)].abs() <= thresh {
            continue;
        }
        if piv != r {
            for j in 0..cols {
                let t = m[(r, j)];
                m[(r, j)] = m[(piv, j)];
                m[(piv, j)] = t;
            }
        }
        let d = m[(r, c)];
        for j in 0..cols {
            m[(r, j)] /= d;
        }
        for i in 0..rows {
            if i != r {
                let f = m[(i, c)];
                if f != S::zero() {
                    for j in 0..cols {
                        let d = f * m[(r, j)];
                        m[(i, j)] -= d;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }

    // one basis vector per free column: unit there, reduced row entries
    // negated in the pivot slots
    let mut basis = Vec::new();
    for f in 0..cols {
        if pivots.contains(&f) {
            continue;
        }
        let mut x = Array1::zeros(cols);
        x[f] = S::one();
        for (k, &p) in pivots.iter().enumerate() {
            x[p] = -m[(k, f)];
        }
        basis.push(x);
    }
    basis
}

/// Basis of `{x : A x = 0}` over the complex numbers; the same elimination
/// as [`real_nullspace`] with moduli in place of absolute values, and the
/// same absolute pivot threshold.
pub fn complex_nullspace<S: Scalar>(a: &Array2<Complex<S>>, tol: S) -> Vec<Array1<Complex<S>>> {
    let (rows, cols) = a.dim();
    if rows == 0 {
        return (0..cols)
            .map(|j| {
                Array1::from_shape_fn(cols, |i| {
                    if i == j {
                        Complex::new(S::one(), S::zero())
                    } else {
                        Complex::new(S::zero(), S::zero())
                    }
                })
            })
            .collect();
    }
    let thresh = tol;
    let mut m = a.clone();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0usize;
    for c in 0..cols {
        let mut piv = r;
        for i in r + 1..rows {
            if m[(i, c)].norm() > m[(piv, c)].norm() {
                piv = i;
            }
        }
        if r >= rows || m[(piv, c)].norm() <= thresh {
            continue;
        }
        if piv != r {
            for j in 0..cols {
                let t = m[(r, j)];
                m[(r, j)] = m[(piv, j)];
                m[(piv, j)] = t;
            }
        }
        let d = m[(r, c)];
        for j in 0..cols {
            m[(r, j)] = m[(r, j)] / d;
        }
        for i in 0..rows {
            if i != r {
                let f = m[(i, c)];
                if f.norm() != S::zero() {
                    for j in 0..cols {
                        let d = f * m[(r, j)];
                        m[(i, j)] -= d;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }

    let mut basis = Vec::new();
    for f in 0..cols {
        if pivots.contains(&f) {
            continue;
        }
        let mut x = Array1::from_elem(cols, Complex::new(S::zero(), S::zero()));
        x[f] = Complex::new(S::one(), S::zero());
        for (k, &p) in pivots.iter().enumerate() {
            x[p] = -m[(k, f)];
        }
        basis.push(x);
    }
    basis
}
