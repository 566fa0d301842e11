//! Dense nonsymmetric eigendecomposition: orthogonal reduction to upper
//! Hessenberg form followed by the double-shift QR iteration with
//! eigenvector backsubstitution, after the classic EISPACK orthes/hqr2
//! routines. Transition matrices are well scaled, so no balancing pass is
//! needed.
//!
//! Complex conjugate pairs come out packed: the pair occupies two adjacent
//! slots with the positive imaginary part first, and the two matching
//! columns of the vector matrix hold the real and imaginary parts of the
//! eigenvector belonging to that first eigenvalue. With `D` assembled as
//! the block diagonal of `[[re, im], [-im, re]]` blocks, the invariant
//! `A V = V D` holds for the packed matrices.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// QR sweeps allowed per eigenvalue before the iteration is declared stuck.
const MAX_ITER_PER_VALUE: usize = 64;

/// Unsorted, unnormalized eigendecomposition in packed real storage.
pub struct RawEigen<S> {
    /// Eigenvalue real parts, in deflation order.
    pub re: Vec<S>,
    /// Imaginary parts; a conjugate pair sits at `(j, j+1)` with `im[j] > 0`.
    pub im: Vec<S>,
    /// Packed eigenvector columns.
    pub vectors: Array2<S>,
}

pub fn eigen_raw<S: Scalar>(a: ArrayView2<S>) -> Result<RawEigen<S>> {
    let n = a.nrows();
    assert!(n >= 1 && n == a.ncols(), "eigendecomposition needs a square matrix");
    let mut h = a.to_owned();
    let mut v = Array2::eye(n);
    orthes(&mut h, &mut v);
    let mut re = vec![S::zero(); n];
    let mut im = vec![S::zero(); n];
    hqr2(&mut h, &mut v, &mut re, &mut im)?;
    if re.iter().chain(im.iter()).any(|x| !x.is_finite()) || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenFailure);
    }
    Ok(RawEigen { re, im, vectors: v })
}

fn two<S: Scalar>() -> S {
    S::one() + S::one()
}

/// Complex division `(xr + i xi) / (yr + i yi)` in real arithmetic.
fn cdiv<S: Scalar>(xr: S, xi: S, yr: S, yi: S) -> (S, S) {
    if yr.abs() > yi.abs() {
        let r = yi / yr;
        let d = yr + r * yi;
        ((xr + r * xi) / d, (xi - r * xr) / d)
    } else {
        let r = yr / yi;
        let d = yi + r * yr;
        ((r * xr + xi) / d, (r * xi - xr) / d)
    }
}

/// Householder reduction of `h` to Hessenberg form, accumulating the
/// similarity transform into `v` (which must start as the identity).
fn orthes<S: Scalar>(h: &mut Array2<S>, v: &mut Array2<S>) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![S::zero(); n];

    for m in 1..high {
        let mut scale = S::zero();
        for i in m..=high {
            scale += h[(i, m - 1)].abs();
        }
        if scale == S::zero() {
            continue;
        }

        // Householder vector for column m-1
        let mut hh = S::zero();
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > S::zero() {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        // apply the reflector from both sides
        for j in m..n {
            let mut f = S::zero();
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hh;
            for i in m..=high {
                let d = f * ort[i];
                h[(i, j)] -= d;
            }
        }
        for i in 0..=high {
            let mut f = S::zero();
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hh;
            for j in m..=high {
                let d = f * ort[j];
                h[(i, j)] -= d;
            }
        }
        ort[m] *= scale;
        h[(m, m - 1)] = scale * g;
    }

    // accumulate the reflectors into v
    for m in (1..high).rev() {
        if h[(m, m - 1)] != S::zero() {
            for i in m + 1..=high {
                ort[i] = h[(i, m - 1)];
            }
            for j in m..=high {
                let mut g = S::zero();
                for i in m..=high {
                    g += ort[i] * v[(i, j)];
                }
                // double division avoids underflow in the product
                g = (g / ort[m]) / h[(m, m - 1)];
                for i in m..=high {
                    let d = g * ort[i];
                    v[(i, j)] += d;
                }
            }
        }
    }
}

/// Double-shift QR on a Hessenberg matrix with eigenvector recovery.
/// Signed loop counters mirror the reference routine; several of its loops
/// run below zero.
fn hqr2<S: Scalar>(h: &mut Array2<S>, v: &mut Array2<S>, d: &mut [S], e: &mut [S]) -> Result<()> {
    let nt = h.nrows();
    let nn = nt as isize;
    let mut n = nn - 1;
    let low: isize = 0;
    let high: isize = nn - 1;
    let eps = S::epsilon();
    let mut exshift = S::zero();
    let mut p = S::zero();
    let mut q = S::zero();
    let mut r = S::zero();
    let mut s = S::zero();
    let mut z = S::zero();
    let mut w;
    let mut x;
    let mut y;

    let mut norm = S::zero();
    for i in 0..nt {
        for j in i.saturating_sub(1)..nt {
            norm += h[(i, j)].abs();
        }
    }

    let mut iter = 0usize;
    while n >= low {
        // look for a negligible subdiagonal element
        let mut l = n;
        while l > low {
            let lu = l as usize;
            s = h[(lu - 1, lu - 1)].abs() + h[(lu, lu)].abs();
            if s == S::zero() {
                s = norm;
            }
            if h[(lu, lu - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // one root found
            let nu = n as usize;
            h[(nu, nu)] += exshift;
            d[nu] = h[(nu, nu)];
            e[nu] = S::zero();
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // two roots found
            let nu = n as usize;
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / two();
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;
            x = h[(nu, nu)];
            if q >= S::zero() {
                // real pair
                z = if p >= S::zero() { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != S::zero() {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = S::zero();
                e[nu] = S::zero();
                x = h[(nu, nu - 1)];
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;
                for j in nu - 1..nt {
                    z = h[(nu - 1, j)];
                    h[(nu - 1, j)] = q * z + p * h[(nu, j)];
                    h[(nu, j)] = q * h[(nu, j)] - p * z;
                }
                for i in 0..=nu {
                    z = h[(i, nu - 1)];
                    h[(i, nu - 1)] = q * z + p * h[(i, nu)];
                    h[(i, nu)] = q * h[(i, nu)] - p * z;
                }
                for i in low as usize..=high as usize {
                    z = v[(i, nu - 1)];
                    v[(i, nu - 1)] = q * z + p * v[(i, nu)];
                    v[(i, nu)] = q * v[(i, nu)] - p * z;
                }
            } else {
                // complex pair
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // no convergence yet: form a shift
            let nu = n as usize;
            x = h[(nu, nu)];
            y = S::zero();
            w = S::zero();
            if l < n {
                y = h[(nu - 1, nu - 1)];
                w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            }

            // exceptional shifts to break symmetric stalls
            if iter == 10 {
                exshift += x;
                for i in low..=n {
                    h[(i as usize, i as usize)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                y = S::from_f64_lossy(0.75) * s;
                x = y;
                w = S::from_f64_lossy(-0.4375) * s * s;
            }
            if iter == 30 {
                s = (y - x) / two();
                s = s * s + w;
                if s > S::zero() {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / two() + s);
                    for i in low..=n {
                        h[(i as usize, i as usize)] -= s;
                    }
                    exshift += s;
                    w = S::from_f64_lossy(0.964);
                    x = w;
                    y = w;
                }
            }

            iter += 1;
            if iter > MAX_ITER_PER_VALUE {
                return Err(Error::EigenFailure);
            }

            // look for two consecutive small subdiagonal elements
            let mut m = n - 2;
            while m >= l {
                let mu = m as usize;
                z = h[(mu, mu)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(mu + 1, mu)] + h[(mu, mu + 1)];
                q = h[(mu + 1, mu + 1)] - z - r - s;
                r = h[(mu + 2, mu + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(mu, mu - 1)].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[(mu - 1, mu - 1)].abs() + z.abs() + h[(mu + 1, mu + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in m + 2..=n {
                let iu = i as usize;
                h[(iu, iu - 2)] = S::zero();
                if i > m + 2 {
                    h[(iu, iu - 3)] = S::zero();
                }
            }

            // double QR sweep over rows l..=n, columns m..=n
            for k in m..n {
                let ku = k as usize;
                let notlast = k != n - 1;
                if k != m {
                    p = h[(ku, ku - 1)];
                    q = h[(ku + 1, ku - 1)];
                    r = if notlast { h[(ku + 2, ku - 1)] } else { S::zero() };
                    x = p.abs() + q.abs() + r.abs();
                    if x == S::zero() {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < S::zero() {
                    s = -s;
                }
                if s != S::zero() {
                    if k != m {
                        h[(ku, ku - 1)] = -s * x;
                    } else if l != m {
                        h[(ku, ku - 1)] = -h[(ku, ku - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in ku..nt {
                        p = h[(ku, j)] + q * h[(ku + 1, j)];
                        if notlast {
                            p += r * h[(ku + 2, j)];
                            h[(ku + 2, j)] -= p * z;
                        }
                        h[(ku, j)] -= p * x;
                        h[(ku + 1, j)] -= p * y;
                    }
                    for i in 0..=(n.min(k + 3)) as usize {
                        p = x * h[(i, ku)] + y * h[(i, ku + 1)];
                        if notlast {
                            p += z * h[(i, ku + 2)];
                            h[(i, ku + 2)] -= p * r;
                        }
                        h[(i, ku)] -= p;
                        h[(i, ku + 1)] -= p * q;
                    }
                    for i in low as usize..=high as usize {
                        p = x * v[(i, ku)] + y * v[(i, ku + 1)];
                        if notlast {
                            p += z * v[(i, ku + 2)];
                            v[(i, ku + 2)] -= p * r;
                        }
                        v[(i, ku)] -= p;
                        v[(i, ku + 1)] -= p * q;
                    }
                }
            }
        }
    }

    if norm == S::zero() {
        return Ok(());
    }

    // backsubstitution: eigenvectors of the triangularized form, written
    // into the columns of h
    for nb in (0..nt).rev() {
        p = d[nb];
        q = e[nb];

        if q == S::zero() {
            // real vector
            let mut l = nb;
            h[(nb, nb)] = S::one();
            for i in (0..nb).rev() {
                w = h[(i, i)] - p;
                r = S::zero();
                for j in l..=nb {
                    r += h[(i, j)] * h[(j, nb)];
                }
                if e[i] < S::zero() {
                    z = w;
                    s = r;
                } else {
                    l = i;
                    if e[i] == S::zero() {
                        if w != S::zero() {
                            h[(i, nb)] = -r / w;
                        } else {
                            h[(i, nb)] = -r / (eps * norm);
                        }
                    } else {
                        // solve across the 2x2 block of a conjugate pair
                        x = h[(i, i + 1)];
                        y = h[(i + 1, i)];
                        q = (d[i] - p) * (d[i] - p) + e[i] * e[i];
                        let t = (x * s - z * r) / q;
                        h[(i, nb)] = t;
                        if x.abs() > z.abs() {
                            h[(i + 1, nb)] = (-r - w * t) / x;
                        } else {
                            h[(i + 1, nb)] = (-s - y * t) / z;
                        }
                    }

                    let t = h[(i, nb)].abs();
                    if (eps * t) * t > S::one() {
                        for j in i..=nb {
                            h[(j, nb)] /= t;
                        }
                    }
                }
            }
        } else if q < S::zero() {
            // complex vector: real part in column nb-1, imaginary in nb
            let mut l = nb - 1;

            if h[(nb, nb - 1)].abs() > h[(nb - 1, nb)].abs() {
                h[(nb - 1, nb - 1)] = q / h[(nb, nb - 1)];
                h[(nb - 1, nb)] = -(h[(nb, nb)] - p) / h[(nb, nb - 1)];
            } else {
                let (cr, ci) = cdiv(S::zero(), -h[(nb - 1, nb)], h[(nb - 1, nb - 1)] - p, q);
                h[(nb - 1, nb - 1)] = cr;
                h[(nb - 1, nb)] = ci;
            }
            h[(nb, nb - 1)] = S::zero();
            h[(nb, nb)] = S::one();
            for i in (0..nb - 1).rev() {
                let mut ra = S::zero();
                let mut sa = S::zero();
                for j in l..=nb {
                    ra += h[(i, j)] * h[(j, nb - 1)];
                    sa += h[(i, j)] * h[(j, nb)];
                }
                w = h[(i, i)] - p;

                if e[i] < S::zero() {
                    z = w;
                    r = ra;
                    s = sa;
                } else {
                    l = i;
                    if e[i] == S::zero() {
                        let (cr, ci) = cdiv(-ra, -sa, w, q);
                        h[(i, nb - 1)] = cr;
                        h[(i, nb)] = ci;
                    } else {
                        // solve the coupled complex 2x2 block
                        x = h[(i, i + 1)];
                        y = h[(i + 1, i)];
                        let mut vr = (d[i] - p) * (d[i] - p) + e[i] * e[i] - q * q;
                        let vi = (d[i] - p) * two() * q;
                        if vr == S::zero() && vi == S::zero() {
                            vr = eps * norm * (w.abs() + q.abs() + x.abs() + y.abs() + z.abs());
                        }
                        let (cr, ci) =
                            cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
                        h[(i, nb - 1)] = cr;
                        h[(i, nb)] = ci;
                        if x.abs() > z.abs() + q.abs() {
                            h[(i + 1, nb - 1)] = (-ra - w * h[(i, nb - 1)] + q * h[(i, nb)]) / x;
                            h[(i + 1, nb)] = (-sa - w * h[(i, nb)] - q * h[(i, nb - 1)]) / x;
                        } else {
                            let (cr2, ci2) =
                                cdiv(-r - y * h[(i, nb - 1)], -s - y * h[(i, nb)], z, q);
                            h[(i + 1, nb - 1)] = cr2;
                            h[(i + 1, nb)] = ci2;
                        }
                    }

                    let t = h[(i, nb - 1)].abs().max(h[(i, nb)].abs());
                    if (eps * t) * t > S::one() {
                        for j in i..=nb {
                            h[(j, nb - 1)] /= t;
                            h[(j, nb)] /= t;
                        }
                    }
                }
            }
        }
        // q > 0 is the second slot of a pair, produced together with the first
    }

    // back-transform into eigenvectors of the original matrix
    for j in (0..nt).rev() {
        for i in 0..nt {
            z = S::zero();
            for k in 0..=j {
                z += v[(i, k)] * h[(k, j)];
            }
            v[(i, j)] = z;
        }
    }

    Ok(())
}
