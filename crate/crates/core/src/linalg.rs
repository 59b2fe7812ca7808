//! Dense symmetric matrices, inertia by symmetric indefinite LDL^T, and binary dumps.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("symmetric indefinite factorization failed: {0}")]
    Factorization(String),
    #[error("matrix is not positive definite (pivot {index} = {pivot})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("dump i/o: {0}")]
    Io(#[from] io::Error),
    #[error("malformed dump: {0}")]
    Malformed(String),
}

/// Square symmetric matrix stored in full, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![T::zero(); n * n] }
    }

    /// Builds from a closure evaluated on the lower triangle.
    pub fn from_fn<F: FnMut(usize, usize) -> T>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let w = self.get(i, j) + v;
        self.set(i, j, w);
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: T, other: &SymMatrix<T>) -> SymMatrix<T> {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let data = self.data.iter().zip(&other.data).map(|(x, y)| *x + a * *y).collect();
        SymMatrix { n: self.n, data }
    }

    pub fn scale(&self, a: T) -> SymMatrix<T> {
        SymMatrix { n: self.n, data: self.data.iter().map(|x| *x * a).collect() }
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.n {
            for j in 0..i {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// Appends border rows `u_k` with diagonal block `diag(d_k)`.
    pub fn bordered(&self, border: &[(Vec<T>, T)]) -> SymMatrix<T> {
        let n = self.n;
        let m = n + border.len();
        let mut out = SymMatrix::zeros(m);
        for i in 0..n {
            out.data[i * m..i * m + n].copy_from_slice(&self.data[i * n..(i + 1) * n]);
        }
        for (k, (u, d)) in border.iter().enumerate() {
            assert_eq!(u.len(), n, "border length mismatch");
            for (i, ui) in u.iter().enumerate() {
                out.set(n + k, i, *ui);
            }
            out.set(n + k, n + k, *d);
        }
        out
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).as_f64())
    }
}

/// Counts of negative, zero and positive eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pivoting {
    /// Bunch-Kaufman partial pivoting.
    Partial,
    /// Bunch-Parlett complete pivoting, used as the retry.
    Complete,
}

/// Inertia of a symmetric matrix via `P A P^T = L D L^T` with 1x1 and 2x2 pivots.
///
/// Retries with complete pivoting if partial pivoting produces a non-finite pivot.
pub fn inertia<T: Scalar>(a: &SymMatrix<T>) -> Result<Inertia, LinalgError> {
    match ldlt_inertia(a, Pivoting::Partial) {
        Ok(i) => Ok(i),
        Err(_) => ldlt_inertia(a, Pivoting::Complete),
    }
}

/// Working copy holding only the lower triangle.
struct Lower<T> {
    n: usize,
    a: Vec<T>,
}

impl<T: Scalar> Lower<T> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        if i >= j {
            self.a[i * self.n + j]
        } else {
            self.a[j * self.n + i]
        }
    }

    #[inline]
    fn put(&mut self, i: usize, j: usize, v: T) {
        if i >= j {
            self.a[i * self.n + j] = v;
        } else {
            self.a[j * self.n + i] = v;
        }
    }

    /// Symmetric permutation of indices `p < q` within the trailing block starting at `k`.
    fn swap(&mut self, k: usize, p: usize, q: usize) {
        if p == q {
            return;
        }
        let (p, q) = if p < q { (p, q) } else { (q, p) };
        let n = self.n;
        for j in k..p {
            self.a.swap(p * n + j, q * n + j);
        }
        for j in p + 1..q {
            let x = self.at(j, p);
            let y = self.at(q, j);
            self.put(j, p, y);
            self.put(q, j, x);
        }
        for i in q + 1..n {
            self.a.swap(i * n + p, i * n + q);
        }
        self.a.swap(p * n + p, q * n + q);
    }
}

pub fn ldlt_inertia<T: Scalar>(a: &SymMatrix<T>, pivoting: Pivoting) -> Result<Inertia, LinalgError> {
    let n = a.dim();
    let mut w = Lower { n, a: a.as_slice().to_vec() };
    let alpha = (T::one() + T::lit(17.0).sqrt()) / T::lit(8.0);
    let mut inertia = Inertia::default();
    let mut col = vec![T::zero(); n];
    let mut col2 = vec![T::zero(); n];
    let mut k = 0;
    while k < n {
        if pivoting == Pivoting::Complete {
            // bring the largest diagonal entry to k and the largest off-diagonal pair next to it
            let (mut dmax, mut di) = (T::zero(), k);
            let (mut omax, mut oi, mut oj) = (T::zero(), k, k);
            for i in k..n {
                let d = w.at(i, i).abs();
                if d > dmax {
                    dmax = d;
                    di = i;
                }
                for j in k..i {
                    let o = w.at(i, j).abs();
                    if o > omax {
                        omax = o;
                        oi = i;
                        oj = j;
                    }
                }
            }
            if dmax >= alpha * omax {
                w.swap(k, k, di);
            } else {
                w.swap(k, k, oj);
                let oi = if oi == k { oj } else { oi };
                w.swap(k, k + 1, oi);
            }
        }
        let akk = w.at(k, k);
        let absakk = akk.abs();
        let (mut imax, mut colmax) = (k, T::zero());
        for i in k + 1..n {
            let v = w.at(i, k).abs();
            if v > colmax {
                colmax = v;
                imax = i;
            }
        }
        if !absakk.is_finite() || !colmax.is_finite() {
            return Err(LinalgError::Factorization(format!("non-finite entry at column {k}")));
        }
        if absakk.max(colmax) == T::zero() {
            inertia.zero += 1;
            k += 1;
            continue;
        }
        let step;
        if pivoting == Pivoting::Complete {
            step = if absakk >= alpha * colmax { 1 } else { 2 };
        } else if absakk >= alpha * colmax {
            step = 1;
        } else {
            let mut rowmax = T::zero();
            for j in k..imax {
                rowmax = rowmax.max(w.at(imax, j).abs());
            }
            for j in imax + 1..n {
                rowmax = rowmax.max(w.at(j, imax).abs());
            }
            if absakk * rowmax >= alpha * colmax * colmax {
                step = 1;
            } else if w.at(imax, imax).abs() >= alpha * rowmax {
                w.swap(k, k, imax);
                step = 1;
            } else {
                w.swap(k, k + 1, imax);
                step = 2;
            }
        }
        if step == 1 {
            let d = w.at(k, k);
            if !d.is_finite() || d == T::zero() {
                return Err(LinalgError::Factorization(format!("zero or non-finite 1x1 pivot at {k}")));
            }
            if d < T::zero() {
                inertia.negative += 1;
            } else {
                inertia.positive += 1;
            }
            for i in k + 1..n {
                col[i] = w.a[i * n + k];
            }
            for i in k + 1..n {
                let f = col[i] / d;
                if f == T::zero() {
                    continue;
                }
                let row = &mut w.a[i * n + k + 1..i * n + i + 1];
                for (x, c) in row.iter_mut().zip(&col[k + 1..=i]) {
                    *x -= f * *c;
                }
            }
            k += 1;
        } else {
            let a11 = w.at(k, k);
            let a21 = w.at(k + 1, k);
            let a22 = w.at(k + 1, k + 1);
            let det = a11 * a22 - a21 * a21;
            if !det.is_finite() || det == T::zero() {
                return Err(LinalgError::Factorization(format!("singular 2x2 pivot at {k}")));
            }
            if det < T::zero() {
                inertia.negative += 1;
                inertia.positive += 1;
            } else if a11 < T::zero() {
                inertia.negative += 2;
            } else {
                inertia.positive += 2;
            }
            for i in k + 2..n {
                col[i] = w.a[i * n + k];
                col2[i] = w.a[i * n + k + 1];
            }
            // rows of [c1 c2] D^{-1}
            for i in k + 2..n {
                let (c1, c2) = (col[i], col2[i]);
                let f1 = (a22 * c1 - a21 * c2) / det;
                let f2 = (a11 * c2 - a21 * c1) / det;
                if f1 == T::zero() && f2 == T::zero() {
                    continue;
                }
                let row = &mut w.a[i * n + k + 2..i * n + i + 1];
                for ((x, u), v) in row.iter_mut().zip(&col[k + 2..=i]).zip(&col2[k + 2..=i]) {
                    *x -= f1 * *u + f2 * *v;
                }
            }
            k += 2;
        }
    }
    Ok(inertia)
}

/// Lower Cholesky factor `L` with `A = L L^T`, row-major.
pub fn cholesky<T: Scalar>(a: &SymMatrix<T>) -> Result<Vec<T>, LinalgError> {
    let n = a.dim();
    let mut l = vec![T::zero(); n * n];
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { index: j, pivot: d.as_f64() });
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(l)
}

/// Writes `rows`, `cols` as little-endian `u64`, then the row-major `f64` entries.
pub fn write_dump<W: Write>(mut w: W, rows: usize, cols: usize, data: &[f64]) -> Result<(), LinalgError> {
    if data.len() != rows * cols {
        return Err(LinalgError::Malformed(format!("{} entries for {rows}x{cols}", data.len())));
    }
    w.write_all(&(rows as u64).to_le_bytes())?;
    w.write_all(&(cols as u64).to_le_bytes())?;
    for x in data {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_dump<R: Read>(mut r: R) -> Result<(usize, usize, Vec<f64>), LinalgError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    let rows = u64::from_le_bytes(b) as usize;
    r.read_exact(&mut b)?;
    let cols = u64::from_le_bytes(b) as usize;
    let len = rows.checked_mul(cols).ok_or_else(|| LinalgError::Malformed("dimension overflow".into()))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut b)?;
        data.push(f64::from_le_bytes(b));
    }
    Ok((rows, cols, data))
}

pub fn write_sym_dump<W: Write>(w: W, m: &SymMatrix<f64>) -> Result<(), LinalgError> {
    write_dump(w, m.dim(), m.dim(), m.as_slice())
}
