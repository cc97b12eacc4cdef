//! Dense complex-matrix numerics.
//!
//! Everything here works on small dense matrices (tens to a few hundred
//! rows): Gram products, Cholesky factorizations of Hermitian positive
//! definite matrices, log-determinants, linear solves, trace functionals
//! and Hermitian eigenvalues. Division of labor with the rest of the
//! crate: this module knows nothing about channels or estimators, it only
//! provides the numeric kernels they are built from.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance for accepting a matrix as Hermitian on construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Cholesky pivots at or below this value flag the input as not positive
/// definite. An absolute underflow guard is enough at the sizes handled
/// here; ill-conditioning is surfaced by the statistical checks instead.
const PIVOT_MIN: f64 = 1e-300;

/// Dense rectangular complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries. Rejects dimension/length
    /// mismatches and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidInput(
                "matrix entries must all be finite".into(),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Complex64::ZERO {
                    continue;
                }
                let row = k * rhs.cols;
                let orow = i * rhs.cols;
                for j in 0..rhs.cols {
                    out.data[orow + j] += a * rhs.data[row + j];
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scaled(&self, c: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot subtract {}x{} from {}x{}",
                rhs.rows, rhs.cols, self.rows, self.cols
            )));
        }
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Horizontal concatenation `[self | rhs]`.
    pub fn hcat(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot concatenate {} rows with {} rows",
                self.rows, rhs.rows
            )));
        }
        Ok(ComplexMatrix::from_fn(
            self.rows,
            self.cols + rhs.cols,
            |i, j| {
                if j < self.cols {
                    self.get(i, j)
                } else {
                    rhs.get(i, j - self.cols)
                }
            },
        ))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        debug_assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }
}

/// Square complex matrix that is exactly Hermitian in storage.
///
/// Construction checks Hermitian symmetry to [`HERMITIAN_TOL`] and then
/// symmetrizes, so floating-point Gram products round-trip cleanly.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Accepts a square matrix that is Hermitian within tolerance and
    /// stores its exact symmetrization `(A + A^H)/2`.
    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        let n = m.rows;
        for i in 0..n {
            for j in 0..=i {
                let a = m.get(i, j);
                let b = m.get(j, i).conj();
                let tol = HERMITIAN_TOL * 1.0_f64.max(a.norm());
                if (a - b).norm() > tol {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not Hermitian at ({i},{j}): {a} vs conj({}) ",
                        m.get(j, i)
                    )));
                }
            }
        }
        let mut data = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            for j in 0..=i {
                if i == j {
                    data[i * n + i] = Complex64::new(m.get(i, i).re, 0.0);
                } else {
                    let s = (m.get(i, j) + m.get(j, i).conj()) * 0.5;
                    data[i * n + j] = s;
                    data[j * n + i] = s.conj();
                }
            }
        }
        Ok(Self { dim: n, data })
    }

    /// Exact symmetrization `(A + A^H)/2` of a square matrix, without the
    /// tolerance check. For internal use where Hermitian symmetry holds
    /// analytically and only floating-point round-off breaks it.
    pub fn symmetrized(m: &ComplexMatrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        let n = m.rows;
        let mut data = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(m.get(i, i).re, 0.0);
            for j in 0..i {
                let s = (m.get(i, j) + m.get(j, i).conj()) * 0.5;
                data[i * n + j] = s;
                data[j * n + i] = s.conj();
            }
        }
        Ok(Self { dim: n, data })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            dim: n,
            data: vec![Complex64::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut h = Self::zeros(n);
        for i in 0..n {
            h.data[i * n + i] = Complex64::new(c, 0.0);
        }
        h
    }

    /// Real diagonal matrix.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut h = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            h.data[i * n + i] = Complex64::new(d, 0.0);
        }
        h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_matrix(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn add(&self, rhs: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.add_scaled(1.0, rhs)
    }

    /// `self + c * rhs` with a real coefficient, so the result stays
    /// exactly Hermitian.
    pub fn add_scaled(&self, c: f64, rhs: &HermitianMatrix) -> Result<HermitianMatrix> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot add Hermitian {}x{} and {}x{}",
                self.dim, self.dim, rhs.dim, rhs.dim
            )));
        }
        Ok(HermitianMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b * c)
                .collect(),
        })
    }

    pub fn scaled(&self, c: f64) -> HermitianMatrix {
        HermitianMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i).re).sum()
    }
}

/// Gram product `A * A^H`, exactly Hermitian (the lower triangle is
/// computed and mirrored, which equals the `(S + S^H)/2` symmetrization).
pub fn gram(a: &ComplexMatrix) -> HermitianMatrix {
    let n = a.rows;
    let k = a.cols;
    let mut data = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = Complex64::ZERO;
            for l in 0..k {
                s += a.data[i * k + l] * a.data[j * k + l].conj();
            }
            if i == j {
                data[i * n + i] = Complex64::new(s.re, 0.0);
            } else {
                data[i * n + j] = s;
                data[j * n + i] = s.conj();
            }
        }
    }
    HermitianMatrix { dim: n, data }
}

/// Lower-triangular Cholesky factor of a Hermitian positive definite
/// matrix, `S = L L^H`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    l: Vec<Complex64>,
}

impl Cholesky {
    pub fn new(s: &HermitianMatrix) -> Result<Self> {
        let n = s.dim;
        let mut l = vec![Complex64::ZERO; n * n];
        for j in 0..n {
            let mut d = s.data[j * n + j].re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if d.is_nan() || d <= PIVOT_MIN {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let ljj = d.sqrt();
            l[j * n + j] = Complex64::new(ljj, 0.0);
            for i in j + 1..n {
                let mut t = s.data[i * n + j];
                for k in 0..j {
                    t -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = t / ljj;
            }
        }
        Ok(Self { dim: n, l })
    }

    /// Natural-log determinant of the factored matrix: `2 * sum(log L[k,k])`.
    pub fn logdet(&self) -> f64 {
        let n = self.dim;
        2.0 * (0..n).map(|k| self.l[k * n + k].re.ln()).sum::<f64>()
    }

    /// Solves `S X = B` by forward/backward substitution.
    pub fn solve(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut x = self.solve_lower(b)?;
        // L^H x = z, backward substitution.
        let n = self.dim;
        let c = x.cols;
        for i in (0..n).rev() {
            for k in i + 1..n {
                let lki = self.l[k * n + i].conj();
                if lki == Complex64::ZERO {
                    continue;
                }
                for j in 0..c {
                    let t = x.data[k * c + j];
                    x.data[i * c + j] -= lki * t;
                }
            }
            let d = self.l[i * n + i].re;
            for j in 0..c {
                x.data[i * c + j] /= d;
            }
        }
        Ok(x)
    }

    /// Solves the triangular system `L Z = B`.
    pub fn solve_lower(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim;
        if b.rows != n {
            return Err(Error::DimensionMismatch(format!(
                "solve expects {} rows, got {}",
                n, b.rows
            )));
        }
        let c = b.cols;
        let mut x = b.clone();
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[i * n + k];
                if lik == Complex64::ZERO {
                    continue;
                }
                for j in 0..c {
                    let t = x.data[k * c + j];
                    x.data[i * c + j] -= lik * t;
                }
            }
            let d = self.l[i * n + i].re;
            for j in 0..c {
                x.data[i * c + j] /= d;
            }
        }
        Ok(x)
    }
}

/// Log-determinant of a Hermitian positive definite matrix via Cholesky.
pub fn logdet_hpd(s: &HermitianMatrix) -> Result<f64> {
    Ok(Cholesky::new(s)?.logdet())
}

/// Solves `S X = B` for Hermitian positive definite `S`.
pub fn solve_hpd(s: &HermitianMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    Cholesky::new(s)?.solve(b)
}

/// Trace of `A * B` without forming the product.
pub fn trace_prod(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    if a.cols != b.rows || a.rows != b.cols {
        return Err(Error::DimensionMismatch(format!(
            "trace_prod expects {}x{} by {}x{}, got {}x{} by {}x{}",
            a.rows, a.cols, a.cols, a.rows, a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut s = Complex64::ZERO;
    for i in 0..a.rows {
        for k in 0..a.cols {
            s += a.data[i * a.cols + k] * b.data[k * b.cols + i];
        }
    }
    Ok(s)
}

/// All eigenvalues of a Hermitian matrix, ascending.
///
/// Householder reduction to a real symmetric tridiagonal form followed by
/// implicit-shift QL iteration.
pub fn eigenvalues(s: &HermitianMatrix) -> Vec<f64> {
    let (d, e) = tridiagonalize(s);
    tridiag_eigenvalues(d, e)
}

/// Smallest and largest eigenvalue of a Hermitian matrix.
pub fn extreme_eigs(s: &HermitianMatrix) -> (f64, f64) {
    let ev = eigenvalues(s);
    (ev[0], ev[ev.len() - 1])
}

/// Reduces a Hermitian matrix to real symmetric tridiagonal form by
/// Householder similarity transforms; returns the diagonal and the
/// off-diagonal (length `n - 1`). Off-diagonal entries are made real by a
/// final diagonal phase similarity, which leaves eigenvalues unchanged.
#[allow(clippy::needless_range_loop)]
fn tridiagonalize(s: &HermitianMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = s.dim;
    let mut a = s.data.clone();
    let at = |a: &[Complex64], i: usize, j: usize| a[i * n + j];

    for k in 0..n.saturating_sub(2) {
        // Householder vector annihilating column k below row k+1.
        let xnorm_sqr: f64 = (k + 1..n).map(|i| at(&a, i, k).norm_sqr()).sum();
        let xnorm = xnorm_sqr.sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = at(&a, k + 1, k);
        let phase = if x0 == Complex64::ZERO {
            Complex64::ONE
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;

        let mut v = vec![Complex64::ZERO; n];
        for i in k + 1..n {
            v[i] = at(&a, i, k);
        }
        v[k + 1] -= alpha;
        let vnorm_sqr: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm_sqr == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm_sqr;

        // w = beta * A v, then w <- w - (beta/2)(v^H w) v, and
        // A <- A - v w^H - w v^H restricted to the trailing block.
        let mut w = vec![Complex64::ZERO; n];
        for i in k + 1..n {
            let mut acc = Complex64::ZERO;
            for j in k + 1..n {
                acc += at(&a, i, j) * v[j];
            }
            w[i] = acc * beta;
        }
        let vhw: Complex64 = (k + 1..n).map(|i| v[i].conj() * w[i]).sum();
        let corr = vhw * (beta / 2.0);
        for i in k + 1..n {
            w[i] -= corr * v[i];
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let delta = v[i] * w[j].conj() + w[i] * v[j].conj();
                a[i * n + j] -= delta;
            }
        }
        a[(k + 1) * n + k] = alpha;
        a[k * n + (k + 1)] = alpha.conj();
        for i in k + 2..n {
            a[i * n + k] = Complex64::ZERO;
            a[k * n + i] = Complex64::ZERO;
        }
    }

    let d: Vec<f64> = (0..n).map(|i| at(&a, i, i).re).collect();
    let e: Vec<f64> = (0..n.saturating_sub(1))
        .map(|i| at(&a, i + 1, i).norm())
        .collect();
    (d, e)
}

/// Implicit-shift QL iteration for the eigenvalues of a real symmetric
/// tridiagonal matrix. `e` holds the `n - 1` off-diagonal entries.
fn tridiag_eigenvalues(mut d: Vec<f64>, mut e: Vec<f64>) -> Vec<f64> {
    let n = d.len();
    if n <= 1 {
        return d;
    }
    e.push(0.0);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            debug_assert!(iter <= 100, "QL iteration failed to converge");
            if iter > 100 {
                break;
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                f = (d[i] - g) * s + 2.0 * c * b;
                p = s * f;
                d[i + 1] = g + p;
                g = c * f - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    d.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{sample_standard_complex_gaussian, RngStream};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut rng = RngStream::new(seed, 0);
        sample_standard_complex_gaussian(rows, cols, &mut rng)
    }

    fn random_hpd(n: usize, seed: u64) -> HermitianMatrix {
        let a = random_matrix(n, n + 2, seed);
        gram(&a).add_scaled(1.0, &HermitianMatrix::identity(n)).unwrap()
    }

    #[test]
    fn gram_identity() {
        let g = gram(&ComplexMatrix::identity(2));
        assert_eq!(g.as_matrix(), ComplexMatrix::identity(2));
    }

    #[test]
    fn gram_single_row() {
        let a = ComplexMatrix::new(1, 2, vec![c(1.0, 1.0), c(0.0, 0.0)]).unwrap();
        let g = gram(&a);
        assert_eq!(g.dim(), 1);
        assert!((g.get(0, 0) - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gram_matches_brute_force() {
        let a = random_matrix(3, 5, 7);
        let g = gram(&a);
        for i in 0..3 {
            for j in 0..3 {
                let mut s = Complex64::ZERO;
                for k in 0..5 {
                    s += a.get(i, k) * a.get(j, k).conj();
                }
                assert!((g.get(i, j) - s).norm() <= 1e-12 * (1.0 + s.norm()));
            }
        }
    }

    #[test]
    fn logdet_identity_is_zero() {
        assert_eq!(logdet_hpd(&HermitianMatrix::identity(4)).unwrap(), 0.0);
    }

    #[test]
    fn logdet_diagonal() {
        let s = HermitianMatrix::from_diagonal(&[2.0, 3.0]);
        assert!((logdet_hpd(&s).unwrap() - 6.0_f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn logdet_matches_eigenvalue_oracle() {
        for seed in 0..5 {
            let s = random_hpd(6, 100 + seed);
            let ld = logdet_hpd(&s).unwrap();
            let oracle: f64 = eigenvalues(&s).iter().map(|l| l.ln()).sum();
            assert!(
                (ld - oracle).abs() <= 1e-10,
                "logdet {ld} vs eigen oracle {oracle}"
            );
        }
    }

    #[test]
    fn logdet_rejects_singular() {
        let s = HermitianMatrix::from_diagonal(&[1.0, 0.0]);
        match logdet_hpd(&s) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let b = random_matrix(4, 3, 11);
        let x = solve_hpd(&HermitianMatrix::identity(4), &b).unwrap();
        assert!(x.sub(&b).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn solve_diagonal() {
        let s = HermitianMatrix::from_diagonal(&[2.0, 4.0]);
        let b = ComplexMatrix::new(2, 1, vec![c(2.0, 0.0), c(4.0, 0.0)]).unwrap();
        let x = solve_hpd(&s, &b).unwrap();
        assert!((x.get(0, 0) - Complex64::ONE).norm() < 1e-15);
        assert!((x.get(1, 0) - Complex64::ONE).norm() < 1e-15);
    }

    #[test]
    fn solve_residual_is_small() {
        for seed in 0..5 {
            let s = random_hpd(8, 200 + seed);
            let b = random_matrix(8, 4, 300 + seed);
            let x = solve_hpd(&s, &b).unwrap();
            let resid = s.as_matrix().mul(&x).unwrap().sub(&b).unwrap();
            assert!(resid.frobenius_norm() <= 1e-9 * b.frobenius_norm());
        }
    }

    #[test]
    fn trace_prod_identity() {
        let i3 = ComplexMatrix::identity(3);
        let t = trace_prod(&i3, &i3).unwrap();
        assert!((t - c(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn trace_prod_permutation_pair() {
        let a = ComplexMatrix::new(2, 2, vec![c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]).unwrap();
        let b = ComplexMatrix::new(2, 2, vec![c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)]).unwrap();
        assert!((trace_prod(&a, &b).unwrap() - Complex64::ONE).norm() < 1e-15);
    }

    #[test]
    fn trace_prod_matches_formed_product() {
        let a = random_matrix(3, 5, 41);
        let b = random_matrix(5, 3, 42);
        let t = trace_prod(&a, &b).unwrap();
        let full = a.mul(&b).unwrap().trace();
        let scale = a.frobenius_norm() * b.frobenius_norm();
        assert!((t - full).norm() <= 1e-12 * scale);
    }

    #[test]
    fn trace_prod_rejects_mismatch() {
        let a = random_matrix(2, 3, 1);
        let b = random_matrix(2, 3, 2);
        assert!(matches!(
            trace_prod(&a, &b),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn extreme_eigs_identity() {
        let (lo, hi) = extreme_eigs(&HermitianMatrix::identity(5));
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extreme_eigs_diagonal() {
        let (lo, hi) = extreme_eigs(&HermitianMatrix::from_diagonal(&[0.5, 2.0, 7.0]));
        assert!((lo - 0.5).abs() < 1e-12);
        assert!((hi - 7.0).abs() < 1e-12);
    }

    #[test]
    fn extreme_eigs_bracket_rayleigh_quotients() {
        let s = random_hpd(7, 900);
        let (lo, hi) = extreme_eigs(&s);
        let sm = s.as_matrix();
        for seed in 0..100 {
            let v = random_matrix(7, 1, 1000 + seed);
            let sv = sm.mul(&v).unwrap();
            let num: f64 = (0..7).map(|i| (v.get(i, 0).conj() * sv.get(i, 0)).re).sum();
            let den: f64 = (0..7).map(|i| v.get(i, 0).norm_sqr()).sum();
            let q = num / den;
            assert!(q >= lo - 1e-8 * hi.abs() && q <= hi + 1e-8 * hi.abs());
        }
    }

    #[test]
    fn eigenvalues_match_trace_and_det() {
        for seed in 0..8 {
            let s = random_hpd(5, 500 + seed);
            let ev = eigenvalues(&s);
            let tr: f64 = ev.iter().sum();
            assert!((tr - s.trace()).abs() <= 1e-10 * (1.0 + s.trace().abs()));
            let ld: f64 = ev.iter().map(|l| l.ln()).sum();
            assert!((ld - logdet_hpd(&s).unwrap()).abs() <= 1e-10);
        }
    }

    #[test]
    fn eigenvalues_two_by_two_analytic() {
        // [[2, 1+i], [1-i, 3]] has eigenvalues (5 ± sqrt(9))/2 = 1, 4.
        let m = ComplexMatrix::new(
            2,
            2,
            vec![c(2.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)],
        )
        .unwrap();
        let s = HermitianMatrix::from_matrix(&m).unwrap();
        let ev = eigenvalues(&s);
        assert!((ev[0] - 1.0).abs() < 1e-12);
        assert!((ev[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_rejects_asymmetric() {
        let m = ComplexMatrix::new(2, 2, vec![c(1., 0.), c(2., 0.), c(0., 0.), c(1., 0.)]).unwrap();
        assert!(HermitianMatrix::from_matrix(&m).is_err());
    }

    #[test]
    fn matrix_rejects_non_finite() {
        assert!(ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
        assert!(ComplexMatrix::new(1, 1, vec![c(0.0, f64::INFINITY)]).is_err());
    }

    proptest! {
        #[test]
        fn logdet_of_gram_plus_identity_nonnegative(seed in 0u64..200, n in 1usize..6, k in 1usize..8) {
            let a = random_matrix(n, k, seed);
            let s = gram(&a).add(&HermitianMatrix::identity(n)).unwrap();
            prop_assert!(logdet_hpd(&s).unwrap() >= -1e-12);
        }

        #[test]
        fn logdet_scaling_law(seed in 0u64..100, scale in 0.1f64..10.0) {
            let s = random_hpd(4, seed);
            let lhs = logdet_hpd(&s.scaled(scale)).unwrap();
            let rhs = 4.0 * scale.ln() + logdet_hpd(&s).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10);
        }

        #[test]
        fn trace_prod_is_symmetric(seed in 0u64..100) {
            let a = random_matrix(3, 4, seed);
            let b = random_matrix(4, 3, seed.wrapping_add(77));
            let ab = trace_prod(&a, &b).unwrap();
            let ba = trace_prod(&b, &a).unwrap();
            let scale = 1.0 + a.frobenius_norm() * b.frobenius_norm();
            prop_assert!((ab - ba).norm() <= 1e-12 * scale);
        }

        #[test]
        fn gram_passes_hermitian_construction(seed in 0u64..100, n in 1usize..6, k in 1usize..8) {
            let a = random_matrix(n, k, seed);
            let g = gram(&a);
            prop_assert!(HermitianMatrix::from_matrix(&g.as_matrix()).is_ok());
        }
    }
}
