//! Dense row-major linear algebra used by the decoders.
//!
//! Everything here is a pure function of its inputs. Active-set systems are
//! solved through the normal equations with a Cholesky factor; nothing forms an
//! explicit inverse and the kernel never regularizes a singular Gram matrix.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense matrix, `data[i * cols + j]` holds entry `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    /// Wraps row-major storage, rejecting a wrong length or non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "DenseMatrix::new",
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: k / cols.max(1),
                col: k % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    /// Builds a matrix from equally long rows.
    ///
    /// # Panics
    /// Panics on ragged input.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == T::zero() {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `M v`.
    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        check_len("matvec", self.cols, v.len())?;
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `Mᵗ v`, accumulated row by row.
    pub fn matvec_t(&self, v: &[T]) -> Result<Vec<T>> {
        check_len("matvec_t", self.rows, v.len())?;
        let mut out = vec![T::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == T::zero() {
                continue;
            }
            axpy(vi, self.row(i), &mut out);
        }
        Ok(out)
    }

    /// `M_A x_A` for a column subset `cols` with coefficients `coef`.
    pub fn matvec_cols(&self, cols: &[usize], coef: &[T]) -> Result<Vec<T>> {
        check_len("matvec_cols", cols.len(), coef.len())?;
        self.check_cols(cols)?;
        Ok((0..self.rows)
            .map(|i| {
                let row = self.row(i);
                cols.iter().zip(coef).map(|(&j, &c)| row[j] * c).sum()
            })
            .collect())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Converts every entry to another scalar type.
    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }

    fn check_cols(&self, cols: &[usize]) -> Result<()> {
        match cols.iter().find(|&&j| j >= self.cols) {
            Some(&index) => Err(Error::IndexOutOfRange {
                index,
                len: self.cols,
            }),
            None => Ok(()),
        }
    }
}

/// `M v`, see [`DenseMatrix::matvec`].
pub fn matvec<T: Scalar>(m: &DenseMatrix<T>, v: &[T]) -> Result<Vec<T>> {
    m.matvec(v)
}

/// `M_Aᵗ M_A` for the column subset `cols` (in the given order).
pub fn gram_submatrix<T: Scalar>(m: &DenseMatrix<T>, cols: &[usize]) -> Result<DenseMatrix<T>> {
    if cols.is_empty() {
        return Err(Error::EmptyIndexSet("gram_submatrix"));
    }
    m.check_cols(cols)?;
    let k = cols.len();
    let mut g = DenseMatrix::zeros(k, k);
    let mut buf = vec![T::zero(); k];
    for i in 0..m.rows {
        let row = m.row(i);
        for (b, &j) in buf.iter_mut().zip(cols) {
            *b = row[j];
        }
        for a in 0..k {
            let va = buf[a];
            if va == T::zero() {
                continue;
            }
            let dst = &mut g.data[a * k..a * k + a + 1];
            for (d, &vb) in dst.iter_mut().zip(&buf[..=a]) {
                *d += va * vb;
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            g.data[b * k + a] = g.data[a * k + b];
        }
    }
    Ok(g)
}

/// Lower-triangular `L` with `L Lᵗ = G`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor<T> {
    lower: DenseMatrix<T>,
}

impl<T: Scalar> CholeskyFactor<T> {
    pub fn dim(&self) -> usize {
        self.lower.rows
    }

    pub fn lower(&self) -> &DenseMatrix<T> {
        &self.lower
    }

    /// Smallest and largest diagonal entries of `L`.
    pub fn diag_extremes(&self) -> (T, T) {
        let n = self.dim();
        (0..n)
            .map(|i| self.lower.get(i, i))
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Solves `G z = b` by forward then back substitution.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        check_len("solve_spd", n, b.len())?;
        let l = &self.lower;
        let mut z = b.to_vec();
        for i in 0..n {
            let s = dot(&l.row(i)[..i], &z[..i]);
            z[i] = (z[i] - s) / l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in i + 1..n {
                s -= l.get(k, i) * z[k];
            }
            z[i] = s / l.get(i, i);
        }
        Ok(z)
    }
}

/// Cholesky factorization reading the lower triangle of `g`.
///
/// A pivot `≤ dim · ε · max|G_ii|` is reported as [`Error::SingularGram`].
pub fn cholesky<T: Scalar>(g: &DenseMatrix<T>) -> Result<CholeskyFactor<T>> {
    let n = g.rows;
    if g.cols != n {
        return Err(Error::DimensionMismatch {
            op: "cholesky",
            expected: n,
            got: g.cols,
        });
    }
    let max_diag = (0..n).fold(T::zero(), |acc, i| acc.max(g.get(i, i).abs()));
    let tol = T::of_usize(n) * T::epsilon() * max_diag;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let pivot = g.get(j, j) - l.row(j)[..j].iter().map(|&v| v * v).sum::<T>();
        if !(pivot > tol) {
            return Err(Error::SingularGram { pivot: j });
        }
        let ljj = pivot.sqrt();
        l.set(j, j, ljj);
        for i in j + 1..n {
            let s = dot(&l.row(i)[..j], &l.row(j)[..j]);
            l.set(i, j, (g.get(i, j) - s) / ljj);
        }
    }
    Ok(CholeskyFactor { lower: l })
}

/// `G z = b` given `G = L Lᵗ`.
pub fn solve_spd<T: Scalar>(factor: &CholeskyFactor<T>, b: &[T]) -> Result<Vec<T>> {
    factor.solve(b)
}

fn check_len(op: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { op, expected, got })
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// `y += alpha x`
#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

pub fn norm_inf<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

pub fn dist_inf<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix<f64> {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        DenseMatrix::new(rows, cols, data).unwrap()
    }

    fn naive_matvec(m: &DenseMatrix<f64>, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; m.rows()];
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                out[i] += m.as_slice()[i * m.cols() + j] * v[j];
            }
        }
        out
    }

    #[test]
    fn matvec_small_cases() {
        let id = DenseMatrix::<f64>::identity(2);
        assert_eq!(matvec(&id, &[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(matvec(&m, &[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
    }

    #[test]
    fn matvec_matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 5, 3);
        let v: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let got = m.matvec(&v).unwrap();
        assert!(dist_inf(&got, &naive_matvec(&m, &v)) <= 1e-12);
        let r: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let got_t = m.matvec_t(&r).unwrap();
        assert!(dist_inf(&got_t, &naive_matvec(&m.transpose(), &r)) <= 1e-12);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let m = DenseMatrix::<f64>::identity(3);
        assert!(matches!(
            m.matvec(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 2,
                ..
            })
        ));
    }

    #[test]
    fn new_rejects_bad_storage() {
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(matches!(
            DenseMatrix::new(2, 2, vec![1.0, 2.0, f64::NAN, 0.0]),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
    }

    #[test]
    fn gram_of_identity_columns() {
        let id = DenseMatrix::<f64>::identity(3);
        assert_eq!(
            gram_submatrix(&id, &[0, 2]).unwrap(),
            DenseMatrix::identity(2)
        );
        assert!(matches!(
            gram_submatrix(&id, &[]),
            Err(Error::EmptyIndexSet(_))
        ));
    }

    #[test]
    fn gram_all_columns_is_full_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_matrix(&mut rng, 6, 4);
        let full = m.transpose().matmul(&m).unwrap();
        let g = gram_submatrix(&m, &[0, 1, 2, 3]).unwrap();
        assert!(dist_inf(g.as_slice(), full.as_slice()) <= 1e-12);
    }

    #[test]
    fn gram_matches_extract_then_multiply() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_matrix(&mut rng, 6, 4);
        let cols = [1usize, 3];
        let sub: Vec<Vec<f64>> = (0..6)
            .map(|i| cols.iter().map(|&j| m.get(i, j)).collect())
            .collect();
        let sub = DenseMatrix::from_rows(&sub).unwrap();
        let expect = sub.transpose().matmul(&sub).unwrap();
        let g = gram_submatrix(&m, &cols).unwrap();
        assert!(dist_inf(g.as_slice(), expect.as_slice()) <= 1e-12);
        assert_eq!(g.get(0, 1), g.get(1, 0));
    }

    #[test]
    fn cholesky_closed_forms() {
        let g = DenseMatrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let f = cholesky(&g).unwrap();
        assert_eq!(f.lower().as_slice(), &[2.0, 0.0, 0.0, 2.0]);

        let g = DenseMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let f = cholesky(&g).unwrap();
        let l = f.lower().as_slice();
        assert_eq!(&l[..3], &[2.0, 0.0, 1.0]);
        assert!((l[3] - 2f64.sqrt()).abs() < 1e-15);
        let z = solve_spd(&f, &[6.0, 5.0]).unwrap();
        assert!(dist_inf(&z, &[1.0, 1.0]) < 1e-14);
    }

    #[test]
    fn cholesky_reports_singular_pivot() {
        // rank one: second pivot vanishes
        let g = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            cholesky(&g),
            Err(Error::SingularGram { pivot: 1 })
        ));
        let g = DenseMatrix::from_rows(&[vec![-1.0]]).unwrap();
        assert!(matches!(
            cholesky(&g),
            Err(Error::SingularGram { pivot: 0 })
        ));
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let f = cholesky(&DenseMatrix::<f64>::identity(3)).unwrap();
        assert_eq!(f.solve(&[1.5, -2.0, 7.0]).unwrap(), vec![1.5, -2.0, 7.0]);
        assert!(f.solve(&[1.0]).is_err());
    }

    #[test]
    fn random_spd_solve_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 12, 8);
        let g = a.transpose().matmul(&a).unwrap();
        let b: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z = cholesky(&g).unwrap().solve(&b).unwrap();
        let r: Vec<f64> = g
            .matvec(&z)
            .unwrap()
            .iter()
            .zip(&b)
            .map(|(x, y)| x - y)
            .collect();
        assert!(norm2(&r) <= 1e-9 * norm2(&b));
    }

    #[test]
    fn gram_reconstruction_random_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let psi = random_matrix(&mut rng, 30, 10);
        let g = gram_submatrix(&psi, &[0, 2, 3, 5, 9]).unwrap();
        let f = cholesky(&g).unwrap();
        let llt = f.lower().matmul(&f.lower().transpose()).unwrap();
        let err = dist_inf(llt.as_slice(), g.as_slice());
        assert!(err <= 1e-10 * g.max_abs());
    }

    #[test]
    fn f32_kernel_agrees_with_f64() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 10, 4);
        let g = gram_submatrix(&a, &[0, 1, 2, 3]).unwrap();
        let b = [1.0, -1.0, 0.5, 2.0];
        let z64 = cholesky(&g).unwrap().solve(&b).unwrap();
        let g32: DenseMatrix<f32> = g.cast();
        let z32 = cholesky(&g32)
            .unwrap()
            .solve(&[1.0f32, -1.0, 0.5, 2.0])
            .unwrap();
        for (x, y) in z64.iter().zip(&z32) {
            assert!((x - *y as f64).abs() <= 1e-3 * (1.0 + x.abs()));
        }
    }

    proptest! {
        #[test]
        fn normal_equation_residual(seed in any::<u64>(), m in 5usize..40, extra in 0usize..5) {
            let n = (m / 2).max(1) - extra.min(m / 2 - 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, m, n);
            let b: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let cols: Vec<usize> = (0..n).collect();
            let atb = a.matvec_t(&b).unwrap();
            let x = cholesky(&gram_submatrix(&a, &cols).unwrap()).unwrap().solve(&atb).unwrap();
            let ax = a.matvec(&x).unwrap();
            let r: Vec<f64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
            let ne = a.matvec_t(&r).unwrap();
            prop_assert!(norm2(&ne) <= 1e-8 * norm2(&atb).max(1e-300));
        }

        #[test]
        fn cholesky_round_trip(seed in any::<u64>(), n in 1usize..12) {
            // A = Q D Qᵗ-like construction: B Bᵗ + shift keeps cond <= ~1e6
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = random_matrix(&mut rng, n, n);
            let mut g = b.matmul(&b.transpose()).unwrap();
            let shift = 1e-5 * g.max_abs().max(1.0);
            for i in 0..n { let v = g.get(i, i); g.set(i, i, v + shift); }
            let f = cholesky(&g).unwrap();
            let llt = f.lower().matmul(&f.lower().transpose()).unwrap();
            prop_assert!(dist_inf(llt.as_slice(), g.as_slice()) <= 1e-10 * g.max_abs());
            let (lo, _) = f.diag_extremes();
            prop_assert!(lo > 0.0);
        }

        #[test]
        fn matvec_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, 7, 5);
            let u: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + beta * b).collect();
            let lhs = m.matvec(&w).unwrap();
            let mu = m.matvec(&u).unwrap();
            let mv = m.matvec(&v).unwrap();
            let rhs: Vec<f64> = mu.iter().zip(&mv).map(|(a, b)| alpha * a + beta * b).collect();
            prop_assert!(dist_inf(&lhs, &rhs) <= 1e-12);
        }
    }
}
