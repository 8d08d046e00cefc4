//! Dense symmetric-matrix numerics under a single tolerance policy.
//!
//! Every boolean predicate here states its threshold in terms of [`Tolerance`]:
//!
//! * PSD: `min eigenvalue >= -(abs_eig + rel_scale * ||m||_2)`
//! * numerical rank: singular values `> rank_cut * sigma_max`
//! * range membership: `||(I - m m^+) v||_2 <= 1e-8 ||v||_2`

use nalgebra::{DMatrix, DVector, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative residual accepted by [`in_range`].
pub const RANGE_RTOL: f64 = 1e-8;

/// Seed used by [`min_quad_over_simplex`] when no seed is supplied.
const SIMPLEX_DEFAULT_SEED: u64 = 0x5eed_c0_9051;

/// Real symmetric matrix with exactly mirrored storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymMatrixRepr", into = "SymMatrixRepr")]
pub struct SymMatrix {
    inner: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct SymMatrixRepr {
    dim: usize,
    /// Row-major entries.
    entries: Vec<f64>,
}

impl TryFrom<SymMatrixRepr> for SymMatrix {
    type Error = Error;

    fn try_from(r: SymMatrixRepr) -> Result<Self> {
        if r.entries.len() != r.dim * r.dim {
            return Err(Error::DimensionMismatch {
                expected: r.dim * r.dim,
                found: r.entries.len(),
            });
        }
        SymMatrix::from_matrix(DMatrix::from_row_slice(r.dim, r.dim, &r.entries))
    }
}

impl From<SymMatrix> for SymMatrixRepr {
    fn from(m: SymMatrix) -> Self {
        let dim = m.dim();
        let entries = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j))
            .collect();
        SymMatrixRepr { dim, entries }
    }
}

impl SymMatrix {
    /// Builds from a generator; `f` is only called with `i <= j`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(dim >= 1, "SymMatrix needs dim >= 1");
        let mut inner = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                inner[(i, j)] = v;
                inner[(j, i)] = v;
            }
        }
        SymMatrix { inner }
    }

    /// Symmetrizes `(m + m^T) / 2`; exact for matrices that are already symmetric.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let n = m.nrows();
        Ok(Self::from_fn(n, |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)])
            }
        }))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: rows.first().map_or(0, |r| r.len()),
            });
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| 0.0)
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// `u u^T`.
    pub fn outer(u: &[f64]) -> Self {
        Self::from_fn(u.len(), |i, j| u[i] * u[j])
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(self.dim(), |i, j| s * self.get(i, j))
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &SymMatrix, s: f64) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_fn(self.dim(), |i, j| {
            self.get(i, j) + s * other.get(i, j)
        }))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        sym_eig(self)
            .values
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Sum of absolute values of all entries.
    pub fn entrywise_l1(&self) -> f64 {
        self.inner.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn min_entry(&self) -> f64 {
        self.inner.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Trace inner product `sum_ij self_ij other_ij`.
    pub fn trace_inner(&self, other: &SymMatrix) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self.inner.dot(&other.inner))
    }

    /// `v^T self v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.inner[(i, j)] * v[j];
            }
            acc += v[i] * row;
        }
        acc
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn principal(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    fn check_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

/// Tolerance policy shared by every cone-membership predicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Absolute eigenvalue slack for PSD tests.
    pub abs_eig: f64,
    /// Relative slack, multiplied by the spectral norm.
    pub rel_scale: f64,
    /// Relative singular-value cutoff for numerical rank.
    pub rank_cut: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_eig: 1e-9,
            rel_scale: 1e-12,
            rank_cut: 1e-9,
        }
    }
}

impl Tolerance {
    pub fn new(abs_eig: f64, rel_scale: f64, rank_cut: f64) -> Result<Self> {
        for (name, v) in [
            ("abs_eig", abs_eig),
            ("rel_scale", rel_scale),
            ("rank_cut", rank_cut),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::BadParam(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Tolerance {
            abs_eig,
            rel_scale,
            rank_cut,
        })
    }

    /// Single-knob override: sets both the eigenvalue slack and the rank cutoff.
    pub fn uniform(tol: f64) -> Result<Self> {
        Self::new(tol, Tolerance::default().rel_scale, tol)
    }

    /// Negative-eigenvalue threshold for a matrix of spectral norm `norm2`.
    pub fn psd_threshold(&self, norm2: f64) -> f64 {
        self.abs_eig + self.rel_scale * norm2
    }
}

/// Eigendecomposition with ascending eigenvalues; `vectors` columns are orthonormal.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEig {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Eigenvectors whose eigenvalue magnitude is at most `rank_cut * max|lambda|`.
    pub fn kernel(&self, rank_cut: f64) -> Vec<DVector<f64>> {
        let cut = rank_cut * self.max_abs();
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() <= cut)
            .map(|(k, _)| self.vectors.column(k).into_owned())
            .collect()
    }
}

pub fn sym_eig(m: &SymMatrix) -> SymEig {
    let eig = m.as_matrix().clone().symmetric_eigen();
    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let vectors = DMatrix::from_fn(n, n, |i, c| eig.eigenvectors[(i, order[c])]);
    SymEig { values, vectors }
}

pub fn is_psd(m: &SymMatrix, tol: &Tolerance) -> bool {
    let eig = sym_eig(m);
    eig.min() >= -tol.psd_threshold(eig.max_abs())
}

pub fn numerical_rank(m: &SymMatrix, tol: &Tolerance) -> usize {
    rank_of_spectrum(sym_eig(m).values.as_slice(), tol)
}

/// Numerical rank of a direct sum given the eigenvalues of all its blocks.
pub fn rank_of_spectrum(eigenvalues: &[f64], tol: &Tolerance) -> usize {
    let smax = eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if smax == 0.0 {
        return 0;
    }
    let cut = tol.rank_cut * smax;
    eigenvalues.iter().filter(|v| v.abs() > cut).count()
}

/// Moore–Penrose pseudo-inverse; eigenvalues at or below the rank cutoff are treated as zero.
pub fn pseudo_inverse(m: &SymMatrix, tol: &Tolerance) -> SymMatrix {
    let eig = sym_eig(m);
    let cut = tol.rank_cut * eig.max_abs();
    let n = m.dim();
    let mut p = DMatrix::zeros(n, n);
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam.abs() > cut {
            let v = eig.vectors.column(k);
            p += (v * v.transpose()) / lam;
        }
    }
    SymMatrix::from_matrix(p).expect("square by construction")
}

/// `v^T m^+ v`.
pub fn pinv_quad_form(m: &SymMatrix, v: &[f64], tol: &Tolerance) -> f64 {
    pseudo_inverse(m, tol).quad_form(v)
}

pub fn in_range(m: &SymMatrix, v: &[f64], tol: &Tolerance) -> bool {
    assert_eq!(v.len(), m.dim(), "vector length must match matrix dimension");
    let vn = DVector::from_column_slice(v);
    let norm = vn.norm();
    if norm == 0.0 {
        return true;
    }
    let p = pseudo_inverse(m, tol);
    let proj = m.as_matrix() * (p.as_matrix() * &vn);
    (vn - proj).norm() <= RANGE_RTOL * norm
}

/// Partial transpose on the second tensor factor of a `(da*db)`-square matrix.
pub fn partial_transpose_second<T: Scalar + Copy>(
    m: &DMatrix<T>,
    da: usize,
    db: usize,
) -> DMatrix<T> {
    assert_eq!(m.nrows(), da * db);
    assert_eq!(m.ncols(), da * db);
    DMatrix::from_fn(da * db, da * db, |r, c| {
        let (a, b) = (r / db, r % db);
        let (a2, b2) = (c / db, c % db);
        m[(a * db + b2, a2 * db + b)]
    })
}

/// Partial transpose on the first tensor factor.
pub fn partial_transpose_first<T: Scalar + Copy>(
    m: &DMatrix<T>,
    da: usize,
    db: usize,
) -> DMatrix<T> {
    assert_eq!(m.nrows(), da * db);
    DMatrix::from_fn(da * db, da * db, |r, c| {
        let (a, b) = (r / db, r % db);
        let (a2, b2) = (c / db, c % db);
        m[(a2 * db + b, a * db + b2)]
    })
}

/// Result of a simplex minimization: an upper bound on `min x^T q x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexMin {
    pub value: f64,
    pub argmin: Vec<f64>,
}

/// Heuristic minimum of `x^T q x` over the probability simplex.
///
/// Starts from every vertex, every edge midpoint and `restarts` random points, then runs
/// `iters` projected-gradient steps from each. The returned value is attained at `argmin`,
/// so it is an upper bound on the true minimum and never a certified lower bound.
pub fn min_quad_over_simplex(q: &SymMatrix, restarts: usize, iters: usize) -> SimplexMin {
    min_quad_over_simplex_seeded(q, restarts, iters, SIMPLEX_DEFAULT_SEED)
}

pub fn min_quad_over_simplex_seeded(
    q: &SymMatrix,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> SimplexMin {
    let n = q.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(n + n * (n - 1) / 2 + restarts);
    for i in 0..n {
        let mut x = vec![0.0; n];
        x[i] = 1.0;
        starts.push(x);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut x = vec![0.0; n];
            x[i] = 0.5;
            x[j] = 0.5;
            starts.push(x);
        }
    }
    for _ in 0..restarts.max(1) {
        // Exponential spacings give a uniform point on the simplex.
        let mut x: Vec<f64> = (0..n)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= s);
        starts.push(x);
    }

    let lipschitz = 2.0 * q.spectral_norm();
    let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };
    let qm = q.as_matrix();

    let mut best = SimplexMin {
        value: f64::INFINITY,
        argmin: vec![1.0 / n as f64; n],
    };
    for start in starts {
        let mut x = DVector::from_vec(start);
        let mut fx = x.dot(&(qm * &x));
        let mut local_best = (fx, x.clone());
        for _ in 0..iters.max(1) {
            let grad = (qm * &x) * 2.0;
            let y = project_simplex(&(&x - grad * step));
            let fy = y.dot(&(qm * &y));
            let moved = (&y - &x).amax();
            x = y;
            fx = fy;
            if fx < local_best.0 {
                local_best = (fx, x.clone());
            }
            if moved < 1e-15 {
                break;
            }
        }
        if local_best.0 < best.value {
            best = SimplexMin {
                value: local_best.0,
                argmin: local_best.1.iter().copied().collect(),
            };
        }
    }
    best
}

/// Euclidean projection onto `{x >= 0, sum x = 1}`.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        css += uk;
        let t = (css - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    let mut x = DVector::from_fn(n, |i, _| (v[i] - theta).max(0.0));
    let s = x.sum();
    if s > 0.0 {
        x /= s;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn horn() -> SymMatrix {
        SymMatrix::from_rows(&[
            &[1., -1., 1., 1., -1.],
            &[-1., 1., -1., 1., 1.],
            &[1., -1., 1., -1., 1.],
            &[1., 1., -1., 1., -1.],
            &[-1., 1., 1., -1., 1.],
        ])
        .unwrap()
    }

    fn circulant6() -> SymMatrix {
        let row = [2.0, 1.5, 0.5, 0.0, 0.5, 1.5];
        SymMatrix::from_fn(6, |i, j| row[(j + 6 - i) % 6])
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let e = sym_eig(&SymMatrix::identity(3));
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
        let e = sym_eig(&SymMatrix::diagonal(&[2.0, 0.0, -1.0]));
        let vals: Vec<f64> = e.values.iter().copied().collect();
        assert_eq!(vals, vec![-1.0, 0.0, 2.0]);
    }

    #[test]
    fn horn_is_indefinite() {
        assert!(sym_eig(&horn()).min() < 0.0);
    }

    #[test]
    fn psd_examples() {
        let tol = Tolerance::default();
        assert!(is_psd(&SymMatrix::identity(4), &tol));
        assert!(!is_psd(
            &SymMatrix::from_rows(&[&[0., 1.], &[1., 0.]]).unwrap(),
            &tol
        ));
        assert!(is_psd(&circulant6(), &tol));
    }

    #[test]
    fn rank_examples() {
        let tol = Tolerance::default();
        assert_eq!(numerical_rank(&SymMatrix::zeros(5), &tol), 0);
        assert_eq!(numerical_rank(&circulant6(), &tol), 3);
        assert_eq!(numerical_rank(&SymMatrix::outer(&[1.0; 4]), &tol), 1);
    }

    #[test]
    fn pinv_examples() {
        let tol = Tolerance::default();
        let p = pseudo_inverse(&SymMatrix::identity(3), &tol);
        assert!((p.as_matrix() - DMatrix::identity(3, 3)).amax() < 1e-14);
        let p = pseudo_inverse(&SymMatrix::diagonal(&[2.0, 0.0]), &tol);
        assert!((p.get(0, 0) - 0.5).abs() < 1e-15);
        assert_eq!(p.get(1, 1), 0.0);
    }

    #[test]
    fn pinv_moore_penrose_on_example2() {
        let tol = Tolerance::default();
        let m = SymMatrix::from_rows(&[
            &[0.19, 0.08, 0.115],
            &[0.08, 0.064, 0.08],
            &[0.115, 0.08, 0.196],
        ])
        .unwrap();
        let p = pseudo_inverse(&m, &tol);
        let (a, b) = (m.as_matrix(), p.as_matrix());
        let scale = 1e-8 * m.spectral_norm();
        assert!((a * b * a - a).amax() <= scale);
    }

    #[test]
    fn range_examples() {
        let tol = Tolerance::default();
        assert!(in_range(&SymMatrix::identity(3), &[0.3, -2.0, 5.0], &tol));
        assert!(!in_range(&SymMatrix::diagonal(&[1.0, 0.0]), &[0.0, 1.0], &tol));
        let u = [1.0; 4];
        assert!(in_range(&SymMatrix::outer(&u), &u, &tol));
    }

    #[test]
    fn simplex_min_examples() {
        let r = min_quad_over_simplex(&SymMatrix::identity(3), 4, 200);
        assert!((r.value - 1.0 / 3.0).abs() < 1e-9);
        assert!(r.argmin.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-6));

        let r = min_quad_over_simplex(&horn(), 4, 200);
        assert!(r.value.abs() < 1e-9, "Horn simplex minimum is 0, got {}", r.value);
        // the edge midpoint (1/2,1/2,0,0,0) attains it
        let x = [0.5, 0.5, 0.0, 0.0, 0.0];
        assert_eq!(horn().quad_form(&x), 0.0);

        let r = min_quad_over_simplex(&SymMatrix::identity(2).scale(-1.0), 2, 50);
        assert!((r.value + 1.0).abs() < 1e-12);
        assert!(r.argmin.iter().any(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn simplex_argmin_is_feasible() {
        let q = SymMatrix::from_rows(&[&[1., -3., 2.], &[-3., 2., 0.], &[2., 0., -1.]]).unwrap();
        let r = min_quad_over_simplex(&q, 8, 300);
        assert!(r.argmin.iter().all(|&x| x >= 0.0));
        assert!((r.argmin.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((q.quad_form(&r.argmin) - r.value).abs() < 1e-12);
    }

    #[test]
    fn partial_transposes_agree_on_spectrum() {
        let m = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 + (i + j) as f64);
        let m = &m + m.transpose();
        let a = SymMatrix::from_matrix(partial_transpose_second(&m, 2, 3)).unwrap();
        let b = SymMatrix::from_matrix(partial_transpose_first(&m, 2, 3)).unwrap();
        let (ea, eb) = (sym_eig(&a), sym_eig(&b));
        assert!((ea.values - eb.values).amax() < 1e-10);
    }

    #[test]
    fn tolerance_rejects_nonpositive() {
        assert!(Tolerance::new(0.0, 1e-12, 1e-9).is_err());
        assert!(Tolerance::uniform(1e-7).is_ok());
    }

    #[test]
    fn serde_roundtrip_keeps_symmetry() {
        let m = circulant6();
        let repr = SymMatrixRepr::from(m.clone());
        let back = SymMatrix::try_from(repr).unwrap();
        assert_eq!(back, m);
    }
}
