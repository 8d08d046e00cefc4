//! Explicit nonnegative factorizations `M = B B^T`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{is_psd, numerical_rank, sym_eig, SymMatrix, Tolerance};

/// Entries in `[-CLAMP, 0)` are treated as rounding noise and set to zero.
pub const CLAMP: f64 = 1e-12;

/// Relative reconstruction tolerance for explicit factorizations.
pub const FACTOR_RTOL: f64 = 1e-8;

/// Relative residual at which [`cp_search`] hands over from first-order sweeps to Newton steps.
pub const SEARCH_RTOL: f64 = 1e-7;

const NEWTON_STEPS: usize = 40;

/// `d x k` entrywise nonnegative factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpFactorization {
    b: DMatrix<f64>,
}

impl CpFactorization {
    /// Clamps tiny negatives; rejects anything more negative than `-CLAMP * (1 + max|b|)`.
    pub fn new(mut b: DMatrix<f64>) -> Result<Self> {
        let scale = 1.0 + b.amax();
        for v in b.iter_mut() {
            if v.is_nan() || *v < -CLAMP * scale {
                return Err(Error::NotDnn);
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(CpFactorization { b })
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.b.ncols()
    }

    /// `B B^T`.
    pub fn gram(&self) -> SymMatrix {
        SymMatrix::from_matrix(&self.b * self.b.transpose()).expect("square by construction")
    }

    /// Frobenius residual `||m - B B^T||_F`.
    pub fn residual(&self, m: &SymMatrix) -> f64 {
        (m.as_matrix() - &self.b * self.b.transpose()).norm()
    }

    pub fn reproduces(&self, m: &SymMatrix, rtol: f64) -> bool {
        self.dim() == m.dim() && self.residual(m) <= rtol * (1.0 + m.frobenius_norm())
    }

    /// Drops all-zero columns.
    pub fn pruned(&self) -> Self {
        let keep: Vec<usize> = (0..self.ncols())
            .filter(|&c| self.b.column(c).iter().any(|&v| v > 0.0))
            .collect();
        if keep.is_empty() {
            return CpFactorization {
                b: DMatrix::zeros(self.dim(), 1),
            };
        }
        CpFactorization {
            b: self.b.select_columns(&keep),
        }
    }
}

pub fn is_dnn(m: &SymMatrix, tol: &Tolerance) -> bool {
    m.min_entry() >= 0.0 && is_psd(m, tol)
}

/// `m(i,i) >= sum_{j != i} m(i,j)` on the stored values.
pub fn is_diag_dominant(m: &SymMatrix) -> bool {
    let d = m.dim();
    (0..d).all(|i| {
        let off: f64 = (0..d).filter(|&j| j != i).map(|j| m.get(i, j)).sum();
        m.get(i, i) >= off
    })
}

/// Factor of a nonnegative diagonally dominant matrix: `sqrt(m_ij)(e_i + e_j)` per pair plus
/// the diagonal slack.
pub fn dd_factor(m: &SymMatrix) -> Result<CpFactorization> {
    let d = m.dim();
    let scale = 1.0 + m.max_abs();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let v = m.get(i, j);
            if v < -CLAMP * scale {
                return Err(Error::NotDnn);
            }
            if v > 0.0 {
                let mut c = vec![0.0; d];
                c[i] = v.sqrt();
                c[j] = v.sqrt();
                cols.push(c);
            }
        }
    }
    for i in 0..d {
        let off: f64 = (0..d).filter(|&j| j != i).map(|j| m.get(i, j).max(0.0)).sum();
        let slack = m.get(i, i) - off;
        if slack < -1e-10 * scale {
            return Err(Error::BadParam(format!(
                "row {i} is not diagonally dominant (slack {slack:e})"
            )));
        }
        if slack > 0.0 {
            let mut c = vec![0.0; d];
            c[i] = slack.sqrt();
            cols.push(c);
        }
    }
    Ok(from_columns(d, &cols))
}

fn from_columns(d: usize, cols: &[Vec<f64>]) -> CpFactorization {
    if cols.is_empty() {
        return CpFactorization {
            b: DMatrix::zeros(d, 1),
        };
    }
    CpFactorization {
        b: DMatrix::from_fn(d, cols.len(), |i, c| cols[c][i]),
    }
}

/// Rank-at-most-2 DNN matrices: rotate the planar Gram vectors into the positive quadrant.
pub fn cp_rank2_embed(m: &SymMatrix, tol: &Tolerance) -> Result<CpFactorization> {
    let rank = numerical_rank(m, tol);
    if rank > 2 {
        return Err(Error::RankTooHigh(rank));
    }
    if !is_dnn(m, tol) {
        return Err(Error::NotDnn);
    }
    let d = m.dim();
    if rank == 0 {
        return Ok(CpFactorization {
            b: DMatrix::zeros(d, 1),
        });
    }
    let eig = sym_eig(m);
    let top: Vec<(f64, usize)> = (0..rank).map(|r| (eig.values[d - 1 - r], d - 1 - r)).collect();
    let rows: Vec<[f64; 2]> = (0..d)
        .map(|i| {
            let mut row = [0.0; 2];
            for (slot, &(lam, k)) in top.iter().enumerate() {
                row[slot] = lam.max(0.0).sqrt() * eig.vectors[(i, k)];
            }
            row
        })
        .collect();

    let norm_cut = (tol.rank_cut * eig.max_abs()).sqrt();
    let mut angles: Vec<f64> = rows
        .iter()
        .filter(|r| r[0].hypot(r[1]) > norm_cut)
        .map(|r| r[1].atan2(r[0]).rem_euclid(2.0 * PI))
        .collect();
    angles.sort_by(f64::total_cmp);

    // The arc holding every row starts just after the widest circular gap.
    let mut start = 0.0;
    if let Some(&first) = angles.first() {
        let n = angles.len();
        let mut best_gap = first + 2.0 * PI - angles[n - 1];
        start = first;
        for w in 1..n {
            let gap = angles[w] - angles[w - 1];
            if gap > best_gap {
                best_gap = gap;
                start = angles[w];
            }
        }
        let span = 2.0 * PI - best_gap;
        if span > FRAC_PI_2 + 1e-6 {
            return Err(Error::NotDnn);
        }
        // centre the arc inside the quadrant
        start -= 0.5 * (FRAC_PI_2 - span).max(0.0);
    }
    let (s, c) = (-start).sin_cos();
    let ncols = if rank == 1 { 1 } else { 2 };
    let mut b = DMatrix::zeros(d, ncols);
    for (i, r) in rows.iter().enumerate() {
        let x = c * r[0] - s * r[1];
        let y = s * r[0] + c * r[1];
        if ncols == 1 {
            b[(i, 0)] = x.hypot(y) * x.signum().max(0.0);
        } else {
            b[(i, 0)] = x.max(0.0);
            b[(i, 1)] = y.max(0.0);
        }
    }
    let f = CpFactorization { b };
    if !f.reproduces(m, FACTOR_RTOL) {
        return Err(Error::NumericalDegeneracy);
    }
    Ok(f.pruned())
}

/// Row orders tried for the 3x3 Cholesky route.
pub const D3_ORDERS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Nonnegative Cholesky factor of a 3x3 DNN matrix, trying the six row orders.
pub fn cp_d3_decompose(m: &SymMatrix, tol: &Tolerance) -> Result<CpFactorization> {
    if m.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: m.dim(),
        });
    }
    if !is_dnn(m, tol) {
        return Err(Error::NotDnn);
    }
    let scale = 1.0 + m.max_abs();
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    let mut any_pivot = false;
    for order in D3_ORDERS {
        let (cols, pivoted) = pivoted_cholesky(m, &order, tol);
        any_pivot |= pivoted;
        let b = DMatrix::from_fn(3, 3, |i, c| cols[c][i]);
        let worst = b.iter().copied().fold(0.0_f64, f64::min);
        if worst >= -CLAMP * scale {
            let f = CpFactorization::new(b.clone())?;
            if f.reproduces(m, FACTOR_RTOL) {
                return Ok(f.pruned());
            }
        }
        if best.as_ref().is_none_or(|(w, _)| worst > *w) {
            best = Some((worst, b));
        }
    }
    if !any_pivot {
        return Ok(CpFactorization {
            b: DMatrix::zeros(3, 1),
        });
    }
    if numerical_rank(m, tol) <= 2 {
        if let Ok(f) = cp_rank2_embed(m, tol) {
            return Ok(f);
        }
    }
    // Rounding can push a factor a hair below zero in every order; accept the least negative.
    if let Some((_, mut b)) = best {
        b.iter_mut().for_each(|v| *v = v.max(0.0));
        let f = CpFactorization { b };
        if f.reproduces(m, FACTOR_RTOL) {
            return Ok(f.pruned());
        }
    }
    Err(Error::NumericalDegeneracy)
}

/// Outer-product Cholesky in the given pivot order; returns the columns and whether any
/// pivot exceeded the cutoff.
fn pivoted_cholesky(m: &SymMatrix, order: &[usize], tol: &Tolerance) -> (Vec<Vec<f64>>, bool) {
    let d = m.dim();
    let mut s = m.as_matrix().clone();
    let cut = tol.rank_cut * m.max_abs();
    let mut cols = Vec::with_capacity(order.len());
    let mut pivoted = false;
    for &k in order {
        let piv = s[(k, k)];
        if piv > cut {
            pivoted = true;
            let root = piv.sqrt();
            let v: Vec<f64> = (0..d).map(|i| s[(i, k)] / root).collect();
            for i in 0..d {
                for j in 0..d {
                    s[(i, j)] -= v[i] * v[j];
                }
            }
            cols.push(v);
        } else {
            cols.push(vec![0.0; d]);
        }
    }
    (cols, pivoted)
}

/// Seeded search for a nonnegative `B` (d x k) with `B B^T = m`.
///
/// Each restart runs `iters` damped multiplicative updates and then up to `iters` sweeps of
/// exact coordinate descent. Success means `||m - B B^T||_F <= 1e-7 (1 + ||m||_F)`.
/// `NotFound` says nothing about membership.
pub fn cp_search(
    m: &SymMatrix,
    k: usize,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<CpFactorization> {
    if k == 0 {
        return Err(Error::BadParam("cp_search needs k >= 1".into()));
    }
    if m.min_entry() < 0.0 {
        return Err(Error::NotDnn);
    }
    let d = m.dim();
    let mm = m.as_matrix();
    let target = SEARCH_RTOL * (1.0 + m.frobenius_norm());
    // the dense check on rho is up to sqrt(2) looser than this
    let accept = 0.5 * FACTOR_RTOL * (1.0 + m.frobenius_norm());
    let mean_m = mm.sum() / (d * d) as f64;
    if mean_m == 0.0 {
        return Ok(CpFactorization {
            b: DMatrix::zeros(d, 1),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = eigen_root(m, k);
    for _ in 0..restarts.max(1) {
        if let Some(root) = &root {
            let mut b = rotate_to_orthant(root, iters, &mut rng);
            let mut r = mm - &b * b.transpose();
            polish(&mut b, &mut r, target, iters);
            newton_polish(&mut b, mm, accept, NEWTON_STEPS);
            let f = CpFactorization { b };
            if f.residual(m) <= accept {
                return Ok(f.pruned());
            }
        }
        let mut b = DMatrix::from_fn(d, k, |i, _| {
            if mm[(i, i)] > 0.0 {
                rng.random::<f64>()
            } else {
                0.0
            }
        });
        let g = &b * b.transpose();
        let mean_g = g.sum() / (d * d) as f64;
        if mean_g > 0.0 {
            b *= (mean_m / mean_g).sqrt();
        }

        for _ in 0..iters {
            let num = mm * &b;
            let den = &b * (b.transpose() * &b);
            for (v, (n, q)) in b.iter_mut().zip(num.iter().zip(den.iter())) {
                if *q > 0.0 {
                    *v *= 0.5 + 0.5 * n / q;
                }
            }
        }

        let mut r = mm - &b * b.transpose();
        polish(&mut b, &mut r, target, iters);
        newton_polish(&mut b, mm, accept, NEWTON_STEPS);
        let f = CpFactorization { b };
        if f.residual(m) <= accept {
            return Ok(f.pruned());
        }
    }
    Err(Error::NotFound)
}

/// `d x k` factor `V sqrt(Lambda)` of the PSD part of `m`, zero-padded; `None` if the rank exceeds `k`.
fn eigen_root(m: &SymMatrix, k: usize) -> Option<DMatrix<f64>> {
    let e = sym_eig(m);
    let cut = Tolerance::default().rank_cut * e.max_abs();
    let keep: Vec<usize> = (0..m.dim()).filter(|&c| e.values[c] > cut).collect();
    if keep.len() > k {
        return None;
    }
    let mut root = DMatrix::zeros(m.dim(), k);
    for (col, &c) in keep.iter().enumerate() {
        let s = e.values[c].sqrt();
        for i in 0..m.dim() {
            root[(i, col)] = e.vectors[(i, c)] * s;
        }
    }
    Some(root)
}

/// Alternating projections between `{root Q : Q orthogonal}` and the nonnegative orthant,
/// from a random orthogonal start. Returns the clamped last iterate.
fn rotate_to_orthant(root: &DMatrix<f64>, iters: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let k = root.ncols();
    let g = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    let mut q = g.qr().q();
    let floor = -1e-15 * (1.0 + root.amax());
    let mut x = root * &q;
    for _ in 0..iters {
        if x.min() >= floor {
            break;
        }
        let p = x.map(|v| v.max(0.0));
        let svd = (root.transpose() * p).svd(true, true);
        match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => q = u * v_t,
            _ => break,
        }
        x = root * &q;
    }
    x.map(|v| v.max(0.0))
}

/// Coordinate sweeps until the residual reaches `target` or stops improving.
fn polish(b: &mut DMatrix<f64>, r: &mut DMatrix<f64>, target: f64, iters: usize) {
    let mut res = r.norm();
    for _ in 0..iters {
        if res <= target {
            break;
        }
        coordinate_sweep(b, r);
        let new_res = r.norm();
        let stalled = res - new_res <= 1e-14 * res;
        res = new_res;
        if stalled {
            break;
        }
    }
}

/// Gauss-Newton on the positive entries of `b` with minimum-norm steps, halving the step
/// until the clamped iterate lowers `||mm - b b^T||_F`.
fn newton_polish(b: &mut DMatrix<f64>, mm: &DMatrix<f64>, goal: f64, steps: usize) {
    let (d, _) = b.shape();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let mut res = (mm - &*b * b.transpose()).norm();
    for _ in 0..steps {
        if res <= goal {
            return;
        }
        let r = mm - &*b * b.transpose();
        let thr = 1e-12 * (1.0 + b.amax());
        let free: Vec<(usize, usize)> = b
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > thr)
            .map(|(n, _)| (n % d, n / d))
            .collect();
        if free.is_empty() {
            return;
        }
        let weight = |i: usize, j: usize| if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
        let jac = DMatrix::from_fn(pairs.len(), free.len(), |row, col| {
            let (i, j) = pairs[row];
            let (p, c) = free[col];
            let mut v = 0.0;
            if i == p {
                v += b[(j, c)];
            }
            if j == p {
                v += b[(i, c)];
            }
            v * weight(i, j)
        });
        let rhs = nalgebra::DVector::from_fn(pairs.len(), |row, _| {
            let (i, j) = pairs[row];
            r[(i, j)] * weight(i, j)
        });
        let svd = jac.svd(true, true);
        let eps = 1e-12 * svd.singular_values.max();
        let Ok(step) = svd.solve(&rhs, eps) else {
            return;
        };
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..12 {
            let mut cand = b.clone();
            for (n, &(i, c)) in free.iter().enumerate() {
                cand[(i, c)] = (cand[(i, c)] + t * step[n]).max(0.0);
            }
            let new_res = (mm - &cand * cand.transpose()).norm();
            if new_res < res {
                *b = cand;
                res = new_res;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            return;
        }
    }
}

/// One pass of exact minimization over each entry of `b`; `r` tracks `m - b b^T`.
fn coordinate_sweep(b: &mut DMatrix<f64>, r: &mut DMatrix<f64>) {
    let (d, k) = b.shape();
    for col in 0..k {
        for i in 0..d {
            let x0 = b[(i, col)];
            let mut a = 0.0;
            let mut lin = 0.0;
            for j in 0..d {
                if j != i {
                    let bj = b[(j, col)];
                    a += bj * bj;
                    lin += bj * (r[(i, j)] + x0 * bj);
                }
            }
            let c = r[(i, i)] + x0 * x0;
            let objective = |x: f64| {
                let mut acc = (c - x * x).powi(2);
                for j in 0..d {
                    if j != i {
                        let bj = b[(j, col)];
                        acc += 2.0 * (r[(i, j)] + x0 * bj - x * bj).powi(2);
                    }
                }
                acc
            };
            let mut best = (objective(0.0), 0.0);
            for x in real_cubic_roots(a - c, -lin) {
                if x > 0.0 {
                    let f = objective(x);
                    if f < best.0 {
                        best = (f, x);
                    }
                }
            }
            let x = best.1;
            let delta = x - x0;
            if delta == 0.0 {
                continue;
            }
            for j in 0..d {
                if j != i {
                    let dj = delta * b[(j, col)];
                    r[(i, j)] -= dj;
                    r[(j, i)] -= dj;
                }
            }
            r[(i, i)] -= x * x - x0 * x0;
            b[(i, col)] = x;
        }
    }
}

/// Real roots of `x^3 + p x + q = 0`.
fn real_cubic_roots(p: f64, q: f64) -> Vec<f64> {
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()]
    } else if p == 0.0 {
        vec![0.0]
    } else {
        let rad = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * rad)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|t| rad * (phi - 2.0 * PI * t as f64 / 3.0).cos())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example2_m() -> SymMatrix {
        SymMatrix::from_rows(&[
            &[0.19, 0.08, 0.115],
            &[0.08, 0.064, 0.08],
            &[0.115, 0.08, 0.196],
        ])
        .unwrap()
    }

    fn random_nonneg(d: usize, k: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(d, k, |_, _| rng.random::<f64>())
    }

    #[test]
    fn cubic_roots_match_polynomial() {
        for (p, q) in [(-3.0, 1.0), (1.0, -2.0), (0.0, -8.0), (-1.0, 0.0)] {
            for x in real_cubic_roots(p, q) {
                assert!((x * x * x + p * x + q).abs() < 1e-9, "p={p} q={q} x={x}");
            }
        }
        assert_eq!(real_cubic_roots(-3.0, 1.0).len(), 3);
    }

    #[test]
    fn dnn_and_dd() {
        let tol = Tolerance::default();
        assert!(is_dnn(&SymMatrix::diagonal(&[1.0, 0.0]), &tol));
        assert!(!is_dnn(&SymMatrix::from_rows(&[&[0., 0.5], &[0.5, 0.]]).unwrap(), &tol));
        assert!(is_diag_dominant(&SymMatrix::identity(3).scale(1.0 / 3.0)));
        assert!(!is_diag_dominant(&example2_m()));
        assert!(!is_diag_dominant(&SymMatrix::outer(&[1.0; 3])));
    }

    #[test]
    fn dd_factor_reconstructs() {
        let m = SymMatrix::from_rows(&[&[3., 1., 1.], &[1., 2., 0.5], &[1., 0.5, 4.]]).unwrap();
        let f = dd_factor(&m).unwrap();
        assert!(f.reproduces(&m, 1e-12));
        assert!(dd_factor(&SymMatrix::outer(&[1.0; 3])).is_err());
    }

    #[test]
    fn rank2_examples() {
        let tol = Tolerance::default();
        let u = [1.0, 2.0, 0.5, 3.0];
        let f = cp_rank2_embed(&SymMatrix::outer(&u), &tol).unwrap();
        assert_eq!(f.ncols(), 1);
        for (i, v) in u.iter().enumerate() {
            assert!((f.b()[(i, 0)] - v).abs() < 1e-9);
        }
        let f = cp_rank2_embed(&SymMatrix::identity(2), &tol).unwrap();
        assert!(f.reproduces(&SymMatrix::identity(2), 1e-12));

        for seed in 0..20 {
            let b0 = random_nonneg(5, 2, seed);
            let m = SymMatrix::from_matrix(&b0 * b0.transpose()).unwrap();
            let f = cp_rank2_embed(&m, &tol).unwrap();
            assert!(f.reproduces(&m, FACTOR_RTOL), "seed {seed}");
        }
        assert!(matches!(
            cp_rank2_embed(&SymMatrix::identity(3), &tol),
            Err(Error::RankTooHigh(3))
        ));
    }

    #[test]
    fn rank2_rejects_obtuse_pairs() {
        // Gram matrix of vectors at 0 and 3pi/4: rank 2, indefinite off-diagonal sign
        let v = [[1.0, 0.0], [-(0.5f64).sqrt(), (0.5f64).sqrt()]];
        let m = SymMatrix::from_fn(2, |i, j| v[i][0] * v[j][0] + v[i][1] * v[j][1]);
        assert!(matches!(
            cp_rank2_embed(&m, &Tolerance::default()),
            Err(Error::NotDnn)
        ));
    }

    #[test]
    fn d3_examples() {
        let tol = Tolerance::default();
        let f = cp_d3_decompose(&SymMatrix::identity(3).scale(1.0 / 3.0), &tol).unwrap();
        assert!(f.reproduces(&SymMatrix::identity(3).scale(1.0 / 3.0), 1e-12));
        let m = example2_m();
        let f = cp_d3_decompose(&m, &tol).unwrap();
        assert!(f.reproduces(&m, FACTOR_RTOL));
        assert!(f.b().iter().all(|&v| v >= 0.0));
        let padded = SymMatrix::from_rows(&[&[0., 0., 0.], &[0., 2., 1.], &[0., 1., 1.]]).unwrap();
        let f = cp_d3_decompose(&padded, &tol).unwrap();
        assert!(f.reproduces(&padded, FACTOR_RTOL));
    }

    #[test]
    fn d3_needs_a_reordering() {
        // first-order minor ae - bc < 0
        let m = SymMatrix::from_rows(&[&[1., 0.9, 0.9], &[0.9, 1., 0.7], &[0.9, 0.7, 1.]]).unwrap();
        let (cols, _) = pivoted_cholesky(&m, &[0, 1, 2], &Tolerance::default());
        assert!(cols.iter().flatten().any(|&v| v < -1e-9));
        let f = cp_d3_decompose(&m, &Tolerance::default()).unwrap();
        assert!(f.reproduces(&m, FACTOR_RTOL));
    }

    #[test]
    fn search_recovers_generated_factor() {
        let b0 = random_nonneg(4, 4, 7);
        let m = SymMatrix::from_matrix(&b0 * b0.transpose()).unwrap();
        let f = cp_search(&m, 4, 10, 2000, 1).unwrap();
        assert!(f.residual(&m) <= SEARCH_RTOL * (1.0 + m.frobenius_norm()));
        let u = SymMatrix::outer(&[0.2, 0.3, 0.5]);
        assert!(cp_search(&u, 1, 5, 2000, 1).is_ok());
    }
}
