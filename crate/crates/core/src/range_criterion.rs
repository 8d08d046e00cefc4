//! Range criterion restricted to symmetric product vectors `|z>|z>`.
//!
//! A product vector `|z>|z*>` lies in the range of the partial transpose of a DS state iff
//! `y_i = |z_i|^2` satisfies `sum_i w_i y_i = 0` for every `w` in `ker M`, `y_i = 0` whenever
//! `p(i,i) = 0`, and `y_i y_j = 0` whenever `p(i,j) = 0`. No nonzero `y >= 0` means entangled.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ds_state::DsState;
use crate::error::{Error, Result};
use crate::matcore::{sym_eig, SymMatrix, Tolerance};

pub const DEFAULT_SUPPORT_CAP: u64 = 1 << 16;

/// Kernel equations must hold to this absolute accuracy on a max-normalized `y`.
pub const KERNEL_RESIDUAL_TOL: f64 = 1e-9;

/// Entries of a max-normalized null vector below this count as zero.
const SIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RangeVerdict {
    /// No admissible `y`; the state is entangled.
    Infeasible,
    /// A symmetric product vector survives; nothing is concluded.
    FeasibleWitnessVector { y: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub kernel_basis: Vec<Vec<f64>>,
    pub zero_pairs: Vec<(usize, usize)>,
    pub zero_diag: Vec<usize>,
    pub feasible_support: Option<Vec<usize>>,
    pub verdict: RangeVerdict,
}

impl RangeReport {
    pub fn is_infeasible(&self) -> bool {
        self.verdict == RangeVerdict::Infeasible
    }
}

pub fn range_criterion_test(rho: &DsState, tol: &Tolerance, support_cap: u64) -> Result<RangeReport> {
    range_criterion_matrix(rho.m_matrix().as_sym(), tol, support_cap)
}

/// Same test with `m` read as the `M` matrix of a (possibly unnormalized) DS state.
pub fn range_criterion_matrix(m: &SymMatrix, tol: &Tolerance, support_cap: u64) -> Result<RangeReport> {
    let d = m.dim();
    if m.max_abs() == 0.0 {
        return Err(Error::AllZero);
    }
    let zero_cut = tol.abs_eig * m.max_abs();
    let zero_diag: Vec<usize> = (0..d).filter(|&i| m.get(i, i) <= zero_cut).collect();
    let mut zero_pairs = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            if m.get(i, j) <= zero_cut {
                zero_pairs.push((i, j));
            }
        }
    }
    let kernel_basis: Vec<Vec<f64>> = sym_eig(m)
        .kernel(tol.rank_cut)
        .into_iter()
        .map(|v| v.iter().copied().collect())
        .collect();

    let allowed: Vec<usize> = (0..d).filter(|i| !zero_diag.contains(i)).collect();
    let n = allowed.len();
    let supports = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    if supports > support_cap {
        return Err(Error::SupportBudgetExceeded {
            supports,
            cap: support_cap,
        });
    }
    let mut forbidden = vec![vec![false; d]; d];
    for &(i, j) in &zero_pairs {
        forbidden[i][j] = true;
        forbidden[j][i] = true;
    }

    let w = kernel_matrix(&kernel_basis, d);
    let mut best: Option<(Vec<usize>, Vec<f64>)> = None;
    for mask in 1..=supports {
        let support: Vec<usize> = (0..n)
            .filter(|b| (mask >> b) & 1 == 1)
            .map(|b| allowed[b])
            .collect();
        if best.as_ref().is_some_and(|(s, _)| *s <= support) {
            continue;
        }
        let admissible = support
            .iter()
            .enumerate()
            .all(|(a, &i)| support[a + 1..].iter().all(|&j| !forbidden[i][j]));
        if !admissible {
            continue;
        }
        if let Some(y) = extreme_ray(&w, &support, tol) {
            best = Some((support, y));
        }
    }

    let (feasible_support, verdict) = match best {
        Some((s, y)) => (Some(s), RangeVerdict::FeasibleWitnessVector { y }),
        None => (None, RangeVerdict::Infeasible),
    };
    Ok(RangeReport {
        kernel_basis,
        zero_pairs,
        zero_diag,
        feasible_support,
        verdict,
    })
}

/// `m - sum_t w_t v_t v_t^T`, for stripping known product terms before testing.
pub fn subtract_rank_one(m: &SymMatrix, terms: &[(f64, Vec<f64>)]) -> Result<SymMatrix> {
    let mut out = m.clone();
    for (w, v) in terms {
        if v.len() != m.dim() {
            return Err(Error::DimensionMismatch {
                expected: m.dim(),
                found: v.len(),
            });
        }
        out = out.add_scaled(&SymMatrix::outer(v), -w)?;
    }
    Ok(out)
}

/// A `y >= 0`, strictly positive exactly on `support`, solving the kernel equations.
/// Returned with max entry 1.
pub fn feasible_on_support(
    kernel_basis: &[Vec<f64>],
    support: &[usize],
    d: usize,
    tol: &Tolerance,
) -> Option<Vec<f64>> {
    if support.is_empty() || support.iter().any(|&i| i >= d) {
        return None;
    }
    let w = kernel_matrix(kernel_basis, d);
    if let Some(y) = extreme_ray(&w, support, tol) {
        return Some(y);
    }
    // Otherwise y is a positive mix of extreme rays on smaller supports covering `support`.
    let k = support.len();
    let mut acc = vec![0.0; d];
    let mut covered = vec![false; k];
    for mask in 1u64..(1u64 << k) - 1 {
        let sub: Vec<usize> = (0..k).filter(|b| (mask >> b) & 1 == 1).map(|b| support[b]).collect();
        if let Some(y) = extreme_ray(&w, &sub, tol) {
            for (a, &i) in support.iter().enumerate() {
                if y[i] > 0.0 {
                    covered[a] = true;
                    acc[i] += y[i];
                }
            }
        }
    }
    if !covered.iter().all(|&c| c) {
        return None;
    }
    let top = acc.iter().copied().fold(0.0, f64::max);
    acc.iter_mut().for_each(|v| *v /= top);
    Some(acc)
}

fn kernel_matrix(kernel_basis: &[Vec<f64>], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(kernel_basis.len(), d, |r, c| kernel_basis[r][c])
}

/// The unique (up to scale) null vector of `w` on `support`, if the null space there is
/// one-dimensional and the vector is strictly one-signed.
fn extreme_ray(w: &DMatrix<f64>, support: &[usize], tol: &Tolerance) -> Option<Vec<f64>> {
    let d = w.ncols();
    let k = support.len();
    let rows = w.nrows().max(k);
    let mut ws = DMatrix::zeros(rows, k);
    for r in 0..w.nrows() {
        for (c, &i) in support.iter().enumerate() {
            ws[(r, c)] = w[(r, i)];
        }
    }
    let svd = ws.svd(false, true);
    let v_t = svd.v_t.as_ref()?;
    let smax = svd.singular_values.max().max(1.0);
    let cut = tol.rank_cut * smax;
    let null: Vec<usize> = (0..k).filter(|&c| svd.singular_values[c] <= cut).collect();
    if null.len() != 1 {
        return None;
    }
    let v: DVector<f64> = v_t.row(null[0]).transpose().into_owned();
    let top = v.amax();
    let sign = if v.iter().copied().fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a }) < 0.0 {
        -1.0
    } else {
        1.0
    };
    if v.iter().any(|&x| sign * x / top <= SIGN_TOL) {
        return None;
    }
    let mut y = vec![0.0; d];
    for (c, &i) in support.iter().enumerate() {
        y[i] = sign * v[c] / top;
    }
    let resid = (w * DVector::from_column_slice(&y)).amax();
    if resid > KERNEL_RESIDUAL_TOL {
        return None;
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m_tilde() -> SymMatrix {
        SymMatrix::from_rows(&[
            &[1., 1., 0., 0., 1.],
            &[1., 2., 1., 0., 0.],
            &[0., 1., 2., 1., 0.],
            &[0., 0., 1., 1., 1.],
            &[1., 0., 0., 1., 3.],
        ])
        .unwrap()
    }

    fn circulant6() -> SymMatrix {
        let row = [2.0, 1.5, 0.5, 0.0, 0.5, 1.5];
        SymMatrix::from_fn(6, |i, j| row[(j + 6 - i) % 6])
    }

    #[test]
    fn zero_matrix_is_rejected() {
        let r = range_criterion_matrix(&SymMatrix::zeros(3), &Tolerance::default(), DEFAULT_SUPPORT_CAP);
        assert!(matches!(r, Err(Error::AllZero)));
    }

    #[test]
    fn circulant_is_infeasible() {
        let r = range_criterion_matrix(&circulant6(), &Tolerance::default(), DEFAULT_SUPPORT_CAP).unwrap();
        assert_eq!(r.kernel_basis.len(), 3);
        assert_eq!(r.zero_pairs, vec![(0, 3), (1, 4), (2, 5)]);
        assert!(r.is_infeasible());
    }

    #[test]
    fn m_tilde_is_infeasible() {
        let r = range_criterion_matrix(&m_tilde(), &Tolerance::default(), DEFAULT_SUPPORT_CAP).unwrap();
        assert_eq!(r.kernel_basis.len(), 2);
        assert!(r.is_infeasible());
    }

    #[test]
    fn diagonal_state_is_feasible() {
        let s = DsState::new(3, (0..3).map(|i| ((i, i), 1.0 / 3.0)), true).unwrap();
        let r = range_criterion_test(&s, &Tolerance::default(), DEFAULT_SUPPORT_CAP).unwrap();
        assert!(r.kernel_basis.is_empty());
        assert_eq!(r.feasible_support, Some(vec![0]));
        assert_eq!(r.verdict, RangeVerdict::FeasibleWitnessVector { y: vec![1.0, 0.0, 0.0] });
    }

    #[test]
    fn support_examples() {
        let tol = Tolerance::default();
        assert_eq!(feasible_on_support(&[], &[0], 2, &tol), Some(vec![1.0, 0.0]));
        let w = vec![vec![1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()]];
        let y = feasible_on_support(&w, &[0, 1], 2, &tol).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-12 && (y[1] - 1.0).abs() < 1e-12);
        // two-dimensional null space, still strictly positive
        assert!(feasible_on_support(&[], &[0, 1], 2, &tol).is_some());
    }

    #[test]
    fn circulant_first_three_forces_zero() {
        let r = range_criterion_matrix(&circulant6(), &Tolerance::default(), DEFAULT_SUPPORT_CAP).unwrap();
        assert!(feasible_on_support(&r.kernel_basis, &[0, 1, 2], 6, &Tolerance::default()).is_none());
    }

    #[test]
    fn cap_is_enforced() {
        let r = range_criterion_matrix(&circulant6(), &Tolerance::default(), 10);
        assert!(matches!(r, Err(Error::SupportBudgetExceeded { supports: 63, cap: 10 })));
    }

    #[test]
    fn subtraction_hook() {
        let m_hat = SymMatrix::from_rows(&[
            &[1., 1., 0., 0., 1.],
            &[1., 2., 1., 0., 0.],
            &[0., 1., 2., 1., 0.],
            &[0., 0., 1., 2., 1.],
            &[1., 0., 0., 1., 6.],
        ])
        .unwrap();
        let r = subtract_rank_one(
            &m_hat,
            &[
                (3.0 / 16.0, vec![1., 0., 0., 0., 1.]),
                (1.0 / 16.0, vec![1., 0., 0., 0., 9.]),
            ],
        )
        .unwrap();
        assert!((r.get(0, 0) - 0.75).abs() < 1e-15);
        assert!((r.get(0, 4) - 0.25).abs() < 1e-15);
        assert!((r.get(4, 4) - 0.75).abs() < 1e-15);
        assert_eq!(r.get(1, 1), 2.0);
    }
}
