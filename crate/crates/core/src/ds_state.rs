//! Diagonal symmetric states, their `M` matrix and the block form of the partial transpose.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{is_psd, sym_eig, SymMatrix, Tolerance};

const NORMALIZATION_TOL: f64 = 1e-9;
const EXTREMAL_TOL: f64 = 1e-9;

/// `sum_{i<=j} p(i,j) |D_ij><D_ij|` with `|D_ii> = |ii>` and `|D_ij> = (|ij>+|ji>)/sqrt 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsState {
    d: usize,
    p: BTreeMap<(usize, usize), f64>,
    normalized: bool,
}

impl DsState {
    /// Keys must satisfy `i <= j < d`. Missing pairs have weight 0.
    pub fn new(
        d: usize,
        weights: impl IntoIterator<Item = ((usize, usize), f64)>,
        normalized: bool,
    ) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
        let mut p = BTreeMap::new();
        for ((i, j), w) in weights {
            if i > j || j >= d {
                return Err(Error::BadIndex { i, j, d });
            }
            if w.is_nan() || w < 0.0 {
                return Err(Error::NegativeWeight { i, j, weight: w });
            }
            if !w.is_finite() {
                return Err(Error::BadParam(format!("weight p({i},{j}) is not finite")));
            }
            if p.insert((i, j), w).is_some() {
                return Err(Error::DuplicateEntry { i, j });
            }
        }
        let state = DsState { d, p, normalized };
        if normalized {
            let sum = state.total_weight();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::BadNormalization { sum });
            }
        }
        Ok(state)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Weight of the pair, order-insensitive.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.p.get(&key).copied().unwrap_or(0.0)
    }

    /// Stored (explicitly given) weights in key order.
    pub fn weights(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.p.iter().map(|(&k, &w)| (k, w))
    }

    pub fn total_weight(&self) -> f64 {
        self.p.values().sum()
    }

    /// Rescales to unit trace. Fails on the zero state.
    pub fn normalized(&self) -> Result<Self> {
        let s = self.total_weight();
        if s <= 0.0 {
            return Err(Error::AllZero);
        }
        DsState::new(self.d, self.p.iter().map(|(&k, &w)| (k, w / s)), true)
    }

    pub fn m_matrix(&self) -> MMatrix {
        MMatrix {
            inner: SymMatrix::from_fn(self.d, |i, j| {
                let w = self.weight(i, j);
                if i == j {
                    w
                } else {
                    w / 2.0
                }
            }),
        }
    }

    /// Inverse of [`DsState::m_matrix`]. Only nonzero weights are stored.
    pub fn from_m_matrix(m: &SymMatrix, normalized: bool) -> Result<Self> {
        let d = m.dim();
        let mut w = Vec::new();
        for i in 0..d {
            for j in i..d {
                let v = m.get(i, j);
                if v.is_nan() || v < 0.0 {
                    return Err(Error::NegativeWeight { i, j, weight: v });
                }
                if v != 0.0 {
                    w.push(((i, j), if i == j { v } else { 2.0 * v }));
                }
            }
        }
        DsState::new(d, w, normalized)
    }

    /// Dense `d^2 x d^2` density matrix, basis index `a*d + b` for `|ab>`.
    pub fn full_density_matrix(&self) -> SymMatrix {
        let d = self.d;
        let mut rho = DMatrix::zeros(d * d, d * d);
        for (&(i, j), &w) in &self.p {
            if i == j {
                rho[(i * d + i, i * d + i)] += w;
            } else {
                let (a, b) = (i * d + j, j * d + i);
                let h = w / 2.0;
                rho[(a, a)] += h;
                rho[(b, b)] += h;
                rho[(a, b)] += h;
                rho[(b, a)] += h;
            }
        }
        SymMatrix::from_matrix(rho).expect("square by construction")
    }

    /// Spectrum of the partial transpose through its block decomposition.
    pub fn pt_spectrum(&self) -> PtSpectrumReport {
        let m_eigenvalues = sym_eig(self.m_matrix().as_sym()).values.iter().copied().collect();
        let mut singleton_blocks = Vec::with_capacity(self.d * (self.d - 1) / 2);
        for i in 0..self.d {
            for j in (i + 1)..self.d {
                singleton_blocks.push((self.weight(i, j) / 2.0, 2));
            }
        }
        PtSpectrumReport {
            m_eigenvalues,
            singleton_blocks,
        }
    }

    /// PPT iff `M` is PSD; entrywise nonnegativity holds by construction.
    pub fn is_ppt(&self, tol: &Tolerance) -> bool {
        is_psd(self.m_matrix().as_sym(), tol)
    }

    /// True when every coherence saturates `p_ij = 2 sqrt(p_ii p_jj)`.
    pub fn is_extremal_separable_candidate(&self) -> bool {
        for i in 0..self.d {
            for j in (i + 1)..self.d {
                let target = 2.0 * (self.weight(i, i) * self.weight(j, j)).sqrt();
                if (self.weight(i, j) - target).abs() > EXTREMAL_TOL {
                    return false;
                }
            }
        }
        true
    }
}

/// `M(i,i) = p(i,i)`, `M(i,j) = p(i,j)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MMatrix {
    inner: SymMatrix,
}

impl MMatrix {
    pub fn as_sym(&self) -> &SymMatrix {
        &self.inner
    }

    pub fn into_sym(self) -> SymMatrix {
        self.inner
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtSpectrumReport {
    /// Ascending.
    pub m_eigenvalues: Vec<f64>,
    /// `(p(i,j)/2, 2)` for each `i < j` in lexicographic order.
    pub singleton_blocks: Vec<(f64, usize)>,
}

impl PtSpectrumReport {
    /// Full multiset, ascending.
    pub fn all_eigenvalues(&self) -> Vec<f64> {
        let mut v = self.m_eigenvalues.clone();
        for &(val, mult) in &self.singleton_blocks {
            v.extend(std::iter::repeat_n(val, mult));
        }
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.all_eigenvalues().first().copied().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example2() -> DsState {
        DsState::new(
            3,
            [
                ((0, 0), 0.19),
                ((0, 1), 0.16),
                ((0, 2), 0.23),
                ((1, 1), 0.064),
                ((1, 2), 0.16),
                ((2, 2), 0.196),
            ],
            true,
        )
        .unwrap()
    }

    fn circulant_state() -> DsState {
        let mut w = Vec::new();
        for i in 0..6 {
            w.push(((i, i), 2.0));
            for j in (i + 1)..6 {
                let w_ij = match (j - i).min(6 - (j - i)) {
                    1 => 3.0,
                    2 => 1.0,
                    _ => 0.0,
                };
                w.push(((i, j), w_ij));
            }
        }
        DsState::new(6, w, false).unwrap()
    }

    #[test]
    fn construction_errors() {
        assert!(DsState::new(2, [((0, 0), 1.0)], true).is_ok());
        assert!(matches!(
            DsState::new(3, [((0, 1), -0.1)], false),
            Err(Error::NegativeWeight { .. })
        ));
        assert!(matches!(
            DsState::new(3, [((0, 1), f64::NAN)], false),
            Err(Error::NegativeWeight { .. })
        ));
        assert!(matches!(
            DsState::new(3, [((1, 0), 0.1)], false),
            Err(Error::BadIndex { .. })
        ));
        assert!(matches!(
            DsState::new(3, [((0, 3), 0.1)], false),
            Err(Error::BadIndex { .. })
        ));
        assert!(matches!(
            DsState::new(2, [((0, 0), 0.5)], true),
            Err(Error::BadNormalization { .. })
        ));
        assert!(matches!(
            DsState::new(2, [((0, 0), 0.5), ((0, 0), 0.5)], true),
            Err(Error::DuplicateEntry { .. })
        ));
        assert!(matches!(
            DsState::new(1, [((0, 0), 1.0)], true),
            Err(Error::DimensionTooSmall(1))
        ));
    }

    #[test]
    fn example2_m_matrix() {
        let s = example2();
        assert!((s.total_weight() - 1.0).abs() < 1e-12);
        let m = s.m_matrix();
        let expect = [[19.0, 8.0, 11.5], [8.0, 6.4, 8.0], [11.5, 8.0, 19.6]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.get(i, j) - expect[i][j] / 100.0).abs() < 1e-15);
            }
        }
        let back = DsState::from_m_matrix(m.as_sym(), true).unwrap();
        assert_eq!(back.m_matrix(), m);
    }

    #[test]
    fn circulant_first_row() {
        let m = circulant_state().m_matrix();
        let row = [2.0, 1.5, 0.5, 0.0, 0.5, 1.5];
        for (j, v) in row.iter().enumerate() {
            assert_eq!(m.get(0, j), *v);
        }
        assert!(circulant_state().is_ppt(&Tolerance::default()));
    }

    #[test]
    fn from_m_rejects_negative() {
        let m = SymMatrix::from_rows(&[&[0.0, -1.0], &[-1.0, 0.0]]).unwrap();
        assert!(matches!(
            DsState::from_m_matrix(&m, false),
            Err(Error::NegativeWeight { .. })
        ));
    }

    #[test]
    fn dicke_density_matrix() {
        let s = DsState::new(2, [((0, 1), 1.0)], true).unwrap();
        let rho = s.full_density_matrix();
        for (a, b) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            assert_eq!(rho.get(a, b), 0.5);
        }
        assert_eq!(rho.get(0, 0), 0.0);
        assert!(!s.is_ppt(&Tolerance::default()));
        let spec = s.pt_spectrum();
        assert!((spec.m_eigenvalues[0] + 0.5).abs() < 1e-14);
        assert_eq!(spec.singleton_blocks, vec![(0.5, 2)]);
        assert_eq!(spec.all_eigenvalues().len(), 4);
    }

    #[test]
    fn product_state_is_ppt() {
        let s = DsState::new(2, [((0, 0), 1.0)], true).unwrap();
        assert!(s.is_ppt(&Tolerance::default()));
        assert_eq!(s.full_density_matrix().get(0, 0), 1.0);
        assert!((example2().full_density_matrix().as_matrix().trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extremal_candidates() {
        let s = DsState::new(2, [((0, 0), 0.25), ((1, 1), 0.25), ((0, 1), 0.5)], true).unwrap();
        assert!(s.is_extremal_separable_candidate());
        assert!(!example2().is_extremal_separable_candidate());
        let third = 1.0 / 3.0;
        let diag = DsState::new(3, (0..3).map(|i| ((i, i), third)), true).unwrap();
        assert!(!diag.is_extremal_separable_candidate());
    }
}
