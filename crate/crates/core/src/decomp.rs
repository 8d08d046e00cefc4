//! Separable decompositions into symmetric product vectors `|psi>|psi>`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cones::CpFactorization;
use crate::ds_state::DsState;
use crate::error::{Error, Result};
use crate::matcore::Tolerance;

/// Relative reconstruction tolerance used by [`verify_decomposition`].
pub const RECONSTRUCT_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTerm {
    pub weight: f64,
    pub ket: Vec<Complex64>,
}

/// `rho = sum_t w_t (|k_t><k_t|) (x) (|k_t><k_t|)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SeparableDecomposition {
    pub terms: Vec<ProductTerm>,
}

impl SeparableDecomposition {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `sum_t w_t ||k_t||^4`.
    pub fn trace(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight * t.ket.iter().map(|z| z.norm_sqr()).sum::<f64>().powi(2))
            .sum()
    }

    /// Dense `d^2 x d^2` sum, basis index `a*d + b`.
    pub fn reconstruct(&self, d: usize) -> DMatrix<Complex64> {
        let n = d * d;
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        let mut psi = vec![Complex64::new(0.0, 0.0); n];
        for t in &self.terms {
            assert_eq!(t.ket.len(), d, "ket length must equal the local dimension");
            for a in 0..d {
                for b in 0..d {
                    psi[a * d + b] = t.ket[a] * t.ket[b];
                }
            }
            for r in 0..n {
                if psi[r] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let pr = psi[r] * t.weight;
                for c in 0..n {
                    out[(r, c)] += pr * psi[c].conj();
                }
            }
        }
        out
    }
}

/// Phase construction turning each column `b` of a nonnegative factor into `d 2^d` product
/// vectors `sum_l (-1)^{k_l} w^{jl} sqrt(b_l) |l>` with `w = exp(i pi / d)`, all weighted
/// `1/(d 2^d)`. The mixture equals the DS state whose `M` is `B B^T`.
pub fn zeta_decomposition(f: &CpFactorization) -> SeparableDecomposition {
    let b = f.b();
    let d = b.nrows();
    assert!(d < usize::BITS as usize, "local dimension too large for sign enumeration");
    let n_signs = 1usize << d;
    let weight = 1.0 / (d as f64 * n_signs as f64);
    let omega: Vec<Complex64> = (0..2 * d)
        .map(|t| Complex64::from_polar(1.0, PI * t as f64 / d as f64))
        .collect();
    let mut terms = Vec::new();
    for col in b.column_iter() {
        if col.iter().all(|&v| v <= 0.0) {
            continue;
        }
        let z: Vec<f64> = col.iter().map(|&v| v.max(0.0).sqrt()).collect();
        for j in 0..d {
            for k in 0..n_signs {
                let ket = (0..d)
                    .map(|l| {
                        let sign = if (k >> l) & 1 == 1 { -1.0 } else { 1.0 };
                        omega[(j * l) % (2 * d)] * (sign * z[l])
                    })
                    .collect();
                terms.push(ProductTerm { weight, ket });
            }
        }
    }
    SeparableDecomposition { terms }
}

/// Unnormalized `sum_i |ii><ii| + 2 sum_{i<j} |D_ij><D_ij|`; its `M` is the all-ones matrix.
pub fn state_i(d: usize) -> Result<DsState> {
    let w = (0..d).flat_map(|i| (i..d).map(move |j| ((i, j), if i == j { 1.0 } else { 2.0 })));
    DsState::new(d, w.collect::<Vec<_>>(), false)
}

/// Normalized state with `M = u_x u_x^T`, `u_x = x / ||x||_1`.
pub fn state_ix(x: &[f64]) -> Result<DsState> {
    for (index, &value) in x.iter().enumerate() {
        if value.is_nan() || value < 0.0 {
            return Err(Error::NonPositiveEntry { index, value });
        }
    }
    let s: f64 = x.iter().sum();
    if s <= 0.0 {
        return Err(Error::AllZero);
    }
    let u: Vec<f64> = x.iter().map(|v| v / s).collect();
    let d = x.len();
    let mut w = Vec::new();
    for i in 0..d {
        for j in i..d {
            let v = if i == j { u[i] * u[i] } else { 2.0 * u[i] * u[j] };
            if v != 0.0 {
                w.push(((i, j), v));
            }
        }
    }
    // Rounding may move the sum off 1 by a few ulps; the flag is checked at 1e-9.
    DsState::new(d, w, true)
}

/// The `d = 3` state generated by `x|0> + y|1> + z|2>`, unnormalized.
pub fn sigma_xyz(x: Complex64, y: Complex64, z: Complex64) -> DsState {
    let a = [x.norm_sqr(), y.norm_sqr(), z.norm_sqr()];
    let mut w = Vec::new();
    for i in 0..3 {
        for j in i..3 {
            let v = if i == j { a[i] * a[i] } else { 2.0 * a[i] * a[j] };
            if v != 0.0 {
                w.push(((i, j), v));
            }
        }
    }
    DsState::new(3, w, false).expect("weights are nonnegative by construction")
}

/// Rebuilds the density matrix from the terms and compares it with the target entrywise
/// (Frobenius norm, `1e-8 (1 + trace)`). Weights must be positive and finite.
pub fn verify_decomposition(
    rho: &DsState,
    dec: &SeparableDecomposition,
    _tol: &Tolerance,
) -> bool {
    let d = rho.d();
    if dec.terms.iter().any(|t| {
        t.ket.len() != d || !(t.weight > 0.0 && t.weight.is_finite())
    }) {
        return false;
    }
    let target = rho.full_density_matrix();
    let rec = dec.reconstruct(d);
    let n = d * d;
    let mut err = 0.0;
    for r in 0..n {
        for c in 0..n {
            let diff = rec[(r, c)] - Complex64::new(target.get(r, c), 0.0);
            err += diff.norm_sqr();
        }
    }
    err.sqrt() <= RECONSTRUCT_RTOL * (1.0 + rho.total_weight())
}
