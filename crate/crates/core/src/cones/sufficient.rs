//! Sufficient separability conditions: subtract a rank-one CP term and land in the
//! diagonally dominant cone.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::factor::{dd_factor, CpFactorization, FACTOR_RTOL};
use crate::ds_state::DsState;
use crate::error::{Error, Result};
use crate::matcore::{in_range, is_psd, pinv_quad_form, sym_eig, SymMatrix, Tolerance};

/// Slack allowed when re-checking a certificate's conditions.
pub const CERT_SLACK: f64 = 1e-9;

/// Upper cap on `lambda`, which must stay below 1.
const LAMBDA_CAP: f64 = 1.0 - 1e-12;

/// Smallest coordinate tried by [`search_jordis`].
const X_FLOOR: f64 = 1e-6;

/// `M - eps J` is nonnegative, PSD and diagonally dominant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnaCertificate {
    pub epsilon: f64,
    pub lower: f64,
    pub upper: f64,
}

impl AnnaCertificate {
    /// Re-evaluates the three conditions at `epsilon`.
    pub fn verify(&self, m: &SymMatrix, tol: &Tolerance) -> bool {
        let d = m.dim();
        if d < 3 || self.epsilon < 0.0 {
            return false;
        }
        let e = self.epsilon;
        let scale = CERT_SLACK * (1.0 + m.max_abs());
        let cond1 = m.min_entry() - e >= -scale;
        let u = vec![1.0 / (d as f64).sqrt(); d];
        let cond2 = in_range(m, &u, tol) && e * d as f64 * pinv_quad_form(m, &u, tol) <= 1.0 + CERT_SLACK;
        let cond3 = (0..d).all(|i| {
            let off: f64 = (0..d).filter(|&j| j != i).map(|j| m.get(i, j)).sum();
            m.get(i, i) + e * (d as f64 - 2.0) - off >= -scale
        });
        cond1 && cond2 && cond3
    }

    /// `[sqrt(eps) 1 | dd_factor(M - eps J)]`.
    pub fn factorization(&self, m: &SymMatrix) -> Result<CpFactorization> {
        let d = m.dim();
        let rest = m.add_scaled(&SymMatrix::outer(&vec![1.0; d]), -self.epsilon)?;
        let dd = dd_factor(&rest)?;
        let head = vec![self.epsilon.sqrt(); d];
        join_factor(&head, &dd)
    }
}

/// Conditions evaluated on `M`; `epsilon` is the midpoint of the feasible interval.
pub fn cert_anna_matrix(m: &SymMatrix, tol: &Tolerance) -> Result<AnnaCertificate> {
    let d = m.dim();
    if d < 3 {
        return Err(Error::DimensionTooSmall(d));
    }
    check_ppt(m, tol)?;
    let u = vec![1.0 / (d as f64).sqrt(); d];
    if !in_range(m, &u, tol) {
        return Err(Error::UNotInRange);
    }
    let q = pinv_quad_form(m, &u, tol);
    let upper = m.min_entry().min(1.0 / (d as f64 * q));
    let mut lower = 0.0_f64;
    for i in 0..d {
        let off: f64 = (0..d).filter(|&j| j != i).map(|j| m.get(i, j)).sum();
        lower = lower.max((off - m.get(i, i)) / (d as f64 - 2.0));
    }
    if lower > upper {
        return Err(Error::Infeasible { lower, upper });
    }
    Ok(AnnaCertificate {
        epsilon: 0.5 * (lower + upper),
        lower,
        upper,
    })
}

pub fn cert_anna(rho: &DsState, tol: &Tolerance) -> Result<AnnaCertificate> {
    cert_anna_matrix(rho.m_matrix().as_sym(), tol)
}

/// Bounds on `lambda` for a fixed `x`, computed on `M / ||M||_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordisCertificate {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub lower: f64,
    pub upper: f64,
    /// `min_ij M_ij s^2 / (x_i x_j)`.
    pub cond1_upper: f64,
    /// `1 / <u_x|M^+|u_x>`.
    pub cond2_upper: f64,
    /// Entrywise sum of `M` used to normalize.
    pub scale: f64,
}

impl JordisCertificate {
    pub fn u_x(&self) -> Vec<f64> {
        let s: f64 = self.x.iter().sum();
        self.x.iter().map(|v| v / s).collect()
    }

    /// Re-evaluates the three conditions at `(x, lambda)` on the normalized matrix.
    pub fn verify(&self, m: &SymMatrix, tol: &Tolerance) -> bool {
        let d = m.dim();
        if self.x.len() != d || self.x.iter().any(|&v| v <= 0.0) {
            return false;
        }
        if !(0.0..1.0).contains(&self.lambda) {
            return false;
        }
        let total = m.entrywise_l1();
        if total <= 0.0 {
            return false;
        }
        let mn = m.scale(1.0 / total);
        let s: f64 = self.x.iter().sum();
        let l = self.lambda;
        let x = &self.x;
        let cond1 = (0..d).all(|i| {
            (0..d).all(|j| mn.get(i, j) * s * s - l * x[i] * x[j] >= -CERT_SLACK * s * s)
        });
        let ux = self.u_x();
        let cond2 = in_range(&mn, &ux, tol) && l * pinv_quad_form(&mn, &ux, tol) <= 1.0 + CERT_SLACK;
        let cond3 = (0..d).all(|i| {
            let off: f64 = (0..d).filter(|&j| j != i).map(|j| mn.get(i, j)).sum();
            l * x[i] * (s - 2.0 * x[i]) - s * s * (off - mn.get(i, i)) >= -CERT_SLACK * s * s
        });
        cond1 && cond2 && cond3
    }

    /// `sqrt(scale) [sqrt(lambda) u_x | dd_factor(M/scale - lambda u_x u_x^T)]`.
    pub fn factorization(&self, m: &SymMatrix) -> Result<CpFactorization> {
        let ux = self.u_x();
        let mn = m.scale(1.0 / self.scale);
        let rest = mn.add_scaled(&SymMatrix::outer(&ux), -self.lambda)?;
        let dd = dd_factor(&rest)?;
        let head: Vec<f64> = ux.iter().map(|v| v * self.lambda.sqrt()).collect();
        let f = join_factor(&head, &dd)?;
        CpFactorization::new(f.b() * self.scale.sqrt())
    }
}

pub fn cert_jordis_matrix(m: &SymMatrix, x: &[f64], tol: &Tolerance) -> Result<JordisCertificate> {
    let d = m.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len(),
        });
    }
    for (index, &value) in x.iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonPositiveEntry { index, value });
        }
    }
    check_ppt(m, tol)?;
    let scale = m.entrywise_l1();
    if scale <= 0.0 {
        return Err(Error::AllZero);
    }
    let mn = m.scale(1.0 / scale);
    let s: f64 = x.iter().sum();
    let ux: Vec<f64> = x.iter().map(|v| v / s).collect();
    if !in_range(&mn, &ux, tol) {
        return Err(Error::UxNotInRange);
    }

    let mut cond1_upper = f64::INFINITY;
    for i in 0..d {
        for j in 0..d {
            cond1_upper = cond1_upper.min(mn.get(i, j) * s * s / (x[i] * x[j]));
        }
    }
    let cond2_upper = 1.0 / pinv_quad_form(&mn, &ux, tol);
    let mut upper = cond1_upper.min(cond2_upper);
    let mut lower = f64::NEG_INFINITY;
    let tiny = 1e-12 * s * s;
    for i in 0..d {
        let off: f64 = (0..d).filter(|&j| j != i).map(|j| mn.get(i, j)).sum();
        let c = x[i] * (s - 2.0 * x[i]);
        let r = s * s * (off - mn.get(i, i));
        if c > tiny {
            lower = lower.max(r / c);
        } else if c < -tiny {
            upper = upper.min(r / c);
        } else if r > CERT_SLACK * s * s {
            return Err(Error::Infeasible {
                lower: f64::INFINITY,
                upper,
            });
        }
    }
    let lo = lower.max(0.0);
    let hi = upper.min(LAMBDA_CAP);
    if upper < 0.0 || lo > hi {
        return Err(Error::Infeasible { lower, upper });
    }
    Ok(JordisCertificate {
        x: x.to_vec(),
        lambda: 0.5 * (lo + hi),
        lower,
        upper,
        cond1_upper,
        cond2_upper,
        scale,
    })
}

pub fn cert_jordis(rho: &DsState, x: &[f64], tol: &Tolerance) -> Result<JordisCertificate> {
    cert_jordis_matrix(rho.m_matrix().as_sym(), x, tol)
}

/// Nelder–Mead over `x` maximizing `upper - lower`. Deterministic for a given seed.
pub fn search_jordis_matrix(
    m: &SymMatrix,
    restarts: usize,
    tol: &Tolerance,
    seed: u64,
) -> Result<JordisCertificate> {
    check_ppt(m, tol)?;
    let d = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let diag: Vec<f64> = (0..d).map(|i| m.get(i, i)).collect();
    let row_sums: Vec<f64> = (0..d).map(|i| (0..d).map(|j| m.get(i, j)).sum()).collect();
    let mut starts: Vec<Vec<f64>> = vec![
        vec![1.0; d],
        diag.iter().map(|v| v.sqrt()).collect(),
        row_sums.clone(),
        diag,
    ];
    for _ in 0..restarts {
        starts.push((0..d).map(|_| rng.random::<f64>() + 0.05).collect());
    }

    let direct = |y: &[f64]| -> Vec<f64> { y.iter().map(|v| v.abs().max(X_FLOOR)).collect() };
    // x = M w keeps u_x inside the range of M when M is singular
    let through_m = |y: &[f64]| -> Vec<f64> {
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| m.get(i, j) * y[j].abs())
                    .sum::<f64>()
                    .max(X_FLOOR)
            })
            .collect()
    };
    let maps: [&dyn Fn(&[f64]) -> Vec<f64>; 2] = [&direct, &through_m];

    for map in maps {
        for start in &starts {
            let objective = |y: &[f64]| -> f64 { jordis_margin(m, &map(y), tol) };
            let best = nelder_mead(&objective, start, 60 * d, 1e-12);
            let x = map(&best);
            if let Ok(cert) = cert_jordis_matrix(m, &x, tol) {
                if cert.verify(m, tol)
                    && cert
                        .factorization(m)
                        .is_ok_and(|f| f.reproduces(m, FACTOR_RTOL))
                {
                    return Ok(cert);
                }
            }
        }
    }
    Err(Error::NotFound)
}

pub fn search_jordis(rho: &DsState, restarts: usize, tol: &Tolerance, seed: u64) -> Result<JordisCertificate> {
    search_jordis_matrix(rho.m_matrix().as_sym(), restarts, tol, seed)
}

/// `min(U, cap) - max(L, 0)`, or a large negative number when `x` is unusable.
fn jordis_margin(m: &SymMatrix, x: &[f64], tol: &Tolerance) -> f64 {
    match cert_jordis_matrix(m, x, tol) {
        Ok(c) => c.upper.min(LAMBDA_CAP) - c.lower.max(0.0),
        Err(Error::Infeasible { lower, upper }) if lower.is_finite() && upper.is_finite() => {
            upper.min(LAMBDA_CAP) - lower.max(0.0)
        }
        Err(_) => -1e6,
    }
}

/// Maximizes `f` with the standard reflection/expansion/contraction/shrink moves.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, start: &[f64], max_iter: usize, ftol: f64) -> Vec<f64> {
    let n = start.len();
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    simplex.push((f(start), start.to_vec()));
    for k in 0..n {
        let mut p = start.to_vec();
        p[k] += 0.1 * p[k].abs().max(0.05);
        simplex.push((f(&p), p));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| b.0.total_cmp(&a.0));
        if (simplex[0].0 - simplex[n].0).abs() <= ftol * (1.0 + simplex[0].0.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(_, p)| p[k]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].1.clone();
        let along = |t: f64| -> Vec<f64> {
            (0..n).map(|k| centroid[k] + t * (worst[k] - centroid[k])).collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr > simplex[0].0 {
            let xe = along(-2.0);
            let fe = f(&xe);
            simplex[n] = if fe > fr { (fe, xe) } else { (fr, xr) };
        } else if fr > simplex[n - 1].0 {
            simplex[n] = (fr, xr);
        } else {
            let xc = if fr > simplex[n].0 { along(-0.5) } else { along(0.5) };
            let fc = f(&xc);
            if fc > simplex[n].0.max(fr) {
                simplex[n] = (fc, xc);
            } else {
                let best = simplex[0].1.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let p: Vec<f64> = (0..n).map(|k| 0.5 * (best[k] + entry.1[k])).collect();
                    *entry = (f(&p), p);
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.0.total_cmp(&a.0));
    simplex.swap_remove(0).1
}

fn check_ppt(m: &SymMatrix, tol: &Tolerance) -> Result<()> {
    if m.min_entry() < 0.0 {
        return Err(Error::NotDnn);
    }
    if !is_psd(m, tol) {
        return Err(Error::NotPpt(sym_eig(m).min()));
    }
    Ok(())
}

fn join_factor(head: &[f64], rest: &CpFactorization) -> Result<CpFactorization> {
    let d = head.len();
    let k = rest.ncols();
    let b = DMatrix::from_fn(d, k + 1, |i, c| if c == 0 { head[i] } else { rest.b()[(i, c - 1)] });
    Ok(CpFactorization::new(b)?.pruned())
}
