//! Copositive witnesses built from the 5x5 Horn matrix.
//!
//! Every library witness is copositive by construction: principal embeddings and
//! congruences `D H D` with `D >= 0` diagonal preserve copositivity. A negative
//! `Tr(W M)` therefore proves `M` is not completely positive.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{min_quad_over_simplex_seeded, SymMatrix};

pub const HORN_DIM: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Horn,
    /// Horn placed on `subset`, row `a` of Horn going to index `subset[a]`.
    LiftedHorn { subset: Vec<usize> },
    /// `D H D` placed on `subset`, `D = diag(scale)`.
    ScaledHorn { subset: Vec<usize>, scale: Vec<f64> },
    UserSupplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub w: SymMatrix,
    pub provenance: Provenance,
}

impl Witness {
    pub fn user(w: SymMatrix) -> Self {
        Witness {
            w,
            provenance: Provenance::UserSupplied,
        }
    }

    /// Whether copositivity follows from the provenance alone.
    pub fn is_guaranteed_copositive(&self) -> bool {
        !matches!(self.provenance, Provenance::UserSupplied)
    }

    /// Rebuilds the matrix from its provenance in dimension `d`; `None` for user witnesses.
    pub fn rebuild(provenance: &Provenance, d: usize) -> Option<Result<Witness>> {
        match provenance {
            Provenance::Horn => Some(if d == HORN_DIM {
                Ok(horn_matrix())
            } else {
                Err(Error::DimensionMismatch {
                    expected: HORN_DIM,
                    found: d,
                })
            }),
            Provenance::LiftedHorn { subset } => Some(lift_witness(&horn_matrix(), d, subset)),
            Provenance::ScaledHorn { subset, scale } => Some(scaled_horn(d, subset, scale)),
            Provenance::UserSupplied => None,
        }
    }
}

/// `H_ij` depends on `(j - i) mod 5`: 1 on the diagonal, -1 for neighbours, +1 otherwise.
pub fn horn_matrix() -> Witness {
    Witness {
        w: SymMatrix::from_fn(HORN_DIM, |i, j| match (j + HORN_DIM - i) % HORN_DIM {
            0 => 1.0,
            1 | 4 => -1.0,
            _ => 1.0,
        }),
        provenance: Provenance::Horn,
    }
}

/// Embeds `w` as the principal submatrix on `subset` of a `d x d` zero matrix.
pub fn lift_witness(w: &Witness, d: usize, subset: &[usize]) -> Result<Witness> {
    check_subset(d, subset, w.w.dim())?;
    let mut pos = vec![None; d];
    for (a, &i) in subset.iter().enumerate() {
        pos[i] = Some(a);
    }
    let m = SymMatrix::from_fn(d, |i, j| match (pos[i], pos[j]) {
        (Some(a), Some(b)) => w.w.get(a, b),
        _ => 0.0,
    });
    let provenance = match &w.provenance {
        Provenance::Horn => Provenance::LiftedHorn {
            subset: subset.to_vec(),
        },
        _ => Provenance::UserSupplied,
    };
    Ok(Witness { w: m, provenance })
}

/// `D H D` with `D = diag(scale)` lifted onto `subset`.
pub fn scaled_horn(d: usize, subset: &[usize], scale: &[f64]) -> Result<Witness> {
    check_subset(d, subset, HORN_DIM)?;
    if scale.len() != HORN_DIM || scale.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(Error::BadParam("scale must hold 5 nonnegative finite entries".into()));
    }
    let h = horn_matrix();
    let dh = Witness {
        w: SymMatrix::from_fn(HORN_DIM, |a, b| scale[a] * h.w.get(a, b) * scale[b]),
        provenance: Provenance::UserSupplied,
    };
    let mut lifted = lift_witness(&dh, d, subset)?;
    lifted.provenance = Provenance::ScaledHorn {
        subset: subset.to_vec(),
        scale: scale.to_vec(),
    };
    Ok(lifted)
}

fn check_subset(d: usize, subset: &[usize], size: usize) -> Result<()> {
    let bad = || Error::BadSubset {
        subset: subset.to_vec(),
        d,
        size,
    };
    if subset.len() != size || size > d {
        return Err(bad());
    }
    let mut seen = vec![false; d];
    for &i in subset {
        if i >= d || seen[i] {
            return Err(bad());
        }
        seen[i] = true;
    }
    Ok(())
}

/// `Tr(W M) = sum_ij W_ij M_ij`.
pub fn witness_value(w: &Witness, m: &SymMatrix) -> Result<f64> {
    w.w.trace_inner(m)
}

/// Values below this certify entanglement for a matrix of Frobenius norm `fro`.
pub fn detection_threshold(fro: f64) -> f64 {
    -1e-9 * (1.0 + fro)
}

/// The 12 placements of Horn on a sorted 5-set that are distinct up to its dihedral symmetry.
pub fn horn_orderings(subset: &[usize]) -> Vec<Vec<usize>> {
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    let first = sorted[0];
    let rest = &sorted[1..];
    let mut out = Vec::with_capacity(12);
    permute(rest, &mut Vec::new(), &mut vec![false; rest.len()], &mut |p| {
        if p[0] < p[3] {
            let mut o = vec![first];
            o.extend_from_slice(p);
            out.push(o);
        }
    });
    out
}

fn permute(items: &[usize], cur: &mut Vec<usize>, used: &mut [bool], f: &mut dyn FnMut(&[usize])) {
    if cur.len() == items.len() {
        f(cur);
        return;
    }
    for k in 0..items.len() {
        if !used[k] {
            used[k] = true;
            cur.push(items[k]);
            permute(items, cur, used, f);
            cur.pop();
            used[k] = false;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanBudget {
    /// Subsets examined when `C(d,5)` exceeds it; otherwise all are scanned.
    pub max_subsets: usize,
    pub simplex_restarts: usize,
    pub simplex_iters: usize,
    pub seed: u64,
}

impl Default for ScanBudget {
    fn default() -> Self {
        ScanBudget {
            max_subsets: 2000,
            simplex_restarts: 8,
            simplex_iters: 400,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub witness: Witness,
    pub value: f64,
}

/// Looks for a library witness with `Tr(W M)` below [`detection_threshold`].
///
/// Plain Horn placements are tried on every scanned subset first, then diagonal rescalings
/// found by minimizing `x^T (H o M_S) x` over the simplex. Returns `None` for `d < 5`.
pub fn witness_scan(m: &SymMatrix, budget: &ScanBudget) -> Option<ScanResult> {
    let d = m.dim();
    if d < HORN_DIM {
        return None;
    }
    let thr = detection_threshold(m.frobenius_norm());
    let subsets = choose_subsets(d, budget);
    let h = horn_matrix();

    for s in &subsets {
        for order in horn_orderings(s) {
            let value = placed_value(&h.w, m, &order, &[1.0; HORN_DIM]);
            if value < thr {
                let witness = lift_witness(&h, d, &order).expect("valid subset");
                return Some(ScanResult { witness, value });
            }
        }
    }
    for s in &subsets {
        for order in horn_orderings(s) {
            let q = SymMatrix::from_fn(HORN_DIM, |a, b| h.w.get(a, b) * m.get(order[a], order[b]));
            let r = min_quad_over_simplex_seeded(&q, budget.simplex_restarts, budget.simplex_iters, budget.seed);
            if r.value >= 0.0 {
                continue;
            }
            let top = r.argmin.iter().copied().fold(0.0, f64::max);
            let scale: Vec<f64> = r.argmin.iter().map(|v| v / top).collect();
            let value = placed_value(&h.w, m, &order, &scale);
            if value < thr {
                let witness = scaled_horn(d, &order, &scale).expect("valid subset");
                return Some(ScanResult { witness, value });
            }
        }
    }
    None
}

fn placed_value(h: &SymMatrix, m: &SymMatrix, order: &[usize], scale: &[f64]) -> f64 {
    let mut v = 0.0;
    for a in 0..HORN_DIM {
        for b in 0..HORN_DIM {
            v += scale[a] * scale[b] * h.get(a, b) * m.get(order[a], order[b]);
        }
    }
    v
}

fn choose_subsets(d: usize, budget: &ScanBudget) -> Vec<Vec<usize>> {
    let total = binomial(d, HORN_DIM);
    if total <= budget.max_subsets as u128 {
        let mut out = Vec::new();
        combinations(d, HORN_DIM, 0, &mut Vec::new(), &mut out);
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    (0..budget.max_subsets)
        .map(|_| {
            let mut s = sample(&mut rng, d, HORN_DIM).into_vec();
            s.sort_unstable();
            s
        })
        .collect()
}

fn combinations(d: usize, k: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in from..d {
        if d - i < k - cur.len() {
            break;
        }
        cur.push(i);
        combinations(d, k, i + 1, cur, out);
        cur.pop();
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
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

    fn m_hat() -> SymMatrix {
        SymMatrix::from_rows(&[
            &[1., 1., 0., 0., 1.],
            &[1., 2., 1., 0., 0.],
            &[0., 1., 2., 1., 0.],
            &[0., 0., 1., 2., 1.],
            &[1., 0., 0., 1., 6.],
        ])
        .unwrap()
    }

    #[test]
    fn horn_entries() {
        let h = horn_matrix();
        assert_eq!(h.w.get(0, 0), 1.0);
        assert_eq!(h.w.get(0, 1), -1.0);
        assert_eq!(h.w.get(0, 2), 1.0);
        for i in 0..5 {
            let s: f64 = (0..5).map(|j| h.w.get(i, j)).sum();
            assert_eq!(s, 1.0);
        }
    }

    #[test]
    fn lifting() {
        let h = horn_matrix();
        assert_eq!(lift_witness(&h, 5, &[0, 1, 2, 3, 4]).unwrap().w, h.w);
        let l = lift_witness(&h, 6, &[0, 1, 2, 3, 4]).unwrap();
        assert!((0..6).all(|j| l.w.get(5, j) == 0.0));
        assert_eq!(l.provenance, Provenance::LiftedHorn { subset: vec![0, 1, 2, 3, 4] });
        assert!(matches!(lift_witness(&h, 6, &[0, 1, 2, 3, 3]), Err(Error::BadSubset { .. })));
        assert!(matches!(lift_witness(&h, 6, &[0, 1, 2, 3, 6]), Err(Error::BadSubset { .. })));
        assert!(matches!(lift_witness(&h, 4, &[0, 1, 2, 3]), Err(Error::BadSubset { .. })));
    }

    #[test]
    fn paper_values() {
        let h = horn_matrix();
        assert_eq!(witness_value(&h, &m_tilde()).unwrap(), -1.0);
        let v1 = [1., 0., 0., 0., 1.];
        let v2 = [1., 0., 0., 0., 9.];
        let r = m_hat()
            .add_scaled(&SymMatrix::outer(&v1), -3.0 / 16.0)
            .unwrap()
            .add_scaled(&SymMatrix::outer(&v2), -1.0 / 16.0)
            .unwrap();
        assert!((witness_value(&h, &r).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(witness_value(&Witness::user(SymMatrix::zeros(5)), &m_tilde()).unwrap(), 0.0);
        assert!(witness_value(&h, &SymMatrix::zeros(4)).is_err());
    }

    #[test]
    fn orderings_are_distinct_placements() {
        let o = horn_orderings(&[0, 1, 2, 3, 4]);
        assert_eq!(o.len(), 12);
        assert_eq!(o[0], vec![0, 1, 2, 3, 4]);
        let h = horn_matrix();
        let mut mats: Vec<SymMatrix> = o.iter().map(|s| lift_witness(&h, 5, s).unwrap().w).collect();
        mats.dedup();
        for a in 0..mats.len() {
            for b in (a + 1)..mats.len() {
                assert_ne!(mats[a], mats[b]);
            }
        }
    }

    #[test]
    fn scan_detects_paper_matrices() {
        let r = witness_scan(&m_tilde(), &ScanBudget::default()).unwrap();
        assert_eq!(r.value, -1.0);
        assert_eq!(r.witness.provenance, Provenance::LiftedHorn { subset: vec![0, 1, 2, 3, 4] });
        let r = witness_scan(&m_hat(), &ScanBudget::default()).unwrap();
        assert!(matches!(r.witness.provenance, Provenance::ScaledHorn { .. }));
        assert!(r.value < 0.0);
        let rebuilt = Witness::rebuild(&r.witness.provenance, 5).unwrap().unwrap();
        assert_eq!(rebuilt.w, r.witness.w);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 5), 1);
        assert_eq!(binomial(12, 5), 792);
        assert_eq!(binomial(4, 5), 0);
    }
}
