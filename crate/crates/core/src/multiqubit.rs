//! Symmetric N-qubit states that are diagonal in the Dicke basis up to one real coherence,
//! the one-parameter PPT-entangled family, and its partial-transpose block structure.
//!
//! A cut `m` splits the qubits into `m` and `N - m`. In the symmetric bipartite basis
//! `|i>|j>` (`i <= m`, `j <= N - m`) the partial transpose decomposes into blocks labelled
//! by `n = j - i`. Block `n` is `D H D` with `D_i = sqrt(C(m,i) C(N-m,i+n))` and the Hankel
//! matrix `H_{i,i'} = lambda_{i+i'+n}`, for `i` in `[max(0,-n), min(m, N-m-n)]`. The
//! singleton blocks `n = -m` and `n = N - m` are coupled by the coherence.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    is_psd, numerical_rank, partial_transpose_second, rank_of_spectrum, sym_eig, SymMatrix,
    Tolerance,
};

/// Relative singular-value cutoff for the extremality nullspace.
pub const EXTREMALITY_RTOL: f64 = 1e-9;

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// `rho = (sum_k diag_k |D^k><D^k| + coherence (|D^a><D^b| + |D^b><D^a|)) / normalization`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricNQubitState {
    n_qubits: usize,
    /// `lambda'_k = C(N,k) lambda_k`, unnormalized.
    diag: Vec<f64>,
    coherence: f64,
    coherence_pair: (usize, usize),
    normalization: f64,
}

impl SymmetricNQubitState {
    pub fn new(
        n_qubits: usize,
        diag: Vec<f64>,
        coherence: f64,
        coherence_pair: (usize, usize),
        normalization: f64,
    ) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::BadParam(format!("need at least 2 qubits, got {n_qubits}")));
        }
        if diag.len() != n_qubits + 1 {
            return Err(Error::DimensionMismatch {
                expected: n_qubits + 1,
                found: diag.len(),
            });
        }
        for (k, &w) in diag.iter().enumerate() {
            if w.is_nan() || w < 0.0 || !w.is_finite() {
                return Err(Error::NegativeWeight { i: k, j: k, weight: w });
            }
        }
        let (a, b) = coherence_pair;
        if a >= b || b > n_qubits {
            return Err(Error::BadParam(format!(
                "coherence pair ({a},{b}) must satisfy a < b <= {n_qubits}"
            )));
        }
        if !coherence.is_finite() {
            return Err(Error::BadParam("coherence must be finite".into()));
        }
        if !(normalization > 0.0 && normalization.is_finite()) {
            return Err(Error::BadParam(format!("normalization must be positive, got {normalization}")));
        }
        Ok(SymmetricNQubitState {
            n_qubits,
            diag,
            coherence,
            coherence_pair,
            normalization,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn coherence(&self) -> f64 {
        self.coherence
    }

    pub fn coherence_pair(&self) -> (usize, usize) {
        self.coherence_pair
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// `lambda_k = diag_k / C(N,k)`, unnormalized.
    pub fn lambda(&self, k: usize) -> f64 {
        self.diag[k] / binomial(self.n_qubits, k)
    }

    pub fn with_coherence(&self, coherence: f64) -> Self {
        SymmetricNQubitState {
            coherence,
            ..self.clone()
        }
    }

    /// Unnormalized `(N+1) x (N+1)` Dicke-basis matrix.
    pub fn dicke_matrix_unnormalized(&self) -> SymMatrix {
        let (a, b) = self.coherence_pair;
        SymMatrix::from_fn(self.n_qubits + 1, |i, j| {
            if i == j {
                self.diag[i]
            } else if (i, j) == (a, b) {
                self.coherence
            } else {
                0.0
            }
        })
    }

    pub fn density_matrix(&self) -> SymMatrix {
        self.dicke_matrix_unnormalized().scale(1.0 / self.normalization)
    }

    /// Trace of the unnormalized operator.
    pub fn unnormalized_trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    pub fn trace(&self) -> f64 {
        self.unnormalized_trace() / self.normalization
    }
}

/// `f_0 = 1`, `f_1 = 1 + Z`, `f_{k+2} = (2+Z) f_{k+1} - f_k`, extended by `f_p = f_{-p-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FSequence {
    pub z_param: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `f_0 .. f_{count-1}` from the recurrence.
    pub values: Vec<f64>,
}

impl FSequence {
    /// Any integer index; stored values first, closed form beyond.
    pub fn f(&self, p: i64) -> f64 {
        if p < 0 {
            return self.f(-p - 1);
        }
        match self.values.get(p as usize) {
            Some(&v) => v,
            None => self.closed_form(p),
        }
    }

    /// `((alpha-1) alpha^p - (beta-1) beta^p) / (alpha - beta)`.
    pub fn closed_form(&self, p: i64) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        ((a - 1.0) * a.powi(p as i32) - (b - 1.0) * b.powi(p as i32)) / (a - b)
    }
}

pub fn f_sequence(z_param: f64, count: usize) -> Result<FSequence> {
    if !(z_param > 0.0 && z_param.is_finite()) {
        return Err(Error::BadParam(format!("Z must be positive, got {z_param}")));
    }
    let root = (z_param * (4.0 + z_param)).sqrt();
    let alpha = 0.5 * (2.0 + z_param + root);
    // 1/alpha avoids cancellation in (2 + Z - root) for large Z
    let beta = 1.0 / alpha;
    let mut values = Vec::with_capacity(count.max(2));
    values.push(1.0);
    values.push(1.0 + z_param);
    while values.len() < count {
        let k = values.len();
        values.push((2.0 + z_param) * values[k - 1] - values[k - 2]);
    }
    Ok(FSequence {
        z_param,
        alpha,
        beta,
        values,
    })
}

/// The family on `N = 2K + 1` qubits: `lambda_k = f_{K-k}`, GHZ coherence `sigma`,
/// normalization `2 (4+Z)^K`.
pub fn family_rho(n_qubits: usize, z_param: f64, sigma: f64) -> Result<SymmetricNQubitState> {
    if n_qubits % 2 == 0 {
        return Err(Error::BadParam(format!(
            "the family needs an odd number of qubits, got {n_qubits}"
        )));
    }
    let k_half = n_qubits / 2;
    if k_half <= 1 {
        return Err(Error::BadParam(format!("the family needs N >= 5, got {n_qubits}")));
    }
    if sigma != 1.0 && sigma != -1.0 {
        return Err(Error::BadParam(format!("sigma must be +1 or -1, got {sigma}")));
    }
    let f = f_sequence(z_param, k_half + 2)?;
    let diag = (0..=n_qubits)
        .map(|k| binomial(n_qubits, k) * f.f(k_half as i64 - k as i64))
        .collect();
    let norm = 2.0 * (4.0 + z_param).powi(k_half as i32);
    SymmetricNQubitState::new(n_qubits, diag, sigma, (0, n_qubits), norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtBlock {
    /// `n = j - i`.
    pub n: i64,
    /// Smallest `i` in the block.
    pub i0: usize,
    pub a: SymMatrix,
    pub d: Vec<f64>,
    pub h: SymMatrix,
}

impl PtBlock {
    pub fn size(&self) -> usize {
        self.d.len()
    }
}

/// Blocks of the partial transpose of the unnormalized operator at cut `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtBlockDecomposition {
    pub m_cut: usize,
    /// `[[lambda_m, sigma], [sigma, lambda_{N-m}]]`.
    pub coherence_block: [[f64; 2]; 2],
    /// `n = -m+1 ..= N-m-1` in increasing order.
    pub blocks: Vec<PtBlock>,
}

impl PtBlockDecomposition {
    /// All eigenvalues of the direct sum, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let [[p, s], [_, q]] = self.coherence_block;
        let mean = 0.5 * (p + q);
        let rad = (0.25 * (p - q).powi(2) + s * s).sqrt();
        let mut out = vec![mean - rad, mean + rad];
        for b in &self.blocks {
            out.extend(sym_eig(&b.a).values.iter().copied());
        }
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn coherence_det(&self) -> f64 {
        let [[p, s], [_, q]] = self.coherence_block;
        p * q - s * s
    }
}

pub fn pt_blocks(state: &SymmetricNQubitState, m_cut: usize) -> Result<PtBlockDecomposition> {
    let nq = state.n_qubits;
    if m_cut > nq {
        return Err(Error::BadCut { m: m_cut, n: nq });
    }
    let (ca, cb) = state.coherence_pair;
    if state.coherence != 0.0 && (ca, cb) != (0, nq) {
        return Err(Error::UnsupportedCoherence(ca, cb));
    }
    let m = m_cut as i64;
    let rest = (nq - m_cut) as i64;
    let mut blocks = Vec::new();
    for n in (-m + 1)..rest {
        let lo = 0.max(-n);
        let hi = m.min(rest - n);
        let idx: Vec<i64> = (lo..=hi).collect();
        let d: Vec<f64> = idx
            .iter()
            .map(|&i| (binomial(m_cut, i as usize) * binomial(nq - m_cut, (i + n) as usize)).sqrt())
            .collect();
        let h = SymMatrix::from_fn(idx.len(), |a, b| state.lambda((idx[a] + idx[b] + n) as usize));
        let a = SymMatrix::from_fn(idx.len(), |x, y| d[x] * h.get(x, y) * d[y]);
        blocks.push(PtBlock {
            n,
            i0: lo as usize,
            a,
            d,
            h,
        });
    }
    Ok(PtBlockDecomposition {
        m_cut,
        coherence_block: [
            [state.lambda(m_cut), state.coherence],
            [state.coherence, state.lambda(nq - m_cut)],
        ],
        blocks,
    })
}

/// Two-column factor of the Hankel core `B_ab = f_{c+a+b}` of a family block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCholesky {
    /// Index offset `c`.
    pub offset: i64,
    /// Rows `(f_{c+a}, sqrt(I_aa)) / sqrt(f_c)`.
    pub l: DMatrix<f64>,
    /// `I_aa = f_c f_{c+2a} - f_{c+a}^2`.
    pub i_diag: Vec<f64>,
    /// `max_ab |(L L^T)_ab - B_ab| / max|B|`.
    pub residual: f64,
}

/// `I_ab = f_c f_{c+a+b} - f_{c+a} f_{c+b}`.
pub fn i_ab(f: &FSequence, c: i64, a: i64, b: i64) -> f64 {
    f.f(c) * f.f(c + a + b) - f.f(c + a) * f.f(c + b)
}

/// Factor for block `n` of cut `m_cut` in the family on `n_qubits = 2K + 1`.
pub fn block_cholesky(f: &FSequence, n_qubits: usize, m_cut: usize, n: i64) -> Result<BlockCholesky> {
    if m_cut > n_qubits {
        return Err(Error::BadCut { m: m_cut, n: n_qubits });
    }
    let m = m_cut as i64;
    let rest = (n_qubits - m_cut) as i64;
    if n <= -m || n >= rest {
        return Err(Error::BadParam(format!("block {n} is outside {}..={}", -m + 1, rest - 1)));
    }
    let k_half = (n_qubits / 2) as i64;
    let lo = 0.max(-n);
    let size = (m.min(rest - n) - lo + 1) as usize;
    // lambda_{i+i'+n} = f_{K-i-i'-n} = f_{i+i'+n-K-1}
    let c = 2 * lo + n - k_half - 1;
    let fc = f.f(c);
    let i_diag: Vec<f64> = (0..size as i64).map(|a| i_ab(f, c, a, a)).collect();
    let l = DMatrix::from_fn(size, 2, |a, col| {
        if col == 0 {
            f.f(c + a as i64) / fc.sqrt()
        } else {
            i_diag[a].max(0.0).sqrt() / fc.sqrt()
        }
    });
    let rec = &l * l.transpose();
    let mut err: f64 = 0.0;
    let mut top: f64 = 0.0;
    for a in 0..size {
        for b in 0..size {
            let target = f.f(c + (a + b) as i64);
            err = err.max((rec[(a, b)] - target).abs());
            top = top.max(target.abs());
        }
    }
    Ok(BlockCholesky {
        offset: c,
        l,
        i_diag,
        residual: err / top,
    })
}

/// Isometry from the Dicke basis of `N` qubits into `Sym^m (x) Sym^{N-m}`.
fn dicke_embedding(n_qubits: usize, m_cut: usize) -> DMatrix<f64> {
    let da = m_cut + 1;
    let db = n_qubits - m_cut + 1;
    DMatrix::from_fn(da * db, n_qubits + 1, |r, k| {
        let (i, j) = (r / db, r % db);
        if i + j == k {
            (binomial(m_cut, i) * binomial(n_qubits - m_cut, j) / binomial(n_qubits, k)).sqrt()
        } else {
            0.0
        }
    })
}

/// Partial transpose of a Dicke-basis operator at cut `m`, in the symmetric bipartite basis.
pub fn dense_partial_transpose_of(op: &SymMatrix, n_qubits: usize, m_cut: usize) -> Result<SymMatrix> {
    if m_cut > n_qubits {
        return Err(Error::BadCut { m: m_cut, n: n_qubits });
    }
    let v = dicke_embedding(n_qubits, m_cut);
    let bip = &v * op.as_matrix() * v.transpose();
    SymMatrix::from_matrix(partial_transpose_second(&bip, m_cut + 1, n_qubits - m_cut + 1))
}

/// Dense partial transpose of the unnormalized operator.
pub fn dense_partial_transpose(state: &SymmetricNQubitState, m_cut: usize) -> Result<SymMatrix> {
    dense_partial_transpose_of(&state.dicke_matrix_unnormalized(), state.n_qubits, m_cut)
}

fn cut_spectrum(state: &SymmetricNQubitState, m_cut: usize) -> Vec<f64> {
    match pt_blocks(state, m_cut) {
        Ok(b) => b.eigenvalues(),
        Err(_) => {
            let pt = dense_partial_transpose(state, m_cut).expect("cut in range");
            sym_eig(&pt).values.iter().copied().collect()
        }
    }
}

/// Smallest eigenvalue over all partial transposes `m = 1 ..= N/2` of the normalized state.
pub fn min_pt_eigenvalue(state: &SymmetricNQubitState) -> f64 {
    (1..=state.n_qubits / 2)
        .map(|m| cut_spectrum(state, m)[0])
        .fold(f64::INFINITY, f64::min)
        / state.normalization
}

/// PSD check of the state and every partial transpose `m = 1 ..= N/2`.
pub fn is_ppt_all_bipartitions(state: &SymmetricNQubitState, tol: &Tolerance) -> bool {
    if !is_psd(&state.dicke_matrix_unnormalized(), tol) {
        return false;
    }
    (1..=state.n_qubits / 2).all(|m| {
        let ev = cut_spectrum(state, m);
        let norm = ev.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        ev[0] >= -tol.psd_threshold(norm)
    })
}

/// Ranks of `rho` and of `rho^{Gamma_m}` for `m = 1 ..= N/2`.
pub fn ranks_profile(state: &SymmetricNQubitState, tol: &Tolerance) -> Vec<usize> {
    let mut out = vec![numerical_rank(&state.dicke_matrix_unnormalized(), tol)];
    for m in 1..=state.n_qubits / 2 {
        out.push(rank_of_spectrum(&cut_spectrum(state, m), tol));
    }
    out
}

/// Dimension of `{H in E : H^{Gamma_m} K_m = 0 for m = 0 ..= N/2}` with `K_m` the kernel of
/// `rho^{Gamma_m}` and `E` spanned by the Dicke-diagonal units and the symmetrized coherence
/// at the state's coherence pair. Extremal in the PPT set within `E` iff this is 1.
pub fn extremality_dimension(state: &SymmetricNQubitState, tol: &Tolerance) -> usize {
    let nq = state.n_qubits;
    let (a, b) = state.coherence_pair;
    let mut basis: Vec<SymMatrix> = (0..=nq)
        .map(|k| SymMatrix::from_fn(nq + 1, |i, j| if i == k && j == k { 1.0 } else { 0.0 }))
        .collect();
    basis.push(SymMatrix::from_fn(nq + 1, |i, j| if (i, j) == (a, b) { 1.0 } else { 0.0 }));
    nullity_under_kernels(state, &basis, tol)
}

/// Same test over all real symmetric `(N+1) x (N+1)` matrices in the Dicke basis.
pub fn extremality_dimension_full(state: &SymmetricNQubitState, tol: &Tolerance) -> usize {
    let nq = state.n_qubits;
    let mut basis = Vec::new();
    for p in 0..=nq {
        for q in p..=nq {
            basis.push(SymMatrix::from_fn(nq + 1, |i, j| if (i, j) == (p, q) { 1.0 } else { 0.0 }));
        }
    }
    nullity_under_kernels(state, &basis, tol)
}

fn nullity_under_kernels(state: &SymmetricNQubitState, basis: &[SymMatrix], tol: &Tolerance) -> usize {
    let nq = state.n_qubits;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for m in 0..=nq / 2 {
        let pt = dense_partial_transpose(state, m).expect("cut in range");
        let kernel = sym_eig(&pt).kernel(tol.rank_cut);
        if kernel.is_empty() {
            continue;
        }
        let images: Vec<DMatrix<f64>> = basis
            .iter()
            .map(|e| dense_partial_transpose_of(e, nq, m).expect("cut in range").into_matrix())
            .collect();
        let dim = pt.dim();
        for kv in &kernel {
            let cols: Vec<_> = images.iter().map(|h| h * kv).collect();
            for r in 0..dim {
                rows.push(cols.iter().map(|c| c[r]).collect());
            }
        }
    }
    let t = basis.len();
    if rows.is_empty() {
        return t;
    }
    let c = DMatrix::from_fn(rows.len(), t, |r, k| rows[r][k]);
    let sv = c.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return t;
    }
    t - sv.iter().filter(|&&s| s > EXTREMALITY_RTOL * smax).count()
}

/// The printed 4-qubit example, coherence between `|D^1>` and `|D^4>`.
pub fn example_4qubit() -> SymmetricNQubitState {
    let s7 = 7f64.sqrt();
    let diag = vec![7.0 * s7, 12.0 * s7, 12.0 * s7, 12.0 * s7, 7.0 * s7];
    SymmetricNQubitState::new(4, diag, -2.0 * 15f64.sqrt(), (1, 4), 50.0 * s7)
        .expect("constant data is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub ppt: bool,
    pub ranks: Vec<usize>,
    pub extremality: usize,
    /// PPT, extremal in the PPT set and rank above one.
    pub ppt_entangled: bool,
}

pub fn analyze(state: &SymmetricNQubitState, tol: &Tolerance) -> EntanglementReport {
    let ppt = is_ppt_all_bipartitions(state, tol);
    let ranks = ranks_profile(state, tol);
    let extremality = extremality_dimension(state, tol);
    EntanglementReport {
        ppt,
        ppt_entangled: ppt && extremality == 1 && ranks[0] > 1,
        ranks,
        extremality,
    }
}
