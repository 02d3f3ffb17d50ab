//! Row contractions and their two central objects, the Poisson kernel and
//! the characteristic function, each computed along two independent routes
//! (word sums and truncated resolvents) that cross-check one another.
//!
//! Maps into defect spaces are expressed in the orthonormal defect bases
//! of [`crate::linop`], so coisometric rows yield genuinely empty blocks.

use crate::cmatrix::{c64, op_norm, random_matrix, random_unitary, CMatrix, CVector, Complex64, C_ONE, C_ZERO};
use crate::error::{Error, Result};
use crate::fock::{Side, TruncatedFock};
use crate::linop::{defect, row_block, Contraction, DefectData, CONTRACTION_TOL, RANK_TOL};
use crate::redheffer::{redheffer_product, BlockSystem2x2};
use crate::words::{Word, WordPolynomial};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Row norms below 1 - STRICT_MARGIN count as strict.
pub const STRICT_MARGIN: f64 = 1e-8;

/// An n-tuple of m x m matrices whose row block is a contraction, with its
/// defect data precomputed.
#[derive(Debug, Clone)]
pub struct RowContraction {
    ops: Vec<CMatrix>,
    row: CMatrix,
    row_norm: f64,
    tol: f64,
    defect_row: DefectData,
    defect_adj: DefectData,
}

impl RowContraction {
    pub fn new(ops: Vec<CMatrix>, tol: f64, rank_tol: f64) -> Result<Self> {
        let row = row_block(&ops)?;
        let contraction = Contraction::new(row.clone(), tol)?;
        let defect_row = defect(&contraction, rank_tol);
        let defect_adj = defect(&contraction.adjoint(), rank_tol);
        Ok(RowContraction {
            ops,
            row,
            row_norm: contraction.norm(),
            tol,
            defect_row,
            defect_adj,
        })
    }

    pub fn with_defaults(ops: Vec<CMatrix>) -> Result<Self> {
        Self::new(ops, CONTRACTION_TOL, RANK_TOL)
    }

    pub fn zero(n: usize, m: usize) -> Self {
        Self::with_defaults(vec![CMatrix::zeros(m, m); n]).expect("zero row is a contraction")
    }

    pub fn from_scalars(values: &[Complex64]) -> Result<Self> {
        Self::with_defaults(
            values
                .iter()
                .map(|v| CMatrix::from_element(1, 1, *v))
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.ops.len()
    }

    pub fn m(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn op(&self, i: usize) -> &CMatrix {
        &self.ops[i - 1]
    }

    /// The m x nm row block [T_1 ... T_n].
    pub fn row(&self) -> &CMatrix {
        &self.row
    }

    pub fn row_norm(&self) -> f64 {
        self.row_norm
    }

    pub fn is_strict(&self) -> bool {
        self.row_norm < 1.0 - STRICT_MARGIN
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Defect data of the row T : H^n -> H (houses D_T).
    pub fn defect_row(&self) -> &DefectData {
        &self.defect_row
    }

    /// Defect data of the adjoint (houses D_{T*}).
    pub fn defect_adj(&self) -> &DefectData {
        &self.defect_adj
    }

    /// T_w = T_{i_1} ... T_{i_k} (identity for the empty word).
    pub fn word_op(&self, w: &Word) -> Result<CMatrix> {
        if w.alphabet() > self.n() {
            return Err(Error::AlphabetMismatch(w.alphabet(), self.n()));
        }
        let mut out = CMatrix::identity(self.m(), self.m());
        for &l in w.letters() {
            out = out * &self.ops[l as usize - 1];
        }
        Ok(out)
    }

    /// Adjoints T_w^* for every word of length <= max_len, indexed by the
    /// graded-lex word index. Built by the suffix recursion
    /// T_{iv}^* = T_v^* T_i^*.
    pub fn word_adjoints(&self, max_len: usize) -> Vec<CMatrix> {
        let n = self.n();
        let m = self.m();
        let total = crate::words::fock_dim(n, max_len);
        let adjoints: Vec<CMatrix> = self.ops.iter().map(|t| t.adjoint()).collect();
        let mut memo: Vec<CMatrix> = Vec::with_capacity(total);
        memo.push(CMatrix::identity(m, m));
        let mut offsets = vec![0usize];
        let mut off = 0usize;
        let mut pow = 1usize;
        for _ in 0..=max_len {
            offsets.push(off + pow);
            off += pow;
            pow *= n;
        }
        for idx in 1..total {
            // locate level and rank
            let mut level = 0;
            while offsets[level + 1] <= idx {
                level += 1;
            }
            let rank = idx - offsets[level];
            let tail_pow = n.pow(level as u32 - 1);
            let first = rank / tail_pow; // 0-based first letter
            let tail_rank = rank % tail_pow;
            let tail_idx = offsets[level - 1] + tail_rank;
            memo.push(&memo[tail_idx] * &adjoints[first]);
        }
        memo
    }

    /// Max over i < j of || T_i T_j - T_j T_i ||.
    pub fn commutator_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n() {
            for j in (i + 1)..self.n() {
                let comm = &self.ops[i] * &self.ops[j] - &self.ops[j] * &self.ops[i];
                worst = worst.max(op_norm(&comm));
            }
        }
        worst
    }
}

#[derive(Serialize, Deserialize)]
struct RowContractionRepr {
    n: usize,
    m: usize,
    /// One row-major (re, im) list per operator.
    matrices: Vec<Vec<[f64; 2]>>,
}

impl Serialize for RowContraction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let m = self.m();
        let matrices = self
            .ops
            .iter()
            .map(|t| {
                let mut flat = Vec::with_capacity(m * m);
                for r in 0..m {
                    for c in 0..m {
                        flat.push([t[(r, c)].re, t[(r, c)].im]);
                    }
                }
                flat
            })
            .collect();
        RowContractionRepr { n: self.n(), m, matrices }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RowContraction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = RowContractionRepr::deserialize(deserializer)?;
        if repr.matrices.len() != repr.n {
            return Err(serde::de::Error::custom("wrong number of operator blocks"));
        }
        let ops = repr
            .matrices
            .iter()
            .map(|flat| {
                if flat.len() != repr.m * repr.m {
                    return Err(serde::de::Error::custom("wrong operator block size"));
                }
                Ok(CMatrix::from_fn(repr.m, repr.m, |r, c| {
                    let [re, im] = flat[r * repr.m + c];
                    c64(re, im)
                }))
            })
            .collect::<std::result::Result<Vec<_>, D::Error>>()?;
        RowContraction::with_defaults(ops).map_err(serde::de::Error::custom)
    }
}

/// Seeded random strict row contraction with row norm exactly `rho`.
pub fn random_strict(n: usize, m: usize, rho: f64, seed: u64) -> RowContraction {
    assert!(rho < 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<CMatrix> = (0..n).map(|_| random_matrix(&mut rng, m, m)).collect();
    let norm = crate::linop::row_norm(&raw).expect("square blocks");
    let scale = Complex64::from(rho / norm);
    RowContraction::with_defaults(raw.into_iter().map(|t| t * scale).collect())
        .expect("scaled row has norm rho")
}

/// Seeded random commuting strict tuple: a joint unitary diagonalization
/// with eigenvalue rows scaled to row norm `rho`.
pub fn random_commuting(n: usize, m: usize, rho: f64, seed: u64) -> RowContraction {
    assert!(rho < 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_unitary(&mut rng, m);
    let mut eigen_rows: Vec<Vec<Complex64>> = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let g = random_matrix(&mut rng, 1, 1)[(0, 0)];
                    g
                })
                .collect()
        })
        .collect();
    // scale each joint eigenvalue row into the ball of radius rho; the row
    // norm of the tuple is the largest of these euclidean norms
    let mut worst = 0.0f64;
    for row in &eigen_rows {
        worst = worst.max(row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    }
    let scale = Complex64::from(rho / worst);
    for row in &mut eigen_rows {
        for z in row.iter_mut() {
            *z *= scale;
        }
    }
    let ops = (0..n)
        .map(|i| {
            let diag = CMatrix::from_fn(m, m, |r, c| {
                if r == c {
                    eigen_rows[r][i]
                } else {
                    C_ZERO
                }
            });
            &q * diag * q.adjoint()
        })
        .collect();
    RowContraction::with_defaults(ops).expect("scaled tuple is strict")
}

/// Sum of f_w T_w over the (finite) support of the polynomial.
pub fn functional_calculus(p: &WordPolynomial, t: &RowContraction) -> Result<CMatrix> {
    if p.alphabet() > t.n() {
        return Err(Error::AlphabetMismatch(p.alphabet(), t.n()));
    }
    let m = t.m();
    let mut out = CMatrix::zeros(m, m);
    for (w, coeff) in p.terms() {
        out += t.word_op(w)? * *coeff;
    }
    Ok(out)
}

/// Verdict of the depth-capped completely-noncoisometric test.
#[derive(Debug, Clone)]
pub struct CncVerdict {
    pub is_cnc: bool,
    pub checked_depth: usize,
    /// Unit vector h with sum_{|w|=k} ||T_w^* h||^2 = ||h||^2 for k <= depth.
    pub witness: Option<CVector>,
}

/// Search for a joint fixed vector of the level sums Q_k = sum T_w T_w^*.
/// Strict rows short-circuit to c.n.c.
pub fn is_cnc(t: &RowContraction, depth_cap: usize, tol: f64) -> CncVerdict {
    assert!(depth_cap >= 1);
    if t.is_strict() {
        return CncVerdict { is_cnc: true, checked_depth: 0, witness: None };
    }
    let m = t.m();
    let mut q = CMatrix::identity(m, m);
    let mut basis = CMatrix::identity(m, m);
    for depth in 1..=depth_cap {
        // Q_{k+1} = sum_i T_i Q_k T_i^*
        let mut next = CMatrix::zeros(m, m);
        for ti in t.ops() {
            next += ti * &q * ti.adjoint();
        }
        q = next;
        let gap = CMatrix::identity(m, m) - &q;
        // intersect the running kernel with ker(I - Q_k)
        let restricted = basis.adjoint() * &gap * &basis;
        let (vals, vecs) = crate::cmatrix::hermitian_eigen_sorted(&restricted);
        let keep = vals.iter().filter(|&&v| v.abs() <= tol).count();
        if keep == 0 {
            return CncVerdict { is_cnc: true, checked_depth: depth, witness: None };
        }
        let kept = vecs.columns(vecs.ncols() - keep, keep).into_owned();
        basis = &basis * kept;
    }
    let witness = basis.column(0).into_owned();
    CncVerdict {
        is_cnc: false,
        checked_depth: depth_cap,
        witness: Some(witness),
    }
}

/// Coordinate frames shared by the kernel/characteristic constructions.
pub(crate) struct DefectFrames {
    /// Q_*^H D_{T*} : H -> defect coordinates of T^* (q_* x m).
    pub dstar_row: CMatrix,
    /// D_T Q_T : defect coordinates of T -> H^n (nm x q).
    pub d_cols: CMatrix,
    /// Compression of the row to the defect frames (q_* x q).
    pub t_tilde: CMatrix,
    pub q: usize,
    pub q_star: usize,
}

impl DefectFrames {
    pub fn new(t: &RowContraction) -> Self {
        let dstar_row = t.defect_adj().basis.adjoint() * &t.defect_adj().d;
        let d_cols = &t.defect_row().d * &t.defect_row().basis;
        let t_tilde = t.defect_adj().basis.adjoint() * t.row() * &t.defect_row().basis;
        DefectFrames {
            dstar_row,
            d_cols,
            t_tilde,
            q: t.defect_row().rank(),
            q_star: t.defect_adj().rank(),
        }
    }

    /// Block i (m rows) of D_T Q_T.
    pub fn e_block(&self, i: usize, m: usize) -> CMatrix {
        self.d_cols.view(((i - 1) * m, 0), (m, self.q)).into_owned()
    }
}

fn require_radius(t: &RowContraction, r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidParameter(format!("radius r = {r} outside (0, 1]")));
    }
    if r == 1.0 && !t.is_strict() {
        return Err(Error::IllConditioned(format!(
            "r = 1 requires a strict row contraction (row norm {})",
            t.row_norm()
        )));
    }
    Ok(())
}

/// Poisson kernel by the word sum: the e_w coefficient block is
/// r^{|w|} Q_*^H D_{T*} T_w^*. Maps H into Fock tensor defect coordinates.
pub fn poisson_kernel(t: &RowContraction, r: f64, fock: &TruncatedFock) -> Result<CMatrix> {
    require_radius(t, r)?;
    let frames = DefectFrames::new(t);
    let m = t.m();
    let adjoints = t.word_adjoints(fock.max_level());
    let mut k = CMatrix::zeros(fock.dim() * frames.q_star, m);
    for idx in 0..fock.dim() {
        let scale = Complex64::from(r.powi(fock.level_of(idx) as i32));
        let block = &frames.dstar_row * &adjoints[idx] * scale;
        k.view_mut((idx * frames.q_star, 0), (frames.q_star, m))
            .copy_from(&block);
    }
    Ok(k)
}

/// Poisson kernel by the resolvent route:
/// (I tensor D_{T*}) (I - sum r R_i tensor T_i^*)^{-1} (e_0 tensor I_H).
pub fn poisson_kernel_resolvent(t: &RowContraction, r: f64, fock: &TruncatedFock) -> Result<CMatrix> {
    require_radius(t, r)?;
    let frames = DefectFrames::new(t);
    let m = t.m();
    let combo: Vec<(usize, CMatrix)> = (1..=t.n())
        .map(|i| (i, t.op(i).adjoint() * Complex64::from(r)))
        .collect();
    let mut k = CMatrix::zeros(fock.dim() * frames.q_star, m);
    for h in 0..m {
        let mut rhs = CVector::zeros(fock.dim() * m);
        rhs[h] = C_ONE;
        let solved = fock.solve_shifted_creation(Side::Right, C_ONE, &combo, m, &rhs);
        for idx in 0..fock.dim() {
            for b in 0..frames.q_star {
                let mut acc = C_ZERO;
                for s in 0..m {
                    acc += frames.dstar_row[(b, s)] * solved[idx * m + s];
                }
                k[(idx * frames.q_star + b, h)] = acc;
            }
        }
    }
    Ok(k)
}

/// A dense operator between truncated Fock spaces tensored with
/// coefficient spaces, tagged with its dimensions.
#[derive(Debug, Clone)]
pub struct MultianalyticMatrix {
    pub mat: CMatrix,
    pub e_dim: usize,
    pub e_star_dim: usize,
    pub n: usize,
    pub max_level: usize,
}

/// A multianalytic operator stored through its word coefficients: the
/// block of rows e_{u omega} in column block e_u is `coeff(omega)`,
/// independent of u and of the truncation level (exact compression).
#[derive(Debug, Clone)]
pub struct MaCoefficients {
    n: usize,
    max_len: usize,
    in_dim: usize,
    out_dim: usize,
    /// indexed by the graded-lex index of the appended word
    coeffs: Vec<CMatrix>,
    level_offsets: Vec<usize>,
}

impl MaCoefficients {
    pub fn new(n: usize, max_len: usize, in_dim: usize, out_dim: usize, coeffs: Vec<CMatrix>) -> Self {
        assert_eq!(coeffs.len(), crate::words::fock_dim(n, max_len));
        let mut level_offsets = vec![0usize];
        let mut off = 0usize;
        let mut pow = 1usize;
        for _ in 0..=max_len {
            off += pow;
            level_offsets.push(off);
            pow *= n;
        }
        MaCoefficients { n, max_len, in_dim, out_dim, coeffs, level_offsets }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn coeff(&self, idx: usize) -> &CMatrix {
        &self.coeffs[idx]
    }

    /// Rescale coefficients to radius r (multiplies by r^{|omega|}).
    pub fn with_radius(&self, r: f64) -> Self {
        let mut out = self.clone();
        for len in 0..=self.max_len {
            let scale = Complex64::from(r.powi(len as i32));
            for idx in self.level_offsets[len]..self.level_offsets[len + 1] {
                out.coeffs[idx] = &self.coeffs[idx] * scale;
            }
        }
        out
    }

    /// Apply to a vector on Fock tensor E (Fock index major).
    pub fn apply(&self, fock: &TruncatedFock, x: &CVector) -> CVector {
        self.apply_block(fock, fock.max_level(), fock.max_level(), x)
    }

    /// Apply with rows and columns restricted to the given levels.
    pub fn apply_block(
        &self,
        fock: &TruncatedFock,
        col_levels: usize,
        row_levels: usize,
        x: &CVector,
    ) -> CVector {
        let (q, qs) = (self.in_dim, self.out_dim);
        let col_dim = fock.dim_up_to(col_levels);
        let row_dim = fock.dim_up_to(row_levels);
        assert_eq!(x.len(), col_dim * q);
        let n = self.n;
        let offsets = fock.level_offsets();
        let mut out = CVector::zeros(row_dim * qs);
        for u in 0..col_dim {
            let ku = fock.level_of(u);
            let rank_u = u - offsets[ku];
            // skip zero input blocks quickly
            let mut live = false;
            for a in 0..q {
                if x[u * q + a].norm_sqr() != 0.0 {
                    live = true;
                    break;
                }
            }
            if !live {
                continue;
            }
            let max_app = row_levels.saturating_sub(ku).min(self.max_len);
            let mut pow = 1usize;
            for len in 0..=max_app {
                if ku + len > row_levels {
                    break;
                }
                let base_target = offsets[ku + len] + rank_u * pow;
                let base_coeff = self.level_offsets[len];
                for rank_o in 0..pow {
                    let coeff = &self.coeffs[base_coeff + rank_o];
                    let target = base_target + rank_o;
                    for b in 0..qs {
                        let mut acc = C_ZERO;
                        for a in 0..q {
                            acc += coeff[(b, a)] * x[u * q + a];
                        }
                        out[target * qs + b] += acc;
                    }
                }
                pow *= n;
            }
        }
        out
    }

    /// Adjoint apply with the same level restrictions (input on rows).
    pub fn apply_adjoint_block(
        &self,
        fock: &TruncatedFock,
        col_levels: usize,
        row_levels: usize,
        x: &CVector,
    ) -> CVector {
        let (q, qs) = (self.in_dim, self.out_dim);
        let col_dim = fock.dim_up_to(col_levels);
        let row_dim = fock.dim_up_to(row_levels);
        assert_eq!(x.len(), row_dim * qs);
        let n = self.n;
        let offsets = fock.level_offsets();
        let mut out = CVector::zeros(col_dim * q);
        for u in 0..col_dim {
            let ku = fock.level_of(u);
            let rank_u = u - offsets[ku];
            let max_app = row_levels.saturating_sub(ku).min(self.max_len);
            let mut pow = 1usize;
            for len in 0..=max_app {
                let base_target = offsets[ku + len] + rank_u * pow;
                let base_coeff = self.level_offsets[len];
                for rank_o in 0..pow {
                    let coeff = &self.coeffs[base_coeff + rank_o];
                    let target = base_target + rank_o;
                    for a in 0..q {
                        let mut acc = C_ZERO;
                        for b in 0..qs {
                            acc += coeff[(b, a)].conj() * x[target * qs + b];
                        }
                        out[u * q + a] += acc;
                    }
                }
                pow *= n;
            }
        }
        out
    }

    /// Dense matrix on the truncated space.
    pub fn to_dense(&self, fock: &TruncatedFock) -> MultianalyticMatrix {
        let mat = self.compressed(fock, fock.max_level());
        MultianalyticMatrix {
            mat,
            e_dim: self.in_dim,
            e_star_dim: self.out_dim,
            n: self.n,
            max_level: fock.max_level(),
        }
    }

    /// Dense block with rows and columns restricted to the given levels.
    pub fn compressed(&self, fock: &TruncatedFock, levels: usize) -> CMatrix {
        let (q, qs) = (self.in_dim, self.out_dim);
        let dim_b = fock.dim_up_to(levels);
        let mut mat = CMatrix::zeros(dim_b * qs, dim_b * q);
        let n = self.n;
        let offsets = fock.level_offsets();
        for u in 0..dim_b {
            let ku = fock.level_of(u);
            let rank_u = u - offsets[ku];
            let max_app = levels.saturating_sub(ku).min(self.max_len);
            let mut pow = 1usize;
            for len in 0..=max_app {
                let base_target = offsets[ku + len] + rank_u * pow;
                let base_coeff = self.level_offsets[len];
                for rank_o in 0..pow {
                    let coeff = &self.coeffs[base_coeff + rank_o];
                    let target = base_target + rank_o;
                    for b in 0..qs {
                        for a in 0..q {
                            mat[(target * qs + b, u * q + a)] = coeff[(b, a)];
                        }
                    }
                }
                pow *= n;
            }
        }
        mat
    }
}

/// Characteristic function by the resolvent route, as a dense matrix from
/// Fock tensor D_T to Fock tensor D_{T*} in defect coordinates:
/// -I (x) T + (I (x) D_{T*}) (I - sum r R_i (x) T_i^*)^{-1} [r R (x) I] (I (x) D_T).
pub fn char_function(t: &RowContraction, r: f64, fock: &TruncatedFock) -> Result<MultianalyticMatrix> {
    require_radius(t, r)?;
    let frames = DefectFrames::new(t);
    let (m, n) = (t.m(), t.n());
    let dim = fock.dim();
    let combo: Vec<(usize, CMatrix)> = (1..=n)
        .map(|i| (i, t.op(i).adjoint() * Complex64::from(r)))
        .collect();
    let mut mat = CMatrix::zeros(dim * frames.q_star, dim * frames.q);
    for u in 0..dim {
        for a in 0..frames.q {
            // [r R (x) I] (e_u (x) D_T Q_T e_a): sum_i r e_{ui} (x) block_i
            let mut rhs = CVector::zeros(dim * m);
            if fock.level_of(u) < fock.max_level() {
                for i in 1..=n {
                    let c = fock.child(Side::Right, i, u).expect("below top level");
                    for s in 0..m {
                        rhs[c * m + s] = frames.d_cols[((i - 1) * m + s, a)] * Complex64::from(r);
                    }
                }
            }
            let solved = fock.solve_shifted_creation(Side::Right, C_ONE, &combo, m, &rhs);
            let col = u * frames.q + a;
            for idx in 0..dim {
                for b in 0..frames.q_star {
                    let mut acc = C_ZERO;
                    for s in 0..m {
                        acc += frames.dstar_row[(b, s)] * solved[idx * m + s];
                    }
                    mat[(idx * frames.q_star + b, col)] = acc;
                }
            }
            // the -I (x) T term lands on the level-preserving diagonal
            for b in 0..frames.q_star {
                mat[(u * frames.q_star + b, col)] -= frames.t_tilde[(b, a)];
            }
        }
    }
    Ok(MultianalyticMatrix {
        mat,
        e_dim: frames.q,
        e_star_dim: frames.q_star,
        n,
        max_level: fock.max_level(),
    })
}

/// Characteristic function by the word route: coefficient of the appended
/// word omega = i v is r^{|omega|} Q_*^H D_{T*} T_v^* E_i, and the empty
/// coefficient is the compressed row -T.
pub fn char_function_coefficients(
    t: &RowContraction,
    r: f64,
    max_len: usize,
) -> Result<MaCoefficients> {
    require_radius(t, r)?;
    let frames = DefectFrames::new(t);
    let (m, n) = (t.m(), t.n());
    let adjoints = t.word_adjoints(max_len.saturating_sub(1));
    let e_blocks: Vec<CMatrix> = (1..=n).map(|i| frames.e_block(i, m)).collect();
    let total = crate::words::fock_dim(n, max_len);
    let mut coeffs = Vec::with_capacity(total);
    coeffs.push(-frames.t_tilde.clone());
    // walk words by level: omega = first letter i, tail v
    let mut offsets = vec![0usize, 1];
    let mut pow = 1usize;
    let mut off = 1usize;
    for _ in 1..=max_len {
        pow *= n;
        off += pow;
        offsets.push(off);
    }
    for idx in 1..total {
        let mut level = 0;
        while offsets[level + 1] <= idx {
            level += 1;
        }
        let rank = idx - offsets[level];
        let tail_pow = n.pow(level as u32 - 1);
        let first = rank / tail_pow;
        let tail_rank = rank % tail_pow;
        let tail_idx = offsets[level - 1] + tail_rank;
        let scale = Complex64::from(r.powi(level as i32));
        let block = &frames.dstar_row * &adjoints[tail_idx] * &e_blocks[first] * scale;
        coeffs.push(block);
    }
    Ok(MaCoefficients::new(n, max_len, frames.q, frames.q_star, coeffs))
}

/// The Redheffer realization: the structured unitary system of the row
/// and the creation-row system whose product reproduces
/// (K_{T,r}, Theta_T(rR)) in its first row.
pub fn redheffer_realization(
    t: &RowContraction,
    r: f64,
    fock: &TruncatedFock,
) -> Result<(BlockSystem2x2, BlockSystem2x2, BlockSystem2x2)> {
    require_radius(t, r)?;
    let frames = DefectFrames::new(t);
    let (m, n) = (t.m(), t.n());
    let dim = fock.dim();
    let eye = CMatrix::identity(dim, dim);
    let l_t = BlockSystem2x2::new(
        eye.kronecker(&frames.dstar_row),
        -eye.kronecker(&frames.t_tilde),
        eye.kronecker(&t.row().adjoint()),
        eye.kronecker(&frames.d_cols),
    )?;
    // L_r = [[iota (x) I, r R (x) I], [0, 0]] with zero-dimensional Z_1
    let mut a1 = CMatrix::zeros(dim * m, m);
    for h in 0..m {
        a1[(h, h)] = C_ONE;
    }
    let mut b1 = CMatrix::zeros(dim * m, dim * n * m);
    for u in 0..dim {
        if fock.level_of(u) == fock.max_level() {
            continue;
        }
        for i in 1..=n {
            let c = fock.child(Side::Right, i, u).expect("below top level");
            for h in 0..m {
                b1[(c * m + h, u * n * m + (i - 1) * m + h)] = Complex64::from(r);
            }
        }
    }
    let l_r = BlockSystem2x2::new(a1, b1, CMatrix::zeros(0, m), CMatrix::zeros(0, dim * n * m))?;
    let product = redheffer_product(&l_t, &l_r)?;
    Ok((l_t, l_r, product))
}

/// Fourier coefficients m_w of a dense multianalytic matrix, extracted
/// from the vacuum column block with the reversal convention.
pub fn fourier_coefficients(
    mm: &MultianalyticMatrix,
    fock: &TruncatedFock,
) -> BTreeMap<Word, CMatrix> {
    let (q, qs) = (mm.e_dim, mm.e_star_dim);
    let mut out = BTreeMap::new();
    for w_idx in 0..fock.dim() {
        let w = fock.word(w_idx);
        let rev_idx = fock.flip_index(w_idx);
        let block = mm
            .mat
            .view((rev_idx * qs, 0), (qs, q))
            .into_owned();
        out.insert(w.clone(), block);
    }
    out
}

/// Serialize a Fourier coefficient map keyed by word strings.
pub fn fourier_to_json(coeffs: &BTreeMap<Word, CMatrix>) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (w, block) in coeffs {
        let mut flat = Vec::with_capacity(block.nrows() * block.ncols());
        for r in 0..block.nrows() {
            for c in 0..block.ncols() {
                flat.push(serde_json::json!([block[(r, c)].re, block[(r, c)].im]));
            }
        }
        map.insert(
            w.to_string(),
            serde_json::json!({
                "rows": block.nrows(),
                "cols": block.ncols(),
                "entries": flat,
            }),
        );
    }
    serde_json::Value::Object(map)
}

/// Max over generators of the intertwining residual
/// || [M (L_i (x) I) - (L_i (x) I) M] |_{levels <= N-1} ||.
pub fn is_multianalytic(mm: &MultianalyticMatrix, fock: &TruncatedFock) -> f64 {
    let (q, qs) = (mm.e_dim, mm.e_star_dim);
    let col_cut = fock.dim_up_to(fock.max_level().saturating_sub(1)) * q;
    let mut worst = 0.0f64;
    for i in 1..=fock.alphabet() {
        let l = fock.creation_matrix(Side::Left, i).expect("valid generator");
        let lhs = &mm.mat * l.kronecker(&CMatrix::identity(q, q));
        let rhs = l.kronecker(&CMatrix::identity(qs, qs)) * &mm.mat;
        let diff = (lhs - rhs).columns(0, col_cut).into_owned();
        worst = worst.max(op_norm(&diff));
    }
    worst
}
