//! Block-operator linear algebra: contractivity certificates, defect
//! operators with explicit orthonormal defect bases, and the structure of
//! unitary 2x2 blocks (build and factor).

use crate::cmatrix::{hermitian_sqrt_psd, op_norm, unitarity_residual, CMatrix, Complex64};
use crate::error::{Error, Result};
use crate::redheffer::BlockSystem2x2;

/// Default contraction slack.
pub const CONTRACTION_TOL: f64 = 1e-10;
/// Default relative eigenvalue threshold deciding defect-space membership.
pub const RANK_TOL: f64 = 1e-10;

/// A matrix certified to have largest singular value at most 1 + tol.
#[derive(Debug, Clone)]
pub struct Contraction {
    mat: CMatrix,
    norm: f64,
    tol: f64,
}

impl Contraction {
    pub fn new(mat: CMatrix, tol: f64) -> Result<Self> {
        let norm = op_norm(&mat);
        if norm > 1.0 + tol {
            return Err(Error::NotAContraction { sigma: norm, tol });
        }
        Ok(Contraction { mat, norm, tol })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn adjoint(&self) -> Contraction {
        Contraction {
            mat: self.mat.adjoint(),
            norm: self.norm,
            tol: self.tol,
        }
    }
}

/// Defect operator D = (I - C^H C)^{1/2} together with an orthonormal basis
/// of the defect space (eigenvectors of I - C^H C above `rank_tol`).
#[derive(Debug, Clone)]
pub struct DefectData {
    /// The PSD square root on the full domain.
    pub d: CMatrix,
    /// Orthonormal columns spanning the defect space.
    pub basis: CMatrix,
    /// Eigenvalues of I - C^H C retained in the basis (sorted descending).
    pub eigenvalues: Vec<f64>,
    pub rank_tol: f64,
}

impl DefectData {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// D restricted to defect coordinates: D * basis (full-domain columns).
    pub fn d_basis(&self) -> CMatrix {
        &self.d * &self.basis
    }

    /// Coordinates map: basis^H (rows index the defect space).
    pub fn into_coords(&self) -> CMatrix {
        self.basis.adjoint()
    }

    /// Pseudo-inverse of D restricted to the defect space, as the
    /// full-domain matrix basis * diag(1/sqrt(eig)) * basis^H.
    pub fn d_pinv(&self) -> CMatrix {
        let q = self.rank();
        let dim = self.basis.nrows();
        let mut out = CMatrix::zeros(dim, dim);
        for j in 0..q {
            let inv = Complex64::from(1.0 / self.eigenvalues[j].sqrt());
            let col = self.basis.column(j);
            for r in 0..dim {
                for c in 0..dim {
                    out[(r, c)] += inv * col[r] * col[c].conj();
                }
            }
        }
        out
    }
}

/// Defect data of a contraction via Hermitian eigendecomposition of
/// I - C^H C, with eigenvalues clamped at zero.
pub fn defect(c: &Contraction, rank_tol: f64) -> DefectData {
    let q = c.matrix().ncols();
    let gram = CMatrix::identity(q, q) - c.matrix().adjoint() * c.matrix();
    let (d, vals, vecs) = hermitian_sqrt_psd(&gram);
    let cutoff = rank_tol * vals.first().copied().unwrap_or(0.0).max(1.0);
    let rank = vals.iter().take_while(|&&v| v > cutoff).count();
    DefectData {
        d,
        basis: vecs.columns(0, rank).into_owned(),
        eigenvalues: vals[..rank].to_vec(),
        rank_tol,
    }
}

/// Largest singular value of the row block [T_1 ... T_n].
pub fn row_norm(ops: &[CMatrix]) -> Result<f64> {
    let row = row_block(ops)?;
    Ok(op_norm(&row))
}

/// Stack square matrices of equal size into the row [T_1 ... T_n].
pub fn row_block(ops: &[CMatrix]) -> Result<CMatrix> {
    if ops.is_empty() {
        return Err(Error::InvalidParameter("empty operator tuple".into()));
    }
    let m = ops[0].nrows();
    for t in ops {
        if t.nrows() != m || t.ncols() != m {
            return Err(Error::SpaceMismatch(format!(
                "expected {m}x{m} blocks, found {}x{}",
                t.nrows(),
                t.ncols()
            )));
        }
    }
    let n = ops.len();
    let mut row = CMatrix::zeros(m, n * m);
    for (i, t) in ops.iter().enumerate() {
        row.view_mut((0, i * m), (m, m)).copy_from(t);
    }
    Ok(row)
}

/// The unitary 2x2 block
///
/// ```text
///   [ Z_* D_{A^*}   -Z_* A Z^H ]
///   [     A^H        D_A Z^H   ]
/// ```
///
/// in defect coordinates: A maps G -> F, `z_star` is a square unitary on
/// the coordinates of the defect space of A^*, `z` on those of A. The
/// returned system maps F (+) D_A-coords into D_{A^*}-coords (+) G.
pub fn build_structured_unitary(
    a: &Contraction,
    z_star: &CMatrix,
    z: &CMatrix,
    rank_tol: f64,
) -> Result<BlockSystem2x2> {
    let def_a = defect(a, rank_tol);
    let def_astar = defect(&a.adjoint(), rank_tol);
    let (q, q_star) = (def_a.rank(), def_astar.rank());
    for (m, r, name) in [(z, q, "Z"), (z_star, q_star, "Z_*")] {
        if m.nrows() != r || m.ncols() != r {
            return Err(Error::SpaceMismatch(format!(
                "{name} must be {r}x{r}, found {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let res = unitarity_residual(m);
        if res > 1e-8 {
            return Err(Error::NotUnitary { residual: res, tol: 1e-8 });
        }
    }
    let top_left = z_star * def_astar.into_coords() * &def_astar.d;
    let top_right = -(z_star * def_astar.into_coords() * a.matrix() * &def_a.basis * z.adjoint());
    let bottom_left = a.matrix().adjoint();
    let bottom_right = def_a.d_basis() * z.adjoint();
    BlockSystem2x2::new(top_left, top_right, bottom_left, bottom_right)
}

/// Recover (A, Z, Z_*) from a unitary 2x2 block whose (2,1) entry is A^H
/// and whose (1,1) entry has dense range onto the defect space of A^*.
pub fn factor_structured_unitary(
    j: &BlockSystem2x2,
    tol: f64,
    rank_tol: f64,
) -> Result<(Contraction, CMatrix, CMatrix)> {
    let res = unitarity_residual(&j.as_matrix());
    if res > tol {
        return Err(Error::NotUnitary { residual: res, tol });
    }
    let a = Contraction::new(j.c.adjoint(), tol)?;
    let def_a = defect(&a, rank_tol);
    let def_astar = defect(&a.adjoint(), rank_tol);
    // J11 = Z_* (Q_*^H D_{A*}) => Z_* = J11 D_{A*}^+ Q_*
    let z_star = &j.a * def_astar.d_pinv() * &def_astar.basis;
    // J22 = (D_A Q_A) Z^H  => Z = J22^H Q_A diag(1/sqrt(eig))
    let mut z = j.d.adjoint() * &def_a.basis;
    for jcol in 0..def_a.rank() {
        let scale = Complex64::from(1.0 / def_a.eigenvalues[jcol].sqrt());
        let col = z.column(jcol) * scale;
        z.set_column(jcol, &col);
    }
    // dense-range hypothesis: the recovered maps must come out unitary
    for (m, expected) in [(&z_star, def_astar.rank()), (&z, def_a.rank())] {
        if m.nrows() != expected {
            return Err(Error::RankDeficient { found: m.nrows(), expected });
        }
        let res = unitarity_residual(m);
        if res > 1e-6 {
            return Err(Error::RankDeficient { found: 0, expected });
        }
    }
    Ok((a, z, z_star))
}

/// Intertwining residual || C D_C - D_{C^*} C ||.
pub fn intertwining_residual(c: &Contraction, rank_tol: f64) -> f64 {
    let def_c = defect(c, rank_tol);
    let def_cstar = defect(&c.adjoint(), rank_tol);
    op_norm(&(c.matrix() * &def_c.d - &def_cstar.d * c.matrix()))
}
