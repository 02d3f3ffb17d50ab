//! The automorphism group of the ball and of the truncated Fock space:
//! J-unitary matrices, the point maps they induce on the open unit ball,
//! their unitary form, the images of the creation operators, and the
//! implementing unitary built column by column.

use crate::cmatrix::{c64, matrix_exp, op_norm, random_matrix, CMatrix, CVector, Complex64, C_ONE};
use crate::error::{Error, Result};
use crate::fock::{scalar_combo, Side, TruncatedFock};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Tolerance on the J-unitarity certificate X^H J X = J.
pub const J_TOL: f64 = 1e-10;

/// An (n+1)x(n+1) matrix X with X^H J X = J for J = diag(-1, I_n),
/// partitioned as
///
/// ```text
///   [ x   y  ]     x scalar, y and z rows of length n,
///   [ z^t X' ]     X' an n x n block.
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct JUnitary {
    m: CMatrix,
    n: usize,
}

fn j_matrix(n: usize) -> CMatrix {
    CMatrix::from_fn(n + 1, n + 1, |r, c| {
        if r != c {
            c64(0.0, 0.0)
        } else if r == 0 {
            c64(-1.0, 0.0)
        } else {
            C_ONE
        }
    })
}

impl JUnitary {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() < 2 {
            return Err(Error::SpaceMismatch(format!(
                "J-unitary must be square of size >= 2, found {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows() - 1;
        let j = j_matrix(n);
        let residual = op_norm(&(m.adjoint() * &j * &m - &j));
        if residual > J_TOL {
            return Err(Error::NotUnitary { residual, tol: J_TOL });
        }
        Ok(JUnitary { m, n })
    }

    pub fn identity(n: usize) -> Self {
        JUnitary { m: CMatrix::identity(n + 1, n + 1), n }
    }

    /// J-unitary with phi_X(0) = mu, for mu in the open unit ball.
    pub fn mobius(mu: &[Complex64]) -> Result<Self> {
        let n = mu.len();
        let norm_sq: f64 = mu.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "|mu| = {} is not inside the open unit ball",
                norm_sq.sqrt()
            )));
        }
        if norm_sq == 0.0 {
            return Ok(Self::identity(n));
        }
        let s = 1.0 / (1.0 - norm_sq).sqrt();
        let mut m = CMatrix::zeros(n + 1, n + 1);
        m[(0, 0)] = Complex64::from(s);
        for i in 0..n {
            m[(0, i + 1)] = -Complex64::from(s) * mu[i]; // y = -s mu
            m[(i + 1, 0)] = -Complex64::from(s) * mu[i].conj(); // z = -s conj(mu)
        }
        // X' = I + (s - 1) mu^H mu / |mu|^2
        for r in 0..n {
            for c in 0..n {
                let rank1 = mu[r].conj() * mu[c] / Complex64::from(norm_sq);
                m[(r + 1, c + 1)] = Complex64::from(s - 1.0) * rank1
                    + if r == c { C_ONE } else { c64(0.0, 0.0) };
            }
        }
        Self::new(m)
    }

    /// Automorphism fixing the origin: X = diag(e^{i theta}, W).
    pub fn rotation(theta: f64, w: &CMatrix) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(Error::SpaceMismatch("rotation block must be square".into()));
        }
        let res = crate::cmatrix::unitarity_residual(w);
        if res > 1e-10 {
            return Err(Error::NotUnitary { residual: res, tol: 1e-10 });
        }
        let n = w.nrows();
        let mut m = CMatrix::zeros(n + 1, n + 1);
        m[(0, 0)] = c64(0.0, theta).exp();
        m.view_mut((1, 1), (n, n)).copy_from(w);
        Self::new(m)
    }

    /// Seeded random J-unitary: the exponential of a random J-skew matrix
    /// [[i a, v],[v^H, M]] (a real, M skew-Hermitian), rescaled so that the
    /// induced ball point phi_X(0) stays well inside the ball, and
    /// phase-normalized to x > 0.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha: f64 = {
            use rand_distr::Distribution;
            rand_distr::StandardNormal.sample(&mut rng)
        };
        let v = random_matrix(&mut rng, 1, n);
        let g = random_matrix(&mut rng, n, n);
        let mut skew = CMatrix::zeros(n + 1, n + 1);
        skew[(0, 0)] = c64(0.0, 0.4 * alpha);
        for i in 0..n {
            skew[(0, i + 1)] = v[(0, i)];
            skew[(i + 1, 0)] = v[(0, i)].conj();
        }
        let mm = (&g - g.adjoint()) * c64(0.2, 0.0);
        skew.view_mut((1, 1), (n, n)).copy_from(&mm);

        let mut scale = 0.35;
        for _ in 0..32 {
            let x = Self::new(matrix_exp(&(&skew * Complex64::from(scale))))
                .expect("exp of a J-skew matrix is J-unitary")
                .normalize_phase();
            let origin: f64 = x.phi(&vec![c64(0.0, 0.0); n]).iter().map(|z| z.norm_sqr()).sum();
            if origin.sqrt() <= 0.45 {
                return x;
            }
            scale *= 0.75;
        }
        unreachable!("scale shrinks the image of the origin towards 0");
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn x(&self) -> Complex64 {
        self.m[(0, 0)]
    }

    /// The row y (top right block).
    pub fn y(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self.m[(0, i + 1)]).collect()
    }

    /// The row z (the (2,1) column block is z^t).
    pub fn z(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self.m[(i + 1, 0)]).collect()
    }

    pub fn x_prime(&self) -> CMatrix {
        self.m.view((1, 1), (self.n, self.n)).into_owned()
    }

    pub fn j_residual(&self) -> f64 {
        let j = j_matrix(self.n);
        op_norm(&(self.m.adjoint() * &j * &self.m - &j))
    }

    /// Multiply by the unimodular scalar that makes x real positive. The
    /// scalar unitaries form the kernel of X -> Phi_X, so this fixes the
    /// representative without changing the automorphism.
    pub fn normalize_phase(self) -> Self {
        let x = self.x();
        if x.norm() == 0.0 || (x.im == 0.0 && x.re > 0.0) {
            return self;
        }
        let phase = x.conj() / Complex64::from(x.norm());
        JUnitary { m: self.m * phase, n: self.n }
    }

    /// Group inverse, X^{-1} = J X^H J.
    pub fn inverse(&self) -> Self {
        let j = j_matrix(self.n);
        JUnitary { m: &j * self.m.adjoint() * &j, n: self.n }
    }

    /// Matrix product (the group law).
    pub fn compose(&self, other: &JUnitary) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::AlphabetMismatch(self.n, other.n));
        }
        Self::new(&self.m * &other.m)
    }

    /// The induced automorphism of the open unit ball,
    /// phi_X(lambda) = (x - lambda z^t)^{-1} (lambda X' - y).
    pub fn phi(&self, lambda: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(lambda.len(), self.n);
        let z = self.z();
        let y = self.y();
        let xp = self.x_prime();
        let denom = self.x()
            - lambda
                .iter()
                .zip(z.iter())
                .map(|(l, zi)| *l * *zi)
                .sum::<Complex64>();
        (0..self.n)
            .map(|i| {
                let num = lambda
                    .iter()
                    .enumerate()
                    .map(|(j, l)| *l * xp[(j, i)])
                    .sum::<Complex64>()
                    - y[i];
                num / denom
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct JUnitaryRepr {
    n: usize,
    /// Row-major (re, im) pairs of the (n+1)^2 entries.
    entries: Vec<[f64; 2]>,
}

impl Serialize for JUnitary {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let dim = self.n + 1;
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                let v = self.m[(r, c)];
                entries.push([v.re, v.im]);
            }
        }
        JUnitaryRepr { n: self.n, entries }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for JUnitary {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = JUnitaryRepr::deserialize(deserializer)?;
        let dim = repr.n + 1;
        if repr.entries.len() != dim * dim {
            return Err(serde::de::Error::custom(format!(
                "expected {} entries, found {}",
                dim * dim,
                repr.entries.len()
            )));
        }
        let m = CMatrix::from_fn(dim, dim, |r, c| {
            let [re, im] = repr.entries[r * dim + c];
            c64(re, im)
        });
        JUnitary::new(m).map_err(serde::de::Error::custom)
    }
}

/// The unitary companion Y = [[a, b],[c, d]] of a J-unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryForm {
    m: CMatrix,
    n: usize,
}

impl UnitaryForm {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() < 2 {
            return Err(Error::SpaceMismatch("unitary form must be square".into()));
        }
        let res = crate::cmatrix::unitarity_residual(&m);
        if res > 1e-10 {
            return Err(Error::NotUnitary { residual: res, tol: 1e-10 });
        }
        let n = m.nrows() - 1;
        Ok(UnitaryForm { m, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn a(&self) -> Complex64 {
        self.m[(0, 0)]
    }

    /// Row b (1 x n).
    pub fn b(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self.m[(0, i + 1)]).collect()
    }

    /// Column c (n x 1).
    pub fn c(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self.m[(i + 1, 0)]).collect()
    }

    pub fn d(&self) -> CMatrix {
        self.m.view((1, 1), (self.n, self.n)).into_owned()
    }

    /// The adjoint, again a unitary form (implements the inverse map).
    pub fn adjoint(&self) -> UnitaryForm {
        UnitaryForm { m: self.m.adjoint(), n: self.n }
    }

    /// The point map alpha_Y(lambda) = b + a lambda (I - c lambda)^{-1} d.
    pub fn alpha_point(&self, lambda: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(lambda.len(), n);
        let c = self.c();
        // I - c lambda (n x n), then row lambda (I - c lambda)^{-1}
        let m = CMatrix::from_fn(n, n, |r, col| {
            let id = if r == col { C_ONE } else { c64(0.0, 0.0) };
            id - c[r] * lambda[col]
        });
        let rhs = CVector::from_fn(n, |i, _| lambda[i]);
        // solve m^T s = lambda  <=>  s^T = lambda (I - c lambda)^{-1}
        let s = m
            .transpose()
            .lu()
            .solve(&rhs)
            .expect("I - c lambda is invertible on the open ball");
        let d = self.d();
        let b = self.b();
        (0..n)
            .map(|i| {
                let mut acc = b[i];
                for j in 0..n {
                    acc += self.a() * s[j] * d[(j, i)];
                }
                acc
            })
            .collect()
    }
}

/// Passage X -> Y: a = 1/x, b = -y/x, c = z^t/x, d = X' - z^t y / x.
pub fn unitary_form(x: &JUnitary) -> Result<UnitaryForm> {
    let n = x.n();
    let xv = x.x();
    if xv.norm() == 0.0 {
        return Err(Error::InvalidParameter("x = 0 in J-unitary partition".into()));
    }
    let y = x.y();
    let z = x.z();
    let xp = x.x_prime();
    let mut m = CMatrix::zeros(n + 1, n + 1);
    m[(0, 0)] = C_ONE / xv;
    for i in 0..n {
        m[(0, i + 1)] = -y[i] / xv;
        m[(i + 1, 0)] = z[i] / xv;
    }
    for r in 0..n {
        for c in 0..n {
            m[(r + 1, c + 1)] = xp[(r, c)] - z[r] * y[c] / xv;
        }
    }
    UnitaryForm::new(m)
}

/// Inverse passage, defined when a != 0.
pub fn junitary_form(y: &UnitaryForm) -> Result<JUnitary> {
    let n = y.n();
    let a = y.a();
    if a.norm() == 0.0 {
        return Err(Error::InvalidParameter("a = 0: no J-unitary preimage".into()));
    }
    let b = y.b();
    let c = y.c();
    let d = y.d();
    let mut m = CMatrix::zeros(n + 1, n + 1);
    m[(0, 0)] = C_ONE / a;
    for i in 0..n {
        m[(0, i + 1)] = -b[i] / a;
        m[(i + 1, 0)] = c[i] / a;
    }
    for r in 0..n {
        for cc in 0..n {
            m[(r + 1, cc + 1)] = d[(r, cc)] - c[r] * b[cc] / a;
        }
    }
    JUnitary::new(m)
}

/// Per-automorphism data for fast applications on the truncated space.
struct FockAction {
    x: Complex64,
    y: Vec<Complex64>,
    combo_z: Vec<(usize, CMatrix)>,
    /// combo for L[X' zeta_i] per generator i
    combo_cols: Vec<Vec<(usize, CMatrix)>>,
}

impl FockAction {
    fn new(xj: &JUnitary) -> Self {
        let n = xj.n();
        let xp = xj.x_prime();
        let combo_cols = (0..n)
            .map(|i| {
                let col: Vec<Complex64> = (0..n).map(|j| xp[(j, i)]).collect();
                scalar_combo(&col)
            })
            .collect();
        FockAction {
            x: xj.x(),
            y: xj.y(),
            combo_z: scalar_combo(&xj.z()),
            combo_cols,
        }
    }

    /// Apply the image of the i-th generator (1-based) to a vector:
    /// (x I - L[z])^{-1} (L[X' zeta_i] - y_i I) v, an exact compression.
    fn apply_generator_image(&self, fock: &TruncatedFock, i: usize, v: &CVector) -> CVector {
        let mut w = fock.apply_creation_combo(Side::Left, &self.combo_cols[i - 1], 1, v);
        let yi = self.y[i - 1];
        if yi.norm() != 0.0 {
            w -= v * yi;
        }
        fock.solve_shifted_creation(Side::Left, self.x, &self.combo_z, 1, &w)
    }

    /// (x I - L[z])^{-1} e_0, the image of the vacuum under the unitary.
    fn vacuum_column(&self, fock: &TruncatedFock) -> CVector {
        let mut e0 = CVector::zeros(fock.dim());
        e0[0] = C_ONE;
        fock.solve_shifted_creation(Side::Left, self.x, &self.combo_z, 1, &e0)
    }
}

/// Truncated matrices of the generator images Phi_X(L_i), i = 1..n.
/// Each is the exact compression of the corresponding operator.
pub fn generator_images(xj: &JUnitary, fock: &TruncatedFock) -> Vec<CMatrix> {
    let action = FockAction::new(xj);
    let dim = fock.dim();
    (1..=xj.n())
        .map(|i| {
            let mut m = CMatrix::zeros(dim, dim);
            let mut basis = CVector::zeros(dim);
            for w in 0..dim {
                basis[w] = C_ONE;
                let col = action.apply_generator_image(fock, i, &basis);
                m.set_column(w, &col);
                basis[w] = c64(0.0, 0.0);
            }
            m
        })
        .collect()
}

/// Visit every column U e_w of the implementing unitary in depth-first
/// order over the prepend tree of words. Columns satisfy
/// U e_{iw} = Phi_X(L_i) U e_w with U e_0 = (xI - L[z])^{-1} e_0.
pub fn visit_unitary_columns<F: FnMut(usize, &CVector)>(
    xj: &JUnitary,
    fock: &TruncatedFock,
    mut visit: F,
) {
    let action = FockAction::new(xj);
    let root = action.vacuum_column(fock);
    let n = fock.alphabet();
    // explicit stack of (word index, column); children get pushed with one
    // more letter prepended
    let mut stack: Vec<(usize, CVector)> = vec![(0, root)];
    while let Some((idx, col)) = stack.pop() {
        visit(idx, &col);
        if fock.level_of(idx) < fock.max_level() {
            for i in 1..=n {
                let child = fock.child(Side::Left, i, idx).expect("below top level");
                stack.push((child, action.apply_generator_image(fock, i, &col)));
            }
        }
    }
}

/// Dense matrix of the implementing unitary (exact compression P U P).
pub fn implementing_unitary(xj: &JUnitary, fock: &TruncatedFock) -> CMatrix {
    let dim = fock.dim();
    let mut u = CMatrix::zeros(dim, dim);
    visit_unitary_columns(xj, fock, |idx, col| u.set_column(idx, col));
    u
}

/// Rows of the implementing unitary up to the given level: P_{<=levels} U.
/// Avoids materializing the full square matrix at large truncation.
pub fn implementing_unitary_rows(xj: &JUnitary, fock: &TruncatedFock, levels: usize) -> CMatrix {
    let rows = fock.dim_up_to(levels);
    let mut u = CMatrix::zeros(rows, fock.dim());
    visit_unitary_columns(xj, fock, |idx, col| {
        for r in 0..rows {
            u[(r, idx)] = col[r];
        }
    });
    u
}

/// U * S for a (dim x r) matrix S, accumulated column-by-column from the
/// unitary's columns; never materializes U itself.
pub fn unitary_times(xj: &JUnitary, fock: &TruncatedFock, s: &CMatrix) -> CMatrix {
    assert_eq!(s.nrows(), fock.dim());
    let mut out = CMatrix::zeros(fock.dim(), s.ncols());
    visit_unitary_columns(xj, fock, |idx, col| {
        for j in 0..s.ncols() {
            let w = s[(idx, j)];
            if w.norm() != 0.0 {
                for r in 0..fock.dim() {
                    out[(r, j)] += col[r] * w;
                }
            }
        }
    });
    out
}

/// The generator row of alpha over the Fock space: for each i, the block
/// b_i I + a (I - L[c])^{-1} L[d zeta_i], an exact compression. With the
/// unitary form of X these equal the generator images entrywise.
pub fn alpha_fock_generators(y: &UnitaryForm, fock: &TruncatedFock, side: Side) -> Vec<CMatrix> {
    let n = y.n();
    let dim = fock.dim();
    let combo_c = scalar_combo(&y.c());
    let d = y.d();
    let a = y.a();
    let b = y.b();
    (0..n)
        .map(|i| {
            let col: Vec<Complex64> = (0..n).map(|j| d[(j, i)]).collect();
            let combo_d = scalar_combo(&col);
            let mut m = CMatrix::zeros(dim, dim);
            let mut basis = CVector::zeros(dim);
            for w in 0..dim {
                basis[w] = C_ONE;
                let raised = fock.apply_creation_combo(side, &combo_d, 1, &basis);
                let mut col_out =
                    fock.solve_shifted_creation(side, C_ONE, &combo_c, 1, &raised) * a;
                col_out[w] += b[i];
                m.set_column(w, &col_out);
                basis[w] = c64(0.0, 0.0);
            }
            m
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmatrix::{op_norm, random_unitary, unitarity_residual};

    fn mobius_example() -> JUnitary {
        // (1/0.8) [[1, 0.6],[0.6, 1]]
        JUnitary::mobius(&[c64(-0.6, 0.0)]).unwrap()
    }

    #[test]
    fn mobius_example_matches_spec_matrix() {
        let x = mobius_example();
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[c64(1.25, 0.0), c64(0.75, 0.0), c64(0.75, 0.0), c64(1.25, 0.0)],
        );
        assert!(op_norm(&(x.matrix() - expected)) < 1e-14);
        assert!(x.j_residual() < 1e-14);
    }

    #[test]
    fn random_junitaries_certify() {
        for seed in 0..100 {
            let x = JUnitary::random(2, seed);
            assert!(x.j_residual() < 1e-12, "seed {seed}: {}", x.j_residual());
            assert!(x.x().im.abs() < 1e-14 && x.x().re > 0.0);
            // |x|^2 = 1 + |z|^2
            let z_sq: f64 = x.z().iter().map(|v| v.norm_sqr()).sum();
            assert!((x.x().norm_sqr() - 1.0 - z_sq).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_identity_and_scalar_example() {
        let id = JUnitary::identity(2);
        let lam = vec![c64(0.25, 0.1), c64(-0.3, 0.05)];
        let out = id.phi(&lam);
        for (a, b) in out.iter().zip(lam.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
        let x = mobius_example();
        let at = |l: f64| x.phi(&[c64(l, 0.0)])[0];
        assert!((at(0.0) - c64(-0.6, 0.0)).norm() < 1e-15);
        let l = 0.37;
        let expected = (l - 0.6) / (1.0 - 0.6 * l);
        assert!((at(l) - c64(expected, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn phi_inverse_undoes_phi() {
        let x = JUnitary::random(3, 17);
        let lam = vec![c64(0.2, -0.3), c64(0.1, 0.25), c64(-0.15, 0.05)];
        let fwd = x.phi(&lam);
        let back = x.inverse().phi(&fwd);
        for (a, b) in back.iter().zip(lam.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        let norm: f64 = fwd.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm < 1.0);
    }

    #[test]
    fn phi_is_group_antihomomorphism() {
        let x1 = JUnitary::random(2, 5);
        let x2 = JUnitary::random(2, 6);
        let lam = vec![c64(0.3, 0.1), c64(-0.2, 0.15)];
        let lhs = x2.phi(&x1.phi(&lam));
        let prod = x1.compose(&x2).unwrap();
        let rhs = prod.phi(&lam);
        for (a, b) in lhs.iter().zip(rhs.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn scalar_unitaries_act_trivially() {
        for theta in [0.0, 0.7, 2.1] {
            let phase = c64(0.0, theta).exp();
            let x = JUnitary::new(CMatrix::identity(3, 3) * phase).unwrap();
            let lam = vec![c64(0.4, -0.1), c64(0.0, 0.3)];
            let out = x.phi(&lam);
            for (a, b) in out.iter().zip(lam.iter()) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn unitary_form_examples_and_roundtrip() {
        let id = JUnitary::identity(2);
        let y = unitary_form(&id).unwrap();
        assert!(op_norm(&(y.matrix() - CMatrix::identity(3, 3))) < 1e-15);

        let x = mobius_example();
        let y = unitary_form(&x).unwrap();
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[c64(0.8, 0.0), c64(-0.6, 0.0), c64(0.6, 0.0), c64(0.8, 0.0)],
        );
        assert!(op_norm(&(y.matrix() - expected)) < 1e-14);

        for seed in 0..10 {
            let x = JUnitary::random(2, 100 + seed);
            let back = junitary_form(&unitary_form(&x).unwrap()).unwrap();
            assert!(op_norm(&(back.matrix() - x.matrix())) < 1e-10);
        }
    }

    #[test]
    fn phi_equals_alpha_point() {
        for seed in 0..10 {
            let x = JUnitary::random(2, 400 + seed);
            let y = unitary_form(&x).unwrap();
            let lam = vec![c64(0.31, -0.12), c64(-0.05, 0.22)];
            let lhs = x.phi(&lam);
            let rhs = y.alpha_point(&lam);
            for (a, b) in lhs.iter().zip(rhs.iter()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_automorphism_fixes_creations_and_unitary() {
        let fock = TruncatedFock::new(2, 4);
        let id = JUnitary::identity(2);
        let imgs = generator_images(&id, &fock);
        for (i, img) in imgs.iter().enumerate() {
            let l = fock.creation_matrix(Side::Left, i + 1).unwrap();
            assert_eq!(op_norm(&(img - l)), 0.0);
        }
        let u = implementing_unitary(&id, &fock);
        assert_eq!(op_norm(&(u - CMatrix::identity(fock.dim(), fock.dim()))), 0.0);
    }

    #[test]
    fn vacuum_column_is_geometric_for_scalar_mobius() {
        let fock = TruncatedFock::new(1, 5);
        let x = mobius_example();
        let u = implementing_unitary(&x, &fock);
        // U e_0 = 0.8 (1, 0.6, 0.36, ...)
        for k in 0..=5 {
            let expected = 0.8 * 0.6f64.powi(k as i32);
            assert!((u[(k, 0)] - c64(expected, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn unitary_columns_have_unit_deficit_decay() {
        let fock_small = TruncatedFock::new(1, 6);
        let fock_big = TruncatedFock::new(1, 7);
        let x = mobius_example();
        let u6 = implementing_unitary(&x, &fock_small);
        let u7 = implementing_unitary(&x, &fock_big);
        let d6 = 1.0 - u6.column(0).norm_squared();
        let d7 = 1.0 - u7.column(0).norm_squared();
        let rate = (0.75f64 / 1.25).powi(2);
        assert!((d6 - rate.powi(7)).abs() < 1e-12);
        assert!((d7 / d6 - rate).abs() < 1e-12);
    }

    #[test]
    fn unitary_commutes_with_flip() {
        let fock = TruncatedFock::new(2, 5);
        let x = JUnitary::random(2, 23);
        let u = implementing_unitary(&x, &fock);
        let f = fock.flip_matrix();
        assert!(op_norm(&(&u * &f - &f * &u)) < 1e-12);
        // low-level columns are near-isometric; the top columns carry the
        // truncation deficit, so no global unitarity is expected
        for idx in 0..fock.dim_up_to(2) {
            assert!(u.column(idx).norm() <= 1.0 + 1e-12);
            assert!(1.0 - u.column(idx).norm_squared() < 0.05);
        }
    }

    #[test]
    fn generator_images_match_alpha_route() {
        let fock = TruncatedFock::new(2, 5);
        let x = JUnitary::random(2, 31);
        let imgs = generator_images(&x, &fock);
        let y = unitary_form(&x).unwrap();
        let alphas = alpha_fock_generators(&y, &fock, Side::Left);
        for (img, al) in imgs.iter().zip(alphas.iter()) {
            assert!(op_norm(&(img - al)) < 1e-12);
        }
    }

    #[test]
    fn inverse_images_match_adjoint_alpha_route() {
        let fock = TruncatedFock::new(2, 5);
        let x = JUnitary::random(2, 37);
        let imgs_inv = generator_images(&x.inverse(), &fock);
        let y_star = unitary_form(&x).unwrap().adjoint();
        let alphas = alpha_fock_generators(&y_star, &fock, Side::Left);
        for (img, al) in imgs_inv.iter().zip(alphas.iter()) {
            assert!(op_norm(&(img - al)) < 1e-12);
        }
    }

    #[test]
    fn adjoint_unitary_sends_vacuum_to_eigenvector() {
        let fock = TruncatedFock::new(2, 6);
        let x = JUnitary::random(2, 41);
        let u = implementing_unitary(&x, &fock);
        let mu = x.phi(&[c64(0.0, 0.0), c64(0.0, 0.0)]);
        let nu = fock.nu_lambda(&mu).unwrap();
        let mut e0 = CVector::zeros(fock.dim());
        e0[0] = C_ONE;
        let lhs = u.adjoint() * e0;
        assert!((lhs - nu).norm() < 1e-12);
    }

    #[test]
    fn rows_block_matches_dense() {
        let fock = TruncatedFock::new(2, 4);
        let x = JUnitary::random(2, 55);
        let u = implementing_unitary(&x, &fock);
        let rows = implementing_unitary_rows(&x, &fock, 2);
        let cut = fock.dim_up_to(2);
        assert!(op_norm(&(u.rows(0, cut).into_owned() - rows)) < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = crate::cmatrix::random_matrix(&mut rng, fock.dim(), 3);
        let prod = unitary_times(&x, &fock, &s);
        assert!(op_norm(&(&u * &s - prod)) < 1e-12);
    }

    #[test]
    fn junitary_serde_roundtrip() {
        let x = JUnitary::random(2, 77);
        let json = serde_json::to_string(&x).unwrap();
        let back: JUnitary = serde_json::from_str(&json).unwrap();
        assert!(op_norm(&(back.matrix() - x.matrix())) < 1e-15);
        let w = random_unitary(&mut ChaCha8Rng::seed_from_u64(0), 2);
        let rot = JUnitary::rotation(0.3, &w).unwrap();
        assert!(rot.j_residual() < 1e-12);
    }
}
