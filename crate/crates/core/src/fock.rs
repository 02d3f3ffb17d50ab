//! Truncated full Fock space: basis bookkeeping, creation operators, the
//! flip, the vacuum embedding and the joint eigenvectors of the adjoint
//! creation operators.
//!
//! Truncation convention: the top level maps to 0 under creation, so every
//! matrix built here is the literal compression P_N (operator) P_N. For
//! products of degree-nondecreasing factors those compressions are exact,
//! which is the correctness backbone of the higher modules.

#[cfg(test)]
use crate::cmatrix::c64;
use crate::cmatrix::{CMatrix, CVector, Complex64, C_ONE, C_ZERO};
use crate::error::{Error, Result};
use crate::words::{self, Word};

/// Which side a creation operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Tensor with the generator on the left: e_w -> e_{iw}.
    Left,
    /// Tensor with the generator on the right: e_w -> e_{wi}.
    Right,
}

/// Basis-indexed model of the Fock space truncated at word length `N`.
#[derive(Debug, Clone)]
pub struct TruncatedFock {
    n: usize,
    max_level: usize,
    dim: usize,
    level_offsets: Vec<usize>,
    level_of: Vec<usize>,
    words: Vec<Word>,
    /// left_child[i-1][w] = index of (i)w, or usize::MAX past the top level
    left_child: Vec<Vec<usize>>,
    /// right_child[i-1][w] = index of w(i)
    right_child: Vec<Vec<usize>>,
    /// flip_perm[w] = index of the reversed word
    flip_perm: Vec<usize>,
}

pub const NO_CHILD: usize = usize::MAX;

impl TruncatedFock {
    pub fn new(n: usize, max_level: usize) -> Self {
        assert!(n >= 1, "alphabet size must be at least 1");
        let dim = words::fock_dim(n, max_level);
        let mut level_offsets = Vec::with_capacity(max_level + 2);
        let mut off = 0usize;
        for len in 0..=max_level {
            level_offsets.push(off);
            off += n.pow(len as u32);
        }
        level_offsets.push(off);
        debug_assert_eq!(off, dim);

        let all = words::enumerate_words(n, max_level);
        let mut level_of = vec![0usize; dim];
        for (idx, w) in all.iter().enumerate() {
            level_of[idx] = w.len();
        }

        let mut left_child = vec![vec![NO_CHILD; dim]; n];
        let mut right_child = vec![vec![NO_CHILD; dim]; n];
        for (idx, w) in all.iter().enumerate() {
            let k = w.len();
            if k == max_level {
                continue;
            }
            let rank = w.lex_rank();
            let level_size = n.pow(k as u32);
            let base = level_offsets[k + 1];
            for i in 0..n {
                // prepend: rank(iw) = i * n^k + rank(w)
                left_child[i][idx] = base + i * level_size + rank;
                // append: rank(wi) = rank(w) * n + i
                right_child[i][idx] = base + rank * n + i;
            }
        }

        let mut flip_perm = vec![0usize; dim];
        for (idx, w) in all.iter().enumerate() {
            flip_perm[idx] = level_offsets[w.len()] + w.reverse().lex_rank();
        }

        TruncatedFock {
            n,
            max_level,
            dim,
            level_offsets,
            level_of,
            words: all,
            left_child,
            right_child,
            flip_perm,
        }
    }

    pub fn alphabet(&self) -> usize {
        self.n
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level_offsets(&self) -> &[usize] {
        &self.level_offsets
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn word(&self, idx: usize) -> &Word {
        &self.words[idx]
    }

    pub fn level_of(&self, idx: usize) -> usize {
        self.level_of[idx]
    }

    /// Basis indices of level `k`.
    pub fn level_range(&self, k: usize) -> std::ops::Range<usize> {
        self.level_offsets[k]..self.level_offsets[k + 1]
    }

    /// Number of basis words of level `<= k`.
    pub fn dim_up_to(&self, k: usize) -> usize {
        self.level_offsets[(k + 1).min(self.max_level + 1)]
    }

    pub fn index_of(&self, w: &Word) -> Result<usize> {
        if w.alphabet() != self.n {
            return Err(Error::AlphabetMismatch(w.alphabet(), self.n));
        }
        words::index_of(w, self.max_level)
    }

    /// Index of `iw` (left) or `wi` (right), or None past the top level.
    pub fn child(&self, side: Side, i: usize, idx: usize) -> Option<usize> {
        debug_assert!((1..=self.n).contains(&i));
        let table = match side {
            Side::Left => &self.left_child[i - 1],
            Side::Right => &self.right_child[i - 1],
        };
        match table[idx] {
            NO_CHILD => None,
            c => Some(c),
        }
    }

    /// Compressed creation operator P_N L_i P_N (or P_N R_i P_N).
    pub fn creation_matrix(&self, side: Side, i: usize) -> Result<CMatrix> {
        if i == 0 || i > self.n {
            return Err(Error::InvalidParameter(format!(
                "generator index {i} outside 1..={}",
                self.n
            )));
        }
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for w in 0..self.dim {
            if let Some(c) = self.child(side, i, w) {
                m[(c, w)] = C_ONE;
            }
        }
        Ok(m)
    }

    /// The involutive level-preserving permutation e_w -> e_{reverse(w)}.
    pub fn flip_matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for w in 0..self.dim {
            m[(self.flip_perm[w], w)] = C_ONE;
        }
        m
    }

    pub fn flip_index(&self, idx: usize) -> usize {
        self.flip_perm[idx]
    }

    /// The inclusion of the scalars: the column vector e_0.
    pub fn vacuum_embedding(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, 1);
        m[(0, 0)] = C_ONE;
        m
    }

    /// Orthogonal projection onto levels `<= k` (as a diagonal 0/1 matrix).
    pub fn projection_up_to(&self, k: usize) -> CMatrix {
        let cut = self.dim_up_to(k);
        CMatrix::from_fn(self.dim, self.dim, |r, c| {
            if r == c && r < cut {
                C_ONE
            } else {
                C_ZERO
            }
        })
    }

    /// Joint eigenvector of the adjoint creation operators at a point of
    /// the open unit ball: (1 - |lambda|^2)^{1/2} sum_w conj(lambda_w) e_w.
    pub fn nu_lambda(&self, lambda: &[Complex64]) -> Result<CVector> {
        if lambda.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "point has {} coordinates, alphabet is {}",
                lambda.len(),
                self.n
            )));
        }
        let norm_sq: f64 = lambda.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "|lambda| = {} is not inside the open unit ball",
                norm_sq.sqrt()
            )));
        }
        let scale = Complex64::from((1.0 - norm_sq).sqrt());
        // conj(lambda_{iw}) = conj(lambda_i) * conj(lambda_w), filled by
        // walking the prepend tree from the vacuum
        let mut v = CVector::zeros(self.dim);
        v[0] = C_ONE;
        for w in 0..self.dim {
            if self.level_of[w] == self.max_level {
                break;
            }
            for i in 1..=self.n {
                let c = self.left_child[i - 1][w];
                v[c] = lambda[i - 1].conj() * v[w];
            }
        }
        Ok(v * scale)
    }

    /// Scalar lambda_w = product of the coordinates along the word.
    pub fn lambda_word(lambda: &[Complex64], w: &Word) -> Complex64 {
        w.letters()
            .iter()
            .fold(C_ONE, |acc, &l| acc * lambda[l as usize - 1])
    }

    /// Apply a creation combination sum_i coeffs[i] * Create_i tensor M_i to
    /// a vector on Fock tensor C^d (Fock index major). Entries above the
    /// top level are dropped, matching the compression convention.
    pub fn apply_creation_combo(
        &self,
        side: Side,
        coeffs: &[(usize, CMatrix)],
        d: usize,
        x: &CVector,
    ) -> CVector {
        debug_assert_eq!(x.len(), self.dim * d);
        let mut out = CVector::zeros(self.dim * d);
        for &(i, ref m) in coeffs {
            let table = match side {
                Side::Left => &self.left_child[i - 1],
                Side::Right => &self.right_child[i - 1],
            };
            for w in 0..self.dim {
                let c = table[w];
                if c == NO_CHILD {
                    continue;
                }
                for r in 0..d {
                    let mut acc = C_ZERO;
                    for s in 0..d {
                        acc += m[(r, s)] * x[w * d + s];
                    }
                    out[c * d + r] += acc;
                }
            }
        }
        out
    }

    /// Solve (x I - sum_i Create_i tensor M_i) u = rhs by forward
    /// substitution over levels. The creation part strictly raises the
    /// level, so the system is block triangular and the solve is exact.
    pub fn solve_shifted_creation(
        &self,
        side: Side,
        x: Complex64,
        coeffs: &[(usize, CMatrix)],
        d: usize,
        rhs: &CVector,
    ) -> CVector {
        debug_assert_eq!(rhs.len(), self.dim * d);
        assert!(x.norm() > 0.0, "scalar part of the resolvent must be nonzero");
        let inv_x = C_ONE / x;
        let mut u = CVector::zeros(self.dim * d);
        for k in 0..=self.max_level {
            let range = self.level_range(k);
            for w in range.clone() {
                for r in 0..d {
                    u[w * d + r] = rhs[w * d + r];
                }
            }
            if k > 0 {
                // add (sum_i Create_i tensor M_i) u restricted to level k,
                // which only reads the already-final level k-1 block
                for &(i, ref m) in coeffs {
                    let table = match side {
                        Side::Left => &self.left_child[i - 1],
                        Side::Right => &self.right_child[i - 1],
                    };
                    for w in self.level_range(k - 1) {
                        let c = table[w];
                        debug_assert_ne!(c, NO_CHILD);
                        for r in 0..d {
                            let mut acc = C_ZERO;
                            for s in 0..d {
                                acc += m[(r, s)] * u[w * d + s];
                            }
                            u[c * d + r] += acc;
                        }
                    }
                }
            }
            for w in range {
                for r in 0..d {
                    u[w * d + r] *= inv_x;
                }
            }
        }
        u
    }
}

/// Total dimension of the truncation: sum of n^k for k <= max_level.
pub fn fock_dim(n: usize, max_level: usize) -> usize {
    words::fock_dim(n, max_level)
}

/// Scalar creation combination L[zeta] = sum_i zeta_i L_i applied as a
/// coefficient list for the solver above (d = 1 case uses 1x1 blocks).
pub fn scalar_combo(zeta: &[Complex64]) -> Vec<(usize, CMatrix)> {
    zeta.iter()
        .enumerate()
        .filter(|(_, z)| z.norm() != 0.0)
        .map(|(i, z)| (i + 1, CMatrix::from_element(1, 1, *z)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmatrix::op_norm;

    #[test]
    fn dims() {
        assert_eq!(fock_dim(2, 2), 7);
        assert_eq!(fock_dim(1, 5), 6);
        assert_eq!(fock_dim(3, 2), 13);
    }

    #[test]
    fn left_creation_is_lower_shift_for_n1() {
        let f = TruncatedFock::new(1, 2);
        let l = f.creation_matrix(Side::Left, 1).unwrap();
        let expected = CMatrix::from_row_slice(
            3,
            3,
            &[
                c64(0., 0.), c64(0., 0.), c64(0., 0.),
                c64(1., 0.), c64(0., 0.), c64(0., 0.),
                c64(0., 0.), c64(1., 0.), c64(0., 0.),
            ],
        );
        assert_eq!(l, expected);
        assert!(f.creation_matrix(Side::Left, 2).is_err());
    }

    #[test]
    fn creations_are_isometric_below_top_level() {
        let f = TruncatedFock::new(2, 4);
        let cut = f.dim_up_to(3);
        for i in 1..=2 {
            for j in 1..=2 {
                let li = f.creation_matrix(Side::Left, i).unwrap();
                let lj = f.creation_matrix(Side::Left, j).unwrap();
                let g = li.adjoint() * lj;
                let block = g.view((0, 0), (cut, cut)).into_owned();
                let expected = if i == j {
                    CMatrix::identity(cut, cut)
                } else {
                    CMatrix::zeros(cut, cut)
                };
                assert!(op_norm(&(block - expected)) < 1e-14);
            }
        }
    }

    #[test]
    fn flip_conjugates_left_to_right() {
        let f = TruncatedFock::new(3, 3);
        let flip = f.flip_matrix();
        assert!(op_norm(&(&flip * &flip - CMatrix::identity(f.dim(), f.dim()))) < 1e-15);
        for i in 1..=3 {
            let l = f.creation_matrix(Side::Left, i).unwrap();
            let r = f.creation_matrix(Side::Right, i).unwrap();
            assert_eq!(&flip * &l * &flip, r);
        }
    }

    #[test]
    fn flip_fixed_points_at_n2_level2() {
        let f = TruncatedFock::new(2, 2);
        // fixes e, 1, 2, 11, 22 and swaps 12 <-> 21
        for (idx, fixed) in [(0, true), (1, true), (2, true), (3, true), (6, true), (4, false), (5, false)] {
            assert_eq!(f.flip_index(idx) == idx, fixed);
        }
        assert_eq!(f.flip_index(4), 5);
        assert_eq!(f.flip_index(5), 4);
    }

    #[test]
    fn flip_commutes_with_level_projections() {
        let f = TruncatedFock::new(2, 3);
        let flip = f.flip_matrix();
        for k in 0..=3 {
            let p = f.projection_up_to(k);
            assert!(op_norm(&(&flip * &p - &p * &flip)) == 0.0);
        }
    }

    #[test]
    fn vacuum_embedding_identities() {
        let f = TruncatedFock::new(2, 2);
        let iota = f.vacuum_embedding();
        let ii = iota.adjoint() * &iota;
        assert_eq!(ii[(0, 0)], C_ONE);
        let proj = &iota * iota.adjoint();
        assert_eq!(proj[(0, 0)], C_ONE);
        assert_eq!(proj.trace(), C_ONE);
        let l1 = f.creation_matrix(Side::Left, 1).unwrap();
        let col = &l1 * &iota;
        assert_eq!(col[(1, 0)], C_ONE);
        assert_eq!(col.column(0).norm(), 1.0);
    }

    #[test]
    fn nu_lambda_at_zero_is_vacuum() {
        let f = TruncatedFock::new(2, 3);
        let v = f.nu_lambda(&[C_ZERO, C_ZERO]).unwrap();
        assert_eq!(v[0], C_ONE);
        assert!((v.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nu_lambda_truncated_norm_closed_form() {
        // |nu|^2 = 1 - |lambda|^{2(N+1)}; lambda of norm 0.5, N = 3
        let f = TruncatedFock::new(2, 3);
        let lam = [c64(0.3, 0.0), c64(0.4, 0.0)];
        let v = f.nu_lambda(&lam).unwrap();
        assert!((v.norm_squared() - 0.99609375).abs() < 1e-12);
        assert!(f.nu_lambda(&[c64(1.0, 0.0), C_ZERO]).is_err());
    }

    #[test]
    fn nu_lambda_eigenrelation_below_top_level() {
        let f = TruncatedFock::new(2, 4);
        let lam = [c64(0.3, 0.2), c64(-0.1, 0.35)];
        let v = f.nu_lambda(&lam).unwrap();
        let cut = f.dim_up_to(3);
        for side in [Side::Left, Side::Right] {
            for i in 1..=2 {
                let a = f.creation_matrix(side, i).unwrap();
                let lhs = a.adjoint() * &v;
                let rhs = &v * lam[i - 1].conj();
                let diff = (lhs - rhs).rows(0, cut).norm();
                assert!(diff < 1e-14, "eigenrelation residual {diff}");
            }
        }
    }

    #[test]
    fn solver_matches_dense_inverse() {
        let f = TruncatedFock::new(2, 4);
        let zeta = [c64(0.4, 0.1), c64(-0.2, 0.3)];
        let combo = scalar_combo(&zeta);
        let x = c64(1.3, -0.2);
        let rhs = CVector::from_fn(f.dim(), |i, _| c64((i % 5) as f64 - 2.0, (i % 3) as f64));
        let fast = f.solve_shifted_creation(Side::Left, x, &combo, 1, &rhs);
        let mut dense = CMatrix::identity(f.dim(), f.dim()) * x;
        for (i, z) in zeta.iter().enumerate() {
            dense -= f.creation_matrix(Side::Left, i + 1).unwrap() * *z;
        }
        let exact = dense.lu().solve(&rhs).unwrap();
        assert!((fast - exact).norm() < 1e-12);
    }
}
