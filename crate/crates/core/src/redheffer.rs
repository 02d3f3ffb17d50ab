//! Redheffer products of 2x2 block systems and the alpha/beta first-row
//! maps, with well-posedness diagnostics for the feedback condition.

use crate::cmatrix::{op_norm, CMatrix, Complex64};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default reciprocal-condition threshold for condition (*).
pub const STAR_RCOND: f64 = 1e-12;

/// A 2x2 block operator matrix
///
/// ```text
///   [ A  B ]        A: X -> Y,  B: U -> Y,
///   [ C  D ]        C: X -> Z,  D: U -> Z,
/// ```
///
/// mapping X (+) U into Y (+) Z. Any of the named spaces may have
/// dimension zero; the corresponding blocks are then genuinely empty.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem2x2 {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub d: CMatrix,
}

/// Named dimensions of the four spaces of a block system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDims {
    pub x: usize,
    pub u: usize,
    pub y: usize,
    pub z: usize,
}

impl BlockSystem2x2 {
    pub fn new(a: CMatrix, b: CMatrix, c: CMatrix, d: CMatrix) -> Result<Self> {
        let (y1, x1) = a.shape();
        let (y2, u1) = b.shape();
        let (z1, x2) = c.shape();
        let (z2, u2) = d.shape();
        if y1 != y2 || z1 != z2 || x1 != x2 || u1 != u2 {
            return Err(Error::SpaceMismatch(format!(
                "A: {y1}x{x1}, B: {y2}x{u1}, C: {z1}x{x2}, D: {z2}x{u2}"
            )));
        }
        Ok(BlockSystem2x2 { a, b, c, d })
    }

    /// Identity system on X (+) U (with Y = X and Z = U).
    pub fn identity(x: usize, u: usize) -> Self {
        BlockSystem2x2 {
            a: CMatrix::identity(x, x),
            b: CMatrix::zeros(x, u),
            c: CMatrix::zeros(u, x),
            d: CMatrix::identity(u, u),
        }
    }

    pub fn dims(&self) -> SpaceDims {
        SpaceDims {
            x: self.a.ncols(),
            u: self.b.ncols(),
            y: self.a.nrows(),
            z: self.c.nrows(),
        }
    }

    /// Assemble the full (Y+Z) x (X+U) matrix.
    pub fn as_matrix(&self) -> CMatrix {
        let d = self.dims();
        let mut m = CMatrix::zeros(d.y + d.z, d.x + d.u);
        m.view_mut((0, 0), (d.y, d.x)).copy_from(&self.a);
        m.view_mut((0, d.x), (d.y, d.u)).copy_from(&self.b);
        m.view_mut((d.y, 0), (d.z, d.x)).copy_from(&self.c);
        m.view_mut((d.y, d.x), (d.z, d.u)).copy_from(&self.d);
        m
    }

    /// Re-block a full matrix according to the given space dimensions.
    pub fn from_matrix(m: &CMatrix, dims: SpaceDims) -> Result<Self> {
        if m.nrows() != dims.y + dims.z || m.ncols() != dims.x + dims.u {
            return Err(Error::SpaceMismatch(format!(
                "matrix {}x{} does not split as ({}+{})x({}+{})",
                m.nrows(),
                m.ncols(),
                dims.y,
                dims.z,
                dims.x,
                dims.u
            )));
        }
        Ok(BlockSystem2x2 {
            a: m.view((0, 0), (dims.y, dims.x)).into_owned(),
            b: m.view((0, dims.x), (dims.y, dims.u)).into_owned(),
            c: m.view((dims.y, 0), (dims.z, dims.x)).into_owned(),
            d: m.view((dims.y, dims.x), (dims.z, dims.u)).into_owned(),
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        BlockSystem2x2 {
            a: &self.a * s,
            b: &self.b * s,
            c: &self.c * s,
            d: &self.d * s,
        }
    }
}

fn check_star(b1: &CMatrix, c: &CMatrix, threshold: f64) -> Result<CMatrix> {
    let x = c.ncols();
    let m = CMatrix::identity(x, x) - b1 * c;
    if x > 0 {
        let sv = m.clone().singular_values();
        let (min, max) = (sv.min(), sv.max());
        if max == 0.0 || min / max < threshold {
            return Err(Error::StarConditionFailed { sigma_min: min });
        }
    }
    Ok(m)
}

/// Redheffer product of two block systems, well-posed when I - B1 C is
/// invertible (condition (*)); then I - C B1 is invertible too.
///
/// Space compatibility: U1 = Z and X = Y1.
/// The result maps X1 (+) U into Y (+) Z1.
pub fn redheffer_product(l: &BlockSystem2x2, l1: &BlockSystem2x2) -> Result<BlockSystem2x2> {
    redheffer_product_with(l, l1, STAR_RCOND)
}

pub fn redheffer_product_with(
    l: &BlockSystem2x2,
    l1: &BlockSystem2x2,
    rcond_threshold: f64,
) -> Result<BlockSystem2x2> {
    let dl = l.dims();
    let d1 = l1.dims();
    if d1.u != dl.z || dl.x != d1.y {
        return Err(Error::SpaceMismatch(format!(
            "incompatible chain: U1 = {} vs Z = {}, X = {} vs Y1 = {}",
            d1.u, dl.z, dl.x, d1.y
        )));
    }
    let star = check_star(&l1.b, &l.c, rcond_threshold)?;
    let lu = star.lu();
    let solve = |rhs: &CMatrix| -> CMatrix {
        if rhs.ncols() == 0 || rhs.nrows() == 0 {
            rhs.clone()
        } else {
            lu.solve(rhs).expect("condition (*) checked above")
        }
    };
    let s_a1 = solve(&l1.a); // (I - B1 C)^{-1} A1
    let b1d = &l1.b * &l.d;
    let s_b1d = solve(&b1d); // (I - B1 C)^{-1} B1 D
    let a = &l.a * &s_a1;
    let b = &l.b + &l.a * &s_b1d;
    let c = &l1.c + &l1.d * &l.c * &s_a1;
    // (I - C B1)^{-1} D = D + C (I - B1 C)^{-1} B1 D
    let d = &l1.d * (&l.d + &l.c * &s_b1d);
    BlockSystem2x2::new(a, b, c, d)
}

/// First-row entry alpha_L(B1) = B + A (I - B1 C)^{-1} B1 D of the product
/// with any system whose upper-left corner row is (A1, B1).
pub fn alpha(l: &BlockSystem2x2, b1: &CMatrix) -> Result<CMatrix> {
    let star = check_star(b1, &l.c, STAR_RCOND)?;
    let b1d = b1 * &l.d;
    let s = if b1d.ncols() == 0 {
        b1d
    } else {
        star.lu().solve(&b1d).expect("condition (*) checked above")
    };
    Ok(&l.b + &l.a * s)
}

/// First-row entry beta_L(A1, B1) = A (I - B1 C)^{-1} A1.
pub fn beta(l: &BlockSystem2x2, a1: &CMatrix, b1: &CMatrix) -> Result<CMatrix> {
    let star = check_star(b1, &l.c, STAR_RCOND)?;
    let s = if a1.ncols() == 0 {
        a1.clone()
    } else {
        star.lu().solve(a1).expect("condition (*) checked above")
    };
    Ok(&l.a * s)
}

/// Entrywise distance between two block systems with equal dims.
pub fn system_distance(l: &BlockSystem2x2, m: &BlockSystem2x2) -> f64 {
    op_norm(&(l.as_matrix() - m.as_matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmatrix::{c64, random_matrix, random_unitary, unitarity_residual, C_ONE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_system(a: f64, b: f64, c: f64, d: f64) -> BlockSystem2x2 {
        BlockSystem2x2::new(
            CMatrix::from_element(1, 1, c64(a, 0.0)),
            CMatrix::from_element(1, 1, c64(b, 0.0)),
            CMatrix::from_element(1, 1, c64(c, 0.0)),
            CMatrix::from_element(1, 1, c64(d, 0.0)),
        )
        .unwrap()
    }

    #[test]
    fn identities_are_units() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = BlockSystem2x2::new(
            random_matrix(&mut rng, 3, 2),
            random_matrix(&mut rng, 3, 4),
            random_matrix(&mut rng, 5, 2),
            random_matrix(&mut rng, 5, 4),
        )
        .unwrap();
        let right = redheffer_product(&l, &BlockSystem2x2::identity(2, 5)).unwrap();
        assert!(system_distance(&l, &right) < 1e-14);
        let left = redheffer_product(&BlockSystem2x2::identity(3, 4), &l).unwrap();
        assert!(system_distance(&l, &left) < 1e-14);
    }

    #[test]
    fn scalar_example_from_mobius_rotation() {
        // L = [[0.8, -0.6],[0.6, 0.8]], L1 = [[1, 0.5],[0, 0]]:
        // (1,2) entry of L o L1 is -0.6 + 0.8*0.5*(1 - 0.3)^{-1}*0.8 = -1/7
        let l = scalar_system(0.8, -0.6, 0.6, 0.8);
        let l1 = scalar_system(1.0, 0.5, 0.0, 0.0);
        let prod = redheffer_product(&l, &l1).unwrap();
        assert!((prod.b[(0, 0)] - c64(-1.0 / 7.0, 0.0)).norm() < 1e-15);
        // the same value through alpha, and beta matches the (1,1) entry
        let al = alpha(&l, &CMatrix::from_element(1, 1, c64(0.5, 0.0))).unwrap();
        assert!((al[(0, 0)] - c64(-1.0 / 7.0, 0.0)).norm() < 1e-15);
        let be = beta(
            &l,
            &CMatrix::from_element(1, 1, C_ONE),
            &CMatrix::from_element(1, 1, c64(0.5, 0.0)),
        )
        .unwrap();
        assert!((be[(0, 0)] - prod.a[(0, 0)]).norm() < 1e-15);
    }

    #[test]
    fn alpha_of_zero_is_b() {
        let l = scalar_system(0.8, -0.6, 0.6, 0.8);
        let al = alpha(&l, &CMatrix::zeros(1, 1)).unwrap();
        assert_eq!(al[(0, 0)], c64(-0.6, 0.0));
    }

    #[test]
    fn star_failure_is_reported() {
        // B1 C = 1 makes I - B1 C singular
        let l = scalar_system(1.0, 0.0, 1.0, 1.0);
        let l1 = scalar_system(1.0, 1.0, 0.0, 0.0);
        match redheffer_product(&l, &l1) {
            Err(Error::StarConditionFailed { sigma_min }) => assert!(sigma_min < 1e-14),
            other => panic!("expected star failure, got {other:?}"),
        }
    }

    #[test]
    fn zero_dimensional_output_space_is_first_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let l = BlockSystem2x2::new(
            random_matrix(&mut rng, 2, 2),
            random_matrix(&mut rng, 2, 3),
            random_matrix(&mut rng, 4, 2) * c64(0.3, 0.0),
            random_matrix(&mut rng, 4, 3),
        )
        .unwrap();
        // L1 has Z1 = {0}: C1 and D1 are 0-row matrices
        let l1 = BlockSystem2x2::new(
            random_matrix(&mut rng, 2, 5),
            random_matrix(&mut rng, 2, 4) * c64(0.3, 0.0),
            CMatrix::zeros(0, 5),
            CMatrix::zeros(0, 4),
        )
        .unwrap();
        let prod = redheffer_product(&l, &l1).unwrap();
        let dims = prod.dims();
        assert_eq!(dims.z, 0);
        assert_eq!(dims.y, 2);
        assert_eq!(dims.x, 5);
        assert_eq!(dims.u, 3);
        assert_eq!(prod.c.nrows(), 0);
        // first row agrees with alpha/beta
        let al = alpha(&l, &l1.b).unwrap();
        assert!(op_norm(&(al - prod.b)) < 1e-13);
        let be = beta(&l, &l1.a, &l1.b).unwrap();
        assert!(op_norm(&(be - prod.a)) < 1e-13);
    }

    #[test]
    fn inverse_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // square, well-conditioned L
        let u = random_unitary(&mut rng, 5);
        let v = random_unitary(&mut rng, 5);
        let mut diag = CMatrix::zeros(5, 5);
        for i in 0..5 {
            diag[(i, i)] = c64(0.6 + 0.2 * i as f64, 0.0);
        }
        let full = u * diag * v;
        let dims = SpaceDims { x: 2, u: 3, y: 2, z: 3 };
        let l = BlockSystem2x2::from_matrix(&full, dims).unwrap();
        let inv = full.clone().try_inverse().unwrap();
        let l1 = BlockSystem2x2::from_matrix(&inv, SpaceDims { x: 2, u: 3, y: 2, z: 3 }).unwrap();
        let p = redheffer_product(&l, &l1).unwrap();
        assert!(system_distance(&p, &BlockSystem2x2::identity(2, 3)) < 1e-12);
        let q = redheffer_product(&l1, &l).unwrap();
        assert!(system_distance(&q, &BlockSystem2x2::identity(2, 3)) < 1e-12);
    }

    #[test]
    fn associativity_on_random_compatible_triple() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (x2, u2, y2, z2) = (3, 2, 4, 3);
        let (x1, u1, y1, z1) = (y2, z2, x2, 2);
        let (x, u, y, z) = (y1, 4, 3, u1);
        let mk = |rng: &mut ChaCha8Rng, r, c| random_matrix(rng, r, c) * c64(0.45, 0.0);
        let l = BlockSystem2x2::new(
            mk(&mut rng, y, x),
            mk(&mut rng, y, u),
            mk(&mut rng, z, x),
            mk(&mut rng, z, u),
        )
        .unwrap();
        let l1 = BlockSystem2x2::new(
            mk(&mut rng, y1, x1),
            mk(&mut rng, y1, u1),
            mk(&mut rng, z1, x1),
            mk(&mut rng, z1, u1),
        )
        .unwrap();
        let l2 = BlockSystem2x2::new(
            mk(&mut rng, y2, x2),
            mk(&mut rng, y2, u2),
            mk(&mut rng, z2, x2),
            mk(&mut rng, z2, u2),
        )
        .unwrap();
        let lhs = redheffer_product(&redheffer_product(&l, &l1).unwrap(), &l2).unwrap();
        let rhs = redheffer_product(&l, &redheffer_product(&l1, &l2).unwrap()).unwrap();
        assert!(system_distance(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn unitary_composition_stays_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l = BlockSystem2x2::from_matrix(
            &random_unitary(&mut rng, 6),
            SpaceDims { x: 2, u: 4, y: 3, z: 3 },
        )
        .unwrap();
        let l1 = BlockSystem2x2::from_matrix(
            &random_unitary(&mut rng, 7),
            SpaceDims { x: 4, u: 3, y: 2, z: 5 },
        )
        .unwrap();
        let p = redheffer_product(&l, &l1).unwrap();
        assert!(unitarity_residual(&p.as_matrix()) < 1e-12);
    }
}
