//! Dense complex matrix aliases and numeric helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Complex64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest singular value; 0 for matrices with a zero dimension.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Reciprocal condition number sigma_min / sigma_max (0 for singular or empty).
pub fn rcond(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    if max == 0.0 {
        0.0
    } else {
        sv.min() / max
    }
}

pub fn smallest_singular_value(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().min()
}

/// `|| m^H m - I ||` — deviation from being an isometry (empty matrices pass).
pub fn isometry_residual(m: &CMatrix) -> f64 {
    if m.ncols() == 0 {
        return 0.0;
    }
    let g = m.adjoint() * m;
    op_norm(&(g - CMatrix::identity(m.ncols(), m.ncols())))
}

/// max(|| m^H m - I ||, || m m^H - I ||) — deviation from unitarity.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    isometry_residual(m).max(isometry_residual(&m.adjoint()))
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted
/// descending. Returns (eigenvalues, eigenvectors as columns).
pub fn hermitian_eigen_sorted(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    assert_eq!(m.nrows(), m.ncols());
    let dim = m.nrows();
    if dim == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("non-finite eigenvalue")
    });
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(dim, dim);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// PSD square root of a Hermitian matrix, clamping negative roundoff
/// eigenvalues to zero. Returns (sqrt, sorted eigenvalues, eigenvectors).
pub fn hermitian_sqrt_psd(m: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let (vals, vecs) = hermitian_eigen_sorted(m);
    let dim = m.nrows();
    let mut sqrt = CMatrix::zeros(dim, dim);
    for (j, &v) in vals.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        let col = vecs.column(j);
        // sqrt += s * col * col^H
        for r in 0..dim {
            for c in 0..dim {
                sqrt[(r, c)] += Complex64::from(s) * col[r] * col[c].conj();
            }
        }
    }
    (sqrt, vals, vecs)
}

/// Closest unitary in Frobenius norm: U V^H from the SVD of `m`.
pub fn closest_unitary(m: &CMatrix) -> CMatrix {
    if m.nrows() == 0 || m.ncols() == 0 {
        return m.clone();
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    u * vt
}

/// Matrix exponential by scaling-and-squaring with a Taylor series.
///
/// Inputs in this crate have modest norm (random J-skew generators), so a
/// 18-term series after scaling to norm <= 0.5 reaches machine precision.
pub fn matrix_exp(m: &CMatrix) -> CMatrix {
    let dim = m.nrows();
    assert_eq!(dim, m.ncols());
    let norm = m.norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / Complex64::from(2f64.powi(squarings as i32));
    let mut acc = CMatrix::identity(dim, dim);
    let mut term = CMatrix::identity(dim, dim);
    for k in 1..=18 {
        term = (&term * &scaled) / Complex64::from(k as f64);
        acc += &term;
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    acc
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) / Complex64::from(2f64.sqrt())
}

/// Matrix of iid standard complex normals.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Random unitary: Q factor of a complex Gaussian, phases fixed so the
/// diagonal of R is positive (makes the draw basis-stable).
pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    if dim == 0 {
        return CMatrix::zeros(0, 0);
    }
    let g = random_matrix(rng, dim, dim);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 { C_ONE } else { d / Complex64::from(d.norm()) };
        let col = q.column(j) * phase;
        q.set_column(j, &col);
    }
    q
}

/// Random matrix rescaled to a prescribed largest singular value.
pub fn random_with_norm(rng: &mut ChaCha8Rng, rows: usize, cols: usize, sigma: f64) -> CMatrix {
    let g = random_matrix(rng, rows, cols);
    let s = op_norm(&g);
    if s == 0.0 {
        g
    } else {
        g * Complex64::from(sigma / s)
    }
}

/// Power iteration for the largest |eigenvalue| of a Hermitian operator
/// given by a matrix-free apply. Deterministic for a fixed `seed`.
pub fn hermitian_norm_est<F>(dim: usize, iters: usize, seed: u64, mut apply: F) -> f64
where
    F: FnMut(&CVector) -> CVector,
{
    if dim == 0 {
        return 0.0;
    }
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let mut v = CVector::from_fn(dim, |_, _| complex_normal(&mut rng));
    v /= Complex64::from(v.norm());
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = apply(&v);
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        lambda = n;
        v = w / Complex64::from(n);
    }
    lambda
}

/// Largest singular value of a matrix-free operator, via power iteration
/// on A^H A with two seeded starts (max of the two estimates).
pub fn op_norm_est<F, G>(
    in_dim: usize,
    iters: usize,
    seed: u64,
    mut apply: F,
    mut apply_adj: G,
) -> f64
where
    F: FnMut(&CVector) -> CVector,
    G: FnMut(&CVector) -> CVector,
{
    if in_dim == 0 {
        return 0.0;
    }
    let mut best = 0.0f64;
    for restart in 0..2u64 {
        let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed ^ (restart * 0x9e37));
        let mut v = CVector::from_fn(in_dim, |_, _| complex_normal(&mut rng));
        v /= Complex64::from(v.norm());
        let mut sigma = 0.0;
        for _ in 0..iters {
            let av = apply(&v);
            sigma = av.norm();
            if sigma == 0.0 {
                break;
            }
            let w = apply_adj(&av);
            let n = w.norm();
            if n == 0.0 {
                break;
            }
            v = w / Complex64::from(n);
        }
        best = best.max(sigma);
    }
    best
}

/// out = (A tensor B) x for x indexed (row of A major, row of B minor),
/// without forming the Kronecker product.
pub fn kron_apply(a: &CMatrix, b: &CMatrix, x: &CVector) -> CVector {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    assert_eq!(x.len(), ac * bc, "kron_apply shape mismatch");
    let xm = CMatrix::from_fn(ac, bc, |i, j| x[i * bc + j]);
    let ym = a * xm * b.transpose();
    let mut out = CVector::zeros(ar * br);
    for i in 0..ar {
        for j in 0..br {
            out[i * br + j] = ym[(i, j)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn hermitian_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = random_matrix(&mut rng, 5, 5);
        let h = &g * g.adjoint(); // PSD
        let (s, vals, _) = hermitian_sqrt_psd(&h);
        assert!(vals.iter().all(|v| *v >= -1e-12));
        assert!(op_norm(&(&s * &s - h)) < 1e-10);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(&mut rng, 6);
        assert!(unitarity_residual(&u) < 1e-12);
    }

    #[test]
    fn matrix_exp_matches_scalar() {
        let m = CMatrix::from_row_slice(1, 1, &[c64(0.3, -0.7)]);
        let e = matrix_exp(&m);
        let expected = c64(0.3, -0.7).exp();
        assert!((e[(0, 0)] - expected).norm() < 1e-14);
    }

    #[test]
    fn matrix_exp_of_skew_hermitian_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = random_matrix(&mut rng, 4, 4);
        let s = (&g - g.adjoint()) * Complex64::from(0.5);
        let u = matrix_exp(&s);
        assert!(unitarity_residual(&u) < 1e-12);
    }

    #[test]
    fn op_norm_est_close_to_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 20, 12);
        let exact = op_norm(&m);
        let est = op_norm_est(12, 60, 1, |v| &m * v, |v| m.adjoint() * v);
        assert!((exact - est).abs() / exact < 1e-6);
    }

    #[test]
    fn kron_apply_matches_kronecker() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_matrix(&mut rng, 3, 4);
        let b = random_matrix(&mut rng, 2, 5);
        let x = CVector::from_fn(20, |i, _| c64(i as f64, -1.0));
        let direct = a.kronecker(&b) * &x;
        let fast = kron_apply(&a, &b, &x);
        assert!((direct - fast).norm() < 1e-12);
    }
}
