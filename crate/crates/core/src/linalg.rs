//! Dense matrix helpers: exponential, logarithm, square root, signatures.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

/// The standard symplectic matrix `[[0, I], [-I, 0]]` of size `2n`.
pub fn standard_j(n: usize) -> Mat {
    let mut j = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// `ω(u, v) = uᵀ J v` without materialising `J`.
pub fn omega(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let n = u.len() / 2;
    (0..n).map(|i| u[i] * v[n + i] - u[n + i] * v[i]).sum()
}

/// Largest entry modulus.
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Inverse of a symplectic matrix, `M⁻¹ = -J Mᵀ J`.
pub fn symplectic_inverse(m: &Mat) -> Mat {
    let j = standard_j(m.nrows() / 2);
    -(&j * m.transpose() * &j)
}

pub fn expm(m: &Mat) -> Mat {
    if m.nrows() == 0 {
        return m.clone();
    }
    m.exp()
}

/// Principal square root by the Denman–Beavers iteration.
pub fn sqrtm(a: &Mat) -> Option<Mat> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = Mat::identity(n, n);
    for _ in 0..100 {
        let yi = y.clone().try_inverse()?;
        let zi = z.clone().try_inverse()?;
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let delta = max_abs(&(&y_next - &y));
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * (1.0 + max_abs(&y)) {
            return Some(y);
        }
    }
    None
}

/// Principal matrix logarithm by inverse scaling and squaring.
///
/// Returns `None` when the square-root iteration fails, which happens when
/// the matrix has eigenvalues on (or too close to) the closed negative axis.
pub fn logm(a: &Mat) -> Option<Mat> {
    let n = a.nrows();
    if n == 0 {
        return Some(a.clone());
    }
    let id = Mat::identity(n, n);
    let mut x = a.clone();
    let mut squarings = 0;
    while max_abs(&(&x - &id)) * n as f64 > 0.25 {
        x = sqrtm(&x)?;
        squarings += 1;
        if squarings > 48 {
            return None;
        }
    }
    let e = &x - &id;
    let mut term = e.clone();
    let mut sum = e.clone();
    for k in 2..60 {
        term = &term * &e;
        let coef = if k % 2 == 0 { -1.0 } else { 1.0 } / k as f64;
        sum += &term * coef;
        if max_abs(&term) / (k as f64) < 1e-18 {
            break;
        }
    }
    Some(sum * 2f64.powi(squarings))
}

/// Signature `(positive, negative, zero)` of a real symmetric matrix.
pub fn inertia(m: &Mat, zero_tol: f64) -> (usize, usize, usize) {
    if m.nrows() == 0 {
        return (0, 0, 0);
    }
    let sym = (m + m.transpose()) * 0.5;
    let eigs = sym.symmetric_eigenvalues();
    let mut out = (0, 0, 0);
    for &e in eigs.iter() {
        if e > zero_tol {
            out.0 += 1;
        } else if e < -zero_tol {
            out.1 += 1;
        } else {
            out.2 += 1;
        }
    }
    out
}

/// Smallest modulus among the eigenvalues of a symmetric matrix.
pub fn min_abs_eigenvalue(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |acc, e| acc.min(e.abs()))
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|v| Complex64::new(v, 0.0))
}

/// SVD with a bounded iteration count, retried on `QᵀmR` for fixed
/// orthogonal `Q`, `R` if the iteration stalls.
pub fn svd<T>(m: &DMatrix<T>, compute_u: bool, compute_v: bool) -> nalgebra::SVD<T, nalgebra::Dyn, nalgebra::Dyn>
where
    T: nalgebra::ComplexField<RealField = f64>,
{
    let iters = 200 * m.nrows().max(m.ncols()).max(4);
    if let Some(s) = nalgebra::SVD::try_new(m.clone(), compute_u, compute_v, f64::EPSILON, iters) {
        return s;
    }
    for seed in 0..8 {
        let q = mixing_orthogonal(m.nrows(), seed).map(T::from_real);
        let r = mixing_orthogonal(m.ncols(), seed + 8).map(T::from_real);
        let conj = q.adjoint() * m * &r;
        if let Some(mut s) = nalgebra::SVD::try_new(conj, compute_u, compute_v, f64::EPSILON, iters) {
            s.u = s.u.map(|u| q.clone() * u);
            s.v_t = s.v_t.map(|vt| vt * r.adjoint());
            return s;
        }
    }
    panic!("SVD iteration failed to converge on a {}x{} matrix", m.nrows(), m.ncols());
}

pub fn singular_values(m: &Mat) -> DVector<f64> {
    svd(m, false, false).singular_values
}

/// Fixed orthogonal matrix used to break exact structure that stalls the
/// QR iteration.
fn mixing_orthogonal(d: usize, seed: usize) -> Mat {
    let a = Mat::from_fn(d, d, |i, j| ((i * d + j + 1) as f64 * (seed as f64 + 1.0) * 0.7317).sin());
    a.qr().q()
}

/// Diagonal similarity `D⁻¹ m D` by powers of two that evens out row and
/// column norms. Eigenvalues are unchanged and exactly representable.
fn balanced(m: &Mat) -> Mat {
    let d = m.nrows();
    let mut a = m.clone();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..d {
            let (mut c, mut r) = (0.0, 0.0);
            for j in 0..d {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let s = c + r;
            while c < r / 2.0 {
                c *= 2.0;
                r /= 2.0;
                f *= 2.0;
            }
            while c >= r * 2.0 {
                c /= 2.0;
                r *= 2.0;
                f /= 2.0;
            }
            if c + r < 0.95 * s {
                done = false;
                for j in 0..d {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    a
}

/// Real Schur factor `T` of `m`, retrying under orthogonal similarities
/// when nalgebra's QR iteration stalls.
fn quasi_triangular(m: &Mat) -> Option<Mat> {
    let d = m.nrows();
    let iters = 200 * d.max(4);
    if let Some(s) = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, iters) {
        return Some(s.unpack().1);
    }
    (0..8).find_map(|seed| {
        let q = mixing_orthogonal(d, seed);
        let conj = q.transpose() * m * &q;
        nalgebra::Schur::try_new(conj, f64::EPSILON, iters).map(|s| s.unpack().1)
    })
}

/// Eigenvalues of the `1 × 1` and `2 × 2` diagonal blocks of a real Schur
/// form, the latter solved directly.
fn schur_eigenvalues(t: &Mat) -> Vec<Complex64> {
    let d = t.nrows();
    let mut out = Vec::with_capacity(d);
    let mut i = 0;
    while i < d {
        if i + 1 < d && t[(i + 1, i)] != 0.0 {
            let (a, b, c, e) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let mean = 0.5 * (a + e);
            let disc = Complex64::new(0.25 * (a - e) * (a - e) + b * c, 0.0).sqrt();
            out.push(mean + disc);
            out.push(mean - disc);
            i += 2;
        } else {
            out.push(Complex64::new(t[(i, i)], 0.0));
            i += 1;
        }
    }
    out
}

/// Eigenvalues of a real square matrix.
///
/// Near-scalar input such as a conjugated identity has its mean eigenvalue
/// shifted out first, and every input is balanced before the dense solver
/// runs. nalgebra's Schur form is the fallback.
pub fn eigenvalues(m: &Mat) -> Vec<Complex64> {
    let d = m.nrows();
    if d == 0 {
        return Vec::new();
    }
    let mut mu = m.trace() / d as f64;
    let mut b = m - Mat::identity(d, d) * mu;
    if b.norm() > 1e-3 * m.norm() {
        mu = 0.0;
        b = m.clone();
    }
    let b = balanced(&b);
    let f = faer::Mat::<f64>::from_fn(d, d, |i, j| b[(i, j)]);
    let shifted = match f.eigenvalues() {
        Ok(v) => v.iter().map(|z| Complex64::new(z.re, z.im)).collect(),
        Err(_) => match quasi_triangular(&b) {
            Some(t) => schur_eigenvalues(&t),
            None => panic!("eigenvalue iteration failed to converge on a {d}x{d} matrix"),
        },
    };
    shifted.into_iter().map(|z: Complex64| z + mu).collect()
}

/// Eigenvalues of a complex square matrix.
pub fn complex_eigenvalues(m: &CMat) -> Vec<Complex64> {
    let d = m.nrows();
    if d == 0 {
        return Vec::new();
    }
    let f = faer::Mat::<faer::c64>::from_fn(d, d, |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    match f.eigenvalues() {
        Ok(v) => v.iter().map(|z| Complex64::new(z.re, z.im)).collect(),
        Err(_) => m
            .clone()
            .schur()
            .eigenvalues()
            .expect("complex Schur form is triangular")
            .iter()
            .copied()
            .collect(),
    }
}

/// Symplectic direct sum of `a` (size `2p`) and `b` (size `2q`) in the
/// interleaved coordinate order `(x_a, x_b, y_a, y_b)`.
pub fn symplectic_direct_sum(a: &Mat, b: &Mat) -> Mat {
    let p = a.nrows() / 2;
    let q = b.nrows() / 2;
    let n = p + q;
    let mut out = Mat::zeros(2 * n, 2 * n);
    let map_a = |i: usize| if i < p { i } else { n + (i - p) };
    let map_b = |i: usize| if i < q { p + i } else { n + p + (i - q) };
    for i in 0..2 * p {
        for j in 0..2 * p {
            out[(map_a(i), map_a(j))] = a[(i, j)];
        }
    }
    for i in 0..2 * q {
        for j in 0..2 * q {
            out[(map_b(i), map_b(j))] = b[(i, j)];
        }
    }
    out
}

/// Coordinate indices of the listed planes inside `R^{2n}`, ordered as
/// `(x_{p_1}, .., x_{p_m}, y_{p_1}, .., y_{p_m})`.
pub fn plane_indices(planes: &[usize], n: usize) -> Vec<usize> {
    planes
        .iter()
        .copied()
        .chain(planes.iter().map(|&p| n + p))
        .collect()
}

/// Rotation of the `(x, y)` plane by `angle` (counter-clockwise for positive angle).
pub fn rotation2(angle: f64) -> Mat {
    let (s, c) = angle.sin_cos();
    Mat::from_row_slice(2, 2, &[c, -s, s, c])
}
