use nalgebra::{DMatrix, DVector};

use super::Tolerances;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (ascending) with the matching orthonormal eigenvectors as
/// the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymmetricEigen {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.values));
        &self.vectors * d * self.vectors.transpose()
    }
}

pub fn sym_eig(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    sym_eig_with(m, &Tolerances::default())
}

pub fn sym_eig_with(m: &DMatrix<f64>, tol: &Tolerances) -> Result<Vec<f64>> {
    check_symmetric(m, tol)?;
    jacobi(m, false, tol).map(|(values, _)| values)
}

pub fn sym_eig_vectors(m: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let tol = Tolerances::default();
    check_symmetric(m, &tol)?;
    let (values, vectors) = jacobi(m, true, &tol)?;
    Ok(SymmetricEigen {
        values,
        vectors: vectors.expect("vectors requested"),
    })
}

/// `f(M)` for symmetric `M` through its eigendecomposition.
pub fn sym_matrix_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let eig = sym_eig_vectors(m)?;
    let fd = DVector::from_iterator(eig.values.len(), eig.values.iter().map(|&x| f(x)));
    let v = &eig.vectors;
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * fd[j]);
    let mut out = scaled * v.transpose();
    symmetrize(&mut out);
    Ok(out)
}

fn check_symmetric(m: &DMatrix<f64>, tol: &Tolerances) -> Result<()> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let scale = m.amax();
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > tol.symmetry * scale {
                return Err(Error::invalid(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
}

/// Cyclic Jacobi on a dense row-major copy of the symmetric part of `m`.
fn jacobi(
    m: &DMatrix<f64>,
    want_vectors: bool,
    tol: &Tolerances,
) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
    let n = m.nrows();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)])
            };
        }
    }
    // Row-major eigenvector accumulator: row k holds eigenvector k.
    let mut v = if want_vectors {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        Some(v)
    } else {
        None
    };

    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = tol.jacobi * frob;
    let mut converged = n <= 1 || frob == 0.0;
    let mut sweeps = 0;
    while !converged {
        let off = off_diagonal_norm(&a, n);
        if off <= target {
            converged = true;
            break;
        }
        if sweeps == MAX_SWEEPS {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let g = a[r * n + p];
                    let h = a[r * n + q];
                    if g == 0.0 && h == 0.0 {
                        continue;
                    }
                    let new_rp = g - s * (h + g * tau);
                    let new_rq = h + s * (g - h * tau);
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
                if let Some(v) = v.as_mut() {
                    let (head, tail) = v.split_at_mut(q * n);
                    let row_p = &mut head[p * n..p * n + n];
                    let row_q = &mut tail[..n];
                    for (x, y) in row_p.iter_mut().zip(row_q.iter_mut()) {
                        let g = *x;
                        let h = *y;
                        *x = g - s * (h + g * tau);
                        *y = h + s * (g - h * tau);
                    }
                }
            }
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            what: "Jacobi eigenvalue iteration",
            iterations: MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = v.map(|v| DMatrix::from_fn(n, n, |row, col| v[order[col] * n + row]));
    Ok((values, vectors))
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += a[i * n + j] * a[i * n + j];
        }
    }
    (2.0 * sum).sqrt()
}

/// Eigenvalues (ascending) of the pencil `L - mu R`, i.e. of `R^{-1/2} L R^{-1/2}`.
pub fn gen_eig(l: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<Vec<f64>> {
    gen_eig_with(l, r, &Tolerances::default())
}

pub fn gen_eig_with(l: &DMatrix<f64>, r: &DMatrix<f64>, tol: &Tolerances) -> Result<Vec<f64>> {
    if l.shape() != r.shape() {
        return Err(Error::DimensionMismatch {
            expected: r.nrows(),
            got: l.nrows(),
        });
    }
    check_symmetric(l, tol)?;
    check_symmetric(r, tol)?;
    let chol = nalgebra::Cholesky::new(r.clone()).ok_or_else(|| {
        Error::NotPositiveDefinite("reference form has no Cholesky factor".into())
    })?;
    let g = chol.l();
    let max_diag = r.diagonal().amax();
    let min_pivot = g.diagonal().iter().map(|x| x * x).fold(f64::INFINITY, f64::min);
    if !(min_pivot > tol.definiteness * max_diag) {
        return Err(Error::NotPositiveDefinite(format!(
            "reference form pivot {min_pivot:e} below {:e} x {max_diag:e}",
            tol.definiteness
        )));
    }
    // G^{-1} L G^{-T} = G^{-1} (G^{-1} L)^T for symmetric L.
    let x = g
        .solve_lower_triangular(l)
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    let mut m = g
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::NotPositiveDefinite("singular Cholesky factor".into()))?;
    symmetrize(&mut m);
    jacobi(&m, false, tol).map(|(values, _)| values)
}

pub fn gen_eig_min(l: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<f64> {
    gen_eig_min_with(l, r, &Tolerances::default())
}

pub fn gen_eig_min_with(l: &DMatrix<f64>, r: &DMatrix<f64>, tol: &Tolerances) -> Result<f64> {
    gen_eig_with(l, r, tol).map(|v| v[0])
}

pub fn gen_eig_max(l: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<f64> {
    gen_eig_max_with(l, r, &Tolerances::default())
}

pub fn gen_eig_max_with(l: &DMatrix<f64>, r: &DMatrix<f64>, tol: &Tolerances) -> Result<f64> {
    gen_eig_with(l, r, tol).map(|v| v[v.len() - 1])
}

/// `(min, max)` generalized eigenvalues of the pencil.
pub fn gen_eig_extremes(l: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<(f64, f64)> {
    gen_eig(l, r).map(|v| (v[0], v[v.len() - 1]))
}

/// Largest real part among the eigenvalues of a general square matrix.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::invalid("spectral abscissa needs a square matrix"));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let eig = m.complex_eigenvalues();
    Ok(eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &b * b.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn identity_and_diagonal() {
        assert_eq!(sym_eig(&DMatrix::identity(3, 3)).unwrap(), vec![1.0, 1.0, 1.0]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        assert_eq!(sym_eig(&d).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let ev = sym_eig(&m).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-15 && (ev[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(matches!(sym_eig(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn reconstruction_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 5, 17, 40] {
            let m = random_spd(&mut rng, n) - DMatrix::identity(n, n) * 2.0;
            let eig = sym_eig_vectors(&m).unwrap();
            let rel = (eig.reconstruct() - &m).norm() / m.norm();
            assert!(rel <= 1e-10, "n={n} residual {rel:e}");
            let trace: f64 = m.trace();
            let sum: f64 = eig.values.iter().sum();
            assert!((trace - sum).abs() <= 1e-10 * trace.abs().max(1.0));
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn generalized_examples() {
        let two = DMatrix::identity(3, 3) * 2.0;
        assert!((gen_eig_min(&two, &DMatrix::identity(3, 3)).unwrap() - 2.0).abs() < 1e-15);
        let l = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let r = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        assert!((gen_eig_min(&l, &r).unwrap() - 1.0).abs() < 1e-15);
        assert!((gen_eig_max(&l, &r).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn generalized_rejects_indefinite_reference() {
        let l = DMatrix::identity(2, 2);
        let r = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(gen_eig_min(&l, &r), Err(Error::NotPositiveDefinite(_))));
        let singular = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert!(gen_eig_min(&l, &singular).is_err());
    }

    /// Rayleigh quotients over random directions can only bracket the
    /// extreme generalized eigenvalues from inside; local maximization of
    /// the quotient from the best samples closes the gap.
    #[test]
    fn generalized_matches_sphere_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 4;
        let l = {
            let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            &b + b.transpose()
        };
        let r = random_spd(&mut rng, n);
        let quotient = |x: &DVector<f64>| x.dot(&(&l * x)) / x.dot(&(&r * x));
        let mut best = f64::INFINITY;
        let mut best_x = DVector::zeros(n);
        for _ in 0..20000 {
            let x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let q = quotient(&x);
            if q < best {
                best = q;
                best_x = x;
            }
        }
        // Coordinate pattern search from the best sample.
        let mut step = 0.1;
        while step > 1e-12 {
            let mut improved = false;
            for i in 0..n {
                for sign in [-1.0, 1.0] {
                    let mut y = best_x.clone();
                    y[i] += sign * step;
                    let q = quotient(&y);
                    if q < best {
                        best = q;
                        best_x = y;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        let mu = gen_eig_min(&l, &r).unwrap();
        assert!(best >= mu - 1e-12);
        assert!((best - mu).abs() < 1e-6, "sampled {best} vs {mu}");
    }

    #[test]
    fn sqrt_of_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_spd(&mut rng, 6);
        let h = sym_matrix_fn(&m, f64::sqrt).unwrap();
        assert!((&h * &h - &m).norm() / m.norm() < 1e-12);
    }

    #[test]
    fn abscissa_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -3.0, -0.5]));
        assert!((spectral_abscissa(&m).unwrap() + 0.5).abs() < 1e-14);
    }
}
