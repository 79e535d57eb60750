use nalgebra::DMatrix;

use crate::error::{HkError, Result};

/// Largest matrix the dense solver is meant for.
pub const MAX_DENSE_N: usize = 64;

const MAX_SWEEPS: usize = 100;

/// Ascending eigenvalues with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigh {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k).iter().copied().collect()
    }
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>, rtol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(HkError::Precondition(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
    }
    let tol = rtol * max_abs(m).max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return Err(HkError::Precondition(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Full eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvectors are sign-normalised so that their largest-magnitude entry is
/// positive (first such entry on ties).
pub fn eigh(m: &DMatrix<f64>) -> Result<Eigh> {
    check_symmetric(m, 1e-10)?;
    let n = m.nrows();
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    let norm = a.norm();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n).flat_map(|p| ((p + 1)..n).map(move |q| (p, q))).map(|(p, q)| a[(p, q)].powi(2)).sum();
        if off.sqrt() <= f64::EPSILON * norm || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let off: f64 = (0..n).flat_map(|p| ((p + 1)..n).map(move |q| (p, q))).map(|(p, q)| a[(p, q)].powi(2)).sum();
        return Err(HkError::Numerical {
            message: format!("Jacobi iteration did not converge in {MAX_SWEEPS} sweeps"),
            best: off.sqrt(),
            gap: off.sqrt(),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut vec: Vec<f64> = v.column(src).iter().copied().collect();
        let lead = (0..n).fold(0, |best, k| if vec[k].abs() > vec[best].abs() { k } else { best });
        if vec[lead] < 0.0 {
            vec.iter_mut().for_each(|x| *x = -*x);
        }
        vectors.set_column(col, &nalgebra::DVector::from_vec(vec));
    }
    Ok(Eigh { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn residuals(m: &DMatrix<f64>, e: &Eigh) -> (f64, f64) {
        let n = m.nrows();
        let mut worst = 0.0f64;
        for k in 0..n {
            let v = e.vectors.column(k);
            let r = m * v - v * e.values[k];
            worst = worst.max(r.norm());
        }
        let ortho = (e.vectors.transpose() * &e.vectors - DMatrix::identity(n, n)).abs().max();
        (worst, ortho)
    }

    #[test]
    fn k2_and_p3_laplacians() {
        let k2 = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let e = eigh(&k2).unwrap();
        assert!((e.values[0]).abs() < 1e-14 && (e.values[1] - 2.0).abs() < 1e-14);

        let p3 = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let e = eigh(&p3).unwrap();
        for (got, want) in e.values.iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        }
    }

    #[test]
    fn identity_spectrum() {
        let e = eigh(&DMatrix::identity(5, 5)).unwrap();
        assert!(e.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(eigh(&m), Err(HkError::Precondition(_))));
    }

    #[test]
    fn sign_convention() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = eigh(&m).unwrap();
        for k in 0..2 {
            let v = e.vector(k);
            let lead = if v[0].abs() >= v[1].abs() { v[0] } else { v[1] };
            assert!(lead > 0.0);
        }
    }

    fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-3.0..3.0f64, n * n).prop_map(move |v| {
            let m = DMatrix::from_vec(n, n, v);
            (&m + m.transpose()) * 0.5
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn residual_and_orthonormality(m in (1usize..=16).prop_flat_map(symmetric)) {
            let e = eigh(&m).unwrap();
            let (res, ortho) = residuals(&m, &e);
            let scale = m.norm().max(1.0);
            prop_assert!(res <= 1e-9 * scale, "residual {}", res);
            prop_assert!(ortho <= 1e-9, "orthonormality {}", ortho);
            prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));

            // independent reference solver
            let mut reference: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            reference.sort_by(f64::total_cmp);
            for (a, b) in e.values.iter().zip(&reference) {
                prop_assert!((a - b).abs() <= 1e-9 * scale);
            }
        }
    }
}
