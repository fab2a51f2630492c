//! Small dense helpers that the numerical modules share.

use nalgebra::{DMatrix, DVector};

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues are returned in descending order with matching eigenvector
/// columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "jacobi_eigen needs a square matrix");
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Orthonormalize the columns of `y` in place (modified Gram-Schmidt, two
/// passes), first projecting out each vector of `against`. Columns that
/// collapse are replaced by a deterministic fallback direction.
pub fn orthonormalize(y: &mut DMatrix<f64>, against: &[DVector<f64>]) {
    let (n, b) = y.shape();
    for j in 0..b {
        for _pass in 0..2 {
            for u in against {
                let d = y.column(j).dot(u);
                y.column_mut(j).axpy(-d, u, 1.0);
            }
            for k in 0..j {
                let d = y.column(j).dot(&y.column(k));
                let ck = y.column(k).clone_owned();
                y.column_mut(j).axpy(-d, &ck, 1.0);
            }
        }
        let norm = y.column(j).norm();
        if norm > 1e-300 {
            y.column_mut(j).scale_mut(1.0 / norm);
        } else {
            // cycle through unit vectors until one survives the projection
            for e in 0..n {
                let mut cand = DVector::zeros(n);
                cand[e] = 1.0;
                for u in against {
                    let d = cand.dot(u);
                    cand.axpy(-d, u, 1.0);
                }
                for k in 0..j {
                    let d = cand.dot(&y.column(k));
                    cand.axpy(-d, &y.column(k).clone_owned(), 1.0);
                }
                let nn = cand.norm();
                if nn > 1e-8 {
                    y.set_column(j, &(cand / nn));
                    break;
                }
            }
        }
    }
}
