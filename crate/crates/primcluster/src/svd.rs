//! Smallest-singular-triplet computation via one-sided Jacobi.
//!
//! The clustering machinery only ever needs the smallest singular value of a
//! collocation matrix and its right singular vector. One-sided Jacobi
//! orthogonalizes the columns of `D` by plane rotations accumulated into `V`;
//! on convergence the column norms are the singular values and `V` holds the
//! right singular vectors. Unlike bidiagonalization-based solvers it computes
//! tiny singular values with high *relative* accuracy, which is what the
//! degree-estimation thresholds depend on.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hard cap on Jacobi sweeps; reached only on adversarial input.
const MAX_SWEEPS: usize = 64;

/// Smallest singular value of a matrix together with its right singular
/// vector and the full spectrum.
#[derive(Debug, Clone)]
pub struct SmallestSingular<S> {
    /// Smallest singular value.
    pub sigma: S,
    /// Unit right singular vector associated with `sigma`.
    pub vector: Vec<S>,
    /// All singular values, ascending.
    pub spectrum: Vec<S>,
}

/// Computes the smallest singular triplet of a dense row-major `rows x cols`
/// matrix.
///
/// The returned vector `v` satisfies `‖D v‖₂ = σ_min` up to round-off and
/// `‖v‖₂ = 1`. Errors on empty or non-finite input.
pub fn smallest_singular_triplet<S: Scalar>(
    data: &[S],
    rows: usize,
    cols: usize,
) -> Result<SmallestSingular<S>> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!("svd of empty {rows}x{cols} matrix")));
    }
    if data.len() != rows * cols {
        return Err(Error::invalid(format!(
            "matrix buffer holds {} entries, expected {rows}x{cols}",
            data.len()
        )));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { context: "svd input matrix".into() });
    }

    // Column-major working copy of D and of V = I.
    let mut a: Vec<Vec<S>> = (0..cols).map(|j| (0..rows).map(|i| data[i * cols + j]).collect()).collect();
    let mut v: Vec<Vec<S>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { S::one() } else { S::zero() }).collect())
        .collect();

    let tol = S::epsilon();
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (mut app, mut aqq, mut apq) = (S::zero(), S::zero(), S::zero());
                for i in 0..rows {
                    app = app + a[p][i] * a[p][i];
                    aqq = aqq + a[q][i] * a[q][i];
                    apq = apq + a[p][i] * a[q][i];
                }
                if app == S::zero() || aqq == S::zero() {
                    continue;
                }
                if apq.abs() <= tol * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                // Rutishauser rotation zeroing the (p,q) Gram entry.
                let zeta = (aqq - app) / (apq + apq);
                let t = if zeta >= S::zero() {
                    S::one() / (zeta + (S::one() + zeta * zeta).sqrt())
                } else {
                    -S::one() / (-zeta + (S::one() + zeta * zeta).sqrt())
                };
                let cs = S::one() / (S::one() + t * t).sqrt();
                let sn = cs * t;
                for i in 0..rows {
                    let (x, y) = (a[p][i], a[q][i]);
                    a[p][i] = cs * x - sn * y;
                    a[q][i] = sn * x + cs * y;
                }
                for i in 0..cols {
                    let (x, y) = (v[p][i], v[q][i]);
                    v[p][i] = cs * x - sn * y;
                    v[q][i] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<S> = a
        .iter()
        .map(|col| {
            let ss = col.iter().map(|&x| x * x).sum::<S>();
            ss.sqrt()
        })
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[i].partial_cmp(&norms[j]).expect("finite norms"));

    let min = order[0];
    let mut vector = v[min].clone();
    let vnorm = vector.iter().map(|&x| x * x).sum::<S>().sqrt();
    if vnorm > S::zero() {
        for x in &mut vector {
            *x = *x / vnorm;
        }
    }
    let spectrum: Vec<S> = order.iter().map(|&i| norms[i]).collect();
    Ok(SmallestSingular { sigma: norms[min], vector, spectrum })
}
