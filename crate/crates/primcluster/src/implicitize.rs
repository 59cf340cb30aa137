//! Discrete approximate implicitization of point clouds.
//!
//! A cloud of N points is collocated against the graded monomial basis of
//! total degree m, giving the N x M matrix `D[i][j] = pi_j(p_i)`. The right
//! singular vector of the smallest singular value is the coefficient vector
//! of the degree-m polynomial that vanishes most nearly on the cloud;
//! `sigma_min` itself measures how far the cloud is from any degree-m
//! algebraic hypersurface.

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::scalar::Scalar;
use crate::svd;

/// Monomial basis of all n-variate monomials of total degree at most m, in
/// graded lexicographic order: `1, x, y, x^2, xy, y^2, ...` for n = 2.
///
/// Each non-constant monomial stores a link to the monomial it extends by a
/// single coordinate, so a collocation row is assembled with one
/// multiplication per entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    ambient_dim: usize,
    total_degree: usize,
    exponents: Vec<Vec<usize>>,
    /// `(j, k)` per non-constant monomial: this monomial equals monomial `j`
    /// times coordinate `k`. Entry 0 is unused.
    parents: Vec<(usize, usize)>,
}

/// Graded-lex basis of the n-variate polynomials of total degree <= m.
/// Supports planar curves (n = 2) and surfaces (n = 3).
pub fn build_basis(ambient_dim: usize, total_degree: usize) -> Result<MonomialBasis> {
    if !(2..=3).contains(&ambient_dim) {
        return Err(Error::invalid(format!(
            "monomial basis supports ambient dimension 2 or 3, got {ambient_dim}"
        )));
    }
    if total_degree == 0 {
        return Err(Error::invalid("total degree must be at least 1"));
    }
    let mut exponents = Vec::new();
    for degree in 0..=total_degree {
        push_degree_block(ambient_dim, degree, &mut Vec::new(), &mut exponents);
    }
    let parents = exponents
        .iter()
        .enumerate()
        .map(|(j, exp)| {
            if j == 0 {
                return (0, 0);
            }
            let k = exp.iter().position(|&e| e > 0).expect("non-constant monomial");
            let mut parent = exp.clone();
            parent[k] -= 1;
            let pj = exponents[..j]
                .iter()
                .position(|e| *e == parent)
                .expect("parent precedes child in graded order");
            (pj, k)
        })
        .collect();
    Ok(MonomialBasis {
        ambient_dim,
        total_degree,
        exponents,
        parents,
    })
}

/// Appends all exponent tuples of exactly `remaining` total degree, first
/// coordinate descending (lexicographic order within the degree block).
fn push_degree_block(
    dims: usize,
    remaining: usize,
    prefix: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if dims == 1 {
        let mut exp = prefix.clone();
        exp.push(remaining);
        out.push(exp);
        return;
    }
    for e in (0..=remaining).rev() {
        prefix.push(e);
        push_degree_block(dims - 1, remaining - e, prefix, out);
        prefix.pop();
    }
}

impl MonomialBasis {
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn total_degree(&self) -> usize {
        self.total_degree
    }

    /// Number of monomials M = binomial(m + n, n).
    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Exponent tuples in basis order.
    pub fn exponents(&self) -> &[Vec<usize>] {
        &self.exponents
    }

    /// Writes `pi_j(point)` for all j into `row` using the parent links:
    /// one multiplication per monomial.
    pub fn fill_row<S: Scalar>(&self, point: &[S], row: &mut [S]) {
        debug_assert_eq!(point.len(), self.ambient_dim);
        debug_assert_eq!(row.len(), self.exponents.len());
        row[0] = S::one();
        for j in 1..row.len() {
            let (parent, coord) = self.parents[j];
            row[j] = row[parent] * point[coord];
        }
    }
}

/// Dense collocation matrix `D[i][j] = pi_j(p_i)`, row-major.
#[derive(Debug, Clone)]
pub struct CollocationMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> CollocationMatrix<S> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Collocates every cloud point against the basis.
pub fn build_collocation<S: Scalar>(
    cloud: &PointCloud<S>,
    basis: &MonomialBasis,
) -> Result<CollocationMatrix<S>> {
    if cloud.dim() != basis.ambient_dim() {
        return Err(Error::invalid(format!(
            "cloud dimension {} does not match basis dimension {}",
            cloud.dim(),
            basis.ambient_dim()
        )));
    }
    let cols = basis.len();
    let mut data = vec![S::zero(); cloud.len() * cols];
    for (i, point) in cloud.iter_points().enumerate() {
        basis.fill_row(point, &mut data[i * cols..(i + 1) * cols]);
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "collocation matrix entries".into(),
        });
    }
    Ok(CollocationMatrix {
        rows: cloud.len(),
        cols,
        data,
    })
}

/// Smallest singular value of the collocation matrix and a corresponding
/// right singular vector, sign-normalized so its first significant
/// coefficient is positive.
pub fn svd_smallest<S: Scalar>(matrix: &CollocationMatrix<S>) -> Result<(S, Vec<S>)> {
    if matrix.rows < matrix.cols {
        log::warn!(
            "collocation matrix has fewer rows ({}) than columns ({}); \
             smallest singular value is trivially zero",
            matrix.rows,
            matrix.cols
        );
    }
    let triplet = svd::smallest_singular_triplet(&matrix.data, matrix.rows, matrix.cols)?;
    let mut vector = triplet.vector;
    apply_sign_convention(&mut vector);
    Ok((triplet.sigma, vector))
}

/// Flips the vector so the first coefficient whose magnitude exceeds
/// `1e-9 * max |c|` is positive; disambiguates the +-v pair of singular
/// vectors for reproducible output.
fn apply_sign_convention<S: Scalar>(v: &mut [S]) {
    let max = v.iter().fold(S::zero(), |m, &c| m.max(c.abs()));
    let tol = S::of(1e-9) * max;
    for i in 0..v.len() {
        if v[i].abs() > tol {
            if v[i] < S::zero() {
                for c in v.iter_mut() {
                    *c = -*c;
                }
            }
            return;
        }
    }
}

/// Implicit polynomial fitted to one cloud: unit-norm coefficients over
/// `basis`, with the smallest singular value as the algebraic error measure.
#[derive(Debug, Clone)]
pub struct ImplicitResult<S> {
    pub degree: usize,
    pub coefficients: Vec<S>,
    pub sigma_min: S,
    pub basis: MonomialBasis,
}

impl<S: Scalar> ImplicitResult<S> {
    /// Evaluates the implicit polynomial at a point.
    pub fn evaluate(&self, point: &[S]) -> Result<S> {
        if point.len() != self.basis.ambient_dim() {
            return Err(Error::invalid(format!(
                "point dimension {} does not match basis dimension {}",
                point.len(),
                self.basis.ambient_dim()
            )));
        }
        let mut row = vec![S::zero(); self.basis.len()];
        self.basis.fill_row(point, &mut row);
        Ok(row
            .iter()
            .zip(&self.coefficients)
            .map(|(&p, &c)| p * c)
            .sum())
    }
}

/// Minimum number of samples at which a degree-`m` implicit polynomial is
/// still identifiable: `m^2 + 1` for planar curves, 64 for surfaces.
pub fn min_samples(ambient_dim: usize, degree: usize) -> usize {
    match ambient_dim {
        2 => degree * degree + 1,
        _ => 64,
    }
}

/// Highest implicit degree supported per ambient dimension: full generality
/// for planar curves, quadrics for surfaces (64 samples are only known to
/// suffice up to degree 2).
pub const MAX_SURFACE_DEGREE: usize = 2;

/// Fits the best degree-`degree` implicit polynomial to the cloud and
/// reports how nearly it vanishes (Alg.: collocate, take the SVD, keep the
/// right singular vector of the smallest singular value).
pub fn approximate_implicitize<S: Scalar>(
    cloud: &PointCloud<S>,
    degree: usize,
) -> Result<ImplicitResult<S>> {
    if cloud.dim() == 3 && degree > MAX_SURFACE_DEGREE {
        return Err(Error::UnsupportedDegree {
            degree,
            param_dim: 2,
            reason: format!(
                "surface implicitization is supported up to degree {MAX_SURFACE_DEGREE}"
            ),
        });
    }
    let required = min_samples(cloud.dim(), degree);
    if cloud.len() < required {
        return Err(Error::InsufficientSamples {
            degree,
            required,
            actual: cloud.len(),
        });
    }
    let basis = build_basis(cloud.dim(), degree)?;
    let matrix = build_collocation(cloud, &basis)?;
    let (sigma_min, coefficients) = svd_smallest(&matrix)?;
    Ok(ImplicitResult {
        degree,
        coefficients,
        sigma_min,
        basis,
    })
}
