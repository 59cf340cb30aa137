//! Patches, point clouds and the affine maps that move them around.
//!
//! A [`Patch`] is a rational Bézier curve (one parameter) or tensor-product
//! surface (two parameters) over a box domain. Patches are evaluated through
//! Bernstein basis values in homogeneous coordinates; sampling a patch on a
//! uniform parameter grid produces the [`PointCloud`] that every downstream
//! algorithm operates on.

mod conics;
mod generate;
mod quadrics;

pub use conics::{
    circle_radial_deviation, closed_circle_approx, closed_circle_exact, cubic_arc, hyperbola_segment,
    line_segment, parabola_segment, rational_arc,
};
pub use generate::{
    add_noise, generate_conic_family, generate_gear, generate_quadric_surfaces, rescale_to_unit_box,
    ConicFamilyParams, ConicKind, GearMode, QuadricKind,
};
pub use quadrics::{cone_patch, cylinder_patch, plane_patch, sphere_patch};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tolerance below which an affine map is treated as singular.
const SINGULAR_DET_TOL: f64 = 1e-12;

/// Immutable set of points in R^dim with its center of mass cached.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<S> {
    dim: usize,
    coords: Vec<S>,
    center: Vec<S>,
}

impl<S: Scalar> PointCloud<S> {
    /// Wraps a flat coordinate buffer (`len = n_points * dim`).
    pub fn new(dim: usize, coords: Vec<S>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point cloud dimension must be positive"));
        }
        if coords.is_empty() {
            return Err(Error::invalid("point cloud must hold at least one point"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "coordinate buffer length {} is not a multiple of dim {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { context: "point cloud coordinates".into() });
        }
        let n = coords.len() / dim;
        let inv = S::of(1.0) / S::from_usize(n).expect("point count fits scalar");
        let mut center = vec![S::zero(); dim];
        for p in coords.chunks_exact(dim) {
            for (c, &x) in center.iter_mut().zip(p) {
                *c = *c + x;
            }
        }
        for c in &mut center {
            *c = *c * inv;
        }
        Ok(Self { dim, coords, center })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty clouds
    }

    pub fn point(&self, i: usize) -> &[S] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[S]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    /// Componentwise mean of the points, cached at construction.
    pub fn center_of_mass(&self) -> &[S] {
        &self.center
    }

    /// Euclidean distance between the centers of mass of two clouds.
    pub fn center_distance(&self, other: &Self) -> Result<S> {
        if self.dim != other.dim {
            return Err(Error::invalid(format!(
                "cannot compare centers of a {}-d and a {}-d cloud",
                self.dim, other.dim
            )));
        }
        let sq = self
            .center
            .iter()
            .zip(&other.center)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<S>();
        Ok(sq.sqrt())
    }

    /// Concatenation of two clouds of the same dimension (multiset union).
    pub fn joined(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::invalid(format!(
                "cannot join a {}-d cloud with a {}-d cloud",
                self.dim, other.dim
            )));
        }
        let mut coords = Vec::with_capacity(self.coords.len() + other.coords.len());
        coords.extend_from_slice(&self.coords);
        coords.extend_from_slice(&other.coords);
        Self::new(self.dim, coords)
    }
}

/// Affine map `x -> A x + t` on R^dim.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap<S> {
    dim: usize,
    linear: Vec<S>, // row-major dim x dim
    translation: Vec<S>,
}

impl<S: Scalar> AffineMap<S> {
    pub fn new(dim: usize, linear: Vec<S>, translation: Vec<S>) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::invalid(format!("affine maps support dim 2 or 3, got {dim}")));
        }
        if linear.len() != dim * dim || translation.len() != dim {
            return Err(Error::invalid("affine map buffer sizes do not match dim"));
        }
        if linear.iter().chain(&translation).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { context: "affine map entries".into() });
        }
        Ok(Self { dim, linear, translation })
    }

    pub fn identity(dim: usize) -> Self {
        let mut linear = vec![S::zero(); dim * dim];
        for i in 0..dim {
            linear[i * dim + i] = S::one();
        }
        Self { dim, linear, translation: vec![S::zero(); dim] }
    }

    /// Counterclockwise rotation of the plane about the origin.
    pub fn rotation_2d(theta: S) -> Self {
        let (s, c) = (theta.sin(), theta.cos());
        Self { dim: 2, linear: vec![c, -s, s, c], translation: vec![S::zero(); 2] }
    }

    /// Axis-aligned scaling by per-axis factors.
    pub fn scaling(factors: &[S]) -> Result<Self> {
        let dim = factors.len();
        let mut m = Self::identity(dim);
        if !(2..=3).contains(&dim) {
            return Err(Error::invalid("scaling supports dim 2 or 3"));
        }
        for (i, &f) in factors.iter().enumerate() {
            m.linear[i * dim + i] = f;
        }
        Ok(m)
    }

    pub fn uniform_scaling(dim: usize, factor: S) -> Self {
        let mut m = Self::identity(dim);
        for i in 0..dim {
            m.linear[i * dim + i] = factor;
        }
        m
    }

    pub fn translation_by(shift: &[S]) -> Result<Self> {
        let mut m = Self::identity(shift.len());
        if !(2..=3).contains(&shift.len()) {
            return Err(Error::invalid("translation supports dim 2 or 3"));
        }
        m.translation = shift.to_vec();
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, p: &[S]) -> Vec<S> {
        let d = self.dim;
        let mut out = self.translation.clone();
        for i in 0..d {
            for j in 0..d {
                out[i] = out[i] + self.linear[i * d + j] * p[j];
            }
        }
        out
    }

    /// Composition `self ∘ inner` (apply `inner` first).
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if self.dim != inner.dim {
            return Err(Error::invalid("cannot compose affine maps of different dims"));
        }
        let d = self.dim;
        let mut linear = vec![S::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    linear[i * d + j] = linear[i * d + j] + self.linear[i * d + k] * inner.linear[k * d + j];
                }
            }
        }
        let translation = self.apply(&inner.translation);
        Ok(Self { dim: d, linear, translation })
    }

    pub fn det(&self) -> S {
        let m = &self.linear;
        match self.dim {
            2 => m[0] * m[3] - m[1] * m[2],
            3 => {
                m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                    + m[2] * (m[3] * m[7] - m[4] * m[6])
            }
            _ => unreachable!("dims are validated at construction"),
        }
    }
}

/// Rational Bézier curve or tensor-product surface over a box domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch<S> {
    ambient_dim: usize,
    param_dim: usize,
    degree: Vec<usize>,
    domain: Vec<(S, S)>,
    control_points: Vec<S>, // flat, n_ctrl * ambient_dim
    weights: Option<Vec<S>>,
}

impl<S: Scalar> Patch<S> {
    /// Validates and builds a patch.
    ///
    /// Curves live in the plane (`ambient_dim = 2`, one parameter), surfaces
    /// in space (`ambient_dim = 3`, two parameters). The control net must
    /// hold exactly `prod(degree_k + 1)` points; weights, when present, must
    /// be strictly positive.
    pub fn new(
        ambient_dim: usize,
        degree: Vec<usize>,
        domain: Vec<(S, S)>,
        control_points: Vec<S>,
        weights: Option<Vec<S>>,
    ) -> Result<Self> {
        if !(2..=3).contains(&ambient_dim) {
            return Err(Error::Schema(format!("ambient_dim must be 2 or 3, got {ambient_dim}")));
        }
        let param_dim = ambient_dim - 1;
        if degree.len() != param_dim {
            return Err(Error::Schema(format!(
                "a {ambient_dim}-d patch needs {param_dim} degree entries, got {}",
                degree.len()
            )));
        }
        if degree.iter().any(|&d| d == 0) {
            return Err(Error::Schema("parametric degree entries must be at least 1".into()));
        }
        if domain.len() != param_dim {
            return Err(Error::Schema(format!(
                "a {ambient_dim}-d patch needs {param_dim} domain intervals, got {}",
                domain.len()
            )));
        }
        for &(a, b) in &domain {
            if !a.is_finite() || !b.is_finite() || a >= b {
                return Err(Error::Schema("domain intervals must be finite with a < b".into()));
            }
        }
        let n_ctrl: usize = degree.iter().map(|d| d + 1).product();
        if control_points.len() != n_ctrl * ambient_dim {
            return Err(Error::Schema(format!(
                "expected {n_ctrl} control points ({} coords), got {} coords",
                n_ctrl * ambient_dim,
                control_points.len()
            )));
        }
        if control_points.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { context: "control points".into() });
        }
        if let Some(w) = &weights {
            if w.len() != n_ctrl {
                return Err(Error::Schema(format!("expected {n_ctrl} weights, got {}", w.len())));
            }
            if w.iter().any(|x| !x.is_finite() || *x <= S::zero()) {
                return Err(Error::Schema("weights must be finite and strictly positive".into()));
            }
        }
        Ok(Self { ambient_dim, param_dim, degree, domain, control_points, weights })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn degree(&self) -> &[usize] {
        &self.degree
    }

    pub fn domain(&self) -> &[(S, S)] {
        &self.domain
    }

    pub fn control_points(&self) -> &[S] {
        &self.control_points
    }

    pub fn weights(&self) -> Option<&[S]> {
        self.weights.as_deref()
    }

    pub fn num_control_points(&self) -> usize {
        self.control_points.len() / self.ambient_dim
    }

    pub fn is_rational(&self) -> bool {
        self.weights.is_some()
    }

    /// Evaluates the patch at parameter `s` (must lie inside the domain).
    ///
    /// Bernstein basis values are accumulated over the weighted control net
    /// in homogeneous coordinates, followed by the perspective division.
    pub fn evaluate(&self, s: &[S]) -> Result<Vec<S>> {
        if s.len() != self.param_dim {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.param_dim,
                s.len()
            )));
        }
        let mut local = Vec::with_capacity(self.param_dim);
        for (k, (&sk, &(a, b))) in s.iter().zip(&self.domain).enumerate() {
            let span = b - a;
            let slack = S::epsilon() * S::of(8.0) * span.abs().max(S::one());
            if sk < a - slack || sk > b + slack {
                return Err(Error::ParamOutsideDomain {
                    param: s.iter().map(|x| x.to_f64_lossy()).collect(),
                    domain: self
                        .domain
                        .iter()
                        .map(|&(lo, hi)| (lo.to_f64_lossy(), hi.to_f64_lossy()))
                        .collect(),
                });
            }
            let t = ((sk - a) / span).max(S::zero()).min(S::one());
            let _ = k;
            local.push(t);
        }

        let dim = self.ambient_dim;
        match self.param_dim {
            1 => {
                let basis = bernstein_values(self.degree[0], local[0]);
                let mut hom = vec![S::zero(); dim + 1];
                for (i, &b) in basis.iter().enumerate() {
                    let w = self.weight_at(i);
                    let bw = b * w;
                    for d in 0..dim {
                        hom[d] = hom[d] + bw * self.control_points[i * dim + d];
                    }
                    hom[dim] = hom[dim] + bw;
                }
                Ok(hom[..dim].iter().map(|&x| x / hom[dim]).collect())
            }
            2 => {
                let bu = bernstein_values(self.degree[0], local[0]);
                let bv = bernstein_values(self.degree[1], local[1]);
                let nv = self.degree[1] + 1;
                let mut hom = vec![S::zero(); dim + 1];
                for (i, &bui) in bu.iter().enumerate() {
                    for (j, &bvj) in bv.iter().enumerate() {
                        let idx = i * nv + j;
                        let bw = bui * bvj * self.weight_at(idx);
                        for d in 0..dim {
                            hom[d] = hom[d] + bw * self.control_points[idx * dim + d];
                        }
                        hom[dim] = hom[dim] + bw;
                    }
                }
                Ok(hom[..dim].iter().map(|&x| x / hom[dim]).collect())
            }
            _ => unreachable!("param_dim validated at construction"),
        }
    }

    fn weight_at(&self, i: usize) -> S {
        match &self.weights {
            Some(w) => w[i],
            None => S::one(),
        }
    }

    /// Samples the patch on a uniform inclusive grid of `samples_per_dim`
    /// points per parameter axis (curves: `k` points; surfaces: `k^2`).
    pub fn sample_grid(&self, samples_per_dim: usize) -> Result<PointCloud<S>> {
        if samples_per_dim < 2 {
            return Err(Error::invalid("sampling needs at least 2 points per axis"));
        }
        let steps: Vec<Vec<S>> = self
            .domain
            .iter()
            .map(|&(a, b)| {
                let denom = S::from_usize(samples_per_dim - 1).expect("grid size fits scalar");
                (0..samples_per_dim)
                    .map(|i| {
                        let f = S::from_usize(i).expect("grid index fits scalar") / denom;
                        a + (b - a) * f
                    })
                    .collect()
            })
            .collect();
        let n = samples_per_dim.pow(self.param_dim as u32);
        let mut coords = Vec::with_capacity(n * self.ambient_dim);
        match self.param_dim {
            1 => {
                for &t in &steps[0] {
                    coords.extend(self.evaluate(&[t])?);
                }
            }
            2 => {
                for &u in &steps[0] {
                    for &v in &steps[1] {
                        coords.extend(self.evaluate(&[u, v])?);
                    }
                }
            }
            _ => unreachable!(),
        }
        PointCloud::new(self.ambient_dim, coords)
    }

    /// Applies an invertible affine map to the patch (control points move,
    /// weights and domain stay).
    pub fn transformed(&self, map: &AffineMap<S>) -> Result<Self> {
        if map.dim() != self.ambient_dim {
            return Err(Error::invalid(format!(
                "cannot apply a {}-d map to a {}-d patch",
                map.dim(),
                self.ambient_dim
            )));
        }
        let det = map.det();
        if det.abs() < S::of(SINGULAR_DET_TOL) {
            return Err(Error::SingularTransform { det: det.to_f64_lossy() });
        }
        let dim = self.ambient_dim;
        let mut control_points = Vec::with_capacity(self.control_points.len());
        for p in self.control_points.chunks_exact(dim) {
            control_points.extend(map.apply(p));
        }
        Ok(Self { control_points, ..self.clone() })
    }
}

/// Splits a curve patch at the local parameter `u` in (0, 1).
///
/// Both halves trace the same image as the original over the matching
/// domain parts; rational curves are split in homogeneous coordinates so
/// the weights stay positive.
pub fn subdivide_curve<S: Scalar>(patch: &Patch<S>, u: S) -> Result<(Patch<S>, Patch<S>)> {
    if patch.param_dim() != 1 {
        return Err(Error::invalid("subdivision is defined for curve patches"));
    }
    if !(u > S::zero() && u < S::one()) {
        return Err(Error::invalid("split parameter must lie strictly inside (0, 1)"));
    }
    let dim = patch.ambient_dim();
    let n = patch.degree()[0];
    // Homogeneous control rows (w*x, .., w); the de Casteljau triangle edges
    // are exactly the control rows of the two halves.
    let mut rows: Vec<Vec<S>> = (0..=n)
        .map(|i| {
            let w = patch.weights().map_or(S::one(), |ws| ws[i]);
            let mut row: Vec<S> = patch.control_points()[i * dim..(i + 1) * dim]
                .iter()
                .map(|&c| c * w)
                .collect();
            row.push(w);
            row
        })
        .collect();
    let mut left = vec![rows[0].clone()];
    let mut right = vec![rows[n].clone()];
    let v = S::one() - u;
    for level in 1..=n {
        for i in 0..=(n - level) {
            rows[i] = rows[i]
                .iter()
                .zip(&rows[i + 1])
                .map(|(&a, &b)| v * a + u * b)
                .collect();
        }
        left.push(rows[0].clone());
        right.push(rows[n - level].clone());
    }
    right.reverse();

    let (a, b) = patch.domain()[0];
    let mid = a + (b - a) * u;
    let rational = patch.is_rational();
    let build = |rows: Vec<Vec<S>>, dom: (S, S)| -> Result<Patch<S>> {
        let mut control = Vec::with_capacity((n + 1) * dim);
        let mut weights = Vec::with_capacity(n + 1);
        for row in rows {
            let w = row[dim];
            if !(w > S::zero()) {
                return Err(Error::invalid("subdivision produced a nonpositive weight"));
            }
            control.extend(row[..dim].iter().map(|&c| c / w));
            weights.push(w);
        }
        Patch::new(dim, vec![n], vec![dom], control, rational.then_some(weights))
    };
    Ok((build(left, (a, mid))?, build(right, (mid, b))?))
}

/// Bernstein basis values `B_i^n(t)` for `i = 0..=n` via the stable
/// triangular recurrence.
pub fn bernstein_values<S: Scalar>(n: usize, t: S) -> Vec<S> {
    let u = S::one() - t;
    let mut b = vec![S::zero(); n + 1];
    b[0] = S::one();
    for j in 1..=n {
        b[j] = t * b[j - 1];
        for i in (1..j).rev() {
            b[i] = t * b[i - 1] + u * b[i];
        }
        b[0] = u * b[0];
    }
    b
}

/// Patch collection with optional per-patch ground truth.
#[derive(Debug, Clone)]
pub struct LabeledDataset<S> {
    pub ambient_dim: usize,
    pub patches: Vec<Patch<S>>,
    /// Primitive index per patch (same label = same underlying primitive).
    pub truth_labels: Option<Vec<usize>>,
    /// Implicit degree of the underlying primitive per patch.
    pub truth_degrees: Option<Vec<usize>>,
}

impl<S: Scalar> LabeledDataset<S> {
    pub fn new(
        ambient_dim: usize,
        patches: Vec<Patch<S>>,
        truth_labels: Option<Vec<usize>>,
        truth_degrees: Option<Vec<usize>>,
    ) -> Result<Self> {
        if patches.iter().any(|p| p.ambient_dim() != ambient_dim) {
            return Err(Error::Schema("all patches must share the dataset ambient_dim".into()));
        }
        for (name, field) in [("truth_labels", &truth_labels), ("truth_degrees", &truth_degrees)] {
            if let Some(v) = field {
                if v.len() != patches.len() {
                    return Err(Error::Schema(format!(
                        "{name} has {} entries for {} patches",
                        v.len(),
                        patches.len()
                    )));
                }
            }
        }
        Ok(Self { ambient_dim, patches, truth_labels, truth_degrees })
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// Samples every patch, producing the cloud set the pipeline operates on.
    /// `samples_per_dim = None` picks the per-patch default for `m_cap`.
    pub fn sample(&self, samples_per_dim: Option<usize>, m_cap: usize) -> Result<SampledDataset<S>> {
        let clouds = self
            .patches
            .iter()
            .map(|p| {
                let k = samples_per_dim.unwrap_or_else(|| default_samples_per_dim(p.param_dim(), m_cap));
                p.sample_grid(k)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SampledDataset {
            ambient_dim: self.ambient_dim,
            clouds,
            truth_labels: self.truth_labels.clone(),
            truth_degrees: self.truth_degrees.clone(),
        })
    }
}

/// Per-parameter-axis sample count that keeps every implicit degree up to
/// `m_cap` identifiable: curves need `m_cap^2 + 1` points (never fewer than
/// 16), surfaces use an 8x8 grid.
pub fn default_samples_per_dim(param_dim: usize, m_cap: usize) -> usize {
    match param_dim {
        1 => (m_cap * m_cap + 1).max(16),
        _ => 8,
    }
}

/// Sampled point clouds with the ground truth carried along.
#[derive(Debug, Clone)]
pub struct SampledDataset<S> {
    pub ambient_dim: usize,
    pub clouds: Vec<PointCloud<S>>,
    pub truth_labels: Option<Vec<usize>>,
    pub truth_degrees: Option<Vec<usize>>,
}

impl<S: Scalar> SampledDataset<S> {
    pub fn len(&self) -> usize {
        self.clouds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clouds.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Test oracle: de Casteljau evaluation by repeated lerping of
    /// homogeneous control points, independent of the Bernstein-basis route
    /// used by `Patch::evaluate`.
    fn de_casteljau_curve(patch: &Patch<f64>, s: f64) -> Vec<f64> {
        let (a, b) = patch.domain()[0];
        let t = (s - a) / (b - a);
        let dim = patch.ambient_dim();
        let n = patch.num_control_points();
        let mut pts: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let w = patch.weights().map_or(1.0, |ws| ws[i]);
                let mut h: Vec<f64> =
                    patch.control_points()[i * dim..(i + 1) * dim].iter().map(|&c| c * w).collect();
                h.push(w);
                h
            })
            .collect();
        for level in (1..n).rev() {
            for i in 0..level {
                for d in 0..=dim {
                    pts[i][d] = (1.0 - t) * pts[i][d] + t * pts[i + 1][d];
                }
            }
        }
        (0..dim).map(|d| pts[0][d] / pts[0][dim]).collect()
    }

    fn de_casteljau_surface(patch: &Patch<f64>, u: f64, v: f64) -> Vec<f64> {
        // Collapse the v direction per row with de Casteljau, then the u direction.
        let (du, dv) = (patch.degree()[0], patch.degree()[1]);
        let (a0, b0) = patch.domain()[0];
        let (a1, b1) = patch.domain()[1];
        let (tu, tv) = ((u - a0) / (b0 - a0), (v - a1) / (b1 - a1));
        let dim = patch.ambient_dim();
        let nv = dv + 1;
        let lerp_chain = |mut pts: Vec<Vec<f64>>, t: f64| {
            for level in (1..pts.len()).rev() {
                for i in 0..level {
                    for d in 0..pts[i].len() {
                        pts[i][d] = (1.0 - t) * pts[i][d] + t * pts[i + 1][d];
                    }
                }
            }
            pts.swap_remove(0)
        };
        let rows: Vec<Vec<f64>> = (0..=du)
            .map(|i| {
                let row: Vec<Vec<f64>> = (0..=dv)
                    .map(|j| {
                        let idx = i * nv + j;
                        let w = patch.weights().map_or(1.0, |ws| ws[idx]);
                        let mut h: Vec<f64> = patch.control_points()[idx * dim..(idx + 1) * dim]
                            .iter()
                            .map(|&c| c * w)
                            .collect();
                        h.push(w);
                        h
                    })
                    .collect();
                lerp_chain(row, tv)
            })
            .collect();
        let h = lerp_chain(rows, tu);
        (0..dim).map(|d| h[d] / h[dim]).collect()
    }

    fn random_curve(rng: &mut ChaCha8Rng, degree: usize, rational: bool) -> Patch<f64> {
        let n = degree + 1;
        let control: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let weights = rational.then(|| (0..n).map(|_| rng.gen_range(0.3..3.0)).collect());
        Patch::new(2, vec![degree], vec![(-0.5, 1.5)], control, weights).unwrap()
    }

    #[test]
    fn curve_evaluation_matches_de_casteljau_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..100 {
            let degree = rng.gen_range(1..=15);
            let rational = rng.gen_bool(0.5);
            let patch = random_curve(&mut rng, degree, rational);
            let s = rng.gen_range(-0.5..1.5);
            let got = patch.evaluate(&[s]).unwrap();
            let want = de_casteljau_curve(&patch, s);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "trial {trial}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn surface_evaluation_matches_de_casteljau_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for trial in 0..60 {
            let (du, dv) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
            let n = (du + 1) * (dv + 1);
            let control: Vec<f64> = (0..3 * n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let rational = rng.gen_bool(0.5);
            let weights = rational.then(|| (0..n).map(|_| rng.gen_range(0.3..3.0)).collect());
            let patch =
                Patch::new(3, vec![du, dv], vec![(0.0, 1.0), (-1.0, 1.0)], control, weights).unwrap();
            let (u, v) = (rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0));
            let got = patch.evaluate(&[u, v]).unwrap();
            let want = de_casteljau_surface(&patch, u, v);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "trial {trial}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn subdivision_preserves_the_curve() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for trial in 0..60 {
            let degree = rng.gen_range(1..=8);
            let rational = rng.gen_bool(0.5);
            let patch = random_curve(&mut rng, degree, rational);
            let u = rng.gen_range(0.05..0.95);
            let (left, right) = subdivide_curve(&patch, u).unwrap();
            let (a, b) = patch.domain()[0];
            let mid = a + (b - a) * u;
            assert_eq!(left.domain()[0], (a, mid));
            assert_eq!(right.domain()[0], (mid, b));
            for i in 0..=20 {
                let t = a + (b - a) * (i as f64 / 20.0);
                let want = patch.evaluate(&[t]).unwrap();
                let half = if t <= mid { &left } else { &right };
                let got = half.evaluate(&[t]).unwrap();
                for (g, w) in got.iter().zip(&want) {
                    assert!((g - w).abs() < 1e-10, "trial {trial} at t={t}: {g} vs {w}");
                }
            }
        }
    }

    #[test]
    fn subdivision_rejects_bad_inputs() {
        let patch = Patch::new(2, vec![1], vec![(0.0, 1.0)], vec![0.0, 0.0, 1.0, 1.0], None).unwrap();
        assert!(subdivide_curve(&patch, 0.0).is_err());
        assert!(subdivide_curve(&patch, 1.0).is_err());
        let surf = Patch::new(
            3,
            vec![1, 1],
            vec![(0.0, 1.0), (0.0, 1.0)],
            vec![0.0; 12],
            None,
        )
        .unwrap();
        assert!(subdivide_curve(&surf, 0.5).is_err());
    }

    #[test]
    fn evaluation_hits_curve_endpoints() {
        let patch =
            Patch::new(2, vec![2], vec![(0.0, 2.0)], vec![0.0, 0.0, 1.0, 3.0, 2.0, 0.0], None).unwrap();
        assert_eq!(patch.evaluate(&[0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(patch.evaluate(&[2.0]).unwrap(), vec![2.0, 0.0]);
    }

    #[test]
    fn evaluation_outside_domain_errors() {
        let patch = Patch::new(2, vec![1], vec![(0.0, 1.0)], vec![0.0, 0.0, 1.0, 1.0], None).unwrap();
        assert!(matches!(
            patch.evaluate(&[1.01]),
            Err(Error::ParamOutsideDomain { .. })
        ));
        assert!(patch.evaluate(&[-0.2]).is_err());
    }

    #[test]
    fn reversing_control_points_reverses_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let degree = rng.gen_range(1..=6);
            let rational = rng.gen_bool(0.5);
            let patch = random_curve(&mut rng, degree, rational);
            let n = patch.num_control_points();
            let mut rev_ctrl = vec![0.0; 2 * n];
            for i in 0..n {
                rev_ctrl[2 * i] = patch.control_points()[2 * (n - 1 - i)];
                rev_ctrl[2 * i + 1] = patch.control_points()[2 * (n - 1 - i) + 1];
            }
            let rev_w = patch.weights().map(|w| w.iter().rev().cloned().collect());
            let rev =
                Patch::new(2, patch.degree().to_vec(), patch.domain().to_vec(), rev_ctrl, rev_w).unwrap();
            let k = 9;
            let cloud = patch.sample_grid(k).unwrap();
            let rcloud = rev.sample_grid(k).unwrap();
            for i in 0..k {
                let p = cloud.point(i);
                let q = rcloud.point(k - 1 - i);
                assert!((p[0] - q[0]).abs() < 1e-14 && (p[1] - q[1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sample_grid_counts_and_order() {
        let patch =
            Patch::new(2, vec![1], vec![(0.0, 1.0)], vec![0.0f64, 0.0, 1.0, 0.0], None).unwrap();
        let cloud = patch.sample_grid(5).unwrap();
        assert_eq!(cloud.len(), 5);
        assert!((cloud.point(2)[0] - 0.5).abs() < 1e-15, "ascending parameter order");

        let plane = Patch::new(
            3,
            vec![1, 1],
            vec![(0.0, 1.0), (0.0, 1.0)],
            vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0],
            None,
        )
        .unwrap();
        let grid = plane.sample_grid(3).unwrap();
        assert_eq!(grid.len(), 9);
        // Row-major: first axis outer, second inner.
        assert_eq!(grid.point(1), &[0.0, 0.5, 0.0]);
        assert_eq!(grid.point(3), &[0.5, 0.0, 0.0]);
    }

    #[test]
    fn center_of_mass_matches_compensated_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let n = rng.gen_range(1..200);
            let coords: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1e3..1e3)).collect();
            let cloud = PointCloud::new(2, coords.clone()).unwrap();
            // Kahan-compensated mean as the oracle.
            for d in 0..2 {
                let (mut sum, mut c) = (0.0f64, 0.0f64);
                for i in 0..n {
                    let y = coords[2 * i + d] - c;
                    let t = sum + y;
                    c = (t - sum) - y;
                    sum = t;
                }
                let want = sum / n as f64;
                let got = cloud.center_of_mass()[d];
                let scale = want.abs().max(1.0);
                assert!((got - want).abs() < 1e-14 * scale, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn cloud_construction_rejects_bad_input() {
        assert!(PointCloud::<f64>::new(2, vec![]).is_err());
        assert!(PointCloud::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(PointCloud::new(2, vec![1.0, f64::NAN]).is_err());
        assert!(PointCloud::new(0, vec![1.0]).is_err());
    }

    #[test]
    fn joined_concatenates_and_center_distance_is_euclidean() {
        let a = PointCloud::new(2, vec![0.0f64, 0.0, 2.0, 0.0]).unwrap();
        let b = PointCloud::new(2, vec![4.0, 4.0]).unwrap();
        let j = a.joined(&b).unwrap();
        assert_eq!(j.len(), 3);
        assert_eq!(j.point(2), &[4.0, 4.0]);
        let d = a.center_distance(&b).unwrap();
        assert!((d - 5.0).abs() < 1e-15); // (1,0) to (4,4)
    }

    #[test]
    fn affine_compose_apply_and_det() {
        let r = AffineMap::rotation_2d(std::f64::consts::FRAC_PI_2);
        let t = AffineMap::translation_by(&[1.0, 0.0]).unwrap();
        let m = t.compose(&r).unwrap(); // rotate then shift
        let p = m.apply(&[1.0, 0.0]);
        assert!((p[0] - 1.0).abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
        assert!((m.det() - 1.0).abs() < 1e-15);
        let s = AffineMap::scaling(&[2.0f64, -3.0]).unwrap();
        assert!((s.det() + 6.0).abs() < 1e-15);
    }

    #[test]
    fn singular_transform_is_rejected() {
        let patch = Patch::new(2, vec![1], vec![(0.0, 1.0)], vec![0.0, 0.0, 1.0, 1.0], None).unwrap();
        let collapse = AffineMap::scaling(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            patch.transformed(&collapse),
            Err(Error::SingularTransform { .. })
        ));
    }

    #[test]
    fn transform_commutes_with_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let degree = rng.gen_range(1..=5);
            let rational = rng.gen_bool(0.5);
            let patch = random_curve(&mut rng, degree, rational);
            let map = AffineMap::translation_by(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .unwrap()
                .compose(&AffineMap::rotation_2d(rng.gen_range(0.0..6.28)))
                .unwrap()
                .compose(&AffineMap::scaling(&[rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)]).unwrap())
                .unwrap();
            let moved = patch.transformed(&map).unwrap();
            let s = rng.gen_range(-0.5..1.5);
            let a = map.apply(&patch.evaluate(&[s]).unwrap());
            let b = moved.evaluate(&[s]).unwrap();
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn patch_validation_rejects_malformed_input() {
        // Wrong control point count.
        assert!(Patch::<f64>::new(2, vec![2], vec![(0.0, 1.0)], vec![0.0; 4], None).is_err());
        // Nonpositive weight.
        assert!(Patch::new(2, vec![1], vec![(0.0, 1.0)], vec![0.0; 4], Some(vec![1.0, 0.0])).is_err());
        // Degenerate domain.
        assert!(Patch::<f64>::new(2, vec![1], vec![(1.0, 1.0)], vec![0.0; 4], None).is_err());
        // Degree zero.
        assert!(Patch::<f64>::new(2, vec![0], vec![(0.0, 1.0)], vec![0.0; 2], None).is_err());
        // Ambient dim 4.
        assert!(Patch::<f64>::new(4, vec![1, 1, 1], vec![(0.0, 1.0); 3], vec![0.0; 32], None).is_err());
    }

    #[test]
    fn bernstein_values_sum_to_one_and_match_binomial_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.gen_range(1..=16);
            let t: f64 = rng.gen_range(0.0..1.0);
            let b = bernstein_values(n, t);
            let sum: f64 = b.iter().sum();
            assert!((sum - 1.0).abs() < 1e-13);
            // Direct binomial formula as the oracle.
            let mut binom = 1.0f64;
            for (i, &bi) in b.iter().enumerate() {
                let direct = binom * t.powi(i as i32) * (1.0 - t).powi((n - i) as i32);
                assert!((bi - direct).abs() < 1e-12, "n={n} i={i}");
                binom *= (n - i) as f64 / (i + 1) as f64;
            }
        }
    }

    #[test]
    fn dataset_sampling_uses_degree_cap_default() {
        assert_eq!(default_samples_per_dim(1, 4), 17);
        assert_eq!(default_samples_per_dim(1, 3), 16);
        assert_eq!(default_samples_per_dim(2, 4), 8);
        let patch = Patch::new(2, vec![1], vec![(0.0, 1.0)], vec![0.0, 0.0, 1.0, 1.0], None).unwrap();
        let ds = LabeledDataset::new(2, vec![patch], None, None).unwrap();
        let sampled = ds.sample(None, 4).unwrap();
        assert_eq!(sampled.clouds[0].len(), 17);
    }

    #[test]
    fn f32_evaluation_works() {
        let patch =
            Patch::<f32>::new(2, vec![1], vec![(0.0, 1.0)], vec![0.0, 0.0, 2.0, 2.0], None).unwrap();
        let p = patch.evaluate(&[0.5]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-6);
    }
}
