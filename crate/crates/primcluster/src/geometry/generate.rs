//! Synthetic dataset generators: random conic families, the segmented gear
//! benchmark, random quadric surfaces, sampling noise and unit-box rescaling.
//!
//! Every generator is a pure function of its arguments and seed; repeated
//! calls produce byte-identical datasets. Ground-truth labels identify the
//! underlying primitive of each patch, computed by normalizing the
//! primitive's implicit coefficient vector (unit 2-norm, leading significant
//! coefficient positive) and deduplicating with tolerance 1e-9.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    closed_circle_approx, closed_circle_exact, cone_patch, cubic_arc, cylinder_patch,
    hyperbola_segment, line_segment, parabola_segment, plane_patch, rational_arc, sphere_patch,
    AffineMap, LabeledDataset, Patch, SampledDataset,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Arc representation used by [`generate_gear`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GearMode {
    /// Rational quadratic arcs and a degree-15 rational closed circle;
    /// every sampled point lies on its circle to round-off.
    Exact,
    /// Standard polynomial cubic arc approximation and a degree-10
    /// polynomial closed circle.
    CubicBezier,
}

/// Conic type drawn (with equal probability unless forced) by
/// [`generate_conic_family`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConicKind {
    Line,
    Parabola,
    Ellipse,
    Hyperbola,
}

const CONIC_KINDS: [ConicKind; 4] = [
    ConicKind::Line,
    ConicKind::Parabola,
    ConicKind::Ellipse,
    ConicKind::Hyperbola,
];

/// Parameters of [`generate_conic_family`].
#[derive(Debug, Clone)]
pub struct ConicFamilyParams {
    pub num_curves: usize,
    /// Inclusive range of subsegments drawn per curve.
    pub segments_per_curve: (usize, usize),
    pub seed: u64,
    /// Draw every curve as this kind instead of uniformly at random.
    pub forced_kind: Option<ConicKind>,
}

impl ConicFamilyParams {
    pub fn new(num_curves: usize, segments_per_curve: (usize, usize), seed: u64) -> Self {
        Self {
            num_curves,
            segments_per_curve,
            seed,
            forced_kind: None,
        }
    }
}

/// Random family of lines and conics, each sampled as several disjoint exact
/// subsegments.
///
/// Each curve starts from a canonical form (`y = x^2`, `x^2 + y^2 = 1`,
/// `x^2 - y^2 = 1`, `y = 0`), then a rotation about the origin, an axis
/// dilation with factors in `[0.5, 2]` and a translation in `[-1, 1]^2` are
/// applied. Subsegments are disjoint parameter subintervals of length at
/// least 0.1. The assembled dataset is rescaled into the unit box; labels
/// are source-curve indices, truth degree is 1 for lines and 2 otherwise.
pub fn generate_conic_family<S: Scalar>(params: &ConicFamilyParams) -> Result<LabeledDataset<S>> {
    let (seg_lo, seg_hi) = params.segments_per_curve;
    if params.num_curves == 0 {
        return Err(Error::invalid("conic family needs at least one curve"));
    }
    if seg_lo == 0 || seg_lo > seg_hi {
        return Err(Error::invalid(
            "segments_per_curve must be a nonempty range starting at 1 or more",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let two_pi = S::of(std::f64::consts::TAU);
    let mut patches = Vec::new();
    let mut labels = Vec::new();
    let mut degrees = Vec::new();
    for curve in 0..params.num_curves {
        let kind = params
            .forced_kind
            .unwrap_or_else(|| CONIC_KINDS[rng.gen_range(0..CONIC_KINDS.len())]);
        let theta = S::sample_uniform(&mut rng, S::zero(), two_pi);
        let a1 = S::sample_uniform(&mut rng, S::of(0.5), S::of(2.0));
        let a2 = S::sample_uniform(&mut rng, S::of(0.5), S::of(2.0));
        let tx = S::sample_uniform(&mut rng, -S::one(), S::one());
        let ty = S::sample_uniform(&mut rng, -S::one(), S::one());
        let map = AffineMap::translation_by(&[tx, ty])?
            .compose(&AffineMap::scaling(&[a1, a2])?.compose(&AffineMap::rotation_2d(theta))?)?;
        let count = rng.gen_range(seg_lo..=seg_hi);

        // Master parameter interval and longest admissible subsegment; the
        // ellipse runs over a full randomly phased turn, arcs stay below the
        // rational-quadratic span limit.
        let (lo, hi, max_len) = match kind {
            ConicKind::Line | ConicKind::Parabola => (-S::one(), S::one(), S::of(0.8)),
            ConicKind::Hyperbola => (-S::of(0.75), S::of(0.75), S::of(0.5)),
            ConicKind::Ellipse => {
                let phase = S::sample_uniform(&mut rng, S::zero(), two_pi);
                (phase, phase + two_pi, S::of(2.0))
            }
        };
        let intervals = disjoint_subintervals(&mut rng, lo, hi, count, S::of(0.1), max_len)?;
        for (t0, t1) in intervals {
            let canonical = match kind {
                ConicKind::Line => line_segment([t0, S::zero()], [t1, S::zero()])?,
                ConicKind::Parabola => parabola_segment(t0, t1)?,
                ConicKind::Hyperbola => hyperbola_segment(t0, t1)?,
                ConicKind::Ellipse => {
                    rational_arc([S::zero(), S::zero()], S::one(), t0, t1)?
                }
            };
            patches.push(canonical.transformed(&map)?);
            labels.push(curve);
            degrees.push(if kind == ConicKind::Line { 1 } else { 2 });
        }
    }
    let dataset = LabeledDataset::new(2, patches, Some(labels), Some(degrees))?;
    Ok(rescale_to_unit_box(&dataset)?.0)
}

/// Draws `count` disjoint subintervals of `[lo, hi]`, each of length in
/// `[min_len, max_len]`, separated by random gaps. Lengths are capped so the
/// intervals occupy at most 90% of the master interval.
fn disjoint_subintervals<S: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    lo: S,
    hi: S,
    count: usize,
    min_len: S,
    max_len: S,
) -> Result<Vec<(S, S)>> {
    let span = hi - lo;
    let budget = S::of(0.9) * span / S::from_usize(count).expect("count fits scalar");
    let cap = max_len.min(budget);
    if cap < min_len {
        return Err(Error::invalid(format!(
            "cannot fit {count} disjoint subsegments of length >= {} in a span of {}",
            min_len.to_f64_lossy(),
            span.to_f64_lossy()
        )));
    }
    let lengths: Vec<S> = (0..count)
        .map(|_| S::sample_uniform(rng, min_len, cap))
        .collect();
    let used: S = lengths.iter().cloned().sum();
    let slack = span - used;
    let weights: Vec<S> = (0..count + 1)
        .map(|_| S::sample_uniform(rng, S::of(0.05), S::one()))
        .collect();
    let total_w: S = weights.iter().cloned().sum();
    let mut cursor = lo;
    let mut out = Vec::with_capacity(count);
    for (len, w) in lengths.into_iter().zip(&weights) {
        cursor = cursor + slack * *w / total_w;
        out.push((cursor, cursor + len));
        cursor = cursor + len;
    }
    Ok(out)
}

/// Segmented gear benchmark: `4*teeth + 1` patches.
///
/// Layout (pitch `delta = 2*pi/teeth`, tooth `t`): an outer arc of radius 2
/// over `[t*delta, t*delta + delta/2]`, a radial segment at
/// `t*delta + delta/2` connecting radius 2 to the root radius 1.5, a root
/// arc of radius 1.5 over the second half pitch, and a radial segment at
/// `(t+1)*delta` back out to radius 2. One inner circle of radius 1 closes
/// the dataset as a single patch. Radial segments on opposite sides of the
/// origin are collinear, so for even tooth counts they share a truth label.
pub fn generate_gear<S: Scalar>(teeth: usize, mode: GearMode) -> Result<LabeledDataset<S>> {
    if teeth < 2 {
        return Err(Error::invalid("gear needs at least 2 teeth"));
    }
    let delta = S::of(std::f64::consts::TAU) / S::from_usize(teeth).expect("teeth fits scalar");
    let half = delta / S::of(2.0);
    let origin = [S::zero(), S::zero()];
    let r_outer = S::of(2.0);
    let r_root = S::of(1.5);
    let r_inner = S::one();
    let arc = |r: S, a0: S, a1: S| match mode {
        GearMode::Exact => rational_arc(origin, r, a0, a1),
        GearMode::CubicBezier => cubic_arc(origin, r, a0, a1),
    };
    let radial = |angle: S, r0: S, r1: S| {
        line_segment(
            [r0 * angle.cos(), r0 * angle.sin()],
            [r1 * angle.cos(), r1 * angle.sin()],
        )
    };

    let mut patches = Vec::with_capacity(4 * teeth + 1);
    let mut labels = Vec::with_capacity(4 * teeth + 1);
    let mut degrees = Vec::with_capacity(4 * teeth + 1);
    let mut reps: Vec<Vec<S>> = Vec::new();
    let mut push = |patch: Patch<S>, coeffs: Vec<S>, degree: usize,
                    patches: &mut Vec<Patch<S>>,
                    labels: &mut Vec<usize>,
                    degrees: &mut Vec<usize>| {
        labels.push(dedup_label(&mut reps, normalize_primitive(coeffs)));
        degrees.push(degree);
        patches.push(patch);
    };
    for t in 0..teeth {
        let a0 = delta * S::from_usize(t).expect("tooth fits scalar");
        let a_mid = a0 + half;
        let a1 = a0 + delta;
        push(
            arc(r_outer, a0, a_mid)?,
            circle_coefficients(r_outer),
            2,
            &mut patches,
            &mut labels,
            &mut degrees,
        );
        push(
            radial(a_mid, r_outer, r_root)?,
            radial_line_coefficients(a_mid),
            1,
            &mut patches,
            &mut labels,
            &mut degrees,
        );
        push(
            arc(r_root, a_mid, a1)?,
            circle_coefficients(r_root),
            2,
            &mut patches,
            &mut labels,
            &mut degrees,
        );
        push(
            radial(a1, r_root, r_outer)?,
            radial_line_coefficients(a1),
            1,
            &mut patches,
            &mut labels,
            &mut degrees,
        );
    }
    let circle = match mode {
        GearMode::Exact => closed_circle_exact(origin, r_inner)?,
        GearMode::CubicBezier => closed_circle_approx(origin, r_inner)?,
    };
    push(
        circle,
        circle_coefficients(r_inner),
        2,
        &mut patches,
        &mut labels,
        &mut degrees,
    );
    LabeledDataset::new(2, patches, Some(labels), Some(degrees))
}

/// Implicit coefficients of `x^2 + y^2 - r^2` in the graded basis
/// `(1, x, y, x^2, xy, y^2)`.
fn circle_coefficients<S: Scalar>(r: S) -> Vec<S> {
    vec![-r * r, S::zero(), S::zero(), S::one(), S::zero(), S::one()]
}

/// Implicit coefficients of the line through the origin at `angle`, in the
/// basis `(1, x, y)`.
fn radial_line_coefficients<S: Scalar>(angle: S) -> Vec<S> {
    vec![S::zero(), -angle.sin(), angle.cos()]
}

/// Scales to unit 2-norm and flips the sign so the first coefficient larger
/// than `1e-9 * max |c|` in magnitude is positive. Collinear primitives with
/// opposite orientations normalize to the same vector.
pub(crate) fn normalize_primitive<S: Scalar>(mut v: Vec<S>) -> Vec<S> {
    let norm = v.iter().map(|&c| c * c).sum::<S>().sqrt();
    for c in v.iter_mut() {
        *c = *c / norm;
    }
    let max = v.iter().fold(S::zero(), |m, &c| m.max(c.abs()));
    let tol = S::of(1e-9) * max;
    for i in 0..v.len() {
        if v[i].abs() > tol {
            if v[i] < S::zero() {
                for c in v.iter_mut() {
                    *c = -*c;
                }
            }
            break;
        }
    }
    v
}

/// Returns the index of the representative within distance 1e-9 of `v`
/// (same length required), appending `v` as a new representative otherwise.
pub(crate) fn dedup_label<S: Scalar>(reps: &mut Vec<Vec<S>>, v: Vec<S>) -> usize {
    let tol = S::of(1e-9);
    for (i, r) in reps.iter().enumerate() {
        if r.len() == v.len() {
            let d2: S = r.iter().zip(&v).map(|(&a, &b)| (a - b) * (a - b)).sum();
            if d2.sqrt() < tol {
                return i;
            }
        }
    }
    reps.push(v);
    reps.len() - 1
}

/// Quadric kind drawn by [`generate_quadric_surfaces`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadricKind {
    Plane,
    Sphere,
    Cylinder,
    Cone,
}

/// Random 3D primitives, each split into 4 non-overlapping exact sub-patches.
///
/// Primitive `i` takes its kind from `kinds[i % kinds.len()]`, gets random
/// shape parameters, a random rotation about the origin and a random
/// translation in `[-1, 1]^3`. Labels are primitive indices; truth degree is
/// 1 for planes and 2 otherwise.
pub fn generate_quadric_surfaces<S: Scalar>(
    kinds: &[QuadricKind],
    count: usize,
    seed: u64,
) -> Result<LabeledDataset<S>> {
    if kinds.is_empty() {
        return Err(Error::invalid("quadric generator needs at least one kind"));
    }
    if count == 0 {
        return Err(Error::invalid("quadric generator needs count >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let two_pi = S::of(std::f64::consts::TAU);
    let mut patches = Vec::new();
    let mut labels = Vec::new();
    let mut degrees = Vec::new();
    for i in 0..count {
        let kind = kinds[i % kinds.len()];
        let alpha = S::sample_uniform(&mut rng, S::zero(), two_pi);
        let beta = S::sample_uniform(&mut rng, S::zero(), two_pi);
        let gamma = S::sample_uniform(&mut rng, S::zero(), two_pi);
        let shift: Vec<S> = (0..3)
            .map(|_| S::sample_uniform(&mut rng, -S::one(), S::one()))
            .collect();
        let motion = AffineMap::new(3, euler_rotation(alpha, beta, gamma), shift)?;
        let canonical = canonical_quadric_subpatches(kind, &mut rng)?;
        for patch in canonical {
            patches.push(patch.transformed(&motion)?);
            labels.push(i);
            degrees.push(if kind == QuadricKind::Plane { 1 } else { 2 });
        }
    }
    LabeledDataset::new(3, patches, Some(labels), Some(degrees))
}

/// Four disjoint sub-patches of a randomly sized canonical primitive
/// (axis-aligned, centered or apexed at the origin).
fn canonical_quadric_subpatches<S: Scalar, R: Rng + ?Sized>(
    kind: QuadricKind,
    rng: &mut R,
) -> Result<Vec<Patch<S>>> {
    let sectors = |margin: S| -> Vec<(S, S)> {
        let quarter = S::of(std::f64::consts::FRAC_PI_2);
        (0..4)
            .map(|k| {
                let base = quarter * S::of(k as f64);
                (base + margin, base + quarter - margin)
            })
            .collect()
    };
    let margin = S::of(0.1);
    match kind {
        QuadricKind::Plane => {
            let l1 = S::sample_uniform(rng, S::of(0.8), S::of(1.6));
            let l2 = S::sample_uniform(rng, S::of(0.8), S::of(1.6));
            // 2x2 tiles of the parameter square with a 0.1-wide gap.
            let mut out = Vec::with_capacity(4);
            for &a in &[S::zero(), S::of(0.55)] {
                for &b in &[S::zero(), S::of(0.55)] {
                    let origin = [a * l1, b * l2, S::zero()];
                    let tile = S::of(0.45);
                    out.push(plane_patch(
                        origin,
                        [tile * l1, S::zero(), S::zero()],
                        [S::zero(), tile * l2, S::zero()],
                    )?);
                }
            }
            Ok(out)
        }
        QuadricKind::Sphere => {
            let r = S::sample_uniform(rng, S::of(0.5), S::of(1.5));
            let band_center = S::sample_uniform(rng, -S::of(0.5), S::of(0.5));
            let band_half = S::sample_uniform(rng, S::of(0.3), S::of(0.5));
            let phi = (band_center - band_half, band_center + band_half);
            sectors(margin)
                .into_iter()
                .map(|theta| sphere_patch([S::zero(); 3], r, theta, phi))
                .collect()
        }
        QuadricKind::Cylinder => {
            let r = S::sample_uniform(rng, S::of(0.4), S::of(1.2));
            let h = S::sample_uniform(rng, S::of(0.5), S::of(1.5));
            sectors(margin)
                .into_iter()
                .map(|theta| cylinder_patch([S::zero(); 3], r, theta, (-h, h)))
                .collect()
        }
        QuadricKind::Cone => {
            let slope = S::sample_uniform(rng, S::of(0.4), S::of(1.5));
            let z0 = S::sample_uniform(rng, S::of(0.3), S::of(0.6));
            let z1 = z0 + S::sample_uniform(rng, S::of(0.5), S::of(1.0));
            sectors(margin)
                .into_iter()
                .map(|theta| cone_patch([S::zero(); 3], slope, theta, (z0, z1)))
                .collect()
        }
    }
}

/// Row-major rotation matrix `Rz(gamma) * Rx(beta) * Rz(alpha)`.
fn euler_rotation<S: Scalar>(alpha: S, beta: S, gamma: S) -> Vec<S> {
    let rz = |t: S| {
        [
            t.cos(), -t.sin(), S::zero(),
            t.sin(), t.cos(), S::zero(),
            S::zero(), S::zero(), S::one(),
        ]
    };
    let rx = |t: S| {
        [
            S::one(), S::zero(), S::zero(),
            S::zero(), t.cos(), -t.sin(),
            S::zero(), t.sin(), t.cos(),
        ]
    };
    let m = mat3_mul(&rz(gamma), &mat3_mul(&rx(beta), &rz(alpha)));
    m.to_vec()
}

fn mat3_mul<S: Scalar>(a: &[S; 9], b: &[S; 9]) -> [S; 9] {
    let mut out = [S::zero(); 9];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = S::zero();
            for k in 0..3 {
                acc = acc + a[3 * i + k] * b[3 * k + j];
            }
            out[3 * i + j] = acc;
        }
    }
    out
}

/// Perturbs every sampled coordinate by independent `N(0, sigma^2)` noise.
/// `sigma = 0` returns the clouds unchanged.
pub fn add_noise<S: Scalar>(
    dataset: &SampledDataset<S>,
    sigma: S,
    seed: u64,
) -> Result<SampledDataset<S>> {
    if !(sigma >= S::zero()) {
        return Err(Error::invalid("noise sigma must be nonnegative"));
    }
    if sigma == S::zero() {
        return Ok(dataset.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = dataset.clone();
    for cloud in out.clouds.iter_mut() {
        let dim = cloud.dim();
        let mut coords = cloud.coords().to_vec();
        for c in coords.iter_mut() {
            *c = *c + sigma * S::sample_standard_normal(&mut rng);
        }
        *cloud = super::PointCloud::new(dim, coords)?;
    }
    Ok(out)
}

/// Applies one uniform scale and translation to every patch so the joint
/// bounding box fits `[-1, 1]^n` tightly, and returns that map.
///
/// The box is taken over control points; by the convex hull property it
/// contains every point of every patch, so all samples land inside the unit
/// box. A dataset whose control-point box is exactly `[-1, 1]^n` maps to
/// itself.
pub fn rescale_to_unit_box<S: Scalar>(
    dataset: &LabeledDataset<S>,
) -> Result<(LabeledDataset<S>, AffineMap<S>)> {
    if dataset.is_empty() {
        return Err(Error::invalid("cannot rescale an empty dataset"));
    }
    let dim = dataset.ambient_dim;
    let mut lo = vec![S::infinity(); dim];
    let mut hi = vec![S::neg_infinity(); dim];
    for patch in &dataset.patches {
        for point in patch.control_points().chunks_exact(dim) {
            for d in 0..dim {
                lo[d] = lo[d].min(point[d]);
                hi[d] = hi[d].max(point[d]);
            }
        }
    }
    let mut half = S::zero();
    for d in 0..dim {
        half = half.max((hi[d] - lo[d]) / S::of(2.0));
    }
    if !(half > S::of(1e-150)) {
        return Err(Error::invalid(
            "degenerate bounding box: dataset has no spatial extent",
        ));
    }
    let scale = S::one() / half;
    let translation: Vec<S> = (0..dim)
        .map(|d| -scale * (lo[d] + hi[d]) / S::of(2.0))
        .collect();
    let mut linear = vec![S::zero(); dim * dim];
    for d in 0..dim {
        linear[d * dim + d] = scale;
    }
    let map = AffineMap::new(dim, linear, translation)?;
    let patches = dataset
        .patches
        .iter()
        .map(|p| p.transformed(&map))
        .collect::<Result<Vec<_>>>()?;
    let rescaled = LabeledDataset::new(
        dim,
        patches,
        dataset.truth_labels.clone(),
        dataset.truth_degrees.clone(),
    )?;
    Ok((rescaled, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::circle_radial_deviation;

    fn distinct_label_count(ds: &LabeledDataset<f64>) -> usize {
        let mut seen: Vec<usize> = ds.truth_labels.as_ref().unwrap().clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    #[test]
    fn gear_patch_counts_match_the_formula() {
        for &(teeth, want) in &[(2usize, 9usize), (3, 13), (4, 17), (8, 33), (128, 513)] {
            let ds = generate_gear::<f64>(teeth, GearMode::Exact).unwrap();
            assert_eq!(ds.len(), want, "teeth={teeth}");
            assert_eq!(ds.len(), 4 * teeth + 1);
        }
        assert!(generate_gear::<f64>(1, GearMode::Exact).is_err());
        assert!(generate_gear::<f64>(0, GearMode::CubicBezier).is_err());
    }

    #[test]
    fn gear_labels_merge_collinear_radial_segments() {
        // Rays on opposite sides of the origin are collinear, so an even
        // tooth count yields teeth + 3 primitives (teeth lines, 3 circles).
        for &teeth in &[2usize, 4, 8] {
            let ds = generate_gear::<f64>(teeth, GearMode::Exact).unwrap();
            assert_eq!(distinct_label_count(&ds), teeth + 3, "teeth={teeth}");
        }
        let ds = generate_gear::<f64>(8, GearMode::Exact).unwrap();
        let labels = ds.truth_labels.as_ref().unwrap();
        // Tooth t's first radial sits at angle (t + 1/2) * delta; tooth t+4's
        // is half a turn away on the same line.
        assert_eq!(labels[1], labels[4 * 4 + 1]);
        assert_eq!(labels[3], labels[4 * 4 + 3]);
        assert_ne!(labels[1], labels[3]);
        // All outer arcs share one circle, all root arcs another.
        assert_eq!(labels[0], labels[4]);
        assert_eq!(labels[2], labels[6]);
        assert_ne!(labels[0], labels[2]);
        assert_ne!(labels[0], labels[32]);
    }

    #[test]
    fn gear_truth_degrees_and_patch_degrees() {
        let exact = generate_gear::<f64>(4, GearMode::Exact).unwrap();
        let degrees = exact.truth_degrees.as_ref().unwrap();
        for t in 0..4 {
            assert_eq!(degrees[4 * t], 2);
            assert_eq!(degrees[4 * t + 1], 1);
            assert_eq!(degrees[4 * t + 2], 2);
            assert_eq!(degrees[4 * t + 3], 1);
            assert_eq!(exact.patches[4 * t].degree(), &[2]);
            assert_eq!(exact.patches[4 * t + 1].degree(), &[1]);
        }
        assert_eq!(degrees[16], 2);
        assert_eq!(exact.patches[16].degree(), &[15]);

        let cubic = generate_gear::<f64>(4, GearMode::CubicBezier).unwrap();
        assert_eq!(cubic.patches[0].degree(), &[3]);
        assert_eq!(cubic.patches[16].degree(), &[10]);
        // Truth degrees describe the primitive, not the representation.
        assert_eq!(cubic.truth_degrees.as_ref().unwrap()[0], 2);
    }

    #[test]
    fn exact_gear_arcs_lie_on_their_circles() {
        let ds = generate_gear::<f64>(8, GearMode::Exact).unwrap();
        for t in 0..8 {
            for (idx, r) in [(4 * t, 2.0), (4 * t + 2, 1.5)] {
                let dev =
                    circle_radial_deviation(&ds.patches[idx], [0.0, 0.0], r, 33).unwrap();
                assert!(dev < 1e-13, "patch {idx} deviation {dev:e}");
            }
        }
        let dev = circle_radial_deviation(&ds.patches[32], [0.0, 0.0], 1.0, 257).unwrap();
        assert!(dev < 1e-13, "inner circle deviation {dev:e}");
    }

    #[test]
    fn cubic_gear_arcs_stay_within_the_cubic_error_bound() {
        // teeth=2 gives 90-degree arcs, the worst case allowed.
        let ds = generate_gear::<f64>(2, GearMode::CubicBezier).unwrap();
        for (idx, r) in [(0usize, 2.0), (2, 1.5), (4, 2.0), (6, 1.5)] {
            let dev = circle_radial_deviation(&ds.patches[idx], [0.0, 0.0], r, 129).unwrap();
            assert!(dev < 5e-4 * r, "patch {idx} deviation {dev:e}");
        }
    }

    #[test]
    fn gear_is_deterministic() {
        let a = generate_gear::<f64>(5, GearMode::CubicBezier).unwrap();
        let b = generate_gear::<f64>(5, GearMode::CubicBezier).unwrap();
        for (pa, pb) in a.patches.iter().zip(&b.patches) {
            assert_eq!(pa.control_points(), pb.control_points());
        }
        assert_eq!(a.truth_labels, b.truth_labels);
    }

    #[test]
    fn conic_family_forced_line_has_one_label_and_degree_one() {
        let mut params = ConicFamilyParams::new(1, (3, 3), 11);
        params.forced_kind = Some(ConicKind::Line);
        let ds = generate_conic_family::<f64>(&params).unwrap();
        assert_eq!(ds.len(), 3);
        assert!(ds.truth_labels.as_ref().unwrap().iter().all(|&l| l == 0));
        assert!(ds.truth_degrees.as_ref().unwrap().iter().all(|&d| d == 1));
    }

    #[test]
    fn conic_family_is_deterministic_and_rescaled() {
        let params = ConicFamilyParams::new(6, (2, 5), 42);
        let a = generate_conic_family::<f64>(&params).unwrap();
        let b = generate_conic_family::<f64>(&params).unwrap();
        assert_eq!(a.len(), b.len());
        for (pa, pb) in a.patches.iter().zip(&b.patches) {
            assert_eq!(pa.control_points(), pb.control_points());
            assert_eq!(pa.weights(), pb.weights());
        }
        // Segment counts respect the requested range per curve.
        let labels = a.truth_labels.as_ref().unwrap();
        for curve in 0..6 {
            let n = labels.iter().filter(|&&l| l == curve).count();
            assert!((2..=5).contains(&n), "curve {curve} has {n} segments");
        }
        // Rescaled: all sampled coordinates inside the unit box.
        let sampled = a.sample(Some(17), 4).unwrap();
        for cloud in &sampled.clouds {
            for p in cloud.iter_points() {
                assert!(p.iter().all(|&c| c.abs() <= 1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn conic_family_rejects_bad_parameters() {
        assert!(generate_conic_family::<f64>(&ConicFamilyParams::new(0, (1, 2), 0)).is_err());
        assert!(generate_conic_family::<f64>(&ConicFamilyParams::new(1, (0, 2), 0)).is_err());
        assert!(generate_conic_family::<f64>(&ConicFamilyParams::new(1, (3, 2), 0)).is_err());
        // Too many minimum-length segments for the master interval.
        assert!(generate_conic_family::<f64>(&ConicFamilyParams::new(1, (40, 40), 0)).is_err());
    }

    #[test]
    fn subintervals_are_disjoint_ordered_and_long_enough() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..50 {
            let count = 1 + (trial % 7);
            let iv =
                disjoint_subintervals::<f64, _>(&mut rng, -1.0, 1.0, count, 0.1, 0.8).unwrap();
            assert_eq!(iv.len(), count);
            let mut prev_end = -1.0;
            for &(a, b) in &iv {
                assert!(a >= prev_end - 1e-15);
                assert!(b - a >= 0.1 - 1e-12, "length {}", b - a);
                assert!(b - a <= 0.8 + 1e-12);
                prev_end = b;
            }
            assert!(prev_end <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn quadric_datasets_have_four_subpatches_per_primitive() {
        let kinds = [
            QuadricKind::Plane,
            QuadricKind::Sphere,
            QuadricKind::Cylinder,
            QuadricKind::Cone,
        ];
        let ds = generate_quadric_surfaces::<f64>(&kinds, 6, 9).unwrap();
        assert_eq!(ds.len(), 24);
        assert_eq!(ds.ambient_dim, 3);
        let labels = ds.truth_labels.as_ref().unwrap();
        for i in 0..6 {
            assert_eq!(labels.iter().filter(|&&l| l == i).count(), 4);
        }
        let degrees = ds.truth_degrees.as_ref().unwrap();
        assert!(degrees[0..4].iter().all(|&d| d == 1), "plane tiles");
        assert!(degrees[4..8].iter().all(|&d| d == 2), "sphere sectors");

        let again = generate_quadric_surfaces::<f64>(&kinds, 6, 9).unwrap();
        for (pa, pb) in ds.patches.iter().zip(&again.patches) {
            assert_eq!(pa.control_points(), pb.control_points());
        }
        assert!(generate_quadric_surfaces::<f64>(&[], 2, 0).is_err());
        assert!(generate_quadric_surfaces::<f64>(&kinds, 0, 0).is_err());
    }

    #[test]
    fn transformed_sphere_sectors_keep_their_radius() {
        // A rigid motion moves the center to the translation and preserves
        // distances, so samples must stay at the drawn radius. Recover both
        // from the patch data: center = mean of the 4 sector extremes is not
        // available, so check pairwise: all 4 sectors share one center found
        // by solving from the first patch's far-apart samples.
        let ds = generate_quadric_surfaces::<f64>(&[QuadricKind::Sphere], 1, 77).unwrap();
        let clouds: Vec<_> = ds
            .patches
            .iter()
            .map(|p| p.sample_grid(5).unwrap())
            .collect();
        // The canonical construction centers the sphere at the origin, so the
        // transformed center is the motion's translation. Estimate it as the
        // point equidistant from samples via least squares over one cloud,
        // then validate against every cloud.
        let c = sphere_center_oracle(&clouds[0]);
        let r0 = dist(clouds[0].point(0), &c);
        for cloud in &clouds {
            for p in cloud.iter_points() {
                assert!((dist(p, &c) - r0).abs() < 1e-9, "radius drift");
            }
        }
    }

    fn dist(p: &[f64], c: &[f64; 3]) -> f64 {
        (0..3).map(|k| (p[k] - c[k]) * (p[k] - c[k])).sum::<f64>().sqrt()
    }

    /// Least-squares sphere center from a cloud: the equation
    /// |p|^2 - 2 p.c = r^2 - |c|^2 is linear in (c, r^2 - |c|^2).
    fn sphere_center_oracle(cloud: &crate::geometry::PointCloud<f64>) -> [f64; 3] {
        let n = cloud.len();
        let mut a = vec![[0.0f64; 4]; n];
        let mut rhs = vec![0.0f64; n];
        for (i, p) in cloud.iter_points().enumerate() {
            a[i] = [2.0 * p[0], 2.0 * p[1], 2.0 * p[2], 1.0];
            rhs[i] = p.iter().map(|&x| x * x).sum();
        }
        // Normal equations, solved by Gaussian elimination.
        let mut m = [[0.0f64; 5]; 4];
        for i in 0..n {
            for r in 0..4 {
                for cidx in 0..4 {
                    m[r][cidx] += a[i][r] * a[i][cidx];
                }
                m[r][4] += a[i][r] * rhs[i];
            }
        }
        for col in 0..4 {
            let pivot = (col..4).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())).unwrap();
            m.swap(col, pivot);
            let d = m[col][col];
            for j in col..5 {
                m[col][j] /= d;
            }
            for r in 0..4 {
                if r != col {
                    let f = m[r][col];
                    for j in col..5 {
                        m[r][j] -= f * m[col][j];
                    }
                }
            }
        }
        [m[0][4], m[1][4], m[2][4]]
    }

    #[test]
    fn noise_is_seeded_scaled_and_optional() {
        let ds = generate_gear::<f64>(3, GearMode::Exact).unwrap();
        let clean = ds.sample(Some(17), 4).unwrap();
        let zero = add_noise(&clean, 0.0, 1).unwrap();
        for (a, b) in clean.clouds.iter().zip(&zero.clouds) {
            assert_eq!(a.coords(), b.coords());
        }
        let n1 = add_noise(&clean, 1e-3, 1).unwrap();
        let n2 = add_noise(&clean, 1e-3, 1).unwrap();
        let n3 = add_noise(&clean, 1e-3, 2).unwrap();
        assert_eq!(n1.clouds[0].coords(), n2.clouds[0].coords());
        assert_ne!(n1.clouds[0].coords(), n3.clouds[0].coords());
        // Root-mean-square perturbation lands near sigma.
        let mut sq = 0.0;
        let mut cnt = 0usize;
        for (a, b) in clean.clouds.iter().zip(&n1.clouds) {
            for (x, y) in a.coords().iter().zip(b.coords()) {
                sq += (x - y) * (x - y);
                cnt += 1;
            }
        }
        let rms = (sq / cnt as f64).sqrt();
        assert!(rms > 0.5e-3 && rms < 2e-3, "rms {rms:e}");
        assert!(add_noise(&clean, -1.0, 0).is_err());
        assert!(add_noise(&clean, f64::NAN, 0).is_err());
    }

    #[test]
    fn rescale_fixes_a_boundary_touching_dataset() {
        let patches = vec![
            line_segment([-1.0f64, -1.0], [1.0, -1.0]).unwrap(),
            line_segment([1.0f64, -1.0], [1.0, 1.0]).unwrap(),
            line_segment([-1.0f64, 1.0], [1.0, 1.0]).unwrap(),
        ];
        let ds = LabeledDataset::new(2, patches, None, None).unwrap();
        let (out, map) = rescale_to_unit_box(&ds).unwrap();
        for (p, q) in ds.patches.iter().zip(&out.patches) {
            for (a, b) in p.control_points().iter().zip(q.control_points()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        assert!((map.det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rescale_maps_a_long_segment_to_length_two() {
        let ds = LabeledDataset::new(
            2,
            vec![line_segment([0.0f64, 0.0], [10.0, 0.0]).unwrap()],
            None,
            None,
        )
        .unwrap();
        let (out, _) = rescale_to_unit_box(&ds).unwrap();
        let c = out.patches[0].control_points();
        assert!((c[0] + 1.0).abs() < 1e-15 && (c[2] - 1.0).abs() < 1e-15);
        assert!(c[1].abs() < 1e-15 && c[3].abs() < 1e-15);
    }

    #[test]
    fn rescale_rejects_degenerate_datasets() {
        let ds = LabeledDataset::new(
            2,
            vec![line_segment([0.5f64, 0.5], [0.5, 0.5]).unwrap()],
            None,
            None,
        )
        .unwrap();
        assert!(rescale_to_unit_box(&ds).is_err());
    }

    #[test]
    fn normalized_primitives_identify_collinear_lines() {
        let a = normalize_primitive(radial_line_coefficients(0.7f64));
        let b = normalize_primitive(radial_line_coefficients(0.7 + std::f64::consts::PI));
        let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        assert!(d < 1e-9, "collinear rays must normalize identically: {d:e}");

        let mut reps = Vec::new();
        assert_eq!(dedup_label(&mut reps, a), 0);
        assert_eq!(dedup_label(&mut reps, b), 0);
        let c = normalize_primitive(radial_line_coefficients(1.4f64));
        assert_eq!(dedup_label(&mut reps, c), 1);
        // Different-length vectors never merge.
        let circle = normalize_primitive(circle_coefficients(1.0f64));
        assert_eq!(dedup_label(&mut reps, circle), 2);
    }
}
