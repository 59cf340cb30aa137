//! Exact and approximate conic segment constructors.
//!
//! Arcs, parabola and hyperbola segments are produced as rational quadratic
//! Bézier curves that lie on their conic exactly (up to round-off); the cubic
//! constructors implement the standard polynomial circle approximation. Full
//! circles need special handling: a closed rational parametrization only
//! admits strictly positive Bernstein weights from degree 15 upward, which is
//! what [`closed_circle_exact`] uses.

use super::Patch;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Straight segment between two points as a degree-1 patch.
pub fn line_segment<S: Scalar>(p0: [S; 2], p1: [S; 2]) -> Result<Patch<S>> {
    Patch::new(
        2,
        vec![1],
        vec![(S::zero(), S::one())],
        vec![p0[0], p0[1], p1[0], p1[1]],
        None,
    )
}

/// Circular arc from angle `a0` to `a1` (span in `(0, pi)`) as an exact
/// rational quadratic: middle control point at the tangent intersection with
/// weight `cos(span/2)`.
pub fn rational_arc<S: Scalar>(center: [S; 2], radius: S, a0: S, a1: S) -> Result<Patch<S>> {
    let span = a1 - a0;
    check_arc_inputs(radius, span, S::of(std::f64::consts::PI))?;
    let half = span / S::of(2.0);
    let mid = (a0 + a1) / S::of(2.0);
    let w1 = half.cos();
    let rm = radius / w1;
    let control = vec![
        center[0] + radius * a0.cos(),
        center[1] + radius * a0.sin(),
        center[0] + rm * mid.cos(),
        center[1] + rm * mid.sin(),
        center[0] + radius * a1.cos(),
        center[1] + radius * a1.sin(),
    ];
    Patch::new(
        2,
        vec![2],
        vec![(S::zero(), S::one())],
        control,
        Some(vec![S::one(), w1, S::one()]),
    )
}

/// Circular arc as the standard polynomial cubic approximation with tangent
/// handle length `(4/3) tan(span/4) * radius`.
pub fn cubic_arc<S: Scalar>(center: [S; 2], radius: S, a0: S, a1: S) -> Result<Patch<S>> {
    let span = a1 - a0;
    check_arc_inputs(radius, span, S::of(std::f64::consts::PI))?;
    let k = S::of(4.0 / 3.0) * (span / S::of(4.0)).tan() * radius;
    let p0 = [center[0] + radius * a0.cos(), center[1] + radius * a0.sin()];
    let p3 = [center[0] + radius * a1.cos(), center[1] + radius * a1.sin()];
    let control = vec![
        p0[0],
        p0[1],
        p0[0] - k * a0.sin(),
        p0[1] + k * a0.cos(),
        p3[0] + k * a1.sin(),
        p3[1] - k * a1.cos(),
        p3[0],
        p3[1],
    ];
    Patch::new(2, vec![3], vec![(S::zero(), S::one())], control, None)
}

fn check_arc_inputs<S: Scalar>(radius: S, span: S, max_span: S) -> Result<()> {
    if !(radius > S::zero()) {
        return Err(Error::invalid("arc radius must be positive"));
    }
    if !(span > S::zero()) || span >= max_span {
        return Err(Error::invalid(format!(
            "arc span must lie in (0, {}), got {}",
            max_span.to_f64_lossy(),
            span.to_f64_lossy()
        )));
    }
    Ok(())
}

/// Quartic homogeneous Bernstein coefficients (X, Y, W) of the closed-circle
/// parametrization `t = (2s-1)/(s(1-s))`, `x = (1-t^2)/(1+t^2)`,
/// `y = 2t/(1+t^2)`. W has non-positive entries at this degree; elevation to
/// degree 15 is the first degree at which every weight turns positive.
const CLOSED_CIRCLE_QUARTIC: [(f64, f64, f64); 5] = [
    (-1.0, 0.0, 1.0),
    (0.0, -0.5, 0.0),
    (0.5, 0.0, -1.0 / 6.0),
    (0.0, 0.5, 0.0),
    (-1.0, 0.0, 1.0),
];

/// Degree at which the elevated closed-circle weights are all positive.
const CLOSED_CIRCLE_DEGREE: usize = 15;

/// Full circle as a single exact rational Bézier patch of degree 15.
///
/// Both curve endpoints coincide at `center + (-radius, 0)`.
pub fn closed_circle_exact<S: Scalar>(center: [S; 2], radius: S) -> Result<Patch<S>> {
    if !(radius > S::zero()) {
        return Err(Error::invalid("circle radius must be positive"));
    }
    let mut hom: Vec<[S; 3]> = CLOSED_CIRCLE_QUARTIC
        .iter()
        .map(|&(x, y, w)| [S::of(x), S::of(y), S::of(w)])
        .collect();
    while hom.len() - 1 < CLOSED_CIRCLE_DEGREE {
        hom = elevate_homogeneous(&hom);
    }
    let mut control = Vec::with_capacity(2 * hom.len());
    let mut weights = Vec::with_capacity(hom.len());
    for h in &hom {
        debug_assert!(h[2] > S::zero(), "elevated circle weight must be positive");
        control.push(center[0] + radius * h[0] / h[2]);
        control.push(center[1] + radius * h[1] / h[2]);
        weights.push(h[2]);
    }
    Patch::new(
        2,
        vec![CLOSED_CIRCLE_DEGREE],
        vec![(S::zero(), S::one())],
        control,
        Some(weights),
    )
}

fn elevate_homogeneous<S: Scalar>(h: &[[S; 3]]) -> Vec<[S; 3]> {
    let n = h.len() - 1;
    let np1 = S::from_usize(n + 1).expect("degree fits scalar");
    let mut out = Vec::with_capacity(n + 2);
    out.push(h[0]);
    for i in 1..=n {
        let f = S::from_usize(i).expect("index fits scalar") / np1;
        let mut row = [S::zero(); 3];
        for d in 0..3 {
            row[d] = f * h[i - 1][d] + (S::one() - f) * h[i][d];
        }
        out.push(row);
    }
    out.push(h[n]);
    out
}

/// Degree-10 polynomial approximation of the full unit circle: Chebyshev-
/// Lobatto interpolant of `(cos 2\u{3c0}s, sin 2\u{3c0}s)` in Bernstein form, max radial
/// deviation ~1.0e-5. First half of the control net; the rest mirrors it
/// (x palindromic, y antipalindromic).
const CLOSED_CIRCLE_POLY_HALF: [(f64, f64); 6] = [
    (1.0, 0.0),
    (0.9999878886322291, 0.6282739718380405),
    (0.5615118098095722, 1.257208822564674),
    (-0.31689358663811956, 1.5374048017938977),
    (-1.3190488334976243, 1.1446950933180318),
    (-1.8511144833069684, 0.0),
];

/// Full circle as a single closed polynomial Bézier patch of degree 10.
///
/// The counterpart of [`closed_circle_exact`] for approximation mode; the
/// radial error (~1e-5 times the radius) plays the same role as the error of
/// the standard cubic approximation on arcs.
pub fn closed_circle_approx<S: Scalar>(center: [S; 2], radius: S) -> Result<Patch<S>> {
    if !(radius > S::zero()) {
        return Err(Error::invalid("circle radius must be positive"));
    }
    let degree = 2 * (CLOSED_CIRCLE_POLY_HALF.len() - 1);
    let mut control = Vec::with_capacity(2 * (degree + 1));
    for i in 0..=degree {
        let (x, y) = if i < CLOSED_CIRCLE_POLY_HALF.len() {
            CLOSED_CIRCLE_POLY_HALF[i]
        } else {
            let (mx, my) = CLOSED_CIRCLE_POLY_HALF[degree - i];
            (mx, -my)
        };
        control.push(center[0] + radius * S::of(x));
        control.push(center[1] + radius * S::of(y));
    }
    Patch::new(2, vec![degree], vec![(S::zero(), S::one())], control, None)
}

/// Segment of the canonical parabola `y = x^2` for `x` in `[t0, t1]`,
/// represented exactly as a polynomial quadratic.
pub fn parabola_segment<S: Scalar>(t0: S, t1: S) -> Result<Patch<S>> {
    if !(t0 < t1) {
        return Err(Error::invalid("parabola segment needs t0 < t1"));
    }
    let mid = (t0 + t1) / S::of(2.0);
    let control = vec![t0, t0 * t0, mid, t0 * t1, t1, t1 * t1];
    Patch::new(2, vec![2], vec![(S::zero(), S::one())], control, None)
}

/// Segment of the right branch of the canonical hyperbola `x^2 - y^2 = 1`,
/// parametrized by `x = (1+t^2)/(1-t^2)`, `y = 2t/(1-t^2)` for
/// `t` in `[t0, t1]` with `-1 < t0 < t1 < 1`; exact rational quadratic.
pub fn hyperbola_segment<S: Scalar>(t0: S, t1: S) -> Result<Patch<S>> {
    if !(t0 < t1) || t0 <= -S::one() || t1 >= S::one() {
        return Err(Error::invalid("hyperbola segment needs -1 < t0 < t1 < 1"));
    }
    // Bernstein coefficients of the homogeneous quadratics on [t0, t1]:
    // q(t0), q(t0) + q'(t0)(t1-t0)/2, q(t1).
    let two = S::of(2.0);
    let x = [S::one() + t0 * t0, S::one() + t0 * t1, S::one() + t1 * t1];
    let y = [two * t0, t0 + t1, two * t1];
    let w = [S::one() - t0 * t0, S::one() - t0 * t1, S::one() - t1 * t1];
    let control = vec![
        x[0] / w[0],
        y[0] / w[0],
        x[1] / w[1],
        y[1] / w[1],
        x[2] / w[2],
        y[2] / w[2],
    ];
    Patch::new(
        2,
        vec![2],
        vec![(S::zero(), S::one())],
        control,
        Some(w.to_vec()),
    )
}

/// Largest deviation of the sampled patch from the circle of the given
/// center and radius; used by tests and generator invariants.
pub fn circle_radial_deviation<S: Scalar>(
    patch: &Patch<S>,
    center: [S; 2],
    radius: S,
    samples: usize,
) -> Result<S> {
    let cloud = patch.sample_grid(samples)?;
    let mut worst = S::zero();
    for p in cloud.iter_points() {
        let dx = p[0] - center[0];
        let dy = p[1] - center[1];
        let dev = ((dx * dx + dy * dy).sqrt() - radius).abs();
        worst = worst.max(dev);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    #[test]
    fn rational_arc_lies_on_circle() {
        for &(c, r, a0, a1) in &[
            ([0.0, 0.0], 1.0, 0.0, FRAC_PI_2),
            ([0.5, -1.0], 2.0, -0.3, 2.2),
            ([3.0, 3.0], 0.25, 1.0, 1.1),
        ] {
            let arc = rational_arc([c[0], c[1]], r, a0, a1).unwrap();
            let dev = circle_radial_deviation(&arc, [c[0], c[1]], r, 257).unwrap();
            assert!(dev < 1e-13 * r.max(1.0), "deviation {dev:e}");
        }
    }

    #[test]
    fn quarter_arc_has_the_classical_weights() {
        let arc = rational_arc([0.0, 0.0], 1.0, 0.0, FRAC_PI_2).unwrap();
        let w = arc.weights().unwrap();
        assert_eq!(w.len(), 3);
        assert!((w[0] - 1.0).abs() < 1e-15);
        assert!((w[1] - SQRT_2 / 2.0).abs() < 1e-15);
        assert!((w[2] - 1.0).abs() < 1e-15);
        // Endpoints and tangent-intersection middle control point.
        let ctrl = arc.control_points();
        assert!((ctrl[0] - 1.0).abs() < 1e-15 && ctrl[1].abs() < 1e-15);
        assert!((ctrl[2] - 1.0).abs() < 1e-15 && (ctrl[3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn arc_rejects_degenerate_spans() {
        assert!(rational_arc([0.0, 0.0], 1.0, 0.0, 0.0).is_err());
        assert!(rational_arc([0.0, 0.0], 1.0, 0.0, PI).is_err());
        assert!(rational_arc([0.0, 0.0], 1.0, 1.0, 0.5).is_err());
        assert!(rational_arc([0.0, 0.0], 0.0, 0.0, 1.0).is_err());
        assert!(cubic_arc([0.0, 0.0], 1.0, 0.0, PI).is_err());
    }

    #[test]
    fn cubic_arc_error_is_below_the_documented_bound() {
        // Quarter arc: the classical approximation error is ~2.7e-4 * r.
        let arc = cubic_arc([0.0, 0.0], 1.0, 0.0, FRAC_PI_2).unwrap();
        let dev = circle_radial_deviation(&arc, [0.0, 0.0], 1.0, 513).unwrap();
        assert!(dev < 5e-4, "quarter-arc deviation {dev:e}");
        assert!(dev > 1e-5, "quarter-arc deviation suspiciously small: {dev:e}");

        // 22.5 degrees: error shrinks by ~(1/4)^6.
        let small = cubic_arc([0.0, 0.0], 1.0, 0.0, PI / 8.0).unwrap();
        let dev_small = circle_radial_deviation(&small, [0.0, 0.0], 1.0, 513).unwrap();
        assert!(dev_small < 5e-7, "22.5-degree deviation {dev_small:e}");
    }

    #[test]
    fn cubic_arc_uses_the_standard_handle_length() {
        let arc = cubic_arc([0.0, 0.0], 1.0, 0.0, FRAC_PI_2).unwrap();
        let ctrl = arc.control_points();
        let k = (4.0 / 3.0) * (FRAC_PI_2 / 4.0).tan();
        assert!((ctrl[2] - 1.0).abs() < 1e-15 && (ctrl[3] - k).abs() < 1e-15);
        assert!((k - 0.5522847498307935).abs() < 1e-15);
    }

    #[test]
    fn closed_circle_exact_is_on_circle_with_positive_weights() {
        let circle = closed_circle_exact([0.5, -0.25], 1.5).unwrap();
        assert_eq!(circle.degree(), &[15]);
        let w = circle.weights().unwrap();
        let min_w = w.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min_w > 0.004, "min weight {min_w}");
        // First positive-weight degree is sharp: weight pattern pinned.
        assert!((min_w - 0.005128205128205128).abs() < 1e-12);
        let dev = circle_radial_deviation(&circle, [0.5, -0.25], 1.5, 1025).unwrap();
        assert!(dev < 1e-13, "deviation {dev:e}");
        // Closed: both endpoints at the leftmost circle point.
        let p0 = circle.evaluate(&[0.0]).unwrap();
        let p1 = circle.evaluate(&[1.0]).unwrap();
        assert!((p0[0] - (0.5 - 1.5)).abs() < 1e-14 && (p0[1] + 0.25).abs() < 1e-14);
        assert!((p0[0] - p1[0]).abs() < 1e-14 && (p0[1] - p1[1]).abs() < 1e-14);
    }

    #[test]
    fn closed_circle_approx_deviation_and_closure() {
        let circle = closed_circle_approx([0.0, 0.0], 1.0).unwrap();
        assert_eq!(circle.degree(), &[10]);
        assert!(circle.weights().is_none());
        let dev = circle_radial_deviation(&circle, [0.0, 0.0], 1.0, 2049).unwrap();
        assert!(dev < 2e-5, "deviation {dev:e}");
        assert!(dev > 1e-6, "deviation suspiciously small: {dev:e}");
        let p0 = circle.evaluate(&[0.0]).unwrap();
        let p1 = circle.evaluate(&[1.0]).unwrap();
        assert_eq!(p0, p1);
    }

    #[test]
    fn parabola_segment_is_exact() {
        let seg = parabola_segment(-0.7f64, 1.3).unwrap();
        let cloud = seg.sample_grid(33).unwrap();
        for p in cloud.iter_points() {
            assert!((p[1] - p[0] * p[0]).abs() < 1e-14);
        }
        // Endpoints at the requested abscissae.
        assert!((cloud.point(0)[0] + 0.7).abs() < 1e-15);
        assert!((cloud.point(32)[0] - 1.3).abs() < 1e-15);
    }

    #[test]
    fn hyperbola_segment_is_exact_with_positive_weights() {
        let seg = hyperbola_segment(-0.6f64, 0.55).unwrap();
        assert!(seg.weights().unwrap().iter().all(|&w| w > 0.0));
        let cloud = seg.sample_grid(33).unwrap();
        for p in cloud.iter_points() {
            assert!((p[0] * p[0] - p[1] * p[1] - 1.0).abs() < 1e-13);
            assert!(p[0] >= 1.0 - 1e-12, "right branch only");
        }
        assert!(hyperbola_segment(-1.0, 0.5).is_err());
        assert!(hyperbola_segment(0.5, 0.5).is_err());
    }

    #[test]
    fn line_segment_hits_endpoints() {
        let seg = line_segment([1.0, 2.0], [-3.0, 4.0]).unwrap();
        assert_eq!(seg.evaluate(&[0.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(seg.evaluate(&[1.0]).unwrap(), vec![-3.0, 4.0]);
    }
}
