//! Exact quadric surface patches as rational tensor-product Béziers.
//!
//! The sphere, cylinder and cone constructors follow the surface-of-
//! revolution scheme: a rational quadratic circular arc in the azimuth
//! direction is combined with a second arc (sphere), a straight generator
//! (cylinder) or a linearly scaled generator (cone). Every sampled point lies
//! on the corresponding algebraic surface up to round-off.

use super::{rational_arc, Patch};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Planar parallelogram patch spanned by `e1` and `e2` at `origin`,
/// as a bilinear polynomial surface.
pub fn plane_patch<S: Scalar>(origin: [S; 3], e1: [S; 3], e2: [S; 3]) -> Result<Patch<S>> {
    let mut control = Vec::with_capacity(12);
    for &(a, b) in &[
        (S::zero(), S::zero()),
        (S::zero(), S::one()),
        (S::one(), S::zero()),
        (S::one(), S::one()),
    ] {
        for d in 0..3 {
            control.push(origin[d] + a * e1[d] + b * e2[d]);
        }
    }
    Patch::new(
        3,
        vec![1, 1],
        vec![(S::zero(), S::one()), (S::zero(), S::one())],
        control,
        None,
    )
}

/// Cartesian control points and weights of a unit-circle arc.
fn unit_arc_controls<S: Scalar>(a0: S, a1: S) -> Result<(Vec<[S; 2]>, Vec<S>)> {
    let arc = rational_arc([S::zero(), S::zero()], S::one(), a0, a1)?;
    let c = arc.control_points();
    let w = arc.weights().expect("rational arc has weights").to_vec();
    let pts = vec![[c[0], c[1]], [c[2], c[3]], [c[4], c[5]]];
    Ok((pts, w))
}

/// Sphere patch over azimuth `[theta0, theta1]` and latitude `[phi0, phi1]`
/// (spans in `(0, pi)`, latitude within `[-pi/2, pi/2]`), as a rational
/// biquadratic. `u` runs along azimuth, `v` along latitude.
pub fn sphere_patch<S: Scalar>(
    center: [S; 3],
    radius: S,
    theta: (S, S),
    phi: (S, S),
) -> Result<Patch<S>> {
    let half_pi = S::of(std::f64::consts::FRAC_PI_2);
    if phi.0 < -half_pi || phi.1 > half_pi {
        return Err(Error::invalid("sphere latitude must stay in [-pi/2, pi/2]"));
    }
    let (az, wu) = unit_arc_controls(theta.0, theta.1)?;
    let (mer, wv) = unit_arc_controls(phi.0, phi.1)?;
    let mut control = Vec::with_capacity(27);
    let mut weights = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            // mer[j] = (cos phi, sin phi) controls of the meridian arc.
            control.push(center[0] + radius * az[i][0] * mer[j][0]);
            control.push(center[1] + radius * az[i][1] * mer[j][0]);
            control.push(center[2] + radius * mer[j][1]);
            weights.push(wu[i] * wv[j]);
        }
    }
    Patch::new(
        3,
        vec![2, 2],
        vec![(S::zero(), S::one()), (S::zero(), S::one())],
        control,
        Some(weights),
    )
}

/// Patch of the circular cylinder of the given radius around the vertical
/// axis through `center`: azimuth `[theta0, theta1]` (span in `(0, pi)`),
/// height offset `[z0, z1]`. Degree `(2, 1)`.
pub fn cylinder_patch<S: Scalar>(
    center: [S; 3],
    radius: S,
    theta: (S, S),
    z: (S, S),
) -> Result<Patch<S>> {
    if !(z.0 < z.1) {
        return Err(Error::invalid("cylinder needs z0 < z1"));
    }
    let (az, wu) = unit_arc_controls(theta.0, theta.1)?;
    let mut control = Vec::with_capacity(18);
    let mut weights = Vec::with_capacity(6);
    for i in 0..3 {
        for &zj in &[z.0, z.1] {
            control.push(center[0] + radius * az[i][0]);
            control.push(center[1] + radius * az[i][1]);
            control.push(center[2] + zj);
            weights.push(wu[i]);
        }
    }
    Patch::new(
        3,
        vec![2, 1],
        vec![(S::zero(), S::one()), (S::zero(), S::one())],
        control,
        Some(weights),
    )
}

/// Patch of the circular cone `x^2 + y^2 = (slope z)^2` around the vertical
/// axis through `apex`: azimuth `[theta0, theta1]` (span in `(0, pi)`),
/// height offset `[z0, z1]` with both ends on the same side of the apex.
/// Degree `(2, 1)`.
pub fn cone_patch<S: Scalar>(
    apex: [S; 3],
    slope: S,
    theta: (S, S),
    z: (S, S),
) -> Result<Patch<S>> {
    if !(slope > S::zero()) {
        return Err(Error::invalid("cone slope must be positive"));
    }
    if !(z.0 < z.1) || z.0 * z.1 <= S::zero() {
        return Err(Error::invalid(
            "cone needs z0 < z1 with both on one side of the apex",
        ));
    }
    let (az, wu) = unit_arc_controls(theta.0, theta.1)?;
    let mut control = Vec::with_capacity(18);
    let mut weights = Vec::with_capacity(6);
    for i in 0..3 {
        for &zj in &[z.0, z.1] {
            let rho = slope * zj;
            control.push(apex[0] + rho * az[i][0]);
            control.push(apex[1] + rho * az[i][1]);
            control.push(apex[2] + zj);
            weights.push(wu[i]);
        }
    }
    Patch::new(
        3,
        vec![2, 1],
        vec![(S::zero(), S::one()), (S::zero(), S::one())],
        control,
        Some(weights),
    )
}
