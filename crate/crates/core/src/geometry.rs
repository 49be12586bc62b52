//! Coordinate transforms between rectangular space, the modified spherical
//! system of the transmit array, and the 2D plane the UAV is confined to.
//!
//! The modified spherical system measures elevation between the projection
//! of a point onto the XZ-plane and the array normal, so that the array
//! response separates into independent azimuth and elevation factors.

use crate::error::{CsbError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl RectPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Range `r`, azimuth `theta` and (tilt-adjusted) elevation `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphPoint {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

/// A bounded plane parallel to the array face at distance `d`, subtending
/// `beta` in both azimuth and elevation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavPlaneSpec {
    pub d: f64,
    pub beta: f64,
    pub theta_tilt: f64,
}

impl UavPlaneSpec {
    pub fn new(d: f64, beta: f64, theta_tilt: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(CsbError::InvalidParameter(format!("plane distance d = {d}")));
        }
        if !(beta > 0.0 && beta < std::f64::consts::PI) {
            return Err(CsbError::InvalidParameter(format!("plane aperture beta = {beta}")));
        }
        Ok(Self { d, beta, theta_tilt })
    }

    /// Half-width of the plane in meters, `d·tan(β/2)`.
    pub fn half_width(&self) -> f64 {
        self.d * (self.beta / 2.0).tan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavPlaneCoord {
    pub u: f64,
    pub v: f64,
}

impl UavPlaneCoord {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn in_bounds(&self) -> bool {
        self.u.abs() <= 1.0 && self.v.abs() <= 1.0
    }
}

/// Maps a rectangular point in front of the array to modified spherical
/// coordinates. Points with `x <= 0` are rejected, as is the origin.
pub fn rect_to_msph(p: RectPoint, theta_tilt: f64) -> Result<SphPoint> {
    let r = p.norm();
    if r == 0.0 {
        return Err(CsbError::Origin);
    }
    // x = 0 sits on the ±90° boundary where arctan(y/x) is undefined.
    if !(p.x > 0.0) {
        return Err(CsbError::BehindArray(p.x));
    }
    Ok(SphPoint {
        r,
        theta: (p.y / p.x).atan(),
        phi: (p.z / p.x).atan() + theta_tilt,
    })
}

pub fn uav_plane_to_rect(c: UavPlaneCoord, spec: &UavPlaneSpec) -> RectPoint {
    let w = spec.half_width();
    let (st, ct) = spec.theta_tilt.sin_cos();
    RectPoint {
        x: c.u * w * st + spec.d * ct,
        y: c.v * w,
        z: c.u * w * ct - spec.d * st,
    }
}

/// Inverse of [`uav_plane_to_rect`] along a far-field direction: the plane
/// coordinate hit by the ray from the array center at `(theta, phi)`.
///
/// Returns `None` when the ray never reaches the plane.
pub fn plane_coord_of_angles(theta: f64, phi: f64, spec: &UavPlaneSpec) -> Option<UavPlaneCoord> {
    let (st, ct) = spec.theta_tilt.sin_cos();
    let dir = RectPoint::new(1.0, theta.tan(), (phi - spec.theta_tilt).tan());
    let along_normal = dir.x * ct - dir.z * st;
    if !(along_normal > 0.0) {
        return None;
    }
    let s = spec.d / along_normal;
    let w = spec.half_width();
    Some(UavPlaneCoord {
        u: s * (dir.x * st + dir.z * ct) / w,
        v: s * dir.y / w,
    })
}

/// Full spherical position of a plane coordinate (range included).
///
/// With a nonzero tilt part of the `[-1, 1]²` square lands behind the
/// array (`x <= 0`); those coordinates are rejected like any other
/// behind-array point.
pub fn msph_of_plane_coord(c: UavPlaneCoord, spec: &UavPlaneSpec) -> Result<SphPoint> {
    rect_to_msph(uav_plane_to_rect(c, spec), spec.theta_tilt)
}

pub fn msph_angles_of_plane_coord(c: UavPlaneCoord, spec: &UavPlaneSpec) -> Result<(f64, f64)> {
    msph_of_plane_coord(c, spec).map(|s| (s.theta, s.phi))
}

impl UavPlaneSpec {
    /// Whether `c` is a point of the bounded UAV plane: in front of the
    /// array with both angles inside `[-β/2, β/2]`.
    pub fn contains(&self, c: UavPlaneCoord) -> bool {
        if !c.in_bounds() {
            return false;
        }
        let half = self.beta / 2.0 + 1e-12;
        match msph_angles_of_plane_coord(c, self) {
            Ok((th, ph)) => th.abs() <= half && ph.abs() <= half,
            Err(_) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn reference_plane(tilt_deg: f64) -> UavPlaneSpec {
        UavPlaneSpec::new(1.0, 160f64.to_radians(), tilt_deg.to_radians()).unwrap()
    }

    #[test]
    fn boresight_and_diagonal() {
        let s = rect_to_msph(RectPoint::new(1.0, 0.0, 0.0), 0.0).unwrap();
        assert_eq!((s.r, s.theta, s.phi), (1.0, 0.0, 0.0));
        let s = rect_to_msph(RectPoint::new(1.0, 1.0, 0.0), 0.0).unwrap();
        assert_abs_diff_eq!(s.r, SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.theta, FRAC_PI_4, epsilon = 1e-15);
        assert_eq!(s.phi, 0.0);
        let tilt = 15f64.to_radians();
        let s = rect_to_msph(RectPoint::new(1.0, 0.0, 0.0), tilt).unwrap();
        assert_eq!(s.phi, tilt);
    }

    #[test]
    fn rejects_behind_and_origin() {
        assert_eq!(
            rect_to_msph(RectPoint::new(-1.0, 0.0, 0.0), 0.0),
            Err(CsbError::BehindArray(-1.0))
        );
        assert!(matches!(rect_to_msph(RectPoint::new(0.0, 1.0, 0.0), 0.0), Err(CsbError::BehindArray(_))));
        assert_eq!(rect_to_msph(RectPoint::new(0.0, 0.0, 0.0), 0.0), Err(CsbError::Origin));
    }

    #[test]
    fn plane_examples() {
        let spec = reference_plane(0.0);
        let p = uav_plane_to_rect(UavPlaneCoord::new(0.0, 0.0), &spec);
        assert_eq!((p.x, p.y, p.z), (1.0, 0.0, 0.0));
        let p = uav_plane_to_rect(UavPlaneCoord::new(0.0, 1.0), &spec);
        assert_abs_diff_eq!(p.x, 1.0);
        assert_abs_diff_eq!(p.y, 80f64.to_radians().tan(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.z, 0.0);

        let spec = reference_plane(15.0);
        let p = uav_plane_to_rect(UavPlaneCoord::new(0.5, -0.25), &spec);
        let t = spec.theta_tilt;
        assert_abs_diff_eq!(p.x * t.cos() - p.z * t.sin(), 1.0, epsilon = 1e-12);
        let s = rect_to_msph(p, t).unwrap();
        assert!(s.theta.abs() <= spec.beta / 2.0 && s.phi.abs() <= spec.beta / 2.0);
    }

    #[test]
    fn plane_angles() {
        for tilt in [0.0, 15.0, -20.0] {
            let (th, ph) = msph_angles_of_plane_coord(UavPlaneCoord::new(0.0, 0.0), &reference_plane(tilt)).unwrap();
            assert_abs_diff_eq!(th, 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(ph, 0.0, epsilon = 1e-15);
        }
        let (th, ph) = msph_angles_of_plane_coord(UavPlaneCoord::new(1.0, 0.0), &reference_plane(0.0)).unwrap();
        assert_abs_diff_eq!(th, 0.0);
        assert_abs_diff_eq!(ph, 80f64.to_radians(), epsilon = 1e-12);

        let spec = reference_plane(15.0);
        let c = UavPlaneCoord::new(0.3, 0.7);
        let composed = rect_to_msph(uav_plane_to_rect(c, &spec), spec.theta_tilt).unwrap();
        let (th, ph) = msph_angles_of_plane_coord(c, &spec).unwrap();
        assert_eq!((th, ph), (composed.theta, composed.phi));
    }

    #[test]
    fn angles_stay_inside_aperture_on_dense_grid() {
        // Untilted: the whole square is the plane.
        let spec = reference_plane(0.0);
        let half = spec.beta / 2.0 + 1e-12;
        for a in 0..=100 {
            for b in 0..=100 {
                let c = UavPlaneCoord::new(-1.0 + 0.02 * a as f64, -1.0 + 0.02 * b as f64);
                let (th, ph) = msph_angles_of_plane_coord(c, &spec).unwrap();
                assert!(th.abs() <= half && ph.abs() <= half, "{c:?} -> {th}, {ph}");
                assert!(spec.contains(c));
            }
        }
        // Tilted: elevation still equals the in-plane angle wherever the
        // point is in front of the array.
        let spec = reference_plane(15.0);
        for a in 0..=100 {
            let u = -1.0 + 0.02 * a as f64;
            let c = UavPlaneCoord::new(u, 0.3);
            match msph_angles_of_plane_coord(c, &spec) {
                Ok((_, ph)) => assert_abs_diff_eq!(ph, (u * spec.half_width() / spec.d).atan(), epsilon = 1e-12),
                Err(e) => {
                    assert!(matches!(e, CsbError::BehindArray(_)));
                    assert!(!spec.contains(c));
                }
            }
        }
        assert!(!spec.contains(UavPlaneCoord::new(-1.0, 0.0)));
        assert!(spec.contains(UavPlaneCoord::new(0.5, -0.25)));
    }

    #[test]
    fn rejects_bad_plane() {
        assert!(UavPlaneSpec::new(0.0, 1.0, 0.0).is_err());
        assert!(UavPlaneSpec::new(1.0, std::f64::consts::PI, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn plane_membership(u in -1.0f64..=1.0, v in -1.0f64..=1.0, tilt in -0.5f64..0.5) {
            let spec = UavPlaneSpec::new(1.3, 2.7, tilt).unwrap();
            let p = uav_plane_to_rect(UavPlaneCoord::new(u, v), &spec);
            let lhs = p.x * tilt.cos() - p.z * tilt.sin();
            prop_assert!((lhs - spec.d).abs() <= 1e-12 * spec.d);
        }

        #[test]
        fn monotone_in_each_axis(u in -1.0f64..0.99, v in -1.0f64..0.99, tilt in -0.4f64..0.4) {
            let spec = UavPlaneSpec::new(1.0, 160f64.to_radians(), tilt).unwrap();
            prop_assume!(spec.contains(UavPlaneCoord::new(u, v)));
            prop_assume!(spec.contains(UavPlaneCoord::new(u + 0.01, v)));
            prop_assume!(spec.contains(UavPlaneCoord::new(u, v + 0.01)));
            let (th0, ph0) = msph_angles_of_plane_coord(UavPlaneCoord::new(u, v), &spec).unwrap();
            let (th1, _) = msph_angles_of_plane_coord(UavPlaneCoord::new(u, v + 0.01), &spec).unwrap();
            let (_, ph1) = msph_angles_of_plane_coord(UavPlaneCoord::new(u + 0.01, v), &spec).unwrap();
            prop_assert!(th1 > th0);
            prop_assert!(ph1 > ph0);
        }

        #[test]
        fn angle_inverse_round_trip(u in -1.0f64..=1.0, v in -1.0f64..=1.0, tilt in -0.4f64..0.4) {
            let spec = UavPlaneSpec::new(1.0, 160f64.to_radians(), tilt).unwrap();
            prop_assume!(spec.contains(UavPlaneCoord::new(u, v)));
            let (th, ph) = msph_angles_of_plane_coord(UavPlaneCoord::new(u, v), &spec).unwrap();
            let c = plane_coord_of_angles(th, ph, &spec).unwrap();
            prop_assert!((c.u - u).abs() < 1e-9 && (c.v - v).abs() < 1e-9);
        }
    }
}
