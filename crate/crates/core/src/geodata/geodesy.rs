//! WGS-84 geodesy: ellipsoidal distance and the local metric frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const WGS84_A: f64 = 6_378_137.0;
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
pub const WGS84_B: f64 = WGS84_A * (1.0 - WGS84_F);
const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

const VINCENTY_TOL: f64 = 1e-14;
const VINCENTY_MAX_ITER: usize = 200;

/// A WGS-84 geographic position in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    #[serde(rename = "lat")]
    pub latitude: f64,
    #[serde(rename = "lon")]
    pub longitude: f64,
    /// Metres above sea level.
    #[serde(rename = "alt", default, skip_serializing_if = "Option::is_none")]
    pub altitude: Option<f64>,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self> {
        let p = Self {
            latitude,
            longitude,
            altitude: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_altitude(mut self, altitude: f64) -> Self {
        self.altitude = Some(altitude);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(Error::InvalidInput {
                name: "latitude",
                message: format!("{} outside [-90, 90]", self.latitude),
            });
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(Error::InvalidInput {
                name: "longitude",
                message: format!("{} outside [-180, 180]", self.longitude),
            });
        }
        Ok(())
    }
}

/// Position in a map's local frame: `x` east and `y` north in metres on the
/// tangent plane at the map origin, `z` in metres above sea level.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl LocalPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn distance(&self, other: &LocalPoint) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    pub fn horizontal_distance(&self, other: &LocalPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

fn to_ecef(lat: f64, lon: f64, h: f64) -> [f64; 3] {
    let (sp, cp) = lat.to_radians().sin_cos();
    let (sl, cl) = lon.to_radians().sin_cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * sp * sp).sqrt();
    [
        (n + h) * cp * cl,
        (n + h) * cp * sl,
        (n * (1.0 - WGS84_E2) + h) * sp,
    ]
}

fn from_ecef(p: [f64; 3]) -> (f64, f64, f64) {
    let lon = p[1].atan2(p[0]);
    let r = p[0].hypot(p[1]);
    let mut lat = p[2].atan2(r * (1.0 - WGS84_E2));
    let mut h = 0.0;
    for _ in 0..20 {
        let s = lat.sin();
        let n = WGS84_A / (1.0 - WGS84_E2 * s * s).sqrt();
        h = r / lat.cos() - n;
        let next = p[2].atan2(r * (1.0 - WGS84_E2 * n / (n + h)));
        let done = (next - lat).abs() < 1e-15;
        lat = next;
        if done {
            break;
        }
    }
    (lat.to_degrees(), lon.to_degrees(), h)
}

/// East-north tangent plane anchored at a geographic origin.
///
/// A geographic position maps to the east and north components of its
/// sea-level point relative to the origin; altitude is carried through as
/// `z` unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    origin: GeoPoint,
    origin_ecef: [f64; 3],
    /// Rows are the east, north and up unit vectors in ECEF.
    axes: [[f64; 3]; 3],
}

impl LocalFrame {
    pub fn new(origin: GeoPoint) -> Self {
        let (sp, cp) = origin.latitude.to_radians().sin_cos();
        let (sl, cl) = origin.longitude.to_radians().sin_cos();
        Self {
            origin,
            origin_ecef: to_ecef(origin.latitude, origin.longitude, 0.0),
            axes: [
                [-sl, cl, 0.0],
                [-sp * cl, -sp * sl, cp],
                [cp * cl, cp * sl, sp],
            ],
        }
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    fn enu(&self, ecef: [f64; 3]) -> [f64; 3] {
        let d = [
            ecef[0] - self.origin_ecef[0],
            ecef[1] - self.origin_ecef[1],
            ecef[2] - self.origin_ecef[2],
        ];
        self.axes.map(|a| a[0] * d[0] + a[1] * d[1] + a[2] * d[2])
    }

    pub fn to_local(&self, p: &GeoPoint) -> LocalPoint {
        let e = self.enu(to_ecef(p.latitude, p.longitude, 0.0));
        LocalPoint::new(e[0], e[1], p.altitude.unwrap_or(0.0))
    }

    /// Inverse of [`LocalFrame::to_local`]; `z` becomes the altitude.
    pub fn to_geo(&self, p: &LocalPoint) -> GeoPoint {
        let (lat, lon) = self.plane_to_geo(p.x, p.y);
        GeoPoint {
            latitude: lat,
            longitude: lon,
            altitude: Some(p.z),
        }
    }

    /// Finds the sea-level point whose east/north offsets are `(x, y)` by
    /// iterating on the unknown up component.
    pub fn plane_to_geo(&self, x: f64, y: f64) -> (f64, f64) {
        let mut up = 0.0;
        let mut result = (self.origin.latitude, self.origin.longitude);
        for _ in 0..50 {
            let offset = [x, y, up];
            let ecef: [f64; 3] = std::array::from_fn(|k| {
                self.origin_ecef[k]
                    + self.axes[0][k] * offset[0]
                    + self.axes[1][k] * offset[1]
                    + self.axes[2][k] * offset[2]
            });
            let (lat, lon, h) = from_ecef(ecef);
            result = (lat, lon);
            if h.abs() < 1e-10 {
                break;
            }
            up -= h;
        }
        result
    }
}

/// Ellipsoidal distance in metres by Vincenty's inverse formula.
///
/// The result is exactly symmetric in its arguments.
pub fn vincenty_distance(a: &GeoPoint, b: &GeoPoint) -> Result<f64> {
    let key = |p: &GeoPoint| (p.latitude, p.longitude);
    let (p, q) = if key(a) <= key(b) { (a, b) } else { (b, a) };
    vincenty_inverse(p.latitude, p.longitude, q.latitude, q.longitude)
}

fn vincenty_inverse(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> Result<f64> {
    let f = WGS84_F;
    let l = (lon2 - lon1).to_radians();
    let u1 = ((1.0 - f) * lat1.to_radians().tan()).atan();
    let u2 = ((1.0 - f) * lat2.to_radians().tan()).atan();
    let (su1, cu1) = u1.sin_cos();
    let (su2, cu2) = u2.sin_cos();

    let mut lambda = l;
    let mut converged = false;
    let (mut sin_sigma, mut cos_sigma, mut sigma) = (0.0, 0.0, 0.0);
    let (mut cos2_alpha, mut cos_2sm) = (0.0, 0.0);
    for _ in 0..VINCENTY_MAX_ITER {
        let (sl, cl) = lambda.sin_cos();
        sin_sigma = ((cu2 * sl).powi(2) + (cu1 * su2 - su1 * cu2 * cl).powi(2)).sqrt();
        if sin_sigma == 0.0 {
            return Ok(0.0);
        }
        cos_sigma = su1 * su2 + cu1 * cu2 * cl;
        sigma = sin_sigma.atan2(cos_sigma);
        let sin_alpha = cu1 * cu2 * sl / sin_sigma;
        cos2_alpha = 1.0 - sin_alpha * sin_alpha;
        // equatorial lines have cos^2(alpha) = 0
        cos_2sm = if cos2_alpha != 0.0 {
            cos_sigma - 2.0 * su1 * su2 / cos2_alpha
        } else {
            0.0
        };
        let c = f / 16.0 * cos2_alpha * (4.0 + f * (4.0 - 3.0 * cos2_alpha));
        let prev = lambda;
        lambda = l
            + (1.0 - c)
                * f
                * sin_alpha
                * (sigma + c * sin_sigma * (cos_2sm + c * cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm)));
        if (lambda - prev).abs() < VINCENTY_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::GeodesicNonConvergence);
    }
    let u_sq = cos2_alpha * (WGS84_A * WGS84_A - WGS84_B * WGS84_B) / (WGS84_B * WGS84_B);
    let big_a = 1.0 + u_sq / 16384.0 * (4096.0 + u_sq * (-768.0 + u_sq * (320.0 - 175.0 * u_sq)));
    let big_b = u_sq / 1024.0 * (256.0 + u_sq * (-128.0 + u_sq * (74.0 - 47.0 * u_sq)));
    let delta_sigma = big_b
        * sin_sigma
        * (cos_2sm
            + big_b / 4.0
                * (cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm)
                    - big_b / 6.0
                        * cos_2sm
                        * (-3.0 + 4.0 * sin_sigma * sin_sigma)
                        * (-3.0 + 4.0 * cos_2sm * cos_2sm)));
    Ok(WGS84_B * big_a * (sigma - delta_sigma))
}

/// Great-circle distance on the sphere of mean radius `(2a + b) / 3`.
pub fn spherical_distance(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let r = (2.0 * WGS84_A + WGS84_B) / 3.0;
    let (p1, p2) = (a.latitude.to_radians(), b.latitude.to_radians());
    let dp = p2 - p1;
    let dl = (b.longitude - a.longitude).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * r * h.sqrt().min(1.0).asin()
}

/// Distance with a flag telling whether the spherical fallback was used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    pub meters: f64,
    pub approximate: bool,
}

/// Vincenty distance, falling back to [`spherical_distance`] for
/// near-antipodal pairs where the iteration does not converge.
pub fn geodesic_distance(a: &GeoPoint, b: &GeoPoint) -> Distance {
    match vincenty_distance(a, b) {
        Ok(meters) => Distance {
            meters,
            approximate: false,
        },
        Err(_) => {
            log::warn!(
                "Vincenty did not converge between ({}, {}) and ({}, {}); using spherical distance",
                a.latitude,
                a.longitude,
                b.latitude,
                b.longitude
            );
            Distance {
                meters: spherical_distance(a, b),
                approximate: true,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gp(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn coincident_points_are_zero_apart() {
        let p = gp(44.49, 11.34);
        assert_eq!(vincenty_distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn one_degree_along_the_equator() {
        let d = vincenty_distance(&gp(0.0, 0.0), &gp(0.0, 1.0)).unwrap();
        let expected = WGS84_A * 1f64.to_radians();
        assert!((d - expected).abs() < 1e-3);
        assert!((d - 111_319.491).abs() < 1e-3);
    }

    #[test]
    fn near_antipodal_pair_falls_back() {
        let a = gp(0.0, 0.0);
        let b = gp(0.5, 179.7);
        assert!(vincenty_distance(&a, &b).is_err());
        let d = geodesic_distance(&a, &b);
        assert!(d.approximate);
        assert!((d.meters - 2.0e7).abs() < 1e5);
    }

    #[test]
    fn local_frame_round_trip() {
        let frame = LocalFrame::new(gp(44.49, 11.34));
        for (dlat, dlon) in [(0.0, 0.0), (0.3, -0.4), (-0.4, 0.55), (0.01, 0.002)] {
            let p = gp(44.49 + dlat, 11.34 + dlon).with_altitude(73.5);
            let back = frame.to_geo(&frame.to_local(&p));
            assert!((back.latitude - p.latitude).abs() < 1e-9);
            assert!((back.longitude - p.longitude).abs() < 1e-9);
            assert_eq!(back.altitude, Some(73.5));
        }
    }

    #[test]
    fn local_axes_point_east_and_north() {
        let frame = LocalFrame::new(gp(44.49, 11.34));
        let east = frame.to_local(&gp(44.49, 11.35));
        let north = frame.to_local(&gp(44.50, 11.34));
        assert!(east.x > 790.0 && east.y.abs() < 1.0);
        assert!(north.y > 1110.0 && north.x.abs() < 1e-6);
    }

    #[test]
    fn coordinates_are_validated() {
        assert!(GeoPoint::new(90.5, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -180.5).is_err());
        assert!(GeoPoint::new(-90.0, 180.0).is_ok());
    }
}
