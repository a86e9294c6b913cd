//! WGS84 geodesic reference backed by Karney's algorithm.

use geographiclib_rs::{DirectGeodesic, Geodesic, InverseGeodesic};

/// Ellipsoidal distance in metres between two (lat, lon) points in degrees.
pub fn distance(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let s12: f64 = Geodesic::wgs84().inverse(lat1, lon1, lat2, lon2);
    s12
}

/// Point reached after travelling `s` metres from (lat, lon) along azimuth
/// `azimuth` degrees clockwise from north.
pub fn destination(lat: f64, lon: f64, azimuth: f64, s: f64) -> (f64, f64) {
    Geodesic::wgs84().direct(lat, lon, azimuth, s)
}

/// Geodetic (lat, lon, h) to ECEF, WGS84.
pub fn to_ecef(lat: f64, lon: f64, h: f64) -> [f64; 3] {
    let a = 6_378_137.0;
    let f = 1.0 / 298.257_223_563;
    let e2 = f * (2.0 - f);
    let (sp, cp) = lat.to_radians().sin_cos();
    let (sl, cl) = lon.to_radians().sin_cos();
    let n = a / (1.0 - e2 * sp * sp).sqrt();
    [
        (n + h) * cp * cl,
        (n + h) * cp * sl,
        (n * (1.0 - e2) + h) * sp,
    ]
}

/// East-north-up offset of `p` from the origin (lat0, lon0, h0).
pub fn enu(lat0: f64, lon0: f64, h0: f64, p: (f64, f64, f64)) -> [f64; 3] {
    let o = to_ecef(lat0, lon0, h0);
    let q = to_ecef(p.0, p.1, p.2);
    let d = [q[0] - o[0], q[1] - o[1], q[2] - o[2]];
    let (sp, cp) = lat0.to_radians().sin_cos();
    let (sl, cl) = lon0.to_radians().sin_cos();
    [
        -sl * d[0] + cl * d[1],
        -sp * cl * d[0] - sp * sl * d[1] + cp * d[2],
        cp * cl * d[0] + cp * sl * d[1] + sp * d[2],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_degree_of_latitude_at_equator() {
        let d = distance(0.0, 0.0, 1.0, 0.0);
        assert!((d - 110_574.388_557).abs() < 1e-3);
    }

    #[test]
    fn destination_inverts_distance() {
        let (lat, lon) = destination(44.49, 11.34, 37.0, 1234.5);
        assert!((distance(44.49, 11.34, lat, lon) - 1234.5).abs() < 1e-6);
    }
}
