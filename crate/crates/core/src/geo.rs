//! Spherical geodesy: great-circle distance and dead-reckoning forward steps.
//!
//! Inputs are degrees, distances are kilometres. Everything here is a pure
//! function of its arguments.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// IUGG mean Earth radius.
pub const MEAN_EARTH_RADIUS_KM: f64 = 6371.0088;

/// One international nautical mile.
pub const KM_PER_NAUTICAL_MILE: f64 = 1.852;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeoError {
    #[error("invalid {what}: {value}")]
    InvalidCoordinate { what: &'static str, value: f64 },
}

fn invalid(what: &'static str, value: f64) -> GeoError {
    GeoError::InvalidCoordinate { what, value }
}

/// A latitude/longitude position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

impl GeoPoint {
    /// Validated constructor. A longitude of exactly +180 is folded to -180;
    /// anything else outside [-180, 180) is rejected.
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self, GeoError> {
        let point = GeoPoint { lat_deg, lon_deg: if lon_deg == 180.0 { -180.0 } else { lon_deg } };
        point.validate()?;
        Ok(point)
    }

    /// Builds a point from any finite longitude by wrapping it into range.
    pub fn wrapped(lat_deg: f64, lon_deg: f64) -> Result<Self, GeoError> {
        GeoPoint::new(lat_deg, normalize_lon(lon_deg)?)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !self.lat_deg.is_finite() || !(-90.0..=90.0).contains(&self.lat_deg) {
            return Err(invalid("latitude", self.lat_deg));
        }
        if !self.lon_deg.is_finite() || !(-180.0..180.0).contains(&self.lon_deg) {
            return Err(invalid("longitude", self.lon_deg));
        }
        Ok(())
    }
}

/// Sphere used for all distance and projection math.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthModel {
    radius_km: f64,
}

impl EarthModel {
    pub fn new(radius_km: f64) -> Result<Self, GeoError> {
        if !radius_km.is_finite() || radius_km <= 0.0 {
            return Err(invalid("earth radius", radius_km));
        }
        Ok(EarthModel { radius_km })
    }

    pub fn radius_km(&self) -> f64 {
        self.radius_km
    }
}

impl Default for EarthModel {
    fn default() -> Self {
        EarthModel { radius_km: MEAN_EARTH_RADIUS_KM }
    }
}

/// Wraps a longitude into [-180, 180).
pub fn normalize_lon(lon_deg: f64) -> Result<f64, GeoError> {
    if !lon_deg.is_finite() {
        return Err(invalid("longitude", lon_deg));
    }
    if (-180.0..180.0).contains(&lon_deg) {
        return Ok(lon_deg);
    }
    let mut wrapped = (lon_deg + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative offsets
    if wrapped >= 180.0 {
        wrapped -= 360.0;
    }
    Ok(wrapped)
}

/// Great-circle distance by the haversine formula.
pub fn haversine_km(a: GeoPoint, b: GeoPoint, earth: EarthModel) -> Result<f64, GeoError> {
    a.validate()?;
    b.validate()?;
    Ok(haversine_unchecked(a, b, earth.radius_km))
}

#[inline]
pub(crate) fn haversine_unchecked(a: GeoPoint, b: GeoPoint, radius_km: f64) -> f64 {
    let lat1 = a.lat_deg.to_radians();
    let lat2 = b.lat_deg.to_radians();
    let sin_dlat = ((b.lat_deg - a.lat_deg).to_radians() * 0.5).sin();
    let sin_dlon = ((b.lon_deg - a.lon_deg).to_radians() * 0.5).sin();
    let h = sin_dlat * sin_dlat + lat1.cos() * lat2.cos() * sin_dlon * sin_dlon;
    2.0 * radius_km * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Projects `start` forward at constant speed along the great circle whose
/// initial bearing is `cog_deg`. Acceleration is not modelled.
pub fn dead_reckon(
    start: GeoPoint,
    sog_knots: f64,
    cog_deg: f64,
    minutes: f64,
    earth: EarthModel,
) -> Result<GeoPoint, GeoError> {
    start.validate()?;
    if !sog_knots.is_finite() || sog_knots < 0.0 {
        return Err(invalid("speed over ground", sog_knots));
    }
    if !cog_deg.is_finite() || !(0.0..360.0).contains(&cog_deg) {
        return Err(invalid("course over ground", cog_deg));
    }
    if !minutes.is_finite() || minutes <= 0.0 {
        return Err(invalid("interval minutes", minutes));
    }
    if sog_knots == 0.0 {
        return Ok(start);
    }
    let distance_km = sog_knots * (minutes / 60.0) * KM_PER_NAUTICAL_MILE;
    let delta = distance_km / earth.radius_km;
    let theta = cog_deg.to_radians();
    let lat1 = start.lat_deg.to_radians();
    let lon1 = start.lon_deg.to_radians();

    let sin_lat2 = (lat1.sin() * delta.cos() + lat1.cos() * delta.sin() * theta.cos()).clamp(-1.0, 1.0);
    let lat2 = sin_lat2.asin();
    let lon2 = lon1 + (theta.sin() * delta.sin() * lat1.cos()).atan2(delta.cos() - lat1.sin() * sin_lat2);

    Ok(GeoPoint { lat_deg: lat2.to_degrees(), lon_deg: normalize_lon(lon2.to_degrees())? })
}
