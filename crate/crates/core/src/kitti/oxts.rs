//! OXTS GPS/IMU records and their conversion to world poses.
//!
//! Positions use a Mercator projection whose scale is frozen at the latitude
//! of the first record of a sequence; orientation is `Rz(yaw)·Ry(pitch)·Rx(roll)`.
//! The resulting pose maps IMU coordinates into the world frame
//! (x east, y north, z up).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::RigidTransform;

pub const EARTH_RADIUS: f64 = 6_378_137.0;

/// Number of fields in a KITTI raw OXTS line.
pub const OXTS_FIELDS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct OxtsRecord {
    /// Degrees.
    pub lat: f64,
    /// Degrees.
    pub lon: f64,
    /// Meters.
    pub alt: f64,
    /// Radians.
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Velocities, accelerations, accuracies and status fields, unused.
    pub rest: Vec<f64>,
}

impl OxtsRecord {
    pub fn parse(line: &str) -> Result<Self> {
        let values = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("OXTS field {t:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() < 6 {
            return Err(Error::Parse(format!(
                "OXTS record needs at least 6 fields, got {}",
                values.len()
            )));
        }
        let rec = OxtsRecord {
            lat: values[0],
            lon: values[1],
            alt: values[2],
            roll: values[3],
            pitch: values[4],
            yaw: values[5],
            rest: values[6..].to_vec(),
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let line = text
            .lines()
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| Error::format(path, "empty OXTS file"))?;
        Self::parse(line).map_err(|e| Error::format(path, e.to_string()))
    }

    fn validate(&self) -> Result<()> {
        let all = [self.lat, self.lon, self.alt, self.roll, self.pitch, self.yaw];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::Parse("non-finite OXTS pose field".into()));
        }
        if self.lat.abs() > 90.0 || self.lon.abs() > 180.0 {
            return Err(Error::Domain(format!(
                "latitude/longitude ({}, {}) out of range",
                self.lat, self.lon
            )));
        }
        Ok(())
    }

    /// Whitespace-separated line, padded with zeros to the full 30 fields.
    pub fn to_line(&self) -> String {
        let mut s = String::new();
        let head = [self.lat, self.lon, self.alt, self.roll, self.pitch, self.yaw];
        let pad = OXTS_FIELDS.saturating_sub(6 + self.rest.len());
        for (i, v) in head
            .iter()
            .chain(self.rest.iter())
            .chain(std::iter::repeat_n(&0.0, pad))
            .enumerate()
        {
            if i > 0 {
                s.push(' ');
            }
            write!(s, "{v}").unwrap();
        }
        s
    }

    /// Encodes a local pose as a record. Translation zero maps to `origin`;
    /// decoding with `scale_lat0 = origin.lat` gives back `world_from_imu`
    /// shifted by the Mercator position of `origin`.
    pub fn from_world_pose(world_from_imu: &RigidTransform, origin: &GeoOrigin) -> Result<Self> {
        let scale = mercator_scale(origin.lat)?;
        let (x0, y0) = mercator(origin.lat, origin.lon, scale)?;
        let t = world_from_imu.translation();
        let (lat, lon) = inverse_mercator(x0 + t.x, y0 + t.y, scale);
        let (roll, pitch, yaw) = world_from_imu.euler_zyx();
        Ok(OxtsRecord {
            lat,
            lon,
            alt: origin.alt + t.z,
            roll,
            pitch,
            yaw,
            rest: vec![0.0; OXTS_FIELDS - 6],
        })
    }
}

/// Geographic anchor used when writing synthetic OXTS records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoOrigin {
    pub lat: f64,
    pub lon: f64,
    pub alt: f64,
}

impl Default for GeoOrigin {
    /// Karlsruhe, where the KITTI drives were recorded.
    fn default() -> Self {
        GeoOrigin {
            lat: 49.0,
            lon: 8.4,
            alt: 115.0,
        }
    }
}

/// `cos(lat0)` for a latitude in degrees.
pub fn mercator_scale(lat0: f64) -> Result<f64> {
    if !lat0.is_finite() || lat0.abs() >= 90.0 {
        return Err(Error::Domain(format!("latitude {lat0} has no Mercator scale")));
    }
    Ok((lat0 * PI / 180.0).cos())
}

/// Scaled Mercator coordinates in meters.
pub fn mercator(lat: f64, lon: f64, scale: f64) -> Result<(f64, f64)> {
    if !lat.is_finite() || lat.abs() >= 90.0 {
        return Err(Error::Domain(format!("latitude {lat} is at or beyond a pole")));
    }
    let x = scale * EARTH_RADIUS * lon.to_radians();
    let y = scale * EARTH_RADIUS * (FRAC_PI_4 + lat.to_radians() / 2.0).tan().ln();
    Ok((x, y))
}

pub fn inverse_mercator(x: f64, y: f64, scale: f64) -> (f64, f64) {
    let lon = (x / (scale * EARTH_RADIUS)).to_degrees();
    let lat = (2.0 * (y / (scale * EARTH_RADIUS)).exp().atan() - FRAC_PI_2).to_degrees();
    (lat, lon)
}

/// World-from-IMU pose of one record; `scale_lat0` is the latitude (degrees)
/// of the first record of the sequence.
pub fn oxts_to_world_pose(rec: &OxtsRecord, scale_lat0: f64) -> Result<RigidTransform> {
    let scale = mercator_scale(scale_lat0)?;
    let (x, y) = mercator(rec.lat, rec.lon, scale)?;
    Ok(RigidTransform::from_euler_zyx(
        rec.roll,
        rec.pitch,
        rec.yaw,
        Vector3::new(x, y, rec.alt),
    ))
}

/// World poses for a whole sequence, Mercator scale frozen at the first record.
pub fn world_poses(records: &[OxtsRecord]) -> Result<Vec<RigidTransform>> {
    let Some(first) = records.first() else {
        return Ok(Vec::new());
    };
    records
        .iter()
        .map(|r| oxts_to_world_pose(r, first.lat))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = "49.015003823272 8.4342971002335 116.43032836914 0.035752 0.00903 -2.6087069803847 \
        -7.3709021238101 -6.9520938069798 8.0558005409431 10.101299 -0.054069889998211 -0.17475217646169 \
        0.93137073123013 -0.67045102054622 9.6981081771237 -0.44751016454301 -0.13394401437394 \
        -1.0224138018719 0.0098060223802474 -0.018432962766215 -0.085624314616536 \
        0.0028926637919087 -0.0034282149307063 -0.35154299223917 0.49091744600235 0.6946 4 11 6 6";

    fn record(lat: f64, yaw: f64) -> OxtsRecord {
        OxtsRecord {
            lat,
            lon: 8.4,
            alt: 110.0,
            roll: 0.01,
            pitch: -0.02,
            yaw,
            rest: vec![],
        }
    }

    #[test]
    fn parses_full_record() {
        let rec = OxtsRecord::parse(LINE).unwrap();
        assert_eq!(rec.lat, 49.015003823272);
        assert_eq!(rec.yaw, -2.6087069803847);
        assert_eq!(rec.rest.len(), 24);
        let again = OxtsRecord::parse(&rec.to_line()).unwrap();
        assert_eq!(again, rec);
    }

    #[test]
    fn rejects_short_or_invalid_records() {
        assert!(OxtsRecord::parse("49.0 8.4 100").is_err());
        assert!(OxtsRecord::parse("49.0 8.4 100 0 0 x").is_err());
        assert!(matches!(
            OxtsRecord::parse("91 8.4 100 0 0 0"),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn pole_is_a_domain_error() {
        assert!(matches!(
            oxts_to_world_pose(&record(90.0, 0.0), 49.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            oxts_to_world_pose(&record(49.0, 0.0), -90.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn identical_records_give_identity() {
        let a = oxts_to_world_pose(&record(49.0, 0.3), 49.0).unwrap();
        let b = oxts_to_world_pose(&record(49.0, 0.3), 49.0).unwrap();
        assert!(a.inverse().compose(&b).identity_error() < 1e-9);
    }

    #[test]
    fn small_latitude_step_is_about_1_1131_m() {
        // Mercator: dy/dlat = s·R / cos(lat) = R at lat = lat0, so
        // 1e-5° -> R·1e-5·π/180 = 1.11319 m
        let a = oxts_to_world_pose(&record(49.0, 0.0), 49.0).unwrap();
        let b = oxts_to_world_pose(&record(49.0 + 1e-5, 0.0), 49.0).unwrap();
        let d = b.translation() - a.translation();
        assert!((d.norm() - 1.1131).abs() / 1.1131 < 1e-3);
        assert!(d.y > 0.0 && d.x.abs() < 1e-9);
    }

    #[test]
    fn quarter_turn_yaw() {
        let mut r0 = record(49.0, 0.0);
        r0.roll = 0.0;
        r0.pitch = 0.0;
        let mut r1 = r0.clone();
        r1.yaw = FRAC_PI_2;
        let a = oxts_to_world_pose(&r0, 49.0).unwrap();
        let b = oxts_to_world_pose(&r1, 49.0).unwrap();
        let rel = a.inverse().compose(&b);
        let expected = RigidTransform::from_euler_zyx(0.0, 0.0, FRAC_PI_2, Vector3::zeros());
        assert!(rel.approx_eq(&expected, 1e-9));
        assert!(rel.translation().norm() < 1e-9);
    }

    #[test]
    fn world_pose_round_trips_through_record() {
        let origin = GeoOrigin::default();
        let pose = RigidTransform::from_euler_zyx(0.02, -0.01, 1.2, Vector3::new(12.5, -40.25, 1.5));
        let rec = OxtsRecord::from_world_pose(&pose, &origin).unwrap();
        let back = oxts_to_world_pose(&rec, origin.lat).unwrap();
        let (x0, y0) = mercator(origin.lat, origin.lon, mercator_scale(origin.lat).unwrap()).unwrap();
        let shifted = RigidTransform::from_translation(Vector3::new(-x0, -y0, -origin.alt)).compose(&back);
        assert!(shifted.approx_eq(&pose, 1e-6), "{shifted:?}");
    }
}
