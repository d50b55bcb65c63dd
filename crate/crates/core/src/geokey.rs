//! Location-derived key pairs.
//!
//! Each coordinate is truncated to two decimals and reduced to a 4-digit
//! seed; the seed's usable digits (1..6, first occurrence) start the key and
//! the remaining digits are appended, those above the seed's maximum first.

use std::fmt;
use std::str::FromStr;

use crate::cipher::{PermutationKey, BLOCK};
use crate::error::{Error, Result};

/// A latitude/longitude sample in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoFix {
    latitude_deg: f64,
    longitude_deg: f64,
}

impl GeoFix {
    pub fn new(latitude_deg: f64, longitude_deg: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&latitude_deg) {
            return Err(Error::OutOfRangeCoordinate(latitude_deg));
        }
        if !(-180.0..=180.0).contains(&longitude_deg) {
            return Err(Error::OutOfRangeCoordinate(longitude_deg));
        }
        Ok(GeoFix { latitude_deg, longitude_deg })
    }

    pub fn latitude(&self) -> f64 {
        self.latitude_deg
    }

    pub fn longitude(&self) -> f64 {
        self.longitude_deg
    }
}

/// Four decimal digits: last two integer digits then two truncated decimals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuantizedDigits([u8; 4]);

impl QuantizedDigits {
    pub fn digits(&self) -> [u8; 4] {
        self.0
    }

    pub fn as_ascii(&self) -> [u8; 4] {
        self.0.map(|d| b'0' + d)
    }
}

impl fmt::Display for QuantizedDigits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for QuantizedDigits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let b = s.as_bytes();
        if b.len() != 4 || !b.iter().all(u8::is_ascii_digit) {
            return Err(Error::FieldOutOfRange(format!("quantized digits {s:?}")));
        }
        Ok(QuantizedDigits([b[0] - b'0', b[1] - b'0', b[2] - b'0', b[3] - b'0']))
    }
}

/// Truncates |coord| to two decimals. Accepts the latitude or longitude range.
pub fn quantize_digits(coord: f64) -> Result<QuantizedDigits> {
    if !coord.is_finite() || coord.abs() > 180.0 {
        return Err(Error::OutOfRangeCoordinate(coord));
    }
    // The epsilon absorbs representation error in inputs such as 26.15,
    // whose nearest f64 lies just below the decimal value.
    let hundredths = (coord.abs() * 100.0 + 1e-9).floor() as u32;
    let int_part = (hundredths / 100) % 100;
    let frac = hundredths % 100;
    Ok(QuantizedDigits([
        (int_part / 10) as u8,
        (int_part % 10) as u8,
        (frac / 10) as u8,
        (frac % 10) as u8,
    ]))
}

pub fn complete_key(seed: &QuantizedDigits) -> PermutationKey {
    let mut retained: Vec<u8> = Vec::with_capacity(BLOCK);
    for d in seed.0 {
        if (1..=BLOCK as u8).contains(&d) && !retained.contains(&d) {
            retained.push(d);
        }
    }
    let Some(&max) = retained.iter().max() else {
        return PermutationKey::IDENTITY;
    };
    let missing = |d: &u8| !retained.contains(d);
    let above: Vec<u8> = (max + 1..=BLOCK as u8).filter(missing).collect();
    let below: Vec<u8> = (1..max).filter(missing).collect();
    retained.extend(above);
    retained.extend(below);
    let digits: [u8; BLOCK] = retained.try_into().expect("six distinct digits");
    PermutationKey::new(digits).expect("completion yields a permutation")
}

/// `(K1, K2)` from latitude and longitude respectively.
pub fn derive_keys(fix: &GeoFix) -> Result<(PermutationKey, PermutationKey)> {
    let (lat, lon) = seed_pair(fix)?;
    Ok((complete_key(&lat), complete_key(&lon)))
}

pub fn seed_pair(fix: &GeoFix) -> Result<(QuantizedDigits, QuantizedDigits)> {
    Ok((quantize_digits(fix.latitude())?, quantize_digits(fix.longitude())?))
}
