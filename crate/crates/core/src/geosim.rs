//! Simulated location provider: scripted `t,lat,lon` traces replayed against
//! a lock's fence.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geokey::GeoFix;
use crate::lockscreen::{self, GeoFence, LockMeta};

#[derive(Debug, Clone, PartialEq)]
pub struct LocationScript {
    samples: Vec<(f64, GeoFix)>,
}

impl LocationScript {
    pub fn new(samples: Vec<(f64, GeoFix)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TraceFormatError { line: 0, reason: "trace has no samples".into() });
        }
        for (i, w) in samples.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::TraceFormatError {
                    line: i + 2,
                    reason: format!("timestamp {} does not increase", w[1].0),
                });
            }
        }
        Ok(LocationScript { samples })
    }

    /// Parses CSV `t,lat,lon` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut samples: Vec<(f64, GeoFix)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| Error::TraceFormatError { line: i + 1, reason };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let [t, lat, lon] = cols[..] else {
                return Err(err(format!("expected 3 columns, got {}", cols.len())));
            };
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
            let (t, lat, lon) = (num(t)?, num(lat)?, num(lon)?);
            if !t.is_finite() {
                return Err(err(format!("bad timestamp {t}")));
            }
            if let Some(&(prev, _)) = samples.last() {
                if t <= prev {
                    return Err(err(format!("timestamp {t} does not increase")));
                }
            }
            let fix = GeoFix::new(lat, lon).map_err(|e| err(e.to_string()))?;
            samples.push((t, fix));
        }
        if samples.is_empty() {
            return Err(Error::TraceFormatError { line: 0, reason: "trace has no samples".into() });
        }
        Ok(LocationScript { samples })
    }

    pub fn samples(&self) -> &[(f64, GeoFix)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<LocationScript> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::StorageUnavailable(format!("{}: {e}", path.display())))?;
    LocationScript::parse(&text)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceState {
    pub current: GeoFix,
    pub previous: Option<GeoFix>,
}

impl DeviceState {
    pub fn at(fix: GeoFix) -> Self {
        DeviceState { current: fix, previous: None }
    }
}

pub fn inside(fence: &GeoFence, fix: &GeoFix) -> bool {
    fence.contains(fix)
}

pub fn step(state: &DeviceState, script: &LocationScript, index: usize) -> Result<DeviceState> {
    let &(_, fix) = script.samples.get(index).ok_or(Error::IndexOutOfRange(index))?;
    Ok(DeviceState { current: fix, previous: Some(state.current) })
}

/// Steps the device and feeds the move to the lock.
/// Returns the new state, the updated lock, and whether this move left the fence.
pub fn step_observed(
    state: &DeviceState,
    script: &LocationScript,
    index: usize,
    meta: &LockMeta,
) -> Result<(DeviceState, LockMeta, bool)> {
    let next = step(state, script, index)?;
    let updated = lockscreen::observe_fix(meta, &state.current, &next.current)?;
    let crossed = inside(&meta.fence, &state.current) && !inside(&meta.fence, &next.current);
    Ok((next, updated, crossed))
}
