//! Pattern lock on a 4x4 grid with geofence-triggered rotation.
//!
//! A crossing from inside the fence to outside records a rotation proposal
//! seeded by the new location. The old pattern must then be entered to either
//! accept the generated replacement or skip it; plaintext reads stay refused
//! until one of the two happens.

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geokey::{self, GeoFix, QuantizedDigits};

pub const GRID_SIDE: u8 = 4;
pub const GRID_CELLS: u8 = GRID_SIDE * GRID_SIDE;
pub const MIN_PATTERN: usize = 4;
pub const SALT_LEN: usize = 16;
pub const DIGEST_ALG: &str = "sha256";

/// Ordered distinct cells, row-major on the grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern(Vec<u8>);

impl Pattern {
    pub fn new(cells: Vec<u8>) -> Result<Self> {
        if let Some(&c) = cells.iter().find(|&&c| c >= GRID_CELLS) {
            return Err(Error::CellOutOfRange(c as u32));
        }
        let mut seen = [false; GRID_CELLS as usize];
        for &c in &cells {
            if seen[c as usize] {
                return Err(Error::DuplicateCell(c));
            }
            seen[c as usize] = true;
        }
        if cells.len() < MIN_PATTERN {
            return Err(Error::PatternTooShort(cells.len()));
        }
        Ok(Pattern(cells))
    }

    pub fn cells(&self) -> &[u8] {
        &self.0
    }
}

/// Dash-separated cell list, e.g. `0-5-10-15`. This is also the canonical
/// form fed to the digest.
pub fn format_cells(cells: &[u8]) -> String {
    cells.iter().map(u8::to_string).collect::<Vec<_>>().join("-")
}

/// Parses a dash-separated list without validating it as a pattern.
/// The empty string parses to no cells.
pub fn parse_cells(s: &str) -> Result<Vec<u8>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.trim()
        .split('-')
        .map(|p| {
            let n: u32 = p
                .trim()
                .parse()
                .map_err(|_| Error::FieldOutOfRange(format!("pattern cell {p:?}")))?;
            u8::try_from(n)
                .ok()
                .filter(|&c| c < GRID_CELLS)
                .ok_or(Error::CellOutOfRange(n))
        })
        .collect()
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_cells(&self.0))
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pattern::new(parse_cells(s)?)
    }
}

/// Closed lat/lon rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoFence {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl GeoFence {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self> {
        let lat_ok = |x: f64| (-90.0..=90.0).contains(&x);
        let lon_ok = |x: f64| (-180.0..=180.0).contains(&x);
        if !(lat_ok(lat_min) && lat_ok(lat_max) && lon_ok(lon_min) && lon_ok(lon_max)) {
            return Err(Error::FenceInvalid("coordinate out of range".into()));
        }
        if lat_min >= lat_max || lon_min >= lon_max {
            return Err(Error::FenceInvalid("minimum must be below maximum".into()));
        }
        Ok(GeoFence { lat_min, lat_max, lon_min, lon_max })
    }

    pub fn contains(&self, fix: &GeoFix) -> bool {
        (self.lat_min..=self.lat_max).contains(&fix.latitude())
            && (self.lon_min..=self.lon_max).contains(&fix.longitude())
    }
}

impl fmt::Display for GeoFence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.lat_min, self.lat_max, self.lon_min, self.lon_max)
    }
}

impl FromStr for GeoFence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::FenceInvalid(format!("{s:?} is not latmin,latmax,lonmin,lonmax")))?;
        match parts[..] {
            [a, b, c, d] => GeoFence::new(a, b, c, d),
            _ => Err(Error::FenceInvalid(format!("{s:?} needs four numbers"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LockMeta {
    pub pattern_digest: [u8; 32],
    pub salt: [u8; SALT_LEN],
    pub fence: GeoFence,
    pub pattern_len: usize,
    pub pending_rotation: bool,
    pub proposed_seed: Option<(QuantizedDigits, QuantizedDigits)>,
}

fn digest(salt: &[u8], cells: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(salt);
    h.update(format_cells(cells).as_bytes());
    h.finalize().into()
}

pub fn enroll(pattern: &Pattern, fence: GeoFence, salt: [u8; SALT_LEN]) -> LockMeta {
    LockMeta {
        pattern_digest: digest(&salt, pattern.cells()),
        salt,
        fence,
        pattern_len: pattern.cells().len(),
        pending_rotation: false,
        proposed_seed: None,
    }
}

#[cfg(feature = "os-rng")]
pub fn random_salt() -> [u8; SALT_LEN] {
    rand::random()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LockState {
    Locked,
    Unlocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Session {
    state: LockState,
    rotation_pending: bool,
}

impl Session {
    pub fn locked() -> Self {
        Session { state: LockState::Locked, rotation_pending: false }
    }

    pub fn state(&self) -> LockState {
        self.state
    }

    pub fn rotation_pending(&self) -> bool {
        self.rotation_pending
    }
}

/// Order-sensitive digest comparison; any other sequence is a mismatch.
pub fn verify_pattern(meta: &LockMeta, attempt: &[u8]) -> Result<Session> {
    if digest(&meta.salt, attempt) == meta.pattern_digest {
        Ok(Session { state: LockState::Unlocked, rotation_pending: meta.pending_rotation })
    } else {
        Err(Error::PatternMismatch)
    }
}

/// Records a rotation proposal when `prev` is inside the fence and `cur` is not.
pub fn observe_fix(meta: &LockMeta, prev: &GeoFix, cur: &GeoFix) -> Result<LockMeta> {
    let mut next = meta.clone();
    if meta.fence.contains(prev) && !meta.fence.contains(cur) {
        next.pending_rotation = true;
        next.proposed_seed = Some(geokey::seed_pair(cur)?);
    }
    Ok(next)
}

/// Draws `length` distinct cells from a SHA-256 counter stream over
/// `salt || lat digits || lon digits || counter (u32 big-endian)`.
pub fn generate_pattern(
    seed: &(QuantizedDigits, QuantizedDigits),
    salt: &[u8],
    length: usize,
) -> Result<Pattern> {
    if !(MIN_PATTERN..=GRID_CELLS as usize).contains(&length) {
        return Err(Error::LengthOutOfRange(format!("pattern length {length}")));
    }
    let mut remaining: Vec<u8> = (0..GRID_CELLS).collect();
    let mut cells = Vec::with_capacity(length);
    let mut counter: u32 = 0;
    'outer: loop {
        let mut h = Sha256::new();
        h.update(salt);
        h.update(seed.0.as_ascii());
        h.update(seed.1.as_ascii());
        h.update(counter.to_be_bytes());
        for b in h.finalize() {
            let i = b as usize % remaining.len();
            cells.push(remaining.remove(i));
            if cells.len() == length {
                break 'outer;
            }
        }
        counter += 1;
    }
    Pattern::new(cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationOutcome {
    pub meta: LockMeta,
    /// The newly active pattern when the rotation was accepted.
    pub new_pattern: Option<Pattern>,
    /// Set when the generated pattern happens to equal the old one.
    pub unchanged: bool,
}

pub fn apply_rotation(
    meta: &LockMeta,
    old_attempt: &[u8],
    accept: bool,
    new_fence: GeoFence,
) -> Result<RotationOutcome> {
    verify_pattern(meta, old_attempt)?;
    if !meta.pending_rotation {
        return Err(Error::NoRotationPending);
    }
    let seed = meta.proposed_seed.ok_or(Error::NoRotationPending)?;
    let mut next = meta.clone();
    next.pending_rotation = false;
    next.proposed_seed = None;
    if !accept {
        return Ok(RotationOutcome { meta: next, new_pattern: None, unchanged: true });
    }
    let pattern = generate_pattern(&seed, &meta.salt, meta.pattern_len)?;
    next.pattern_digest = digest(&meta.salt, pattern.cells());
    next.fence = new_fence;
    Ok(RotationOutcome {
        unchanged: next.pattern_digest == meta.pattern_digest,
        meta: next,
        new_pattern: Some(pattern),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadRequest {
    Plaintext,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Allow,
    JunkOnly,
}

pub fn view_policy(session: &Session, request: ReadRequest) -> Access {
    match request {
        ReadRequest::Raw => Access::Allow,
        ReadRequest::Plaintext
            if session.state == LockState::Unlocked && !session.rotation_pending =>
        {
            Access::Allow
        }
        ReadRequest::Plaintext => Access::JunkOnly,
    }
}

/// Serializes the META line fields (without the `META` keyword).
pub(crate) fn format_meta_fields(meta: Option<&LockMeta>, location: Option<&GeoFix>) -> String {
    let mut fields = Vec::new();
    if let Some(m) = meta {
        fields.push(format!("alg={DIGEST_ALG}"));
        fields.push(format!("digest={}", hex::encode(m.pattern_digest)));
        fields.push(format!("salt={}", hex::encode(m.salt)));
        fields.push(format!("fence={}", m.fence));
        fields.push(format!("plen={}", m.pattern_len));
        fields.push(format!("pending={}", u8::from(m.pending_rotation)));
        if let (true, Some((a, b))) = (m.pending_rotation, m.proposed_seed) {
            fields.push(format!("seed={a},{b}"));
        }
    }
    if let Some(f) = location {
        fields.push(format!("loc={},{}", f.latitude(), f.longitude()));
    }
    fields.join(" ")
}

pub(crate) fn parse_meta_fields(s: &str) -> Result<(Option<LockMeta>, Option<GeoFix>)> {
    let bad = |why: String| Error::CorruptVault(format!("META {why}"));
    let mut alg = None;
    let mut digest_hex = None;
    let mut salt_hex = None;
    let mut fence = None;
    let mut plen = None;
    let mut pending = None;
    let mut seed = None;
    let mut location = None;
    for field in s.split(' ').filter(|f| !f.is_empty()) {
        let (k, v) = field.split_once('=').ok_or_else(|| bad(format!("field {field:?}")))?;
        match k {
            "alg" => alg = Some(v),
            "digest" => digest_hex = Some(v),
            "salt" => salt_hex = Some(v),
            "fence" => fence = Some(v.parse::<GeoFence>().map_err(|e| bad(e.to_string()))?),
            "plen" => plen = Some(v.parse::<usize>().map_err(|_| bad(format!("plen {v:?}")))?),
            "pending" => {
                pending = Some(match v {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad(format!("pending {v:?}"))),
                })
            }
            "seed" => {
                let (a, b) = v.split_once(',').ok_or_else(|| bad(format!("seed {v:?}")))?;
                seed = Some((a.parse()?, b.parse()?));
            }
            "loc" => {
                let (a, b) = v.split_once(',').ok_or_else(|| bad(format!("loc {v:?}")))?;
                let lat = a.parse().map_err(|_| bad(format!("loc {v:?}")))?;
                let lon = b.parse().map_err(|_| bad(format!("loc {v:?}")))?;
                location = Some(GeoFix::new(lat, lon)?);
            }
            _ => return Err(bad(format!("unknown field {k:?}"))),
        }
    }
    if digest_hex.is_none() && salt_hex.is_none() && fence.is_none() {
        return Ok((None, location));
    }
    if alg.is_some_and(|a| a != DIGEST_ALG) {
        return Err(bad(format!("unsupported alg {alg:?}")));
    }
    let decode = |name: &str, h: Option<&str>, len: usize| -> Result<Vec<u8>> {
        let bytes = hex::decode(h.ok_or_else(|| bad(format!("missing {name}")))?)
            .map_err(|_| bad(format!("{name} is not hex")))?;
        if bytes.len() != len {
            return Err(bad(format!("{name} must be {len} bytes")));
        }
        Ok(bytes)
    };
    let pattern_digest: [u8; 32] = decode("digest", digest_hex, 32)?.try_into().unwrap();
    let salt: [u8; SALT_LEN] = decode("salt", salt_hex, SALT_LEN)?.try_into().unwrap();
    let pending_rotation = pending.ok_or_else(|| bad("missing pending".into()))?;
    if pending_rotation != seed.is_some() {
        return Err(bad("seed must be present exactly when pending=1".into()));
    }
    let pattern_len = plen.ok_or_else(|| bad("missing plen".into()))?;
    if !(MIN_PATTERN..=GRID_CELLS as usize).contains(&pattern_len) {
        return Err(bad(format!("plen {pattern_len}")));
    }
    let meta = LockMeta {
        pattern_digest,
        salt,
        fence: fence.ok_or_else(|| bad("missing fence".into()))?,
        pattern_len,
        pending_rotation,
        proposed_seed: seed,
    };
    Ok((Some(meta), location))
}
