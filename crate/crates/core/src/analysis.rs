//! Security audit of the storage scheme.
//!
//! * [`leak_decrypt_all`] reads every message back using nothing but the
//!   stored records: the inverse keys sit in the headers.
//! * [`keyspace_census`] counts how many distinct key pairs a region of the
//!   map can produce.
//! * [`brute_force_pair`] recovers a pair whose key fields were redacted by
//!   trying every key pair the region yields.
//! * [`pattern_space`] counts ordered distinct-cell patterns on a grid.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::cipher::PermutationKey;
use crate::codec::{self, RawHeader};
use crate::error::{Error, Result};
use crate::geokey::{self, GeoFix, QuantizedDigits};
use crate::store::{MessageHandle, Vault, MAX_PAIRS};

pub const DEFAULT_MAX_CELLS: u64 = 100_000_000;

/// Rectangular grid of cells evaluated at their centers, latitude-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lat_range: (f64, f64),
    pub lon_range: (f64, f64),
    pub step: f64,
    pub max_cells: u64,
}

impl GridSpec {
    pub fn new(lat_range: (f64, f64), lon_range: (f64, f64), step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidGrid(format!("step {step}")));
        }
        for (name, (lo, hi), limit) in [("lat", lat_range, 90.0), ("lon", lon_range, 180.0)] {
            if lo.is_nan() || hi.is_nan() || lo >= hi || lo < -limit || hi > limit {
                return Err(Error::InvalidGrid(format!("{name} range {lo}:{hi}")));
            }
        }
        Ok(GridSpec { lat_range, lon_range, step, max_cells: DEFAULT_MAX_CELLS })
    }

    pub fn with_max_cells(mut self, max_cells: u64) -> Self {
        self.max_cells = max_cells;
        self
    }

    fn axis_cells(&self, (lo, hi): (f64, f64)) -> u64 {
        // 1e-9 keeps 1.0 / 0.01 from rounding up to 101 cells
        (((hi - lo) / self.step) - 1e-9).ceil().max(1.0) as u64
    }

    pub fn cell_count(&self) -> u64 {
        self.axis_cells(self.lat_range).saturating_mul(self.axis_cells(self.lon_range))
    }

    fn check_size(&self) -> Result<()> {
        let cells = self.cell_count();
        if cells > self.max_cells {
            return Err(Error::GridTooLarge { cells, limit: self.max_cells });
        }
        Ok(())
    }

    /// Cell centers in latitude-major ascending order.
    pub fn centers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (nlat, nlon) = (self.axis_cells(self.lat_range), self.axis_cells(self.lon_range));
        (0..nlat).flat_map(move |i| {
            let lat = (self.lat_range.0 + (i as f64 + 0.5) * self.step).min(self.lat_range.1);
            (0..nlon).map(move |j| {
                let lon = (self.lon_range.0 + (j as f64 + 0.5) * self.step).min(self.lon_range.1);
                (lat, lon)
            })
        })
    }
}

/// Distinct keys reachable from a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Census {
    pub distinct_pairs: u64,
    pub distinct_k1: u64,
    pub distinct_k2: u64,
    pub cells: u64,
}

/// One distinct key pair per entry, tagged with the first cell producing it.
struct KeyCell {
    lat: f64,
    lon: f64,
    seeds: (QuantizedDigits, QuantizedDigits),
    keys: (PermutationKey, PermutationKey),
}

fn distinct_key_cells(g: &GridSpec) -> Result<(Vec<KeyCell>, u64)> {
    g.check_size()?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut cells = 0u64;
    // keys depend only on the seed digits, so memoize per seed
    let mut key_cache: HashMap<QuantizedDigits, PermutationKey> = HashMap::new();
    let mut key_of = |q: QuantizedDigits| *key_cache.entry(q).or_insert_with(|| geokey::complete_key(&q));
    for (lat, lon) in g.centers() {
        cells += 1;
        let seeds = geokey::seed_pair(&GeoFix::new(lat, lon)?)?;
        let keys = (key_of(seeds.0), key_of(seeds.1));
        if seen.insert(keys) {
            out.push(KeyCell { lat, lon, seeds, keys });
        }
    }
    Ok((out, cells))
}

pub fn keyspace_census(g: &GridSpec) -> Result<Census> {
    let (cells, count) = distinct_key_cells(g)?;
    let k1: HashSet<_> = cells.iter().map(|c| c.keys.0).collect();
    let k2: HashSet<_> = cells.iter().map(|c| c.keys.1).collect();
    Ok(Census {
        distinct_pairs: cells.len() as u64,
        distinct_k1: k1.len() as u64,
        distinct_k2: k2.len() as u64,
        cells: count,
    })
}

pub fn format_census(c: &Census) -> String {
    format!("CENSUS {} {}", c.distinct_pairs, c.cells)
}

/// Reconstructs every message from raw `(address, value)` records alone,
/// using the inverse keys and links stored in the headers.
pub fn leak_decrypt_all(records: &[(u32, String)]) -> Result<Vec<(MessageHandle, String)>> {
    let by_addr: BTreeMap<u32, &str> = records.iter().map(|(a, v)| (*a, v.as_str())).collect();
    let part1_floor = 1000 - MAX_PAIRS;

    let mut chunks: BTreeMap<u32, (String, u32)> = BTreeMap::new();
    for (&a1, v1) in by_addr.range(part1_floor..) {
        let (h1, ea2) = codec::decode_header(v1)?;
        let a2 = h1.link_field / 2;
        let v2 = by_addr.get(&a2).ok_or(Error::BrokenChain(a2))?;
        let (h2, ea1) = codec::decode_header(v2)?;
        let opened = codec::open_payloads(&ea1, &h1.inverse_key, &ea2, &h2.inverse_key)?;
        chunks.insert(a1, opened);
    }

    let continuations: HashSet<u32> = chunks.values().map(|(_, n)| *n).filter(|&n| n != 0).collect();
    let mut out = Vec::new();
    // allocation order is descending part-1 address
    for &head in chunks.keys().rev().filter(|a| !continuations.contains(a)) {
        let mut text = String::new();
        let mut at = head;
        let mut visited = HashSet::new();
        loop {
            if !visited.insert(at) {
                return Err(Error::CycleDetected(at));
            }
            let (chunk, next) = chunks.get(&at).ok_or(Error::BrokenChain(at))?;
            text.push_str(chunk);
            if *next == 0 {
                break;
            }
            at = *next;
        }
        out.push((MessageHandle::new(head)?, text));
    }
    Ok(out)
}

pub fn leak_decrypt_vault(v: &Vault) -> Result<Vec<(MessageHandle, String)>> {
    leak_decrypt_all(&v.list_records())
}

/// Parses only the `REC` lines of vault file text, ignoring everything else.
pub fn records_from_file_text(text: &str) -> Vec<(u32, String)> {
    text.split('\n')
        .filter_map(|l| l.strip_prefix("REC "))
        .filter_map(|rest| {
            let (a, v) = rest.split_once(' ')?;
            Some((a.parse().ok()?, v.to_string()))
        })
        .collect()
}

/// Replaces the six key digits of a serialized record value with `000000`.
pub fn redact_keys(value: &str) -> String {
    if value.len() < codec::HEADER_LEN || !value.is_char_boundary(codec::HEADER_LEN) {
        return value.to_string();
    }
    format!("{}000000{}", &value[..5], &value[codec::HEADER_LEN..])
}

/// A record pair whose key fields are not trusted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RedactedPair {
    pub part1_address: u32,
    pub part1: RawHeader,
    pub part2_address: u32,
    pub part2: RawHeader,
}

impl RedactedPair {
    pub fn parse(part1_address: u32, part1_value: &str, part2_address: u32, part2_value: &str) -> Result<Self> {
        let part1 = codec::decode_header_unkeyed(part1_value)?;
        let part2 = codec::decode_header_unkeyed(part2_value)?;
        if part1.link_field != 2 * part2_address || part2.link_field != part2_address {
            return Err(Error::LinkMismatch(format!(
                "links {} / {} do not match addresses {part1_address} / {part2_address}",
                part1.link_field, part2.link_field
            )));
        }
        for p in [&part1, &part2] {
            let n = p.ciphertext.chars().count();
            if n == 0 || n % crate::cipher::BLOCK != 0 {
                return Err(Error::LengthNotBlockMultiple(n));
            }
        }
        Ok(RedactedPair { part1_address, part1, part2_address, part2 })
    }

    /// Locates the pair starting at part-1 address `a1` in a vault.
    pub fn from_vault(v: &Vault, a1: u32) -> Result<Self> {
        let records: BTreeMap<u32, String> = v.list_records().into_iter().collect();
        let v1 = records.get(&a1).ok_or(Error::AddressNotFound(a1))?;
        let link = codec::decode_header_unkeyed(v1)?.link_field;
        let a2 = link / 2;
        let v2 = records.get(&a2).ok_or(Error::BrokenChain(a2))?;
        RedactedPair::parse(a1, &redact_keys(v1), a2, &redact_keys(v2))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateResult {
    pub fix_cell: (QuantizedDigits, QuantizedDigits),
    pub lat: f64,
    pub lon: f64,
    pub plaintext: String,
    pub next_address: u32,
    pub score: f64,
}

pub fn format_candidate(c: &CandidateResult) -> String {
    format!("CAND {:.3} {:.4} {:.4} {}", c.score, c.lat, c.lon, c.plaintext)
}

fn admissible_fraction(text: &str) -> f64 {
    let n = text.chars().count();
    if n == 0 {
        return 0.0;
    }
    text.chars().filter(|&c| codec::is_admissible_char(c)).count() as f64 / n as f64
}

/// Tries every distinct key pair of the grid. Candidates whose recovered text
/// lacks a parseable pointer suffix are dropped; the rest are ranked by score,
/// ties in grid order.
pub fn brute_force_pair(pair: &RedactedPair, g: &GridSpec) -> Result<Vec<CandidateResult>> {
    let (cells, _) = distinct_key_cells(g)?;
    let mut out: Vec<CandidateResult> = cells
        .iter()
        .filter_map(|c| {
            let (chunk, next) = codec::open_payloads(
                &pair.part2.ciphertext,
                &c.keys.0.invert(),
                &pair.part1.ciphertext,
                &c.keys.1.invert(),
            )
            .ok()?;
            Some(CandidateResult {
                fix_cell: c.seeds,
                lat: c.lat,
                lon: c.lon,
                score: admissible_fraction(&chunk),
                plaintext: chunk,
                next_address: next,
            })
        })
        .collect();
    // stable: equal scores keep grid order
    out.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(out)
}

/// Ordered sequences of `length` distinct cells on a `grid_side`² grid.
pub fn pattern_space(grid_side: u32, length: u32) -> Result<u128> {
    if grid_side < 2 {
        return Err(Error::LengthOutOfRange(format!("grid side {grid_side}")));
    }
    let n = (grid_side as u128) * (grid_side as u128);
    if length == 0 || length as u128 > n {
        return Err(Error::LengthOutOfRange(format!("length {length} on {n} cells")));
    }
    (0..length as u128).try_fold(1u128, |acc, i| {
        acc.checked_mul(n - i)
            .ok_or_else(|| Error::LengthOutOfRange(format!("count overflows for side {grid_side}")))
    })
}
