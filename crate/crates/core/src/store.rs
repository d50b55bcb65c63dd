//! File-backed vault of record pairs.
//!
//! Pair `k` (1-based) lives at part-2 address `k` and part-1 address
//! `1000 - k`. A message is a chain of pairs; each chunk's plaintext ends in
//! the part-1 address of the next chunk, or `0` for the last one.
//!
//! File layout:
//!
//! ```text
//! GEOVAULT v1
//! META <key>=<value> ...
//! REC <address> <serialized record value>
//! ```

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::codec::{self, RecordPair, StoredRecord, MAX_CHUNK};
use crate::error::{Error, Result};
use crate::geokey::GeoFix;
use crate::lockscreen::LockMeta;

pub const MAGIC: &str = "GEOVAULT v1";
pub const MAX_PAIRS: u32 = 498;
const ADDRESS_SPACE: u32 = 1000;

/// Part-1 address of the first chunk of a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MessageHandle(u32);

impl MessageHandle {
    pub fn new(id: u32) -> Result<Self> {
        if (ADDRESS_SPACE - MAX_PAIRS..ADDRESS_SPACE).contains(&id) {
            Ok(MessageHandle(id))
        } else {
            Err(Error::AddressNotFound(id))
        }
    }

    pub fn id(&self) -> u32 {
        self.0
    }
}

impl std::fmt::Display for MessageHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `(part1, part2)` addresses of the `k`-th pair.
pub fn pair_addresses(k: u32) -> (u32, u32) {
    (ADDRESS_SPACE - k, k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vault {
    path: Option<PathBuf>,
    records: BTreeMap<u32, String>,
    pairs_allocated: u32,
    meta: Option<LockMeta>,
    location: Option<GeoFix>,
}

impl Vault {
    /// A vault that is never written to disk.
    pub fn in_memory() -> Self {
        Vault {
            path: None,
            records: BTreeMap::new(),
            pairs_allocated: 0,
            meta: None,
            location: None,
        }
    }

    pub fn open(path: impl AsRef<Path>, create_if_missing: bool) -> Result<Self> {
        let path = path.as_ref();
        match fs::read(path) {
            Ok(bytes) => {
                let text = String::from_utf8(bytes)
                    .map_err(|_| Error::CorruptVault("file is not valid text".into()))?;
                let mut v = Vault::parse(&text)?;
                v.path = Some(path.to_path_buf());
                Ok(v)
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound && create_if_missing => {
                let mut v = Vault::in_memory();
                v.path = Some(path.to_path_buf());
                v.save()?;
                Ok(v)
            }
            Err(e) => Err(Error::StorageUnavailable(format!("{}: {e}", path.display()))),
        }
    }

    /// Parses vault file text and validates every record and pair.
    pub fn parse(text: &str) -> Result<Self> {
        let corrupt = |n: usize, why: &str| Error::CorruptVault(format!("line {n}: {why}"));
        let mut lines = text.split('\n');
        if lines.next() != Some(MAGIC) {
            return Err(corrupt(1, "missing GEOVAULT v1 magic"));
        }
        let meta_line = lines.next().ok_or_else(|| corrupt(2, "missing META line"))?;
        let meta_fields = meta_line
            .strip_prefix("META")
            .filter(|rest| rest.is_empty() || rest.starts_with(' '))
            .ok_or_else(|| corrupt(2, "expected META"))?;
        let (meta, location) = crate::lockscreen::parse_meta_fields(meta_fields.trim_start())
            .map_err(|e| corrupt(2, &e.to_string()))?;

        let mut records = BTreeMap::new();
        let mut last = 0;
        for (i, line) in lines.enumerate() {
            let n = i + 3;
            if line.is_empty() {
                continue;
            }
            let rest = line.strip_prefix("REC ").ok_or_else(|| corrupt(n, "expected REC"))?;
            let (addr, value) = rest.split_once(' ').ok_or_else(|| corrupt(n, "missing value"))?;
            let addr: u32 = addr.parse().map_err(|_| corrupt(n, "bad address"))?;
            if !(1..ADDRESS_SPACE).contains(&addr) || addr <= last {
                return Err(corrupt(n, "address out of range or out of order"));
            }
            last = addr;
            StoredRecord::parse(addr, value).map_err(|e| corrupt(n, &e.to_string()))?;
            records.insert(addr, value.to_string());
        }

        let pairs_allocated = records.keys().copied().filter(|&a| a <= MAX_PAIRS).max().unwrap_or(0);
        let mut v = Vault { path: None, records, pairs_allocated, meta, location };
        v.validate_pairs()?;
        Ok(v)
    }

    fn validate_pairs(&mut self) -> Result<()> {
        let expected: BTreeSet<u32> = (1..=self.pairs_allocated)
            .flat_map(|k| {
                let (a1, a2) = pair_addresses(k);
                [a1, a2]
            })
            .collect();
        let present: BTreeSet<u32> = self.records.keys().copied().collect();
        if expected != present {
            return Err(Error::CorruptVault(format!(
                "addresses do not form {} allocated pairs",
                self.pairs_allocated
            )));
        }
        for k in 1..=self.pairs_allocated {
            self.pair(k).map_err(|e| Error::CorruptVault(e.to_string()))?;
        }
        Ok(())
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        out.push_str("META");
        let fields = crate::lockscreen::format_meta_fields(self.meta.as_ref(), self.location.as_ref());
        if !fields.is_empty() {
            out.push(' ');
            out.push_str(&fields);
        }
        out.push('\n');
        for (addr, value) in &self.records {
            out.push_str(&format!("REC {addr} {value}\n"));
        }
        out
    }

    /// Writes to a sibling temporary file and renames it over the vault.
    pub fn save(&self) -> Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        let unavailable = |e: io::Error| Error::StorageUnavailable(format!("{}: {e}", path.display()));
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(unavailable)?;
        tmp.write_all(self.serialize().as_bytes()).map_err(unavailable)?;
        tmp.as_file().sync_all().map_err(unavailable)?;
        tmp.persist(path).map_err(|e| unavailable(e.error))?;
        Ok(())
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn pairs_allocated(&self) -> u32 {
        self.pairs_allocated
    }

    pub fn meta(&self) -> Option<&LockMeta> {
        self.meta.as_ref()
    }

    pub fn set_meta(&mut self, meta: LockMeta) {
        self.meta = Some(meta);
    }

    pub fn location(&self) -> Option<&GeoFix> {
        self.location.as_ref()
    }

    pub fn set_location(&mut self, fix: GeoFix) {
        self.location = Some(fix);
    }

    /// Raw `(address, value)` listing in address order. Never decrypts.
    pub fn list_records(&self) -> Vec<(u32, String)> {
        self.records.iter().map(|(&a, v)| (a, v.clone())).collect()
    }

    fn record(&self, address: u32) -> Option<Result<StoredRecord>> {
        self.records.get(&address).map(|v| StoredRecord::parse(address, v))
    }

    fn pair(&self, k: u32) -> Result<RecordPair> {
        let (a1, a2) = pair_addresses(k);
        let part1 = self.record(a1).ok_or(Error::AddressNotFound(a1))??;
        let part2 = self.record(a2).ok_or(Error::AddressNotFound(a2))??;
        let pair = RecordPair { part1, part2 };
        codec::check_links(&pair)?;
        Ok(pair)
    }

    /// Stores `text` at `fix` and returns the handle of its first chunk.
    /// Either every record is written or the vault is left untouched.
    pub fn put_message(&mut self, text: &str, fix: &GeoFix) -> Result<MessageHandle> {
        if text.is_empty() {
            return Err(Error::EmptyMessage);
        }
        codec::check_alphabet(text)?;
        let first_k = self.pairs_allocated + 1;
        let free = (MAX_PAIRS - self.pairs_allocated) as usize;
        let min_chunks = text.chars().count().div_ceil(MAX_CHUNK);
        if min_chunks > free {
            return Err(Error::CapacityExceeded { needed: min_chunks, free });
        }
        let chars: Vec<char> = text.chars().collect();
        let lengths = plan_chunks(&chars, first_k, free)?;

        let mut staged = self.records.clone();
        let mut pos = 0;
        for (i, &len) in lengths.iter().enumerate() {
            let k = first_k + i as u32;
            let (a1, a2) = pair_addresses(k);
            let next = if i + 1 < lengths.len() { pair_addresses(k + 1).0 } else { 0 };
            let chunk: String = chars[pos..pos + len].iter().collect();
            pos += len;
            let pair = codec::assemble_pair(&codec::attach_pointer(&chunk, next)?, fix, a1, a2)?;
            staged.insert(a1, pair.part1.serialize()?);
            staged.insert(a2, pair.part2.serialize()?);
        }

        let previous = std::mem::replace(&mut self.records, staged);
        let previous_pairs = self.pairs_allocated;
        self.pairs_allocated += lengths.len() as u32;
        if let Err(e) = self.save() {
            self.records = previous;
            self.pairs_allocated = previous_pairs;
            return Err(e);
        }
        Ok(MessageHandle(pair_addresses(first_k).0))
    }

    fn open_chunk(&self, part1_address: u32) -> Result<(String, u32)> {
        let part1 = self.record(part1_address).ok_or(Error::AddressNotFound(part1_address))??;
        if part1.header.link_field % 2 != 0 {
            return Err(Error::LinkMismatch(format!(
                "part 1 at {part1_address} carries odd link {}",
                part1.header.link_field
            )));
        }
        let a2 = part1.header.link_field / 2;
        let part2 = self.record(a2).ok_or(Error::BrokenChain(a2))??;
        codec::disassemble_pair(&RecordPair { part1, part2 })
    }

    /// Follows the pointer chain from `h` and concatenates the chunks.
    pub fn get_message(&self, h: MessageHandle) -> Result<String> {
        if !self.records.contains_key(&h.0) {
            return Err(Error::AddressNotFound(h.0));
        }
        let mut out = String::new();
        let mut visited = HashSet::new();
        let mut at = h.0;
        loop {
            if !visited.insert(at) {
                return Err(Error::CycleDetected(at));
            }
            if !self.records.contains_key(&at) {
                return Err(Error::BrokenChain(at));
            }
            let (chunk, next) = self.open_chunk(at)?;
            out.push_str(&chunk);
            if next == 0 {
                return Ok(out);
            }
            at = next;
        }
    }

    /// Handles of every message in allocation order.
    pub fn handles(&self) -> Result<Vec<MessageHandle>> {
        let mut continuations = HashSet::new();
        for k in 1..=self.pairs_allocated {
            let (_, next) = codec::disassemble_pair(&self.pair(k)?)?;
            if next != 0 {
                continuations.insert(next);
            }
        }
        Ok((1..=self.pairs_allocated)
            .map(|k| pair_addresses(k).0)
            .filter(|a| !continuations.contains(a))
            .map(MessageHandle)
            .collect())
    }

    /// Messages containing `term` (case-sensitive), in allocation order.
    pub fn find_messages(&self, term: &str) -> Result<Vec<(MessageHandle, String)>> {
        if term.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let mut out = Vec::new();
        for h in self.handles()? {
            let text = self.get_message(h)?;
            if text.contains(term) {
                out.push((h, text));
            }
        }
        Ok(out)
    }

    #[cfg(test)]
    pub(crate) fn records_mut(&mut self) -> &mut BTreeMap<u32, String> {
        &mut self.records
    }
}

/// Chunk lengths (each 1..=MAX_CHUNK) covering `chars`, preferring the
/// longest chunks, such that no cipher half ends in the pad character.
fn plan_chunks(chars: &[char], first_k: u32, free: usize) -> Result<Vec<usize>> {
    let n = chars.len();
    // failed[(pos, chunk index)] marks dead ends already explored
    let mut failed: HashSet<(usize, usize)> = HashSet::new();
    let mut plan = Vec::new();
    if search(chars, 0, 0, first_k, free, &mut plan, &mut failed) {
        return Ok(plan);
    }
    if n.div_ceil(MAX_CHUNK) > free {
        return Err(Error::CapacityExceeded { needed: n.div_ceil(MAX_CHUNK), free });
    }
    Err(Error::ChunkEndsWithPad)
}

fn search(
    chars: &[char],
    pos: usize,
    idx: usize,
    first_k: u32,
    free: usize,
    plan: &mut Vec<usize>,
    failed: &mut HashSet<(usize, usize)>,
) -> bool {
    let remaining = chars.len() - pos;
    if remaining == 0 {
        return true;
    }
    // Even all-maximal chunks could not fit in the free pairs.
    if idx + remaining.div_ceil(MAX_CHUNK) > free || failed.contains(&(pos, idx)) {
        return false;
    }
    let k = first_k + idx as u32;
    for len in (1..=remaining.min(MAX_CHUNK)).rev() {
        let next = if len == remaining { 0 } else { pair_addresses(k + 1).0 };
        let chunk: String = chars[pos..pos + len].iter().collect();
        let with_ptr = format!("{chunk} {next}");
        if !codec::halves_are_encryptable(&with_ptr) {
            continue;
        }
        plan.push(len);
        if search(chars, pos + len, idx + 1, first_k, free, plan, failed) {
            return true;
        }
        plan.pop();
    }
    failed.insert((pos, idx));
    false
}
