//! Block transposition over order-6 permutation keys.
//!
//! A key `k` maps each 6-character block so that output position `l` takes
//! input position `k[l]` (both 1-based). Encryption pads with `'z'` up to a
//! whole number of blocks and applies the transposition twice; decryption
//! applies the inverse key twice and strips the trailing pad.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const BLOCK: usize = 6;
pub const PAD: char = 'z';

/// A permutation of the digits 1..=6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PermutationKey([u8; BLOCK]);

impl PermutationKey {
    pub const IDENTITY: PermutationKey = PermutationKey([1, 2, 3, 4, 5, 6]);

    pub fn new(digits: [u8; BLOCK]) -> Result<Self> {
        let mut seen = [false; BLOCK];
        for &d in &digits {
            if !(1..=BLOCK as u8).contains(&d) || seen[d as usize - 1] {
                return Err(Error::InvalidKey(digits_string(&digits)));
            }
            seen[d as usize - 1] = true;
        }
        Ok(PermutationKey(digits))
    }

    pub fn digits(&self) -> [u8; BLOCK] {
        self.0
    }

    /// The inverse permutation: `inv[j]` is the position `l` with `key[l] = j`.
    pub fn invert(&self) -> PermutationKey {
        let mut inv = [0u8; BLOCK];
        for (l, &j) in self.0.iter().enumerate() {
            inv[j as usize - 1] = l as u8 + 1;
        }
        PermutationKey(inv)
    }

    /// All 720 keys in lexicographic order.
    pub fn all() -> Vec<PermutationKey> {
        let mut out = Vec::with_capacity(720);
        let mut cur = [1u8, 2, 3, 4, 5, 6];
        loop {
            out.push(PermutationKey(cur));
            // next lexicographic permutation
            let Some(i) = (0..BLOCK - 1).rev().find(|&i| cur[i] < cur[i + 1]) else {
                break;
            };
            let j = (i + 1..BLOCK).rev().find(|&j| cur[j] > cur[i]).unwrap();
            cur.swap(i, j);
            cur[i + 1..].reverse();
        }
        out
    }
}

fn digits_string(d: &[u8]) -> String {
    d.iter().map(|x| char::from(b'0' + x % 10)).collect()
}

impl fmt::Display for PermutationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&digits_string(&self.0))
    }
}

impl FromStr for PermutationKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bytes = s.as_bytes();
        if bytes.len() != BLOCK || !bytes.iter().all(u8::is_ascii_digit) {
            return Err(Error::InvalidKey(s.to_string()));
        }
        let mut digits = [0u8; BLOCK];
        for (d, b) in digits.iter_mut().zip(bytes) {
            *d = b - b'0';
        }
        PermutationKey::new(digits)
    }
}

/// Exactly one 6-character block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block([char; BLOCK]);

impl Block {
    pub fn new(chars: &[char]) -> Result<Self> {
        <[char; BLOCK]>::try_from(chars)
            .map(Block)
            .map_err(|_| Error::LengthNotBlockMultiple(chars.len()))
    }

    pub fn transpose(&self, key: &PermutationKey) -> Block {
        let mut out = [' '; BLOCK];
        for (o, &k) in out.iter_mut().zip(key.0.iter()) {
            *o = self.0[k as usize - 1];
        }
        Block(out)
    }

    pub fn chars(&self) -> &[char; BLOCK] {
        &self.0
    }
}

fn transpose_chars(chars: &[char], key: &PermutationKey) -> Result<Vec<char>> {
    if chars.is_empty() || !chars.len().is_multiple_of(BLOCK) {
        return Err(Error::LengthNotBlockMultiple(chars.len()));
    }
    let mut out = Vec::with_capacity(chars.len());
    for block in chars.chunks_exact(BLOCK) {
        out.extend(key.0.iter().map(|&k| block[k as usize - 1]));
    }
    Ok(out)
}

/// One pass of the block transposition.
pub fn transpose_once(text: &str, key: &PermutationKey) -> Result<String> {
    let chars: Vec<char> = text.chars().collect();
    Ok(transpose_chars(&chars, key)?.into_iter().collect())
}

pub fn invert_key(key: &PermutationKey) -> PermutationKey {
    key.invert()
}

/// Pads with `'z'` to a block multiple and transposes twice.
pub fn encrypt(text: &str, key: &PermutationKey) -> Result<String> {
    let mut chars: Vec<char> = text.chars().collect();
    match chars.last() {
        None => return Err(Error::EmptyInput),
        Some(&PAD) => return Err(Error::EndsWithPadChar),
        Some(_) => {}
    }
    let padded = chars.len().div_ceil(BLOCK) * BLOCK;
    chars.resize(padded, PAD);
    let once = transpose_chars(&chars, key)?;
    Ok(transpose_chars(&once, key)?.into_iter().collect())
}

/// Transposes twice with `inverse_key` and strips every trailing `'z'`.
pub fn decrypt(cipher_text: &str, inverse_key: &PermutationKey) -> Result<String> {
    let chars: Vec<char> = cipher_text.chars().collect();
    let once = transpose_chars(&chars, inverse_key)?;
    let plain: String = transpose_chars(&once, inverse_key)?.into_iter().collect();
    Ok(plain.trim_end_matches(PAD).to_string())
}
