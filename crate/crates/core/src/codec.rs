//! Chunk pipeline between a plaintext chunk and its two stored records.
//!
//! Assembly: attach the continuation pointer, scramble, split into halves
//! A1/A2, encrypt them under K1/K2, then store each half's ciphertext next to
//! the *other* key's inverse. Disassembly exchanges the payloads back before
//! decrypting.
//!
//! Serialized record value: `CC LLL KKKKKK '*' ciphertext` with no spaces,
//! i.e. a 2-digit first-character code, 3-digit link field, 6-digit inverse
//! key, then the delimiter.

use crate::cipher::{self, PermutationKey, BLOCK, PAD};
use crate::error::{Error, Result};
use crate::geokey::{self, GeoFix};

/// Longest chunk that still fits the 150-character record budget once
/// `" NNN"` is appended.
pub const MAX_CHUNK: usize = 144;
pub const HEADER_LEN: usize = 11;
pub const DELIMITER: char = '*';
pub const MAX_ADDRESS: u32 = 999;
/// Largest part-2 address whose doubled link still fits three digits.
pub const MAX_PART2_ADDRESS: u32 = 499;

/// Printable ASCII, space included.
pub fn is_admissible_char(c: char) -> bool {
    matches!(c, ' '..='~')
}

pub fn check_alphabet(text: &str) -> Result<()> {
    match text.chars().find(|&c| !is_admissible_char(c)) {
        Some(c) => Err(Error::AlphabetViolation(c)),
        None => Ok(()),
    }
}

pub fn attach_pointer(chunk: &str, next_address: u32) -> Result<String> {
    if chunk.is_empty() {
        return Err(Error::EmptyMessage);
    }
    let len = chunk.chars().count();
    if len > MAX_CHUNK {
        return Err(Error::ChunkTooLong(len));
    }
    check_alphabet(chunk)?;
    if next_address > MAX_ADDRESS {
        return Err(Error::AddressOutOfRange(next_address));
    }
    Ok(format!("{chunk} {next_address}"))
}

/// Splits at the last space; the tail must be 1 to 3 decimal digits.
pub fn detach_pointer(text: &str) -> Result<(String, u32)> {
    let bad = || Error::BadPointerSuffix(text.chars().rev().take(8).collect::<Vec<_>>().into_iter().rev().collect());
    let (chunk, tail) = text.rsplit_once(' ').ok_or_else(bad)?;
    if tail.is_empty() || tail.len() > 3 || !tail.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    Ok((chunk.to_string(), tail.parse().map_err(|_| bad())?))
}

/// Perfect out-shuffle: interleave the first ceil(n/2) characters with the rest.
pub fn scramble(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let h = chars.len().div_ceil(2);
    let (first, second) = chars.split_at(h);
    let mut out = String::with_capacity(text.len());
    for (i, &c) in first.iter().enumerate() {
        out.push(c);
        if let Some(&d) = second.get(i) {
            out.push(d);
        }
    }
    out
}

pub fn unscramble(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let first = chars.iter().step_by(2);
    let second = chars.iter().skip(1).step_by(2);
    first.chain(second).collect()
}

/// `(A1, A2)`: A2 is the final `6*floor(n/12)` characters, or `floor(n/2)`
/// when that would be empty.
pub fn split_halves(text: &str) -> Result<(String, String)> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    if n < 3 {
        return Err(Error::MessageTooShort(n));
    }
    let mut tail = BLOCK * (n / 12);
    if tail == 0 {
        tail = n / 2;
    }
    let (a1, a2) = chars.split_at(n - tail);
    Ok((a1.iter().collect(), a2.iter().collect()))
}

/// 1..=26 for a leading letter (case-insensitive), 0 otherwise.
pub fn first_char_code(text: &str) -> Result<u8> {
    let c = text.chars().next().ok_or(Error::EmptyMessage)?;
    Ok(if c.is_ascii_alphabetic() {
        c.to_ascii_uppercase() as u8 - b'A' + 1
    } else {
        0
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordHeader {
    pub first_char_code: u8,
    pub link_field: u32,
    pub inverse_key: PermutationKey,
}

/// Header plus delimiter: always 12 characters.
pub fn encode_header(h: &RecordHeader) -> Result<String> {
    if h.first_char_code > 26 {
        return Err(Error::FieldOutOfRange(format!("first char code {}", h.first_char_code)));
    }
    if h.link_field > MAX_ADDRESS {
        return Err(Error::FieldOutOfRange(format!("link field {}", h.link_field)));
    }
    Ok(format!(
        "{:02}{:03}{}{DELIMITER}",
        h.first_char_code, h.link_field, h.inverse_key
    ))
}

/// The header fields that can be parsed without trusting the key digits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawHeader {
    pub first_char_code: u8,
    pub link_field: u32,
    pub key_field: String,
    pub ciphertext: String,
}

/// Parses the fixed-width fields but leaves the key field unvalidated.
pub fn decode_header_unkeyed(value: &str) -> Result<RawHeader> {
    let b = value.as_bytes();
    if b.len() <= HEADER_LEN || b[HEADER_LEN] != DELIMITER as u8 {
        return Err(Error::BadHeader(format!("no '*' at position {}", HEADER_LEN + 1)));
    }
    if !b[..HEADER_LEN].iter().all(u8::is_ascii_digit) {
        return Err(Error::BadHeader(format!("non-digit in {:?}", &value[..HEADER_LEN])));
    }
    let first_char_code: u8 = value[0..2].parse().expect("two ascii digits");
    if first_char_code > 26 {
        return Err(Error::BadHeader(format!("first char code {first_char_code}")));
    }
    Ok(RawHeader {
        first_char_code,
        link_field: value[2..5].parse().expect("three ascii digits"),
        key_field: value[5..HEADER_LEN].to_string(),
        ciphertext: value[HEADER_LEN + 1..].to_string(),
    })
}

pub fn decode_header(value: &str) -> Result<(RecordHeader, String)> {
    let raw = decode_header_unkeyed(value)?;
    let inverse_key = raw.key_field.parse()?;
    Ok((
        RecordHeader {
            first_char_code: raw.first_char_code,
            link_field: raw.link_field,
            inverse_key,
        },
        raw.ciphertext,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredRecord {
    pub address: u32,
    pub header: RecordHeader,
    pub ciphertext: String,
}

impl StoredRecord {
    pub fn serialize(&self) -> Result<String> {
        Ok(encode_header(&self.header)? + &self.ciphertext)
    }

    pub fn parse(address: u32, value: &str) -> Result<Self> {
        let (header, ciphertext) = decode_header(value)?;
        if ciphertext.is_empty() || ciphertext.chars().count() % BLOCK != 0 {
            return Err(Error::BadHeader(format!(
                "ciphertext length {} at address {address}",
                ciphertext.chars().count()
            )));
        }
        Ok(StoredRecord { address, header, ciphertext })
    }
}

/// `part1` holds inv(K1) with EA2; `part2` holds inv(K2) with EA1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordPair {
    pub part1: StoredRecord,
    pub part2: StoredRecord,
}

fn check_address(a: u32) -> Result<()> {
    if (1..=MAX_ADDRESS).contains(&a) {
        Ok(())
    } else {
        Err(Error::AddressOutOfRange(a))
    }
}

/// True when neither cipher half of `chunk_with_pointer` would end in the pad.
pub fn halves_are_encryptable(chunk_with_pointer: &str) -> bool {
    match split_halves(&scramble(chunk_with_pointer)) {
        Ok((a1, a2)) => !a1.ends_with(PAD) && !a2.ends_with(PAD),
        Err(_) => false,
    }
}

pub fn assemble_pair(chunk_with_pointer: &str, fix: &GeoFix, a1: u32, a2: u32) -> Result<RecordPair> {
    check_address(a1)?;
    check_address(a2)?;
    if a2 > MAX_PART2_ADDRESS {
        return Err(Error::AddressOutOfRange(a2));
    }
    if a1 == a2 {
        return Err(Error::AddressOutOfRange(a1));
    }
    check_alphabet(chunk_with_pointer)?;
    let code = first_char_code(chunk_with_pointer)?;
    let (h1, h2) = split_halves(&scramble(chunk_with_pointer))?;
    let (k1, k2) = geokey::derive_keys(fix)?;
    let ea1 = cipher::encrypt(&h1, &k1)?;
    let ea2 = cipher::encrypt(&h2, &k2)?;
    Ok(RecordPair {
        part1: StoredRecord {
            address: a1,
            header: RecordHeader { first_char_code: code, link_field: 2 * a2, inverse_key: k1.invert() },
            ciphertext: ea2,
        },
        part2: StoredRecord {
            address: a2,
            header: RecordHeader { first_char_code: code, link_field: a2, inverse_key: k2.invert() },
            ciphertext: ea1,
        },
    })
}

pub fn check_links(pair: &RecordPair) -> Result<()> {
    let (p1, p2) = (&pair.part1, &pair.part2);
    if p1.header.link_field != 2 * p2.address {
        return Err(Error::LinkMismatch(format!(
            "part 1 at {} links {}, part 2 is at {}",
            p1.address, p1.header.link_field, p2.address
        )));
    }
    if p2.header.link_field != p2.address {
        return Err(Error::LinkMismatch(format!(
            "part 2 at {} carries link {}",
            p2.address, p2.header.link_field
        )));
    }
    if p1.header.first_char_code != p2.header.first_char_code {
        return Err(Error::LinkMismatch(format!(
            "character codes {} and {} differ",
            p1.header.first_char_code, p2.header.first_char_code
        )));
    }
    Ok(())
}

/// Exchange, decrypt, concatenate, unscramble, then detach the pointer.
pub fn disassemble_pair(pair: &RecordPair) -> Result<(String, u32)> {
    check_links(pair)?;
    open_payloads(
        &pair.part2.ciphertext,
        &pair.part1.header.inverse_key,
        &pair.part1.ciphertext,
        &pair.part2.header.inverse_key,
    )
}

/// Decrypts EA1 with inv(K1) and EA2 with inv(K2) and undoes the scramble.
pub fn open_payloads(
    ea1: &str,
    inv_k1: &PermutationKey,
    ea2: &str,
    inv_k2: &PermutationKey,
) -> Result<(String, u32)> {
    let mut joined = cipher::decrypt(ea1, inv_k1)?;
    joined.push_str(&cipher::decrypt(ea2, inv_k2)?);
    detach_pointer(&unscramble(&joined))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn key(s: &str) -> PermutationKey {
        s.parse().unwrap()
    }

    #[test]
    fn pointer_examples() {
        assert_eq!(
            attach_pointer("Hai...Dear...Howz Life", 0).unwrap(),
            "Hai...Dear...Howz Life 0"
        );
        assert_eq!(
            attach_pointer("We are working on well....things are going on", 8).unwrap(),
            "We are working on well....things are going on 8"
        );
        assert_eq!(attach_pointer("x", 999).unwrap(), "x 999");
        assert_eq!(
            detach_pointer("Hai...Dear...Howz Life 0").unwrap(),
            ("Hai...Dear...Howz Life".to_string(), 0)
        );
        assert_eq!(detach_pointer("x 999").unwrap(), ("x".to_string(), 999));
        assert_eq!(detach_pointer("a b 12").unwrap(), ("a b".to_string(), 12));
    }

    #[test]
    fn pointer_errors() {
        assert_eq!(attach_pointer("", 0), Err(Error::EmptyMessage));
        assert_eq!(attach_pointer(&"a".repeat(145), 0), Err(Error::ChunkTooLong(145)));
        assert!(attach_pointer(&"a".repeat(144), 0).is_ok());
        assert_eq!(attach_pointer("a\nb", 0), Err(Error::AlphabetViolation('\n')));
        assert!(matches!(attach_pointer("a", 1000), Err(Error::AddressOutOfRange(1000))));
        for bad in ["nospace", "a ", "a 1234", "a 1x", "a -1"] {
            assert!(matches!(detach_pointer(bad), Err(Error::BadPointerSuffix(_))), "{bad}");
        }
    }

    #[test]
    fn scramble_examples() {
        assert_eq!(scramble("ABCDEF"), "ADBECF");
        assert_eq!(scramble("A"), "A");
        assert_eq!(scramble("ABCDE"), "ADBEC");
        assert_eq!(unscramble("ADBECF"), "ABCDEF");
        assert_eq!(unscramble(""), "");
        assert_eq!(unscramble("ADBEC"), "ABCDE");
    }

    #[test]
    fn scramble_inverts_for_all_short_lengths() {
        let base: String = (0..300).map(|i| char::from(b' ' + (i % 95) as u8)).collect();
        for n in 0..=300 {
            let s = &base[..n];
            let t = scramble(s);
            assert_eq!(t.len(), n);
            assert_eq!(unscramble(&t), s);
        }
    }

    #[test]
    fn split_examples() {
        assert_eq!(
            split_halves("P65Q9767R73S4T").unwrap(),
            ("P65Q9767".to_string(), "R73S4T".to_string())
        );
        assert_eq!(split_halves("x 0").unwrap(), ("x ".to_string(), "0".to_string()));
        let s24 = "abcdefghijklmnopqrstuvwx";
        let (a, b) = split_halves(s24).unwrap();
        assert_eq!((a.len(), b.len()), (12, 12));
        assert_eq!(split_halves("ab"), Err(Error::MessageTooShort(2)));
    }

    #[test]
    fn first_char_examples() {
        assert_eq!(first_char_code("PQRST 976543767").unwrap(), 16);
        assert_eq!(first_char_code("apple").unwrap(), 1);
        assert_eq!(first_char_code("9 lives").unwrap(), 0);
        assert_eq!(first_char_code("Zed").unwrap(), 26);
        assert_eq!(first_char_code(""), Err(Error::EmptyMessage));
    }

    #[test]
    fn header_examples() {
        let h = |c, l, k: &str| RecordHeader { first_char_code: c, link_field: l, inverse_key: key(k) };
        assert_eq!(encode_header(&h(16, 80, "315642")).unwrap(), "16080315642*");
        assert_eq!(encode_header(&h(0, 0, "123456")).unwrap(), "00000123456*");
        assert_eq!(encode_header(&h(16, 40, "321645")).unwrap(), "16040321645*");
        assert!(matches!(encode_header(&h(27, 0, "123456")), Err(Error::FieldOutOfRange(_))));
        assert!(matches!(encode_header(&h(1, 1000, "123456")), Err(Error::FieldOutOfRange(_))));

        assert_eq!(
            decode_header("16080315642*R73TS4").unwrap(),
            (h(16, 80, "315642"), "R73TS4".to_string())
        );
        assert_eq!(decode_header("00000123456*").unwrap(), (h(0, 0, "123456"), String::new()));
        assert!(matches!(decode_header("16X80315642*AB"), Err(Error::BadHeader(_))));
        assert!(matches!(decode_header("1608031564*2AB"), Err(Error::BadHeader(_))));
        assert!(matches!(decode_header("16080"), Err(Error::BadHeader(_))));
        assert!(matches!(decode_header("16080000000*AB"), Err(Error::InvalidKey(_))));
    }

    /// Straight-line composition of the pipeline steps, written out by hand.
    fn reference_pipeline(chunk: &str, fix: &GeoFix, a2: u32) -> (String, String) {
        let s = scramble(chunk);
        let (h1, h2) = split_halves(&s).unwrap();
        let (k1, k2) = geokey::derive_keys(fix).unwrap();
        let ea1 = cipher::encrypt(&h1, &k1).unwrap();
        let ea2 = cipher::encrypt(&h2, &k2).unwrap();
        let code = first_char_code(chunk).unwrap();
        (
            format!("{code:02}{:03}{}*{ea2}", 2 * a2, k1.invert()),
            format!("{code:02}{a2:03}{}*{ea1}", k2.invert()),
        )
    }

    #[test]
    fn worked_pair_matches_reference_pipeline() {
        let fix = GeoFix::new(26.15875768, 32.153457537).unwrap();
        let chunk = "PQRST 976543767 0";
        let pair = assemble_pair(chunk, &fix, 999, 1).unwrap();
        let (v1, v2) = reference_pipeline(chunk, &fix, 1);
        assert_eq!(pair.part1.serialize().unwrap(), v1);
        assert_eq!(pair.part2.serialize().unwrap(), v2);
        assert!(v1.starts_with("16002315642*"));
        assert!(v2.starts_with("16001321645*"));
        assert_eq!(disassemble_pair(&pair).unwrap(), ("PQRST 976543767".to_string(), 0));
    }

    #[test]
    fn identity_key_payloads_are_padded_halves() {
        let fix = GeoFix::new(0.0, 0.0).unwrap();
        let pair = assemble_pair("x 0", &fix, 999, 1).unwrap();
        // scramble("x 0") = "x0 ", halves ("x0", " ")
        assert_eq!(pair.part2.ciphertext, "x0zzzz");
        assert_eq!(pair.part1.ciphertext, " zzzzz");
        assert_eq!(disassemble_pair(&pair).unwrap(), ("x".to_string(), 0));
    }

    #[test]
    fn assemble_address_errors() {
        let fix = GeoFix::new(0.0, 0.0).unwrap();
        assert_eq!(assemble_pair("ab 0", &fix, 999, 500), Err(Error::AddressOutOfRange(500)));
        assert_eq!(assemble_pair("ab 0", &fix, 0, 5), Err(Error::AddressOutOfRange(0)));
        assert_eq!(assemble_pair("ab 0", &fix, 5, 5), Err(Error::AddressOutOfRange(5)));
        assert_eq!(assemble_pair("ab 0", &fix, 1000, 5), Err(Error::AddressOutOfRange(1000)));
    }

    #[test]
    fn link_mismatch_detected() {
        let fix = GeoFix::new(26.15, 32.15).unwrap();
        let mut pair = assemble_pair("hello there 0", &fix, 960, 40).unwrap();
        pair.part2.header.link_field = 41;
        assert!(matches!(disassemble_pair(&pair), Err(Error::LinkMismatch(_))));
        let mut pair = assemble_pair("hello there 0", &fix, 960, 40).unwrap();
        pair.part1.header.link_field = 82;
        assert!(matches!(disassemble_pair(&pair), Err(Error::LinkMismatch(_))));
    }

    #[test]
    fn payloads_are_exchanged() {
        // Decrypting each record's payload with its own co-stored key does not
        // recover the halves; exchanging first does.
        let fix = GeoFix::new(26.15875768, 32.153457537).unwrap();
        let chunk = "Dinner at 3:00 pm City Center.... try to make up 0";
        let pair = assemble_pair(chunk, &fix, 998, 2).unwrap();
        let (h1, h2) = split_halves(&scramble(chunk)).unwrap();
        let own1 = cipher::decrypt(&pair.part1.ciphertext, &pair.part1.header.inverse_key).unwrap();
        let own2 = cipher::decrypt(&pair.part2.ciphertext, &pair.part2.header.inverse_key).unwrap();
        assert_ne!(own2, h1);
        assert_ne!(own1, h2);
        assert_eq!(cipher::decrypt(&pair.part2.ciphertext, &pair.part1.header.inverse_key).unwrap(), h1);
        assert_eq!(cipher::decrypt(&pair.part1.ciphertext, &pair.part2.header.inverse_key).unwrap(), h2);
    }

    #[test]
    fn location_sensitivity() {
        let chunk = "We are working on well....things are going on 8";
        let a = assemble_pair(chunk, &GeoFix::new(26.15875768, 32.153457537).unwrap(), 999, 1).unwrap();
        let same = assemble_pair(chunk, &GeoFix::new(26.151, 32.159).unwrap(), 999, 1).unwrap();
        let other = assemble_pair(chunk, &GeoFix::new(43.25, 32.15).unwrap(), 999, 1).unwrap();
        assert_eq!(a, same);
        assert_ne!(a.part1.serialize().unwrap(), other.part1.serialize().unwrap());
    }

    proptest! {
        #[test]
        fn pipeline_inverts(
            chunk in "[ -~]{1,144}",
            ptr in 0u32..=999,
            lat in -90.0f64..=90.0,
            lon in -180.0f64..=180.0,
            a2 in 1u32..=498,
        ) {
            let with_ptr = attach_pointer(&chunk, ptr).unwrap();
            prop_assume!(halves_are_encryptable(&with_ptr));
            let fix = GeoFix::new(lat, lon).unwrap();
            let a1 = 1000 - a2;
            let pair = assemble_pair(&with_ptr, &fix, a1, a2).unwrap();
            for rec in [&pair.part1, &pair.part2] {
                let v = rec.serialize().unwrap();
                prop_assert!(v.as_bytes()[..11].iter().all(u8::is_ascii_digit));
                prop_assert_eq!(v.as_bytes()[11], b'*');
                prop_assert_eq!(&StoredRecord::parse(rec.address, &v).unwrap(), rec);
            }
            prop_assert_eq!(disassemble_pair(&pair).unwrap(), (chunk, ptr));
        }

        #[test]
        fn scramble_is_an_anagram(s in "[ -~]{0,300}") {
            let mut a: Vec<char> = s.chars().collect();
            let mut b: Vec<char> = scramble(&s).chars().collect();
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a, b);
            prop_assert_eq!(unscramble(&scramble(&s)), s);
        }
    }
}
