//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string; errors surface as a thrown string
//! starting with the error name.

use serde_json::json;
use wasm_bindgen::prelude::*;

use geovault::analysis;
use geovault::geokey;
use geovault::lockscreen;
use geovault::{GeoFix, Vault};

fn derive_keys_json(lat: f64, lon: f64) -> Result<String, String> {
    let fix = GeoFix::new(lat, lon).map_err(|e| e.to_string())?;
    let (s1, s2) = geokey::seed_pair(&fix).map_err(|e| e.to_string())?;
    let (k1, k2) = geokey::derive_keys(&fix).map_err(|e| e.to_string())?;
    Ok(json!({
        "seed_lat": s1.to_string(),
        "seed_lon": s2.to_string(),
        "k1": k1.to_string(),
        "k2": k2.to_string(),
        "inv_k1": k1.invert().to_string(),
        "inv_k2": k2.invert().to_string(),
    })
    .to_string())
}

/// Stores `text` in a scratch vault and returns what an intruder sees,
/// plus what the header-only leak recovers from it.
fn store_preview_json(text: &str, lat: f64, lon: f64) -> Result<String, String> {
    let fix = GeoFix::new(lat, lon).map_err(|e| e.to_string())?;
    let mut v = Vault::in_memory();
    v.put_message(text, &fix).map_err(|e| e.to_string())?;
    let records = v.list_records();
    let leaked = analysis::leak_decrypt_all(&records).map_err(|e| e.to_string())?;
    Ok(json!({
        "pairs": v.pairs_allocated(),
        "records": records.iter().map(|(a, r)| json!({ "address": a, "value": r })).collect::<Vec<_>>(),
        "leaked": leaked.first().map(|(_, t)| t.as_str()).unwrap_or(""),
    })
    .to_string())
}

fn rotation_pattern_json(lat: f64, lon: f64, salt_hex: &str, length: usize) -> Result<String, String> {
    let fix = GeoFix::new(lat, lon).map_err(|e| e.to_string())?;
    let seed = geokey::seed_pair(&fix).map_err(|e| e.to_string())?;
    let salt = hex::decode(salt_hex.trim()).map_err(|e| format!("FieldOutOfRange: salt: {e}"))?;
    let p = lockscreen::generate_pattern(&seed, &salt, length).map_err(|e| e.to_string())?;
    Ok(json!({
        "cells": p.cells(),
        "text": p.to_string(),
        "space": analysis::pattern_space(lockscreen::GRID_SIDE as u32, length as u32)
            .map(|n| n.to_string())
            .map_err(|e| e.to_string())?,
    })
    .to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = deriveKeys)]
pub fn derive_keys(lat: f64, lon: f64) -> Result<String, JsValue> {
    js(derive_keys_json(lat, lon))
}

#[wasm_bindgen(js_name = storePreview)]
pub fn store_preview(text: &str, lat: f64, lon: f64) -> Result<String, JsValue> {
    js(store_preview_json(text, lat, lon))
}

#[wasm_bindgen(js_name = rotationPattern)]
pub fn rotation_pattern(lat: f64, lon: f64, salt_hex: &str, length: usize) -> Result<String, JsValue> {
    js(rotation_pattern_json(lat, lon, salt_hex, length))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn keys_for_worked_fix() {
        let v = parse(&derive_keys_json(26.15875768, 32.153457537).unwrap());
        assert_eq!(v["seed_lat"], "2615");
        assert_eq!(v["seed_lon"], "3215");
        assert_eq!(v["k1"], "261534");
        assert_eq!(v["k2"], "321564");
        assert_eq!(v["inv_k1"], "315642");
        assert_eq!(v["inv_k2"], "321645");
    }

    #[test]
    fn preview_shows_records_and_leak() {
        let v = parse(&store_preview_json("Hai...Dear...Howz Life", 26.15875768, 32.153457537).unwrap());
        assert_eq!(v["pairs"], 1);
        assert_eq!(v["records"][0]["address"], 1);
        assert_eq!(v["records"][0]["value"], "08001321645*oH.aHi zw...");
        assert_eq!(v["records"][1]["address"], 999);
        assert_eq!(v["leaked"], "Hai...Dear...Howz Life");
    }

    #[test]
    fn rotation_pattern_matches_library() {
        let salt: Vec<u8> = (0..16).collect();
        let v = parse(&rotation_pattern_json(26.61, 33.42, &hex::encode(&salt), 4).unwrap());
        let seed = geokey::seed_pair(&GeoFix::new(26.61, 33.42).unwrap()).unwrap();
        let expect = lockscreen::generate_pattern(&seed, &salt, 4).unwrap();
        assert_eq!(v["text"], expect.to_string());
        assert_eq!(v["cells"].as_array().unwrap().len(), 4);
        assert_eq!(v["space"], "43680");
    }

    #[test]
    fn errors_carry_names() {
        assert!(derive_keys_json(91.0, 0.0).unwrap_err().starts_with("OutOfRangeCoordinate"));
        assert!(store_preview_json("", 1.0, 1.0).unwrap_err().starts_with("EmptyMessage"));
        assert!(rotation_pattern_json(1.0, 1.0, "zz", 4).unwrap_err().starts_with("FieldOutOfRange"));
        assert!(rotation_pattern_json(1.0, 1.0, "00", 3).unwrap_err().starts_with("LengthOutOfRange"));
    }
}
