use geovault::analysis;
use geovault::lockscreen::{self, GeoFence, Pattern};
use geovault::{Error, GeoFix, MessageHandle, Vault};

fn fix() -> GeoFix {
    GeoFix::new(26.15875768, 32.153457537).unwrap()
}

#[test]
fn saved_vault_reopens_with_messages_and_lock() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("notes.geo");
    let mut v = Vault::open(&path, true).unwrap();
    let p = Pattern::new(vec![3, 6, 9, 12]).unwrap();
    v.set_meta(lockscreen::enroll(&p, GeoFence::new(26.0, 27.0, 32.0, 33.0).unwrap(), [7; 16]));
    v.set_location(fix());
    let a = v.put_message("first note", &fix()).unwrap();
    let b = v.put_message(&"long ".repeat(60), &fix()).unwrap();

    let again = Vault::open(&path, false).unwrap();
    assert_eq!(again.get_message(a).unwrap(), "first note");
    assert_eq!(again.get_message(b).unwrap(), "long ".repeat(60));
    assert_eq!(again.handles().unwrap(), vec![a, b]);
    assert_eq!(again.location(), Some(&fix()));
    let meta = again.meta().unwrap();
    assert!(lockscreen::verify_pattern(meta, &[3, 6, 9, 12]).is_ok());
    assert_eq!(lockscreen::verify_pattern(meta, &[12, 9, 6, 3]), Err(Error::PatternMismatch));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), again.serialize());
}

#[test]
fn missing_file_without_create() {
    let dir = tempfile::tempdir().unwrap();
    let err = Vault::open(dir.path().join("absent.geo"), false).unwrap_err();
    assert_eq!(err.name(), "StorageUnavailable");
}

#[test]
fn tampered_record_is_rejected_on_open() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.geo");
    let mut v = Vault::open(&path, true).unwrap();
    v.put_message("Hai...Dear...Howz Life", &fix()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();

    let dropped: String = text.lines().filter(|l| !l.starts_with("REC 1 ")).map(|l| format!("{l}\n")).collect();
    std::fs::write(&path, dropped).unwrap();
    assert_eq!(Vault::open(&path, false).unwrap_err().name(), "CorruptVault");

    std::fs::write(&path, text.replace("GEOVAULT v1", "GEOVAULT v9")).unwrap();
    assert_eq!(Vault::open(&path, false).unwrap_err().name(), "CorruptVault");
}

#[test]
fn file_text_alone_leaks_every_message() {
    let mut v = Vault::in_memory();
    let ids: Vec<MessageHandle> = ["alpha", "beta gamma", "delta"]
        .iter()
        .map(|m| v.put_message(m, &GeoFix::new(-12.34, 145.67).unwrap()).unwrap())
        .collect();
    let leaked = analysis::leak_decrypt_all(&analysis::records_from_file_text(&v.serialize())).unwrap();
    let expect: Vec<(MessageHandle, String)> =
        ids.iter().map(|&h| (h, v.get_message(h).unwrap())).collect();
    assert_eq!(leaked, expect);
}
