#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

pub const SALT: &str = "000102030405060708090a0b0c0d0e0f";
pub const PATTERN: &str = "0-5-10-15";
pub const FENCE: &str = "26,27,32,33";

pub struct Out {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the binary against `vault`, feeding `stdin` (empty means EOF).
pub fn geovault(vault: &Path, args: &[&str], stdin: &str) -> Out {
    let mut child = Command::new(env!("CARGO_BIN_EXE_geovault"))
        .arg("--vault")
        .arg(vault)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn geovault");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    let o = child.wait_with_output().unwrap();
    Out {
        code: o.status.code().unwrap_or(-1),
        stdout: String::from_utf8(o.stdout).unwrap(),
        stderr: String::from_utf8(o.stderr).unwrap(),
    }
}

pub fn ok(vault: &Path, args: &[&str]) -> String {
    let o = geovault(vault, args, "");
    assert_eq!(o.code, 0, "{args:?} failed: {}", o.stderr);
    o.stdout
}

pub fn init(dir: &Path) -> PathBuf {
    let v = dir.join("v.geo");
    ok(&v, &["init", "--pattern", PATTERN, "--fence", FENCE, "--salt-hex", SALT]);
    v
}

/// Inside, inside, then out across the eastern edge.
pub const EXIT_TRACE: &str = "\
# t,lat,lon
0,26.50,32.50
1,26.60,32.90
2,26.61,33.42
3,26.70,33.80
";

pub const EXIT_FIX: (f64, f64) = (26.61, 33.42);
