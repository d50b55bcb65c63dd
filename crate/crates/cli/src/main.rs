//! `geovault` command-line vault.
//!
//! Exit codes: 0 success, 1 domain error (error name first on stderr),
//! 2 usage error.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use geovault::analysis::{self, GridSpec, RedactedPair};
use geovault::geosim::{self, DeviceState};
use geovault::lockscreen::{self, Access, ReadRequest};
use geovault::{Error, GeoFence, GeoFix, MessageHandle, Pattern, Result, Session, Vault};

#[derive(Parser)]
#[command(name = "geovault", version, about = "Location-keyed record vault with a pattern lock")]
struct Cli {
    /// Vault file
    #[arg(long, global = true, default_value = "vault.geo")]
    vault: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a vault and enroll the unlock pattern
    Init {
        #[arg(long)]
        pattern: String,
        /// latmin,latmax,lonmin,lonmax
        #[arg(long, allow_hyphen_values = true)]
        fence: String,
        /// Fixed 16-byte salt, for reproducible test runs
        #[arg(long)]
        salt_hex: Option<String>,
    },
    /// Set the device location
    Locate {
        #[arg(long, allow_negative_numbers = true)]
        lat: f64,
        #[arg(long, allow_negative_numbers = true)]
        lon: f64,
    },
    /// Replay a `t,lat,lon` trace file
    Trace {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        step_through: bool,
    },
    /// Encrypt and store a message at the current location
    Store {
        #[arg(long, allow_hyphen_values = true)]
        text: String,
    },
    /// Decrypt one message
    Get {
        #[arg(long)]
        id: u32,
        #[arg(long)]
        pattern: Option<String>,
    },
    /// Decrypt the messages containing a term
    Find {
        #[arg(long, allow_hyphen_values = true)]
        term: String,
        #[arg(long)]
        pattern: Option<String>,
    },
    /// Raw stored records, no decryption
    List,
    /// Allocation and lock state
    Status {
        #[arg(long)]
        pattern: Option<String>,
    },
    /// Accept or skip a proposed pattern rotation
    Rotate {
        #[arg(long)]
        pattern: Option<String>,
        #[arg(long, conflicts_with = "skip", required_unless_present = "skip")]
        accept: bool,
        #[arg(long)]
        skip: bool,
        /// New fence to use after accepting; defaults to the current one
        #[arg(long, allow_hyphen_values = true)]
        fence: Option<String>,
    },
    /// Security audits
    #[command(subcommand)]
    Audit(Audit),
}

#[derive(Subcommand)]
enum Audit {
    /// Decrypt every message from the vault file alone
    Leak,
    /// Count distinct key pairs over a grid
    Census(GridArgs),
    /// Recover a pair by searching the grid's key pairs
    Brute {
        #[command(flatten)]
        grid: GridArgs,
        /// Message handle to attack (default: first message)
        #[arg(long)]
        id: Option<u32>,
        /// Echo the attacked records with their key fields zeroed
        #[arg(long)]
        redact_keys: bool,
    },
}

#[derive(Args)]
struct GridArgs {
    /// a:b
    #[arg(long, allow_hyphen_values = true)]
    lat_range: String,
    /// a:b
    #[arg(long, allow_hyphen_values = true)]
    lon_range: String,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
}

impl GridArgs {
    fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(parse_range(&self.lat_range)?, parse_range(&self.lon_range)?, self.step)
    }
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::InvalidGrid(format!("range {s:?} is not a:b"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

/// Advisory lock on `<vault>.lock` held for the life of a mutating command.
struct VaultLock(File);

impl VaultLock {
    fn acquire(vault: &Path) -> Result<Self> {
        let mut name = vault.as_os_str().to_owned();
        name.push(".lock");
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(PathBuf::from(name))
            .map_err(|e| Error::StorageUnavailable(format!("lock: {e}")))?;
        file.lock().map_err(|e| Error::StorageUnavailable(format!("lock: {e}")))?;
        Ok(VaultLock(file))
    }
}

impl Drop for VaultLock {
    fn drop(&mut self) {
        let _ = self.0.unlock();
    }
}

struct Ctx<'a> {
    vault_path: PathBuf,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    input: &'a mut dyn BufRead,
    interactive: bool,
}

impl Ctx<'_> {
    fn open(&self) -> Result<Vault> {
        Vault::open(&self.vault_path, false)
    }

    /// Returns the cells given on the command line, or prompts on stdin.
    fn pattern_attempt(&mut self, flag: Option<&str>, pending: bool) -> Result<Vec<u8>> {
        let text = match flag {
            Some(p) => p.to_string(),
            None => {
                if self.interactive {
                    let banner = if pending { "pattern (rotation pending): " } else { "pattern: " };
                    let _ = write!(self.err, "{banner}");
                    let _ = self.err.flush();
                }
                let mut line = String::new();
                self.input
                    .read_line(&mut line)
                    .map_err(|e| Error::StorageUnavailable(format!("stdin: {e}")))?;
                line
            }
        };
        // anything unparseable is simply the wrong pattern
        Ok(lockscreen::parse_cells(&text).unwrap_or_else(|_| vec![u8::MAX]))
    }

    fn unlock(&mut self, v: &Vault, flag: Option<&str>) -> Result<Session> {
        let meta = v.meta().ok_or(Error::NotEnrolled)?.clone();
        let attempt = self.pattern_attempt(flag, meta.pending_rotation)?;
        let session = lockscreen::verify_pattern(&meta, &attempt)?;
        match lockscreen::view_policy(&session, ReadRequest::Plaintext) {
            Access::Allow => Ok(session),
            Access::JunkOnly => Err(Error::RotationPending),
        }
    }
}

fn emit(out: &mut dyn Write, line: impl AsRef<str>) {
    let _ = writeln!(out, "{}", line.as_ref());
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn parse_salt(hex_str: &str) -> Result<[u8; lockscreen::SALT_LEN]> {
    let bytes = hex::decode(hex_str).map_err(|_| Error::FieldOutOfRange("salt is not hex".into()))?;
    bytes
        .try_into()
        .map_err(|_| Error::FieldOutOfRange(format!("salt must be {} bytes", lockscreen::SALT_LEN)))
}

/// Moves the device to `fix`, feeding the crossing check. Returns true when
/// the move left the fence.
fn move_to(v: &mut Vault, fix: GeoFix) -> Result<bool> {
    let mut crossed = false;
    if let (Some(prev), Some(meta)) = (v.location().copied(), v.meta().cloned()) {
        crossed = geosim::inside(&meta.fence, &prev) && !geosim::inside(&meta.fence, &fix);
        v.set_meta(lockscreen::observe_fix(&meta, &prev, &fix)?);
    }
    v.set_location(fix);
    Ok(crossed)
}

fn dispatch(cli: Cli, ctx: &mut Ctx) -> anyhow::Result<()> {
    match cli.command {
        Command::Init { pattern, fence, salt_hex } => {
            let _lock = VaultLock::acquire(&ctx.vault_path)?;
            if ctx.vault_path.exists() {
                return Err(Error::StorageUnavailable(format!(
                    "{} already exists",
                    ctx.vault_path.display()
                ))
                .into());
            }
            let pattern: Pattern = pattern.parse()?;
            let fence: GeoFence = fence.parse()?;
            let salt = match salt_hex {
                Some(h) => parse_salt(&h)?,
                None => lockscreen::random_salt(),
            };
            let mut v = Vault::open(&ctx.vault_path, true)?;
            v.set_meta(lockscreen::enroll(&pattern, fence, salt));
            v.save()?;
            emit(ctx.out, format!("initialized pairs=0 fence={fence}"));
        }
        Command::Locate { lat, lon } => {
            let _lock = VaultLock::acquire(&ctx.vault_path)?;
            let mut v = ctx.open()?;
            let fix = GeoFix::new(lat, lon)?;
            let crossed = move_to(&mut v, fix)?;
            v.save()?;
            let inside = v.meta().map(|m| geosim::inside(&m.fence, &fix));
            emit(
                ctx.out,
                format!("LOCATE {lat} {lon} inside={}", inside.map_or("n/a", yes_no)),
            );
            if crossed {
                emit(ctx.out, "ROTATION proposed");
            }
        }
        Command::Trace { file, step_through } => {
            let _lock = VaultLock::acquire(&ctx.vault_path)?;
            let mut v = ctx.open()?;
            let script = geosim::load_trace(&file)?;
            let mut state = v.location().copied().map(DeviceState::at);
            let mut crossings = 0;
            for (i, &(t, _)) in script.samples().iter().enumerate() {
                let next = match &state {
                    Some(s) => geosim::step(s, &script, i)?,
                    None => DeviceState::at(script.samples()[i].1),
                };
                let crossed = move_to(&mut v, next.current)?;
                if step_through {
                    let inside = v.meta().map(|m| geosim::inside(&m.fence, &next.current));
                    emit(
                        ctx.out,
                        format!(
                            "STEP {i} t={t} lat={} lon={} inside={}",
                            next.current.latitude(),
                            next.current.longitude(),
                            inside.map_or("n/a", yes_no)
                        ),
                    );
                }
                if crossed {
                    crossings += 1;
                    emit(ctx.out, format!("CROSSING t={t}"));
                }
                state = Some(next);
            }
            v.save()?;
            let pending = v.meta().is_some_and(|m| m.pending_rotation);
            emit(
                ctx.out,
                format!("TRACE samples={} crossings={crossings} pending={}", script.len(), yes_no(pending)),
            );
        }
        Command::Store { text } => {
            let _lock = VaultLock::acquire(&ctx.vault_path)?;
            let mut v = ctx.open()?;
            let fix = *v.location().ok_or(Error::NoLocation)?;
            let before = v.pairs_allocated();
            let h = v.put_message(&text, &fix)?;
            emit(ctx.out, format!("STORED id={h} pairs={}", v.pairs_allocated() - before));
        }
        Command::Get { id, pattern } => {
            let v = ctx.open()?;
            ctx.unlock(&v, pattern.as_deref())?;
            let text = v.get_message(MessageHandle::new(id)?)?;
            emit(ctx.out, text);
        }
        Command::Find { term, pattern } => {
            let v = ctx.open()?;
            ctx.unlock(&v, pattern.as_deref())?;
            for (h, text) in v.find_messages(&term)? {
                emit(ctx.out, format!("{h} {text}"));
            }
        }
        Command::List => {
            let v = ctx.open()?;
            for (_, value) in v.list_records() {
                emit(ctx.out, value);
            }
        }
        Command::Status { pattern } => {
            let v = ctx.open()?;
            let pending = v.meta().is_some_and(|m| m.pending_rotation);
            let unlocked = match (pattern, v.meta()) {
                (Some(p), Some(m)) => {
                    let cells = lockscreen::parse_cells(&p).unwrap_or_default();
                    lockscreen::verify_pattern(m, &cells).is_ok()
                }
                _ => false,
            };
            emit(
                ctx.out,
                format!(
                    "pairs={} locked={} pending={}",
                    v.pairs_allocated(),
                    yes_no(!unlocked),
                    yes_no(pending)
                ),
            );
        }
        Command::Rotate { pattern, accept, skip: _, fence } => {
            let _lock = VaultLock::acquire(&ctx.vault_path)?;
            let mut v = ctx.open()?;
            let meta = v.meta().ok_or(Error::NotEnrolled)?.clone();
            let new_fence = match fence {
                Some(f) => f.parse()?,
                None => meta.fence,
            };
            let attempt = ctx.pattern_attempt(pattern.as_deref(), meta.pending_rotation)?;
            let outcome = lockscreen::apply_rotation(&meta, &attempt, accept, new_fence)?;
            v.set_meta(outcome.meta);
            v.save()?;
            match outcome.new_pattern {
                Some(p) if outcome.unchanged => emit(ctx.out, format!("ROTATED pattern={p} unchanged=yes")),
                Some(p) => emit(ctx.out, format!("ROTATED pattern={p} fence={new_fence}")),
                None => emit(ctx.out, "SKIPPED"),
            }
        }
        Command::Audit(Audit::Leak) => {
            let text = std::fs::read_to_string(&ctx.vault_path)
                .with_context(|| format!("StorageUnavailable: {}", ctx.vault_path.display()))?;
            let leaked = analysis::leak_decrypt_all(&analysis::records_from_file_text(&text))?;
            for (h, plain) in &leaked {
                emit(ctx.out, format!("LEAK {h} {plain}"));
            }
            emit(ctx.out, format!("LEAKED {}", leaked.len()));
        }
        Command::Audit(Audit::Census(grid)) => {
            let census = analysis::keyspace_census(&grid.spec()?)?;
            emit(ctx.out, analysis::format_census(&census));
        }
        Command::Audit(Audit::Brute { grid, id, redact_keys }) => {
            let g = grid.spec()?;
            let v = ctx.open()?;
            let a1 = match id {
                Some(id) => id,
                None => v.handles()?.first().map(MessageHandle::id).ok_or(Error::AddressNotFound(999))?,
            };
            let pair = RedactedPair::from_vault(&v, a1)?;
            if redact_keys {
                for (addr, raw) in [(pair.part1_address, &pair.part1), (pair.part2_address, &pair.part2)] {
                    emit(
                        ctx.out,
                        format!(
                            "REDACTED {addr} {:02}{:03}{}*{}",
                            raw.first_char_code, raw.link_field, raw.key_field, raw.ciphertext
                        ),
                    );
                }
            }
            for c in analysis::brute_force_pair(&pair, &g)? {
                emit(ctx.out, analysis::format_candidate(&c));
            }
            emit(ctx.out, analysis::format_census(&analysis::keyspace_census(&g)?));
        }
    }
    Ok(())
}

fn run(
    args: Vec<String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
    input: &mut dyn BufRead,
    interactive: bool,
) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 2;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    let mut ctx = Ctx { vault_path: cli.vault.clone(), out, err, input, interactive };
    match dispatch(cli, &mut ctx) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(ctx.err, "{e:#}");
            1
        }
    }
}

fn main() -> ExitCode {
    let stdin = io::stdin();
    let code = run(
        std::env::args().collect(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
        &mut stdin.lock(),
        stdin.is_terminal(),
    );
    ExitCode::from(code)
}
