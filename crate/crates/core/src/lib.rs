//! # geovault
//!
//! Two-level hiding of short text records.
//!
//! Level one encrypts each message chunk with a block transposition whose
//! keys come from the device's quantized latitude and longitude, and splits
//! the result over two records that each carry the *other* half's ciphertext.
//! Level two is a 4x4 grid pattern lock that rotates to a location-derived
//! pattern whenever the device leaves its geofence.
//!
//! The [`analysis`] module audits the scheme. In particular the stored
//! headers contain the inverse keys, so level one on its own offers no
//! confidentiality against anyone who can read the vault file.
//!
//! ```
//! use geovault::{GeoFix, Vault};
//!
//! let mut vault = Vault::in_memory();
//! let here = GeoFix::new(26.15875768, 32.153457537)?;
//! let id = vault.put_message("Hai...Dear...Howz Life", &here)?;
//! assert_eq!(vault.get_message(id)?, "Hai...Dear...Howz Life");
//! # Ok::<(), geovault::Error>(())
//! ```

pub mod analysis;
pub mod cipher;
pub mod codec;
pub mod error;
pub mod geokey;
pub mod geosim;
pub mod lockscreen;
pub mod store;

pub use cipher::PermutationKey;
pub use error::{Error, Result};
pub use geokey::{GeoFix, QuantizedDigits};
pub use lockscreen::{GeoFence, LockMeta, Pattern, Session};
pub use store::{MessageHandle, Vault};
