//! SHA-256 helpers used for cache keys, config digests and artifact citations.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hex-encoded SHA-256 of raw bytes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of a UTF-8 string's canonical bytes.
pub fn text_digest(text: &str) -> String {
    sha256_hex(text.as_bytes())
}

/// Digest of a value's JSON serialization.
///
/// Struct fields serialize in declaration order and maps used in digested
/// values are `BTreeMap`s, so the encoding is canonical for our types.
pub fn json_digest<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("digestable values serialize to JSON");
    sha256_hex(&bytes)
}

/// First `n` hex characters of a text digest; used for short stable ids.
pub fn short_digest(text: &str, n: usize) -> String {
    let mut d = text_digest(text);
    d.truncate(n);
    d
}
