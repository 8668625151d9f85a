//! Content digests.
//!
//! A [`Digest`] is the fingerprint embedded in every trusty URI. Only SHA-256
//! is supported today; the canonical text form is 64 lowercase hex characters.

use std::fmt;
use std::io::{self, Read};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

/// Length in octets of a SHA-256 output.
pub const SHA256_LEN: usize = 32;

/// Length of the canonical hex text form of a SHA-256 digest.
pub const SHA256_HEX_LEN: usize = SHA256_LEN * 2;

/// Hash functions a digest may be computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Sha256,
}

impl Algorithm {
    pub const fn output_len(self) -> usize {
        match self {
            Algorithm::Sha256 => SHA256_LEN,
        }
    }
}

/// Text encodings a digest can be rendered in.
///
/// Only lowercase hex is emitted inside URIs. Base64url is reserved and
/// rejected by the parser until a URI form for it is settled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DigestFormat {
    LowerHex,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DigestParseError {
    #[error("digest text must be {expected} characters, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("digest text must be lowercase hexadecimal")]
    NotLowerHex,
}

/// A fixed-length content digest.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest {
    algorithm: Algorithm,
    bytes: [u8; SHA256_LEN],
}

impl Digest {
    pub const fn from_sha256(bytes: [u8; SHA256_LEN]) -> Self {
        Self {
            algorithm: Algorithm::Sha256,
            bytes,
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes[..self.algorithm.output_len()]
    }

    /// Canonical text form: lowercase hex.
    pub fn to_hex(&self) -> String {
        hex::encode(self.as_bytes())
    }

    pub fn render(&self, format: DigestFormat) -> String {
        match format {
            DigestFormat::LowerHex => self.to_hex(),
        }
    }

    /// Parses the canonical text form. Uppercase hex is rejected so that every
    /// digest has exactly one spelling.
    pub fn parse_hex(text: &str) -> Result<Self, DigestParseError> {
        if text.len() != SHA256_HEX_LEN {
            return Err(DigestParseError::Length {
                expected: SHA256_HEX_LEN,
                actual: text.chars().count(),
            });
        }
        if !is_lower_hex(text) {
            return Err(DigestParseError::NotLowerHex);
        }
        let mut bytes = [0u8; SHA256_LEN];
        hex::decode_to_slice(text, &mut bytes).map_err(|_| DigestParseError::NotLowerHex)?;
        Ok(Self::from_sha256(bytes))
    }

    /// True when `text` is a syntactically valid canonical digest.
    pub fn is_canonical_text(text: &str) -> bool {
        text.len() == SHA256_HEX_LEN && is_lower_hex(text)
    }
}

fn is_lower_hex(text: &str) -> bool {
    text.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl FromStr for Digest {
    type Err = DigestParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_hex(s)
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Self::parse_hex(&text).map_err(serde::de::Error::custom)
    }
}

/// Digest of an in-memory octet sequence.
pub fn compute_digest(content: &[u8]) -> Digest {
    Digest::from_sha256(Sha256::digest(content).into())
}

/// Digest of everything `reader` yields, read `chunk_size` octets at a time.
///
/// The result equals [`compute_digest`] of the concatenated input for every
/// chunk size. A `chunk_size` of zero is treated as one.
pub fn compute_digest_streaming<R: Read>(mut reader: R, chunk_size: usize) -> io::Result<Digest> {
    let mut hasher = StreamingDigest::new();
    let mut buf = vec![0u8; chunk_size.max(1)];
    loop {
        match reader.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => hasher.update(&buf[..n]),
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(hasher.finish())
}

/// Incremental digest state. Single use: `finish` consumes it.
#[derive(Clone, Default)]
pub struct StreamingDigest {
    inner: Sha256,
}

impl StreamingDigest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, chunk: &[u8]) {
        self.inner.update(chunk);
    }

    pub fn finish(self) -> Digest {
        Digest::from_sha256(self.inner.finalize().into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen from `printf '' | sha256sum` and `printf abc | sha256sum`.
    const EMPTY: &str = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";
    const ABC: &str = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad";

    #[test]
    fn known_digests() {
        assert_eq!(compute_digest(b"").to_hex(), EMPTY);
        assert_eq!(compute_digest(b"abc").to_hex(), ABC);
    }

    #[test]
    fn streaming_matches_buffered() {
        for chunk in [1, 2, 3, 64, 4096] {
            let d = compute_digest_streaming(&b"abc"[..], chunk).unwrap();
            assert_eq!(d, compute_digest(b"abc"));
        }
        let zeros = vec![0u8; 1 << 20];
        let d = compute_digest_streaming(zeros.as_slice(), 4096).unwrap();
        assert_eq!(d, compute_digest(&zeros));
    }

    #[test]
    fn streaming_propagates_read_errors() {
        struct Broken;
        impl Read for Broken {
            fn read(&mut self, _: &mut [u8]) -> io::Result<usize> {
                Err(io::Error::other("disk gone"))
            }
        }
        assert!(compute_digest_streaming(Broken, 8).is_err());
    }

    #[test]
    fn hex_roundtrip_and_rejections() {
        let d = Digest::parse_hex(ABC).unwrap();
        assert_eq!(d.to_hex(), ABC);
        assert_eq!(d.as_bytes().len(), SHA256_LEN);
        assert_eq!(
            Digest::parse_hex(&ABC[..63]),
            Err(DigestParseError::Length {
                expected: 64,
                actual: 63
            })
        );
        assert_eq!(
            Digest::parse_hex(&ABC.to_uppercase()),
            Err(DigestParseError::NotLowerHex)
        );
        assert!(Digest::parse_hex(&"g".repeat(64)).is_err());
    }

    #[test]
    fn serde_uses_hex_text() {
        let d = compute_digest(b"abc");
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, format!("\"{ABC}\""));
        let back: Digest = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
    }

    proptest::proptest! {
        #[test]
        fn streaming_matches_whole_buffer(
            content in proptest::collection::vec(proptest::num::u8::ANY, 0..4096),
            chunk in 1usize..600,
        ) {
            let whole = compute_digest(&content);
            proptest::prop_assert_eq!(compute_digest(&content), whole);
            let streamed = compute_digest_streaming(std::io::Cursor::new(&content), chunk).unwrap();
            proptest::prop_assert_eq!(streamed, whole);
        }
    }
}
