//! Keccak-256 and the nonce-driven hash vector fed to the decoder.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha3::{Digest, Keccak256};

use crate::error::{Error, Result};
use crate::ldpc::BitVector;

pub type Nonce = u64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest256([u8; 32]);

impl Digest256 {
    pub const ZERO: Digest256 = Digest256([0; 32]);

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let s = s.strip_prefix("0x").unwrap_or(s);
        let bytes = hex::decode(s).map_err(|e| Error::Parse(format!("bad hex digest: {e}")))?;
        let arr: [u8; 32] = bytes.try_into().map_err(|b: Vec<u8>| {
            Error::Parse(format!("digest must be 32 bytes, got {}", b.len()))
        })?;
        Ok(Self(arr))
    }
}

impl From<[u8; 32]> for Digest256 {
    fn from(b: [u8; 32]) -> Self {
        Self(b)
    }
}

impl fmt::Debug for Digest256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", self.to_hex())
    }
}

impl fmt::Display for Digest256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Digest256 {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_hex(s)
    }
}

impl Serialize for Digest256 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest256 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Original (pre-NIST padding) Keccak-256, as used by Ethereum.
pub fn keccak256(message: &[u8]) -> Digest256 {
    Digest256(Keccak256::digest(message).into())
}

/// Builds the length-`n` hash vector for `nonce`.
///
/// `s_1 = keccak256(seal_input || nonce_be64)` and `s_u = keccak256(s_{u-1})`;
/// the vector is the first `n` bits of `s_1 s_2 ...`, MSB of each byte first.
pub fn hash_vector(seal_input: &Digest256, nonce: Nonce, n: usize) -> Result<BitVector> {
    if n == 0 {
        return Err(Error::Parameter(
            "hash vector length must be positive".into(),
        ));
    }
    let mut input = [0u8; 40];
    input[..32].copy_from_slice(&seal_input.0);
    input[32..].copy_from_slice(&nonce.to_be_bytes());
    let mut block = keccak256(&input);
    let blocks = n.div_ceil(256);
    let mut bytes = Vec::with_capacity(blocks * 32);
    bytes.extend_from_slice(&block.0);
    for _ in 1..blocks {
        block = keccak256(&block.0);
        bytes.extend_from_slice(&block.0);
    }
    Ok(BitVector::from_bytes_msb(&bytes, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_vectors() {
        assert_eq!(
            keccak256(b"").to_hex(),
            "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"
        );
        assert_eq!(
            keccak256(b"abc").to_hex(),
            "4e03657aea45a94fc7d47ba826c8d667c0d1e6e33a64a036ec44f58fa12d6c45"
        );
        assert_eq!(keccak256(b"abc"), keccak256(b"abc"));
    }

    #[test]
    fn first_block_boundary() {
        let seal = keccak256(b"header");
        let r = hash_vector(&seal, 7, 256).unwrap();
        let mut input = seal.as_bytes().to_vec();
        input.extend_from_slice(&7u64.to_be_bytes());
        let s1 = keccak256(&input);
        assert_eq!(r.to_bytes_msb(), s1.as_bytes().to_vec());
    }

    #[test]
    fn spans_two_blocks() {
        let seal = keccak256(b"header");
        let r = hash_vector(&seal, 1, 300).unwrap();
        let mut input = seal.as_bytes().to_vec();
        input.extend_from_slice(&1u64.to_be_bytes());
        let s1 = keccak256(&input);
        let s2 = keccak256(s1.as_bytes());
        let mut expected = s1.as_bytes().to_vec();
        expected.extend_from_slice(&s2.as_bytes()[..6]);
        // 44 bits of s2: five full bytes plus the top nibble of the sixth
        expected[37] &= 0xf0;
        assert_eq!(r.len(), 300);
        assert_eq!(r.to_bytes_msb(), expected);
    }

    #[test]
    fn zero_length_rejected() {
        assert!(hash_vector(&Digest256::ZERO, 0, 0).is_err());
    }

    #[test]
    fn hex_round_trip() {
        let d = keccak256(b"abc");
        assert_eq!(Digest256::from_hex(&d.to_hex()).unwrap(), d);
        assert_eq!(Digest256::from_hex(&format!("0x{d}")).unwrap(), d);
        assert!(Digest256::from_hex("abcd").is_err());
        assert!(Digest256::from_hex("zz").is_err());
    }
}
