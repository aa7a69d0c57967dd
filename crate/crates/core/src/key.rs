use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A locking key, one 0/1 entry per bit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LockingKey {
    bits: Vec<u8>,
}

impl LockingKey {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Key("key bits must be 0 or 1".into()));
        }
        Ok(LockingKey { bits })
    }

    pub fn zeros(len: usize) -> Self {
        LockingKey { bits: vec![0; len] }
    }

    pub fn random(len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LockingKey { bits: (0..len).map(|_| rng.gen_range(0..=1u8)).collect() }
    }

    /// Bit i is `(byte[i / 8] >> (i % 8)) & 1`, bytes in string order.
    pub fn from_hex(hex: &str) -> Result<Self> {
        let hex = hex.strip_prefix("0x").unwrap_or(hex);
        if hex.is_empty() || !hex.len().is_multiple_of(2) {
            return Err(Error::Key(format!("hex key needs an even, nonzero number of digits: '{hex}'")));
        }
        let mut bits = Vec::with_capacity(hex.len() * 4);
        for i in (0..hex.len()).step_by(2) {
            let byte = u8::from_str_radix(&hex[i..i + 2], 16)
                .map_err(|_| Error::Key(format!("not a hex string: '{hex}'")))?;
            bits.extend((0..8).map(|j| (byte >> j) & 1));
        }
        Ok(LockingKey { bits })
    }

    pub fn to_hex(&self) -> String {
        self.bits
            .chunks(8)
            .map(|c| {
                let byte = c.iter().enumerate().fold(0u8, |acc, (j, &b)| acc | (b << j));
                format!("{byte:02x}")
            })
            .collect()
    }

    /// Parses `random:<bits>:<seed>` or a hex string.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        if let Some(rest) = spec.strip_prefix("random:") {
            let (len, seed) = rest
                .split_once(':')
                .ok_or_else(|| Error::Key(format!("expected random:<bits>:<seed>, got '{spec}'")))?;
            let len = len.parse().map_err(|_| Error::Key(format!("bad bit count in '{spec}'")))?;
            let seed = seed.parse().map_err(|_| Error::Key(format!("bad seed in '{spec}'")))?;
            Ok(LockingKey::random(len, seed))
        } else {
            LockingKey::from_hex(spec)
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn set(&mut self, i: usize, v: u8) {
        self.bits[i] = v & 1;
    }

    pub fn truncated(&self, len: usize) -> Self {
        LockingKey { bits: self.bits[..len.min(self.bits.len())].to_vec() }
    }

    /// Little-endian value of bits `[offset, offset + len)`, `len ≤ 32`.
    pub fn segment(&self, offset: usize, len: usize) -> u32 {
        (0..len).fold(0, |acc, j| acc | (u32::from(self.bits[offset + j]) << j))
    }
}

impl Serialize for LockingKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("LockingKey", 2)?;
        st.serialize_field("length", &self.len())?;
        st.serialize_field("hex", &self.to_hex())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for LockingKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            length: usize,
            hex: String,
        }
        let raw = Raw::deserialize(d)?;
        let key = LockingKey::from_hex(&raw.hex).map_err(serde::de::Error::custom)?;
        if raw.length > key.len() {
            return Err(serde::de::Error::custom("key length exceeds hex digits"));
        }
        Ok(key.truncated(raw.length))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_bit_order() {
        let k = LockingKey::from_hex("0x0180").unwrap();
        assert_eq!(k.len(), 16);
        assert_eq!(k.bit(0), 1);
        assert_eq!(k.bit(15), 1);
        assert_eq!(k.bits().iter().filter(|&&b| b == 1).count(), 2);
        assert_eq!(k.to_hex(), "0180");
        assert_eq!(k.segment(0, 8), 1);
        assert_eq!(k.segment(8, 8), 0x80);
    }

    #[test]
    fn spec_parsing() {
        let a = LockingKey::parse_spec("random:77:5").unwrap();
        assert_eq!(a.len(), 77);
        assert_eq!(a, LockingKey::parse_spec("random:77:5").unwrap());
        assert_ne!(a, LockingKey::parse_spec("random:77:6").unwrap());
        assert!(LockingKey::parse_spec("random:x:5").is_err());
        assert!(LockingKey::parse_spec("abc").is_err());
    }

    #[test]
    fn json_roundtrip_keeps_length() {
        let k = LockingKey::random(13, 1);
        let s = serde_json::to_string(&k).unwrap();
        let back: LockingKey = serde_json::from_str(&s).unwrap();
        assert_eq!(k, back);
    }
}
