//! Lowercase, big-endian, minimal hex encoding for integers.
//!
//! Every integer that crosses a file boundary uses this form: no `0x`
//! prefix, no leading zeros, and zero is written as `"0"`.

use num_bigint::BigUint;
use serde::{de, Deserialize, Deserializer, Serializer};

pub fn encode(value: &BigUint) -> String {
    value.to_str_radix(16)
}

pub fn decode(text: &str) -> Result<BigUint, String> {
    if text.is_empty() {
        return Err("empty hex integer".into());
    }
    if text.len() > 1 && text.starts_with('0') {
        return Err(format!("hex integer {text:?} has leading zeros"));
    }
    if !text.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
        return Err(format!("{text:?} is not lowercase hex"));
    }
    BigUint::parse_bytes(text.as_bytes(), 16).ok_or_else(|| format!("bad hex integer {text:?}"))
}

pub fn serialize<S: Serializer>(value: &BigUint, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_str(&encode(value))
}

pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<BigUint, D::Error> {
    let text = String::deserialize(deserializer)?;
    decode(&text).map_err(de::Error::custom)
}

/// Same encoding for plain `u64` values such as timestamps.
pub mod u64_hex {
    use super::*;

    pub fn serialize<S: Serializer>(value: &u64, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format!("{value:x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<u64, D::Error> {
        let value = super::deserialize(deserializer)?;
        u64::try_from(value).map_err(|_| de::Error::custom("hex integer exceeds 64 bits"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms() {
        assert_eq!(encode(&BigUint::from(0u8)), "0");
        assert_eq!(encode(&BigUint::from(255u32)), "ff");
        assert_eq!(encode(&BigUint::from(4096u32)), "1000");
    }

    #[test]
    fn rejects_non_canonical_text() {
        assert!(decode("").is_err());
        assert!(decode("00ff").is_err());
        assert!(decode("FF").is_err());
        assert!(decode("0x1").is_err());
        assert_eq!(decode("0").unwrap(), BigUint::from(0u8));
    }

    proptest::proptest! {
        #[test]
        fn round_trips(bytes in proptest::collection::vec(proptest::num::u8::ANY, 0..64)) {
            let value = BigUint::from_bytes_be(&bytes);
            proptest::prop_assert_eq!(decode(&encode(&value)).unwrap(), value);
        }
    }
}
