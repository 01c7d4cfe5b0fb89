//! Addresses travel as `"0x…"` strings in every JSON document.

use serde::{de, Deserialize, Deserializer, Serializer};

pub fn format_addr(v: u64) -> String {
    format!("{v:#x}")
}

pub fn parse_addr(s: &str) -> Result<u64, String> {
    let digits = s
        .strip_prefix("0x")
        .or_else(|| s.strip_prefix("0X"))
        .ok_or_else(|| format!("address {s:?} lacks 0x prefix"))?;
    u64::from_str_radix(digits, 16).map_err(|e| format!("bad address {s:?}: {e}"))
}

pub mod addr {
    use super::*;

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_addr(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        parse_addr(&String::deserialize(d)?).map_err(de::Error::custom)
    }
}

pub mod addrs {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[u64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|a| format_addr(*a)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u64>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| parse_addr(s).map_err(de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn addr_format() {
        assert_eq!(format_addr(0x080b41c0), "0x80b41c0");
        assert_eq!(format_addr(0), "0x0");
        assert_eq!(parse_addr("0x80B41C0"), Ok(0x080b41c0));
        assert!(parse_addr("1234").is_err());
        assert!(parse_addr("0xg").is_err());
    }
}
