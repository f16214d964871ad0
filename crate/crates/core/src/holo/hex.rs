//! Bit-exact, decimal-free encoding of `f64`/complex values as the
//! hexadecimal image of their IEEE-754 bits (`"0x3ff0000000000000"` is 1.0).

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::C;

pub fn encode_f64(x: f64) -> String {
    format!("0x{:016x}", x.to_bits())
}

pub fn decode_f64(s: &str) -> Option<f64> {
    let digits = s.strip_prefix("0x")?;
    u64::from_str_radix(digits, 16).ok().map(f64::from_bits)
}

fn encode_c(z: &C) -> [String; 2] {
    [encode_f64(z.re), encode_f64(z.im)]
}

fn decode_c<E: serde::de::Error>(pair: &[String; 2]) -> Result<C, E> {
    let re = decode_f64(&pair[0]).ok_or_else(|| E::custom(format!("bad hex float {}", pair[0])))?;
    let im = decode_f64(&pair[1]).ok_or_else(|| E::custom(format!("bad hex float {}", pair[1])))?;
    Ok(C::new(re, im))
}

pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C, s: S) -> Result<S::Ok, S::Error> {
        encode_c(z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C, D::Error> {
        let pair = <[String; 2]>::deserialize(d)?;
        decode_c::<D::Error>(&pair)
    }
}

pub mod complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(encode_c).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C>, D::Error> {
        let pairs = Vec::<[String; 2]>::deserialize(d)?;
        pairs.iter().map(decode_c::<D::Error>).collect()
    }
}

pub mod real {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        encode_f64(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        decode_f64(&s).ok_or_else(|| D::Error::custom(format!("bad hex float {s}")))
    }
}
