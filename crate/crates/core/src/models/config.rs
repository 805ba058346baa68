//! JSON model documents.
//!
//! ```json
//! {"family": "star", "beta": "1/2", "M": 128, "sequence": {"kind": "factorial"}}
//! {"family": "symmetric", "c": {"kind": "blocks", "params": {"values": ["1/3", "1/4"], "growth": "factorial"}}}
//! ```

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{BaseSequence, BlockGrowth, CSequence, McMullenModel, Model, StarModel, SymmetricModel};
use crate::error::{Error, Result};
use crate::symbolic::Beta;

/// A rational written as `"p/q"` or `"p"`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rat(pub BigRational);

impl FromStr for Rat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("expected a rational \"p/q\", got {s:?}"));
        let s = s.trim();
        let (p, q) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s, "1"),
        };
        let p: BigInt = p.parse().map_err(|_| bad())?;
        let q: BigInt = q.parse().map_err(|_| bad())?;
        if q == BigInt::from(0) {
            return Err(bad());
        }
        Ok(Rat(BigRational::new(p, q)))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    McMullen,
    Star,
    Symmetric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseSequenceConfig {
    pub kind: SequenceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<u64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Factorial,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantParams {
    pub value: Rat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfMinusPowParams {
    pub a: Rat,
    pub b: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthName {
    Factorial,
    SelfPower,
    Constant,
    Geometric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlocksParams {
    pub values: Vec<Rat>,
    pub growth: GrowthName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReciprocalParams {
    pub offset: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitParams {
    pub values: Vec<Rat>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum CConfig {
    Constant(ConstantParams),
    HalfMinusPow(HalfMinusPowParams),
    Blocks(BlocksParams),
    Reciprocal(ReciprocalParams),
    Explicit(ExplicitParams),
}

impl CConfig {
    pub fn to_sequence(&self) -> Result<CSequence> {
        Ok(match self {
            CConfig::Constant(p) => CSequence::Constant(p.value.0.clone()),
            CConfig::HalfMinusPow(p) => CSequence::HalfMinusPow { a: p.a.0.clone(), b: p.b },
            CConfig::Blocks(p) => {
                let growth = match p.growth {
                    GrowthName::Factorial => BlockGrowth::Factorial,
                    GrowthName::SelfPower => BlockGrowth::SelfPower,
                    GrowthName::Constant => BlockGrowth::Constant(
                        p.length.ok_or_else(|| Error::Config("constant block growth needs \"length\"".into()))?,
                    ),
                    GrowthName::Geometric => BlockGrowth::Geometric(
                        p.ratio.ok_or_else(|| Error::Config("geometric block growth needs \"ratio\"".into()))?,
                    ),
                };
                CSequence::Blocks { values: p.values.iter().map(|r| r.0.clone()).collect(), growth }
            }
            CConfig::Reciprocal(p) => CSequence::Reciprocal { offset: p.offset },
            CConfig::Explicit(p) => CSequence::Explicit(p.values.iter().map(|r| r.0.clone()).collect()),
        })
    }
}

/// A model document. Missing `beta`, `M` and `sequence` default to `1/2`,
/// `128` and factorials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: FamilyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Beta>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<BaseSequenceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<CConfig>,
}

pub const DEFAULT_M: u64 = 128;

impl ModelConfig {
    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn mcmullen(beta: Beta, m: u64) -> Self {
        ModelConfig { family: FamilyName::McMullen, beta: Some(beta), m: Some(m), sequence: None, c: None }
    }

    pub fn star_factorial(beta: Beta, m: u64) -> Self {
        ModelConfig {
            family: FamilyName::Star,
            beta: Some(beta),
            m: Some(m),
            sequence: Some(BaseSequenceConfig { kind: SequenceKind::Factorial, values: None }),
            c: None,
        }
    }

    pub fn symmetric(c: CConfig) -> Self {
        ModelConfig { family: FamilyName::Symmetric, beta: None, m: None, sequence: None, c: Some(c) }
    }

    pub fn build(&self) -> Result<Model> {
        let beta = self.beta.unwrap_or_else(Beta::half);
        let m = self.m.unwrap_or(DEFAULT_M);
        match self.family {
            FamilyName::McMullen => {
                if self.sequence.is_some() || self.c.is_some() {
                    return Err(Error::Config("the mcmullen family takes only beta and M".into()));
                }
                Ok(Model::McMullen(McMullenModel::new(beta, m)?))
            }
            FamilyName::Star => {
                if self.c.is_some() {
                    return Err(Error::Config("the star family does not take c".into()));
                }
                let base = match &self.sequence {
                    None | Some(BaseSequenceConfig { kind: SequenceKind::Factorial, values: None }) => {
                        BaseSequence::factorial(m)?
                    }
                    Some(BaseSequenceConfig { kind: SequenceKind::Factorial, values: Some(_) }) => {
                        return Err(Error::Config("factorial sequence takes no values".into()))
                    }
                    Some(BaseSequenceConfig { kind: SequenceKind::Explicit, values }) => {
                        let v = values
                            .clone()
                            .ok_or_else(|| Error::Config("explicit sequence needs values".into()))?;
                        BaseSequence::explicit(m, v)?
                    }
                };
                Ok(Model::Star(StarModel::new(beta, base)))
            }
            FamilyName::Symmetric => {
                if self.beta.is_some() || self.m.is_some() || self.sequence.is_some() {
                    return Err(Error::Config("the symmetric family takes only c".into()));
                }
                let c = self.c.as_ref().ok_or_else(|| Error::Config("the symmetric family needs c".into()))?;
                Ok(Model::Symmetric(SymmetricModel::new(c.to_sequence()?)?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LengthFunction;

    #[test]
    fn parses_each_family() {
        let star = ModelConfig::from_json(r#"{"family":"star","beta":"1/2","M":128,"sequence":{"kind":"factorial"}}"#)
            .unwrap()
            .build()
            .unwrap();
        assert!(matches!(star, Model::Star(_)));
        let mc = ModelConfig::from_json(r#"{"family":"mcmullen"}"#).unwrap().build().unwrap();
        assert_eq!(mc.describe(), "mcmullen(beta=1/2, M=128)");
        let sym = ModelConfig::from_json(
            r#"{"family":"symmetric","c":{"kind":"blocks","params":{"values":["1/3","1/4"],"growth":"factorial"}}}"#,
        )
        .unwrap()
        .build()
        .unwrap();
        assert!(sym.certificate().unwrap().passes());
        let hm = ModelConfig::from_json(r#"{"family":"symmetric","c":{"kind":"half_minus_pow","params":{"a":"1/2","b":2}}}"#)
            .unwrap()
            .build()
            .unwrap();
        assert!(matches!(hm, Model::Symmetric(_)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ModelConfig::from_json(r#"{"family":"mcmullen","gamma":1}"#).is_err());
        assert!(ModelConfig::from_json(
            r#"{"family":"symmetric","c":{"kind":"constant","params":{"value":"1/3","extra":2}}}"#
        )
        .is_err());
        assert!(ModelConfig::from_json(r#"{"family":"symmetric","c":{"kind":"constant","params":{"value":"1/3"},"x":1}}"#)
            .is_err());
        assert!(ModelConfig::from_json(r#"{"family":"star","sequence":{"kind":"factorial","step":2}}"#).is_err());
    }

    #[test]
    fn semantic_errors() {
        let e = ModelConfig::from_json(r#"{"family":"mcmullen","M":50}"#).unwrap().build();
        assert!(matches!(e, Err(Error::InvalidParameter(_))));
        let e = ModelConfig::from_json(r#"{"family":"symmetric"}"#).unwrap().build();
        assert!(matches!(e, Err(Error::Config(_))));
        assert!(ModelConfig::from_json(r#"{"family":"mcmullen","beta":"0.5"}"#).is_err());
    }

    #[test]
    fn roundtrip() {
        let cfg = ModelConfig::star_factorial(Beta::half(), 128);
        let s = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ModelConfig::from_json(&s).unwrap(), cfg);
    }
}
