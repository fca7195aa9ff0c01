//! Extended natural numbers `ℕ ∪ {∞}`.
//!
//! Edge multiplicities live here. Addition and multiplication absorb into
//! [`ExtNat::Inf`], except that `0 · ∞ = 0`. Decrementing infinity leaves it
//! infinite, which is what makes matrix moves such as column additions well
//! defined on rows of infinite emitters.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Mul};

use num_traits::{One, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{bail, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtNat {
    Fin(u64),
    Inf,
}

pub use ExtNat::Inf as INF;

impl ExtNat {
    pub const ZERO: ExtNat = ExtNat::Fin(0);
    pub const ONE: ExtNat = ExtNat::Fin(1);

    pub fn is_inf(self) -> bool {
        matches!(self, ExtNat::Inf)
    }

    pub fn is_finite(self) -> bool {
        !self.is_inf()
    }

    /// True for every positive value, including infinity.
    pub fn is_positive(self) -> bool {
        self != ExtNat::ZERO
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            ExtNat::Fin(n) => Some(n),
            ExtNat::Inf => None,
        }
    }

    pub fn checked_add(self, rhs: ExtNat) -> Option<ExtNat> {
        match (self, rhs) {
            (ExtNat::Fin(a), ExtNat::Fin(b)) => a.checked_add(b).map(ExtNat::Fin),
            _ => Some(ExtNat::Inf),
        }
    }

    pub fn checked_mul(self, rhs: ExtNat) -> Option<ExtNat> {
        match (self, rhs) {
            (ExtNat::Fin(0), _) | (_, ExtNat::Fin(0)) => Some(ExtNat::ZERO),
            (ExtNat::Fin(a), ExtNat::Fin(b)) => a.checked_mul(b).map(ExtNat::Fin),
            _ => Some(ExtNat::Inf),
        }
    }

    /// `n − 1` with `∞ − 1 = ∞`; undefined at zero.
    pub fn dec(self) -> Result<ExtNat> {
        match self {
            ExtNat::Fin(0) => bail!(Domain, "cannot decrement 0"),
            ExtNat::Fin(n) => Ok(ExtNat::Fin(n - 1)),
            ExtNat::Inf => Ok(ExtNat::Inf),
        }
    }

    /// `self − k` for finite `k`, keeping infinity infinite.
    pub fn sub_fin(self, k: u64) -> Result<ExtNat> {
        match self {
            ExtNat::Fin(n) if n >= k => Ok(ExtNat::Fin(n - k)),
            ExtNat::Fin(n) => bail!(Domain, "cannot subtract {k} from {n}"),
            ExtNat::Inf => Ok(ExtNat::Inf),
        }
    }

    /// Caps the value at `cap`, mapping infinity to `cap` as well.
    pub fn capped(self, cap: u64) -> u64 {
        match self {
            ExtNat::Fin(n) => n.min(cap),
            ExtNat::Inf => cap,
        }
    }
}

impl Default for ExtNat {
    fn default() -> Self {
        ExtNat::ZERO
    }
}

impl From<u64> for ExtNat {
    fn from(n: u64) -> Self {
        ExtNat::Fin(n)
    }
}

impl Add for ExtNat {
    type Output = ExtNat;

    fn add(self, rhs: ExtNat) -> ExtNat {
        self.checked_add(rhs).expect("edge multiplicity overflow")
    }
}

impl Mul for ExtNat {
    type Output = ExtNat;

    fn mul(self, rhs: ExtNat) -> ExtNat {
        self.checked_mul(rhs).expect("edge multiplicity overflow")
    }
}

impl Zero for ExtNat {
    fn zero() -> Self {
        ExtNat::ZERO
    }

    fn is_zero(&self) -> bool {
        *self == ExtNat::ZERO
    }
}

impl One for ExtNat {
    fn one() -> Self {
        ExtNat::ONE
    }
}

impl Sum for ExtNat {
    fn sum<I: Iterator<Item = ExtNat>>(iter: I) -> ExtNat {
        iter.fold(ExtNat::ZERO, |a, b| a + b)
    }
}

impl PartialOrd for ExtNat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtNat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtNat::Fin(a), ExtNat::Fin(b)) => a.cmp(b),
            (ExtNat::Fin(_), ExtNat::Inf) => Ordering::Less,
            (ExtNat::Inf, ExtNat::Fin(_)) => Ordering::Greater,
            (ExtNat::Inf, ExtNat::Inf) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Fin(n) => write!(f, "{n}"),
            ExtNat::Inf => f.write_str("∞"),
        }
    }
}

impl Serialize for ExtNat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtNat::Fin(n) => serializer.serialize_u64(*n),
            ExtNat::Inf => serializer.serialize_str("inf"),
        }
    }
}

struct ExtNatVisitor;

impl<'de> Visitor<'de> for ExtNatVisitor {
    type Value = ExtNat;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a nonnegative integer or the string \"inf\"")
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtNat, E> {
        Ok(ExtNat::Fin(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtNat, E> {
        u64::try_from(v)
            .map(ExtNat::Fin)
            .map_err(|_| E::custom(format!("negative multiplicity {v}")))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtNat, E> {
        match v {
            "inf" | "∞" => Ok(ExtNat::Inf),
            other => Err(E::custom(format!("unknown multiplicity {other:?}"))),
        }
    }
}

impl<'de> Deserialize<'de> for ExtNat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<ExtNat, D::Error> {
        deserializer.deserialize_any(ExtNatVisitor)
    }
}
