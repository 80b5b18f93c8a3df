//! Prime-order subgroups of `Z_p^*` small enough for 64-bit arithmetic.
//!
//! [`TestGroup`] (p = 23, q = 11, g = 2) is tiny on purpose: it allows
//! exhaustive enumeration of every exponent and every element in tests.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use rand::Rng;
use rand_core::{CryptoRng, RngCore};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use super::{Group, ScalarField};
use crate::codec::{deserialize_bytes, serialize_bytes};

/// Schnorr group of order `Q` in `Z_P^*`, generated by `G`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SchnorrGroup<const P: u64, const Q: u64, const G: u64>;

/// p = 23, q = 11, g = 2.
pub type TestGroup = SchnorrGroup<23, 11, 2>;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SchnorrElement<const P: u64, const Q: u64>(u64);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SchnorrScalar<const Q: u64>(u64);

const fn byte_len(max: u64) -> usize {
    let mut n = 1;
    while n < 8 && (max >> (8 * n)) != 0 {
        n += 1;
    }
    n
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

fn be_bytes(v: u64, len: usize) -> Vec<u8> {
    v.to_be_bytes()[8 - len..].to_vec()
}

fn from_be(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0u64, |acc, b| (acc << 8) | *b as u64)
}

impl<const P: u64, const Q: u64> SchnorrElement<P, Q> {
    pub fn value(&self) -> u64 {
        self.0
    }

    /// Accepts only members of the order-`Q` subgroup.
    pub fn new(v: u64) -> Option<Self> {
        (v != 0 && v < P && pow_mod(v, Q, P) == 1).then_some(Self(v))
    }
}

impl<const P: u64, const Q: u64> SchnorrElement<P, Q> {
    /// Residue in `Z_P^*` that may lie outside the subgroup.
    #[cfg(test)]
    pub(crate) fn unchecked(v: u64) -> Self {
        Self(v % P)
    }
}

impl<const Q: u64> SchnorrScalar<Q> {
    pub fn new(v: u64) -> Self {
        Self(v % Q)
    }

    pub fn value(&self) -> u64 {
        self.0
    }
}

impl<const P: u64, const Q: u64> fmt::Debug for SchnorrElement<P, Q> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<const Q: u64> fmt::Debug for SchnorrScalar<Q> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<const Q: u64> Add for SchnorrScalar<Q> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(((self.0 as u128 + rhs.0 as u128) % Q as u128) as u64)
    }
}

impl<const Q: u64> Sub for SchnorrScalar<Q> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<const Q: u64> Mul for SchnorrScalar<Q> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self(mul_mod(self.0, rhs.0, Q))
    }
}

impl<const Q: u64> Neg for SchnorrScalar<Q> {
    type Output = Self;
    fn neg(self) -> Self {
        Self((Q - self.0) % Q)
    }
}

impl<const Q: u64> Zero for SchnorrScalar<Q> {
    fn zero() -> Self {
        Self(0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl<const Q: u64> One for SchnorrScalar<Q> {
    fn one() -> Self {
        Self(1 % Q)
    }
}

impl<const Q: u64> ScalarField for SchnorrScalar<Q> {
    fn from_u64(v: u64) -> Self {
        Self(v % Q)
    }

    fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        Self(rng.gen_range(0..Q))
    }

    fn from_digest(digest: &[u8; 32]) -> Self {
        let v = digest
            .iter()
            .fold(0u128, |acc, b| (acc * 256 + *b as u128) % Q as u128);
        Self(v as u64)
    }

    fn to_bytes(&self) -> Vec<u8> {
        be_bytes(self.0, byte_len(Q - 1))
    }

    fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != byte_len(Q - 1) {
            return None;
        }
        let v = from_be(bytes);
        (v < Q).then_some(Self(v))
    }
}

impl<const Q: u64> Serialize for SchnorrScalar<Q> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_bytes(&self.to_bytes(), s)
    }
}

impl<'de, const Q: u64> Deserialize<'de> for SchnorrScalar<Q> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let bytes = deserialize_bytes(d)?;
        Self::from_bytes(&bytes).ok_or_else(|| de::Error::custom("non-canonical scalar"))
    }
}

impl<const P: u64, const Q: u64> Serialize for SchnorrElement<P, Q> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_bytes(&be_bytes(self.0, byte_len(P - 1)), s)
    }
}

impl<'de, const P: u64, const Q: u64> Deserialize<'de> for SchnorrElement<P, Q> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let bytes = deserialize_bytes(d)?;
        if bytes.len() != byte_len(P - 1) {
            return Err(de::Error::custom("wrong element length"));
        }
        Self::new(from_be(&bytes)).ok_or_else(|| de::Error::custom("not a subgroup element"))
    }
}

impl<const P: u64, const Q: u64, const G: u64> Group for SchnorrGroup<P, Q, G> {
    type Scalar = SchnorrScalar<Q>;
    type Element = SchnorrElement<P, Q>;

    const NAME: &'static str = "schnorr-test";
    const ELEMENT_LEN: usize = byte_len(P - 1);
    const SCALAR_LEN: usize = byte_len(Q - 1);

    fn small_order() -> Option<u64> {
        Some(Q)
    }

    fn order_hex() -> String {
        hex::encode(be_bytes(Q, byte_len(Q)))
    }

    fn generator() -> Self::Element {
        SchnorrElement(G)
    }

    fn identity() -> Self::Element {
        SchnorrElement(1)
    }

    fn combine(a: &Self::Element, b: &Self::Element) -> Self::Element {
        SchnorrElement(mul_mod(a.0, b.0, P))
    }

    fn invert(a: &Self::Element) -> Self::Element {
        // a^(q-1) = a^-1 inside the order-q subgroup
        SchnorrElement(pow_mod(a.0, Q - 1, P))
    }

    fn pow(a: &Self::Element, s: &Self::Scalar) -> Self::Element {
        SchnorrElement(pow_mod(a.0, s.0, P))
    }

    fn encode(e: &Self::Element) -> Vec<u8> {
        be_bytes(e.0, Self::ELEMENT_LEN)
    }

    fn decode(bytes: &[u8]) -> Option<Self::Element> {
        if bytes.len() != Self::ELEMENT_LEN {
            return None;
        }
        SchnorrElement::new(from_be(bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type E = SchnorrElement<23, 11>;

    #[test]
    fn test_group_members_are_the_quadratic_residues() {
        let members: Vec<u64> = (0..23).filter(|v| E::new(*v).is_some()).collect();
        assert_eq!(members, vec![1, 2, 3, 4, 6, 8, 9, 12, 13, 16, 18]);
        // generator has order exactly 11
        let g = TestGroup::generator();
        let powers: std::collections::BTreeSet<u64> = (0..11)
            .map(|k| TestGroup::pow(&g, &SchnorrScalar::new(k)).value())
            .collect();
        assert_eq!(powers.len(), 11);
        assert_eq!(TestGroup::pow(&g, &SchnorrScalar::new(11)), TestGroup::identity());
    }

    #[test]
    fn keygen_oracle_values() {
        assert_eq!(TestGroup::pow_gen(&SchnorrScalar::new(3)).value(), 8);
        assert_eq!(TestGroup::pow_gen(&SchnorrScalar::new(1)).value(), 2);
        assert_eq!(TestGroup::pow_gen(&SchnorrScalar::new(7)).value(), 13);
    }

    #[test]
    fn non_canonical_bytes_rejected() {
        assert!(TestGroup::decode(&[5]).is_none()); // non-residue
        assert!(TestGroup::decode(&[0]).is_none());
        assert!(TestGroup::decode(&[23]).is_none());
        assert!(TestGroup::decode(&[0, 2]).is_none());
        assert!(SchnorrScalar::<11>::from_bytes(&[11]).is_none());
        assert_eq!(TestGroup::decode(&[2]).map(|e| e.value()), Some(2));
    }

    #[test]
    fn digest_reduction_matches_bignum() {
        let mut d = [0u8; 32];
        d[31] = 25;
        assert_eq!(SchnorrScalar::<11>::from_digest(&d).value(), 3);
        d[30] = 1; // 256 + 25 = 281 = 25*11 + 6
        assert_eq!(SchnorrScalar::<11>::from_digest(&d).value(), 6);
    }
}
