use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};

use curve25519_dalek::constants::{RISTRETTO_BASEPOINT_COMPRESSED, RISTRETTO_BASEPOINT_POINT, RISTRETTO_BASEPOINT_TABLE};
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use curve25519_dalek::traits::{Identity, VartimeMultiscalarMul};
use num_traits::{One, Zero};
use rand_core::{CryptoRng, RngCore};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use super::{Group, ScalarField};
use crate::codec::{deserialize_bytes, serialize_bytes};

/// The Ristretto255 prime-order group.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Ristretto255;

/// A point plus its compressed encoding when already known, so that
/// elements read off the wire are never re-compressed.
#[derive(Clone, Copy)]
pub struct RistrettoElement {
    point: RistrettoPoint,
    enc: Option<[u8; 32]>,
}

impl RistrettoElement {
    pub fn new(point: RistrettoPoint) -> Self {
        Self { point, enc: None }
    }

    pub fn point(&self) -> &RistrettoPoint {
        &self.point
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        match self.enc {
            Some(b) => b,
            None => self.point.compress().to_bytes(),
        }
    }
}

impl PartialEq for RistrettoElement {
    fn eq(&self, other: &Self) -> bool {
        match (self.enc, other.enc) {
            (Some(a), Some(b)) => a == b,
            _ => self.point == other.point,
        }
    }
}

impl Eq for RistrettoElement {}

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct RistrettoScalar(pub Scalar);

impl fmt::Debug for RistrettoElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R({})", &hex::encode(self.to_bytes())[..12])
    }
}

impl fmt::Debug for RistrettoScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S({})", &hex::encode(self.to_bytes())[..12])
    }
}

impl Hash for RistrettoElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.to_bytes().hash(state);
    }
}

impl Add for RistrettoScalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl Sub for RistrettoScalar {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Mul for RistrettoScalar {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0)
    }
}

impl Neg for RistrettoScalar {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl Zero for RistrettoScalar {
    fn zero() -> Self {
        Self(Scalar::ZERO)
    }
    fn is_zero(&self) -> bool {
        self.0 == Scalar::ZERO
    }
}

impl One for RistrettoScalar {
    fn one() -> Self {
        Self(Scalar::ONE)
    }
}

impl ScalarField for RistrettoScalar {
    fn from_u64(v: u64) -> Self {
        Self(Scalar::from(v))
    }

    fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        Self(Scalar::from_bytes_mod_order_wide(&wide))
    }

    fn from_digest(digest: &[u8; 32]) -> Self {
        let mut le = *digest;
        le.reverse();
        Self(Scalar::from_bytes_mod_order(le))
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut be = self.0.to_bytes();
        be.reverse();
        be.to_vec()
    }

    fn from_bytes(bytes: &[u8]) -> Option<Self> {
        let mut le: [u8; 32] = bytes.try_into().ok()?;
        le.reverse();
        Option::from(Scalar::from_canonical_bytes(le)).map(Self)
    }
}

impl Serialize for RistrettoScalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_bytes(&self.to_bytes(), s)
    }
}

impl<'de> Deserialize<'de> for RistrettoScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let bytes = deserialize_bytes(d)?;
        Self::from_bytes(&bytes).ok_or_else(|| de::Error::custom("non-canonical scalar"))
    }
}

impl Serialize for RistrettoElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_bytes(&self.to_bytes(), s)
    }
}

impl<'de> Deserialize<'de> for RistrettoElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let bytes = deserialize_bytes(d)?;
        Ristretto255::decode(&bytes).ok_or_else(|| de::Error::custom("invalid ristretto encoding"))
    }
}

impl Group for Ristretto255 {
    type Scalar = RistrettoScalar;
    type Element = RistrettoElement;

    const NAME: &'static str = "ristretto255";
    const ELEMENT_LEN: usize = 32;
    const SCALAR_LEN: usize = 32;

    fn small_order() -> Option<u64> {
        None
    }

    fn order_hex() -> String {
        "1000000000000000000000000000000014def9dea2f79cd65812631a5cf5d3ed".to_string()
    }

    fn generator() -> Self::Element {
        RistrettoElement {
            point: RISTRETTO_BASEPOINT_POINT,
            enc: Some(RISTRETTO_BASEPOINT_COMPRESSED.to_bytes()),
        }
    }

    fn identity() -> Self::Element {
        RistrettoElement {
            point: RistrettoPoint::identity(),
            enc: Some([0; 32]),
        }
    }

    fn combine(a: &Self::Element, b: &Self::Element) -> Self::Element {
        RistrettoElement::new(a.point + b.point)
    }

    fn invert(a: &Self::Element) -> Self::Element {
        RistrettoElement::new(-a.point)
    }

    fn pow(a: &Self::Element, s: &Self::Scalar) -> Self::Element {
        RistrettoElement::new(a.point * s.0)
    }

    fn pow_gen(s: &Self::Scalar) -> Self::Element {
        RistrettoElement::new(RISTRETTO_BASEPOINT_TABLE * &s.0)
    }

    fn pow2(a: &Self::Element, s: &Self::Scalar, b: &Self::Element, t: &Self::Scalar) -> Self::Element {
        RistrettoElement::new(RistrettoPoint::vartime_multiscalar_mul(
            [s.0, t.0],
            [a.point, b.point],
        ))
    }

    fn multi_pow(scalars: &[Self::Scalar], bases: &[Self::Element]) -> Self::Element {
        RistrettoElement::new(RistrettoPoint::vartime_multiscalar_mul(
            scalars.iter().map(|s| s.0),
            bases.iter().map(|b| b.point),
        ))
    }

    fn encode(e: &Self::Element) -> Vec<u8> {
        e.to_bytes().to_vec()
    }

    fn decode(bytes: &[u8]) -> Option<Self::Element> {
        let compressed = CompressedRistretto::from_slice(bytes).ok()?;
        // decompress rejects non-canonical encodings
        let point = compressed.decompress()?;
        Some(RistrettoElement {
            point,
            enc: Some(compressed.to_bytes()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_canonical_encodings() {
        assert!(Ristretto255::decode(&[0xff; 32]).is_none());
        assert!(Ristretto255::decode(&[0; 31]).is_none());
        assert!(RistrettoScalar::from_bytes(&[0xff; 32]).is_none());
        let id = Ristretto255::encode(&Ristretto255::identity());
        assert_eq!(id, vec![0; 32]);
        assert!(Ristretto255::decode(&id).is_some());
    }

    #[test]
    fn cached_and_computed_elements_agree() {
        let s = RistrettoScalar::from_u64(7);
        let computed = Ristretto255::pow_gen(&s);
        let decoded = Ristretto255::decode(&Ristretto255::encode(&computed)).unwrap();
        assert_eq!(computed, decoded);
        assert_eq!(decoded.to_bytes(), computed.point().compress().to_bytes());
        assert_eq!(Ristretto255::pow(&Ristretto255::generator(), &s), decoded);
        assert_ne!(Ristretto255::generator(), decoded);
    }

    #[test]
    fn scalar_encoding_is_big_endian() {
        let one = RistrettoScalar::from_u64(1).to_bytes();
        assert_eq!(one[31], 1);
        assert!(one[..31].iter().all(|b| *b == 0));
    }
}
