//! Prime-order group abstraction.
//!
//! Everything above this module is written against [`Group`], which is
//! implemented by a small Schnorr subgroup used for exhaustive tests and by
//! Ristretto255 for production use. Group operations are written
//! multiplicatively (`combine`, `pow`) regardless of the underlying
//! representation.

use std::fmt::Debug;
use std::hash::Hash;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use rand_core::{CryptoRng, RngCore};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

mod ristretto;
mod schnorr;

pub use ristretto::{Ristretto255, RistrettoElement, RistrettoScalar};
pub use schnorr::{SchnorrElement, SchnorrGroup, SchnorrScalar, TestGroup};

/// Integers modulo the group order.
pub trait ScalarField:
    Copy
    + Eq
    + Debug
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Serialize
    + DeserializeOwned
    + 'static
{
    fn from_u64(v: u64) -> Self;

    fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform in `[1, q)`.
    fn random_nonzero<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let s = Self::random(rng);
            if !s.is_zero() {
                return s;
            }
        }
    }

    /// Interprets a 256-bit digest as a big-endian integer reduced mod q.
    fn from_digest(digest: &[u8; 32]) -> Self;

    /// Fixed-width big-endian encoding.
    fn to_bytes(&self) -> Vec<u8>;

    /// Rejects wrong lengths and non-reduced values.
    fn from_bytes(bytes: &[u8]) -> Option<Self>;
}

/// A cyclic group of prime order q with a fixed generator.
pub trait Group:
    Copy + Clone + Debug + Default + PartialEq + Eq + Hash + Send + Sync + 'static
{
    type Scalar: ScalarField;
    type Element: Copy + Eq + Hash + Debug + Send + Sync + Serialize + DeserializeOwned + 'static;

    const NAME: &'static str;
    const ELEMENT_LEN: usize;
    const SCALAR_LEN: usize;

    /// The group order when it fits in 64 bits.
    fn small_order() -> Option<u64>;

    /// Big-endian hex of the group order.
    fn order_hex() -> String;

    fn generator() -> Self::Element;
    fn identity() -> Self::Element;
    fn combine(a: &Self::Element, b: &Self::Element) -> Self::Element;
    fn invert(a: &Self::Element) -> Self::Element;
    fn pow(a: &Self::Element, s: &Self::Scalar) -> Self::Element;

    fn pow_gen(s: &Self::Scalar) -> Self::Element {
        Self::pow(&Self::generator(), s)
    }

    /// `a^s · b^t`. Only used on public values.
    fn pow2(a: &Self::Element, s: &Self::Scalar, b: &Self::Element, t: &Self::Scalar) -> Self::Element {
        Self::combine(&Self::pow(a, s), &Self::pow(b, t))
    }

    /// `∏ bases[i]^scalars[i]`. Only used on public values.
    fn multi_pow(scalars: &[Self::Scalar], bases: &[Self::Element]) -> Self::Element {
        scalars
            .iter()
            .zip(bases)
            .fold(Self::identity(), |acc, (s, b)| Self::combine(&acc, &Self::pow(b, s)))
    }

    fn divide(a: &Self::Element, b: &Self::Element) -> Self::Element {
        Self::combine(a, &Self::invert(b))
    }

    fn encode(e: &Self::Element) -> Vec<u8>;

    /// Rejects wrong lengths, non-canonical encodings and non-members.
    fn decode(bytes: &[u8]) -> Option<Self::Element>;

    fn params() -> GroupParams {
        GroupParams {
            name: Self::NAME.to_string(),
            order: Self::order_hex(),
            generator: hex::encode(Self::encode(&Self::generator())),
            element_len: Self::ELEMENT_LEN,
        }
    }
}

/// Public description of a group instantiation, bound into every
/// Fiat–Shamir challenge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupParams {
    pub name: String,
    pub order: String,
    pub generator: String,
    pub element_len: usize,
}

/// `g^m` for a small non-negative integer.
pub fn encode_small<G: Group>(m: u64) -> G::Element {
    G::pow_gen(&G::Scalar::from_u64(m))
}
