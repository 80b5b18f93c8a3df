//! Exponential ElGamal: `Enc(pk, m, r) = (g^r, g^m · pk^r)`.
//!
//! Plaintexts are small non-negative integers recovered by a bounded
//! discrete-log search, which makes the scheme additively homomorphic.

use num_traits::Zero;
use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use crate::dlog::dlog_decode;
use crate::group::{encode_small, Group, ScalarField};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CryptoError {
    #[error("plaintext {0} is outside the encodable range")]
    PlaintextOutOfRange(u64),
    #[error("decrypted value is not g^m for any m <= {bound}")]
    DecodeOutOfRange { bound: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PublicKey<G: Group>(pub G::Element);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SecretKey<G: Group>(pub G::Scalar);

/// `(a, b) = (g^r, g^m · pk^r)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Ciphertext<G: Group> {
    pub a: G::Element,
    pub b: G::Element,
}

/// Fresh key pair with the secret uniform in `[1, q)`.
pub fn keygen<G: Group, R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> (SecretKey<G>, PublicKey<G>) {
    let sk = SecretKey(G::Scalar::random_nonzero(rng));
    let pk = sk.public_key();
    (sk, pk)
}

impl<G: Group> SecretKey<G> {
    pub fn public_key(&self) -> PublicKey<G> {
        PublicKey(G::pow_gen(&self.0))
    }

    /// `g^m = b / a^sk`, without the discrete-log step.
    pub fn decrypt_to_element(&self, c: &Ciphertext<G>) -> G::Element {
        G::divide(&c.b, &G::pow(&c.a, &self.0))
    }

    pub fn decrypt(&self, c: &Ciphertext<G>, bound: u64) -> Result<u64, CryptoError> {
        dlog_decode::<G>(&self.decrypt_to_element(c), bound)
    }
}

impl<G: Group> PublicKey<G> {
    pub fn encrypt(&self, m: u64, r: &G::Scalar) -> Result<Ciphertext<G>, CryptoError> {
        if let Some(q) = G::small_order() {
            if m >= q {
                return Err(CryptoError::PlaintextOutOfRange(m));
            }
        }
        Ok(Ciphertext {
            a: G::pow_gen(r),
            b: G::combine(&encode_small::<G>(m), &G::pow(&self.0, r)),
        })
    }

    /// `(a · g^r', b · pk^r')`.
    pub fn rerand(&self, c: &Ciphertext<G>, r: &G::Scalar) -> Ciphertext<G> {
        if r.is_zero() {
            return *c;
        }
        Ciphertext {
            a: G::combine(&c.a, &G::pow_gen(r)),
            b: G::combine(&c.b, &G::pow(&self.0, r)),
        }
    }
}

impl<G: Group> Ciphertext<G> {
    /// `(1, 1)`: the encryption of 0 with zero randomness under any key.
    pub fn trivial_zero() -> Self {
        Ciphertext {
            a: G::identity(),
            b: G::identity(),
        }
    }

    /// Homomorphic addition (componentwise product).
    pub fn add(&self, other: &Self) -> Self {
        Ciphertext {
            a: G::combine(&self.a, &other.a),
            b: G::combine(&self.b, &other.b),
        }
    }

    /// Homomorphic subtraction (componentwise quotient).
    pub fn sub(&self, other: &Self) -> Self {
        Ciphertext {
            a: G::divide(&self.a, &other.a),
            b: G::divide(&self.b, &other.b),
        }
    }

    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Self>) -> Self
    where
        G: 'a,
    {
        items
            .into_iter()
            .fold(Self::trivial_zero(), |acc, c| acc.add(c))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = G::encode(&self.a);
        out.extend(G::encode(&self.b));
        out
    }
}
