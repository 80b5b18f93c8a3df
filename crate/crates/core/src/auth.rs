//! Authentication keys for the signed channel between parties and the
//! board (Ed25519).

use std::fmt;

use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use rand_core::{CryptoRng, RngCore};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::codec::{deserialize_bytes, serialize_bytes};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AuthPublicKey(pub [u8; 32]);

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct AuthSignature(pub [u8; 64]);

/// Ed25519 signing key.
#[derive(Clone)]
pub struct AuthKeypair(SigningKey);

impl AuthKeypair {
    pub fn generate<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        AuthKeypair(SigningKey::from_bytes(&seed))
    }

    pub fn from_seed(seed: [u8; 32]) -> Self {
        AuthKeypair(SigningKey::from_bytes(&seed))
    }

    pub fn seed(&self) -> [u8; 32] {
        self.0.to_bytes()
    }

    pub fn public(&self) -> AuthPublicKey {
        AuthPublicKey(self.0.verifying_key().to_bytes())
    }

    pub fn sign(&self, msg: &[u8]) -> AuthSignature {
        AuthSignature(self.0.sign(msg).to_bytes())
    }
}

impl fmt::Debug for AuthKeypair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AuthKeypair({:?})", self.public())
    }
}

impl AuthPublicKey {
    pub fn verify(&self, msg: &[u8], sig: &AuthSignature) -> bool {
        let Ok(key) = VerifyingKey::from_bytes(&self.0) else {
            return false;
        };
        key.verify(msg, &ed25519_dalek::Signature::from_bytes(&sig.0))
            .is_ok()
    }
}

impl fmt::Debug for AuthPublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AuthPublicKey({})", &hex::encode(self.0)[..12])
    }
}

impl fmt::Debug for AuthSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AuthSignature({})", &hex::encode(self.0)[..12])
    }
}

macro_rules! fixed_bytes_serde {
    ($t:ty, $n:expr) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                serialize_bytes(&self.0, s)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let bytes = deserialize_bytes(d)?;
                let arr: [u8; $n] = bytes
                    .try_into()
                    .map_err(|_| de::Error::custom(concat!("expected ", $n, " bytes")))?;
                Ok(Self(arr))
            }
        }
    };
}

fixed_bytes_serde!(AuthPublicKey, 32);
fixed_bytes_serde!(AuthSignature, 64);

impl Serialize for AuthKeypair {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_bytes(&self.seed(), s)
    }
}

impl<'de> Deserialize<'de> for AuthKeypair {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let bytes = deserialize_bytes(d)?;
        let seed: [u8; 32] = bytes
            .try_into()
            .map_err(|_| de::Error::custom("expected 32-byte seed"))?;
        Ok(Self::from_seed(seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn sign_verify() {
        let kp = AuthKeypair::generate(&mut ChaCha20Rng::seed_from_u64(1));
        let sig = kp.sign(b"hello");
        assert!(kp.public().verify(b"hello", &sig));
        assert!(!kp.public().verify(b"hellp", &sig));
        let other = AuthKeypair::generate(&mut ChaCha20Rng::seed_from_u64(2));
        assert!(!other.public().verify(b"hello", &sig));
    }
}
