//! Passphrase-encrypted container for secrets at rest
//! (PBKDF2-HMAC-SHA256 key, ChaCha20-Poly1305).

use chacha20poly1305::aead::Aead;
use chacha20poly1305::{ChaCha20Poly1305, Key, KeyInit, Nonce};
use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::codec::hex_bytes;

const VERSION: u16 = 1;
const DEFAULT_ROUNDS: u32 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SealError {
    #[error("unsupported container version {0}")]
    Version(u16),
    #[error("wrong passphrase or corrupted container")]
    Decrypt,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SealedBox {
    pub version: u16,
    pub rounds: u32,
    #[serde(with = "hex_bytes")]
    pub salt: Vec<u8>,
    #[serde(with = "hex_bytes")]
    pub nonce: Vec<u8>,
    #[serde(with = "hex_bytes")]
    pub ciphertext: Vec<u8>,
}

fn derive(passphrase: &str, salt: &[u8], rounds: u32) -> ChaCha20Poly1305 {
    let mut key = [0u8; 32];
    pbkdf2::pbkdf2_hmac::<Sha256>(passphrase.as_bytes(), salt, rounds, &mut key);
    ChaCha20Poly1305::new(Key::from_slice(&key))
}

impl SealedBox {
    pub fn seal<R: RngCore + CryptoRng + ?Sized>(plaintext: &[u8], passphrase: &str, rng: &mut R) -> Self {
        Self::seal_with_rounds(plaintext, passphrase, DEFAULT_ROUNDS, rng)
    }

    pub fn seal_with_rounds<R: RngCore + CryptoRng + ?Sized>(
        plaintext: &[u8],
        passphrase: &str,
        rounds: u32,
        rng: &mut R,
    ) -> Self {
        let mut salt = vec![0u8; 16];
        let mut nonce = vec![0u8; 12];
        rng.fill_bytes(&mut salt);
        rng.fill_bytes(&mut nonce);
        let ciphertext = derive(passphrase, &salt, rounds)
            .encrypt(Nonce::from_slice(&nonce), plaintext)
            .expect("in-memory encryption cannot fail");
        SealedBox {
            version: VERSION,
            rounds,
            salt,
            nonce,
            ciphertext,
        }
    }

    pub fn open(&self, passphrase: &str) -> Result<Vec<u8>, SealError> {
        if self.version != VERSION {
            return Err(SealError::Version(self.version));
        }
        if self.nonce.len() != 12 {
            return Err(SealError::Decrypt);
        }
        derive(passphrase, &self.salt, self.rounds)
            .decrypt(Nonce::from_slice(&self.nonce), self.ciphertext.as_slice())
            .map_err(|_| SealError::Decrypt)
    }
}
