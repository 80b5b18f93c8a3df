//! Bounded discrete logarithms base `g`.

use std::collections::HashMap;

use crate::elgamal::CryptoError;
use crate::group::{Group, ScalarField};

/// Largest bound served by a direct table walk; larger bounds use
/// baby-step giant-step.
pub const TABLE_LIMIT: u64 = 1 << 16;

/// Finds `m <= bound` with `g^m = e`.
pub fn dlog_decode<G: Group>(e: &G::Element, bound: u64) -> Result<u64, CryptoError> {
    if let Some(q) = G::small_order() {
        // exponents wrap mod q; never report an ambiguous answer
        if bound >= q {
            return bsgs::<G>(e, q - 1).map_err(|_| CryptoError::DecodeOutOfRange { bound });
        }
    }
    if bound <= TABLE_LIMIT {
        let g = G::generator();
        let mut acc = G::identity();
        for m in 0..=bound {
            if acc == *e {
                return Ok(m);
            }
            acc = G::combine(&acc, &g);
        }
        Err(CryptoError::DecodeOutOfRange { bound })
    } else {
        bsgs::<G>(e, bound)
    }
}

/// Precomputed `g^m -> m` for `m <= bound`, for callers decoding many values.
#[derive(Debug, Clone)]
pub struct DlogTable<G: Group> {
    bound: u64,
    table: HashMap<G::Element, u64>,
}

impl<G: Group> DlogTable<G> {
    pub fn new(bound: u64) -> Self {
        let mut table = HashMap::with_capacity(bound as usize + 1);
        let g = G::generator();
        let mut acc = G::identity();
        for m in 0..=bound {
            table.entry(acc).or_insert(m);
            acc = G::combine(&acc, &g);
        }
        DlogTable { bound, table }
    }

    pub fn lookup(&self, e: &G::Element) -> Result<u64, CryptoError> {
        self.table
            .get(e)
            .copied()
            .ok_or(CryptoError::DecodeOutOfRange { bound: self.bound })
    }
}

fn bsgs<G: Group>(e: &G::Element, bound: u64) -> Result<u64, CryptoError> {
    let n = bound + 1;
    let m = (n as f64).sqrt().ceil() as u64;
    let baby = DlogTable::<G>::new(m - 1);
    let giant = G::invert(&G::pow_gen(&G::Scalar::from_u64(m)));
    let mut gamma = *e;
    for i in 0..=m {
        if let Ok(j) = baby.lookup(&gamma) {
            let x = i * m + j;
            if x <= bound {
                return Ok(x);
            }
        }
        gamma = G::combine(&gamma, &giant);
    }
    Err(CryptoError::DecodeOutOfRange { bound })
}
