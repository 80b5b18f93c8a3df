#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use multiballot_core::actors::{participate, roll_mutate, VoterSecrets};
use multiballot_core::auth::AuthKeypair;
use multiballot_core::board::{BoardConfig, BoardState, Envelope, WhitelistOp};
use multiballot_core::ids::{CollectionId, TallierId, VoterId};
use multiballot_core::{Ristretto255, Talliers};
use multiballot_service::{BoardApi, BoardService, SubmitResponse};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type G = Ristretto255;

pub fn cid(s: &str) -> CollectionId {
    CollectionId::new(s)
}

pub fn vid(s: &str) -> VoterId {
    VoterId::new(s)
}

pub fn set(items: &[&str]) -> BTreeSet<CollectionId> {
    items.iter().map(|s| cid(s)).collect()
}

/// Actor secrets that drive a board from the outside.
pub struct Actors {
    pub rng: ChaCha20Rng,
    pub talliers: Talliers,
    pub roll: AuthKeypair,
    pub hc: AuthKeypair,
    pub voters: BTreeMap<VoterId, VoterSecrets<G>>,
}

impl Actors {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let talliers = Talliers::new(&[TallierId::new("T1"), TallierId::new("T2")], &mut rng);
        let roll = AuthKeypair::generate(&mut rng);
        let hc = AuthKeypair::generate(&mut rng);
        Actors {
            rng,
            talliers,
            roll,
            hc,
            voters: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> BoardConfig {
        BoardConfig {
            group: "ristretto255".into(),
            talliers: self.talliers.roster(),
            roll: self.roll.public(),
            hc: self.hc.public(),
        }
    }

    pub fn service(&self, dir: &Path) -> BoardService<G> {
        BoardService::open(dir, Some(self.config())).unwrap()
    }

    pub fn open(&mut self, c: &str) -> Envelope {
        self.talliers.open_collection(&cid(c), c, &mut self.rng).unwrap()
    }

    pub fn register(&mut self, v: &str) -> Envelope {
        let s = VoterSecrets::generate(vid(v), &mut self.rng);
        let env = s.register();
        self.voters.insert(vid(v), s);
        env
    }

    pub fn add(&self, c: &str, v: &str) -> Envelope {
        roll_mutate::<G>(&self.roll, &cid(c), WhitelistOp::Add, &vid(v))
    }

    pub fn participation(&mut self, state: &BoardState<G>, v: &str, sign: &[&str]) -> Envelope {
        participate(&self.voters[&vid(v)], state, &set(sign), &mut self.rng).unwrap()
    }

    /// Opens the collections, registers and whitelists the voters.
    pub fn populate(&mut self, api: &dyn BoardApi<G>, collections: &[&str], voters: &[&str]) {
        for c in collections {
            accept(api, &self.open(c));
        }
        for v in voters {
            accept(api, &self.register(v));
            for c in collections {
                accept(api, &self.add(c, v));
            }
        }
    }

    pub fn participate(&mut self, api: &dyn BoardApi<G>, v: &str, sign: &[&str]) -> SubmitResponse {
        let snap = api.snapshot().unwrap();
        let env = self.participation(&snap.state, v, sign);
        api.submit(&env).unwrap()
    }
}

pub fn accept(api: &dyn BoardApi<G>, env: &Envelope) -> u64 {
    match api.submit(env).unwrap() {
        SubmitResponse::Accepted { index, .. } => index,
        r => panic!("rejected: {r:?}"),
    }
}
