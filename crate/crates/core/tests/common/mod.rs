#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use multiballot_core::actors::{individual_verify, participate, roll_mutate, AuditOutcome, VoterSecrets};
use multiballot_core::auth::AuthKeypair;
use multiballot_core::board::{Board, BoardConfig, BoardError, Envelope, WhitelistOp};
use multiballot_core::group::Group;
use multiballot_core::ids::{CollectionId, TallierId, VoterId};
use multiballot_core::tally::{DecryptionPurpose, Talliers};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn cid(s: &str) -> CollectionId {
    CollectionId::new(s)
}

pub fn vid(s: &str) -> VoterId {
    VoterId::new(s)
}

pub fn set(items: &[&str]) -> BTreeSet<CollectionId> {
    items.iter().map(|s| cid(s)).collect()
}

pub struct World<G: Group> {
    pub rng: ChaCha20Rng,
    pub talliers: Talliers<G>,
    pub roll: AuthKeypair,
    pub hc: AuthKeypair,
    pub board: Board<G>,
    pub voters: BTreeMap<VoterId, VoterSecrets<G>>,
}

impl<G: Group> World<G> {
    pub fn new(talliers: usize, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let ids: Vec<_> = (1..=talliers).map(|i| TallierId::new(format!("T{i}"))).collect();
        let talliers = Talliers::new(&ids, &mut rng);
        let roll = AuthKeypair::generate(&mut rng);
        let hc = AuthKeypair::generate(&mut rng);
        let board = Board::with_genesis(BoardConfig {
            group: G::NAME.to_string(),
            talliers: talliers.roster(),
            roll: roll.public(),
            hc: hc.public(),
        })
        .unwrap();
        World {
            rng,
            talliers,
            roll,
            hc,
            board,
            voters: BTreeMap::new(),
        }
    }

    pub fn submit(&mut self, env: &Envelope) -> Result<(), BoardError> {
        self.board.submit(env).map(|_| ())
    }

    pub fn open(&mut self, c: &str) {
        let env = self.talliers.open_collection(&cid(c), c, &mut self.rng).unwrap();
        self.submit(&env).unwrap();
    }

    pub fn close(&mut self, c: &str) {
        let env = self.talliers.close_collection(&cid(c));
        self.submit(&env).unwrap();
    }

    pub fn register(&mut self, v: &str) {
        let s = VoterSecrets::generate(vid(v), &mut self.rng);
        self.submit(&s.register()).unwrap();
        self.voters.insert(vid(v), s);
    }

    pub fn mutate(&mut self, c: &str, op: WhitelistOp, v: &str) -> Result<(), BoardError> {
        let env = roll_mutate::<G>(&self.roll, &cid(c), op, &vid(v));
        self.submit(&env)
    }

    pub fn add(&mut self, c: &str, v: &str) {
        self.mutate(c, WhitelistOp::Add, v).unwrap()
    }

    /// Opens `collections`, registers `voters` and whitelists all of them.
    pub fn populate(&mut self, collections: &[&str], voters: &[&str]) {
        for c in collections {
            self.open(c);
        }
        for v in voters {
            self.register(v);
            for c in collections {
                self.add(c, v);
            }
        }
    }

    pub fn participation(&mut self, v: &str, sign: &[&str]) -> Envelope {
        participate(&self.voters[&vid(v)], self.board.state(), &set(sign), &mut self.rng).unwrap()
    }

    pub fn participate(&mut self, v: &str, sign: &[&str]) -> Result<(), BoardError> {
        let env = self.participation(v, sign);
        self.submit(&env)
    }

    pub fn audit(&self, v: &str) -> AuditOutcome {
        individual_verify(&self.voters[&vid(v)], self.board.state())
    }

    pub fn tally(&mut self, c: &str) -> u64 {
        let state = self.board.state().clone();
        self.talliers.tally(&state, &cid(c), None, &mut self.rng).unwrap().count
    }

    /// Joint decryption of the last tallier ciphertext of a chain.
    pub fn last_plaintext(&mut self, v: &str, c: &str) -> u64 {
        let state = self.board.state().clone();
        let ct = state.chain(&vid(v), &cid(c)).unwrap().last().pair.tallier;
        self.talliers
            .decrypt(&state, &cid(c), &ct, 1, DecryptionPurpose::Tally, &mut self.rng)
            .unwrap()
            .0
    }
}
