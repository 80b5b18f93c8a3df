//! `multiballot`: scenario runner plus one subcommand per protocol party.
//!
//! Results go to stdout as JSON. Failures go to stderr as
//! `{"error": {"code", "message"}}` with exit status 2; a negative outcome
//! (rejected submission, failed verification, failed scenario) exits 1.

use std::collections::BTreeSet;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use multiballot_core::actors::{
    hc_submit, individual_verify, participate, roll_mutate, verify_log, SealedBox, VoterSecrets,
};
use multiballot_core::auth::AuthKeypair;
use multiballot_core::board::{BoardConfig, BoardEvent, Message, WhitelistOp};
use multiballot_core::group::{Group, Ristretto255, TestGroup};
use multiballot_core::ids::{CollectionId, TallierId, VoterId};
use multiballot_core::tally::{HcEvidence, Talliers};
use multiballot_scenario::generate::{detection_scenario, random_scenario, GenParams};
use multiballot_scenario::{execute, genesis_for, run, GroupChoice, Scenario};
use multiballot_service::{BoardApi, BoardService, HttpClient, ServiceConfig, SubmitResponse};
use rand::rngs::OsRng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

const STALE_RETRIES: usize = 8;

#[derive(Parser)]
#[command(name = "multiballot", version, about = "Verifiable e-collecting: board, parties and scenario runner")]
struct Cli {
    /// Passphrase for sealed key files.
    #[arg(long, global = true, env = "MULTIBALLOT_PASSPHRASE", hide_env_values = true)]
    passphrase: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file and print its verdict.
    Run {
        scenario: PathBuf,
        /// Run against a remote board started from `genesis --scenario`.
        #[arg(long)]
        board: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a random scenario as TOML.
    Generate {
        #[arg(long)]
        seed: u64,
        /// Small scenario with one adversary (or `honest`).
        #[arg(long)]
        adversary: Option<String>,
        #[arg(long, default_value_t = 50)]
        max_voters: usize,
        #[arg(long, default_value_t = 8)]
        max_collections: usize,
    },
    /// Print a board configuration.
    Genesis(GenesisArgs),
    /// Create a sealed authentication key (roll or hybrid channel).
    Keygen {
        #[arg(long)]
        out: PathBuf,
    },
    #[command(subcommand)]
    Board(BoardCmd),
    #[command(subcommand)]
    Voter(VoterCmd),
    #[command(subcommand)]
    Roll(RollCmd),
    #[command(subcommand)]
    Tallier(TallierCmd),
    #[command(subcommand)]
    Hc(HcCmd),
}

#[derive(Args)]
struct GenesisArgs {
    /// Configuration a scenario run expects.
    #[arg(long, conflicts_with_all = ["talliers", "roll", "hc"])]
    scenario: Option<PathBuf>,
    #[arg(long, requires_all = ["roll", "hc"])]
    talliers: Option<PathBuf>,
    #[arg(long)]
    roll: Option<PathBuf>,
    #[arg(long)]
    hc: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BoardCmd {
    /// Serve the board over HTTP (config file, then MULTIBALLOT_* variables).
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Replay a log and check every proof, signature and hash link.
    Verify {
        /// An events.jsonl file or the data directory holding it.
        #[arg(long, conflicts_with = "board", required_unless_present = "board")]
        log: Option<PathBuf>,
        #[arg(long)]
        board: Option<String>,
    },
}

#[derive(Subcommand)]
enum VoterCmd {
    /// Generate keys, seal them and register on the board.
    Register {
        #[arg(long)]
        id: String,
        #[arg(long)]
        secrets: PathBuf,
        #[arg(long)]
        board: String,
    },
    /// Post one update covering every open eligible collection.
    Participate {
        #[arg(long)]
        secrets: PathBuf,
        #[arg(long)]
        board: String,
        /// Collections to sign; all others are carried over.
        #[arg(long)]
        sign: Vec<String>,
    },
    /// Decrypt own chains and report what the board holds.
    Audit {
        #[arg(long)]
        secrets: PathBuf,
        #[arg(long)]
        board: String,
    },
    /// Replace the audit key.
    Rotate {
        #[arg(long)]
        secrets: PathBuf,
        #[arg(long)]
        board: String,
        #[arg(long)]
        lose_old: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    Add,
    Remove,
}

#[derive(Subcommand)]
enum RollCmd {
    Mutate {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        board: String,
        #[arg(long)]
        collection: String,
        #[arg(long, value_enum)]
        op: Op,
        #[arg(long)]
        voter: String,
    },
}

#[derive(Subcommand)]
enum TallierCmd {
    /// Create the sealed tallier set.
    Init {
        #[arg(long, default_value_t = 2)]
        count: usize,
        #[arg(long, value_enum, default_value = "ristretto255")]
        group: GroupArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run key generation for a collection and open it.
    Open {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        board: String,
        #[arg(long)]
        collection: String,
        #[arg(long, default_value = "")]
        title: String,
    },
    Close {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        board: String,
        #[arg(long)]
        collection: String,
    },
    /// Decrypt and publish the current count.
    Tally {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        board: String,
        #[arg(long)]
        collection: String,
        /// Restrict to these voters.
        #[arg(long)]
        voter: Vec<String>,
    },
    /// Check hybrid-channel postings against collected evidence.
    HcAudit {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        board: String,
        #[arg(long)]
        evidence: PathBuf,
    },
}

#[derive(Subcommand)]
enum HcCmd {
    /// Post on a voter's behalf from a paper signature; evidence is
    /// appended to the evidence file.
    Submit {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        board: String,
        #[arg(long)]
        voter: String,
        #[arg(long)]
        sign: Vec<String>,
        #[arg(long)]
        paper: String,
        #[arg(long)]
        evidence: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupArg {
    #[value(name = "ristretto255")]
    Ristretto255,
    #[value(name = "schnorr-test")]
    SchnorrTest,
}

#[derive(Debug)]
struct Failure {
    code: &'static str,
    message: String,
}

fn fail(code: &'static str, message: impl ToString) -> Failure {
    Failure {
        code,
        message: message.to_string(),
    }
}

type Res<T = Outcome> = Result<T, Failure>;

/// JSON for stdout plus whether the command succeeded.
struct Outcome {
    value: Value,
    ok: bool,
}

impl Outcome {
    fn ok(value: Value) -> Self {
        Outcome { value, ok: true }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("outputs serialize")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.value).expect("json"));
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            eprintln!("{}", json!({"error": {"code": f.code, "message": f.message}}));
            ExitCode::from(2)
        }
    }
}

macro_rules! by_group {
    ($name:expr, $f:ident ( $($arg:expr),* )) => {
        match $name {
            n if n == Ristretto255::NAME => $f::<Ristretto255>($($arg),*),
            n if n == TestGroup::NAME => $f::<TestGroup>($($arg),*),
            other => Err(fail("UNKNOWN_GROUP", format!("unsupported group {other}"))),
        }
    };
}

fn dispatch(cli: &Cli) -> Res {
    let pass = || cli.passphrase.as_deref().ok_or_else(|| fail("NO_PASSPHRASE", "set MULTIBALLOT_PASSPHRASE"));
    match &cli.cmd {
        Cmd::Run { scenario, board, out } => run_cmd(scenario, board.as_deref(), out.as_deref()),
        Cmd::Generate {
            seed,
            adversary,
            max_voters,
            max_collections,
        } => {
            let s = match adversary.as_deref() {
                Some("honest") => detection_scenario(*seed, None),
                Some(a) => {
                    if !multiballot_scenario::Adversary::ALL_LABELS.contains(&a) {
                        return Err(fail("UNKNOWN_ADVERSARY", a));
                    }
                    detection_scenario(*seed, Some(a))
                }
                None => random_scenario(
                    *seed,
                    &GenParams {
                        max_voters: *max_voters,
                        max_collections: *max_collections,
                        ..GenParams::default()
                    },
                ),
            };
            Ok(Outcome::ok(json!({ "scenario": s.to_toml() })))
        }
        Cmd::Genesis(g) => genesis_cmd(g, cli.passphrase.as_deref()),
        Cmd::Keygen { out } => {
            let key = AuthKeypair::generate(&mut OsRng);
            write_sealed(out, &Sealed::plain(&key), pass()?, false)?;
            Ok(Outcome::ok(json!({ "public": hex::encode(key.public().0) })))
        }
        Cmd::Board(BoardCmd::Serve { config }) => serve_cmd(config.as_deref()),
        Cmd::Board(BoardCmd::Verify { log, board }) => verify_cmd(log.as_deref(), board.as_deref()),
        Cmd::Voter(v) => {
            let board = match v {
                VoterCmd::Register { board, .. }
                | VoterCmd::Participate { board, .. }
                | VoterCmd::Audit { board, .. }
                | VoterCmd::Rotate { board, .. } => board,
            };
            let client = HttpClient::new(board.as_str());
            let group = remote_group(&client)?;
            by_group!(group.as_str(), voter_cmd(v, &client, pass()?))
        }
        Cmd::Roll(RollCmd::Mutate {
            key,
            board,
            collection,
            op,
            voter,
        }) => {
            let client = HttpClient::new(board.as_str());
            let group = remote_group(&client)?;
            let key: AuthKeypair = read_sealed(key, pass()?)?.decode()?;
            let op = match op {
                Op::Add => WhitelistOp::Add,
                Op::Remove => WhitelistOp::Remove,
            };
            let (c, v) = (CollectionId::new(collection), VoterId::new(voter));
            by_group!(group.as_str(), roll_cmd(&client, &key, &c, op, &v))
        }
        Cmd::Tallier(TallierCmd::Init { count, group, out }) => {
            let ids: Vec<_> = (1..=*count).map(|i| TallierId::new(format!("T{i}"))).collect();
            match group {
                GroupArg::Ristretto255 => init_talliers::<Ristretto255>(&ids, out, pass()?),
                GroupArg::SchnorrTest => init_talliers::<TestGroup>(&ids, out, pass()?),
            }
        }
        Cmd::Tallier(t) => {
            let (state, board) = match t {
                TallierCmd::Open { state, board, .. }
                | TallierCmd::Close { state, board, .. }
                | TallierCmd::Tally { state, board, .. }
                | TallierCmd::HcAudit { state, board, .. } => (state, board),
                TallierCmd::Init { .. } => unreachable!(),
            };
            let client = HttpClient::new(board.as_str());
            let group = remote_group(&client)?;
            let sealed = read_sealed(state, pass()?)?;
            if sealed.group.as_deref() != Some(group.as_str()) {
                return Err(fail("GROUP_MISMATCH", format!("board runs {group}, tallier state is for {:?}", sealed.group)));
            }
            by_group!(group.as_str(), tallier_cmd(t, &client, sealed, state, pass()?))
        }
        Cmd::Hc(HcCmd::Submit {
            key,
            board,
            voter,
            sign,
            paper,
            evidence,
        }) => {
            let client = HttpClient::new(board.as_str());
            let group = remote_group(&client)?;
            let key: AuthKeypair = read_sealed(key, pass()?)?.decode()?;
            let voter = VoterId::new(voter);
            by_group!(group.as_str(), hc_cmd(&client, &key, &voter, &collections(sign), paper, evidence))
        }
    }
}

fn collections(names: &[String]) -> BTreeSet<CollectionId> {
    names.iter().map(CollectionId::new).collect()
}

fn read_file(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| fail("IO", format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Res<()> {
    fs::write(path, text).map_err(|e| fail("IO", format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Res<Scenario> {
    Scenario::from_toml(&read_file(path)?).map_err(|e| fail("INVALID_SCENARIO", e))
}

/// Plaintext of a sealed key file: the value plus the group it belongs to.
#[derive(Serialize, Deserialize)]
struct Sealed {
    group: Option<String>,
    value: Value,
}

impl Sealed {
    fn plain<T: Serialize>(v: &T) -> Self {
        Sealed {
            group: None,
            value: to_value(v),
        }
    }

    fn grouped<G: Group, T: Serialize>(v: &T) -> Self {
        Sealed {
            group: Some(G::NAME.into()),
            value: to_value(v),
        }
    }

    fn decode<T: DeserializeOwned>(self) -> Res<T> {
        serde_json::from_value(self.value).map_err(|e| fail("CORRUPT_KEY_FILE", e))
    }
}

fn write_sealed(path: &Path, content: &Sealed, passphrase: &str, overwrite: bool) -> Res<()> {
    if !overwrite && path.exists() {
        return Err(fail("FILE_EXISTS", format!("{} already exists", path.display())));
    }
    let plain = serde_json::to_vec(content).expect("json");
    let sealed = SealedBox::seal(&plain, passphrase, &mut OsRng);
    write_file(path, &serde_json::to_string_pretty(&sealed).expect("json"))
}

fn read_sealed(path: &Path, passphrase: &str) -> Res<Sealed> {
    let sealed: SealedBox =
        serde_json::from_str(&read_file(path)?).map_err(|e| fail("CORRUPT_KEY_FILE", e))?;
    let plain = sealed.open(passphrase).map_err(|e| fail("SEALED_BOX", e))?;
    serde_json::from_slice(&plain).map_err(|e| fail("CORRUPT_KEY_FILE", e))
}

fn client_err(e: impl ToString) -> Failure {
    fail("BOARD_UNAVAILABLE", e)
}

fn remote_group(client: &HttpClient) -> Res<String> {
    let h = BoardApi::<Ristretto255>::health(client).map_err(client_err)?;
    Ok(h.group)
}

fn submitted(r: SubmitResponse) -> Outcome {
    let ok = r.is_accepted();
    Outcome {
        value: json!({ "submission": r }),
        ok,
    }
}

fn run_cmd(path: &Path, board: Option<&str>, out: Option<&Path>) -> Res {
    let s = load_scenario(path)?;
    let verdict = match board {
        None => run(&s).map_err(|e| fail("RUN_FAILED", e))?,
        Some(url) => {
            let client = HttpClient::new(url);
            let r = match s.group {
                GroupChoice::Ristretto255 => execute::<Ristretto255>(&s, &client).map(|r| r.verdict),
                GroupChoice::SchnorrTest => execute::<TestGroup>(&s, &client).map(|r| r.verdict),
            };
            r.map_err(|e| fail("RUN_FAILED", e))?
        }
    };
    if let Some(out) = out {
        write_file(out, &verdict.to_json())?;
    }
    Ok(Outcome {
        ok: verdict.ok,
        value: to_value(&verdict),
    })
}

fn genesis_cmd(g: &GenesisArgs, passphrase: Option<&str>) -> Res {
    if let Some(path) = &g.scenario {
        return Ok(Outcome::ok(to_value(&genesis_for(&load_scenario(path)?))));
    }
    let (Some(t), Some(roll), Some(hc)) = (&g.talliers, &g.roll, &g.hc) else {
        return Err(fail("USAGE", "give --scenario or all of --talliers, --roll, --hc"));
    };
    let passphrase = passphrase.ok_or_else(|| fail("NO_PASSPHRASE", "set MULTIBALLOT_PASSPHRASE"))?;
    let sealed = read_sealed(t, passphrase)?;
    let group = sealed.group.clone().ok_or_else(|| fail("CORRUPT_KEY_FILE", "tallier state has no group"))?;
    fn roster<G: Group>(s: Sealed) -> Res<Vec<(TallierId, multiballot_core::auth::AuthPublicKey)>> {
        Ok(s.decode::<Talliers<G>>()?.roster())
    }
    let talliers = by_group!(group.as_str(), roster(sealed))?;
    let roll: AuthKeypair = read_sealed(roll, passphrase)?.decode()?;
    let hc: AuthKeypair = read_sealed(hc, passphrase)?.decode()?;
    Ok(Outcome::ok(to_value(&BoardConfig {
        group,
        talliers,
        roll: roll.public(),
        hc: hc.public(),
    })))
}

fn serve_cmd(config: Option<&Path>) -> Res {
    let cfg = ServiceConfig::load(config).map_err(|e| fail("CONFIG", e))?;
    let genesis = cfg.load_genesis().map_err(|e| fail("CONFIG", e))?;
    let addr: SocketAddr = format!("{}:{}", cfg.bind, cfg.port)
        .parse()
        .map_err(|e| fail("CONFIG", format!("bind address: {e}")))?;
    fs::create_dir_all(&cfg.data_dir).map_err(|e| fail("IO", e))?;
    fn go<G: Group>(cfg: &ServiceConfig, genesis: Option<BoardConfig>, addr: SocketAddr) -> Res {
        let svc = Arc::new(BoardService::<G>::open(&cfg.data_dir, genesis).map_err(|e| fail("BOARD_OPEN", e))?);
        let rt = tokio::runtime::Runtime::new().map_err(|e| fail("IO", e))?;
        rt.block_on(async {
            let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| fail("BIND", e))?;
            let local = listener.local_addr().map_err(|e| fail("BIND", e))?;
            println!("{}", json!({ "listening": local.to_string(), "group": G::NAME }));
            multiballot_service::http::serve_on(svc, listener).await.map_err(|e| fail("IO", e))
        })?;
        Ok(Outcome::ok(json!({ "stopped": true })))
    }
    by_group!(cfg.group.as_str(), go(&cfg, genesis, addr))
}

fn log_group(events: &[BoardEvent]) -> Res<String> {
    let first = events.first().ok_or_else(|| fail("EMPTY_LOG", "log has no events"))?;
    match first.envelope.decode::<Ristretto255>() {
        Ok(Message::Genesis(cfg)) => Ok(cfg.group),
        _ => Err(fail("NO_GENESIS", "first event is not a genesis configuration")),
    }
}

fn verify_cmd(log: Option<&Path>, board: Option<&str>) -> Res {
    let events = match (log, board) {
        (Some(path), _) => {
            let file = if path.is_dir() { path.join(multiballot_service::store::LOG_FILE) } else { path.to_path_buf() };
            let text = read_file(&file)?;
            let mut events = vec![];
            for (i, line) in text.lines().enumerate() {
                let ev: BoardEvent = serde_json::from_str(line)
                    .map_err(|e| fail("CORRUPT_LOG", format!("line {}: {e}", i + 1)))?;
                events.push(ev);
            }
            events
        }
        (None, Some(url)) => {
            let client = HttpClient::new(url);
            let mut events = vec![];
            loop {
                let page = BoardApi::<Ristretto255>::events(&client, events.len() as u64, Duration::ZERO)
                    .map_err(client_err)?;
                if page.events.is_empty() {
                    break;
                }
                events.extend(page.events);
            }
            events
        }
        (None, None) => return Err(fail("USAGE", "give --log or --board")),
    };
    let group = log_group(&events)?;
    fn go<G: Group>(events: &[BoardEvent]) -> Res {
        let report = verify_log::<G>(events);
        Ok(Outcome {
            ok: report.ok(),
            value: to_value(&report),
        })
    }
    by_group!(group.as_str(), go(&events))
}

fn voter_cmd<G: Group>(cmd: &VoterCmd, client: &HttpClient, passphrase: &str) -> Res {
    let api: &dyn BoardApi<G> = client;
    match cmd {
        VoterCmd::Register { id, secrets, .. } => {
            if secrets.exists() {
                return Err(fail("FILE_EXISTS", format!("{} already exists", secrets.display())));
            }
            let s = VoterSecrets::<G>::generate(VoterId::new(id), &mut OsRng);
            let r = api.submit(&s.register()).map_err(client_err)?;
            if r.is_accepted() {
                write_sealed(secrets, &Sealed::grouped::<G, _>(&s), passphrase, false)?;
            }
            Ok(submitted(r))
        }
        VoterCmd::Participate { secrets, sign, .. } => {
            let s: VoterSecrets<G> = load_secrets::<G>(secrets, passphrase)?;
            let choices = collections(sign);
            for _ in 0..STALE_RETRIES {
                let snap = api.snapshot().map_err(client_err)?;
                let env = participate(&s, &snap.state, &choices, &mut OsRng).map_err(|e| fail(e.code(), e))?;
                let r = api.submit(&env).map_err(client_err)?;
                if r.code() != Some("STALE_SNAPSHOT") {
                    return Ok(submitted(r));
                }
            }
            Err(fail("STALE_SNAPSHOT", "board kept moving; retry later"))
        }
        VoterCmd::Audit { secrets, .. } => {
            let s: VoterSecrets<G> = load_secrets::<G>(secrets, passphrase)?;
            let snap = api.snapshot().map_err(client_err)?;
            let outcome = individual_verify(&s, &snap.state);
            Ok(Outcome {
                ok: !outcome.alarm(),
                value: to_value(&outcome),
            })
        }
        VoterCmd::Rotate { secrets, lose_old, .. } => {
            let mut s: VoterSecrets<G> = load_secrets::<G>(secrets, passphrase)?;
            let env = s.rotate(*lose_old, &mut OsRng);
            let r = api.submit(&env).map_err(client_err)?;
            if r.is_accepted() {
                write_sealed(secrets, &Sealed::grouped::<G, _>(&s), passphrase, true)?;
            }
            Ok(submitted(r))
        }
    }
}

fn load_secrets<G: Group>(path: &Path, passphrase: &str) -> Res<VoterSecrets<G>> {
    let sealed = read_sealed(path, passphrase)?;
    if sealed.group.as_deref() != Some(G::NAME) {
        return Err(fail("GROUP_MISMATCH", format!("secrets are for {:?}, board runs {}", sealed.group, G::NAME)));
    }
    sealed.decode()
}

fn roll_cmd<G: Group>(client: &HttpClient, key: &AuthKeypair, c: &CollectionId, op: WhitelistOp, v: &VoterId) -> Res {
    let r = BoardApi::<G>::submit(client, &roll_mutate::<G>(key, c, op, v)).map_err(client_err)?;
    Ok(submitted(r))
}

fn init_talliers<G: Group>(ids: &[TallierId], out: &Path, passphrase: &str) -> Res {
    let t = Talliers::<G>::new(ids, &mut OsRng);
    write_sealed(out, &Sealed::grouped::<G, _>(&t), passphrase, false)?;
    Ok(Outcome::ok(json!({ "group": G::NAME, "roster": t.roster() })))
}

fn tallier_cmd<G: Group>(cmd: &TallierCmd, client: &HttpClient, sealed: Sealed, path: &Path, passphrase: &str) -> Res {
    let api: &dyn BoardApi<G> = client;
    let mut t: Talliers<G> = sealed.decode()?;
    // Decryption records are an in-memory audit trail only.
    t.decryptions.clear();
    match cmd {
        TallierCmd::Open { collection, title, .. } => {
            let c = CollectionId::new(collection);
            let title = if title.is_empty() { collection.as_str() } else { title.as_str() };
            let env = t.open_collection(&c, title, &mut OsRng).map_err(|e| fail(e.code(), e))?;
            let r = api.submit(&env).map_err(client_err)?;
            if r.is_accepted() {
                write_sealed(path, &Sealed::grouped::<G, _>(&t), passphrase, true)?;
            }
            Ok(submitted(r))
        }
        TallierCmd::Close { collection, .. } => {
            let r = api.submit(&t.close_collection(&CollectionId::new(collection))).map_err(client_err)?;
            Ok(submitted(r))
        }
        TallierCmd::Tally { collection, voter, .. } => {
            let c = CollectionId::new(collection);
            let subset: Vec<VoterId> = voter.iter().map(VoterId::new).collect();
            for _ in 0..STALE_RETRIES {
                let snap = api.snapshot().map_err(client_err)?;
                let result = t
                    .tally(&snap.state, &c, (!subset.is_empty()).then_some(subset.as_slice()), &mut OsRng)
                    .map_err(|e| fail(e.code(), e))?;
                let r = api.submit(&t.publish(&result)).map_err(client_err)?;
                if r.code() == Some("STALE_SNAPSHOT") {
                    continue;
                }
                let ok = r.is_accepted();
                return Ok(Outcome {
                    ok,
                    value: json!({
                        "collection": c,
                        "count": result.count,
                        "voters": result.voters.len(),
                        "epoch": result.epoch,
                        "subset": result.subset,
                        "submission": r,
                    }),
                });
            }
            Err(fail("STALE_SNAPSHOT", "board kept moving; retry later"))
        }
        TallierCmd::HcAudit { evidence, .. } => {
            let ev: Vec<HcEvidence> = read_evidence(evidence)?;
            let snap = api.snapshot().map_err(client_err)?;
            let report = t.hc_audit(&snap.state, &ev, &mut OsRng);
            Ok(Outcome {
                ok: report.passed(),
                value: to_value(&report),
            })
        }
        TallierCmd::Init { .. } => unreachable!(),
    }
}

fn read_evidence(path: &Path) -> Res<Vec<HcEvidence>> {
    if !path.exists() {
        return Ok(vec![]);
    }
    serde_json::from_str(&read_file(path)?).map_err(|e| fail("CORRUPT_EVIDENCE", e))
}

fn hc_cmd<G: Group>(
    client: &HttpClient,
    key: &AuthKeypair,
    voter: &VoterId,
    choices: &BTreeSet<CollectionId>,
    paper: &str,
    evidence: &Path,
) -> Res {
    let api: &dyn BoardApi<G> = client;
    for _ in 0..STALE_RETRIES {
        let snap = api.snapshot().map_err(client_err)?;
        let (env, ev) = hc_submit(key, &snap.state, voter, choices, paper.as_bytes(), &mut OsRng)
            .map_err(|e| fail(e.code(), e))?;
        let r = api.submit(&env).map_err(client_err)?;
        if r.code() == Some("STALE_SNAPSHOT") {
            continue;
        }
        if r.is_accepted() {
            let mut all = read_evidence(evidence)?;
            all.extend(ev);
            write_file(evidence, &serde_json::to_string_pretty(&all).expect("json"))?;
        }
        return Ok(submitted(r));
    }
    Err(fail("STALE_SNAPSHOT", "board kept moving; retry later"))
}
