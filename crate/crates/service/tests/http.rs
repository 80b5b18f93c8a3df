mod common;

use std::collections::HashSet;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use common::*;
use multiballot_core::actors::individual_verify;
use multiballot_core::board::{Envelope, MessageKind};
use multiballot_service::http::spawn;
use multiballot_service::{BoardApi, ClientError, HttpClient, SubmitResponse};

fn local() -> SocketAddr {
    "127.0.0.1:0".parse().unwrap()
}

#[test]
fn end_to_end_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = Actors::new(20);
    let svc = Arc::new(a.service(dir.path()));
    let server = spawn(svc.clone(), local()).unwrap();
    let api = HttpClient::new(server.base_url());

    let h = BoardApi::<G>::health(&api).unwrap();
    assert_eq!((h.status.as_str(), h.group.as_str(), h.height), ("ok", "ristretto255", 1));

    a.populate(&api, &["C1", "C2"], &["alice", "bob"]);
    assert!(a.participate(&api, "alice", &["C2"]).is_accepted());
    let snap = BoardApi::<G>::snapshot(&api).unwrap();
    assert_eq!(snap, svc.snapshot());
    let audit = individual_verify(&a.voters[&vid("alice")], &snap.state);
    assert_eq!(audit.signed(), set(&["C2"]));

    let doc = BoardApi::<G>::chain(&api, &cid("C2"), &vid("alice")).unwrap();
    assert_eq!(doc.chain.entries.len(), 2);
    match BoardApi::<G>::chain(&api, &cid("C7"), &vid("alice")) {
        Err(ClientError::Read(e)) => assert_eq!(e.code, "UNKNOWN_COLLECTION"),
        r => panic!("{r:?}"),
    }

    // Stale update over the wire.
    let late = a.participation(&snap.state, "bob", &["C1"]);
    a.participate(&api, "alice", &[]);
    let r = BoardApi::<G>::submit(&api, &late).unwrap();
    assert_eq!(r.code(), Some("STALE_SNAPSHOT"));
    assert!(a.participate(&api, "bob", &["C1"]).is_accepted());

    // Body that is not an envelope at all.
    let raw = reqwest::blocking::Client::new()
        .post(format!("{}/submit", server.base_url()))
        .body("{\"version\":1}")
        .send()
        .unwrap();
    assert_eq!(raw.status().as_u16(), 422);
    let r: SubmitResponse = raw.json().unwrap();
    assert_eq!(r.code(), Some("MALFORMED"));
}

#[test]
fn long_poll_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = Actors::new(21);
    let svc = Arc::new(a.service(dir.path()));
    let server = spawn(svc.clone(), local()).unwrap();
    let base = server.base_url();
    let env = a.open("C1");
    let waiter = thread::spawn(move || {
        let api = HttpClient::new(base);
        BoardApi::<G>::events(&api, 1, Duration::from_secs(20)).unwrap()
    });
    thread::sleep(Duration::from_millis(150));
    accept(&*svc, &env);
    let page = waiter.join().unwrap();
    assert_eq!(page.events.len(), 1);
    assert_eq!(page.events[0].envelope, env);
}

/// Every message kind posted over HTTP comes back from the event stream
/// bit-identical.
#[test]
fn every_message_kind_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = Actors::new(22);
    let svc = Arc::new(a.service(dir.path()));
    let server = spawn(svc.clone(), local()).unwrap();
    let api = HttpClient::new(server.base_url());

    let mut sent: Vec<Envelope> = vec![];
    let mut post = |env: Envelope| {
        assert!(BoardApi::<G>::submit(&api, &env).unwrap().is_accepted(), "{:?}", env.kind);
        sent.push(env);
    };
    let e = a.open("C1");
    post(e);
    let e = a.register("alice");
    post(e);
    let e = a.add("C1", "alice");
    post(e);
    let e = a.participation(&svc.snapshot().state, "alice", &["C1"]);
    post(e);
    let e = a.voters.get_mut(&vid("alice")).unwrap().rotate(false, &mut a.rng);
    post(e);
    let state = svc.snapshot().state;
    let result = a.talliers.tally(&state, &cid("C1"), None, &mut a.rng).unwrap();
    assert_eq!(result.count, 1);
    let e = a.talliers.publish(&result);
    post(e);
    let e = a.talliers.close_collection(&cid("C1"));
    post(e);

    let page = BoardApi::<G>::events(&api, 0, Duration::ZERO).unwrap();
    let kinds: HashSet<MessageKind> = page.events.iter().map(|e| e.envelope.kind).collect();
    assert_eq!(kinds.len(), 7);
    for (ev, env) in page.events[1..].iter().zip(&sent) {
        assert_eq!(&ev.envelope, env);
        let text = serde_json::to_string(env).unwrap();
        let back: Envelope = serde_json::from_str(&text).unwrap();
        assert_eq!(&back, env);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
