use std::time::Duration;

use multiballot_core::board::Envelope;
use multiballot_core::group::Group;
use multiballot_core::ids::{CollectionId, VoterId};
use serde::de::DeserializeOwned;

use crate::service::{BoardService, ChainDocument, EventsPage, Health, ReadError, Snapshot, SubmitResponse};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("{0}")]
    Read(ReadError),
    #[error("service: {0}")]
    Service(String),
}

/// The public board surface, whether in-process or remote.
pub trait BoardApi<G: Group> {
    fn submit(&self, envelope: &Envelope) -> Result<SubmitResponse, ClientError>;
    fn snapshot(&self) -> Result<Snapshot<G>, ClientError>;
    fn chain(&self, collection: &CollectionId, voter: &VoterId) -> Result<ChainDocument<G>, ClientError>;
    fn events(&self, from: u64, wait: Duration) -> Result<EventsPage, ClientError>;
    fn health(&self) -> Result<Health, ClientError>;
}

impl<G: Group> BoardApi<G> for BoardService<G> {
    fn submit(&self, envelope: &Envelope) -> Result<SubmitResponse, ClientError> {
        BoardService::submit(self, envelope).map_err(|e| ClientError::Service(e.to_string()))
    }

    fn snapshot(&self) -> Result<Snapshot<G>, ClientError> {
        Ok(BoardService::snapshot(self))
    }

    fn chain(&self, collection: &CollectionId, voter: &VoterId) -> Result<ChainDocument<G>, ClientError> {
        BoardService::chain(self, collection, voter).map_err(ClientError::Read)
    }

    fn events(&self, from: u64, wait: Duration) -> Result<EventsPage, ClientError> {
        Ok(BoardService::events(self, from, wait))
    }

    fn health(&self) -> Result<Health, ClientError> {
        Ok(BoardService::health(self))
    }
}

/// Blocking HTTP client. Must not be used from inside an async runtime.
pub struct HttpClient {
    base: String,
    http: reqwest::blocking::Client,
}

impl HttpClient {
    pub fn new(base: impl Into<String>) -> Self {
        HttpClient {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(60))
                .build()
                .expect("client builds"),
        }
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        let resp = self
            .http
            .get(format!("{}{}", self.base, path))
            .send()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        decode(resp)
    }
}

fn decode<T: DeserializeOwned>(resp: reqwest::blocking::Response) -> Result<T, ClientError> {
    let status = resp.status();
    let body = resp.bytes().map_err(|e| ClientError::Transport(e.to_string()))?;
    if status.is_success() {
        return serde_json::from_slice(&body).map_err(|e| ClientError::Transport(e.to_string()));
    }
    match serde_json::from_slice::<ReadError>(&body) {
        Ok(e) if status.as_u16() == 404 => Err(ClientError::Read(e)),
        Ok(e) => Err(ClientError::Service(e.to_string())),
        Err(_) => Err(ClientError::Transport(format!("{status}: {}", String::from_utf8_lossy(&body)))),
    }
}

impl<G: Group> BoardApi<G> for HttpClient {
    fn submit(&self, envelope: &Envelope) -> Result<SubmitResponse, ClientError> {
        let resp = self
            .http
            .post(format!("{}/submit", self.base))
            .header("content-type", "application/json")
            .body(serde_json::to_vec(envelope).expect("envelopes serialize"))
            .send()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status();
        let body = resp.bytes().map_err(|e| ClientError::Transport(e.to_string()))?;
        match serde_json::from_slice::<SubmitResponse>(&body) {
            Ok(r) => Ok(r),
            Err(_) => Err(ClientError::Service(format!("{status}: {}", String::from_utf8_lossy(&body)))),
        }
    }

    fn snapshot(&self) -> Result<Snapshot<G>, ClientError> {
        self.get("/snapshot")
    }

    fn chain(&self, collection: &CollectionId, voter: &VoterId) -> Result<ChainDocument<G>, ClientError> {
        self.get(&format!("/chain/{}/{}", collection.as_str(), voter.as_str()))
    }

    fn events(&self, from: u64, wait: Duration) -> Result<EventsPage, ClientError> {
        self.get(&format!("/events?from={from}&wait_ms={}", wait.as_millis()))
    }

    fn health(&self) -> Result<Health, ClientError> {
        self.get("/health")
    }
}
