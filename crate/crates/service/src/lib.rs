//! Network-facing bulletin board: a durable, hash-chained log behind a small
//! JSON/HTTP interface, plus clients for it.

pub mod client;
pub mod config;
pub mod http;
pub mod service;
pub mod store;

pub use client::{BoardApi, ClientError, HttpClient};
pub use config::ServiceConfig;
pub use service::{BoardService, ChainDocument, EventsPage, Health, ReadError, ServiceError, Snapshot, SubmitResponse};
pub use store::{CrashPoint, LogStore, StoreError};
