//! Single-file JSON store.
//!
//! The whole state lives in one document:
//!
//! ```text
//! {
//!   "schema_version": 1,
//!   "network": <network document> | null,
//!   "rasters": { "<hour>": "<ESRI ASCII grid>" },
//!   "participants": { "<id>": Participant },
//!   "routes": { "<project>:<route>": RouteRecord },
//!   "analyses": { "<project>:<route>": Analysis },
//!   "packages": { "<project>:<route>": [StoredPackage, ...] },
//!   "feedback": { "<participant>": FeedbackRecord }
//! }
//! ```
//!
//! All maps are ordered, so a given state always serializes to the same
//! bytes. Saves write a sibling temp file and rename it over the target.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{
    Analysis, FeedbackRecord, Participant, PlatformError, Result, RouteRecord, StoredPackage,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreData {
    pub schema_version: u32,
    #[serde(default)]
    pub network: Option<serde_json::Value>,
    #[serde(default)]
    pub rasters: BTreeMap<u8, String>,
    #[serde(default)]
    pub participants: BTreeMap<String, Participant>,
    #[serde(default)]
    pub routes: BTreeMap<String, RouteRecord>,
    #[serde(default)]
    pub analyses: BTreeMap<String, Analysis>,
    #[serde(default)]
    pub packages: BTreeMap<String, Vec<StoredPackage>>,
    #[serde(default)]
    pub feedback: BTreeMap<String, FeedbackRecord>,
}

impl Default for StoreData {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            network: None,
            rasters: BTreeMap::new(),
            participants: BTreeMap::new(),
            routes: BTreeMap::new(),
            analyses: BTreeMap::new(),
            packages: BTreeMap::new(),
            feedback: BTreeMap::new(),
        }
    }
}

impl StoreData {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let data: StoreData = serde_json::from_slice(bytes)
            .map_err(|e| PlatformError::Storage(format!("corrupt store: {e}")))?;
        if data.schema_version != SCHEMA_VERSION {
            return Err(PlatformError::Storage(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                data.schema_version
            )));
        }
        Ok(data)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("store serializes")
    }

    /// Reads `path`, or returns an empty store when it does not exist.
    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::read(path) {
            Ok(bytes) => Self::from_bytes(&bytes),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(PlatformError::Storage(format!("{}: {e}", path.display()))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let storage =
            |e: std::io::Error| PlatformError::Storage(format!("{}: {e}", path.display()));
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(storage)?;
        tmp.write_all(&self.to_bytes()).map_err(storage)?;
        tmp.as_file().sync_all().map_err(storage)?;
        tmp.persist(path).map_err(|e| storage(e.error))?;
        Ok(())
    }
}
