use std::collections::BTreeMap;
use std::path::Path;
use std::sync::RwLock;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::{IntelSource, IntelVerdict, VerdictStatus};
use crate::error::Result;
use crate::jsonl;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Entry {
    verdict: IntelVerdict,
    stored_at: DateTime<Utc>,
}

/// Verdicts keyed by `(subject, source)`. Concurrent readers, serialized
/// writers. `ttl = None` keeps entries forever.
#[derive(Debug)]
pub struct VerdictCache {
    ttl: Option<Duration>,
    map: RwLock<BTreeMap<(String, IntelSource), Entry>>,
}

impl VerdictCache {
    pub fn new(ttl: Option<Duration>) -> Self {
        VerdictCache {
            ttl,
            map: RwLock::new(BTreeMap::new()),
        }
    }

    pub fn get(&self, subject: &str, source: IntelSource, now: DateTime<Utc>) -> Option<IntelVerdict> {
        let map = self.map.read().expect("cache lock");
        let e = map.get(&(subject.to_string(), source))?;
        match self.ttl {
            Some(ttl) if now - e.stored_at > ttl => None,
            _ => Some(e.verdict.clone()),
        }
    }

    /// Stores a verdict. Outages are never cached.
    pub fn put(&self, verdict: &IntelVerdict, now: DateTime<Utc>) {
        if verdict.status == VerdictStatus::Unavailable {
            return;
        }
        self.map.write().expect("cache lock").insert(
            (verdict.subject.clone(), verdict.source),
            Entry {
                verdict: verdict.clone(),
                stored_at: now,
            },
        );
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn load(&self, path: &Path) -> Result<()> {
        if !path.exists() {
            return Ok(());
        }
        let entries: Vec<Entry> = jsonl::read(path)?;
        let mut map = self.map.write().expect("cache lock");
        for e in entries {
            map.insert((e.verdict.subject.clone(), e.verdict.source), e);
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let map = self.map.read().expect("cache lock");
        let entries: Vec<&Entry> = map.values().collect();
        jsonl::write(path, &entries)
    }
}
