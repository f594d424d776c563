//! Persistent memo for k-searches.
//!
//! The file is advisory: a missing or unreadable cache is treated as empty
//! and rewritten on the next flush. Entries are keyed by cutoff, target core,
//! target angle rounded to 9 decimals, epsilon and parity; the exact request
//! is stored alongside and must match for a hit.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::arithmetic::{find_k, KSearch, KSearchResult, Parity};
use crate::error::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Entry {
    request: KSearch,
    result: KSearchResult,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    entries: BTreeMap<String, Entry>,
}

const VERSION: u32 = 1;

#[derive(Debug, Default)]
struct State {
    entries: BTreeMap<String, Entry>,
    dirty: bool,
}

/// Single-writer, multi-reader k-search cache.
#[derive(Debug, Default)]
pub struct KCache {
    path: Option<PathBuf>,
    state: RwLock<State>,
}

fn key(req: &KSearch) -> String {
    let core = req.target_core.map_or("none".to_string(), |c| c.to_string());
    let parity = match req.parity {
        Parity::Any => "any",
        Parity::Even => "even",
        Parity::Odd => "odd",
    };
    format!(
        "m={};core={};target={:.9};eps={:e};parity={}",
        req.m, core, req.target_angle, req.epsilon, parity
    )
}

impl KCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Load from `path`; unreadable contents are logged and ignored.
    pub fn open(path: impl AsRef<Path>) -> Self {
        let path = path.as_ref().to_path_buf();
        let mut entries = BTreeMap::new();
        match fs::read_to_string(&path) {
            Ok(text) => match serde_json::from_str::<CacheFile>(&text) {
                Ok(f) if f.version == VERSION => entries = f.entries,
                Ok(f) => log::warn!(
                    "ignoring k-cache {} with unknown version {}",
                    path.display(),
                    f.version
                ),
                Err(e) => log::warn!("ignoring corrupt k-cache {}: {e}", path.display()),
            },
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => log::warn!("cannot read k-cache {}: {e}", path.display()),
        }
        KCache {
            path: Some(path),
            state: RwLock::new(State {
                entries,
                dirty: false,
            }),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.state.read().unwrap().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lookup(&self, req: &KSearch) -> Option<KSearchResult> {
        let st = self.state.read().unwrap();
        let e = st.entries.get(&key(req))?;
        let same = e.request.m == req.m
            && e.request.target_core == req.target_core
            && e.request.target_angle == req.target_angle
            && e.request.epsilon == req.epsilon
            && e.request.parity == req.parity;
        (same && e.result.k <= req.k_max).then(|| e.result.clone())
    }

    /// Cached [`find_k`]. Failures are not cached.
    pub fn find_k(&self, req: &KSearch) -> Result<KSearchResult> {
        if let Some(r) = self.lookup(req) {
            return Ok(r);
        }
        let r = find_k(req)?;
        let mut st = self.state.write().unwrap();
        st.entries.insert(
            key(req),
            Entry {
                request: *req,
                result: r.clone(),
            },
        );
        st.dirty = true;
        Ok(r)
    }

    /// Atomically rewrite the backing file if anything changed.
    pub fn flush(&self) -> Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let mut st = self.state.write().unwrap();
        if !st.dirty {
            return Ok(());
        }
        let file = CacheFile {
            version: VERSION,
            entries: st.entries.clone(),
        };
        let text = serde_json::to_string_pretty(&file)?;
        let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(
            ".{}.tmp{}",
            path.file_name().and_then(|s| s.to_str()).unwrap_or("kcache"),
            std::process::id()
        ));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(text.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        st.dirty = false;
        Ok(())
    }
}
