use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{LinkMap, RawTriple};
use crate::error::{Error, Result};

pub const DBPEDIA_RESOURCE: &str = "http://dbpedia.org/resource/";
pub const CACHE_ENV: &str = "CONFEX_CACHE_DIR";

/// One `(predicate, object)` pair of an entity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub predicate: String,
    pub object: String,
    pub object_is_iri: bool,
}

impl Binding {
    pub fn literal(predicate: impl Into<String>, object: impl Into<String>) -> Binding {
        Binding {
            predicate: predicate.into(),
            object: object.into(),
            object_is_iri: false,
        }
    }

    pub fn iri(predicate: impl Into<String>, object: impl Into<String>) -> Binding {
        Binding {
            predicate: predicate.into(),
            object: object.into(),
            object_is_iri: true,
        }
    }
}

/// Source of outgoing properties for an entity.
pub trait SparqlClient: Sync {
    fn properties(&self, entity: &str) -> Result<Vec<Binding>>;

    fn endpoint(&self) -> String;
}

/// In-memory client, mostly for fixtures and offline demos.
#[derive(Clone, Debug, Default)]
pub struct StaticClient {
    pub name: String,
    pub data: HashMap<String, Vec<Binding>>,
}

impl StaticClient {
    pub fn new(name: impl Into<String>) -> StaticClient {
        StaticClient {
            name: name.into(),
            data: HashMap::new(),
        }
    }

    pub fn with(mut self, entity: impl Into<String>, bindings: Vec<Binding>) -> StaticClient {
        self.data.insert(entity.into(), bindings);
        self
    }
}

impl SparqlClient for StaticClient {
    fn properties(&self, entity: &str) -> Result<Vec<Binding>> {
        Ok(self.data.get(entity).cloned().unwrap_or_default())
    }

    fn endpoint(&self) -> String {
        self.name.clone()
    }
}

/// Parses a SPARQL JSON result whose rows bind `p` and `o`.
pub fn parse_sparql_json(text: &str) -> Result<Vec<Binding>> {
    #[derive(Deserialize)]
    struct Term {
        #[serde(rename = "type")]
        kind: String,
        value: String,
    }
    #[derive(Deserialize)]
    struct Row {
        p: Term,
        o: Term,
    }
    #[derive(Deserialize)]
    struct Results {
        bindings: Vec<Row>,
    }
    #[derive(Deserialize)]
    struct Doc {
        results: Results,
    }
    let doc: Doc = serde_json::from_str(text)?;
    Ok(doc
        .results
        .bindings
        .into_iter()
        .map(|r| Binding {
            predicate: r.p.value,
            object: r.o.value,
            object_is_iri: r.o.kind == "uri",
        })
        .collect())
}

#[cfg(feature = "http")]
pub use http::HttpClient;

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use super::{parse_sparql_json, Binding, SparqlClient};
    use crate::error::{Error, Result};

    /// Blocking client for a SPARQL endpoint speaking the JSON results format.
    pub struct HttpClient {
        endpoint: String,
        agent: ureq::Agent,
    }

    impl HttpClient {
        pub fn new(endpoint: impl Into<String>, timeout: Duration) -> HttpClient {
            let agent = ureq::Agent::config_builder()
                .timeout_global(Some(timeout))
                .build()
                .into();
            HttpClient {
                endpoint: endpoint.into(),
                agent,
            }
        }
    }

    impl SparqlClient for HttpClient {
        fn properties(&self, entity: &str) -> Result<Vec<Binding>> {
            if entity.contains(['<', '>', '"', ' ']) {
                return Err(Error::Fetch(format!("refusing malformed IRI `{entity}`")));
            }
            let query = format!("SELECT ?p ?o WHERE {{ <{entity}> ?p ?o }}");
            let mut resp = self
                .agent
                .get(&self.endpoint)
                .query("query", &query)
                .query("format", "application/sparql-results+json")
                .header("Accept", "application/sparql-results+json")
                .call()
                .map_err(|e| Error::Fetch(format!("{entity}: {e}")))?;
            let body = resp
                .body_mut()
                .read_to_string()
                .map_err(|e| Error::Fetch(format!("{entity}: {e}")))?;
            parse_sparql_json(&body)
        }

        fn endpoint(&self) -> String {
            self.endpoint.clone()
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    entity: String,
    hop: u8,
    bindings: Vec<Binding>,
}

/// Per-entity JSON cache of fetched properties.
#[derive(Clone, Debug)]
pub struct KgCache {
    dir: PathBuf,
}

impl KgCache {
    pub fn new(dir: impl Into<PathBuf>) -> KgCache {
        KgCache { dir: dir.into() }
    }

    /// Cache under `$CONFEX_CACHE_DIR`, or `.confex-cache` when unset.
    pub fn from_env() -> KgCache {
        KgCache::new(std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| ".confex-cache".into()))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, entity: &str, hop: u8) -> PathBuf {
        let tail: String = entity
            .rsplit(['/', '#'])
            .next()
            .unwrap_or(entity)
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .take(64)
            .collect();
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in entity.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        self.dir.join(format!("h{hop}-{tail}-{h:016x}.json"))
    }

    pub fn load(&self, entity: &str, hop: u8) -> Result<Option<Vec<Binding>>> {
        let path = self.path(entity, hop);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(path, e)),
        };
        let entry: CacheEntry = serde_json::from_str(&text)?;
        if entry.entity != entity || entry.hop != hop {
            return Ok(None);
        }
        Ok(Some(entry.bindings))
    }

    /// Writes through a temporary file and a rename.
    pub fn store(&self, entity: &str, hop: u8, bindings: &[Binding]) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path(entity, hop);
        let entry = CacheEntry {
            entity: entity.to_owned(),
            hop,
            bindings: bindings.to_vec(),
        };
        let mut tmp = tempfile_in(&self.dir)?;
        serde_json::to_writer_pretty(&mut tmp.1, &entry)?;
        tmp.1.flush().map_err(|e| Error::io(&tmp.0, e))?;
        drop(tmp.1);
        fs::rename(&tmp.0, &path).map_err(|e| Error::io(&path, e))
    }
}

fn tempfile_in(dir: &Path) -> Result<(PathBuf, fs::File)> {
    use std::sync::atomic::{AtomicU64, Ordering};
    static NEXT: AtomicU64 = AtomicU64::new(0);
    let n = NEXT.fetch_add(1, Ordering::Relaxed);
    let path = dir.join(format!(".tmp-{}-{n}", std::process::id()));
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path, file))
}

#[derive(Clone, Debug)]
pub struct FetchOptions {
    /// 1 or 2. Hop 2 follows IRI-valued properties one level.
    pub hop: u8,
    /// Never contact the endpoint; cache misses are reported.
    pub offline: bool,
    pub concurrency: usize,
}

impl Default for FetchOptions {
    fn default() -> Self {
        FetchOptions {
            hop: 1,
            offline: false,
            concurrency: 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FetchStatus {
    Fetched,
    Cached,
    Empty,
    NotCached,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityDiagnostic {
    pub label: String,
    pub entity: String,
    pub status: FetchStatus,
    pub facts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FetchOutcome {
    pub raw: Vec<RawTriple>,
    pub diagnostics: Vec<EntityDiagnostic>,
}

/// Local name of an IRI: the part after the last `/` or `#`.
fn local_name(iri: &str) -> &str {
    iri.trim_end_matches(['/', '#'])
        .rsplit(['/', '#'])
        .next()
        .unwrap_or(iri)
}

enum Lookup {
    Hit(Vec<Binding>, FetchStatus),
    Miss(FetchStatus, String),
}

fn lookup(client: &dyn SparqlClient, cache: &KgCache, entity: &str, hop: u8, offline: bool) -> Lookup {
    match cache.load(entity, hop) {
        Ok(Some(b)) => return Lookup::Hit(b, FetchStatus::Cached),
        Ok(None) => {}
        Err(e) => return Lookup::Miss(FetchStatus::Failed, e.to_string()),
    }
    if offline {
        return Lookup::Miss(FetchStatus::NotCached, "offline and not cached".into());
    }
    match client.properties(entity) {
        Ok(b) => match cache.store(entity, hop, &b) {
            Ok(()) => Lookup::Hit(b, FetchStatus::Fetched),
            Err(e) => Lookup::Miss(FetchStatus::Failed, e.to_string()),
        },
        Err(e) => Lookup::Miss(FetchStatus::Failed, e.to_string()),
    }
}

fn fetch_entity(
    client: &dyn SparqlClient,
    cache: &KgCache,
    label: &str,
    entity: &str,
    opts: &FetchOptions,
) -> (Vec<RawTriple>, EntityDiagnostic) {
    let mut diag = EntityDiagnostic {
        label: label.to_owned(),
        entity: entity.to_owned(),
        status: FetchStatus::Empty,
        facts: 0,
        message: None,
    };
    let bindings = match lookup(client, cache, entity, 1, opts.offline) {
        Lookup::Hit(b, status) => {
            diag.status = status;
            b
        }
        Lookup::Miss(status, msg) => {
            diag.status = status;
            diag.message = Some(msg);
            return (Vec::new(), diag);
        }
    };
    let mut raw = Vec::new();
    let mut notes = Vec::new();
    for b in &bindings {
        let attr = local_name(&b.predicate);
        let value = if b.object_is_iri { local_name(&b.object) } else { b.object.as_str() };
        raw.push(RawTriple::new(label, attr, value));
        if opts.hop >= 2 && b.object_is_iri {
            match lookup(client, cache, &b.object, 2, opts.offline) {
                Lookup::Hit(inner, _) => {
                    for b2 in inner.iter().filter(|b2| !b2.object_is_iri) {
                        raw.push(RawTriple::new(
                            label,
                            format!("{attr}.{}", local_name(&b2.predicate)),
                            b2.object.as_str(),
                        ));
                    }
                }
                Lookup::Miss(_, msg) => notes.push(format!("{}: {msg}", b.object)),
            }
        }
    }
    if raw.is_empty() {
        diag.status = FetchStatus::Empty;
    }
    if !notes.is_empty() {
        diag.message = Some(notes.join("; "));
    }
    diag.facts = raw.len();
    (raw, diag)
}

/// Fetches properties for every linked entity, through the cache. Output
/// order follows the sorted labels, so a cached replay is identical.
pub fn fetch_kg(
    links: &LinkMap,
    client: &dyn SparqlClient,
    cache: &KgCache,
    opts: &FetchOptions,
) -> Result<FetchOutcome> {
    if !(1..=2).contains(&opts.hop) {
        return Err(Error::InvalidConfig(format!("hop must be 1 or 2, got {}", opts.hop)));
    }
    let items: Vec<(&String, &String)> = links.links.iter().collect();
    let workers = opts.concurrency.clamp(1, items.len().max(1));
    let chunk = items.len().div_ceil(workers).max(1);
    let mut slots: BTreeMap<usize, (Vec<RawTriple>, EntityDiagnostic)> = BTreeMap::new();
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .enumerate()
            .map(|(c, part)| {
                s.spawn(move || {
                    part.iter()
                        .enumerate()
                        .map(|(i, (label, iri))| (c * chunk + i, fetch_entity(client, cache, label, iri, opts)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            slots.extend(h.join().expect("fetch worker panicked"));
        }
    });
    let mut out = FetchOutcome::default();
    for (_, (raw, diag)) in slots {
        out.raw.extend(raw);
        out.diagnostics.push(diag);
    }
    for label in &links.unmatched {
        out.diagnostics.push(EntityDiagnostic {
            label: label.clone(),
            entity: String::new(),
            status: FetchStatus::Failed,
            facts: 0,
            message: Some("no entity link".into()),
        });
    }
    Ok(out)
}
