//! Social-tag web service client (Last.fm-compatible JSON) with an offline
//! fixture mode.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::dataset::TagWeight;

pub const API_KEY_ENV: &str = "MOODLOOM_API_KEY";
pub const DEFAULT_BASE_URL: &str = "https://ws.audioscrobbler.com/2.0/";
pub const DEFAULT_RATE_LIMIT: f64 = 5.0;
pub const MAX_ATTEMPTS: usize = 3;
pub const DEFAULT_TRACK_LIMIT: usize = 50;
pub const DEFAULT_TAG_LIMIT: usize = 20;

/// Service error codes that signal a missing tag, artist or track.
const NOT_FOUND_CODES: &[i64] = &[6];
/// Service error codes worth retrying.
const TRANSIENT_CODES: &[i64] = &[8, 11, 16, 29];

#[derive(Debug, Error)]
pub enum TagError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("limit must be at least 1")]
    ZeroLimit,
    #[error("request `{key}` failed after {attempts} attempt(s): {message}")]
    Fetch {
        key: String,
        attempts: usize,
        message: String,
    },
    #[error("unexpected response for `{key}`: {message}")]
    Response { key: String, message: String },
    #[error("cannot read fixture {}: {source}", path.display())]
    Fixture { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServiceMode {
    Live,
    Fixture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagServiceConfig {
    pub api_key: Option<String>,
    pub base_url: String,
    pub mode: ServiceMode,
    pub fixture_dir: PathBuf,
    /// Requests per second admitted in live mode.
    pub rate_limit: f64,
    /// Delay before the second attempt; doubled for each later one.
    pub backoff: Duration,
}

impl TagServiceConfig {
    /// Live configuration with the key taken from `MOODLOOM_API_KEY`.
    pub fn live_from_env() -> Self {
        Self {
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.trim().is_empty()),
            base_url: DEFAULT_BASE_URL.to_string(),
            mode: ServiceMode::Live,
            fixture_dir: PathBuf::new(),
            rate_limit: DEFAULT_RATE_LIMIT,
            backoff: Duration::from_millis(500),
        }
    }

    pub fn fixture(dir: impl Into<PathBuf>) -> Self {
        Self {
            api_key: None,
            base_url: DEFAULT_BASE_URL.to_string(),
            mode: ServiceMode::Fixture,
            fixture_dir: dir.into(),
            rate_limit: DEFAULT_RATE_LIMIT,
            backoff: Duration::ZERO,
        }
    }

    pub fn validate(&self) -> Result<(), TagError> {
        match self.mode {
            ServiceMode::Fixture => Ok(()),
            ServiceMode::Live => {
                if self.api_key.as_deref().is_none_or(|k| k.trim().is_empty()) {
                    return Err(TagError::Config(format!("live mode needs an API key in {API_KEY_ENV}")));
                }
                if !(self.rate_limit > 0.0 && self.rate_limit.is_finite()) {
                    return Err(TagError::Config("rate limit must be positive".into()));
                }
                Ok(())
            }
        }
    }
}

/// Error from one transport round trip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportError {
    pub message: String,
    pub retryable: bool,
}

/// Performs one GET against the service and returns the body.
pub trait Transport: Send + Sync {
    fn get(&self, base_url: &str, params: &[(&str, &str)]) -> Result<String, TransportError>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<Self, TagError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .user_agent(concat!("moodloom/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| TagError::Config(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn get(&self, base_url: &str, params: &[(&str, &str)]) -> Result<String, TransportError> {
        let url = reqwest::Url::parse_with_params(base_url, params).map_err(|e| TransportError {
            message: e.to_string(),
            retryable: false,
        })?;
        let resp = self.client.get(url).send().map_err(|e| TransportError {
            message: e.to_string(),
            retryable: true,
        })?;
        let status = resp.status();
        let body = resp.text().map_err(|e| TransportError {
            message: e.to_string(),
            retryable: true,
        })?;
        // the service reports missing items as JSON errors with 4xx statuses
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(TransportError {
                message: format!("HTTP {status}"),
                retryable: true,
            });
        }
        if !status.is_success() && serde_json::from_str::<Value>(&body).is_err() {
            return Err(TransportError {
                message: format!("HTTP {status}"),
                retryable: false,
            });
        }
        Ok(body)
    }
}

/// Serializes request admission to at most `per_second` requests.
#[derive(Debug)]
struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    fn new(per_second: f64) -> Self {
        let interval = if per_second > 0.0 && per_second.is_finite() {
            Duration::from_secs_f64(1.0 / per_second)
        } else {
            Duration::ZERO
        };
        Self {
            interval,
            next: Mutex::new(None),
        }
    }

    fn admit(&self) {
        let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
        let now = Instant::now();
        if let Some(at) = *next {
            if at > now {
                thread::sleep(at - now);
            }
        }
        *next = Some(Instant::now() + self.interval);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackRef {
    pub artist: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchedSong {
    pub artist: String,
    pub title: String,
    pub tags: Vec<TagWeight>,
}

pub struct TagClient {
    config: TagServiceConfig,
    transport: Box<dyn Transport>,
    limiter: RateLimiter,
}

impl TagClient {
    pub fn new(config: TagServiceConfig) -> Result<Self, TagError> {
        config.validate()?;
        let transport: Box<dyn Transport> = match config.mode {
            ServiceMode::Live => Box::new(HttpTransport::new()?),
            ServiceMode::Fixture => Box::new(NoNetwork),
        };
        Ok(Self::assemble(config, transport))
    }

    /// Live-mode client over a custom transport.
    pub fn with_transport(config: TagServiceConfig, transport: Box<dyn Transport>) -> Result<Self, TagError> {
        config.validate()?;
        Ok(Self::assemble(config, transport))
    }

    fn assemble(config: TagServiceConfig, transport: Box<dyn Transport>) -> Self {
        let limiter = RateLimiter::new(config.rate_limit);
        Self {
            config,
            transport,
            limiter,
        }
    }

    pub fn config(&self) -> &TagServiceConfig {
        &self.config
    }

    /// Up to `limit` top tracks for a tag, in service order.
    pub fn fetch_top_tracks(&self, tag: &str, limit: usize) -> Result<Vec<TrackRef>, TagError> {
        if limit == 0 {
            return Err(TagError::ZeroLimit);
        }
        let limit_s = limit.to_string();
        let key = fixture_key("tag.gettoptracks", &[tag]);
        let Some(body) = self.request(&key, &[("method", "tag.gettoptracks"), ("tag", tag), ("limit", &limit_s)])? else {
            return Ok(Vec::new());
        };
        let mut tracks = parse_top_tracks(&body).map_err(|message| TagError::Response { key, message })?;
        tracks.truncate(limit);
        Ok(tracks)
    }

    /// Up to `limit` (tag, weight) pairs for a track, heaviest first.
    pub fn fetch_top_tags(&self, artist: &str, title: &str, limit: usize) -> Result<Vec<TagWeight>, TagError> {
        if limit == 0 {
            return Err(TagError::ZeroLimit);
        }
        let key = fixture_key("track.gettoptags", &[artist, title]);
        let params = [
            ("method", "track.gettoptags"),
            ("artist", artist),
            ("track", title),
            ("autocorrect", "1"),
        ];
        let Some(body) = self.request(&key, &params)? else {
            return Ok(Vec::new());
        };
        let mut tags = parse_top_tags(&body).map_err(|message| TagError::Response { key, message })?;
        tags.truncate(limit);
        Ok(tags)
    }

    /// Response body, or `None` when the service has nothing for the key.
    fn request(&self, key: &str, params: &[(&str, &str)]) -> Result<Option<String>, TagError> {
        let body = match self.config.mode {
            ServiceMode::Fixture => {
                let path = self.fixture_path(key);
                match fs::read_to_string(&path) {
                    Ok(b) => b,
                    Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
                    Err(source) => return Err(TagError::Fixture { path, source }),
                }
            }
            ServiceMode::Live => {
                let api_key = self.config.api_key.as_deref().unwrap_or_default();
                let mut all: Vec<(&str, &str)> = params.to_vec();
                all.push(("api_key", api_key));
                all.push(("format", "json"));
                self.get_with_retry(key, &all)?
            }
        };
        match service_error(&body) {
            None => Ok(Some(body)),
            Some((code, _)) if NOT_FOUND_CODES.contains(&code) => Ok(None),
            Some((code, message)) => Err(TagError::Fetch {
                key: key.to_string(),
                attempts: 1,
                message: format!("service error {code}: {message}"),
            }),
        }
    }

    fn get_with_retry(&self, key: &str, params: &[(&str, &str)]) -> Result<String, TagError> {
        let mut delay = self.config.backoff;
        let mut last = String::new();
        for attempt in 1..=MAX_ATTEMPTS {
            if attempt > 1 {
                thread::sleep(delay);
                delay *= 2;
            }
            self.limiter.admit();
            match self.transport.get(&self.config.base_url, params) {
                Ok(body) => match service_error(&body) {
                    Some((code, message)) if TRANSIENT_CODES.contains(&code) => {
                        last = format!("service error {code}: {message}");
                    }
                    _ => return Ok(body),
                },
                Err(e) if e.retryable => last = e.message,
                Err(e) => {
                    return Err(TagError::Fetch {
                        key: key.to_string(),
                        attempts: attempt,
                        message: e.message,
                    })
                }
            }
        }
        Err(TagError::Fetch {
            key: key.to_string(),
            attempts: MAX_ATTEMPTS,
            message: last,
        })
    }

    pub fn fixture_path(&self, key: &str) -> PathBuf {
        fixture_path(&self.config.fixture_dir, key)
    }
}

struct NoNetwork;

impl Transport for NoNetwork {
    fn get(&self, _: &str, _: &[(&str, &str)]) -> Result<String, TransportError> {
        Err(TransportError {
            message: "network disabled in fixture mode".into(),
            retryable: false,
        })
    }
}

/// File-name-safe request key: method plus lowercased arguments with
/// non-alphanumeric runs collapsed to `_`, joined by `__`.
pub fn fixture_key(method: &str, args: &[&str]) -> String {
    let mut key = method.to_string();
    for a in args {
        key.push_str("__");
        let mut last_sep = false;
        for ch in a.trim().to_lowercase().chars() {
            if ch.is_alphanumeric() {
                key.push(ch);
                last_sep = false;
            } else if !last_sep {
                key.push('_');
                last_sep = true;
            }
        }
    }
    key
}

pub fn fixture_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.json"))
}

fn service_error(body: &str) -> Option<(i64, String)> {
    let v: Value = serde_json::from_str(body).ok()?;
    let code = v.get("error")?.as_i64()?;
    let message = v.get("message").and_then(Value::as_str).unwrap_or_default().to_string();
    Some((code, message))
}

/// A JSON field that may hold one object or an array of them.
fn one_or_many(v: Option<&Value>) -> Vec<&Value> {
    match v {
        Some(Value::Array(items)) => items.iter().collect(),
        Some(obj @ Value::Object(_)) => vec![obj],
        _ => Vec::new(),
    }
}

fn text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.trim().to_string()).filter(|s| !s.is_empty()),
        Value::Object(o) => o.get("name").and_then(text).or_else(|| o.get("#text").and_then(text)),
        _ => None,
    }
}

pub fn parse_top_tracks(body: &str) -> Result<Vec<TrackRef>, String> {
    let v: Value = serde_json::from_str(body).map_err(|e| e.to_string())?;
    let Some(tracks) = v.get("tracks") else {
        return Err("missing `tracks`".into());
    };
    one_or_many(tracks.get("track"))
        .into_iter()
        .map(|t| {
            let title = t.get("name").and_then(text).ok_or("track without name")?;
            let artist = t.get("artist").and_then(text).ok_or("track without artist")?;
            Ok(TrackRef { artist, title })
        })
        .collect()
}

/// Parses a top-tags response; counts may be numbers or numeric strings and
/// are clamped to 0..=100. Sorted by descending weight, stable.
pub fn parse_top_tags(body: &str) -> Result<Vec<TagWeight>, String> {
    let v: Value = serde_json::from_str(body).map_err(|e| e.to_string())?;
    let Some(toptags) = v.get("toptags") else {
        return Err("missing `toptags`".into());
    };
    let mut tags = one_or_many(toptags.get("tag"))
        .into_iter()
        .map(|t| {
            let name = t.get("name").and_then(text).ok_or("tag without name")?;
            let count = match t.get("count") {
                Some(Value::Number(n)) => n.as_f64(),
                Some(Value::String(s)) => s.trim().parse::<f64>().ok(),
                None => Some(0.0),
                _ => None,
            }
            .filter(|c| c.is_finite())
            .ok_or_else(|| format!("tag `{name}` has a bad count"))?;
            Ok(TagWeight::new(name.to_lowercase(), count.round().clamp(0.0, 100.0) as u32))
        })
        .collect::<Result<Vec<_>, String>>()?;
    tags.sort_by(|a, b| b.weight.cmp(&a.weight));
    Ok(tags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    const TRACKS: &str = r#"{"tracks":{"track":[
        {"name":"One","artist":{"name":"A"}},
        {"name":"Two","artist":{"name":"B"}},
        {"name":"Three","artist":{"name":"C"}}
    ],"@attr":{"tag":"mellow"}}}"#;

    const TAGS: &str = r#"{"toptags":{"tag":[
        {"name":"chill","count":40},
        {"name":"Mellow","count":"100"},
        {"name":"awesome","count":7}
    ]}}"#;

    fn fixture_dir() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        fs::write(fixture_path(dir.path(), &fixture_key("tag.gettoptracks", &["mellow"])), TRACKS).unwrap();
        fs::write(
            fixture_path(dir.path(), &fixture_key("track.gettoptags", &["A", "One"])),
            TAGS,
        )
        .unwrap();
        dir
    }

    #[test]
    fn key_is_file_safe() {
        assert_eq!(
            fixture_key("track.gettoptags", &["AC/DC", "Back In  Black"]),
            "track.gettoptags__ac_dc__back_in_black"
        );
    }

    #[test]
    fn fixture_tracks_truncate_and_unknown_is_empty() {
        let dir = fixture_dir();
        let c = TagClient::new(TagServiceConfig::fixture(dir.path())).unwrap();
        let t = c.fetch_top_tracks("mellow", 2).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1], TrackRef { artist: "B".into(), title: "Two".into() });
        assert_eq!(c.fetch_top_tracks("mellow", 10).unwrap().len(), 3);
        assert!(c.fetch_top_tracks("zzz-unknown", 5).unwrap().is_empty());
        assert!(matches!(c.fetch_top_tracks("mellow", 0), Err(TagError::ZeroLimit)));
    }

    #[test]
    fn fixture_tags_sorted_descending() {
        let dir = fixture_dir();
        let c = TagClient::new(TagServiceConfig::fixture(dir.path())).unwrap();
        let tags = c.fetch_top_tags("A", "One", 20).unwrap();
        assert_eq!(tags.iter().map(|t| t.weight).collect::<Vec<_>>(), [100, 40, 7]);
        assert_eq!(tags[0].tag, "mellow");
        assert_eq!(c.fetch_top_tags("a", " one ", 1).unwrap(), vec![TagWeight::new("mellow", 100)]);
        assert!(c.fetch_top_tags("Nobody", "Nothing", 5).unwrap().is_empty());
    }

    #[test]
    fn live_needs_key() {
        let mut cfg = TagServiceConfig::fixture("x");
        cfg.mode = ServiceMode::Live;
        assert!(matches!(TagClient::new(cfg.clone()), Err(TagError::Config(_))));
        cfg.api_key = Some("  ".into());
        assert!(matches!(cfg.validate(), Err(TagError::Config(_))));
    }

    #[test]
    fn not_found_error_maps_to_empty() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            fixture_path(dir.path(), &fixture_key("tag.gettoptracks", &["gone"])),
            r#"{"error":6,"message":"Tag not found"}"#,
        )
        .unwrap();
        let c = TagClient::new(TagServiceConfig::fixture(dir.path())).unwrap();
        assert!(c.fetch_top_tracks("gone", 3).unwrap().is_empty());
    }

    #[test]
    fn single_object_and_string_artist() {
        let t = parse_top_tracks(r#"{"tracks":{"track":{"name":"Solo","artist":"X"}}}"#).unwrap();
        assert_eq!(t, vec![TrackRef { artist: "X".into(), title: "Solo".into() }]);
        assert!(parse_top_tags(r#"{"toptags":{"tag":[{"name":"a","count":"many"}]}}"#).is_err());
        assert!(parse_top_tracks("{}").is_err());
    }

    struct Flaky {
        failures: usize,
        calls: Arc<AtomicUsize>,
    }

    impl Transport for Flaky {
        fn get(&self, _: &str, params: &[(&str, &str)]) -> Result<String, TransportError> {
            assert!(params.contains(&("api_key", "k")));
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(TransportError {
                    message: "connection reset".into(),
                    retryable: true,
                })
            } else {
                Ok(TAGS.to_string())
            }
        }
    }

    fn live_cfg() -> TagServiceConfig {
        TagServiceConfig {
            api_key: Some("k".into()),
            base_url: "http://localhost.invalid/".into(),
            mode: ServiceMode::Live,
            fixture_dir: PathBuf::new(),
            rate_limit: 1000.0,
            backoff: Duration::ZERO,
        }
    }

    #[test]
    fn retries_transient_failures() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c = TagClient::with_transport(
            live_cfg(),
            Box::new(Flaky {
                failures: 2,
                calls: calls.clone(),
            }),
        )
        .unwrap();
        assert_eq!(c.fetch_top_tags("A", "One", 2).unwrap().len(), 2);
        assert_eq!(calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn gives_up_after_three_attempts() {
        let calls = Arc::new(AtomicUsize::new(0));
        let c = TagClient::with_transport(
            live_cfg(),
            Box::new(Flaky {
                failures: 10,
                calls: calls.clone(),
            }),
        )
        .unwrap();
        match c.fetch_top_tags("A", "One", 2) {
            Err(TagError::Fetch { attempts, .. }) => assert_eq!(attempts, MAX_ATTEMPTS),
            other => panic!("{other:?}"),
        }
        assert_eq!(calls.load(Ordering::SeqCst), MAX_ATTEMPTS);
    }

    #[test]
    fn rate_limiter_spaces_requests() {
        let l = RateLimiter::new(50.0);
        let start = Instant::now();
        for _ in 0..4 {
            l.admit();
        }
        assert!(start.elapsed() >= Duration::from_millis(55));
    }
}
