//! Chat-completion client shared by every experiment.
//!
//! A [`Gateway`] wraps one [`Backend`] with an append-only response cache,
//! retries with exponential backoff, and a process-wide bound on requests in
//! flight. Replay and mock backends make whole runs reproducible offline.

mod live;
mod mock;

use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::text::sha256_hex;

pub use live::{LiveBackend, DEFAULT_BASE_URL, DEFAULT_KEY_VAR};
pub use mock::{final_input_block, write_transcript, MockBackend, MockPolicy, Responder, ReplayBackend, TranscriptEntry};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request rejected with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("no recorded response for cache key {0}")]
    ReplayMiss(String),
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("cache: {0}")]
    Cache(String),
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, GatewayError::RateLimited { .. } | GatewayError::Transport(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Sampling {
    /// Send no sampling parameters and let the provider choose.
    #[default]
    ProviderDefault,
    Explicit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        temperature: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_tokens: Option<u32>,
    },
}

impl Sampling {
    pub fn greedy() -> Self {
        Sampling::Explicit { temperature: Some(0.0), max_tokens: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model_id: String,
    pub prompt: String,
    pub sampling: Sampling,
    pub cache_key: String,
}

impl CompletionRequest {
    pub fn new(model_id: &str, prompt: &str, sampling: Sampling) -> Self {
        CompletionRequest {
            model_id: model_id.to_string(),
            prompt: prompt.to_string(),
            sampling,
            cache_key: cache_key(model_id, prompt, &sampling),
        }
    }
}

/// Content hash of everything that determines a completion.
pub fn cache_key(model_id: &str, prompt: &str, sampling: &Sampling) -> String {
    let canonical = serde_json::json!({ "model": model_id, "prompt": prompt, "sampling": sampling });
    sha256_hex(canonical.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Replay,
    Mock,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Live => "live",
            BackendKind::Replay => "replay",
            BackendKind::Mock => "mock",
        })
    }
}

/// A successful completion. Failed requests surface as errors and are
/// never cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub request: CompletionRequest,
    pub response_text: String,
    pub latency_ms: u64,
    pub attempt_count: u32,
    pub backend: BackendKind,
}

pub trait Backend: Send + Sync {
    fn kind(&self) -> BackendKind;
    fn call(&self, request: &CompletionRequest) -> Result<String, GatewayError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 5, base_delay_ms: 500, max_delay_ms: 30_000 }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

/// Counting semaphore that also remembers the highest concurrency reached.
struct Limiter {
    bound: usize,
    active: Mutex<usize>,
    freed: Condvar,
    peak: AtomicUsize,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(bound: usize) -> Self {
        Limiter { bound: bound.max(1), active: Mutex::new(0), freed: Condvar::new(), peak: AtomicUsize::new(0) }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut active = self.active.lock().expect("limiter lock");
        while *active >= self.bound {
            active = self.freed.wait(active).expect("limiter lock");
        }
        *active += 1;
        self.peak.fetch_max(*active, Ordering::SeqCst);
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.active.lock().expect("limiter lock") -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Default)]
struct Cache {
    records: Vec<CompletionRecord>,
    index: HashMap<String, usize>,
    file: Option<File>,
}

/// Counters for assertions and run summaries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GatewayStats {
    /// Calls to [`Gateway::complete`].
    pub requests: usize,
    pub cache_hits: usize,
    /// Backend invocations, retries included.
    pub backend_calls: usize,
    /// Highest number of backend calls in flight at once.
    pub peak_in_flight: usize,
}

pub struct Gateway {
    backend: Box<dyn Backend>,
    model_id: String,
    sampling: Sampling,
    retry: RetryPolicy,
    limiter: Limiter,
    cache: Mutex<Cache>,
    cache_path: Option<PathBuf>,
    requests: AtomicUsize,
    hits: AtomicUsize,
    backend_calls: AtomicUsize,
}

impl Gateway {
    pub fn new(backend: Box<dyn Backend>, model_id: &str) -> Self {
        Gateway {
            backend,
            model_id: model_id.to_string(),
            sampling: Sampling::default(),
            retry: RetryPolicy::default(),
            limiter: Limiter::new(8),
            cache: Mutex::new(Cache::default()),
            cache_path: None,
            requests: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
            backend_calls: AtomicUsize::new(0),
        }
    }

    pub fn mock(policy: MockPolicy) -> Self {
        Gateway::new(Box::new(MockBackend::new(policy)), "mock")
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_parallelism(mut self, bound: usize) -> Self {
        self.limiter = Limiter::new(bound);
        self
    }

    /// Loads existing records from `path` and appends new ones to it.
    /// Later lines win when a key repeats; a torn final line is ignored.
    pub fn with_cache_file(mut self, path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let io = |e: std::io::Error| GatewayError::Cache(format!("{}: {e}", path.display()));
        let mut cache = Cache::default();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io)?);
            for line in reader.lines() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CompletionRecord>(&line) {
                    Ok(rec) => cache.insert(rec),
                    Err(e) => log::warn!("skipping unreadable cache line in {}: {e}", path.display()),
                }
            }
        } else if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        cache.file = Some(OpenOptions::new().create(true).append(true).open(path).map_err(io)?);
        self.cache = Mutex::new(cache);
        self.cache_path = Some(path.to_path_buf());
        Ok(self)
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    /// Bound on backend calls in flight.
    pub fn parallelism(&self) -> usize {
        self.limiter.bound
    }

    pub fn backend_kind(&self) -> BackendKind {
        self.backend.kind()
    }

    pub fn cache_path(&self) -> Option<&Path> {
        self.cache_path.as_deref()
    }

    pub fn request(&self, prompt: &str) -> CompletionRequest {
        CompletionRequest::new(&self.model_id, prompt, self.sampling)
    }

    pub fn complete_prompt(&self, prompt: &str) -> Result<CompletionRecord, GatewayError> {
        self.complete(&self.request(prompt))
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<CompletionRecord, GatewayError> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        if let Some(rec) = self.cached(&request.cache_key) {
            self.hits.fetch_add(1, Ordering::SeqCst);
            return Ok(rec);
        }
        let started = Instant::now();
        let mut attempt = 0;
        let text = loop {
            attempt += 1;
            let result = {
                let _permit = self.limiter.acquire();
                self.backend_calls.fetch_add(1, Ordering::SeqCst);
                self.backend.call(request)
            };
            match result {
                Ok(text) => break text,
                Err(e) if e.is_retryable() && attempt < self.retry.max_attempts => {
                    let wait = self.retry.delay(attempt);
                    log::warn!("attempt {attempt} failed ({e}); retrying in {wait:?}");
                    std::thread::sleep(wait);
                }
                Err(GatewayError::RateLimited { .. }) => return Err(GatewayError::RateLimited { attempts: attempt }),
                Err(e) => return Err(e),
            }
        };
        let latency_ms = match self.backend.kind() {
            BackendKind::Live => started.elapsed().as_millis() as u64,
            _ => 0,
        };
        let record = CompletionRecord {
            request: request.clone(),
            response_text: text,
            latency_ms,
            attempt_count: attempt,
            backend: self.backend.kind(),
        };
        self.store(record)
    }

    fn cached(&self, key: &str) -> Option<CompletionRecord> {
        let cache = self.cache.lock().expect("cache lock");
        cache.index.get(key).map(|&i| cache.records[i].clone())
    }

    /// First writer wins when two threads complete the same key.
    fn store(&self, record: CompletionRecord) -> Result<CompletionRecord, GatewayError> {
        let mut cache = self.cache.lock().expect("cache lock");
        if let Some(&i) = cache.index.get(&record.request.cache_key) {
            return Ok(cache.records[i].clone());
        }
        if let Some(file) = cache.file.as_mut() {
            let line = serde_json::to_string(&record).map_err(|e| GatewayError::Cache(e.to_string()))?;
            writeln!(file, "{line}").and_then(|_| file.flush()).map_err(|e| GatewayError::Cache(e.to_string()))?;
        }
        cache.insert(record.clone());
        Ok(record)
    }

    pub fn stats(&self) -> GatewayStats {
        GatewayStats {
            requests: self.requests.load(Ordering::SeqCst),
            cache_hits: self.hits.load(Ordering::SeqCst),
            backend_calls: self.backend_calls.load(Ordering::SeqCst),
            peak_in_flight: self.limiter.peak.load(Ordering::SeqCst),
        }
    }

    /// Everything completed so far, in completion order, as replay entries.
    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        let cache = self.cache.lock().expect("cache lock");
        cache
            .records
            .iter()
            .map(|r| TranscriptEntry {
                cache_key: r.request.cache_key.clone(),
                prompt: r.request.prompt.clone(),
                response: r.response_text.clone(),
            })
            .collect()
    }
}

/// Applies `f` to every item on up to `workers` threads, keeping input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(item) = items.get(i) else { break };
                *slots[i].lock().expect("result slot") = Some(f(item));
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("result slot").expect("every slot filled")).collect()
}

impl Cache {
    fn insert(&mut self, record: CompletionRecord) {
        match self.index.get(&record.request.cache_key) {
            Some(&i) => self.records[i] = record,
            None => {
                self.index.insert(record.request.cache_key.clone(), self.records.len());
                self.records.push(record);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    struct Flaky {
        failures: AtomicUsize,
        error: GatewayError,
    }

    impl Backend for Flaky {
        fn kind(&self) -> BackendKind {
            BackendKind::Mock
        }

        fn call(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
            if self.failures.load(Ordering::SeqCst) > 0 {
                self.failures.fetch_sub(1, Ordering::SeqCst);
                return Err(self.error.clone());
            }
            Ok(request.prompt.to_uppercase())
        }
    }

    fn no_wait() -> RetryPolicy {
        RetryPolicy { max_attempts: 3, base_delay_ms: 0, max_delay_ms: 0 }
    }

    #[test]
    fn cache_key_depends_on_every_field() {
        let a = cache_key("m", "p", &Sampling::ProviderDefault);
        assert_eq!(a, cache_key("m", "p", &Sampling::ProviderDefault));
        assert_ne!(a, cache_key("m2", "p", &Sampling::ProviderDefault));
        assert_ne!(a, cache_key("m", "p2", &Sampling::ProviderDefault));
        assert_ne!(a, cache_key("m", "p", &Sampling::greedy()));
    }

    #[test]
    fn second_request_is_a_cache_hit() {
        let backend = Flaky { failures: AtomicUsize::new(1), error: GatewayError::Transport("reset".into()) };
        let gw = Gateway::new(Box::new(backend), "m").with_retry(no_wait());
        let first = gw.complete_prompt("hi").unwrap();
        assert_eq!(first.attempt_count, 2);
        let second = gw.complete_prompt("hi").unwrap();
        assert_eq!(first, second);
        let s = gw.stats();
        assert_eq!((s.requests, s.cache_hits, s.backend_calls), (2, 1, 2));
    }

    #[test]
    fn auth_errors_are_not_retried_and_rate_limits_surface() {
        let backend = Flaky { failures: AtomicUsize::new(9), error: GatewayError::Auth("bad key".into()) };
        let gw = Gateway::new(Box::new(backend), "m").with_retry(no_wait());
        assert!(matches!(gw.complete_prompt("x"), Err(GatewayError::Auth(_))));
        assert_eq!(gw.stats().backend_calls, 1);

        let backend = Flaky { failures: AtomicUsize::new(9), error: GatewayError::RateLimited { attempts: 1 } };
        let gw = Gateway::new(Box::new(backend), "m").with_retry(no_wait());
        assert_eq!(gw.complete_prompt("x"), Err(GatewayError::RateLimited { attempts: 3 }));
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy { max_attempts: 9, base_delay_ms: 100, max_delay_ms: 350 };
        assert_eq!(p.delay(1), Duration::from_millis(100));
        assert_eq!(p.delay(2), Duration::from_millis(200));
        assert_eq!(p.delay(3), Duration::from_millis(350));
        assert_eq!(p.delay(80), Duration::from_millis(350));
    }

    #[test]
    fn cache_file_survives_restart() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/cache.jsonl");
        let gw = Gateway::mock(MockPolicy::Fixed("ok".into())).with_cache_file(&path).unwrap();
        gw.complete_prompt("a").unwrap();
        gw.complete_prompt("a").unwrap();
        drop(gw);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 1);
        let gw = Gateway::mock(MockPolicy::Fixed("changed".into())).with_cache_file(&path).unwrap();
        assert_eq!(gw.complete_prompt("a").unwrap().response_text, "ok");
        assert_eq!(gw.stats().backend_calls, 0);
    }

    struct Slow(AtomicUsize, AtomicUsize);

    impl Backend for Slow {
        fn kind(&self) -> BackendKind {
            BackendKind::Mock
        }

        fn call(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
            let now = self.0.fetch_add(1, Ordering::SeqCst) + 1;
            self.1.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(2));
            self.0.fetch_sub(1, Ordering::SeqCst);
            Ok(request.prompt.clone())
        }
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<usize> = (0..50).collect();
        assert_eq!(parallel_map(&items, 4, |x| x * 2), items.iter().map(|x| x * 2).collect::<Vec<_>>());
        assert!(parallel_map(&Vec::<u8>::new(), 4, |x| *x).is_empty());
    }

    #[test]
    fn in_flight_never_exceeds_bound() {
        let gw = Arc::new(
            Gateway::new(Box::new(Slow(AtomicUsize::new(0), AtomicUsize::new(0))), "m").with_parallelism(3),
        );
        std::thread::scope(|s| {
            for t in 0..12 {
                let gw = Arc::clone(&gw);
                s.spawn(move || {
                    for i in 0..10 {
                        gw.complete_prompt(&format!("{t}-{i}")).unwrap();
                    }
                });
            }
        });
        let stats = gw.stats();
        assert!(stats.peak_in_flight <= 3, "peak {}", stats.peak_in_flight);
        assert!(stats.peak_in_flight >= 2);
        assert_eq!(stats.backend_calls, 120);
    }
}
