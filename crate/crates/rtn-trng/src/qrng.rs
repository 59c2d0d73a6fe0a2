//! HTTP client for a remote quantum entropy service, with a local word
//! cache.
//!
//! The remote API hands out small rate-limited batches of uint16 samples,
//! far too slow to drive a full simulation live. The client therefore only
//! appends fetched words to a binary cache file (big-endian u32, the same
//! layout the file-replay backend reads), and [`QrngBackend`] serves
//! simulation draws from that cache, refilling on demand.

use std::fs::{File, OpenOptions};
use std::io::{BufReader, Read, Seek, SeekFrom, Write};
use std::path::PathBuf;
use std::thread;
use std::time::{Duration, Instant};

use serde::Deserialize;

use crate::backends::{BackendError, EntropySource, DEFAULT_QRNG_BATCH, DEFAULT_QRNG_CACHE};

/// Public endpoint of the Australian National University quantum random
/// number service.
pub const DEFAULT_QRNG_URL: &str = "https://qrng.anu.edu.au/API/jsonI.php";

/// Connection and retry policy for the remote service.
#[derive(Clone, Debug)]
pub struct QrngConfig {
    pub base_url: String,
    /// uint16 values requested per refill; must be even (two per word).
    pub batch_size: usize,
    pub cache_path: PathBuf,
    /// Minimum spacing between consecutive HTTP requests.
    pub rate_limit: Duration,
    /// First retry delay; doubles on each further retry.
    pub backoff_base: Duration,
    /// Retries after the initial attempt.
    pub max_retries: u32,
    pub timeout: Duration,
}

impl Default for QrngConfig {
    fn default() -> Self {
        QrngConfig {
            base_url: DEFAULT_QRNG_URL.to_string(),
            batch_size: DEFAULT_QRNG_BATCH,
            cache_path: PathBuf::from(DEFAULT_QRNG_CACHE),
            rate_limit: Duration::from_secs(60),
            backoff_base: Duration::from_secs(1),
            max_retries: 5,
            timeout: Duration::from_secs(30),
        }
    }
}

impl QrngConfig {
    /// Custom endpoint, batch size and cache location; default timing.
    pub fn new(base_url: String, batch_size: usize, cache_path: PathBuf) -> Self {
        QrngConfig {
            base_url,
            batch_size,
            cache_path,
            ..QrngConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.base_url.is_empty() {
            return Err(BackendError::InvalidParameter(
                "QRNG base URL must not be empty".into(),
            ));
        }
        if self.batch_size == 0 || self.batch_size % 2 != 0 {
            return Err(BackendError::InvalidParameter(format!(
                "QRNG batch size must be even and positive, got {}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct ApiResponse {
    success: bool,
    #[serde(rename = "type")]
    kind: String,
    length: i64,
    data: Vec<i64>,
}

/// A syntactically valid response: either a word batch or a refusal
/// (`success: false`, which the service uses for rate limiting).
#[derive(Debug)]
enum BatchOutcome {
    Words(Vec<u32>),
    Refused,
}

/// Parses and validates one response body. Contract violations (missing
/// fields, wrong sample type, length mismatch, out-of-range values) are
/// permanent errors, never retried.
fn parse_batch(body: &str) -> Result<BatchOutcome, BackendError> {
    let malformed = |msg: String| BackendError::MalformedResponse(msg);
    let resp: ApiResponse =
        serde_json::from_str(body).map_err(|e| malformed(format!("bad JSON: {e}")))?;
    if !resp.success {
        return Ok(BatchOutcome::Refused);
    }
    if resp.kind != "uint16" {
        return Err(malformed(format!(
            "expected sample type uint16, got '{}'",
            resp.kind
        )));
    }
    if resp.length != resp.data.len() as i64 {
        return Err(malformed(format!(
            "length field says {} but data holds {} values",
            resp.length,
            resp.data.len()
        )));
    }
    if resp.data.is_empty() || resp.data.len() % 2 != 0 {
        return Err(malformed(format!(
            "data must hold a positive even number of uint16 values, got {}",
            resp.data.len()
        )));
    }
    if let Some(bad) = resp.data.iter().find(|&&v| !(0..=65535).contains(&v)) {
        return Err(malformed(format!("value {bad} outside uint16 range")));
    }
    Ok(BatchOutcome::Words(pair_words(&resp.data)))
}

/// Combines uint16 samples pairwise into 32-bit words, first value high.
fn pair_words(data: &[i64]) -> Vec<u32> {
    data.chunks_exact(2)
        .map(|pair| ((pair[0] as u32) << 16) | pair[1] as u32)
        .collect()
}

/// One attempt's failure mode: transient failures are retried with
/// backoff, fatal ones abort the refill immediately.
enum FetchError {
    Net(String),
    Refused,
    Fatal(BackendError),
}

/// Fetches word batches and appends them to the cache file.
pub struct QrngClient {
    config: QrngConfig,
    http: reqwest::blocking::Client,
    last_request: Option<Instant>,
}

impl QrngClient {
    pub fn new(config: QrngConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::InvalidParameter(format!("HTTP client: {e}")))?;
        Ok(QrngClient {
            config,
            http,
            last_request: None,
        })
    }

    pub fn config(&self) -> &QrngConfig {
        &self.config
    }

    /// Requests one batch and appends it to the cache, returning the
    /// number of 32-bit words added. Honors the rate limit before every
    /// request and exponential backoff between retries; the error after
    /// exhausted retries reflects the last failure seen.
    pub fn refill(&mut self) -> Result<usize, BackendError> {
        let url = format!(
            "{}?length={}&type=uint16",
            self.config.base_url, self.config.batch_size
        );
        let attempts = self.config.max_retries + 1;
        let mut last_failure = FetchError::Net("no attempt made".into());
        for attempt in 0..attempts {
            if attempt > 0 {
                let factor = 1u32 << (attempt - 1).min(20);
                thread::sleep(self.config.backoff_base * factor);
            }
            self.honor_rate_limit();
            let outcome = self.fetch_once(&url);
            self.last_request = Some(Instant::now());
            match outcome {
                Ok(BatchOutcome::Words(words)) => {
                    self.append_to_cache(&words)?;
                    return Ok(words.len());
                }
                Ok(BatchOutcome::Refused) => last_failure = FetchError::Refused,
                Err(FetchError::Fatal(e)) => return Err(e),
                Err(e) => last_failure = e,
            }
        }
        Err(match last_failure {
            FetchError::Refused => BackendError::RateLimited { attempts },
            FetchError::Net(detail) => BackendError::Network { attempts, detail },
            FetchError::Fatal(e) => e,
        })
    }

    fn honor_rate_limit(&self) {
        if let Some(t) = self.last_request {
            let elapsed = t.elapsed();
            if elapsed < self.config.rate_limit {
                thread::sleep(self.config.rate_limit - elapsed);
            }
        }
    }

    fn fetch_once(&self, url: &str) -> Result<BatchOutcome, FetchError> {
        let resp = self
            .http
            .get(url)
            .send()
            .map_err(|e| FetchError::Net(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(FetchError::Net(format!("HTTP status {status}")));
        }
        let body = resp.text().map_err(|e| FetchError::Net(e.to_string()))?;
        match parse_batch(&body) {
            Ok(BatchOutcome::Refused) => Err(FetchError::Refused),
            Ok(words) => Ok(words),
            Err(e) => Err(FetchError::Fatal(e)),
        }
    }

    fn append_to_cache(&self, words: &[u32]) -> Result<(), BackendError> {
        let io_err = |source| BackendError::Io {
            path: self.config.cache_path.clone(),
            source,
        };
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.config.cache_path)
            .map_err(io_err)?;
        let mut bytes = Vec::with_capacity(words.len() * 4);
        for w in words {
            bytes.extend_from_slice(&w.to_be_bytes());
        }
        file.write_all(&bytes).map_err(io_err)?;
        file.flush().map_err(io_err)
    }
}

/// Entropy source backed by the cache file, refilling over HTTP whenever
/// the cache runs dry. Words are served strictly in file order, so a run
/// can later be replayed from the same cache with the file backend.
pub struct QrngBackend {
    client: QrngClient,
    reader: Option<BufReader<File>>,
    /// Byte offset of the next unserved word in the cache file.
    served_offset: u64,
    consumed: u64,
}

impl QrngBackend {
    /// Sets up the backend without touching the network; the first draw
    /// beyond the cached supply triggers a refill.
    pub fn new(config: QrngConfig) -> Result<Self, BackendError> {
        Ok(QrngBackend {
            client: QrngClient::new(config)?,
            reader: None,
            served_offset: 0,
            consumed: 0,
        })
    }

    fn open_reader(&mut self) -> Result<(), BackendError> {
        let path = &self.client.config().cache_path;
        match File::open(path) {
            Ok(mut file) => {
                file.seek(SeekFrom::Start(self.served_offset))
                    .map_err(|source| BackendError::Io {
                        path: path.clone(),
                        source,
                    })?;
                self.reader = Some(BufReader::new(file));
                Ok(())
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
            Err(source) => Err(BackendError::Io {
                path: path.clone(),
                source,
            }),
        }
    }

    fn next_cached_word(&mut self) -> Result<Option<u32>, BackendError> {
        if self.reader.is_none() {
            self.open_reader()?;
        }
        let Some(reader) = self.reader.as_mut() else {
            return Ok(None);
        };
        let mut buf = [0u8; 4];
        match reader.read_exact(&mut buf) {
            Ok(()) => {
                self.served_offset += 4;
                Ok(Some(u32::from_be_bytes(buf)))
            }
            // A partial trailing word only appears if someone else wrote
            // the file; rereading from served_offset after the next
            // append keeps alignment either way.
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                self.reader = None;
                Ok(None)
            }
            Err(source) => {
                self.reader = None;
                Err(BackendError::Io {
                    path: self.client.config().cache_path.clone(),
                    source,
                })
            }
        }
    }
}

impl EntropySource for QrngBackend {
    fn next_word(&mut self) -> Result<u32, BackendError> {
        loop {
            if let Some(word) = self.next_cached_word()? {
                self.consumed += 1;
                return Ok(word);
            }
            self.client.refill()?;
        }
    }

    fn consumed(&self) -> u64 {
        self.consumed
    }

    fn describe(&self) -> String {
        format!("qrng:{}", self.client.config().base_url)
    }
}
