//! Uniform entropy sources driving the simulation.
//!
//! Every source emits raw 32-bit words; the simulation consumes them as
//! uniform variates `u = word / 2^32`, so `u` always lies in `[0, 1)` on a
//! fixed 2^-32 grid regardless of where the words came from.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::PathBuf;
use std::str::FromStr;

use rand_core::{RngCore, SeedableRng};
use serde::Serialize;
use thiserror::Error;

use crate::qrng::{QrngBackend, QrngConfig, DEFAULT_QRNG_URL};

/// Scale factor between raw words and variates: 2^32.
pub const WORD_SCALE: f64 = 4_294_967_296.0;

/// Default number of uint16 values requested per QRNG refill.
pub const DEFAULT_QRNG_BATCH: usize = 1024;

/// Default on-disk cache for QRNG words.
pub const DEFAULT_QRNG_CACHE: &str = "qrng-cache.bin";

/// A uniform variate on `[0, 1)` with 32-bit resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformVariate(f64);

impl UniformVariate {
    /// Maps a raw word onto the `[0, 1)` grid.
    pub fn from_word(word: u32) -> Self {
        UniformVariate(f64::from(word) / WORD_SCALE)
    }

    /// Wraps an arbitrary value, rejecting anything outside `[0, 1)`.
    pub fn new(u: f64) -> Result<Self, BackendError> {
        if u.is_finite() && (0.0..1.0).contains(&u) {
            Ok(UniformVariate(u))
        } else {
            Err(BackendError::InvalidParameter(format!(
                "uniform variate {u} outside [0, 1)"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("invalid backend parameter: {0}")]
    InvalidParameter(String),
    #[error("replay source exhausted after {consumed} words")]
    ReplayExhausted { consumed: u64 },
    #[error("operating system entropy unavailable: {0}")]
    OsUnavailable(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed QRNG response: {0}")]
    MalformedResponse(String),
    #[error("QRNG service reported failure (rate limited?) after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("QRNG network failure after {attempts} attempts: {detail}")]
    Network { attempts: u32, detail: String },
}

/// A stream of raw 32-bit entropy words with consumption accounting.
pub trait EntropySource {
    /// Produces the next raw word.
    fn next_word(&mut self) -> Result<u32, BackendError>;

    /// Number of words handed out so far.
    fn consumed(&self) -> u64;

    /// Short human-readable description for report metadata.
    fn describe(&self) -> String;

    /// Produces the next uniform variate on `[0, 1)`.
    fn next_uniform(&mut self) -> Result<UniformVariate, BackendError> {
        Ok(UniformVariate::from_word(self.next_word()?))
    }
}

/// Unpacks `bit_count` bits from a source, MSB-first within each word.
pub fn raw_bits<B: EntropySource + ?Sized>(
    source: &mut B,
    bit_count: usize,
) -> Result<Vec<u8>, BackendError> {
    let mut bits = Vec::with_capacity(bit_count);
    'outer: while bits.len() < bit_count {
        let word = source.next_word()?;
        for shift in (0..32).rev() {
            bits.push(((word >> shift) & 1) as u8);
            if bits.len() == bit_count {
                break 'outer;
            }
        }
    }
    Ok(bits)
}

/// Fresh entropy from the operating system, read in large blocks.
pub struct OsEntropy {
    buf: Vec<u8>,
    pos: usize,
    consumed: u64,
}

const OS_REFILL_BYTES: usize = 1 << 18;

impl OsEntropy {
    pub fn new() -> Self {
        OsEntropy {
            buf: Vec::new(),
            pos: 0,
            consumed: 0,
        }
    }
}

impl Default for OsEntropy {
    fn default() -> Self {
        Self::new()
    }
}

impl EntropySource for OsEntropy {
    fn next_word(&mut self) -> Result<u32, BackendError> {
        if self.pos == self.buf.len() {
            self.buf.resize(OS_REFILL_BYTES, 0);
            getrandom::fill(&mut self.buf)
                .map_err(|e| BackendError::OsUnavailable(e.to_string()))?;
            self.pos = 0;
        }
        let bytes: [u8; 4] = self.buf[self.pos..self.pos + 4].try_into().unwrap();
        self.pos += 4;
        self.consumed += 1;
        Ok(u32::from_le_bytes(bytes))
    }

    fn consumed(&self) -> u64 {
        self.consumed
    }

    fn describe(&self) -> String {
        "os".to_string()
    }
}

/// Deterministic high-quality stream: ChaCha12 keyed from a 64-bit seed.
///
/// The word sequence for a given seed is identical across platforms and
/// releases, which makes full runs reproducible.
pub struct Seeded {
    rng: rand_chacha::ChaCha12Rng,
    seed: u64,
    consumed: u64,
}

impl Seeded {
    pub fn new(seed: u64) -> Self {
        Seeded {
            rng: rand_chacha::ChaCha12Rng::seed_from_u64(seed),
            seed,
            consumed: 0,
        }
    }
}

impl EntropySource for Seeded {
    fn next_word(&mut self) -> Result<u32, BackendError> {
        self.consumed += 1;
        Ok(self.rng.next_u32())
    }

    fn consumed(&self) -> u64 {
        self.consumed
    }

    fn describe(&self) -> String {
        format!("seeded:{}", self.seed)
    }
}

const LCG_MODULUS: u64 = 2_147_483_647; // 2^31 - 1
const LCG_MULTIPLIER: u64 = 16_807;

/// The classical minimal-standard Lehmer generator.
///
/// Deliberately weak: kept around as a negative control so the statistical
/// battery has something structured to chew on.
pub struct WeakLcg {
    state: u64,
    seed: u32,
    consumed: u64,
}

impl WeakLcg {
    /// Seed must lie in `[1, 2^31 - 2]`; the recurrence fixes 0 forever.
    pub fn new(seed: u32) -> Result<Self, BackendError> {
        if seed == 0 || u64::from(seed) >= LCG_MODULUS {
            return Err(BackendError::InvalidParameter(format!(
                "weak-lcg seed {seed} outside [1, 2^31 - 2]"
            )));
        }
        Ok(WeakLcg {
            state: u64::from(seed),
            seed,
            consumed: 0,
        })
    }
}

impl EntropySource for WeakLcg {
    fn next_word(&mut self) -> Result<u32, BackendError> {
        self.state = self.state * LCG_MULTIPLIER % LCG_MODULUS;
        // Spread the state range [1, m-1] onto the 32-bit word grid.
        let word = ((self.state - 1) << 32) / LCG_MODULUS;
        self.consumed += 1;
        Ok(word as u32)
    }

    fn consumed(&self) -> u64 {
        self.consumed
    }

    fn describe(&self) -> String {
        format!("weak-lcg:{}", self.seed)
    }
}

/// Replays big-endian 32-bit words from a file (e.g. a QRNG cache).
pub struct FileReplay {
    reader: BufReader<File>,
    path: PathBuf,
    consumed: u64,
}

impl FileReplay {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, BackendError> {
        let path = path.into();
        let file = File::open(&path).map_err(|source| BackendError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(FileReplay {
            reader: BufReader::new(file),
            path,
            consumed: 0,
        })
    }
}

impl EntropySource for FileReplay {
    fn next_word(&mut self) -> Result<u32, BackendError> {
        let mut bytes = [0u8; 4];
        match self.reader.read_exact(&mut bytes) {
            Ok(()) => {
                self.consumed += 1;
                Ok(u32::from_be_bytes(bytes))
            }
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                Err(BackendError::ReplayExhausted {
                    consumed: self.consumed,
                })
            }
            Err(source) => Err(BackendError::Io {
                path: self.path.clone(),
                source,
            }),
        }
    }

    fn consumed(&self) -> u64 {
        self.consumed
    }

    fn describe(&self) -> String {
        format!("file:{}", self.path.display())
    }
}

/// Declarative description of an entropy source, parseable from the
/// command line as `os`, `seeded:<seed>`, `weak-lcg:<seed>`, `qrng[:<url>]`
/// or `file:<path>`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendSpec {
    Os,
    Seeded {
        seed: u64,
    },
    WeakLcg {
        seed: u32,
    },
    QrngHttp {
        base_url: String,
        batch_size: usize,
        cache_path: PathBuf,
    },
    FileReplay {
        path: PathBuf,
    },
}

impl BackendSpec {
    /// Builds the source this spec describes.
    pub fn build(&self) -> Result<Box<dyn EntropySource>, BackendError> {
        match self {
            BackendSpec::Os => Ok(Box::new(OsEntropy::new())),
            BackendSpec::Seeded { seed } => Ok(Box::new(Seeded::new(*seed))),
            BackendSpec::WeakLcg { seed } => Ok(Box::new(WeakLcg::new(*seed)?)),
            BackendSpec::QrngHttp {
                base_url,
                batch_size,
                cache_path,
            } => {
                let config = QrngConfig::new(base_url.clone(), *batch_size, cache_path.clone());
                Ok(Box::new(QrngBackend::new(config)?))
            }
            BackendSpec::FileReplay { path } => Ok(Box::new(FileReplay::open(path.clone())?)),
        }
    }
}

impl FromStr for BackendSpec {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = match s.split_once(':') {
            Some((kind, rest)) => (kind, Some(rest)),
            None => (s, None),
        };
        let invalid = |msg: String| Err(BackendError::InvalidParameter(msg));
        match (kind, rest) {
            ("os", None) => Ok(BackendSpec::Os),
            ("os", Some(_)) => invalid("backend 'os' takes no argument".into()),
            ("seeded", Some(v)) => match v.parse() {
                Ok(seed) => Ok(BackendSpec::Seeded { seed }),
                Err(_) => invalid(format!("seeded backend needs a 64-bit seed, got '{v}'")),
            },
            ("seeded", None) => invalid("seeded backend needs a seed: seeded:<u64>".into()),
            ("weak-lcg", Some(v)) => match v.parse() {
                Ok(seed) => Ok(BackendSpec::WeakLcg { seed }),
                Err(_) => invalid(format!("weak-lcg backend needs a 31-bit seed, got '{v}'")),
            },
            ("weak-lcg", None) => invalid("weak-lcg backend needs a seed: weak-lcg:<u32>".into()),
            ("qrng", url) => Ok(BackendSpec::QrngHttp {
                base_url: url.unwrap_or(DEFAULT_QRNG_URL).to_string(),
                batch_size: DEFAULT_QRNG_BATCH,
                cache_path: PathBuf::from(DEFAULT_QRNG_CACHE),
            }),
            ("file", Some(p)) if !p.is_empty() => Ok(BackendSpec::FileReplay {
                path: PathBuf::from(p),
            }),
            ("file", _) => invalid("file backend needs a path: file:<path>".into()),
            _ => invalid(format!(
                "unknown backend '{s}' (expected os, seeded:<seed>, weak-lcg:<seed>, \
                 qrng[:<url>], file:<path>)"
            )),
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Os => write!(f, "os"),
            BackendSpec::Seeded { seed } => write!(f, "seeded:{seed}"),
            BackendSpec::WeakLcg { seed } => write!(f, "weak-lcg:{seed}"),
            BackendSpec::QrngHttp { base_url, .. } => write!(f, "qrng:{base_url}"),
            BackendSpec::FileReplay { path } => write!(f, "file:{}", path.display()),
        }
    }
}
