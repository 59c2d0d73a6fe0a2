//! On-disk bit stream formats.
//!
//! Two encodings, both exact round trips for any bit count:
//!
//! * `Raw`: a 16-byte header (magic `RTNB`, format version, bit count)
//!   followed by the packed payload, MSB-first per byte, zero-padded in
//!   the final byte.
//! * `Ascii`: one character per bit, `'0'` or `'1'`, wrapped in lines;
//!   whitespace is ignored on read.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use rtn_trng::BitStream;

/// First four bytes of every raw bit file.
pub const MAGIC: [u8; 4] = *b"RTNB";

/// Raw header format version, stored as a little-endian u32.
pub const VERSION: u32 = 1;

/// Total raw header size: magic, version, bit count.
pub const HEADER_LEN: usize = 16;

/// Column width for the Ascii encoding on write.
const ASCII_WRAP: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FileFormat {
    /// Packed binary with a 16-byte header.
    Raw,
    /// '0'/'1' characters, whitespace-tolerant.
    Ascii,
}

#[derive(Debug, Error)]
pub enum BitFileError {
    #[error("{action} {path}: {source}")]
    Io {
        action: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not a raw bit file (bad magic)")]
    BadMagic { path: PathBuf },
    #[error("{path} uses unsupported format version {found} (expected {VERSION})")]
    VersionMismatch { path: PathBuf, found: u32 },
    #[error("{path} is truncated: payload holds {have} bytes, header needs {need}")]
    TruncatedPayload { path: PathBuf, have: u64, need: u64 },
    #[error("{path} has {extra} bytes past the payload the header describes")]
    TrailingBytes { path: PathBuf, extra: u64 },
    #[error("{path}: illegal character {found:?} at byte {offset} (expected '0', '1' or whitespace)")]
    IllegalChar {
        path: PathBuf,
        found: char,
        offset: u64,
    },
}

/// Serializes a stream in the chosen format. Overwrites `path`.
pub fn write_bitstream(
    stream: &BitStream,
    path: &Path,
    format: FileFormat,
) -> Result<(), BitFileError> {
    let bytes = match format {
        FileFormat::Raw => encode_raw(stream),
        FileFormat::Ascii => encode_ascii(stream),
    };
    fs::write(path, bytes).map_err(|source| BitFileError::Io {
        action: "writing",
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a stream back; the format must match what was written.
pub fn read_bitstream(path: &Path, format: FileFormat) -> Result<BitStream, BitFileError> {
    let bytes = fs::read(path).map_err(|source| BitFileError::Io {
        action: "reading",
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        FileFormat::Raw => decode_raw(&bytes, path),
        FileFormat::Ascii => decode_ascii(&bytes, path),
    }
}

fn encode_raw(stream: &BitStream) -> Vec<u8> {
    let payload = stream.bytes();
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&stream.bit_count().to_le_bytes());
    out.extend_from_slice(payload);
    out
}

fn decode_raw(bytes: &[u8], path: &Path) -> Result<BitStream, BitFileError> {
    let path_buf = || path.to_path_buf();
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(BitFileError::BadMagic { path: path_buf() });
    }
    if bytes.len() < HEADER_LEN {
        return Err(BitFileError::TruncatedPayload {
            path: path_buf(),
            have: (bytes.len() - MAGIC.len()) as u64,
            need: (HEADER_LEN - MAGIC.len()) as u64,
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(BitFileError::VersionMismatch {
            path: path_buf(),
            found: version,
        });
    }
    let bit_count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let need = bit_count.div_ceil(8);
    let have = (bytes.len() - HEADER_LEN) as u64;
    if have < need {
        return Err(BitFileError::TruncatedPayload {
            path: path_buf(),
            have,
            need,
        });
    }
    if have > need {
        return Err(BitFileError::TrailingBytes {
            path: path_buf(),
            extra: have - need,
        });
    }
    // Exact length was just checked, and from_parts masks padding bits,
    // so a stray nonzero pad bit cannot smuggle data past the bit count.
    BitStream::from_parts(bit_count, bytes[HEADER_LEN..].to_vec()).map_err(|_| {
        BitFileError::TruncatedPayload {
            path: path_buf(),
            have,
            need,
        }
    })
}

fn encode_ascii(stream: &BitStream) -> Vec<u8> {
    let mut out = Vec::new();
    for i in 0..stream.bit_count() {
        out.push(b'0' + stream.bit(i));
        if (i + 1) % ASCII_WRAP as u64 == 0 {
            out.push(b'\n');
        }
    }
    if stream.bit_count() % ASCII_WRAP as u64 != 0 {
        out.push(b'\n');
    }
    out
}

fn decode_ascii(bytes: &[u8], path: &Path) -> Result<BitStream, BitFileError> {
    let mut stream = BitStream::new();
    for (offset, &byte) in bytes.iter().enumerate() {
        match byte {
            b'0' => stream.push_bit(0),
            b'1' => stream.push_bit(1),
            b if b.is_ascii_whitespace() => {}
            b => {
                return Err(BitFileError::IllegalChar {
                    path: path.to_path_buf(),
                    found: b as char,
                    offset: offset as u64,
                })
            }
        }
    }
    Ok(stream)
}
