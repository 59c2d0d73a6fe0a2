//! Contract tests for the remote-entropy client against a local scripted
//! HTTP server: pairing order, cache accounting, retry/backoff behavior,
//! and the error taxonomy.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use rtn_trng::backends::{BackendError, FileReplay};
use rtn_trng::qrng::{QrngBackend, QrngClient, QrngConfig};
use rtn_trng::EntropySource;

struct MockServer {
    base_url: String,
    requests: Arc<Mutex<Vec<String>>>,
}

impl MockServer {
    fn request_count(&self) -> usize {
        self.requests.lock().unwrap().len()
    }

    fn request_line(&self, i: usize) -> String {
        self.requests.lock().unwrap()[i].clone()
    }
}

/// One-connection-per-request server; response `i` answers request `i`,
/// and the last script repeats once the list runs out.
fn serve(scripts: Vec<String>) -> MockServer {
    assert!(!scripts.is_empty());
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base_url = format!("http://{}", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&requests);
    thread::spawn(move || {
        let mut served = 0usize;
        for conn in listener.incoming() {
            let Ok(mut stream) = conn else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            if reader.read_line(&mut line).is_err() || line.is_empty() {
                continue;
            }
            loop {
                let mut header = String::new();
                match reader.read_line(&mut header) {
                    Ok(0) => break,
                    Ok(_) if header == "\r\n" => break,
                    Ok(_) => {}
                    Err(_) => break,
                }
            }
            log.lock().unwrap().push(line.trim_end().to_string());
            let script = &scripts[served.min(scripts.len() - 1)];
            served += 1;
            let _ = stream.write_all(script.as_bytes());
            let _ = stream.flush();
        }
    });
    MockServer { base_url, requests }
}

fn ok_json(body: &str) -> String {
    format!(
        "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
        body.len(),
        body
    )
}

fn server_error() -> String {
    "HTTP/1.1 500 Internal Server Error\r\ncontent-length: 0\r\nconnection: close\r\n\r\n"
        .to_string()
}

fn batch_body(values: &[u32]) -> String {
    let list = values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",");
    format!(
        r#"{{"success":true,"type":"uint16","length":{},"data":[{}]}}"#,
        values.len(),
        list
    )
}

fn refused_body() -> String {
    r#"{"success":false,"type":"uint16","length":0,"data":[]}"#.to_string()
}

/// No sleeps: immediate retries, no request spacing.
fn fast_config(base_url: &str, batch_size: usize, cache: PathBuf) -> QrngConfig {
    QrngConfig {
        base_url: base_url.to_string(),
        batch_size,
        cache_path: cache,
        rate_limit: Duration::ZERO,
        backoff_base: Duration::ZERO,
        max_retries: 5,
        timeout: Duration::from_secs(5),
    }
}

fn temp_cache() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.bin");
    (dir, path)
}

#[test]
fn refill_pairs_high_first_and_caches_big_endian() {
    let server = serve(vec![ok_json(&batch_body(&[0, 0, 65535, 65535, 0x12, 0x34]))]);
    let (_dir, cache) = temp_cache();
    let mut client = QrngClient::new(fast_config(&server.base_url, 6, cache.clone())).unwrap();
    assert_eq!(client.refill().unwrap(), 3);
    let bytes = std::fs::read(&cache).unwrap();
    assert_eq!(
        bytes,
        [0x00, 0x00, 0x00, 0x00, 0xFF, 0xFF, 0xFF, 0xFF, 0x00, 0x12, 0x00, 0x34]
    );
    assert_eq!(server.request_count(), 1);
    let line = server.request_line(0);
    assert!(line.starts_with("GET "), "{line}");
    assert!(line.contains("length=6"), "{line}");
    assert!(line.contains("type=uint16"), "{line}");
}

#[test]
fn refills_append_in_order_byte_exact() {
    let refills = 10;
    let batches: Vec<Vec<u32>> = (0..refills)
        .map(|i| vec![2 * i, 2 * i + 1, 40_000 + i, 60_000 + i])
        .collect();
    let scripts = batches.iter().map(|b| ok_json(&batch_body(b))).collect();
    let server = serve(scripts);
    let (_dir, cache) = temp_cache();
    let mut client = QrngClient::new(fast_config(&server.base_url, 4, cache.clone())).unwrap();

    let mut expected = Vec::new();
    for batch in &batches {
        assert_eq!(client.refill().unwrap(), 2);
        for pair in batch.chunks(2) {
            expected.extend_from_slice(&((pair[0] << 16) | pair[1]).to_be_bytes());
        }
        assert_eq!(std::fs::read(&cache).unwrap(), expected, "cache after a refill");
    }
    assert_eq!(server.request_count() as u32, refills);

    // The cache replays through the file backend in the same order.
    let mut replay = FileReplay::open(cache).unwrap();
    for batch in &batches {
        for pair in batch.chunks(2) {
            assert_eq!(replay.next_word().unwrap(), (pair[0] << 16) | pair[1]);
        }
    }
}

#[test]
fn refusal_retries_then_reports_rate_limited() {
    let server = serve(vec![ok_json(&refused_body())]);
    let (_dir, cache) = temp_cache();
    let mut config = fast_config(&server.base_url, 4, cache.clone());
    config.max_retries = 2;
    let mut client = QrngClient::new(config).unwrap();
    match client.refill().unwrap_err() {
        BackendError::RateLimited { attempts } => assert_eq!(attempts, 3),
        other => panic!("expected rate-limited, got {other}"),
    }
    assert_eq!(server.request_count(), 3, "initial attempt plus two retries");
    assert!(!cache.exists(), "cache must stay untouched");
}

#[test]
fn http_failure_retries_then_reports_network() {
    let server = serve(vec![server_error()]);
    let (_dir, cache) = temp_cache();
    let mut config = fast_config(&server.base_url, 4, cache);
    config.max_retries = 2;
    let mut client = QrngClient::new(config).unwrap();
    match client.refill().unwrap_err() {
        BackendError::Network { attempts, detail } => {
            assert_eq!(attempts, 3);
            assert!(detail.contains("500"), "{detail}");
        }
        other => panic!("expected network error, got {other}"),
    }
    assert_eq!(server.request_count(), 3);
}

#[test]
fn unreachable_host_reports_network() {
    // Bind then drop to find a port with nothing listening.
    let url = {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        format!("http://{}", listener.local_addr().unwrap())
    };
    let (_dir, cache) = temp_cache();
    let mut config = fast_config(&url, 4, cache);
    config.max_retries = 1;
    let mut client = QrngClient::new(config).unwrap();
    match client.refill().unwrap_err() {
        BackendError::Network { attempts, .. } => assert_eq!(attempts, 2),
        other => panic!("expected network error, got {other}"),
    }
}

#[test]
fn malformed_value_fails_fast_without_retry() {
    let server = serve(vec![ok_json(
        r#"{"success":true,"type":"uint16","length":2,"data":[70000,1]}"#,
    )]);
    let (_dir, cache) = temp_cache();
    let mut client = QrngClient::new(fast_config(&server.base_url, 2, cache.clone())).unwrap();
    assert!(matches!(
        client.refill().unwrap_err(),
        BackendError::MalformedResponse(_)
    ));
    assert_eq!(server.request_count(), 1, "contract violations are not retried");
    assert!(!cache.exists());
}

#[test]
fn malformed_missing_field_fails_fast() {
    let server = serve(vec![ok_json(r#"{"success":true,"type":"uint16","data":[1,2]}"#)]);
    let (_dir, cache) = temp_cache();
    let mut client = QrngClient::new(fast_config(&server.base_url, 2, cache)).unwrap();
    assert!(matches!(
        client.refill().unwrap_err(),
        BackendError::MalformedResponse(_)
    ));
    assert_eq!(server.request_count(), 1);
}

#[test]
fn backoff_delays_accumulate_before_success() {
    let server = serve(vec![
        server_error(),
        ok_json(&refused_body()),
        ok_json(&batch_body(&[1, 2])),
    ]);
    let (_dir, cache) = temp_cache();
    let mut config = fast_config(&server.base_url, 2, cache);
    config.backoff_base = Duration::from_millis(30);
    let mut client = QrngClient::new(config).unwrap();
    let start = Instant::now();
    assert_eq!(client.refill().unwrap(), 1);
    // Sleeps of 30ms and 60ms precede the second and third attempts.
    assert!(
        start.elapsed() >= Duration::from_millis(90),
        "backoff too short: {:?}",
        start.elapsed()
    );
    assert_eq!(server.request_count(), 3);
}

#[test]
fn rate_limit_spaces_consecutive_refills() {
    let server = serve(vec![
        ok_json(&batch_body(&[1, 2])),
        ok_json(&batch_body(&[3, 4])),
    ]);
    let (_dir, cache) = temp_cache();
    let mut config = fast_config(&server.base_url, 2, cache);
    config.rate_limit = Duration::from_millis(80);
    let mut client = QrngClient::new(config).unwrap();
    let start = Instant::now();
    client.refill().unwrap();
    client.refill().unwrap();
    assert!(
        start.elapsed() >= Duration::from_millis(80),
        "second request came too soon: {:?}",
        start.elapsed()
    );
}

#[test]
fn backend_refills_on_demand_and_serves_in_order() {
    let server = serve(vec![
        ok_json(&batch_body(&[0x0001, 0x0002, 0x0003, 0x0004])),
        ok_json(&batch_body(&[0x0005, 0x0006, 0x0007, 0x0008])),
    ]);
    let (_dir, cache) = temp_cache();
    let mut backend =
        QrngBackend::new(fast_config(&server.base_url, 4, cache.clone())).unwrap();
    assert_eq!(server.request_count(), 0, "construction is offline");

    assert_eq!(backend.next_word().unwrap(), 0x0001_0002);
    assert_eq!(server.request_count(), 1);
    assert_eq!(backend.next_word().unwrap(), 0x0003_0004);
    assert_eq!(backend.next_word().unwrap(), 0x0005_0006);
    assert_eq!(server.request_count(), 2);
    assert_eq!(backend.next_word().unwrap(), 0x0007_0008);
    assert_eq!(server.request_count(), 2, "still serving the second batch");
    assert_eq!(backend.consumed(), 4);
    assert!(backend.describe().starts_with("qrng:http://127.0.0.1:"));
}

#[test]
fn backend_serves_existing_cache_before_any_request() {
    let server = serve(vec![ok_json(&batch_body(&[9, 9]))]);
    let (_dir, cache) = temp_cache();
    std::fs::write(&cache, [0xDE, 0xAD, 0xBE, 0xEF, 0x00, 0x00, 0x00, 0x2A]).unwrap();
    let mut backend =
        QrngBackend::new(fast_config(&server.base_url, 2, cache)).unwrap();
    assert_eq!(backend.next_word().unwrap(), 0xDEAD_BEEF);
    assert_eq!(backend.next_word().unwrap(), 42);
    assert_eq!(server.request_count(), 0);
    assert_eq!(backend.next_word().unwrap(), 0x0009_0009);
    assert_eq!(server.request_count(), 1);
}

#[test]
fn backend_with_empty_cache_surfaces_refill_errors() {
    let server = serve(vec![ok_json(&refused_body())]);
    let (_dir, cache) = temp_cache();
    let mut config = fast_config(&server.base_url, 2, cache);
    config.max_retries = 1;
    let mut backend = QrngBackend::new(config).unwrap();
    assert!(matches!(
        backend.next_word().unwrap_err(),
        BackendError::RateLimited { attempts: 2 }
    ));
}
