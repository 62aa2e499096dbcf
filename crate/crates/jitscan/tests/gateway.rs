use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use jitscan::gateway::{GatewayBackend, GatewayConfig};
use jitscan_core::agent::{BackendError, Decoding, ModelBackend};

struct Captured {
    request_line: String,
    headers: Vec<String>,
    body: serde_json::Value,
}

/// Serve exactly one request with the given status and body.
fn serve_once(status: &'static str, reply: &'static str) -> (String, thread::JoinHandle<Captured>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/complete", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut request_line = String::new();
        reader.read_line(&mut request_line).unwrap();
        let mut headers = Vec::new();
        let mut length = 0usize;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let line = line.trim_end().to_string();
            if line.is_empty() {
                break;
            }
            if let Some((k, v)) = line.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    length = v.trim().parse().unwrap();
                }
            }
            headers.push(line);
        }
        let mut body = vec![0; length];
        reader.read_exact(&mut body).unwrap();
        let mut stream = stream;
        write!(stream, "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}", reply.len()).unwrap();
        stream.flush().unwrap();
        Captured {
            request_line: request_line.trim_end().into(),
            headers,
            body: serde_json::from_slice(&body).unwrap(),
        }
    });
    (url, handle)
}

fn backend(url: String, key: Option<&str>) -> GatewayBackend {
    GatewayBackend::new(GatewayConfig {
        url,
        key: key.map(str::to_string),
        timeout: Duration::from_secs(10),
    })
}

#[test]
fn posts_prompt_and_reads_text() {
    let (url, server) = serve_once("200 OK", r#"{"text":"Final Answer: benign"}"#);
    let mut b = backend(url, Some("sekret"));
    let out = b.complete("look at this", &Decoding { temperature: 0.25 }).unwrap();
    assert_eq!(out, "Final Answer: benign");
    let req = server.join().unwrap();
    assert_eq!(req.request_line, "POST /v1/complete HTTP/1.1");
    assert!(
        req.headers
            .iter()
            .any(|h| h.eq_ignore_ascii_case("authorization: Bearer sekret")),
        "{:?}",
        req.headers
    );
    assert_eq!(
        req.body,
        serde_json::json!({"prompt": "look at this", "temperature": 0.25})
    );
}

#[test]
fn no_key_means_no_authorization_header() {
    let (url, server) = serve_once("200 OK", r#"{"text":"ok"}"#);
    backend(url, None).complete("p", &Decoding::default()).unwrap();
    let req = server.join().unwrap();
    assert!(!req
        .headers
        .iter()
        .any(|h| h.to_ascii_lowercase().starts_with("authorization")));
}

#[test]
fn error_status_is_a_protocol_error() {
    let (url, server) = serve_once("503 Service Unavailable", r#"{"error":"overloaded"}"#);
    let err = backend(url, None).complete("p", &Decoding::default()).unwrap_err();
    server.join().unwrap();
    match err {
        BackendError::Protocol(msg) => assert!(msg.starts_with("status 503") && msg.contains("overloaded"), "{msg}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn malformed_reply_is_a_protocol_error() {
    let (url, server) = serve_once("200 OK", r#"{"completion":"x"}"#);
    let err = backend(url, None).complete("p", &Decoding::default()).unwrap_err();
    server.join().unwrap();
    assert!(matches!(err, BackendError::Protocol(_)), "{err:?}");
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = backend(format!("http://127.0.0.1:{port}/"), None)
        .complete("p", &Decoding::default())
        .unwrap_err();
    assert!(
        matches!(err, BackendError::Transport(_) | BackendError::Timeout(_)),
        "{err:?}"
    );
}

#[test]
fn debug_output_hides_the_key() {
    let cfg = GatewayConfig {
        url: "http://x".into(),
        key: Some("sekret".into()),
        timeout: Duration::from_secs(1),
    };
    let shown = format!("{cfg:?}");
    assert!(!shown.contains("sekret") && shown.contains("redacted"));
}
