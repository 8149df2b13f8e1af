//! The HTTP client against a local stand-in server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use lumenloop_llm::http::RetryPolicy;
use lumenloop_llm::{ChatRequest, HttpProvider, Provider, ProviderError};

#[derive(Clone)]
enum Reply {
    Status(u16, &'static str),
    Hang,
}

#[derive(Debug, Clone)]
struct Seen {
    head: String,
    body: String,
}

/// Serves one scripted reply per connection; returns the base URL and a log of requests.
fn serve(replies: Vec<Reply>) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}/v1", listener.local_addr().unwrap());
    let log = Arc::new(Mutex::new(Vec::new()));
    let seen = Arc::clone(&log);
    thread::spawn(move || {
        for reply in replies {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                head.push_str(&line);
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            seen.lock().unwrap().push(Seen {
                head,
                body: String::from_utf8(body).unwrap(),
            });
            let mut stream = stream;
            match reply {
                Reply::Status(code, text) => {
                    let _ = write!(
                        stream,
                        "HTTP/1.1 {code} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                        text.len()
                    );
                }
                Reply::Hang => {
                    // Hold the connection open without answering.
                    thread::spawn(move || {
                        thread::sleep(Duration::from_millis(1000));
                        drop(stream);
                    });
                }
            }
        }
    });
    (base, log)
}

const OK: &str = r#"{"choices":[{"message":{"role":"assistant","content":"```controller\nlight = 1\n```"},"finish_reason":"stop"}]}"#;

fn provider(base: &str, timeout_ms: u64) -> HttpProvider {
    let mut p = HttpProvider::new(base, "/chat/completions", "sk-test", Duration::from_millis(timeout_ms)).unwrap();
    p.retry = RetryPolicy {
        max_attempts: 3,
        base_delay: Duration::from_millis(5),
        max_delay: Duration::from_millis(20),
    };
    p
}

fn request() -> ChatRequest {
    ChatRequest::new("gpt-4", 0.2, "problem", "go")
}

#[test]
fn posts_the_chat_body_with_bearer_auth() {
    let (base, log) = serve(vec![Reply::Status(200, OK)]);
    let r = provider(&base, 2000).complete(&request()).unwrap();
    assert!(r.content.contains("light = 1"));
    let seen = log.lock().unwrap();
    assert!(seen[0].head.starts_with("POST /v1/chat/completions "));
    assert!(seen[0].head.to_ascii_lowercase().contains("authorization: bearer sk-test"));
    let body: serde_json::Value = serde_json::from_str(&seen[0].body).unwrap();
    assert_eq!(body["model"], "gpt-4");
    assert_eq!(body["temperature"], 0.2);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][1]["content"], "go");
}

#[test]
fn rate_limit_then_success() {
    let (base, log) = serve(vec![Reply::Status(429, "{}"), Reply::Status(200, OK)]);
    assert!(provider(&base, 2000).complete(&request()).is_ok());
    assert_eq!(log.lock().unwrap().len(), 2);
}

#[test]
fn unauthorized_is_not_retried() {
    let (base, log) = serve(vec![Reply::Status(401, "{\"error\":\"bad key\"}"), Reply::Status(200, OK)]);
    let err = provider(&base, 2000).complete(&request()).unwrap_err();
    assert!(matches!(err, ProviderError::Auth { status: 401, .. }), "{err}");
    thread::sleep(Duration::from_millis(50));
    assert_eq!(log.lock().unwrap().len(), 1);
}

#[test]
fn server_errors_exhaust_three_attempts() {
    let (base, log) = serve(vec![Reply::Status(500, "{}"), Reply::Status(502, "{}"), Reply::Status(503, "{}")]);
    let err = provider(&base, 2000).complete(&request()).unwrap_err();
    assert!(matches!(err, ProviderError::Exhausted { attempts: 3, .. }), "{err}");
    assert_eq!(log.lock().unwrap().len(), 3);
}

#[test]
fn timeouts_are_retried() {
    let (base, log) = serve(vec![Reply::Hang, Reply::Status(200, OK)]);
    assert!(provider(&base, 200).complete(&request()).is_ok());
    assert_eq!(log.lock().unwrap().len(), 2);
}

#[test]
fn malformed_body() {
    let (base, _) = serve(vec![Reply::Status(200, "{\"choices\":[{}]}")]);
    let err = provider(&base, 2000).complete(&request()).unwrap_err();
    assert!(matches!(err, ProviderError::MalformedResponse(_)), "{err}");
}

#[test]
fn client_errors_are_not_retried() {
    let (base, log) = serve(vec![Reply::Status(400, "{}"), Reply::Status(200, OK)]);
    let err = provider(&base, 2000).complete(&request()).unwrap_err();
    assert!(matches!(err, ProviderError::Rejected { status: 400, .. }), "{err}");
    thread::sleep(Duration::from_millis(50));
    assert_eq!(log.lock().unwrap().len(), 1);
}
