//! Minimal in-process HTTP server speaking the embedding-service protocol.
//!
//! Used by the test suites and for local dry runs; it answers each
//! `POST /embed` by calling a handler with the request's texts.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::Value;

/// What the stub sends back for one request.
#[derive(Debug, Clone)]
pub enum StubReply {
    /// 200 with this JSON body.
    Json(Value),
    /// Bare status code with an empty body.
    Status(u16),
}

type Handler = dyn Fn(usize, &[String]) -> StubReply + Send + Sync;

#[derive(Debug, Clone, Default)]
pub struct StubRequest {
    pub texts: Vec<String>,
    pub authorization: Option<String>,
}

pub struct StubServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    log: Arc<Mutex<Vec<StubRequest>>>,
    thread: Option<JoinHandle<()>>,
}

impl StubServer {
    /// Starts on an ephemeral localhost port. The handler receives the
    /// zero-based request number and the texts of that request.
    pub fn start<F>(handler: F) -> std::io::Result<StubServer>
    where
        F: Fn(usize, &[String]) -> StubReply + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let log = Arc::new(Mutex::new(Vec::new()));
        let handler: Arc<Handler> = Arc::new(handler);
        let thread = {
            let stop = Arc::clone(&stop);
            let log = Arc::clone(&log);
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    if let Ok(stream) = stream {
                        let _ = serve_one(stream, &*handler, &log);
                    }
                }
            })
        };
        Ok(StubServer {
            addr,
            stop,
            log,
            thread: Some(thread),
        })
    }

    /// Stub answering every text with `vector_for(text)` as a pooled vector.
    pub fn pooled<F>(vector_for: F) -> std::io::Result<StubServer>
    where
        F: Fn(&str) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::start(move |_, texts| {
            let rows: Vec<Vec<f64>> = texts.iter().map(|t| vector_for(t)).collect();
            StubReply::Json(serde_json::json!({ "embeddings": rows }))
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn requests(&self) -> Vec<StubRequest> {
        self.log.lock().expect("stub log").clone()
    }

    pub fn request_count(&self) -> usize {
        self.log.lock().expect("stub log").len()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn serve_one(
    stream: TcpStream,
    handler: &Handler,
    log: &Mutex<Vec<StubRequest>>,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line)? == 0 {
        return Ok(());
    }
    let mut content_length = 0usize;
    let mut authorization = None;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            let value = value.trim();
            match name.trim().to_ascii_lowercase().as_str() {
                "content-length" => content_length = value.parse().unwrap_or(0),
                "authorization" => authorization = Some(value.to_string()),
                _ => {}
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;

    let mut out = stream;
    let is_embed = request_line.starts_with("POST ") && request_line.contains("/embed");
    let texts: Option<Vec<String>> = serde_json::from_slice::<Value>(&body).ok().and_then(|v| {
        v.get("texts")?
            .as_array()?
            .iter()
            .map(|t| t.as_str().map(str::to_string))
            .collect()
    });
    let (status, payload) = match (is_embed, texts) {
        (true, Some(texts)) => {
            let n = {
                let mut log = log.lock().expect("stub log");
                log.push(StubRequest {
                    texts: texts.clone(),
                    authorization,
                });
                log.len() - 1
            };
            match handler(n, &texts) {
                StubReply::Json(v) => (200, serde_json::to_vec(&v).unwrap_or_default()),
                StubReply::Status(code) => (code, Vec::new()),
            }
        }
        (true, None) => (400, Vec::new()),
        (false, _) => (404, Vec::new()),
    };
    write!(
        out,
        "HTTP/1.1 {status} {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        reason(status),
        payload.len()
    )?;
    out.write_all(&payload)?;
    out.flush()
}

fn reason(status: u16) -> &'static str {
    match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    }
}
