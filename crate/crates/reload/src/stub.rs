//! A controllable in-process HTTP server used as a test oracle and demo
//! target: every route has a scripted status, body, and artificial delay, so
//! driver-side measurements can be checked against known ground truth.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

/// What the stub answers on one route.
#[derive(Debug, Clone)]
pub struct RouteBehavior {
    pub status: u16,
    pub body: String,
    pub delay: Duration,
}

impl RouteBehavior {
    pub fn ok(body: &str) -> Self {
        Self { status: 200, body: body.to_string(), delay: Duration::ZERO }
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_status(mut self, status: u16) -> Self {
        self.status = status;
        self
    }
}

struct Shared {
    routes: BTreeMap<String, RouteBehavior>,
    fallback: RouteBehavior,
    shutting_down: AtomicBool,
    requests_served: AtomicU64,
}

/// A stub system under test on a loopback port.
pub struct StubSut {
    addr: SocketAddr,
    shared: Arc<Shared>,
    accept_thread: Option<JoinHandle<()>>,
}

impl StubSut {
    /// Starts the stub on an ephemeral loopback port. Routes are matched on
    /// the exact path with any query string ignored; everything else gets the
    /// fallback behavior.
    pub fn start(
        routes: BTreeMap<String, RouteBehavior>,
        fallback: RouteBehavior,
    ) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared {
            routes,
            fallback,
            shutting_down: AtomicBool::new(false),
            requests_served: AtomicU64::new(0),
        });
        let accept_shared = Arc::clone(&shared);
        let accept_thread = std::thread::spawn(move || {
            let mut workers: Vec<JoinHandle<()>> = Vec::new();
            for conn in listener.incoming() {
                if accept_shared.shutting_down.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = conn else { continue };
                let conn_shared = Arc::clone(&accept_shared);
                workers.push(std::thread::spawn(move || serve_connection(stream, &conn_shared)));
            }
            for w in workers {
                let _ = w.join();
            }
        });
        Ok(Self { addr, shared, accept_thread: Some(accept_thread) })
    }

    /// A stub answering 200 "ok" on every path, each response delayed by
    /// `delay`.
    pub fn uniform(delay: Duration) -> std::io::Result<Self> {
        Self::start(BTreeMap::new(), RouteBehavior::ok("ok").with_delay(delay))
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn requests_served(&self) -> u64 {
        self.shared.requests_served.load(Ordering::SeqCst)
    }
}

impl Drop for StubSut {
    fn drop(&mut self) {
        self.shared.shutting_down.store(true, Ordering::SeqCst);
        // Unblock the accept loop with one last connection to ourselves.
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
    }
}

fn serve_connection(stream: TcpStream, shared: &Shared) {
    let _ = stream.set_read_timeout(Some(Duration::from_secs(5)));
    let mut reader = BufReader::new(stream);
    loop {
        let mut request_line = String::new();
        if reader.read_line(&mut request_line).map(|n| n == 0).unwrap_or(true) {
            return;
        }
        let mut parts = request_line.split_whitespace();
        let _method = parts.next().unwrap_or("");
        let target = parts.next().unwrap_or("/");
        let path = target.split('?').next().unwrap_or("/").to_string();

        // Drain headers; remember the body length so it can be consumed.
        let mut content_length = 0usize;
        loop {
            let mut line = String::new();
            if reader.read_line(&mut line).map(|n| n == 0).unwrap_or(true) {
                return;
            }
            let line = line.trim_end();
            if line.is_empty() {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                content_length = v.trim().parse().unwrap_or(0);
            }
        }
        if content_length > 0 {
            let mut body = vec![0u8; content_length.min(1 << 20)];
            if reader.read_exact(&mut body).is_err() {
                return;
            }
        }

        let behavior = shared.routes.get(&path).unwrap_or(&shared.fallback);
        if !behavior.delay.is_zero() {
            std::thread::sleep(behavior.delay);
        }
        let reason = match behavior.status {
            200 => "OK",
            404 => "Not Found",
            500 => "Internal Server Error",
            _ => "Response",
        };
        let response = format!(
            "HTTP/1.1 {} {}\r\nContent-Length: {}\r\nContent-Type: text/plain\r\nConnection: close\r\n\r\n{}",
            behavior.status,
            reason,
            behavior.body.len(),
            behavior.body
        );
        shared.requests_served.fetch_add(1, Ordering::SeqCst);
        if reader.get_mut().write_all(response.as_bytes()).is_err() {
            return;
        }
        let _ = reader.get_mut().flush();
        // Connection: close was announced; stop serving this stream.
        return;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stub_answers_scripted_routes() {
        let mut routes = BTreeMap::new();
        routes.insert("/hello".to_string(), RouteBehavior::ok("hi there"));
        routes.insert("/boom".to_string(), RouteBehavior::ok("err").with_status(500));
        let stub = StubSut::start(routes, RouteBehavior::ok("fallback")).unwrap();

        let body = ureq::get(format!("{}/hello", stub.base_url()))
            .call()
            .unwrap()
            .body_mut()
            .read_to_string()
            .unwrap();
        assert_eq!(body, "hi there");

        let agent: ureq::Agent =
            ureq::Agent::config_builder().http_status_as_error(false).build().into();
        let res = agent.get(format!("{}/boom?q=1", stub.base_url())).call().unwrap();
        assert_eq!(res.status().as_u16(), 500);

        let res = agent.get(format!("{}/other", stub.base_url())).call().unwrap();
        assert_eq!(res.status().as_u16(), 200);
        assert_eq!(stub.requests_served(), 3);
    }

    #[test]
    fn stub_shuts_down_cleanly() {
        let stub = StubSut::uniform(Duration::ZERO).unwrap();
        let url = stub.base_url();
        drop(stub);
        // The port is released; a fresh connection must fail or get no answer.
        let addr: SocketAddr = url.strip_prefix("http://").unwrap().parse().unwrap();
        let outcome = TcpStream::connect_timeout(&addr, Duration::from_millis(200));
        if let Ok(mut conn) = outcome {
            let _ = conn.write_all(b"GET / HTTP/1.1\r\nHost: x\r\n\r\n");
            let mut buf = String::new();
            let _ = conn.set_read_timeout(Some(Duration::from_millis(200)));
            let n = conn.read_to_string(&mut buf).unwrap_or(0);
            assert_eq!(n, 0, "stub still serving after drop");
        }
    }
}
