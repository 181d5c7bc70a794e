//! Minimal HTTP/1.1 server with canned responses, for exercising redirect
//! resolution without touching the network.
//!
//! Routes match on the request path; the query string is ignored for
//! matching but reaches the handler untouched, so redirect targets with
//! campaign parameters round-trip exactly.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use url::Url;

#[derive(Debug, Clone)]
pub struct FixtureRoute {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: String,
    pub delay: Duration,
}

impl FixtureRoute {
    pub fn ok(body: impl Into<String>) -> Self {
        Self {
            status: 200,
            headers: vec![("Content-Type".into(), "text/html; charset=utf-8".into())],
            body: body.into(),
            delay: Duration::ZERO,
        }
    }

    pub fn redirect(status: u16, location: impl Into<String>) -> Self {
        Self {
            status,
            headers: vec![("Location".into(), location.into())],
            body: String::new(),
            delay: Duration::ZERO,
        }
    }

    pub fn status(status: u16) -> Self {
        Self {
            status,
            headers: Vec::new(),
            body: String::new(),
            delay: Duration::ZERO,
        }
    }

    pub fn delayed(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

pub struct FixtureServer {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
    requests: Arc<Mutex<Vec<String>>>,
}

fn reason(status: u16) -> &'static str {
    match status {
        200 => "OK",
        301 => "Moved Permanently",
        302 => "Found",
        303 => "See Other",
        307 => "Temporary Redirect",
        308 => "Permanent Redirect",
        404 => "Not Found",
        500 => "Internal Server Error",
        _ => "Status",
    }
}

fn serve(
    stream: TcpStream,
    routes: &HashMap<String, FixtureRoute>,
    requests: &Mutex<Vec<String>>,
) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header)? == 0 || header == "\r\n" || header == "\n" {
            break;
        }
    }
    let target = request_line
        .split_whitespace()
        .nth(1)
        .unwrap_or("/")
        .to_string();
    requests
        .lock()
        .unwrap_or_else(|p| p.into_inner())
        .push(target.clone());
    let path = target.split('?').next().unwrap_or("/");
    let route = routes
        .get(path)
        .cloned()
        .unwrap_or_else(|| FixtureRoute::status(404));
    if !route.delay.is_zero() {
        thread::sleep(route.delay);
    }
    let mut out = stream;
    let mut head = format!(
        "HTTP/1.1 {} {}\r\nContent-Length: {}\r\nConnection: close\r\n",
        route.status,
        reason(route.status),
        route.body.len()
    );
    for (name, value) in &route.headers {
        head.push_str(&format!("{name}: {value}\r\n"));
    }
    head.push_str("\r\n");
    out.write_all(head.as_bytes())?;
    out.write_all(route.body.as_bytes())?;
    out.flush()
}

impl FixtureServer {
    /// Starts serving `routes` on an ephemeral localhost port. Route values
    /// may contain `{base}`, replaced by the server's base URL (no trailing
    /// slash).
    pub fn start(routes: Vec<(String, FixtureRoute)>) -> io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let base = format!("http://{addr}");
        let routes: HashMap<String, FixtureRoute> = routes
            .into_iter()
            .map(|(path, mut route)| {
                for (_, value) in route.headers.iter_mut() {
                    *value = value.replace("{base}", &base);
                }
                route.body = route.body.replace("{base}", &base);
                (path, route)
            })
            .collect();
        let routes = Arc::new(routes);
        let shutdown = Arc::new(AtomicBool::new(false));
        let requests = Arc::new(Mutex::new(Vec::new()));
        let handle = {
            let shutdown = Arc::clone(&shutdown);
            let requests = Arc::clone(&requests);
            thread::spawn(move || {
                for stream in listener.incoming() {
                    if shutdown.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let routes = Arc::clone(&routes);
                    let requests = Arc::clone(&requests);
                    thread::spawn(move || {
                        if let Err(e) = serve(stream, &routes, &requests) {
                            log::debug!("fixture server connection error: {e}");
                        }
                    });
                }
            })
        };
        Ok(Self {
            addr,
            shutdown,
            handle: Some(handle),
            requests,
        })
    }

    /// Canned routes:
    ///
    /// - `/chain/0` .. `/chain/4`: five redirects (301, 302, 303, 307, 308)
    ///   ending at `/chain/5` (200).
    /// - `/a` -301-> `/b` -302-> `/c` (200).
    /// - `/loop/a` <-> `/loop/b`: endless 302 loop.
    /// - `/s/x7Kq`: shortener, 301 to `/landing/offer?utm_campaign=spring&uid=12345`.
    /// - `/meta`: 200 page with a meta refresh to `/c`.
    /// - `/slow`: answers after two seconds.
    /// - anything else: 404.
    pub fn with_default_routes() -> io::Result<Self> {
        let statuses = [301, 302, 303, 307, 308];
        let mut routes: Vec<(String, FixtureRoute)> = statuses
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                // alternate absolute and relative Location headers
                let target = if i % 2 == 0 {
                    format!("{{base}}/chain/{}", i + 1)
                } else {
                    format!("/chain/{}", i + 1)
                };
                (format!("/chain/{i}"), FixtureRoute::redirect(s, target))
            })
            .collect();
        routes.extend([
            ("/chain/5".into(), FixtureRoute::ok("<html>chain end</html>")),
            ("/a".into(), FixtureRoute::redirect(301, "{base}/b")),
            ("/b".into(), FixtureRoute::redirect(302, "/c")),
            ("/c".into(), FixtureRoute::ok("<html>landing</html>")),
            ("/loop/a".into(), FixtureRoute::redirect(302, "/loop/b")),
            ("/loop/b".into(), FixtureRoute::redirect(302, "/loop/a")),
            (
                "/s/x7Kq".into(),
                FixtureRoute::redirect(301, "{base}/landing/offer?utm_campaign=spring&uid=12345"),
            ),
            ("/landing/offer".into(), FixtureRoute::ok("<html>offer</html>")),
            (
                "/meta".into(),
                FixtureRoute::ok(
                    r#"<html><head><meta http-equiv="refresh" content="0; url=/c"></head></html>"#,
                ),
            ),
            (
                "/slow".into(),
                FixtureRoute::ok("<html>slow</html>").delayed(Duration::from_secs(2)),
            ),
        ]);
        Self::start(routes)
    }

    pub fn base(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn url(&self, path: &str) -> Url {
        Url::parse(&format!("{}{path}", self.base())).expect("valid fixture URL")
    }

    /// Request targets received so far (path plus query).
    pub fn requests(&self) -> Vec<String> {
        self.requests
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .clone()
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // unblock accept()
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}
