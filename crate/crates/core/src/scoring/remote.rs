//! Line-delimited JSON protocol for out-of-process models and classifiers.
//!
//! A batch is sent as one request object per line; the service answers with
//! one response object per request, matched by `id`. Request ids are
//! digests of the request content, so retries are idempotent.
//!
//! ```text
//! -> {"id":"..","task":"score","model_id":"m","prompt":"..","completion":".."}
//! <- {"id":"..","logprob_sum":-12.3,"token_count":7}
//! <- {"id":"..","error":{"message":"overloaded","retryable":true}}
//! ```

use super::{
    BackendKind, GenerationConfig, LanguageBackend, RawGeneration, RawScore, ScoringError,
};
use crate::digest::json_digest;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Arc, Mutex};
use std::time::Duration;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireTask {
    #[default]
    Score,
    Generate,
    Regard,
    Toxicity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub id: String,
    #[serde(default)]
    pub task: WireTask,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<GenerationConfig>,
}

impl WireRequest {
    fn new(task: WireTask, model_id: &str) -> Self {
        Self {
            id: String::new(),
            task,
            model_id: model_id.to_string(),
            prompt: None,
            completion: None,
            text: None,
            generation: None,
        }
    }

    fn with_id(mut self) -> Self {
        self.id = json_digest(&(
            &self.task,
            &self.model_id,
            &self.prompt,
            &self.completion,
            &self.text,
            &self.generation,
        ));
        self
    }

    pub fn score(model_id: &str, prompt: &str, completion: &str) -> Self {
        let mut r = Self::new(WireTask::Score, model_id);
        r.prompt = Some(prompt.to_string());
        r.completion = Some(completion.to_string());
        r.with_id()
    }

    pub fn generate(model_id: &str, prompt: &str, config: &GenerationConfig) -> Self {
        let mut r = Self::new(WireTask::Generate, model_id);
        r.prompt = Some(prompt.to_string());
        r.generation = Some(config.clone());
        r.with_id()
    }

    pub fn classify(task: WireTask, model_id: &str, text: &str) -> Self {
        let mut r = Self::new(task, model_id);
        r.text = Some(text.to_string());
        r.with_id()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub message: String,
    #[serde(default)]
    pub retryable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    #[serde(default)]
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logprob_sum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<RawGeneration>>,
    /// Category name to probability, for regard classification.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toxicity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<WireError>,
}

/// Moves a batch of request lines to a service and back.
pub trait Transport: Send + Sync {
    fn round_trip(&self, lines: &[String]) -> io::Result<Vec<String>>;
}

/// Opens one TCP connection per batch.
pub struct TcpTransport {
    addr: String,
    timeout: Duration,
}

impl TcpTransport {
    pub fn new(addr: impl Into<String>, timeout: Duration) -> Self {
        Self {
            addr: addr.into(),
            timeout,
        }
    }
}

fn exchange<W: Write, R: BufRead>(w: &mut W, r: &mut R, lines: &[String]) -> io::Result<Vec<String>> {
    for l in lines {
        w.write_all(l.as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    let mut out = Vec::with_capacity(lines.len());
    while out.len() < lines.len() {
        let mut buf = String::new();
        if r.read_line(&mut buf)? == 0 {
            return Err(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                format!("service closed after {} of {} responses", out.len(), lines.len()),
            ));
        }
        if !buf.trim().is_empty() {
            out.push(buf.trim_end().to_string());
        }
    }
    Ok(out)
}

impl Transport for TcpTransport {
    fn round_trip(&self, lines: &[String]) -> io::Result<Vec<String>> {
        let stream = TcpStream::connect(&self.addr)?;
        stream.set_read_timeout(Some(self.timeout))?;
        stream.set_write_timeout(Some(self.timeout))?;
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut writer = stream;
        exchange(&mut writer, &mut reader, lines)
    }
}

struct ChildIo {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// Talks to a long-running child process over stdin/stdout. The process is
/// respawned on the next batch after any I/O failure.
pub struct ProcessTransport {
    command: Vec<String>,
    io: Mutex<Option<ChildIo>>,
}

impl ProcessTransport {
    pub fn new(command: Vec<String>) -> io::Result<Self> {
        if command.is_empty() {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "empty command"));
        }
        Ok(Self {
            command,
            io: Mutex::new(None),
        })
    }

    fn spawn(&self) -> io::Result<ChildIo> {
        let mut child = Command::new(&self.command[0])
            .args(&self.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ChildIo {
            child,
            stdin,
            stdout,
        })
    }
}

impl Transport for ProcessTransport {
    fn round_trip(&self, lines: &[String]) -> io::Result<Vec<String>> {
        let mut guard = self.io.lock().expect("process transport lock");
        if guard.is_none() {
            *guard = Some(self.spawn()?);
        }
        let io = guard.as_mut().expect("spawned");
        let result = exchange(&mut io.stdin, &mut io.stdout, lines);
        if result.is_err() {
            if let Some(mut dead) = guard.take() {
                let _ = dead.child.kill();
                let _ = dead.child.wait();
            }
        }
        result
    }
}

impl Drop for ProcessTransport {
    fn drop(&mut self) {
        if let Ok(mut g) = self.io.lock() {
            if let Some(mut io) = g.take() {
                drop(io.stdin);
                let _ = io.child.wait();
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay_ms: 200,
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.base_delay_ms.saturating_mul(1u64 << attempt.min(16)))
    }
}

/// Client for the line protocol; usable as a scoring/generation backend and
/// by the classifier adapters in the regard module.
pub struct RemoteClient {
    model_id: String,
    transport: Arc<dyn Transport>,
    retry: RetryPolicy,
    batch_size: usize,
    context_limit: usize,
}

impl RemoteClient {
    pub fn new(model_id: impl Into<String>, transport: Arc<dyn Transport>) -> Self {
        Self {
            model_id: model_id.into(),
            transport,
            retry: RetryPolicy::default(),
            batch_size: 64,
            context_limit: 4096,
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_batch_size(mut self, n: usize) -> Self {
        self.batch_size = n.max(1);
        self
    }

    pub fn with_context_limit(mut self, n: usize) -> Self {
        self.context_limit = n;
        self
    }

    fn map_error(&self, e: WireError) -> ScoringError {
        match e.kind.as_deref() {
            Some("context_overflow") => ScoringError::ContextOverflow {
                tokens: e.tokens.unwrap_or(0),
                limit: self.context_limit,
            },
            Some("empty_completion") => ScoringError::EmptyCompletion,
            _ if e.retryable => ScoringError::BackendUnavailable(e.message),
            _ => ScoringError::Remote(e.message),
        }
    }

    /// Sends requests in batches, retrying transport failures and
    /// retryable per-item errors with exponential backoff.
    pub fn call(&self, requests: &[WireRequest]) -> Vec<Result<WireResponse, ScoringError>> {
        let mut out: Vec<Option<Result<WireResponse, ScoringError>>> =
            vec![None; requests.len()];
        for chunk_start in (0..requests.len()).step_by(self.batch_size) {
            let chunk_end = (chunk_start + self.batch_size).min(requests.len());
            let mut pending: Vec<usize> = (chunk_start..chunk_end).collect();
            let mut last_failure = String::from("no attempts made");
            for attempt in 0..self.retry.max_attempts.max(1) {
                if attempt > 0 {
                    std::thread::sleep(self.retry.delay(attempt - 1));
                }
                let lines: Vec<String> = pending
                    .iter()
                    .map(|&i| serde_json::to_string(&requests[i]).expect("serializable"))
                    .collect();
                let replies = match self.transport.round_trip(&lines) {
                    Ok(r) => r,
                    Err(e) => {
                        last_failure = e.to_string();
                        tracing::warn!(model = %self.model_id, attempt, error = %e, "transport failure");
                        continue;
                    }
                };
                let mut by_id: HashMap<String, WireResponse> = HashMap::new();
                for line in replies {
                    match serde_json::from_str::<WireResponse>(&line) {
                        Ok(r) => {
                            by_id.insert(r.id.clone(), r);
                        }
                        Err(e) => last_failure = format!("unparseable response: {e}"),
                    }
                }
                let mut still = Vec::new();
                for i in pending {
                    match by_id.remove(&requests[i].id) {
                        None => still.push(i),
                        Some(mut r) => match r.error.take() {
                            Some(e) if e.retryable => {
                                last_failure = e.message;
                                still.push(i);
                            }
                            Some(e) => out[i] = Some(Err(self.map_error(e))),
                            None => out[i] = Some(Ok(r)),
                        },
                    }
                }
                pending = still;
                if pending.is_empty() {
                    break;
                }
            }
            for i in pending {
                out[i] = Some(Err(ScoringError::BackendUnavailable(last_failure.clone())));
            }
        }
        out.into_iter().map(|r| r.expect("filled")).collect()
    }
}

impl LanguageBackend for RemoteClient {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn kind(&self) -> BackendKind {
        BackendKind::RemoteService
    }

    fn context_limit(&self) -> usize {
        self.context_limit
    }

    fn score(&self, prompt: &str, completion: &str) -> Result<RawScore, ScoringError> {
        self.score_batch(&[(prompt.to_string(), completion.to_string())])
            .pop()
            .expect("one result")
    }

    fn score_batch(&self, items: &[(String, String)]) -> Vec<Result<RawScore, ScoringError>> {
        let reqs: Vec<WireRequest> = items
            .iter()
            .map(|(p, c)| WireRequest::score(&self.model_id, p, c))
            .collect();
        self.call(&reqs)
            .into_iter()
            .map(|r| {
                let r = r?;
                match (r.logprob_sum, r.token_count) {
                    (Some(logprob_sum), Some(token_count)) => Ok(RawScore {
                        logprob_sum,
                        token_count,
                    }),
                    _ => Err(ScoringError::InvalidResponse(
                        "missing logprob_sum or token_count".into(),
                    )),
                }
            })
            .collect()
    }

    fn generate(
        &self,
        prompt: &str,
        config: &GenerationConfig,
    ) -> Result<Vec<RawGeneration>, ScoringError> {
        let req = WireRequest::generate(&self.model_id, prompt, config);
        let r = self.call(&[req]).pop().expect("one result")?;
        r.samples
            .ok_or_else(|| ScoringError::InvalidResponse("missing samples".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Answers score requests with `-(completion bytes)`; drops the first
    /// `flaky` connections without answering.
    fn spawn_server(flaky: usize) -> (String, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        let seen = Arc::new(AtomicUsize::new(0));
        let seen2 = seen.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let stream = stream.unwrap();
                let n = seen2.fetch_add(1, Ordering::SeqCst);
                if n < flaky {
                    drop(stream);
                    continue;
                }
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut w = stream;
                let mut line = String::new();
                while reader.read_line(&mut line).unwrap_or(0) > 0 {
                    let req: WireRequest = serde_json::from_str(line.trim()).unwrap();
                    let resp = match req.completion.as_deref() {
                        Some("boom") => WireResponse {
                            id: req.id,
                            error: Some(WireError {
                                message: "bad input".into(),
                                retryable: false,
                                kind: None,
                                tokens: None,
                            }),
                            ..Default::default()
                        },
                        Some(c) => WireResponse {
                            id: req.id,
                            logprob_sum: Some(-(c.len() as f64)),
                            token_count: Some(c.len()),
                            ..Default::default()
                        },
                        None => WireResponse::default(),
                    };
                    writeln!(w, "{}", serde_json::to_string(&resp).unwrap()).unwrap();
                    line.clear();
                }
            }
        });
        (addr, seen)
    }

    fn client(addr: String) -> RemoteClient {
        RemoteClient::new("remote-m", Arc::new(TcpTransport::new(addr, Duration::from_secs(5))))
            .with_retry(RetryPolicy {
                max_attempts: 4,
                base_delay_ms: 1,
            })
            .with_batch_size(2)
    }

    #[test]
    fn batch_round_trip() {
        let (addr, _) = spawn_server(0);
        let c = client(addr);
        let items: Vec<(String, String)> = ["a", "bb", "ccc"]
            .iter()
            .map(|s| ("p".to_string(), s.to_string()))
            .collect();
        let out = c.score_batch(&items);
        let sums: Vec<f64> = out.into_iter().map(|r| r.unwrap().logprob_sum).collect();
        assert_eq!(sums, [-1.0, -2.0, -3.0]);
    }

    #[test]
    fn retries_transport_failures() {
        let (addr, seen) = spawn_server(2);
        let c = client(addr);
        assert_eq!(c.score("p", "abcd").unwrap().token_count, 4);
        assert_eq!(seen.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn non_retryable_error_surfaces() {
        let (addr, _) = spawn_server(0);
        let c = client(addr);
        assert_eq!(
            c.score("p", "boom"),
            Err(ScoringError::Remote("bad input".into()))
        );
    }

    #[test]
    fn unreachable_is_backend_unavailable() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        drop(listener);
        let c = client(addr);
        assert!(matches!(
            c.score("p", "x"),
            Err(ScoringError::BackendUnavailable(_))
        ));
    }

    #[test]
    fn request_ids_are_content_digests() {
        let a = WireRequest::score("m", "p", "c");
        let b = WireRequest::score("m", "p", "c");
        let c = WireRequest::score("m", "p", "d");
        assert_eq!(a.id, b.id);
        assert_ne!(a.id, c.id);
        let line = serde_json::to_string(&a).unwrap();
        assert!(!line.contains("\"text\""));
    }
}
