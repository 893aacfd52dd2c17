//! Clients for models hosted outside this process.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use parking_lot::Mutex;

use super::protocol::{Request, Response};
use super::{Label, PredictError, Predictor, Probe};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RemoteOptions {
    /// Requests sent before waiting for an answer.
    pub max_in_flight: usize,
    /// Longest wait for any single response.
    pub timeout: Duration,
}

impl Default for RemoteOptions {
    fn default() -> Self {
        Self {
            max_in_flight: 16,
            timeout: Duration::from_secs(120),
        }
    }
}

fn batch_error(index: usize, source: PredictError) -> PredictError {
    PredictError::Batch {
        index,
        source: Box::new(source),
    }
}

fn unbatch(e: PredictError) -> PredictError {
    match e {
        PredictError::Batch { source, .. } => *source,
        other => other,
    }
}

struct Connection {
    stdin: ChildStdin,
    responses: Receiver<Result<Response, PredictError>>,
}

/// Talks newline-delimited JSON to a child process over its stdin/stdout.
///
/// Responses may come back in any order; they are matched by id. One batch
/// is in progress at a time per child.
pub struct ExecPredictor {
    conn: Mutex<Option<Connection>>,
    child: Mutex<Child>,
    next_id: AtomicU64,
    options: RemoteOptions,
}

impl ExecPredictor {
    pub fn spawn(argv: &[String], options: RemoteOptions) -> Result<Self, PredictError> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| PredictError::Transport("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| PredictError::Transport(format!("cannot start {program}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let item = match line {
                    Ok(line) if line.trim().is_empty() => continue,
                    Ok(line) => Response::parse(&line),
                    Err(e) => Err(PredictError::Transport(e.to_string())),
                };
                if tx.send(item).is_err() {
                    return;
                }
            }
            let _ = tx.send(Err(PredictError::Transport(
                "predictor closed its output".into(),
            )));
        });
        Ok(Self {
            conn: Mutex::new(Some(Connection {
                stdin,
                responses: rx,
            })),
            child: Mutex::new(child),
            next_id: AtomicU64::new(0),
            options,
        })
    }
}

impl Predictor for ExecPredictor {
    fn predict(&self, probe: &Probe<'_>) -> Result<Label, PredictError> {
        self.predict_batch(std::slice::from_ref(probe))
            .map(|mut v| v.remove(0))
            .map_err(unbatch)
    }

    fn predict_batch(&self, probes: &[Probe<'_>]) -> Result<Vec<Label>, PredictError> {
        if probes.is_empty() {
            return Err(PredictError::EmptyBatch);
        }
        let mut guard = self.conn.lock();
        let conn = guard
            .as_mut()
            .ok_or_else(|| PredictError::Transport("connection closed".into()))?;

        let ids: Vec<String> = probes
            .iter()
            .map(|p| {
                let n = self.next_id.fetch_add(1, Ordering::Relaxed);
                format!("{}:{n}", p.image_id)
            })
            .collect();
        let index_of: HashMap<&str, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut labels: Vec<Option<Label>> = vec![None; probes.len()];
        let (mut sent, mut received) = (0, 0);
        let limit = self.options.max_in_flight.max(1);

        while received < probes.len() {
            while sent < probes.len() && sent - received < limit {
                let image = probes[sent]
                    .render()
                    .map_err(|e| batch_error(sent, e.into()))?;
                let line = Request::new(ids[sent].clone(), &image).to_line();
                conn.stdin
                    .write_all(line.as_bytes())
                    .and_then(|_| conn.stdin.flush())
                    .map_err(|e| PredictError::Transport(e.to_string()))?;
                sent += 1;
            }
            let response = match conn.responses.recv_timeout(self.options.timeout) {
                Ok(item) => item?,
                Err(RecvTimeoutError::Timeout) => {
                    return Err(PredictError::Timeout(self.options.timeout))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(PredictError::Transport("reader thread exited".into()))
                }
            };
            let index = *index_of.get(response.id.as_str()).ok_or_else(|| {
                PredictError::Malformed(format!("unexpected response id {:?}", response.id))
            })?;
            if labels[index].is_some() {
                return Err(PredictError::Malformed(format!(
                    "duplicate response for {:?}",
                    response.id
                )));
            }
            labels[index] = Some(response.into_label().map_err(|e| batch_error(index, e))?);
            received += 1;
        }
        Ok(labels.into_iter().map(Option::unwrap).collect())
    }
}

impl Drop for ExecPredictor {
    fn drop(&mut self) {
        // closing stdin asks the child to shut down
        drop(self.conn.lock().take());
        let mut child = self.child.lock();
        for _ in 0..50 {
            if let Ok(Some(_)) = child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = child.kill();
        let _ = child.wait();
    }
}

/// POSTs one request per probe to a URL.
pub struct HttpPredictor {
    url: String,
    agent: ureq::Agent,
    next_id: AtomicU64,
    options: RemoteOptions,
}

impl HttpPredictor {
    pub fn new(url: impl Into<String>, options: RemoteOptions) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(options.timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Self {
            url: url.into(),
            agent,
            next_id: AtomicU64::new(0),
            options,
        }
    }

    fn post(&self, probe: &Probe<'_>) -> Result<Label, PredictError> {
        let n = self.next_id.fetch_add(1, Ordering::Relaxed);
        let id = format!("{}:{n}", probe.image_id);
        let body = serde_json::to_string(&Request::new(id.clone(), &probe.render()?))
            .expect("request serializes");
        let mut response = self
            .agent
            .post(&self.url)
            .header("content-type", "application/json")
            .send(body.as_str())
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => PredictError::Timeout(self.options.timeout),
                other => PredictError::Transport(other.to_string()),
            })?;
        let status = response.status();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| PredictError::Transport(e.to_string()))?;
        let parsed = match Response::parse(&text) {
            Ok(parsed) => parsed,
            Err(_) if !status.is_success() => {
                return Err(PredictError::Transport(format!("HTTP {status}")))
            }
            Err(e) => return Err(e),
        };
        if parsed.id != id {
            return Err(PredictError::Malformed(format!(
                "response id {:?} does not match request {id:?}",
                parsed.id
            )));
        }
        parsed.into_label()
    }
}

impl Predictor for HttpPredictor {
    fn predict(&self, probe: &Probe<'_>) -> Result<Label, PredictError> {
        self.post(probe)
    }

    /// Runs up to `max_in_flight` requests concurrently.
    fn predict_batch(&self, probes: &[Probe<'_>]) -> Result<Vec<Label>, PredictError> {
        if probes.is_empty() {
            return Err(PredictError::EmptyBatch);
        }
        let mut labels = Vec::with_capacity(probes.len());
        for (chunk_no, chunk) in probes.chunks(self.options.max_in_flight.max(1)).enumerate() {
            let base = chunk_no * self.options.max_in_flight.max(1);
            let results: Vec<_> = thread::scope(|s| {
                let handles: Vec<_> = chunk.iter().map(|p| s.spawn(|| self.post(p))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("request thread panicked"))
                    .collect()
            });
            for (offset, result) in results.into_iter().enumerate() {
                labels.push(result.map_err(|e| batch_error(base + offset, e))?);
            }
        }
        Ok(labels)
    }
}
