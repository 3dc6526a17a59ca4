use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use log::warn;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{ClaimInstance, EvidenceGroup, SupportLabel, SupportVerdict};
use crate::oracle::{RedundancyChecker, SupportPredictor};

pub const DEFAULT_SUPPORT_TEMPLATE: &str = include_str!("../../templates/support.txt");
pub const DEFAULT_REDUNDANCY_TEMPLATE: &str = include_str!("../../templates/redundant.txt");
pub const DEFAULT_DIRECT_TEMPLATE: &str = include_str!("../../templates/direct.txt");

/// Connection and prompting configuration for a remote support-prediction
/// service.
///
/// Wire protocol: `POST {endpoint}/support` with `{claim, evidence[],
/// template}` answered by `{label, score?}`, and `POST {endpoint}/redundant`
/// with `{claim, group1[], group2[]}` answered by `{answer}`. All bodies are
/// UTF-8 JSON.
#[derive(Debug, Clone)]
pub struct RemotePredictorConfig {
    pub endpoint: String,
    pub timeout: Duration,
    pub max_retries: u32,
    pub max_concurrency: usize,
    pub support_template: String,
    pub redundancy_template: String,
    pub direct_template: String,
    /// Index base used when rendering numbered evidence for direct
    /// prediction (0 or 1).
    pub index_base: usize,
}

impl Default for RemotePredictorConfig {
    fn default() -> Self {
        RemotePredictorConfig {
            endpoint: "http://127.0.0.1:8080".into(),
            timeout: Duration::from_secs(60),
            max_retries: 2,
            max_concurrency: 4,
            support_template: DEFAULT_SUPPORT_TEMPLATE.into(),
            redundancy_template: DEFAULT_REDUNDANCY_TEMPLATE.into(),
            direct_template: DEFAULT_DIRECT_TEMPLATE.into(),
            index_base: 1,
        }
    }
}

impl RemotePredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.timeout.is_zero() {
            return Err(Error::InvalidData("timeout must be positive".into()));
        }
        if self.max_concurrency == 0 {
            return Err(Error::InvalidData("concurrency must be at least 1".into()));
        }
        if self.index_base > 1 {
            return Err(Error::InvalidData("index base must be 0 or 1".into()));
        }
        Ok(())
    }
}

/// Substitutes `{{name}}` placeholders in a prompt template.
pub fn render_template(template: &str, substitutions: &[(&str, &str)]) -> String {
    let mut out = template.to_owned();
    for (name, value) in substitutions {
        out = out.replace(&format!("{{{{{name}}}}}"), value);
    }
    out
}

/// Finds the last support-label token in a model answer, per the prompt's
/// "answer at the end" instruction. Returns `None` when no valid token
/// occurs.
pub fn parse_support_label(text: &str) -> Option<SupportLabel> {
    const TOKENS: [(&str, SupportLabel); 3] = [
        ("FULLY_SUPPORTED", SupportLabel::FullySupported),
        ("PARTIALLY_SUPPORTED", SupportLabel::PartiallySupported),
        ("NOT_SUPPORTED", SupportLabel::NotSupported),
    ];
    TOKENS
        .iter()
        .filter_map(|(token, label)| text.rfind(token).map(|pos| (pos, *label)))
        .max_by_key(|(pos, _)| *pos)
        .map(|(_, label)| label)
}

/// Finds the last standalone YES/NO word in a model answer
/// (case-insensitive). `Some(true)` means YES.
pub fn parse_yes_no(text: &str) -> Option<bool> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|tok| !tok.is_empty())
        .filter_map(|tok| {
            if tok.eq_ignore_ascii_case("yes") {
                Some(true)
            } else if tok.eq_ignore_ascii_case("no") {
                Some(false)
            } else {
                None
            }
        })
        .next_back()
}

/// One JSON round trip to the prediction service. Implementations must be
/// shareable across worker threads.
pub trait Transport: Send + Sync {
    fn post(&self, path: &str, body: &Value) -> Result<Value>;
}

struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore {
            permits: Mutex::new(permits),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        SemaphoreGuard(self)
    }
}

struct SemaphoreGuard<'a>(&'a Semaphore);

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.0.permits.lock().unwrap() += 1;
        self.0.available.notify_one();
    }
}

/// Live HTTP transport with a per-request timeout, bounded retries, and a
/// cap on concurrent in-flight requests.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    base: String,
    max_retries: u32,
    semaphore: Semaphore,
}

impl HttpTransport {
    pub fn new(cfg: &RemotePredictorConfig) -> Result<Self> {
        cfg.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(HttpTransport {
            client,
            base: cfg.endpoint.trim_end_matches('/').to_owned(),
            max_retries: cfg.max_retries,
            semaphore: Semaphore::new(cfg.max_concurrency),
        })
    }
}

impl Transport for HttpTransport {
    fn post(&self, path: &str, body: &Value) -> Result<Value> {
        let _permit = self.semaphore.acquire();
        let url = format!("{}/{}", self.base, path);
        let mut last_err = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(100 * attempt as u64));
            }
            match self.client.post(&url).json(body).send() {
                Ok(resp) => {
                    let status = resp.status();
                    if !status.is_success() {
                        last_err = format!("{url}: status {status}");
                        continue;
                    }
                    match resp.json::<Value>() {
                        Ok(value) => return Ok(value),
                        Err(e) => {
                            last_err = format!("{url}: undecodable body: {e}");
                            continue;
                        }
                    }
                }
                Err(e) => {
                    last_err = format!("{url}: {e}");
                }
            }
        }
        Err(Error::Transport(format!(
            "{last_err} (after {} attempts)",
            self.max_retries + 1
        )))
    }
}

/// Replays previously recorded exchanges instead of touching the network.
/// Requests are matched by path plus canonical JSON body; a miss is a
/// transport error.
pub struct ReplayTransport {
    responses: HashMap<(String, String), Value>,
}

impl ReplayTransport {
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let mut responses = HashMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Value = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("bad replay record: {e}"),
            })?;
            let endpoint = record
                .get("path")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    msg: "replay record has no `path`".into(),
                })?
                .to_owned();
            let request = record.get("request").cloned().ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: "replay record has no `request`".into(),
            })?;
            let response = record.get("response").cloned().ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: "replay record has no `response`".into(),
            })?;
            responses.insert((endpoint, request.to_string()), response);
        }
        Ok(ReplayTransport { responses })
    }

    pub fn from_exchanges(exchanges: impl IntoIterator<Item = (String, Value, Value)>) -> Self {
        let responses = exchanges
            .into_iter()
            .map(|(path, request, response)| ((path, request.to_string()), response))
            .collect();
        ReplayTransport { responses }
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl Transport for ReplayTransport {
    fn post(&self, path: &str, body: &Value) -> Result<Value> {
        self.responses
            .get(&(path.to_owned(), body.to_string()))
            .cloned()
            .ok_or_else(|| {
                Error::Transport(format!("no recorded response for POST /{path} with body {body}"))
            })
    }
}

/// Wraps another transport and appends every exchange to a JSONL file so a
/// later run can replay it.
pub struct RecordingTransport {
    inner: Arc<dyn Transport>,
    sink: Mutex<File>,
}

impl RecordingTransport {
    pub fn create(inner: Arc<dyn Transport>, path: &Path) -> Result<Self> {
        let sink = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RecordingTransport {
            inner,
            sink: Mutex::new(sink),
        })
    }
}

impl Transport for RecordingTransport {
    fn post(&self, path: &str, body: &Value) -> Result<Value> {
        let response = self.inner.post(path, body)?;
        let record = json!({"path": path, "request": body, "response": response});
        let mut sink = self.sink.lock().unwrap();
        writeln!(sink, "{record}")?;
        Ok(response)
    }
}

/// Client for a remote support-prediction model speaking the JSON wire
/// protocol. Implements both the support predictor and the pairwise
/// redundancy checker, and exposes the raw direct-prediction call used by
/// the direct baseline.
pub struct RemotePredictor {
    cfg: RemotePredictorConfig,
    transport: Arc<dyn Transport>,
}

impl RemotePredictor {
    /// Connects over live HTTP.
    pub fn new(cfg: RemotePredictorConfig) -> Result<Self> {
        let transport = Arc::new(HttpTransport::new(&cfg)?);
        Ok(RemotePredictor { cfg, transport })
    }

    /// Uses a caller-supplied transport (replay, recording, in-process fake).
    pub fn with_transport(cfg: RemotePredictorConfig, transport: Arc<dyn Transport>) -> Result<Self> {
        cfg.validate()?;
        Ok(RemotePredictor { cfg, transport })
    }

    pub fn config(&self) -> &RemotePredictorConfig {
        &self.cfg
    }

    /// Queries support for a claim against the given evidence texts.
    pub fn predict_texts(&self, claim: &str, evidence: &[String]) -> Result<SupportVerdict> {
        let body = json!({
            "claim": claim,
            "evidence": evidence,
            "template": self.cfg.support_template,
        });
        let response = self.transport.post("support", &body)?;
        let label_text = response
            .get("label")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::PredictionFailure("response has no `label` field".into()))?;
        let label = parse_support_label(label_text).ok_or_else(|| {
            Error::PredictionFailure(format!("no support label in answer `{label_text}`"))
        })?;
        let confidence = response
            .get("score")
            .and_then(Value::as_f64)
            .map(|s| s.clamp(0.0, 1.0))
            .unwrap_or(1.0);
        Ok(SupportVerdict::new(label, confidence))
    }

    /// Asks the model to pick a minimal group directly. Returns the raw
    /// answer text and optional score; index parsing happens in the caller.
    pub fn predict_direct(&self, claim: &str, evidence: &[String]) -> Result<(String, Option<f64>)> {
        let lines: Vec<String> = evidence
            .iter()
            .enumerate()
            .map(|(i, text)| format!("{}: {}", i + self.cfg.index_base, text))
            .collect();
        let rendered = render_template(
            &self.cfg.direct_template,
            &[("claim", claim), ("evidence text", lines.join("\n").as_str())],
        );
        let body = json!({
            "claim": claim,
            "evidence": lines,
            "template": rendered,
        });
        let response = self.transport.post("support", &body)?;
        let answer = response
            .get("label")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::PredictionFailure("response has no `label` field".into()))?
            .to_owned();
        let score = response
            .get("score")
            .and_then(Value::as_f64)
            .map(|s| s.clamp(0.0, 1.0));
        Ok((answer, score))
    }
}

impl SupportPredictor for RemotePredictor {
    fn predict(&self, instance: &ClaimInstance, group: &EvidenceGroup) -> Result<SupportVerdict> {
        let texts = instance.group_texts(group);
        self.predict_texts(&instance.claim_text, &texts)
    }
}

impl RedundancyChecker for RemotePredictor {
    fn not_redundant(
        &self,
        instance: &ClaimInstance,
        g1: &EvidenceGroup,
        g2: &EvidenceGroup,
    ) -> Result<bool> {
        let body = json!({
            "claim": instance.claim_text,
            "group1": instance.group_texts(g1),
            "group2": instance.group_texts(g2),
        });
        let response = self.transport.post("redundant", &body)?;
        let answer = response.get("answer").and_then(Value::as_str);
        match answer.and_then(parse_yes_no) {
            Some(true) => Ok(false), // YES: redundant, prune the merge
            Some(false) => Ok(true),
            None => {
                warn!(
                    "unparsable redundancy answer {:?} for claim `{}`; treating as not redundant",
                    answer, instance.claim_id
                );
                Ok(true)
            }
        }
    }
}
