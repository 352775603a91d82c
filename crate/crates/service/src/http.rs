use std::collections::{HashMap, HashSet};
use std::net::SocketAddr;
use std::panic::AssertUnwindSafe;
use std::path::PathBuf;
use std::sync::mpsc::{sync_channel, SyncSender};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response as HttpResponse};
use axum::routing::{get, post};
use axum::{Json, Router};
use netq_core::learner::{run_session_with, EndReason, QueryKind, Response, SessionConfig, Transcript, TranscriptRecord};
use netq_core::pcs::{Pool, PoolSource};
use netq_core::scenario::{Candidate, ObjectiveInstance, Scenario};
use netq_core::teacher::{HumanBridge, PendingQuery};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::watch;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

/// How long an answer request waits for the learner's next query.
const ANSWER_WAIT: Duration = Duration::from_secs(2);

pub struct ServerConfig {
    pub pool: Pool,
    pub ttl: Duration,
    pub data_dir: PathBuf,
    pub static_dir: Option<PathBuf>,
}

struct Finished {
    r_best: Option<Candidate>,
    end: EndReason,
    queries: usize,
}

enum Phase {
    Thinking,
    Awaiting(PendingQuery),
    Finished(Finished),
}

struct Session {
    phase: Mutex<Phase>,
    records: Mutex<Vec<TranscriptRecord>>,
    answers: Mutex<Option<SyncSender<Response>>>,
    changed: watch::Sender<u64>,
    touched: Mutex<Instant>,
    seed: u64,
}

impl Session {
    fn set_phase(&self, phase: Phase) {
        *self.phase.lock().expect("session lock") = phase;
        self.changed.send_modify(|v| *v += 1);
    }

    fn r_best_metrics(&self) -> Option<Vec<f64>> {
        self.records.lock().expect("session lock").last().and_then(|r| r.r_best_metrics.clone())
    }
}

struct App {
    pairs: Arc<Vec<(ObjectiveInstance, Candidate)>>,
    scenario: Scenario,
    ttl: Duration,
    data_dir: PathBuf,
    sessions: Mutex<HashMap<String, Arc<Session>>>,
    expired: Mutex<HashSet<String>>,
}

type Shared = Arc<App>;

enum ApiError {
    NotFound,
    Gone,
    Conflict(String),
    BadRequest(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> HttpResponse {
        let (status, msg) = match self {
            ApiError::NotFound => (StatusCode::NOT_FOUND, "unknown session".to_string()),
            ApiError::Gone => (StatusCode::GONE, "session expired".to_string()),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, m),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
        };
        (status, Json(json!({ "error": msg }))).into_response()
    }
}

impl App {
    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sweep();
        let sessions = self.sessions.lock().expect("registry lock");
        match sessions.get(id) {
            Some(s) => {
                *s.touched.lock().expect("session lock") = Instant::now();
                Ok(s.clone())
            }
            None if self.expired.lock().expect("registry lock").contains(id) => Err(ApiError::Gone),
            None => Err(ApiError::NotFound),
        }
    }

    /// Drops sessions idle for longer than the TTL; their workers see a closed
    /// answer channel and end.
    fn sweep(&self) {
        let now = Instant::now();
        let mut sessions = self.sessions.lock().expect("registry lock");
        let stale: Vec<String> = sessions
            .iter()
            .filter(|(_, s)| now.duration_since(*s.touched.lock().expect("session lock")) > self.ttl)
            .map(|(id, _)| id.clone())
            .collect();
        if stale.is_empty() {
            return;
        }
        let mut expired = self.expired.lock().expect("registry lock");
        for id in stale {
            if let Some(s) = sessions.remove(&id) {
                s.answers.lock().expect("session lock").take();
            }
            log::info!("session {id} expired");
            expired.insert(id);
        }
    }

    fn candidate_view(&self, c: &Candidate) -> Value {
        json!({ "id": c.id.to_string(), "metrics": c.metrics.as_ref(), "readable": self.scenario.digest(&c.metrics) })
    }

    fn metrics_view(&self, m: &[f64]) -> Value {
        json!({ "metrics": m, "readable": self.scenario.digest(m) })
    }

    fn state_view(&self, id: &str, s: &Session) -> Value {
        let r_best = s.r_best_metrics().map(|m| self.metrics_view(&m));
        match &*s.phase.lock().expect("session lock") {
            Phase::Thinking => json!({ "id": id, "state": "thinking", "r_best": r_best }),
            Phase::Awaiting(p) => json!({
                "id": id,
                "state": "awaiting_answer",
                "kind": p.query.kind(),
                "candidates": p.query.candidates().into_iter().map(|c| self.candidate_view(c)).collect::<Vec<_>>(),
                "iteration": p.iteration,
                "can_stop": p.can_stop,
                "r_best": p.r_best.as_ref().map(|c| self.candidate_view(c)).or(r_best),
            }),
            Phase::Finished(f) => json!({
                "id": id,
                "state": "finished",
                "queries": f.queries,
                "r_best": f.r_best.as_ref().map(|c| self.candidate_view(c)),
            }),
        }
    }

    fn save_transcript(&self, id: &str, s: &Session) {
        let dir = self.data_dir.join("transcripts");
        let text = Transcript { records: s.records.lock().expect("session lock").clone() }.to_ndjson();
        let res = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(dir.join(format!("{id}.ndjson")), text));
        if let Err(e) = res {
            log::warn!("could not save transcript of {id}: {e}");
        }
    }
}

fn end_name(end: &EndReason) -> String {
    match end {
        EndReason::Guard => "guard".into(),
        EndReason::QueryCap => "query_cap".into(),
        EndReason::SourceExhausted => "source_exhausted".into(),
        EndReason::Stopped => "stopped".into(),
        EndReason::Unsatisfiable => "unsatisfiable".into(),
        EndReason::Teacher(e) => format!("teacher: {e}"),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    seed: Option<u64>,
    queries: Option<usize>,
}

fn spawn_session(app: &Shared, id: String, cfg: SessionConfig) -> Arc<Session> {
    let (qtx, qrx) = sync_channel::<PendingQuery>(1);
    let (atx, arx) = sync_channel::<Response>(1);
    let session = Arc::new(Session {
        phase: Mutex::new(Phase::Thinking),
        records: Mutex::new(Vec::new()),
        answers: Mutex::new(Some(atx)),
        changed: watch::Sender::new(0),
        touched: Mutex::new(Instant::now()),
        seed: cfg.seed,
    });

    let relay = session.clone();
    std::thread::spawn(move || {
        for pending in qrx {
            relay.set_phase(Phase::Awaiting(pending));
        }
    });

    let (worker, app) = (session.clone(), app.clone());
    std::thread::spawn(move || {
        let mut bridge = HumanBridge::new(qtx, arx, app.ttl);
        let source = PoolSource::new(app.pairs.clone(), cfg.seed);
        let sink = worker.clone();
        let run = std::panic::catch_unwind(AssertUnwindSafe(|| {
            run_session_with(source, &mut bridge, &cfg, &mut |rec| sink.records.lock().expect("session lock").push(rec.clone()))
        }));
        drop(bridge);
        let finished = match run {
            Ok(out) => Finished { r_best: out.r_best, end: out.end, queries: out.queries },
            Err(_) => {
                log::error!("session {id} worker panicked");
                Finished { r_best: None, end: EndReason::Unsatisfiable, queries: 0 }
            }
        };
        log::info!("session {id} finished: {}", end_name(&finished.end));
        app.save_transcript(&id, &worker);
        worker.set_phase(Phase::Finished(finished));
    });
    session
}

async fn create(State(app): State<Shared>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let body: CreateBody = if body.iter().all(u8::is_ascii_whitespace) {
        CreateBody::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(format!("invalid session config: {e}")))?
    };
    let id = format!("{:032x}", rand::random::<u128>());
    let seed = body.seed.unwrap_or_else(rand::random);
    let mut cfg = SessionConfig { cap_queries: true, ..SessionConfig::interactive(seed) };
    if let Some(q) = body.queries {
        if q == 0 {
            return Err(ApiError::BadRequest("queries must be at least 1".into()));
        }
        cfg.n_query = q;
    }
    app.sweep();
    let session = spawn_session(&app, id.clone(), cfg);
    app.sessions.lock().expect("registry lock").insert(id.clone(), session);
    log::info!("session {id} created with seed {seed}");
    Ok(Json(json!({ "id": id, "seed": seed })))
}

async fn query(State(app): State<Shared>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let s = app.session(&id)?;
    Ok(Json(app.state_view(&id, &s)))
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Choice {
    Left,
    Right,
    Equal,
    TooHard,
    Accept,
    Reject,
    Stop,
}

impl From<Choice> for Response {
    fn from(c: Choice) -> Self {
        match c {
            Choice::Left => Response::LeftBetter,
            Choice::Right => Response::RightBetter,
            Choice::Equal => Response::Equal,
            Choice::TooHard => Response::Abstain,
            Choice::Accept => Response::Accept,
            Choice::Reject => Response::Reject,
            Choice::Stop => Response::Stop,
        }
    }
}

#[derive(Debug, Deserialize)]
struct AnswerBody {
    choice: Choice,
    /// When present, the answer is refused unless this query is still pending.
    iteration: Option<usize>,
}

async fn answer(State(app): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let s = app.session(&id)?;
    let body: AnswerBody = serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(format!("invalid answer: {e}")))?;
    let response = Response::from(body.choice);
    let mut changed = s.changed.subscribe();
    {
        let mut phase = s.phase.lock().expect("session lock");
        let pending = match &*phase {
            Phase::Awaiting(p) => p,
            Phase::Thinking => return Err(ApiError::Conflict("the learner is still thinking".into())),
            Phase::Finished(_) => return Err(ApiError::Conflict("the session has finished".into())),
        };
        if body.iteration.is_some_and(|i| i != pending.iteration) {
            return Err(ApiError::Conflict(format!("query {} is no longer pending", body.iteration.unwrap_or_default())));
        }
        let kind = pending.query.kind();
        if !response.fits(kind) {
            let kind = if kind == QueryKind::Compare { "compare" } else { "propose" };
            return Err(ApiError::Conflict(format!("{:?} does not answer a {kind} query", body.choice)));
        }
        if response == Response::Stop && !pending.can_stop {
            return Err(ApiError::Conflict("there is no recommendation to stop with yet".into()));
        }
        let tx = s.answers.lock().expect("session lock").clone().ok_or(ApiError::Gone)?;
        tx.send(response).map_err(|_| ApiError::Conflict("the session has finished".into()))?;
        *phase = Phase::Thinking;
        changed.borrow_and_update();
    }
    let _ = tokio::time::timeout(ANSWER_WAIT, changed.changed()).await;
    Ok(Json(app.state_view(&id, &s)))
}

async fn recommendation(State(app): State<Shared>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let s = app.session(&id)?;
    let phase = s.phase.lock().expect("session lock");
    let Phase::Finished(f) = &*phase else {
        return Err(ApiError::Conflict("the session is still running".into()));
    };
    let design = f.r_best.as_ref().map(|c| {
        let mut v = app.candidate_view(c);
        v["allocation"] = json!(c.params.as_slice());
        v
    });
    Ok(Json(json!({
        "id": id,
        "seed": s.seed,
        "end": end_name(&f.end),
        "queries": f.queries,
        "r_best": design,
        "transcript": format!("/api/sessions/{id}/transcript"),
    })))
}

async fn transcript(State(app): State<Shared>, Path(id): Path<String>) -> Result<HttpResponse, ApiError> {
    let s = app.session(&id)?;
    let text = Transcript { records: s.records.lock().expect("session lock").clone() }.to_ndjson();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

pub fn router(cfg: ServerConfig) -> Result<Router> {
    let scenario = cfg.pool.build_scenario().context("rebuilding the pool's scenario")?;
    let app = Arc::new(App {
        pairs: Arc::new(cfg.pool.pair_list()),
        scenario,
        ttl: cfg.ttl,
        data_dir: cfg.data_dir,
        sessions: Mutex::new(HashMap::new()),
        expired: Mutex::new(HashSet::new()),
    });
    let api = Router::new()
        .route("/api/sessions", post(create))
        .route("/api/sessions/{id}/query", get(query))
        .route("/api/sessions/{id}/answer", post(answer))
        .route("/api/sessions/{id}/recommendation", get(recommendation))
        .route("/api/sessions/{id}/transcript", get(transcript))
        .with_state(app);
    let router = match cfg.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    Ok(router.layer(CorsLayer::permissive()))
}

pub fn serve(host: &str, port: u16, cfg: ServerConfig) -> Result<()> {
    let router = router(cfg)?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let addr: SocketAddr = tokio::net::lookup_host((host, port))
            .await?
            .next()
            .with_context(|| format!("cannot resolve {host}"))?;
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        println!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router).await?;
        Ok(())
    })
}
