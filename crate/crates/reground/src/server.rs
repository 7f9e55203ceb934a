//! HTTP + server-sent-events front end for interactive sessions.
//!
//! ```text
//! POST /session                     {"fixture": "showcase"} | {"seed": 7, "scenario": 3} | {"snapshot": {...}}
//! GET  /session/{id}/state          anchors, beliefs, grid, held anchor, log
//! POST /session/{id}/instruction    {"text": "..."} -> action, posterior, graph, attention maps
//! GET  /session/{id}/events         event stream; one `log` event per log entry, id = entry seq
//! ```
//!
//! The event stream starts after the `Last-Event-ID` header (or `?since=`
//! entry) when given, so a reconnecting client misses nothing.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use reground_core::anchor::{simulate_perception, Anchor, AnchorSpace, MatchConfig, NoiseModel};
use reground_core::belief::Posterior;
use reground_core::nn::ParamStore;
use reground_core::session::{
    showcase_space, ActionCommand, LogEntry, NodeAttention, Session, SessionConfig,
};
use reground_core::synth::{generate_sample, GenerationConfig, ScenarioId};
use reground_core::{GridSpec, Vocabulary};

/// Everything a new session is built from.
#[derive(Clone)]
pub struct ServerSetup {
    pub vocab: Vocabulary,
    pub params: ParamStore,
    pub grid: GridSpec,
    pub session: SessionConfig,
    pub generation: GenerationConfig,
    pub noise: NoiseModel,
    pub matching: MatchConfig,
}

struct Slot {
    inner: Mutex<SlotInner>,
    notify: broadcast::Sender<u64>,
}

struct SlotInner {
    session: Session,
    /// Serialized event payload per log entry.
    events: Vec<Arc<str>>,
}

#[derive(Clone)]
pub struct AppState {
    setup: Arc<ServerSetup>,
    sessions: Arc<Mutex<BTreeMap<String, Arc<Slot>>>>,
    next_id: Arc<AtomicU64>,
}

impl AppState {
    pub fn new(setup: ServerSetup) -> Self {
        AppState {
            setup: Arc::new(setup),
            sessions: Arc::new(Mutex::new(BTreeMap::new())),
            next_id: Arc::new(AtomicU64::new(1)),
        }
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        self.sessions
            .lock()
            .expect("session table")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no session `{id}`")))
    }
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

fn bad_request(e: impl std::fmt::Display) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePayload {
    pub id: String,
    pub grid: GridSpec,
    pub time: u64,
    pub held: Option<String>,
    pub anchors: Vec<Anchor>,
    pub log: Vec<LogEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionPayload {
    pub seq: u64,
    pub action: ActionCommand,
    pub graph: Option<String>,
    pub posterior: Option<Posterior>,
    pub attention: Vec<NodeAttention>,
}

/// Data of one `log` event: the entry and the anchors right after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventPayload {
    pub entry: LogEntry,
    pub held: Option<String>,
    pub anchors: Vec<Anchor>,
}

fn state_of(id: &str, s: &Session) -> StatePayload {
    StatePayload {
        id: id.to_string(),
        grid: s.space().grid.clone(),
        time: s.space().time,
        held: s.held().map(str::to_string),
        anchors: s.space().anchors().cloned().collect(),
        log: s.log().to_vec(),
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub fixture: Option<String>,
    pub seed: Option<u64>,
    pub scenario: Option<u8>,
    pub snapshot: Option<AnchorSpace>,
}

/// Anchor space for a creation request.
pub fn initial_space(setup: &ServerSetup, req: &CreateRequest) -> anyhow::Result<AnchorSpace> {
    let mut space = match (&req.fixture, req.seed, &req.snapshot) {
        (Some(name), None, None) => match name.as_str() {
            "showcase" => showcase_space(&setup.grid)?,
            other => anyhow::bail!("unknown fixture `{other}`"),
        },
        (None, Some(seed), None) => {
            let scenario = ScenarioId::new(req.scenario.unwrap_or(6))?;
            let sample = generate_sample(
                scenario,
                None,
                &setup.vocab,
                &setup.grid,
                &setup.generation,
                seed,
            )?;
            let percepts = simulate_perception(&sample.scene, &setup.noise, 0)?;
            let mut space = AnchorSpace::new(setup.grid.clone());
            space.matching = setup.matching.clone();
            space.perceive(&percepts, 0)?;
            space
        }
        (None, None, Some(snapshot)) => snapshot.clone(),
        _ => anyhow::bail!("give exactly one of `fixture`, `seed` or `snapshot`"),
    };
    if space.grid != setup.grid {
        anyhow::bail!("session grid differs from the grounder's grid");
    }
    space.validate()?;
    space.matching = setup.matching.clone();
    Ok(space)
}

async fn create_session(
    State(app): State<AppState>,
    body: Option<Json<CreateRequest>>,
) -> Result<(StatusCode, Json<StatePayload>), ApiError> {
    let req = body.map(|Json(r)| r).unwrap_or_else(|| CreateRequest {
        fixture: Some("showcase".into()),
        ..CreateRequest::default()
    });
    let space = initial_space(&app.setup, &req).map_err(bad_request)?;
    let session = Session::new(
        app.setup.vocab.clone(),
        app.setup.params.clone(),
        space,
        app.setup.session,
    )
    .map_err(bad_request)?;
    let id = format!("s{}", app.next_id.fetch_add(1, Ordering::SeqCst));
    let payload = state_of(&id, &session);
    let (notify, _) = broadcast::channel(64);
    let slot = Arc::new(Slot {
        inner: Mutex::new(SlotInner {
            session,
            events: Vec::new(),
        }),
        notify,
    });
    app.sessions.lock().expect("session table").insert(id, slot);
    Ok((StatusCode::CREATED, Json(payload)))
}

async fn get_state(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<StatePayload>, ApiError> {
    let slot = app.slot(&id)?;
    let inner = slot.inner.lock().expect("session lock");
    Ok(Json(state_of(&id, &inner.session)))
}

#[derive(Debug, Deserialize)]
pub struct InstructionRequest {
    pub text: String,
}

async fn post_instruction(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<InstructionRequest>,
) -> Result<Json<InstructionPayload>, ApiError> {
    let slot = app.slot(&id)?;
    let worker = slot.clone();
    let payload = tokio::task::spawn_blocking(move || {
        let mut inner = worker.inner.lock().expect("session lock");
        let outcome = inner.session.submit_instruction(&req.text);
        let entry = inner
            .session
            .log()
            .last()
            .cloned()
            .expect("instruction logged");
        let held = inner.session.held().map(str::to_string);
        let anchors: Vec<Anchor> = inner.session.space().anchors().cloned().collect();
        let fresh: Vec<Arc<str>> = inner.session.log()[inner.events.len()..]
            .iter()
            .map(|e| {
                let event = EventPayload {
                    entry: e.clone(),
                    held: held.clone(),
                    anchors: anchors.clone(),
                };
                serde_json::to_string(&event)
                    .expect("serializable event")
                    .into()
            })
            .collect();
        inner.events.extend(fresh);
        let vocab = inner.session.vocab().clone();
        drop(inner);
        let _ = worker.notify.send(entry.seq);
        InstructionPayload {
            seq: entry.seq,
            action: outcome.action,
            graph: outcome.graph.map(|g| g.to_text(&vocab)),
            posterior: outcome.posterior,
            attention: outcome.attention,
        }
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(payload))
}

#[derive(Debug, Default, Deserialize)]
pub struct EventsQuery {
    /// Replay entries with a sequence number at least this large.
    pub since: Option<u64>,
}

fn pending(slot: &Slot, next: u64) -> Vec<(u64, Arc<str>)> {
    let inner = slot.inner.lock().expect("session lock");
    inner
        .events
        .iter()
        .enumerate()
        .skip(next as usize)
        .map(|(i, e)| (i as u64, e.clone()))
        .collect()
}

fn event_stream(slot: Arc<Slot>, start: u64) -> impl Stream<Item = Result<Event, Infallible>> {
    // subscribe before reading the backlog so nothing slips in between
    let rx = slot.notify.subscribe();
    let backlog = pending(&slot, start);
    let next = start + backlog.len() as u64;
    let state = (slot, rx, next, std::collections::VecDeque::from(backlog));
    stream::unfold(state, |(slot, mut rx, mut next, mut queue)| async move {
        loop {
            if let Some((seq, data)) = queue.pop_front() {
                let ev = Event::default()
                    .event("log")
                    .id(seq.to_string())
                    .data(&*data);
                return Some((Ok(ev), (slot, rx, next, queue)));
            }
            match rx.recv().await {
                Ok(_) | Err(broadcast::error::RecvError::Lagged(_)) => {
                    // entries are read from the session's own record, so a
                    // lagging receiver only delays them
                    let fresh = pending(&slot, next);
                    next += fresh.len() as u64;
                    queue.extend(fresh);
                }
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    })
}

async fn get_events(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let slot = app.slot(&id)?;
    let after_last = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u64>().ok())
        .map(|seq| seq + 1);
    let start = after_last.or(q.since).unwrap_or(0);
    Ok(Sse::new(event_stream(slot, start)).keep_alive(KeepAlive::default()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/session", post(create_session))
        .route("/session/{id}/state", get(get_state))
        .route("/session/{id}/instruction", post(post_instruction))
        .route("/session/{id}/events", get(get_events))
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> anyhow::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
