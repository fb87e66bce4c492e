//! HTTP/JSON front end for knowledge bases and consultation sessions.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use fodot_core::check::TypedKB;
use fodot_core::config::Config;
use fodot_core::consult::{ConsultError, ConsultSession, StateTable};
use fodot_core::inference::{Direction, InferenceError};
use fodot_core::interp::{PartialStructure, Term};
use fodot_core::{compile, Error, Value};
use serde::Deserialize;
use serde_json::{json, Map};
use uuid::Uuid;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, message: impl ToString) -> ApiError {
        ApiError {
            status,
            body: json!({ "error": kind, "message": message.to_string() }),
        }
    }

    fn not_found(what: &str, id: &str) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} `{id}`"))
    }

    fn invalid(message: impl ToString) -> ApiError {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> ApiError {
        ApiError::invalid(r.body_text())
    }
}

impl From<InferenceError> for ApiError {
    fn from(e: InferenceError) -> ApiError {
        match e {
            InferenceError::Smt(_) | InferenceError::SolverUnknown(_) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "solver", e)
            }
            InferenceError::Inconsistent => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "inconsistent", e),
            _ => ApiError::invalid(e),
        }
    }
}

impl From<ConsultError> for ApiError {
    fn from(e: ConsultError) -> ApiError {
        match e {
            ConsultError::Inference(e) => e.into(),
            ConsultError::Interp(e) => ApiError::invalid(e),
            ConsultError::InconsistentKB => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "inconsistent", e),
            ConsultError::ConflictingAssert(x) => ApiError {
                status: StatusCode::CONFLICT,
                body: json!({
                    "error": "conflict",
                    "message": "the assertion contradicts the current state",
                    "explanation": x,
                }),
            },
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> ApiError {
        match e {
            Error::Parse(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "parse", e),
            Error::Type(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "type", e),
            Error::Inference(e) => e.into(),
            Error::Consult(e) => e.into(),
            _ => ApiError::invalid(e),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct KbEntry {
    tkb: Arc<TypedKB>,
    vocab: String,
    meta: serde_json::Value,
}

struct SessionEntry {
    session: Mutex<ConsultSession>,
    last_used: Mutex<Instant>,
}

impl SessionEntry {
    fn touch(&self) {
        *self.last_used.lock().unwrap() = Instant::now();
    }
}

struct Registry {
    config: Config,
    kbs: Mutex<HashMap<String, Arc<KbEntry>>>,
    sessions: Mutex<HashMap<String, Arc<SessionEntry>>>,
}

/// Shared service state: compiled knowledge bases and open sessions.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Registry>,
}

impl AppState {
    pub fn new(config: Config) -> AppState {
        AppState {
            inner: Arc::new(Registry {
                config,
                kbs: Mutex::new(HashMap::new()),
                sessions: Mutex::new(HashMap::new()),
            }),
        }
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.lock().unwrap().len()
    }

    /// Drops sessions idle for longer than `idle`; returns how many.
    pub fn sweep(&self, idle: Duration) -> usize {
        let mut sessions = self.inner.sessions.lock().unwrap();
        let before = sessions.len();
        sessions.retain(|_, s| s.last_used.lock().unwrap().elapsed() <= idle);
        before - sessions.len()
    }

    fn kb(&self, id: &str) -> ApiResult<Arc<KbEntry>> {
        self.inner
            .kbs
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("knowledge base", id))
    }

    fn session(&self, id: &str) -> ApiResult<Arc<SessionEntry>> {
        let s = self
            .inner
            .sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session", id))?;
        s.touch();
        Ok(s)
    }

    fn open_session(&self, kb: &KbEntry) -> ApiResult<ConsultSession> {
        let mut s = ConsultSession::new(kb.tkb.clone(), &kb.vocab, &self.inner.config.solver)?;
        s.defer_relevance = self.inner.config.consult.defer_relevance;
        Ok(s)
    }
}

/// Runs solver work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e))?
}

/// Runs `f` on a locked session.
async fn with_session<T: Send + 'static>(
    state: &AppState,
    id: &str,
    f: impl FnOnce(&mut ConsultSession) -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    let entry = state.session(id)?;
    blocking(move || {
        let mut s = entry.session.lock().unwrap_or_else(|p| p.into_inner());
        f(&mut s)
    })
    .await
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/kb", post(create_kb))
        .route("/kb/{id}/meta", get(kb_meta))
        .route("/session", post(create_session))
        .route("/session/{id}", delete(delete_session))
        .route("/session/{id}/state", get(session_state))
        .route("/session/{id}/edit", post(edit))
        .route("/session/{id}/explain", post(explain))
        .route("/session/{id}/optimize", post(optimize))
        .route("/session/{id}/models", post(models))
        .with_state(state)
}

/// Serves until the process is stopped, sweeping idle sessions.
pub async fn serve(addr: SocketAddr, config: Config) -> std::io::Result<()> {
    let idle = Duration::from_secs(config.service.idle_secs);
    let state = AppState::new(config);
    let sweeper = state.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval((idle / 4).clamp(Duration::from_secs(1), Duration::from_secs(60)));
        loop {
            tick.tick().await;
            sweeper.sweep(idle);
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

#[derive(Deserialize)]
struct KbRequest {
    source: String,
}

async fn create_kb(State(state): State<AppState>, body: Result<Json<KbRequest>, JsonRejection>) -> ApiResult<Response> {
    let Json(req) = body?;
    let config = state.inner.config.solver.clone();
    let entry = blocking(move || {
        let tkb = Arc::new(compile(&req.source)?);
        let vocab = tkb
            .main_vocabulary()
            .ok_or_else(|| ApiError::invalid("the knowledge base has no vocabulary"))?
            .to_string();
        let session = ConsultSession::new(tkb.clone(), &vocab, &config)?;
        let meta = meta(&vocab, session.structure(), &session.state());
        Ok(KbEntry { tkb, vocab, meta })
    })
    .await?;
    let id = Uuid::new_v4().to_string();
    let body = json!({ "kb_id": id, "meta": entry.meta });
    state.inner.kbs.lock().unwrap().insert(id, Arc::new(entry));
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

/// Everything a client needs to render a form for the vocabulary.
fn meta(vocab: &str, s: &PartialStructure, table: &StateTable) -> serde_json::Value {
    let voc = &s.vocab;
    let types: Vec<serde_json::Value> = voc
        .types
        .values()
        .map(|t| {
            let ext = s.extension(&fodot_core::types::Type::Custom(t.name.clone()));
            json!({ "name": t.name, "extension": ext })
        })
        .collect();
    let symbols: Vec<serde_json::Value> = voc
        .symbols
        .values()
        .map(|sym| {
            let terms: Vec<&fodot_core::consult::TermState> =
                table.terms.iter().filter(|t| t.symbol == sym.name).collect();
            json!({
                "name": sym.name,
                "signature": sym.sig.to_string(),
                "args": sym.sig.args.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
                "result": sym.sig.result.to_string(),
                "extension": s.extension(&sym.sig.result),
                "enumerated": s.is_enumerated(&sym.name),
                "terms": terms,
            })
        })
        .collect();
    json!({ "vocabulary": vocab, "types": types, "symbols": symbols })
}

async fn kb_meta(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    Ok(Json(state.kb(&id)?.meta.clone()))
}

#[derive(Deserialize)]
struct SessionRequest {
    kb_id: String,
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<SessionRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(req) = body?;
    let kb = state.kb(&req.kb_id)?;
    let max = state.inner.config.service.max_sessions;
    if state.session_count() >= max {
        state.sweep(Duration::from_secs(state.inner.config.service.idle_secs));
        if state.session_count() >= max {
            return Err(ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "capacity",
                format!("at most {max} sessions may be open"),
            ));
        }
    }
    let st = state.clone();
    let session = blocking(move || st.open_session(&kb)).await?;
    let table = session.state();
    let id = Uuid::new_v4().to_string();
    state.inner.sessions.lock().unwrap().insert(
        id.clone(),
        Arc::new(SessionEntry {
            session: Mutex::new(session),
            last_used: Mutex::new(Instant::now()),
        }),
    );
    Ok((StatusCode::CREATED, Json(json!({ "session_id": id, "state": table }))).into_response())
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    match state.inner.sessions.lock().unwrap().remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::not_found("session", &id)),
    }
}

async fn session_state(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<StateTable>> {
    with_session(&state, &id, |s| Ok(s.state())).await.map(Json)
}

#[derive(Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Action {
    Assert,
    Retract,
}

#[derive(Deserialize)]
struct EditRequest {
    action: Action,
    term: String,
    #[serde(default)]
    value: Option<serde_json::Value>,
}

/// Values arrive as JSON scalars or as text.
fn value_text(v: &serde_json::Value) -> ApiResult<String> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Bool(b) => Ok(b.to_string()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(ApiError::invalid(format!("unsupported value {other}"))),
    }
}

fn parse_term(s: &ConsultSession, text: &str) -> ApiResult<Term> {
    s.structure().parse_term(text).map_err(ApiError::invalid)
}

async fn edit(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<EditRequest>, JsonRejection>,
) -> ApiResult<Json<serde_json::Value>> {
    let Json(req) = body?;
    let value = req.value.as_ref().map(value_text).transpose()?;
    with_session(&state, &id, move |s| {
        let before = s.state();
        let term = parse_term(s, &req.term)?;
        match req.action {
            Action::Assert => {
                let text = value.ok_or_else(|| ApiError::invalid("assert needs a value"))?;
                let v = s.structure().parse_value(&term, &text).map_err(ApiError::invalid)?;
                s.assert(term, v)?;
            }
            Action::Retract => s.retract(&term)?,
        }
        let after = s.state();
        let changed = after.changes(&before);
        Ok(Json(json!({ "state": after, "changed": changed })))
    })
    .await
}

#[derive(Deserialize)]
struct ExplainRequest {
    literal: String,
}

async fn explain(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<ExplainRequest>, JsonRejection>,
) -> ApiResult<Json<serde_json::Value>> {
    let Json(req) = body?;
    with_session(&state, &id, move |s| {
        let e = s.explain(&req.literal)?;
        Ok(Json(json!({ "literal": req.literal, "explanation": e })))
    })
    .await
}

#[derive(Deserialize)]
struct OptimizeRequest {
    term: String,
    direction: Direction,
}

fn model_json(m: &[(Term, Value)]) -> serde_json::Value {
    let mut out = Map::new();
    for (t, v) in m {
        out.insert(t.to_string(), serde_json::to_value(v).unwrap_or_default());
    }
    serde_json::Value::Object(out)
}

async fn optimize(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<OptimizeRequest>, JsonRejection>,
) -> ApiResult<Json<serde_json::Value>> {
    let Json(req) = body?;
    with_session(&state, &id, move |s| {
        let (v, m) = s.optimize(&req.term, req.direction)?;
        Ok(Json(json!({ "term": req.term, "value": v, "model": model_json(&m) })))
    })
    .await
}

#[derive(Deserialize)]
struct ModelsRequest {
    max: usize,
}

async fn models(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<ModelsRequest>, JsonRejection>,
) -> ApiResult<Json<serde_json::Value>> {
    let Json(req) = body?;
    with_session(&state, &id, move |s| {
        let ms = s.models(req.max)?;
        let ms: Vec<serde_json::Value> = ms.iter().map(|m| model_json(m)).collect();
        Ok(Json(json!({ "models": ms })))
    })
    .await
}
