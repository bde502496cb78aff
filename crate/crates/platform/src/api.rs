//! HTTP+JSON API for the respondent client, version "1".
//!
//! Routes (also mounted under `/v1`):
//!
//! | method | path | body |
//! |---|---|---|
//! | GET | `/` | API description |
//! | POST | `/sessions` | `{"seed"?: u64}` → 201 |
//! | GET | `/sessions/{id}/next` | |
//! | POST | `/sessions/{id}/ratings` | `{"image_id","rating","rating_time_ms","expected_cursor"?}` |
//! | POST | `/sessions/{id}/comments` | `{"image_id","text","comment_time_ms","expected_cursor"?}` |
//! | POST | `/sessions/{id}/iat/trials` | `{"trials":[{"block","trial_index","stimulus_id","reaction_time_ms","correct"}],"expected_cursor"?}` |
//! | GET | `/sessions/{id}/iat/feedback` | |
//! | POST | `/sessions/{id}/questionnaire` | `{"page","answers":{item: value or null},"expected_cursor"?}` |
//! | GET | `/export/{table}.csv` | ratings, comments, iat_trials, questionnaire, scores, assignments |
//!
//! Every session response carries `cursor`, the number of events recorded
//! for the session. A submission whose `expected_cursor` differs is
//! rejected with 409 and the current cursor and step, so the client can
//! resync. POSTs honour an `Idempotency-Key` header: a retry with the same
//! key and body gets the stored response and records nothing; the same key
//! with a different request is a 422.
//!
//! Status codes: 404 unknown session or table, 409 out-of-order or
//! immutable, 422 malformed or invalid input. Request bodies reject unknown
//! fields, so no identifying data can ride along.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use sit_core::iat::{IatBlock, IatTrial};
use sit_core::rng::SeededRng;
use sit_core::scores::{score_sessions, ScoreOptions};
use sit_core::survey::flow::{CommentEvent, RatingEvent};
use sit_core::survey::questionnaire::PageAnswers;
use sit_core::survey::{create_session, ImagePool, Protocol, Session};
use sit_core::Error;

use crate::dataset::images_of;
use crate::error::PlatformError;
use crate::events::Journal;
use crate::files;

pub const API_VERSION: &str = "1";
pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

struct Stored {
    fingerprint: String,
    status: StatusCode,
    body: String,
}

struct Inner {
    journal: Journal,
    idempotent: HashMap<String, Stored>,
}

pub struct AppState {
    pool: ImagePool,
    inner: Mutex<Inner>,
}

impl AppState {
    pub fn new(pool: ImagePool, journal: Journal) -> Arc<Self> {
        Arc::new(AppState {
            pool,
            inner: Mutex::new(Inner {
                journal,
                idempotent: HashMap::new(),
            }),
        })
    }

    /// A state whose log lives only in memory.
    pub fn ephemeral(pool: ImagePool) -> Arc<Self> {
        Self::new(pool, Journal::in_memory(Arc::new(Protocol::default())))
    }

    /// Sessions in creation order, for inspection.
    pub fn sessions(&self) -> Vec<Session> {
        self.inner.lock().unwrap().journal.sessions().cloned().collect()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    extra: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            extra: None,
        }
    }

    fn body(&self) -> Value {
        let mut v = json!({
            "api_version": API_VERSION,
            "error": { "code": self.code, "message": self.message },
        });
        if let Some(Value::Object(m)) = &self.extra {
            for (k, x) in m {
                v[k] = x.clone();
            }
        }
        v
    }
}

impl From<PlatformError> for ApiError {
    fn from(e: PlatformError) -> Self {
        let msg = e.to_string();
        match e {
            PlatformError::UnknownSession(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_session", msg),
            PlatformError::Core(c) => match c {
                Error::Sequencing(_) => ApiError::new(StatusCode::CONFLICT, "sequencing", msg),
                Error::Immutable(_) => ApiError::new(StatusCode::CONFLICT, "immutable", msg),
                Error::SessionDone => ApiError::new(StatusCode::CONFLICT, "session_done", msg),
                Error::FeedbackWithheld(_) => ApiError::new(StatusCode::CONFLICT, "feedback_withheld", msg),
                _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", msg),
            },
            PlatformError::Format { .. } => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", msg),
            PlatformError::Io { .. } => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", msg),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        PlatformError::Core(e).into()
    }
}

type Reply = Result<(StatusCode, Value), ApiError>;

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "malformed", e.to_string()))
}

/// Runs a POST under the state lock, replaying a stored response when the
/// idempotency key was seen before.
fn idempotent(
    state: &AppState,
    headers: &HeaderMap,
    route: &str,
    body: &[u8],
    f: impl FnOnce(&mut Inner) -> Reply,
) -> Response {
    let key = headers
        .get(IDEMPOTENCY_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::to_string);
    let fingerprint = format!("{route}\n{}", String::from_utf8_lossy(body));
    let mut inner = state.inner.lock().unwrap();
    if let Some(k) = &key {
        if let Some(s) = inner.idempotent.get(k) {
            if s.fingerprint != fingerprint {
                let e = ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "idempotency_key_reused",
                    "idempotency key was used for a different request",
                );
                return json_response(e.status, e.body().to_string());
            }
            return json_response(s.status, s.body.clone());
        }
    }
    let (status, value) = match f(&mut inner) {
        Ok(ok) => ok,
        Err(e) => (e.status, e.body()),
    };
    let text = value.to_string();
    if let Some(k) = key {
        if !status.is_server_error() {
            inner.idempotent.insert(
                k,
                Stored {
                    fingerprint,
                    status,
                    body: text.clone(),
                },
            );
        }
    }
    json_response(status, text)
}

fn session_view(s: &Session) -> Value {
    json!({
        "api_version": API_VERSION,
        "session_id": s.id(),
        "phase": s.state().phase,
        "cursor": s.events().len(),
        "complete": s.is_complete(),
        "next_step": s.next_step(),
    })
}

fn check_cursor(s: &Session, expected: Option<usize>) -> Result<(), ApiError> {
    match expected {
        Some(c) if c != s.events().len() => {
            let mut e = ApiError::new(
                StatusCode::CONFLICT,
                "cursor_mismatch",
                format!("expected cursor {c}, session is at {}", s.events().len()),
            );
            e.extra = Some(session_view(s));
            Err(e)
        }
        _ => Ok(()),
    }
}

/// Applies `f` to the session after the cursor check and reports the
/// events it recorded.
fn submit(
    inner: &mut Inner,
    id: &str,
    expected: Option<usize>,
    f: impl FnOnce(&mut Session) -> sit_core::Result<()>,
) -> Reply {
    let s = inner
        .journal
        .session(id)
        .ok_or_else(|| PlatformError::UnknownSession(id.to_string()))?;
    check_cursor(s, expected)?;
    let (_, recs) = inner.journal.mutate(id, now_ms(), f)?;
    let s = inner.journal.session(id).unwrap();
    let mut v = session_view(s);
    v["event_ids"] = json!(recs.iter().map(|r| r.event_id).collect::<Vec<_>>());
    Ok((StatusCode::OK, v))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct NewSession {
    seed: Option<u64>,
}

async fn create(State(st): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Response {
    idempotent(&st, &headers, "POST /sessions", &body, |inner| {
        let req: NewSession = if body.iter().all(u8::is_ascii_whitespace) {
            NewSession::default()
        } else {
            parse(&body)?
        };
        let seed = req.seed.unwrap_or_else(|| {
            let nanos = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0);
            SeededRng::with_stream(nanos, inner.journal.next_id()).derive_seed()
        });
        let a = create_session(&st.pool, seed);
        let id = a.session_id.clone();
        if inner.journal.session(&id).is_some() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "session_exists",
                format!("session {id} already exists"),
            ));
        }
        inner.journal.start(a.clone(), now_ms())?;
        let mut v = session_view(inner.journal.session(&id).unwrap());
        v["assignment"] = json!(a);
        Ok((StatusCode::CREATED, v))
    })
}

async fn next(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let inner = st.inner.lock().unwrap();
    match inner.journal.session(&id) {
        Some(s) => json_response(StatusCode::OK, session_view(s).to_string()),
        None => {
            let e: ApiError = PlatformError::UnknownSession(id).into();
            json_response(e.status, e.body().to_string())
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RatingBody {
    image_id: String,
    rating: u8,
    rating_time_ms: u64,
    expected_cursor: Option<usize>,
}

async fn rate(State(st): State<Arc<AppState>>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> Response {
    let route = format!("POST /sessions/{id}/ratings");
    idempotent(&st, &headers, &route, &body, |inner| {
        let b: RatingBody = parse(&body)?;
        submit(inner, &id, b.expected_cursor, |s| {
            s.record_rating(RatingEvent {
                session_id: id.clone(),
                image_id: b.image_id,
                rating: b.rating,
                rating_time_ms: b.rating_time_ms,
            })
            .map(|_| ())
        })
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CommentBody {
    image_id: String,
    #[serde(default)]
    text: String,
    comment_time_ms: u64,
    expected_cursor: Option<usize>,
}

async fn comment(State(st): State<Arc<AppState>>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> Response {
    let route = format!("POST /sessions/{id}/comments");
    idempotent(&st, &headers, &route, &body, |inner| {
        let b: CommentBody = parse(&body)?;
        submit(inner, &id, b.expected_cursor, |s| {
            s.record_comment(CommentEvent {
                session_id: id.clone(),
                image_id: b.image_id,
                text: b.text,
                comment_time_ms: b.comment_time_ms,
            })
            .map(|_| ())
        })
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrialBody {
    block: IatBlock,
    trial_index: u32,
    stimulus_id: String,
    reaction_time_ms: u32,
    correct: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrialsBody {
    trials: Vec<TrialBody>,
    expected_cursor: Option<usize>,
}

async fn trials(State(st): State<Arc<AppState>>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> Response {
    let route = format!("POST /sessions/{id}/iat/trials");
    idempotent(&st, &headers, &route, &body, |inner| {
        let b: TrialsBody = parse(&body)?;
        let trials = b
            .trials
            .into_iter()
            .map(|t| IatTrial {
                session_id: id.clone(),
                block: t.block,
                trial_index: t.trial_index,
                stimulus_id: t.stimulus_id,
                reaction_time_ms: t.reaction_time_ms,
                correct: t.correct,
            })
            .collect();
        submit(inner, &id, b.expected_cursor, |s| {
            s.record_iat_trials(trials).map(|_| ())
        })
    })
}

async fn feedback(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let mut inner = st.inner.lock().unwrap();
    let reply: Reply = (|| {
        if inner.journal.session(&id).is_none() {
            return Err(PlatformError::UnknownSession(id.clone()).into());
        }
        let (outcome, _) = inner.journal.mutate(&id, now_ms(), |s| s.show_feedback())?;
        let mut v = session_view(inner.journal.session(&id).unwrap());
        v["feedback"] = json!(outcome);
        Ok((StatusCode::OK, v))
    })();
    let (status, v) = reply.unwrap_or_else(|e| (e.status, e.body()));
    json_response(status, v.to_string())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswersBody {
    page: usize,
    answers: PageAnswers,
    expected_cursor: Option<usize>,
}

async fn questionnaire(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let route = format!("POST /sessions/{id}/questionnaire");
    idempotent(&st, &headers, &route, &body, |inner| {
        let b: AnswersBody = parse(&body)?;
        submit(inner, &id, b.expected_cursor, |s| {
            s.record_answers(b.page, b.answers).map(|_| ())
        })
    })
}

fn export_table(st: &AppState, table: &str) -> Result<Vec<u8>, ApiError> {
    let sessions = st.sessions();
    let mut buf = Vec::new();
    match table {
        "ratings" => files::write_ratings(&mut buf, &sessions)?,
        "comments" => files::write_comments(&mut buf, &sessions)?,
        "iat_trials" => files::write_iat_trials(&mut buf, &sessions)?,
        "questionnaire" => files::write_questionnaire(&mut buf, &files::questionnaire_rows(&sessions))?,
        "assignments" => files::write_assignments(&mut buf, &sessions)?,
        "scores" => {
            let scores = score_sessions(&sessions, &images_of(&st.pool), None, ScoreOptions::default())?;
            files::write_scores(&mut buf, &scores)?
        }
        _ => {
            return Err(ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown_table",
                format!("no table '{table}'"),
            ))
        }
    }
    Ok(buf)
}

async fn export(State(st): State<Arc<AppState>>, Path(file): Path<String>) -> Response {
    let Some(table) = file.strip_suffix(".csv") else {
        let e = ApiError::new(StatusCode::NOT_FOUND, "unknown_table", format!("no table '{file}'"));
        return json_response(e.status, e.body().to_string());
    };
    match export_table(&st, table) {
        Ok(buf) => (StatusCode::OK, [(header::CONTENT_TYPE, "text/csv; charset=utf-8")], buf).into_response(),
        Err(e) => json_response(e.status, e.body().to_string()),
    }
}

async fn index() -> Response {
    let v = json!({
        "api_version": API_VERSION,
        "endpoints": [
            "POST /sessions",
            "GET /sessions/{id}/next",
            "POST /sessions/{id}/ratings",
            "POST /sessions/{id}/comments",
            "POST /sessions/{id}/iat/trials",
            "GET /sessions/{id}/iat/feedback",
            "POST /sessions/{id}/questionnaire",
            "GET /export/{table}.csv",
        ],
    });
    json_response(StatusCode::OK, v.to_string())
}

fn routes() -> Router<Arc<AppState>> {
    Router::new()
        .route("/", get(index))
        .route("/sessions", post(create))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/ratings", post(rate))
        .route("/sessions/{id}/comments", post(comment))
        .route("/sessions/{id}/iat/trials", post(trials))
        .route("/sessions/{id}/iat/feedback", get(feedback))
        .route("/sessions/{id}/questionnaire", post(questionnaire))
        .route("/export/{file}", get(export))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new().merge(routes()).nest("/v1", routes()).with_state(state)
}

pub async fn serve(addr: std::net::SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}
