#![allow(dead_code)]

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use sit_core::survey::{Session, SessionEvent};
use sit_core::synth::{generate_cohort, Cohort, CohortSpec};
use tower::ServiceExt;

pub fn cohort(n: usize, seed: u64) -> Cohort {
    generate_cohort(&CohortSpec {
        n_respondents: n,
        seed,
        ..Default::default()
    })
    .unwrap()
}

pub struct Reply {
    pub status: StatusCode,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or(Value::Null)
    }
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>, key: Option<&str>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(k) = key {
        req = req.header("idempotency-key", k);
    }
    let body = match body {
        Some(v) => Body::from(v.to_string()),
        None => Body::empty(),
    };
    let resp = app
        .clone()
        .oneshot(req.header("content-type", "application/json").body(body).unwrap())
        .await
        .unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, bytes }
}

/// Drives `session` through the API, one request per recorded action.
/// IAT trials go up as a single batch.
pub async fn drive(app: &Router, session: &Session) -> Vec<Reply> {
    let id = session.id().to_string();
    let mut out = Vec::new();
    let seed = session.assignment().seed;
    out.push(call(app, "POST", "/sessions", Some(json!({ "seed": seed })), None).await);
    let mut trials = Vec::new();
    for ev in session.events() {
        if !matches!(ev, SessionEvent::IatTrial(_)) && !trials.is_empty() {
            let body = json!({ "trials": std::mem::take(&mut trials) });
            out.push(call(app, "POST", &format!("/sessions/{id}/iat/trials"), Some(body), None).await);
        }
        match ev {
            SessionEvent::Assigned(_) | SessionEvent::Completed => {}
            SessionEvent::Rated(r) => {
                let body = json!({ "image_id": r.image_id, "rating": r.rating, "rating_time_ms": r.rating_time_ms });
                out.push(call(app, "POST", &format!("/sessions/{id}/ratings"), Some(body), None).await);
            }
            SessionEvent::Commented(c) => {
                let body = json!({ "image_id": c.image_id, "text": c.text, "comment_time_ms": c.comment_time_ms });
                out.push(call(app, "POST", &format!("/sessions/{id}/comments"), Some(body), None).await);
            }
            SessionEvent::IatTrial(t) => trials.push(json!({
                "block": t.block,
                "trial_index": t.trial_index,
                "stimulus_id": t.stimulus_id,
                "reaction_time_ms": t.reaction_time_ms,
                "correct": t.correct,
            })),
            SessionEvent::IatFeedbackShown { .. } => {
                out.push(call(app, "GET", &format!("/sessions/{id}/iat/feedback"), None, None).await);
            }
            SessionEvent::QuestionnaireAnswered { page, answers } => {
                let body = json!({ "page": page, "answers": answers });
                out.push(call(app, "POST", &format!("/sessions/{id}/questionnaire"), Some(body), None).await);
            }
        }
    }
    out
}
