//! HTTP API for the review UI. Labels are appended to a session log; the
//! manifest itself is only changed by `refine`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use qcurate_core::curation::{append_events, read_events, LabelEvent, Manifest, Origin, Split};
use qcurate_core::embedding::{ObjectId, CLASSIFIER_VIEWS};
use qcurate_core::uncertainty::{select_for_review, UncertaintyReport};
use serde::Deserialize;
use tower_http::services::ServeDir;

use crate::args::ServeArgs;
use crate::commands::{input_path, load_manifest, Ctx};
use crate::error::{Classify, CliError, CliResult, ResultExt};
use crate::files::{read_jsonl, require_file};
use crate::schema::{ApiError, LabelRequest, Progress, ReviewItem};

pub const DEFAULT_QUEUE_LIMIT: usize = 20;

pub struct ReviewState {
    manifest: Manifest,
    /// Reports for reviewable objects: in the manifest and not in the test split.
    reports: Vec<UncertaintyReport>,
    report_index: HashMap<String, usize>,
    log_path: PathBuf,
    session: HashMap<String, u8>,
    clock: u64,
    cycle: u32,
}

impl ReviewState {
    /// Restores previously logged labels so an interrupted session resumes.
    pub fn new(
        manifest: Manifest,
        reports: Vec<UncertaintyReport>,
        log_path: PathBuf,
    ) -> CliResult<Self> {
        let log =
            read_events(&log_path).classified(format!("session log {}", log_path.display()))?;
        let reports: Vec<UncertaintyReport> = reports
            .into_iter()
            .filter(|r| {
                manifest
                    .get(&r.object_id)
                    .is_some_and(|m| m.split != Split::Test)
            })
            .collect();
        let report_index = reports
            .iter()
            .enumerate()
            .map(|(i, r)| (r.object_id.clone(), i))
            .collect();
        let cycle = manifest
            .records()
            .iter()
            .map(|r| r.cycle_added)
            .chain(log.iter().map(|e| e.cycle))
            .max()
            .unwrap_or(0)
            + 1;
        Ok(ReviewState {
            clock: log.iter().map(|e| e.timestamp).max().unwrap_or(0),
            session: log
                .iter()
                .map(|e| (e.object_id.to_string(), e.new_label))
                .collect(),
            manifest,
            reports,
            report_index,
            log_path,
            cycle,
        })
    }

    pub fn queue(&self, limit: usize) -> Vec<ReviewItem> {
        let open: Vec<UncertaintyReport> = self
            .reports
            .iter()
            .filter(|r| !self.session.contains_key(&r.object_id))
            .cloned()
            .collect();
        select_for_review(&open, limit)
            .iter()
            .filter_map(|id| self.item(id))
            .collect()
    }

    pub fn item(&self, id: &str) -> Option<ReviewItem> {
        let report = &self.reports[*self.report_index.get(id)?];
        let rec = self.manifest.get(id)?;
        Some(ReviewItem {
            object_id: id.to_string(),
            image_uris: (0..CLASSIFIER_VIEWS)
                .map(|k| format!("/views/{id}/view_{k}.png"))
                .collect(),
            mean_probability: report.mean_probability,
            entropy: report.predictive_entropy,
            caption: rec.caption.clone(),
            current_label: self.session.get(id).copied().or(rec.quality_label),
        })
    }

    pub fn progress(&self) -> Progress {
        let labeled = self
            .reports
            .iter()
            .filter(|r| self.session.contains_key(&r.object_id))
            .count();
        Progress {
            total: self.reports.len(),
            labeled,
            remaining: self.reports.len() - labeled,
        }
    }

    pub fn label(&mut self, req: &LabelRequest) -> Result<LabelEvent, (StatusCode, String)> {
        let label = u8::try_from(req.quality_label)
            .ok()
            .filter(|q| (1..=5).contains(q))
            .ok_or((
                StatusCode::UNPROCESSABLE_ENTITY,
                format!("quality_label {} outside 1..=5", req.quality_label),
            ))?;
        let rec = self.manifest.get(&req.object_id).ok_or((
            StatusCode::NOT_FOUND,
            format!("unknown object {}", req.object_id),
        ))?;
        if rec.split == Split::Test {
            return Err((
                StatusCode::CONFLICT,
                format!("{} is in the frozen test split", req.object_id),
            ));
        }
        let event = LabelEvent {
            old_label: self.session.get(rec.id()).copied().or(rec.quality_label),
            cycle: self.cycle,
            timestamp: self.clock + 1,
            ..LabelEvent::request(rec.object_id.clone(), label, Origin::UncertaintyReview)
        };
        append_events(&self.log_path, std::slice::from_ref(&event)).map_err(|e| {
            (
                StatusCode::INTERNAL_SERVER_ERROR,
                format!("appending to session log: {e}"),
            )
        })?;
        self.clock += 1;
        self.session.insert(rec.id().to_string(), label);
        Ok(event)
    }
}

type Shared = Arc<Mutex<ReviewState>>;

fn api_error(status: StatusCode, msg: String) -> Response {
    (status, Json(ApiError { error: msg })).into_response()
}

#[derive(Deserialize)]
struct QueueParams {
    limit: Option<usize>,
}

async fn queue(State(st): State<Shared>, Query(q): Query<QueueParams>) -> Json<Vec<ReviewItem>> {
    Json(
        st.lock()
            .expect("state lock")
            .queue(q.limit.unwrap_or(DEFAULT_QUEUE_LIMIT)),
    )
}

async fn item(State(st): State<Shared>, Path(id): Path<String>) -> Response {
    match st.lock().expect("state lock").item(&id) {
        Some(it) => Json(it).into_response(),
        None => api_error(StatusCode::NOT_FOUND, format!("unknown object {id}")),
    }
}

async fn label(State(st): State<Shared>, Json(req): Json<LabelRequest>) -> Response {
    match st.lock().expect("state lock").label(&req) {
        Ok(ev) => Json(ev).into_response(),
        Err((status, msg)) => api_error(status, msg),
    }
}

async fn progress(State(st): State<Shared>) -> Json<Progress> {
    Json(st.lock().expect("state lock").progress())
}

async fn view_image(
    State(dir): State<Option<Arc<PathBuf>>>,
    Path((id, file)): Path<(String, String)>,
) -> Response {
    let valid_file = (0..CLASSIFIER_VIEWS).any(|k| file == format!("view_{k}.png"));
    let (Some(dir), true, Ok(_)) = (dir, valid_file, ObjectId::new(id.as_str())) else {
        return api_error(StatusCode::NOT_FOUND, "no such view".into());
    };
    match tokio::fs::read(dir.join(&id).join(&file)).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, "image/png")], bytes).into_response(),
        Err(_) => api_error(StatusCode::NOT_FOUND, format!("no view {file} for {id}")),
    }
}

const PLACEHOLDER: &str = r#"<!doctype html>
<meta charset="utf-8">
<title>qcurate review</title>
<body style="font-family:sans-serif">
<h1>Review queue</h1>
<p id="progress"></p>
<div id="queue"></div>
<script>
async function refresh() {
  const p = await (await fetch('/api/progress')).json();
  document.getElementById('progress').textContent = p.labeled + ' of ' + p.total + ' labeled';
  const items = await (await fetch('/api/queue?limit=5')).json();
  const root = document.getElementById('queue');
  root.replaceChildren();
  for (const it of items) {
    const row = document.createElement('div');
    row.innerHTML = '<h3></h3>' + it.image_uris.map(u => '<img width="96" src="' + u + '">').join('');
    row.querySelector('h3').textContent = it.object_id + '  H=' + it.entropy.toFixed(3) + '  ' + (it.caption || '');
    for (let q = 1; q <= 5; q++) {
      const b = document.createElement('button');
      b.textContent = q;
      b.onclick = async () => {
        await fetch('/api/label', {method: 'POST', headers: {'content-type': 'application/json'},
          body: JSON.stringify({object_id: it.object_id, quality_label: q})});
        refresh();
      };
      row.appendChild(b);
    }
    root.appendChild(row);
  }
}
refresh();
</script>
"#;

pub fn router(state: ReviewState, views: Option<PathBuf>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/queue", get(queue))
        .route("/api/item/{id}", get(item))
        .route("/api/label", post(label))
        .route("/api/progress", get(progress))
        .with_state(Arc::new(Mutex::new(state)));
    let images = Router::new()
        .route("/views/{id}/{file}", get(view_image))
        .with_state(views.map(Arc::new));
    let app = api.merge(images);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(|| async { Html(PLACEHOLDER) })),
    }
}

pub fn build(ctx: &Ctx, a: &ServeArgs) -> CliResult<Router> {
    let mpath = input_path(&a.manifest, &ctx.cfg.paths.manifest, "manifest")?;
    require_file(&a.uncertainty, "uncertainty reports")?;
    let manifest = load_manifest(&mpath)?;
    let reports: Vec<UncertaintyReport> = read_jsonl(&a.uncertainty)?;
    let state = ReviewState::new(manifest, reports, a.log.clone())?;
    Ok(router(state, a.views.clone(), a.static_dir.clone()))
}

pub fn serve_blocking(ctx: &Ctx, a: &ServeArgs) -> CliResult<()> {
    let app = build(ctx, a)?;
    let port = a.port.unwrap_or(ctx.cfg.port);
    let addr: SocketAddr = format!("{}:{port}", a.host)
        .parse()
        .or_input(format!("address {}:{port}", a.host))?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .or_internal("starting runtime")?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .or_input(format!("binding {addr}"))?;
        eprintln!("review server listening on http://{addr}");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::new(crate::error::ExitKind::Internal, e))
    })
}
