//! Connection handling and the two transports.
//!
//! Each connection runs one event loop that owns at most one session, so
//! message handling and ticks are serialized per session while connections
//! proceed independently.

use std::collections::HashMap;
use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use frost_harness::output::CsvSink;
use frost_harness::StepTrace;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio::time::{sleep_until, Instant};
use tracing::{debug, info, warn};

use crate::protocol::{ClientMsg, ServerMsg};
use crate::session::Session;

const CHANNEL_DEPTH: usize = 256;

/// State shared by all connections.
#[derive(Debug)]
pub struct ServerContext {
    trace_dir: PathBuf,
    weights: Mutex<HashMap<String, Vec<f64>>>,
}

impl ServerContext {
    pub fn new(trace_dir: impl Into<PathBuf>) -> io::Result<Arc<Self>> {
        let trace_dir = trace_dir.into();
        std::fs::create_dir_all(&trace_dir)?;
        Ok(Arc::new(Self {
            trace_dir,
            weights: Mutex::new(HashMap::new()),
        }))
    }

    pub fn trace_dir(&self) -> &Path {
        &self.trace_dir
    }

    fn stored_weights(&self, key: &str) -> Option<Vec<f64>> {
        self.weights.lock().expect("weights lock").get(key).cloned()
    }

    fn store_weights(&self, key: String, w: Vec<f64>) {
        self.weights.lock().expect("weights lock").insert(key, w);
    }
}

fn write_trace(path: &Path, rows: &[StepTrace]) -> frost_harness::Result<()> {
    let mut sink = CsvSink::create(path, &StepTrace::HEADER)?;
    for r in rows {
        sink.write(r)?;
    }
    sink.finish()
}

/// Writes the session log and stores weights if requested. Returns the
/// trace reference sent to the client.
fn finalize(ctx: &ServerContext, session: &Session) -> String {
    let path = ctx.trace_dir.join(format!("{}.csv", session.id()));
    if let Err(e) = write_trace(&path, session.trace()) {
        warn!(session = session.id(), "trace not written: {e}");
    }
    if session.config().persist_weights {
        if let Some(w) = session.coagent_weights() {
            ctx.store_weights(session.config().weights_key(), w);
        }
    }
    info!(session = session.id(), score = session.score(), ticks = session.ticks(), "session ended");
    path.display().to_string()
}

enum Phase {
    Idle,
    Running { session: Box<Session>, next_tick: Instant },
    Closed,
}

/// Serves one connection: text frames in, text frames out. Returns when the
/// client disconnects or stops reading.
pub async fn handle_connection(
    ctx: Arc<ServerContext>,
    mut incoming: mpsc::Receiver<String>,
    outgoing: mpsc::Sender<String>,
) {
    let mut phase = Phase::Idle;
    loop {
        let deadline = match &phase {
            Phase::Running { next_tick, .. } => Some(*next_tick),
            _ => None,
        };
        let tick = async {
            match deadline {
                Some(d) => sleep_until(d).await,
                None => std::future::pending().await,
            }
        };
        let reply = tokio::select! {
            biased;
            msg = incoming.recv() => match msg {
                Some(text) => handle_message(&ctx, &mut phase, &text),
                None => {
                    if let Phase::Running { session, .. } = &phase {
                        finalize(&ctx, session);
                    }
                    return;
                }
            },
            _ = tick => run_tick(&ctx, &mut phase),
        };
        for msg in reply {
            if outgoing.send(msg.to_json()).await.is_err() {
                if let Phase::Running { session, .. } = &phase {
                    finalize(&ctx, session);
                }
                return;
            }
        }
    }
}

fn run_tick(ctx: &ServerContext, phase: &mut Phase) -> Vec<ServerMsg> {
    let Phase::Running { session, next_tick } = phase else {
        return Vec::new();
    };
    *next_tick += Duration::from_millis(session.config().tick_ms);
    let state = match session.tick() {
        Ok(s) => s,
        Err(e) => {
            let trace_ref = finalize(ctx, session);
            let score = session.score();
            *phase = Phase::Closed;
            return vec![
                ServerMsg::error(format!("simulation error: {e}")),
                ServerMsg::Done { score, trace_ref },
            ];
        }
    };
    let mut out = vec![ServerMsg::State(state)];
    if session.is_finished() {
        let trace_ref = finalize(ctx, session);
        out.push(ServerMsg::Done { score: session.score(), trace_ref });
        *phase = Phase::Closed;
    }
    out
}

fn handle_message(ctx: &ServerContext, phase: &mut Phase, text: &str) -> Vec<ServerMsg> {
    let msg = match ClientMsg::parse(text) {
        Ok(m) => m,
        Err(e) => return vec![ServerMsg::error(e.to_string())],
    };
    debug!(?msg, "client message");
    match (msg, &mut *phase) {
        (ClientMsg::Create(config), Phase::Idle) => {
            let id = uuid::Uuid::new_v4().to_string();
            let stored = config
                .persist_weights
                .then(|| ctx.stored_weights(&config.weights_key()))
                .flatten();
            match Session::new(id.clone(), config.clone(), stored.as_deref()) {
                Ok(session) => {
                    let next_tick = Instant::now() + Duration::from_millis(config.tick_ms);
                    *phase = Phase::Running { session: Box::new(session), next_tick };
                    info!(session = %id, "session created");
                    vec![ServerMsg::Created { session_id: id, config }]
                }
                Err(e) => vec![ServerMsg::error(e.to_string())],
            }
        }
        (ClientMsg::Create(_), _) => {
            vec![ServerMsg::error("a session already exists on this connection")]
        }
        (ClientMsg::Action(a), Phase::Running { session, .. }) => {
            session.set_pending(a);
            Vec::new()
        }
        (ClientMsg::Stop, Phase::Running { session, .. }) => {
            let trace_ref = finalize(ctx, session);
            let score = session.score();
            *phase = Phase::Closed;
            vec![ServerMsg::Done { score, trace_ref }]
        }
        (ClientMsg::Action(_) | ClientMsg::Stop, Phase::Closed) => {
            vec![ServerMsg::error("session closed")]
        }
        (ClientMsg::Action(_) | ClientMsg::Stop, Phase::Idle) => {
            vec![ServerMsg::error("no session: send create first")]
        }
    }
}

/// Spawns the event loop for one connection and returns its channel ends.
pub fn spawn_connection(ctx: Arc<ServerContext>) -> (mpsc::Sender<String>, mpsc::Receiver<String>) {
    let (in_tx, in_rx) = mpsc::channel(CHANNEL_DEPTH);
    let (out_tx, out_rx) = mpsc::channel(CHANNEL_DEPTH);
    tokio::spawn(handle_connection(ctx, in_rx, out_tx));
    (in_tx, out_rx)
}

async fn serve_tcp_stream(ctx: Arc<ServerContext>, stream: TcpStream, peer: SocketAddr) {
    let (read, mut write) = stream.into_split();
    let (in_tx, mut out_rx) = spawn_connection(ctx);
    let writer = tokio::spawn(async move {
        while let Some(line) = out_rx.recv().await {
            if write.write_all(line.as_bytes()).await.is_err() || write.write_all(b"\n").await.is_err() {
                break;
            }
        }
    });
    let mut lines = BufReader::new(read).lines();
    while let Ok(Some(line)) = lines.next_line().await {
        if line.trim().is_empty() {
            continue;
        }
        if in_tx.send(line).await.is_err() {
            break;
        }
    }
    drop(in_tx);
    let _ = writer.await;
    debug!(%peer, "tcp connection closed");
}

/// Accepts newline-delimited JSON connections until the listener fails.
pub async fn serve_tcp(listener: TcpListener, ctx: Arc<ServerContext>) -> io::Result<()> {
    loop {
        let (stream, peer) = listener.accept().await?;
        debug!(%peer, "tcp connection");
        tokio::spawn(serve_tcp_stream(ctx.clone(), stream, peer));
    }
}

async fn serve_socket(ctx: Arc<ServerContext>, socket: WebSocket) {
    let (mut sink, mut stream) = socket.split();
    let (in_tx, mut out_rx) = spawn_connection(ctx);
    let writer = tokio::spawn(async move {
        while let Some(text) = out_rx.recv().await {
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });
    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Binary(b) => match String::from_utf8(b.to_vec()) {
                Ok(t) => t,
                Err(_) => continue,
            },
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => continue,
        };
        if in_tx.send(text).await.is_err() {
            break;
        }
    }
    drop(in_tx);
    let _ = writer.await;
}

async fn ws_upgrade(State(ctx): State<Arc<ServerContext>>, ws: WebSocketUpgrade) -> impl IntoResponse {
    ws.on_upgrade(move |socket| serve_socket(ctx, socket))
}

/// Router exposing the WebSocket endpoint at `/ws`.
pub fn router(ctx: Arc<ServerContext>) -> Router {
    Router::new().route("/ws", get(ws_upgrade)).with_state(ctx)
}

pub async fn serve_ws(listener: TcpListener, ctx: Arc<ServerContext>) -> io::Result<()> {
    axum::serve(listener, router(ctx)).await
}
