//! Console WebSocket: relays the outbound allowlist to the socket and feeds
//! validated `ui/...` messages into the hub.

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::response::Response;
use futures::{SinkExt, StreamExt};
use serde::Deserialize;
use swarmdeck_core::broker::{Envelope, TopicFilter};
use swarmdeck_core::gateway::bridge::{outbound_filters, parse_inbound, BridgeError, Outbound};
use swarmdeck_core::gateway::schema::OUTBOUND_ALLOW;
use tokio::sync::mpsc;

use crate::{AppState, ChannelSink};

#[derive(Debug, Default, Deserialize)]
pub struct WsParams {
    /// Comma-separated filters narrowing the allowlist.
    topics: Option<String>,
}

pub async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>, Query(p): Query<WsParams>) -> Response {
    ws.on_upgrade(move |socket| session(socket, state, p))
}

fn narrowing(p: &WsParams) -> Result<Vec<TopicFilter>, String> {
    match &p.topics {
        None => Ok(Vec::new()),
        Some(list) => list
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| TopicFilter::parse(s).map_err(|e| e.to_string()))
            .collect(),
    }
}

fn error_text(e: &BridgeError) -> String {
    serde_json::to_string(e).expect("error serializes")
}

async fn session(socket: WebSocket, state: AppState, params: WsParams) {
    let (mut tx, mut rx) = socket.split();
    let narrow = match narrowing(&params) {
        Ok(n) => n,
        Err(error) => {
            let _ = tx.send(Message::Text(error_text(&BridgeError { error, topic: None }).into())).await;
            return;
        }
    };
    let (env_tx, mut env_rx) = mpsc::unbounded_channel::<Envelope>();
    let (err_tx, mut err_rx) = mpsc::unbounded_channel::<String>();
    let conn = state.hub.attach("console", Box::new(ChannelSink(env_tx)));
    for f in OUTBOUND_ALLOW {
        state.hub.subscribe(conn, f).expect("static filter");
    }
    let allow = outbound_filters();

    let writer = tokio::spawn(async move {
        loop {
            let text = tokio::select! {
                Some(env) = env_rx.recv() => {
                    if !allow.iter().any(|f| f.matches(&env.topic)) {
                        continue;
                    }
                    if !narrow.is_empty() && !narrow.iter().any(|f| f.matches(&env.topic)) {
                        continue;
                    }
                    serde_json::to_string(&Outbound::from_envelope(&env)).expect("outbound serializes")
                }
                Some(err) = err_rx.recv() => err,
                else => break,
            };
            if tx.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });

    while let Some(Ok(msg)) = rx.next().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Binary(_) => {
                let _ = err_tx
                    .send(error_text(&BridgeError { error: "binary frames are not accepted".into(), topic: None }));
                continue;
            }
            Message::Close(_) => break,
            _ => continue,
        };
        match parse_inbound(&text) {
            Ok(m) => {
                if let Err(e) = state.hub.publish(&Envelope::new(m.topic(), state.clock.now_us(), m.payload())) {
                    let _ =
                        err_tx.send(error_text(&BridgeError { error: e.to_string(), topic: Some(m.topic().into()) }));
                }
            }
            Err(e) => {
                let _ = err_tx.send(error_text(&e));
            }
        }
    }
    state.hub.detach(conn);
    drop(err_tx);
    let _ = writer.await;
}
