use std::future::Future;
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use tokio::net::TcpListener;

use crate::session::{Controller, Session};

/// `GET /ws` upgrades to a session; `GET /health` answers with a fresh session's state.
pub fn router(controller: Arc<Controller>) -> Router {
    Router::new()
        .route("/ws", get(upgrade))
        .route("/health", get(health))
        .with_state(controller)
}

async fn upgrade(ws: WebSocketUpgrade, State(controller): State<Arc<Controller>>) -> Response {
    ws.on_upgrade(move |socket| run_session(socket, controller))
}

async fn health(State(controller): State<Arc<Controller>>) -> impl IntoResponse {
    Json(Session::new(controller).state())
}

async fn run_session(mut socket: WebSocket, controller: Arc<Controller>) {
    let mut session = Session::new(controller);
    while let Some(Ok(frame)) = socket.recv().await {
        let reply = match frame {
            Message::Text(text) => session.handle_text(text.as_str()),
            Message::Binary(bytes) => match std::str::from_utf8(&bytes) {
                Ok(text) => session.handle_text(text),
                Err(_) => crate::protocol::ServerMessage::error(
                    crate::protocol::ErrorCode::ParseError,
                    "binary frame is not UTF-8",
                ),
            },
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => continue,
        };
        if socket.send(Message::Text(reply.to_json().into())).await.is_err() {
            break;
        }
    }
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    controller: Arc<Controller>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(controller))
        .with_graceful_shutdown(shutdown)
        .await
}
