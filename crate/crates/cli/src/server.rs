//! WebSocket transport: one thread and one [`Session`] per connection.

use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use log::{debug, info, warn};
use tungstenite::{Error as WsError, Message};

use crate::session::{error_message, Session, SessionConfig, Shared};

pub struct ServerHandle {
    pub addr: SocketAddr,
    thread: JoinHandle<()>,
}

impl ServerHandle {
    /// Blocks for the life of the server.
    pub fn join(self) {
        let _ = self.thread.join();
    }
}

/// Binds `addr` (port 0 picks a free port) and accepts connections on a
/// background thread.
pub fn spawn(addr: &str, config: SessionConfig, max_sessions: usize) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    let addr = listener.local_addr()?;
    let shared = Shared::new(config);
    let live = Arc::new(AtomicUsize::new(0));
    let thread = std::thread::Builder::new()
        .name("accept".into())
        .spawn(move || accept_loop(listener, shared, live, max_sessions))?;
    info!("listening on {addr}");
    Ok(ServerHandle { addr, thread })
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>, live: Arc<AtomicUsize>, max_sessions: usize) {
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                warn!("accept failed: {e}");
                continue;
            }
        };
        if live.fetch_add(1, Ordering::SeqCst) >= max_sessions {
            live.fetch_sub(1, Ordering::SeqCst);
            warn!("refusing connection: {max_sessions} sessions already open");
            refuse(stream);
            continue;
        }
        let (shared, live) = (shared.clone(), live.clone());
        let spawned = std::thread::Builder::new().name("session".into()).spawn(move || {
            if let Err(e) = serve_connection(stream, shared) {
                debug!("session ended: {e}");
            }
            live.fetch_sub(1, Ordering::SeqCst);
        });
        if let Err(e) = spawned {
            warn!("cannot start session thread: {e}");
        }
    }
}

fn refuse(stream: TcpStream) {
    if let Ok(mut ws) = tungstenite::accept(stream) {
        let _ = ws.send(Message::text(error_message("server is full")));
        let _ = ws.close(None);
        let _ = ws.flush();
    }
}

fn serve_connection(stream: TcpStream, shared: Arc<Shared>) -> Result<(), WsError> {
    stream.set_nodelay(true).ok();
    let mut ws = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e,
        tungstenite::HandshakeError::Interrupted(_) => WsError::ConnectionClosed,
    })?;
    let mut session = Session::new(shared);
    loop {
        let text = match ws.read()? {
            Message::Text(t) => t,
            Message::Binary(_) => {
                ws.send(Message::text(error_message("binary messages are not supported")))?;
                continue;
            }
            Message::Close(_) => return Ok(()),
            _ => continue,
        };
        let reply = session.handle(text.as_str());
        for m in reply.messages {
            ws.send(Message::text(m))?;
        }
        if reply.close {
            ws.close(None)?;
            // drain until the peer acknowledges
            loop {
                match ws.read() {
                    Ok(_) => {}
                    Err(WsError::ConnectionClosed) | Err(WsError::AlreadyClosed) => return Ok(()),
                    Err(e) => return Err(e),
                }
            }
        }
    }
}
