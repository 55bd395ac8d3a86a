//! TCP front end of the hub. One reader task per connection routes inbound
//! frames synchronously; one writer task drains that connection's single
//! ordered outbound queue. Replies share the queue with deliveries, so a PONG
//! doubles as a barrier.

use swarmdeck_core::broker::{
    decode_frame, decode_publish_body, encode_frame_into, BrokerError, Envelope, Frame, FrameType, Hub, Sink,
};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;

pub async fn serve(listener: TcpListener, hub: Hub) {
    loop {
        match listener.accept().await {
            Ok((stream, peer)) => {
                let _ = stream.set_nodelay(true);
                tokio::spawn(connection(stream, hub.clone(), peer.to_string()));
            }
            Err(e) => tracing::warn!("accept failed: {e}"),
        }
    }
}

enum Out {
    Deliver(Envelope),
    Frame(Frame),
}

struct ConnSink(mpsc::UnboundedSender<Out>);

impl Sink for ConnSink {
    fn deliver(&self, env: &Envelope) -> bool {
        self.0.send(Out::Deliver(env.clone())).is_ok()
    }
}

fn encode_out(out: Out, buf: &mut Vec<u8>) {
    match out {
        Out::Deliver(e) => encode_frame_into(&Frame::publish(&e), buf),
        Out::Frame(f) => encode_frame_into(&f, buf),
    }
}

async fn connection(stream: TcpStream, hub: Hub, peer: String) {
    let (mut rd, mut wr) = stream.into_split();
    let (tx, mut rx) = mpsc::unbounded_channel::<Out>();
    let conn = hub.attach(&peer, Box::new(ConnSink(tx.clone())));

    let writer = tokio::spawn(async move {
        let mut buf = Vec::new();
        while let Some(out) = rx.recv().await {
            buf.clear();
            encode_out(out, &mut buf);
            while buf.len() < 256 * 1024 {
                match rx.try_recv() {
                    Ok(out) => encode_out(out, &mut buf),
                    Err(_) => break,
                }
            }
            if wr.write_all(&buf).await.is_err() {
                break;
            }
        }
    });

    let mut inbuf: Vec<u8> = Vec::with_capacity(64 * 1024);
    let mut chunk = vec![0u8; 64 * 1024];
    'read: loop {
        let n = match rd.read(&mut chunk).await {
            Ok(0) | Err(_) => break,
            Ok(n) => n,
        };
        inbuf.extend_from_slice(&chunk[..n]);
        let mut used = 0;
        loop {
            match decode_frame(&inbuf[used..]) {
                Ok(Some((frame, len))) => {
                    used += len;
                    if let Some(reply) = handle(&hub, conn, frame) {
                        let _ = tx.send(Out::Frame(reply));
                    }
                }
                Ok(None) => break,
                Err(e) => {
                    // framing is lost; report and hang up
                    let _ = tx.send(Out::Frame(Frame::error(&e.to_string())));
                    break 'read;
                }
            }
        }
        inbuf.drain(..used);
    }
    hub.detach(conn);
    drop(tx);
    let _ = writer.await;
}

fn handle(hub: &Hub, conn: u64, frame: Frame) -> Option<Frame> {
    let err = |e: BrokerError| Some(Frame::error(&e.to_string()));
    match frame.frame_type {
        FrameType::Connect => Some(Frame::new(FrameType::Connect, frame.body)),
        FrameType::Subscribe => match frame.text() {
            Ok(filter) => match hub.subscribe(conn, filter) {
                Ok(id) => Some(Frame::subscribe_ack(id, filter)),
                Err(e) => err(e),
            },
            Err(e) => err(e),
        },
        FrameType::Publish => match decode_publish_body(&frame.body).and_then(|env| hub.publish(&env)) {
            Ok(_) => None,
            Err(e) => err(e),
        },
        FrameType::Ping => Some(Frame::new(FrameType::Pong, frame.body)),
        FrameType::Pong => None,
        FrameType::Error => {
            tracing::debug!("client reported: {}", String::from_utf8_lossy(&frame.body));
            None
        }
    }
}
