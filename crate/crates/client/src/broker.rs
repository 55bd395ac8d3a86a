use std::time::Duration;

use swarmdeck_core::broker::{decode_frame, decode_subscribe_ack, encode_frame, Envelope, Frame, FrameType};
use swarmdeck_core::gateway::{replay_delays, LogRecord};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::tcp::OwnedWriteHalf;
use tokio::net::{TcpStream, ToSocketAddrs};
use tokio::sync::mpsc;
use tokio::task::JoinHandle;
use tokio::time::Instant;

use crate::ClientError;

/// One framed connection to the broker. Deliveries and control replies are
/// split by a reader task; control calls wait for their reply in order.
pub struct BrokerClient {
    wr: OwnedWriteHalf,
    deliveries: mpsc::UnboundedReceiver<Envelope>,
    control: mpsc::UnboundedReceiver<Frame>,
    reader: JoinHandle<()>,
    pings: u64,
}

impl Drop for BrokerClient {
    fn drop(&mut self) {
        self.reader.abort();
    }
}

impl BrokerClient {
    pub async fn connect(addr: impl ToSocketAddrs, name: &str) -> Result<Self, ClientError> {
        let stream = TcpStream::connect(addr).await?;
        stream.set_nodelay(true)?;
        let (mut rd, wr) = stream.into_split();
        let (dtx, deliveries) = mpsc::unbounded_channel();
        let (ctx, control) = mpsc::unbounded_channel();
        let reader = tokio::spawn(async move {
            let mut buf = Vec::with_capacity(64 * 1024);
            let mut chunk = vec![0u8; 64 * 1024];
            loop {
                let n = match rd.read(&mut chunk).await {
                    Ok(0) | Err(_) => return,
                    Ok(n) => n,
                };
                buf.extend_from_slice(&chunk[..n]);
                let mut used = 0;
                loop {
                    match decode_frame(&buf[used..]) {
                        Ok(Some((f, len))) => {
                            used += len;
                            let routed = if f.frame_type == FrameType::Publish {
                                match swarmdeck_core::broker::decode_publish_body(&f.body) {
                                    Ok(env) => dtx.send(env).is_ok(),
                                    Err(e) => ctx.send(Frame::error(&e.to_string())).is_ok(),
                                }
                            } else {
                                ctx.send(f).is_ok()
                            };
                            if !routed {
                                return;
                            }
                        }
                        Ok(None) => break,
                        Err(e) => {
                            let _ = ctx.send(Frame::error(&e.to_string()));
                            return;
                        }
                    }
                }
                buf.drain(..used);
            }
        });
        let mut client = Self { wr, deliveries, control, reader, pings: 0 };
        client.send(&Frame::connect(name)).await?;
        match client.reply().await? {
            f if f.frame_type == FrameType::Connect => Ok(client),
            f => Err(ClientError::Remote(format!("unexpected {:?} during connect", f.frame_type))),
        }
    }

    async fn send(&mut self, f: &Frame) -> Result<(), ClientError> {
        self.wr.write_all(&encode_frame(f)).await?;
        Ok(())
    }

    async fn reply(&mut self) -> Result<Frame, ClientError> {
        let f = self.control.recv().await.ok_or(ClientError::Closed)?;
        if f.frame_type == FrameType::Error {
            return Err(ClientError::Remote(String::from_utf8_lossy(&f.body).into_owned()));
        }
        Ok(f)
    }

    /// Subscribes and waits for the broker's acknowledgement.
    pub async fn subscribe(&mut self, filter: &str) -> Result<u32, ClientError> {
        self.send(&Frame::subscribe(filter)).await?;
        let f = self.reply().await?;
        if f.frame_type != FrameType::Subscribe {
            return Err(ClientError::Remote(format!("expected a subscribe ack, got {:?}", f.frame_type)));
        }
        Ok(decode_subscribe_ack(&f.body)?.0)
    }

    /// Fire-and-forget; a broker-side rejection surfaces on the next
    /// [`ping`](Self::ping) or subscribe.
    pub async fn publish(&mut self, env: &Envelope) -> Result<(), ClientError> {
        env.validate()?;
        self.send(&Frame::publish(env)).await
    }

    /// Round trip through the broker. Once it returns, everything this client
    /// published before has been routed.
    pub async fn ping(&mut self) -> Result<(), ClientError> {
        self.pings += 1;
        let token = self.pings.to_be_bytes().to_vec();
        self.send(&Frame::new(FrameType::Ping, token.clone())).await?;
        loop {
            let f = self.reply().await?;
            if f.frame_type == FrameType::Pong && f.body == token {
                return Ok(());
            }
        }
    }

    pub async fn recv(&mut self) -> Option<Envelope> {
        self.deliveries.recv().await
    }

    pub async fn recv_timeout(&mut self, timeout: Duration) -> Option<Envelope> {
        tokio::time::timeout(timeout, self.deliveries.recv()).await.ok().flatten()
    }

    pub fn try_recv(&mut self) -> Option<Envelope> {
        self.deliveries.try_recv().ok()
    }
}

/// Republishes `records` in order, spacing them by their recorded sim-time
/// gaps divided by `speed` (0 = as fast as possible). Returns the count sent.
pub async fn replay(client: &mut BrokerClient, records: &[LogRecord], speed: f64) -> Result<usize, ClientError> {
    let delays = replay_delays(records, speed);
    let start = Instant::now();
    let mut due = Duration::ZERO;
    for (r, d) in records.iter().zip(delays) {
        due += d;
        if !due.is_zero() {
            tokio::time::sleep_until(start + due).await;
        }
        client.publish(&Envelope::new(r.topic.clone(), r.sim_time, r.payload.clone())).await?;
    }
    client.ping().await?;
    Ok(records.len())
}
