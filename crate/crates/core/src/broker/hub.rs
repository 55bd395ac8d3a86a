use std::collections::BTreeMap;
use std::sync::mpsc;
use std::sync::{Arc, Mutex, MutexGuard};

use super::{BrokerError, Envelope, TopicFilter};

pub type ConnId = u64;
pub type SubId = u32;

/// Outbound queue of one connection. Returning `false` marks the connection
/// broken; the hub then drops it.
pub trait Sink: Send {
    fn deliver(&self, env: &Envelope) -> bool;
}

impl Sink for mpsc::Sender<Envelope> {
    fn deliver(&self, env: &Envelope) -> bool {
        self.send(env.clone()).is_ok()
    }
}

struct Connection {
    name: String,
    sink: Box<dyn Sink>,
    next_sub: SubId,
    filters: BTreeMap<SubId, TopicFilter>,
}

#[derive(Default)]
struct Router {
    next_conn: ConnId,
    conns: BTreeMap<ConnId, Connection>,
}

impl Router {
    fn publish(&mut self, env: &Envelope) -> usize {
        let mut delivered = 0;
        let mut broken = Vec::new();
        for (id, conn) in &self.conns {
            // several matching filters on one connection still yield one copy
            if conn.filters.values().any(|f| f.matches(&env.topic)) {
                if conn.sink.deliver(env) {
                    delivered += 1;
                } else {
                    broken.push(*id);
                }
            }
        }
        for id in broken {
            self.conns.remove(&id);
        }
        delivered
    }
}

/// Shared handle to the routing table.
#[derive(Clone, Default)]
pub struct Hub {
    inner: Arc<Mutex<Router>>,
}

impl Hub {
    pub fn new() -> Self {
        Self::default()
    }

    fn router(&self) -> MutexGuard<'_, Router> {
        // a panic while routing leaves the table consistent; keep serving
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn attach(&self, name: &str, sink: Box<dyn Sink>) -> ConnId {
        let mut r = self.router();
        r.next_conn += 1;
        let id = r.next_conn;
        r.conns.insert(id, Connection { name: name.to_string(), sink, next_sub: 0, filters: BTreeMap::new() });
        id
    }

    pub fn detach(&self, conn: ConnId) {
        self.router().conns.remove(&conn);
    }

    pub fn subscribe(&self, conn: ConnId, filter: &str) -> Result<SubId, BrokerError> {
        let filter = TopicFilter::parse(filter)?;
        let mut r = self.router();
        let c = r.conns.get_mut(&conn).ok_or(BrokerError::UnknownConnection(conn))?;
        c.next_sub += 1;
        let id = c.next_sub;
        c.filters.insert(id, filter);
        Ok(id)
    }

    pub fn unsubscribe(&self, conn: ConnId, sub: SubId) -> bool {
        self.router().conns.get_mut(&conn).is_some_and(|c| c.filters.remove(&sub).is_some())
    }

    /// Routes `env` to every connection with a matching filter and returns how
    /// many connections received it.
    pub fn publish(&self, env: &Envelope) -> Result<usize, BrokerError> {
        env.validate()?;
        Ok(self.router().publish(env))
    }

    pub fn connection_count(&self) -> usize {
        self.router().conns.len()
    }

    pub fn connection_names(&self) -> Vec<String> {
        self.router().conns.values().map(|c| c.name.clone()).collect()
    }

    pub fn connect_local(&self, name: &str) -> LocalClient {
        let (tx, rx) = mpsc::channel();
        let conn = self.attach(name, Box::new(tx));
        LocalClient { hub: self.clone(), conn, rx }
    }
}

/// In-process connection: same routing contract as a TCP client.
pub struct LocalClient {
    hub: Hub,
    conn: ConnId,
    rx: mpsc::Receiver<Envelope>,
}

impl LocalClient {
    pub fn id(&self) -> ConnId {
        self.conn
    }

    pub fn hub(&self) -> &Hub {
        &self.hub
    }

    pub fn subscribe(&self, filter: &str) -> Result<SubId, BrokerError> {
        self.hub.subscribe(self.conn, filter)
    }

    pub fn publish(&self, topic: &str, timestamp_us: u64, payload: Vec<u8>) -> Result<usize, BrokerError> {
        self.hub.publish(&Envelope::new(topic, timestamp_us, payload))
    }

    pub fn try_recv(&self) -> Option<Envelope> {
        self.rx.try_recv().ok()
    }

    pub fn recv_timeout(&self, timeout: std::time::Duration) -> Option<Envelope> {
        self.rx.recv_timeout(timeout).ok()
    }

    pub fn drain(&self) -> Vec<Envelope> {
        self.rx.try_iter().collect()
    }
}

impl Drop for LocalClient {
    fn drop(&mut self) {
        self.hub.detach(self.conn);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(topic: &str, n: u8) -> Envelope {
        Envelope::new(topic, n as u64, vec![n])
    }

    #[test]
    fn fan_out_counts() {
        let hub = Hub::new();
        let subs: Vec<_> = (0..3).map(|i| hub.connect_local(&format!("s{i}"))).collect();
        for s in &subs {
            s.subscribe("robot/+/state").unwrap();
        }
        let publisher = hub.connect_local("p");
        assert_eq!(publisher.publish("robot/1/state", 0, vec![]).unwrap(), 3);
        assert_eq!(publisher.publish("robot/1/cmd_vel", 0, vec![]).unwrap(), 0);
        for s in &subs {
            assert_eq!(s.drain().len(), 1);
        }
    }

    #[test]
    fn sequential_publishes_keep_order() {
        let hub = Hub::new();
        let a = hub.connect_local("a");
        a.subscribe("x/#").unwrap();
        let p = hub.connect_local("p");
        p.publish("x/y", 1, vec![1]).unwrap();
        p.publish("x/y", 2, vec![2]).unwrap();
        let got: Vec<u8> = a.drain().into_iter().map(|e| e.payload[0]).collect();
        assert_eq!(got, vec![1, 2]);
    }

    #[test]
    fn no_retention_and_duplicate_dedup() {
        let hub = Hub::new();
        let p = hub.connect_local("p");
        p.publish("intent/ssvep", 0, vec![0]).unwrap();
        let s = hub.connect_local("s");
        s.subscribe("intent/#").unwrap();
        s.subscribe("intent/#").unwrap();
        s.subscribe("intent/ssvep").unwrap();
        assert!(s.drain().is_empty());
        assert_eq!(hub.publish(&env("intent/ssvep", 1)).unwrap(), 1);
        assert_eq!(s.drain().len(), 1);
    }

    #[test]
    fn invalid_inputs() {
        let hub = Hub::new();
        let s = hub.connect_local("s");
        assert!(matches!(s.subscribe("a/#/b"), Err(BrokerError::InvalidFilter(_))));
        assert!(matches!(
            s.publish("a", 0, vec![0; super::super::MAX_PAYLOAD + 1]),
            Err(BrokerError::PayloadTooLarge(_))
        ));
        assert!(s.publish("a/+", 0, vec![]).is_err());
        assert!(hub.subscribe(999, "a").is_err());
    }

    #[test]
    fn broken_subscriber_dropped() {
        struct Dead;
        impl Sink for Dead {
            fn deliver(&self, _: &Envelope) -> bool {
                false
            }
        }
        let hub = Hub::new();
        let id = hub.attach("dead", Box::new(Dead));
        hub.subscribe(id, "#").unwrap();
        assert_eq!(hub.connection_count(), 1);
        assert_eq!(hub.publish(&env("a", 0)).unwrap(), 0);
        assert_eq!(hub.connection_count(), 0);
    }

    #[test]
    fn dropping_client_detaches() {
        let hub = Hub::new();
        {
            let c = hub.connect_local("c");
            c.subscribe("#").unwrap();
            assert_eq!(hub.connection_count(), 1);
        }
        assert_eq!(hub.connection_count(), 0);
    }

    #[test]
    fn unsubscribe_stops_delivery() {
        let hub = Hub::new();
        let c = hub.connect_local("c");
        let id = c.subscribe("a").unwrap();
        assert!(hub.unsubscribe(c.id(), id));
        assert_eq!(hub.publish(&env("a", 0)).unwrap(), 0);
    }
}
