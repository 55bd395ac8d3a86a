use std::net::SocketAddr;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use swarmdeck_client::{replay, BrokerClient, HttpClient};
use swarmdeck_core::broker::{Envelope, MAX_PAYLOAD};
use swarmdeck_core::emg::TrainConfig;
use swarmdeck_core::gateway::api::{EmgTrainRequest, RunRequest, SsvepRequest};
use swarmdeck_core::gateway::bridge::Outbound;
use swarmdeck_core::gateway::{presets, run_scenario};
use swarmdeck_core::tuio::{decode_tuio_frame, TuioFrame};
use swarmdeck_core::world::Point;
use swarmdeck_server::{start, RunningServer, ServerConfig};
use tokio_tungstenite::tungstenite::Message;

const WAIT: Duration = Duration::from_secs(5);

async fn server(scenario: Option<swarmdeck_core::gateway::ScenarioConfig>) -> RunningServer {
    let any = SocketAddr::from(([127, 0, 0, 1], 0));
    start(ServerConfig { broker_addr: any, http_addr: any, scenario, record: None }).await.unwrap()
}

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn console(s: &RunningServer, query: &str) -> Ws {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{}/ws{query}", s.http_addr)).await.unwrap();
    ws
}

async fn next_json(ws: &mut Ws) -> Value {
    loop {
        let msg = tokio::time::timeout(WAIT, ws.next()).await.expect("ws timeout").unwrap().unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

/// Waits until the hub has `n` attached connections.
async fn settle(s: &RunningServer, n: usize) {
    for _ in 0..500 {
        if s.hub.connection_count() >= n {
            return;
        }
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
    panic!("connections never reached {n}");
}

#[tokio::test]
async fn broker_fans_out_in_order() {
    let s = server(None).await;
    let mut subs = Vec::new();
    for i in 0..3 {
        let mut c = BrokerClient::connect(s.broker_addr, &format!("sub{i}")).await.unwrap();
        c.subscribe("robot/+/state").await.unwrap();
        // a duplicate filter must not double deliveries
        c.subscribe("robot/#").await.unwrap();
        subs.push(c);
    }
    let mut publisher = BrokerClient::connect(s.broker_addr, "pub").await.unwrap();
    for n in 0..100u8 {
        publisher.publish(&Envelope::new("robot/4/state", n as u64, vec![n])).await.unwrap();
    }
    publisher.publish(&Envelope::new("robot/4/cmd_vel", 0, vec![200])).await.unwrap();
    publisher.ping().await.unwrap();
    for c in &mut subs {
        for n in 0..100u8 {
            let env = c.recv_timeout(WAIT).await.unwrap();
            assert_eq!((env.topic.as_str(), env.payload[0]), ("robot/4/state", n));
        }
        assert_eq!(c.recv_timeout(WAIT).await.unwrap().payload, vec![200]);
        assert!(c.try_recv().is_none());
    }

    let mut late = BrokerClient::connect(s.broker_addr, "late").await.unwrap();
    late.subscribe("#").await.unwrap();
    publisher.publish(&Envelope::new("fresh/topic", 1, vec![1])).await.unwrap();
    publisher.ping().await.unwrap();
    assert_eq!(late.recv_timeout(WAIT).await.unwrap().topic, "fresh/topic");
    assert!(late.try_recv().is_none(), "nothing retained from before the subscription");
    s.shutdown();
}

#[tokio::test]
async fn broker_reports_errors() {
    let s = server(None).await;
    let mut c = BrokerClient::connect(s.broker_addr, "c").await.unwrap();
    assert!(c.subscribe("a/#/b").await.is_err());
    assert!(c.subscribe("a/+/b").await.is_ok());

    // bypass client-side validation with a raw frame
    use swarmdeck_core::broker::{encode_frame, Frame};
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let mut raw = tokio::net::TcpStream::connect(s.broker_addr).await.unwrap();
    let big = Envelope::new("x", 0, vec![0; MAX_PAYLOAD + 1]);
    raw.write_all(&encode_frame(&Frame::publish(&big))).await.unwrap();
    let mut head = [0u8; 5];
    tokio::time::timeout(WAIT, raw.read_exact(&mut head)).await.unwrap().unwrap();
    assert_eq!(head[0], 6, "ERROR frame");
    s.shutdown();
}

#[tokio::test]
async fn console_bridge_validates_and_fans_out() {
    let s = server(None).await;
    let mut tap = BrokerClient::connect(s.broker_addr, "tap").await.unwrap();
    tap.subscribe("ui/#").await.unwrap();
    let mut a = console(&s, "").await;
    let mut b = console(&s, "?topics=robot/%2B/state").await;
    settle(&s, 3).await;

    a.send(Message::text(r#"{"topic":"ui/emg/gesture","payload":{"gesture":"jump"}}"#)).await.unwrap();
    let err = next_json(&mut a).await;
    assert_eq!(err["topic"], "ui/emg/gesture");
    assert!(err["error"].as_str().unwrap().contains("jump"));
    a.send(Message::text(r#"{"topic":"robot/1/cmd_vel","payload":{"vx":1,"vy":0,"w":0}}"#)).await.unwrap();
    assert!(next_json(&mut a).await["error"].as_str().unwrap().contains("not writable"));
    a.send(Message::text(r#"{"topic":"ui/emg/gesture","payload":{"gesture":"up"}}"#)).await.unwrap();
    let env = tap.recv_timeout(WAIT).await.unwrap();
    assert_eq!(env.topic, "ui/emg/gesture");
    assert_eq!(serde_json::from_slice::<Value>(&env.payload).unwrap(), json!({"gesture": "up"}));
    assert!(tap.try_recv().is_none(), "rejected messages never reach the broker");

    let mut publisher = BrokerClient::connect(s.broker_addr, "pub").await.unwrap();
    let state = json!({"x": 1.0, "y": 0.5, "theta": 0.0, "vx": 0.0, "vy": 0.0, "w": 0.0, "t": 0.0});
    publisher.publish(&Envelope::new("internal/debug", 0, b"{}".to_vec())).await.unwrap();
    publisher.publish(&Envelope::new("robot/1/state", 7, serde_json::to_vec(&state).unwrap())).await.unwrap();
    publisher.publish(&Envelope::new("tracking/tuio", 8, vec![1, 2, 3])).await.unwrap();
    let got_a: Outbound = serde_json::from_value(next_json(&mut a).await).unwrap();
    let got_b: Outbound = serde_json::from_value(next_json(&mut b).await).unwrap();
    assert_eq!(got_a, got_b);
    assert_eq!((got_a.topic.as_str(), got_a.t), ("robot/1/state", 7));
    assert_eq!(got_a.payload, Some(state));
    let tuio: Outbound = serde_json::from_value(next_json(&mut a).await).unwrap();
    assert_eq!(tuio.payload_bytes().unwrap(), vec![1, 2, 3]);
    s.shutdown();
}

#[tokio::test]
async fn console_touch_reaches_the_tracker() {
    let s = server(Some(presets::formation())).await;
    let mut tap = BrokerClient::connect(s.broker_addr, "tap").await.unwrap();
    tap.subscribe("tracking/tuio").await.unwrap();
    let mut ws = console(&s, "?topics=tracking/tuio").await;
    settle(&s, 3).await;
    ws.send(Message::text(r#"{"topic":"ui/touch","payload":{"id":9,"x":1.0,"y":0.5,"phase":"down"}}"#)).await.unwrap();
    let mut found: Option<TuioFrame> = None;
    for _ in 0..60 {
        let env = tap.recv_timeout(WAIT).await.unwrap();
        let frame = decode_tuio_frame(&env.payload).unwrap();
        if !frame.cursors.is_empty() {
            found = Some(frame);
            break;
        }
    }
    let frame = found.expect("a cursor appears within two seconds");
    assert_eq!(frame.cursors.len(), 1);
    assert_eq!(frame.objects.len(), 3);
    s.shutdown();
}

#[tokio::test]
async fn http_api() {
    let s = server(None).await;
    let http = HttpClient::new(format!("http://{}", s.http_addr));
    let h = http.health().await.unwrap();
    assert_eq!(h.status, "ok");
    assert_eq!(h.broker_addr, s.broker_addr.to_string());

    let bad = http.validate(r#"{"robots": [], "tick_rate": -1}"#).await.unwrap();
    assert!(!bad.valid);
    assert!(bad.violations.len() >= 2, "{:?}", bad.violations);
    assert!(!http.validate("{not json").await.unwrap().valid);
    let cfg = http.preset("surround").await.unwrap();
    assert_eq!(cfg, presets::surround());
    assert!(http.validate(&serde_json::to_string(&cfg).unwrap()).await.unwrap().valid);

    let req = RunRequest { config: serde_json::to_value(&cfg).unwrap(), duration: Some(3.0), include_log: true };
    let a = http.run(&req).await.unwrap();
    let offline = run_scenario(&cfg, Some(3.0)).unwrap();
    assert_eq!(a.report.log_sha256, offline.report.log_sha256);
    assert_eq!(a.log.unwrap().as_bytes(), offline.log.as_slice());
    let empty = RunRequest { config: json!({"robots": []}), duration: Some(1.0), include_log: false };
    let err = http.run(&empty).await.unwrap_err();
    assert!(!err.violations().is_empty());

    let d =
        http.ssvep_classify(&SsvepRequest { region: Some(26), snr: Some(10.0), ..Default::default() }).await.unwrap();
    assert_eq!(d.region, 26);
    assert!(http.ssvep_classify(&SsvepRequest::default()).await.is_err());

    let train = EmgTrainRequest {
        per_class: 40,
        held_out_per_class: 20,
        seed: 1,
        train: TrainConfig { epochs: 30, ..Default::default() },
    };
    let trained = http.emg_train(&train).await.unwrap();
    assert!(trained.report.held_out_accuracy > 0.8);

    let points: Vec<Point> = (0..50).map(|i| Point::new(0.2 + 0.02 * i as f64, 0.5)).collect();
    let path = http.gaze_fit(points).await.unwrap();
    assert!((path.length() - 0.98).abs() < 0.005);
    assert!(http.gaze_fit(vec![Point::new(0.0, 0.0)]).await.is_err());

    let frame = swarmdeck_core::tuio::TuioFrame::new(12);
    let bytes = http.tuio_encode(&frame).await.unwrap();
    assert_eq!(http.tuio_decode(bytes.bytes_b64).await.unwrap(), frame);

    assert!(http.publish("ui/emg/gesture", json!({"gesture": "up"})).await.is_ok());
    assert!(http.publish("robot/1/cmd_vel", json!({"vx": 0, "vy": 0, "w": 0})).await.is_err());
    let schemas = http.schemas().await.unwrap();
    assert!(schemas["ui"]["ui/touch"].is_object());
    s.shutdown();
}

#[tokio::test]
async fn replay_republishes_a_recorded_run() {
    let s = server(None).await;
    let out = run_scenario(&presets::common_velocity(), Some(1.0)).unwrap();
    let mut sink = BrokerClient::connect(s.broker_addr, "sink").await.unwrap();
    sink.subscribe("#").await.unwrap();
    let mut player = BrokerClient::connect(s.broker_addr, "player").await.unwrap();

    let n = replay(&mut player, &out.records, 0.0).await.unwrap();
    assert_eq!(n, out.records.len());
    for r in &out.records {
        let env = sink.recv_timeout(WAIT).await.unwrap();
        assert_eq!((&env.topic, env.timestamp_us, &env.payload), (&r.topic, r.sim_time, &r.payload));
    }

    let started = std::time::Instant::now();
    replay(&mut player, &out.records, 2.0).await.unwrap();
    let took = started.elapsed().as_secs_f64();
    let span = (out.records.last().unwrap().sim_time - out.records[0].sim_time) as f64 * 1e-6;
    assert!((took - span / 2.0).abs() < 0.2, "took {took} for span {span}");
    s.shutdown();
}
