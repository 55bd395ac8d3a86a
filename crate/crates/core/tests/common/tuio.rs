use rand::Rng;
use swarmdeck_core::tuio::{TuioBlob, TuioCursor, TuioFrame, TuioObject};

/// Golden bytes from `tests/fixtures`, stored as hex.
pub fn fixture(name: &str) -> Vec<u8> {
    let text = match name {
        "tuio_object_frame.hex" => include_str!("../fixtures/tuio_object_frame.hex"),
        "tuio_cursor_blob_frame.hex" => include_str!("../fixtures/tuio_cursor_blob_frame.hex"),
        "tuio_empty_frame.hex" => include_str!("../fixtures/tuio_empty_frame.hex"),
        other => panic!("no fixture {other}"),
    };
    hex::decode(text.trim()).unwrap()
}

fn unit(rng: &mut impl Rng) -> f64 {
    rng.random_range(0.0..=1.0)
}

fn signed(rng: &mut impl Rng) -> f64 {
    rng.random_range(-10.0..10.0)
}

pub fn random_frame(rng: &mut impl Rng) -> TuioFrame {
    let mut ids: Vec<i32> = (0..30).collect();
    for i in (1..ids.len()).rev() {
        ids.swap(i, rng.random_range(0..=i));
    }
    let mut ids = ids.into_iter();
    let mut frame = TuioFrame::new(rng.random_range(0..i32::MAX));
    for _ in 0..rng.random_range(0..5) {
        frame.cursors.push(TuioCursor {
            session_id: ids.next().unwrap(),
            x: unit(rng),
            y: unit(rng),
            vx: signed(rng),
            vy: signed(rng),
            motion_accel: signed(rng),
        });
    }
    for _ in 0..rng.random_range(0..5) {
        frame.objects.push(TuioObject {
            session_id: ids.next().unwrap(),
            class_id: rng.random_range(0..64),
            x: unit(rng),
            y: unit(rng),
            angle: rng.random_range(0.0..std::f64::consts::TAU),
            vx: signed(rng),
            vy: signed(rng),
            vang: signed(rng),
            motion_accel: signed(rng),
            rotation_accel: signed(rng),
        });
    }
    for _ in 0..rng.random_range(0..5) {
        frame.blobs.push(TuioBlob {
            session_id: ids.next().unwrap(),
            x: unit(rng),
            y: unit(rng),
            angle: rng.random_range(0.0..std::f64::consts::TAU),
            width: rng.random_range(0.001..=1.0),
            height: rng.random_range(0.001..=1.0),
            area: rng.random_range(0.001..=1.0),
            vx: signed(rng),
            vy: signed(rng),
            vang: signed(rng),
            motion_accel: signed(rng),
            rotation_accel: signed(rng),
        });
    }
    frame
}

/// The frames the fixture generator writes, built independently of any bytes.
pub fn golden_frames() -> Vec<(&'static str, TuioFrame)> {
    let mut object = TuioFrame::new(42);
    object.objects.push(TuioObject {
        session_id: 5,
        class_id: 3,
        x: 0.25,
        y: 0.75,
        angle: 1.5,
        vx: 0.125,
        vy: -0.0625,
        vang: 0.5,
        motion_accel: 0.0,
        rotation_accel: 0.0,
    });
    let mut mixed = TuioFrame::new(7);
    mixed.cursors.push(TuioCursor { session_id: 1, x: 0.5, y: 0.5, ..Default::default() });
    mixed.cursors.push(TuioCursor { session_id: 2, x: 0.125, y: 0.875, vx: 0.25, vy: -0.25, motion_accel: 1.0 });
    mixed.blobs.push(TuioBlob {
        session_id: 9,
        x: 0.375,
        y: 0.625,
        angle: 0.75,
        width: 0.0625,
        height: 0.03125,
        area: 0.001953125,
        ..Default::default()
    });
    vec![
        ("tuio_object_frame.hex", object),
        ("tuio_cursor_blob_frame.hex", mixed),
        ("tuio_empty_frame.hex", TuioFrame::new(100)),
    ]
}
