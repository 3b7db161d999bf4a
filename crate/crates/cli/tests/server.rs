use std::f64::consts::{FRAC_PI_2, PI};
use std::net::TcpStream;
use std::time::{Duration, Instant};

use hyperwalk_cli::server::{spawn, ServerHandle};
use hyperwalk_cli::session::{push_number, Session, SessionConfig, Shared};
use proptest::prelude::*;
use serde_json::{json, Value};
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};

const SCHEMA: &str = include_str!("../schema/protocol.schema.json");

fn server(max_sessions: usize) -> ServerHandle {
    spawn("127.0.0.1:0", SessionConfig::default(), max_sessions).unwrap()
}

struct Client(WebSocket<MaybeTlsStream<TcpStream>>);

impl Client {
    fn connect(h: &ServerHandle) -> Self {
        let (ws, _) = tungstenite::connect(format!("ws://{}", h.addr)).unwrap();
        Client(ws)
    }

    fn send(&mut self, v: &Value) {
        self.send_text(&v.to_string());
    }

    fn send_text(&mut self, t: &str) {
        self.0.send(Message::text(t)).unwrap();
    }

    fn recv_text(&mut self) -> String {
        loop {
            match self.0.read().unwrap() {
                Message::Text(t) => return t.as_str().to_string(),
                Message::Close(_) => panic!("closed"),
                _ => {}
            }
        }
    }

    fn recv(&mut self) -> Value {
        serde_json::from_str(&self.recv_text()).unwrap()
    }

    fn ask(&mut self, v: &Value) -> Value {
        self.send(v);
        self.recv()
    }
}

fn hello(space: &str) -> Value {
    json!({"type": "hello", "space": space})
}

fn input(dt: f64, mv: [f64; 3], yaw: f64, pitch: f64) -> Value {
    json!({"type": "input", "dt": dt, "move": mv, "yaw": yaw, "pitch": pitch, "reset": false})
}

/// A fixed but irregular stream of inputs.
fn scripted(seed: u64, n: usize) -> Vec<Value> {
    (0..n)
        .map(|i| {
            let s = (seed * 7919 + i as u64) as f64;
            let w = |k: f64| (s * k).sin();
            input(
                0.016 + 0.01 * w(0.37).abs(),
                [w(1.3), 0.4 * w(0.71), w(0.23).abs()],
                0.05 * w(0.53),
                0.02 * w(0.91),
            )
        })
        .collect()
}

fn matrix(v: &Value) -> [[f64; 4]; 4] {
    let a: Vec<f64> = v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(a.len(), 16);
    std::array::from_fn(|c| std::array::from_fn(|r| a[4 * c + r]))
}

/// max |Mᵀ J M − J| for the given signature, and max |M|.
fn gram_error(m: &[[f64; 4]; 4], sig: [f64; 4]) -> (f64, f64) {
    let mut err: f64 = 0.0;
    let mut big: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let g: f64 = (0..4).map(|k| sig[k] * m[i][k] * m[j][k]).sum();
            let want = if i == j { sig[i] } else { 0.0 };
            err = err.max((g - want).abs());
            big = big.max(m[i][j].abs());
        }
    }
    (err, big)
}

/// Checks one decoded frame matrix against the invariant of its space.
fn check_cell(space: &str, m: &[[f64; 4]; 4]) {
    match space {
        "euclidean" => {
            // rotation block orthonormal, last row 0 0 0 1
            let mut rot = *m;
            rot[3] = [0.0, 0.0, 0.0, 1.0];
            for r in rot.iter_mut().take(3) {
                r[3] = 0.0;
            }
            let (err, _) = gram_error(&rot, [1.0; 4]);
            assert!(err < 1e-6, "{err}");
            for c in 0..3 {
                assert_eq!(m[c][3], 0.0);
            }
            assert_eq!(m[3][3], 1.0);
        }
        _ => {
            if space == "h2e" {
                for k in [0, 1, 3] {
                    assert_eq!(m[2][k], 0.0);
                    assert_eq!(m[k][2], 0.0);
                }
                assert_eq!(m[2][2], 1.0);
            }
            let (err, big) = gram_error(m, [1.0, 1.0, 1.0, -1.0]);
            // nine printed digits: rounding of each product scales with |M|²
            assert!(err < 1e-6 * big.max(1.0).powi(2), "{err} at |M| = {big}");
        }
    }
}

fn validator() -> jsonschema::Validator {
    jsonschema::validator_for(&serde_json::from_str(SCHEMA).unwrap()).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, msg: &Value) {
    let errors: Vec<String> = v.iter_errors(msg).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn hello_then_idle_tick_is_at_the_fundamental_cell() {
    let h = server(4);
    for space in ["h3", "h2e", "euclidean"] {
        let mut c = Client::connect(&h);
        let first = c.ask(&hello(space));
        assert_eq!(first["type"], "frame");
        let f = c.ask(&input(0.0, [0.0; 3], 0.0, 0.0));
        assert_eq!(f["hud"]["space"], space);
        assert_eq!(f["hud"]["loopClosed"], false);
        let m = matrix(&f["cells"][0]);
        for (c, col) in m.iter().enumerate() {
            for (r, &x) in col.iter().enumerate() {
                assert!((x - if r == c { 1.0 } else { 0.0 }).abs() < 1e-12, "{space}");
            }
        }
        assert_eq!(f, first);
    }
}

#[test]
fn thousand_scripted_ticks_match_the_schema() {
    let h = server(4);
    let v = validator();
    for (space, ticks) in [("h3", 1000), ("h2e", 300), ("euclidean", 300)] {
        let mut c = Client::connect(&h);
        let first = c.ask(&hello(space));
        assert_valid(&v, &first);
        let cells = first["cells"].as_array().unwrap().len();
        for (i, msg) in scripted(3, ticks).iter().enumerate() {
            let f = c.ask(msg);
            assert_valid(&v, &f);
            let list = f["cells"].as_array().unwrap();
            assert_eq!(list.len(), cells);
            // all matrices on some ticks, a sample on the rest
            let stride = if i % 50 == 0 { 1 } else { 97 };
            for m in list.iter().step_by(stride) {
                check_cell(space, &matrix(m));
            }
        }
    }
    let err = json!({"type": "error", "message": "x"});
    assert_valid(&v, &err);
    assert!(!v.is_valid(&json!({"type": "frame", "cells": [[1, 2]], "hud": {}})));
}

fn run_serial(h: &ServerHandle, space: &str, script: &[Value]) -> Vec<String> {
    let mut c = Client::connect(h);
    c.send(&hello(space));
    let mut out = vec![c.recv_text()];
    for m in script {
        c.send(m);
        out.push(c.recv_text());
    }
    out
}

#[test]
fn interleaved_sessions_match_serial_runs() {
    let h = server(16);
    let spaces = ["h3", "h2e", "euclidean", "h3"];
    let scripts: Vec<Vec<Value>> = (0..4).map(|k| scripted(10 + k, 120)).collect();
    let serial: Vec<Vec<String>> = (0..4).map(|k| run_serial(&h, spaces[k], &scripts[k])).collect();

    // round-robin from one thread
    let mut clients: Vec<Client> = (0..4).map(|_| Client::connect(&h)).collect();
    let mut got: Vec<Vec<String>> = vec![Vec::new(); 4];
    for (k, c) in clients.iter_mut().enumerate() {
        c.send(&hello(spaces[k]));
    }
    for (k, c) in clients.iter_mut().enumerate() {
        got[k].push(c.recv_text());
    }
    for i in 0..120 {
        for (k, c) in clients.iter_mut().enumerate() {
            c.send(&scripts[k][i]);
        }
        // receive in a rotated order
        for j in 0..4 {
            let k = (i + j) % 4;
            got[k].push(clients[k].recv_text());
        }
    }
    assert_eq!(got, serial);

    // and from four threads at once
    let threads: Vec<_> = (0..4)
        .map(|k| {
            let (space, script, addr) = (spaces[k], scripts[k].clone(), h.addr);
            std::thread::spawn(move || {
                let (ws, _) = tungstenite::connect(format!("ws://{addr}")).unwrap();
                let mut c = Client(ws);
                c.send(&hello(space));
                let mut out = vec![c.recv_text()];
                for m in &script {
                    c.send(m);
                    out.push(c.recv_text());
                }
                out
            })
        })
        .collect();
    for (k, t) in threads.into_iter().enumerate() {
        assert_eq!(t.join().unwrap(), serial[k]);
    }
}

/// Right, up, left, down as four half-second ticks at unit speed.
fn ruld_ticks() -> Vec<Value> {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]]
        .into_iter()
        .map(|m| input(0.5, m, 0.0, 0.0))
        .collect()
}

#[test]
fn ruld_loop_turns_the_frame_only_in_h3() {
    let h = server(4);
    for (space, want_turn) in [("h3", true), ("h2e", false)] {
        let mut c = Client::connect(&h);
        c.ask(&hello(space));
        let frames: Vec<Value> = ruld_ticks().iter().map(|m| c.ask(m)).collect();
        let closed: Vec<bool> = frames.iter().map(|f| f["hud"]["loopClosed"].as_bool().unwrap()).collect();
        assert_eq!(closed, [false, false, false, true], "{space}");
        let hol = frames[3]["hud"]["holonomyDeg"].as_f64().unwrap();
        if want_turn {
            assert!(hol > 0.0, "{hol}");
        } else {
            assert!(hol.abs() < 0.01, "{hol}");
        }
    }
}

#[test]
fn square_walk_closes_after_six_quarter_turns_in_h2e() {
    // step with cosh(step/2)² = 3/2
    let step = 2.0 * 1.5f64.sqrt().acosh();
    let h = server(4);
    let mut c = Client::connect(&h);
    c.ask(&hello("h2e"));
    let mut closed_at = None;
    for i in 1..=6 {
        let f = c.ask(&input(step, [0.0, 0.0, 1.0], FRAC_PI_2, 0.0));
        if f["hud"]["loopClosed"].as_bool().unwrap() {
            closed_at = Some(i);
            // six quarter turns are 540°; the hexagon encloses area π
            let hol = f["hud"]["holonomyDeg"].as_f64().unwrap();
            assert!((hol - 180.0).abs() < 1e-4, "{hol}");
            let m = matrix(&f["cells"][0]);
            assert!((m[3][3] - 1.0).abs() < 1e-6);
            break;
        }
    }
    assert_eq!(closed_at, Some(6));
    // the same walk in flat space closes after four
    let mut c = Client::connect(&h);
    c.ask(&hello("euclidean"));
    let closes: Vec<bool> = (0..4)
        .map(|_| c.ask(&input(1.0, [0.0, 0.0, 1.0], FRAC_PI_2, 0.0))["hud"]["loopClosed"].as_bool().unwrap())
        .collect();
    assert_eq!(closes, [false, false, false, true]);
}

#[test]
fn floor_recedes_by_the_cosh_law_across_cell_walls() {
    let h = server(4);
    let mut c = Client::connect(&h);
    c.ask(&hello("h3"));
    // forward is parallel to the floor; walk 3 units in 0.25 steps
    let mut extra = vec![0.0];
    for _ in 0..12 {
        let f = c.ask(&input(0.25, [0.0, 0.0, 1.0], 0.0, 0.0));
        extra.push(f["hud"]["floorDropExtra"].as_f64().unwrap());
    }
    for w in extra.windows(2) {
        assert!(w[1] > w[0]);
    }
    // sinh(h + e(t)) = sinh(h)·cosh(t): recover h from t = 1, check the rest
    let solve = |t: f64, e: f64| {
        let (mut lo, mut hi) = (1e-6, 5.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (mid + e).sinh() - mid.sinh() * t.cosh() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let h0 = solve(1.0, extra[4]);
    assert!(h0 > 0.1 && h0 < 2.0);
    for (i, &e) in extra.iter().enumerate().skip(1) {
        let t = 0.25 * i as f64;
        let want = (h0.sinh() * t.cosh()).asinh() - h0;
        assert!((e - want).abs() < 1e-6, "t = {t}: {e} vs {want}");
    }
    // flat space: the floor stays put
    let mut c = Client::connect(&h);
    c.ask(&hello("euclidean"));
    for _ in 0..8 {
        let f = c.ask(&input(0.4, [0.0, 0.0, 1.0], 0.0, 0.0));
        assert!(f["hud"]["floorDropExtra"].as_f64().unwrap().abs() < 1e-9);
    }
}

#[test]
fn hud_vergence_tracks_the_wall_ahead() {
    let h = server(4);
    let mut c = Client::connect(&h);
    let f = c.ask(&hello("euclidean"));
    let half = 0.031;
    // cubes of edge 2 centered on the lattice: the wall is 1 ahead
    let deg = |d: f64| (half / d).atan().to_degrees();
    assert!((f["hud"]["vergenceDeg"].as_f64().unwrap() - deg(1.0)).abs() < 1e-7);
    let f = c.ask(&input(0.5, [0.0, 0.0, 1.0], 0.0, 0.0));
    assert!((f["hud"]["vergenceDeg"].as_f64().unwrap() - deg(0.5)).abs() < 1e-7);
    // through the wall into the next cube
    let f = c.ask(&input(0.7, [0.0, 0.0, 1.0], 0.0, 0.0));
    assert!((f["hud"]["vergenceDeg"].as_f64().unwrap() - deg(1.8)).abs() < 1e-7);

    let mut c = Client::connect(&h);
    let f = c.ask(&hello("h3"));
    let v0 = f["hud"]["vergenceDeg"].as_f64().unwrap();
    let limit = half.sinh().atan().to_degrees();
    assert!(v0 > limit);
    // looking down a long way is still above the far limit
    let f = c.ask(&input(0.0, [0.0; 3], 0.0, 0.3));
    assert!(f["hud"]["vergenceDeg"].as_f64().unwrap() > limit);
}

#[test]
fn protocol_errors() {
    let h = server(4);
    let mut c = Client::connect(&h);
    let e = c.ask(&input(0.1, [0.0; 3], 0.0, 0.0));
    assert_eq!(e["type"], "error");
    c.send_text("{not json");
    assert_eq!(c.recv()["type"], "error");
    let e = c.ask(&json!({"type": "hello", "depth": -1}));
    assert_eq!(e["type"], "error");
    assert!(e["message"].as_str().unwrap().contains("depth"));
    let e = c.ask(&json!({"type": "hello", "depth": 9}));
    assert!(e["message"].as_str().unwrap().contains("depth"));
    let e = c.ask(&json!({"type": "hello", "space": "h3", "schlafli": [4, 3, 4]}));
    assert_eq!(e["type"], "error");
    let e = c.ask(&json!({"type": "hello", "ipd": 0}));
    assert_eq!(e["type"], "error");
    // the connection survived all of that
    assert_eq!(c.ask(&hello("h3"))["type"], "frame");
    for bad in [
        json!({"type": "input", "dt": -1}),
        json!({"type": "input", "move": [2, 0, 0]}),
        json!({"type": "input", "yaw": 7}),
        json!({"type": "input", "bogus": 1}),
    ] {
        assert_eq!(c.ask(&bad)["type"], "error", "{bad}");
    }
    assert_eq!(c.ask(&input(0.1, [0.0; 3], 0.0, 0.0))["type"], "frame");
    // a second hello is refused and the connection closed
    let e = c.ask(&hello("h3"));
    assert_eq!(e["type"], "error");
    let mut closed = false;
    for _ in 0..4 {
        match c.0.read() {
            Ok(Message::Close(_)) | Err(_) => {
                closed = true;
                break;
            }
            Ok(_) => {}
        }
    }
    assert!(closed);
}

#[test]
fn reset_returns_to_the_start() {
    let h = server(4);
    let mut c = Client::connect(&h);
    let first = c.ask(&hello("h3"));
    for m in scripted(5, 40) {
        c.ask(&m);
    }
    let f = c.ask(&json!({"type": "input", "reset": true}));
    assert_eq!(f, first);
}

#[test]
fn eight_concurrent_sessions_and_a_cap() {
    let h = server(8);
    let threads: Vec<_> = (0..8)
        .map(|k| {
            let addr = h.addr;
            std::thread::spawn(move || {
                let (ws, _) = tungstenite::connect(format!("ws://{addr}")).unwrap();
                let mut c = Client(ws);
                c.ask(&hello(["h3", "h2e", "euclidean"][k % 3]));
                for m in scripted(k as u64, 50) {
                    assert_eq!(c.ask(&m)["type"], "frame");
                }
                c
            })
        })
        .collect();
    let open: Vec<Client> = threads.into_iter().map(|t| t.join().unwrap()).collect();
    let mut ninth = Client::connect(&h);
    let e = ninth.recv();
    assert_eq!(e["type"], "error");
    drop(open);
    // slots free up once the sessions end
    let deadline = Instant::now() + Duration::from_secs(5);
    loop {
        let mut c = Client::connect(&h);
        c.send(&hello("h3"));
        if c.recv()["type"] == "frame" {
            break;
        }
        assert!(Instant::now() < deadline);
        std::thread::sleep(Duration::from_millis(20));
    }
}

#[test]
fn frame_latency_at_depth_four() {
    let shared = Shared::new(SessionConfig::default());
    let mut s = Session::new(shared);
    let first = s.handle(&hello("h3").to_string());
    let cells = serde_json::from_str::<Value>(&first.messages[0]).unwrap()["cells"].as_array().unwrap().len();
    assert_eq!(cells, 805);
    let script: Vec<String> = scripted(1, 200).iter().map(|v| v.to_string()).collect();
    let mut times: Vec<f64> = script
        .iter()
        .map(|m| {
            let t = Instant::now();
            let r = s.handle(m);
            assert_eq!(r.messages.len(), 1);
            t.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = times[times.len() / 2];
    eprintln!("median frame {:.3} ms", median * 1e3);
    assert!(median < 5e-3, "{median}");

    // same budget for the round trip over a local socket
    let h = server(2);
    let mut c = Client::connect(&h);
    c.ask(&hello("h3"));
    let mut rt: Vec<f64> = scripted(2, 100)
        .iter()
        .map(|m| {
            let t = Instant::now();
            c.send(m);
            let _ = c.recv_text();
            t.elapsed().as_secs_f64()
        })
        .collect();
    rt.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eprintln!("median round trip {:.3} ms", rt[50] * 1e3);
    assert!(rt[50] < 5e-3);
}

#[test]
fn yaw_and_pitch_are_radians() {
    let shared = Shared::new(SessionConfig::default());
    let mut a = Session::new(shared.clone());
    let mut b = Session::new(shared);
    a.handle(&hello("h3").to_string());
    b.handle(&hello("h3").to_string());
    // four quarter turns in one session, one full circle's worth of nothing in the other
    let mut last = String::new();
    for _ in 0..4 {
        last = a.handle(&input(0.0, [0.0; 3], FRAC_PI_2, 0.0).to_string()).messages.remove(0);
    }
    let same = b.handle(&input(0.0, [0.0; 3], 0.0, 0.0).to_string()).messages.remove(0);
    let (x, y): (Value, Value) = (serde_json::from_str(&last).unwrap(), serde_json::from_str(&same).unwrap());
    for (p, q) in x["cells"].as_array().unwrap().iter().zip(y["cells"].as_array().unwrap()).take(50) {
        let (p, q) = (matrix(p), matrix(q));
        for i in 0..4 {
            for j in 0..4 {
                assert!((p[i][j] - q[i][j]).abs() < 1e-6 * q[i][j].abs().max(1.0));
            }
        }
    }
    let half = a.handle(&input(0.0, [0.0; 3], PI, 0.0).to_string()).messages.remove(0);
    assert_ne!(half, last);
}

proptest! {
    #[test]
    fn numbers_keep_nine_significant_digits(x in prop::num::f64::NORMAL) {
        let mut s = String::new();
        push_number(&mut s, x);
        let back: f64 = serde_json::from_str(&s).unwrap();
        prop_assert!(((back - x) / x).abs() <= 5.000001e-9, "{} -> {}", x, s);
        let digits = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count();
        prop_assert!(digits <= 9);
    }
}
