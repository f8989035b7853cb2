#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;

use stereo_core::oracle::{detect_orientation, estimate_disparity};
use stereo_core::Orientation;
use stereo_harness::png;
use stereo_harness::server::{router, AppState, CreatedSession, ResponseResult};
use stereo_harness::session::SessionRecord;

pub async fn spawn(app: AppState) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(Arc::new(app))).await.unwrap() });
    addr
}

pub struct Client {
    pub http: reqwest::Client,
    pub base: String,
}

pub struct Stimulus {
    pub png: Vec<u8>,
    pub trial: usize,
    pub level: usize,
    pub arcsec: f64,
}

impl Client {
    pub fn new(addr: SocketAddr) -> Self {
        Self { http: reqwest::Client::new(), base: format!("http://{addr}") }
    }

    pub async fn create(&self, body: serde_json::Value) -> CreatedSession {
        let resp = self.http.post(format!("{}/sessions", self.base)).json(&body).send().await.unwrap();
        assert_eq!(resp.status(), 201);
        resp.json().await.unwrap()
    }

    pub async fn stimulus(&self, id: &str) -> reqwest::Response {
        self.http.get(format!("{}/sessions/{id}/stimulus", self.base)).send().await.unwrap()
    }

    pub async fn fetch_stimulus(&self, id: &str) -> Stimulus {
        let resp = self.stimulus(id).await;
        assert_eq!(resp.status(), 200);
        let header = |name: &str| resp.headers()[name].to_str().unwrap().to_string();
        let (trial, level, arcsec) = (header("x-trial-index"), header("x-level-index"), header("x-arcsec"));
        Stimulus {
            png: resp.bytes().await.unwrap().to_vec(),
            trial: trial.parse().unwrap(),
            level: level.parse().unwrap(),
            arcsec: arcsec.parse().unwrap(),
        }
    }

    pub async fn respond(&self, id: &str, orientation: Orientation) -> reqwest::Response {
        self.http
            .post(format!("{}/sessions/{id}/response", self.base))
            .json(&serde_json::json!({ "orientation": orientation }))
            .send()
            .await
            .unwrap()
    }

    pub async fn record(&self, id: &str) -> SessionRecord {
        self.http.get(format!("{}/sessions/{id}", self.base)).send().await.unwrap().json().await.unwrap()
    }

    /// Runs a session to the end, reading the gap from each stimulus and
    /// answering correctly iff the presented disparity is at least `theta`.
    /// Returns the responses sent.
    pub async fn run_policy(&self, id: &str, theta: f64) -> Vec<Orientation> {
        let mut sent = Vec::new();
        loop {
            let stim = self.fetch_stimulus(id).await;
            let seen = read_gap(&stim.png);
            let answer = if stim.arcsec >= theta { seen } else { seen.rotated_cw() };
            let resp = self.respond(id, answer).await;
            assert_eq!(resp.status(), 200);
            let result: ResponseResult = resp.json().await.unwrap();
            sent.push(answer);
            if result.finished {
                return sent;
            }
        }
    }
}

/// Gap orientation recovered from the image alone.
pub fn read_gap(png_bytes: &[u8]) -> Orientation {
    let img = png::decode(png_bytes).unwrap();
    let map = estimate_disparity(&img, 12).unwrap();
    let lag = map.dominant_figure_lag().unwrap();
    detect_orientation(&map, lag, None).unwrap().orientation
}
