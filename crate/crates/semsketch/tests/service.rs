mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use semsketch::core::grid::aggregate;
use semsketch::core::palette::concept_color;
use semsketch::core::{BitDepth, EncoderConfig, LabelMap, SeededRng};
use semsketch::ingest::ingest_dir;
use semsketch::label_map_file::{write_label_map, write_label_map_file};
use semsketch::service::{router, AppState, ConceptJson, InfoJson, IngestResponse, QueryResponse};
use semsketch::store::VectorStore;
use serde_json::{json, Value};
use tower::ServiceExt;

const BOUNDARY: &str = "sketchboundary42";

struct Harness {
    app: Router,
    state: Arc<AppState>,
    store_path: std::path::PathBuf,
    _dir: tempfile::TempDir,
}

fn harness(n: usize) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let (vocab, table) = common::fixture();
    let store_path = dir.path().join("store.svs");
    let config = EncoderConfig::new(n, 2, BitDepth::B32).unwrap();
    let store = VectorStore::create(&store_path, config, table.scale()).unwrap();
    let state = Arc::new(AppState::new(vocab, table, store).unwrap());
    Harness { app: router(state.clone()), state, store_path, _dir: dir }
}

fn multipart(meta: Option<Value>, maps: &[&LabelMap]) -> Body {
    let mut body = Vec::new();
    if let Some(meta) = meta {
        body.extend_from_slice(
            format!("--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"meta\"\r\nContent-Type: application/json\r\n\r\n{meta}\r\n")
                .as_bytes(),
        );
    }
    for (i, map) in maps.iter().enumerate() {
        body.extend_from_slice(
            format!(
                "--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"map{i}\"; filename=\"{i}.slm\"\r\nContent-Type: application/octet-stream\r\n\r\n"
            )
            .as_bytes(),
        );
        body.extend_from_slice(&write_label_map(map).unwrap());
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    Body::from(body)
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn ingest(app: &Router, id: u64, maps: &[&LabelMap]) -> (StatusCode, Value) {
    let req = Request::post("/api/ingest")
        .header("content-type", format!("multipart/form-data; boundary={BOUNDARY}"))
        .body(multipart(Some(json!({ "segment_id": id })), maps))
        .unwrap();
    send(app, req).await
}

async fn query(app: &Router, body: Value) -> (StatusCode, Value) {
    let req = Request::post("/api/query")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    send(app, req).await
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

#[tokio::test]
async fn concepts_lists_vocabulary_with_colors() {
    let h = harness(4);
    let (status, body) = get(&h.app, "/api/concepts").await;
    assert_eq!(status, StatusCode::OK);
    let concepts: Vec<ConceptJson> = serde_json::from_value(body).unwrap();
    assert_eq!(concepts.len(), common::LABELS.len());
    for (i, c) in concepts.iter().enumerate() {
        assert_eq!(c.id as usize, i);
        assert_eq!(c.label, common::LABELS[i]);
        assert_eq!(c.color, concept_color(c.id));
    }
}

#[tokio::test]
async fn info_reports_store_configuration() {
    let h = harness(4);
    let (status, body) = get(&h.app, "/api/info").await;
    assert_eq!(status, StatusCode::OK);
    let info: InfoJson = serde_json::from_value(body).unwrap();
    assert_eq!(info, InfoJson { n: 4, d: 2, b: 32, count: 0, vocabulary_size: 6 });
}

#[tokio::test]
async fn ingest_then_duplicate_conflicts() {
    let h = harness(4);
    let map = common::split_map(8, 8, 1, 2);
    let (status, body) = ingest(&h.app, 5, &[&map]).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let res: IngestResponse = serde_json::from_value(body).unwrap();
    assert_eq!(res, IngestResponse { segment_id: 5, count: 1 });
    let (status, body) = ingest(&h.app, 5, &[&map]).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(body["error"].as_str().unwrap().contains('5'));
    assert_eq!(h.state.store_len(), 1);
    assert_eq!(VectorStore::open(&h.store_path).unwrap().len(), 1);
}

#[tokio::test]
async fn malformed_ingest_requests_are_rejected() {
    let h = harness(4);
    let map = common::split_map(8, 8, 1, 2);
    let req = Request::post("/api/ingest")
        .header("content-type", format!("multipart/form-data; boundary={BOUNDARY}"))
        .body(multipart(None, &[&map]))
        .unwrap();
    assert_eq!(send(&h.app, req).await.0, StatusCode::BAD_REQUEST);

    assert_eq!(ingest(&h.app, 1, &[]).await.0, StatusCode::BAD_REQUEST);

    let unknown = LabelMap::new(1, 1, "x", vec![6]).unwrap();
    assert_eq!(ingest(&h.app, 1, &[&unknown]).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(h.state.store_len(), 0);
}

#[tokio::test]
async fn query_returns_at_most_store_size() {
    let h = harness(2);
    for (id, (l, r)) in [(10, (1, 2)), (11, (1, 1)), (12, (0, 0))] {
        assert_eq!(ingest(&h.app, id, &[&common::split_map(4, 4, l, r)]).await.0, StatusCode::OK);
    }
    let (status, body) = query(&h.app, json!({ "n": 2, "cells": [1, 3, 1, 3], "k": 5 })).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let res: QueryResponse = serde_json::from_value(body).unwrap();
    let ids: Vec<u64> = res.results.iter().map(|r| r.segment_id).collect();
    assert_eq!(ids, vec![10, 11, 12]);
    assert_eq!(res.results.iter().map(|r| r.rank).collect::<Vec<_>>(), vec![1, 2, 3]);
}

#[tokio::test]
async fn invalid_queries_are_rejected() {
    let h = harness(2);
    let (status, body) = query(&h.app, json!({ "n": 2, "cells": [0, 0, 9999, 0], "k": 5 })).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("9999"));
    assert_eq!(query(&h.app, json!({ "n": 2, "cells": [0, 0, -1, 0], "k": 5 })).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(
        query(&h.app, json!({ "n": 2, "cells": [0, 0, 0, 0], "k": 0 })).await.0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    assert_eq!(
        query(&h.app, json!({ "n": 2, "cells": [0, 0, 0, 0], "k": -3 })).await.0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    assert_eq!(query(&h.app, json!({ "n": 4, "cells": vec![0; 16], "k": 1 })).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(query(&h.app, json!({ "n": 2, "cells": [0, 0, 0], "k": 1 })).await.0, StatusCode::BAD_REQUEST);
    let req = Request::post("/api/query").body(Body::from("{not json")).unwrap();
    assert_eq!(send(&h.app, req).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn queries_never_modify_the_store() {
    let h = harness(2);
    ingest(&h.app, 1, &[&common::split_map(4, 4, 1, 2)]).await;
    let before = std::fs::read(&h.store_path).unwrap();
    for k in 1..20 {
        query(&h.app, json!({ "n": 2, "cells": [k % 6, 0, 1, 2], "k": k })).await;
    }
    query(&h.app, json!({ "n": 2, "cells": [0, 0, 9999, 0], "k": 1 })).await;
    assert_eq!(std::fs::read(&h.store_path).unwrap(), before);
    assert_eq!(h.state.store_len(), 1);
}

#[tokio::test]
async fn http_ingest_matches_offline_pipeline() {
    let h = harness(4);
    let (_, table) = common::fixture();
    let maps_dir = tempfile::tempdir().unwrap();
    let mut rng = SeededRng::new(8);
    for id in 0..6u64 {
        let a = common::random_map(&mut rng, 13, 9, 6, "ade20k");
        let b = common::random_map(&mut rng, 7, 7, 6, "voc");
        write_label_map_file(&a, &maps_dir.path().join(format!("{id}.ade20k.slm"))).unwrap();
        write_label_map_file(&b, &maps_dir.path().join(format!("{id}.voc.slm"))).unwrap();
        assert_eq!(ingest(&h.app, id, &[&a, &b]).await.0, StatusCode::OK);
    }
    let offline_path = maps_dir.path().join("offline.svs");
    let mut offline =
        VectorStore::create(&offline_path, EncoderConfig::new(4, 2, BitDepth::B32).unwrap(), table.scale()).unwrap();
    ingest_dir(maps_dir.path(), &table, &mut offline).unwrap();
    drop(offline);
    assert_eq!(std::fs::read(&offline_path).unwrap(), std::fs::read(&h.store_path).unwrap());
}

#[tokio::test]
async fn ingested_map_is_its_own_nearest_neighbour() {
    let h = harness(4);
    let mut rng = SeededRng::new(9);
    let maps: Vec<LabelMap> = (0..8).map(|_| common::random_map(&mut rng, 16, 16, 6, "voc")).collect();
    for (id, m) in maps.iter().enumerate() {
        ingest(&h.app, 100 + id as u64, &[m]).await;
    }
    for (id, m) in maps.iter().enumerate() {
        let grid = aggregate(std::slice::from_ref(m), 4).unwrap();
        let (status, body) = query(&h.app, json!({ "n": 4, "cells": grid.cells(), "k": 3 })).await;
        assert_eq!(status, StatusCode::OK);
        let res: QueryResponse = serde_json::from_value(body).unwrap();
        assert_eq!(res.results[0].segment_id, 100 + id as u64);
        assert_eq!(res.results[0].distance, 0.0);
        assert_eq!(res.results[0].rank, 1);
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_ingest_and_query() {
    let h = harness(2);
    let mut tasks = Vec::new();
    for id in 0..16u64 {
        let app = h.app.clone();
        tasks.push(tokio::spawn(async move {
            let map = common::split_map(4, 4, (id % 6) as u16, ((id + 1) % 6) as u16);
            assert_eq!(ingest(&app, id, &[&map]).await.0, StatusCode::OK);
            let (status, _) = query(&app, json!({ "n": 2, "cells": [1, 2, 3, 4], "k": 4 })).await;
            assert_eq!(status, StatusCode::OK);
        }));
    }
    for t in tasks {
        t.await.unwrap();
    }
    assert_eq!(h.state.store_len(), 16);
    let reopened = VectorStore::open(&h.store_path).unwrap();
    let mut ids = reopened.ids().to_vec();
    ids.sort();
    assert_eq!(ids, (0..16).collect::<Vec<_>>());
}

#[test]
fn state_rejects_mismatched_table() {
    let dir = tempfile::tempdir().unwrap();
    let (vocab, table) = common::fixture();
    let config = EncoderConfig::new(2, 3, BitDepth::B8).unwrap();
    let store = VectorStore::create(&dir.path().join("s.svs"), config, &[1.0, 1.0, 1.0]).unwrap();
    assert!(AppState::new(vocab, table, store).is_err());
}
