use embedprobe::ingest::stub::{StubReply, StubServer};
use embedprobe::ingest::{fetch_embeddings, EmbeddingServiceConfig, Pooling};
use embedprobe::Error;
use serde_json::json;

fn texts(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("text number {i}")).collect()
}

fn vector_for(t: &str) -> Vec<f64> {
    let n: f64 = t.rsplit(' ').next().unwrap().parse().unwrap();
    vec![n, 2.0 * n, -n]
}

fn config(url: String) -> EmbeddingServiceConfig {
    let mut c = EmbeddingServiceConfig::new(url);
    c.backoff_ms = 5;
    c
}

#[test]
fn rows_follow_input_order_across_batches() {
    let stub = StubServer::pooled(vector_for).unwrap();
    let mut cfg = config(stub.url());
    cfg.batch_size = 2;
    let m = fetch_embeddings(&cfg, &texts(5)).unwrap();
    assert_eq!(stub.request_count(), 3);
    assert_eq!(m.n_rows(), 5);
    for i in 0..5 {
        assert_eq!(m.row(i), vector_for(&format!("x {i}")).as_slice());
    }
    let sizes: Vec<usize> = stub.requests().iter().map(|r| r.texts.len()).collect();
    assert_eq!(sizes, vec![2, 2, 1]);
}

#[test]
fn short_response_is_a_row_count_mismatch() {
    let stub = StubServer::start(|_, t| {
        let rows: Vec<Vec<f64>> = t.iter().skip(1).map(|_| vec![1.0, 0.0]).collect();
        StubReply::Json(json!({ "embeddings": rows }))
    })
    .unwrap();
    let err = fetch_embeddings(&config(stub.url()), &texts(3)).unwrap_err();
    assert!(matches!(err, Error::RowCountMismatch { expected: 3, found: 2 }), "{err}");
}

#[test]
fn token_states_are_mean_pooled_and_normalized() {
    let stub = StubServer::start(|_, t| {
        let states: Vec<Vec<Vec<f64>>> = t.iter().map(|_| vec![vec![3.0, 0.0], vec![3.0, 8.0]]).collect();
        StubReply::Json(json!({ "embeddings": states }))
    })
    .unwrap();
    let mut cfg = config(stub.url());
    cfg.pooling = Pooling::MeanPoolThenNormalize;
    let m = fetch_embeddings(&cfg, &texts(2)).unwrap();
    // mean (3, 4) normalizes to (0.6, 0.8)
    for i in 0..2 {
        assert!((m.row(i)[0] - 0.6).abs() < 1e-15);
        assert!((m.row(i)[1] - 0.8).abs() < 1e-15);
    }
    let cfg = config(stub.url());
    assert!(matches!(fetch_embeddings(&cfg, &texts(1)), Err(Error::Config(_))));
}

#[test]
fn transient_failures_are_retried() {
    let stub = StubServer::start(|req, t| match req {
        0 => StubReply::Status(503),
        1 => StubReply::Status(429),
        _ => StubReply::Json(json!({ "embeddings": t.iter().map(|_| vec![1.0]).collect::<Vec<_>>() })),
    })
    .unwrap();
    let m = fetch_embeddings(&config(stub.url()), &texts(2)).unwrap();
    assert_eq!(m.n_rows(), 2);
    assert_eq!(stub.request_count(), 3);
}

#[test]
fn retries_give_up_after_three_attempts() {
    let stub = StubServer::start(|_, _| StubReply::Status(500)).unwrap();
    let err = fetch_embeddings(&config(stub.url()), &texts(1)).unwrap_err();
    assert!(matches!(err, Error::Http { attempts: 3, .. }), "{err}");
    assert_eq!(stub.request_count(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let stub = StubServer::start(|_, _| StubReply::Status(400)).unwrap();
    assert!(fetch_embeddings(&config(stub.url()), &texts(1)).is_err());
    assert_eq!(stub.request_count(), 1);
}

#[test]
fn bearer_token_is_sent_and_missing_token_fails_before_network() {
    let stub = StubServer::pooled(|_| vec![1.0, 1.0]).unwrap();
    let mut cfg = config(stub.url());
    cfg.auth_token_env = Some("EMBEDPROBE_TEST_TOKEN_SET".into());
    std::env::set_var("EMBEDPROBE_TEST_TOKEN_SET", "s3cret");
    fetch_embeddings(&cfg, &texts(1)).unwrap();
    assert_eq!(stub.requests()[0].authorization.as_deref(), Some("Bearer s3cret"));

    cfg.auth_token_env = Some("EMBEDPROBE_TEST_TOKEN_UNSET".into());
    std::env::remove_var("EMBEDPROBE_TEST_TOKEN_UNSET");
    assert!(matches!(fetch_embeddings(&cfg, &texts(1)), Err(Error::Config(_))));
    assert_eq!(stub.request_count(), 1);
}

#[test]
fn non_finite_vectors_are_reported_with_row() {
    let stub = StubServer::start(|_, t| {
        let rows: Vec<serde_json::Value> = t
            .iter()
            .enumerate()
            .map(|(i, _)| if i == 1 { json!([1.0, null]) } else { json!([1.0, 2.0]) })
            .collect();
        StubReply::Json(json!({ "embeddings": rows }))
    })
    .unwrap();
    assert!(fetch_embeddings(&config(stub.url()), &texts(2)).is_err());
}

#[test]
fn unreachable_service_is_an_http_error() {
    let url = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        format!("http://{}", l.local_addr().unwrap())
    };
    let mut cfg = config(url);
    cfg.timeout = 2.0;
    assert!(matches!(fetch_embeddings(&cfg, &texts(1)), Err(Error::Http { .. })));
}
