//! Acceptance gate: ten end-to-end checks, one per release criterion, each
//! printing a PASS/FAIL line (visible under `--nocapture`) and enforcing its
//! own runtime bound. Oracles are independent of the implementation they
//! check: brute-force references, closed-form recomputation, and scripted
//! fixtures with known counts.

use std::collections::{BTreeMap, HashMap};
use std::panic::AssertUnwindSafe;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use tempfile::TempDir;

use poliview_core::collect::rate::{rate_limit_check, RateDecision, RateLimiter};
use poliview_core::collect::run::{run_collection, ClockMode, CollectionPlan, TaskSpec};
use poliview_core::collect::stream::{
    FlushOutcome, FlushPolicy, StreamItem, Subscription, SubscriptionEnd,
};
use poliview_core::collect::{NetworkProfile, ProviderDescriptor, ProviderKind, SlaContract};
use poliview_core::collect::cost::CostParams;
use poliview_core::dataset::{DatasetCollection, DocFilter};
use poliview_core::doc::{compute_id, AvailabilityStatus, Document, ProvenanceStamp};
use poliview_core::analytics::aggregate::{build_comparison, party_aggregate};
use poliview_core::analytics::profile::build_all_profiles;
use poliview_core::analytics::report::{
    emit_comparison, emit_parties, emit_profiles, export_gate, ReportFormat,
};
use poliview_core::analytics::{Candidate, Roster};
use poliview_core::policy::{evaluate, PolicyAction, PolicyRule, PrivacyLevel, Purpose, RuleScope};
use poliview_core::value::{DocValue, Timestamp};
use poliview_core::view::deps::detect_fd;
use poliview_core::view::extract::{extract_view, merge_view};
use poliview_core::view::stats::compute_stats;
use poliview_core::view::ViewConfig;

/// Runs one criterion, prints its verdict line, and enforces the bound.
fn criterion(number: u32, name: &str, bound_secs: f64, body: impl FnOnce()) {
    let started = Instant::now();
    let result = std::panic::catch_unwind(AssertUnwindSafe(body));
    let elapsed = started.elapsed().as_secs_f64();
    let ok = result.is_ok() && elapsed < bound_secs;
    println!(
        "criterion {number:02} ({name}): {} [{elapsed:.2}s, bound {bound_secs}s]",
        if ok { "PASS" } else { "FAIL" }
    );
    if let Err(panic) = result {
        std::panic::resume_unwind(panic);
    }
    assert!(
        elapsed < bound_secs,
        "criterion {number} took {elapsed:.2}s, bound is {bound_secs}s"
    );
}

fn assert_relative(actual: f64, reference: f64, tolerance: f64, what: &str) {
    if actual == reference {
        return;
    }
    let scale = actual.abs().max(reference.abs());
    let relative = (actual - reference).abs() / scale;
    assert!(
        relative <= tolerance,
        "{what}: {actual} vs reference {reference}, relative error {relative:e}"
    );
}

/// Compensated (Neumaier) sum: an fp-only reference route, independent of
/// the exact integer accumulation inside the library.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

#[test]
fn criterion_01_column_statistics_match_a_two_pass_reference() {
    criterion(1, "column statistics vs two-pass reference", 30.0, || {
        let mut rng = ChaCha12Rng::seed_from_u64(101);
        for column in 0..1000u32 {
            let n = rng.random_range(1..=10_000usize);
            let scale = [1.0, 1e3, 1e6][rng.random_range(0..3)];
            let offset = if rng.random_bool(0.25) { 1e9 } else { 0.0 };
            let integers = rng.random_bool(0.25);
            let values: Vec<f64> = (0..n)
                .map(|_| {
                    if integers {
                        rng.random_range(-1000..=1000) as f64
                    } else {
                        rng.random_range(-scale..scale) + offset
                    }
                })
                .collect();

            let stats = compute_stats(&values, 20).expect("non-empty column");

            // Two-pass reference: compensated mean, then compensated sum of
            // squared deviations.
            let count = values.len() as u64;
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = compensated_sum(values.iter().copied()) / n as f64;
            let variance =
                compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / n as f64;
            let stddev = variance.max(0.0).sqrt();

            assert_eq!(stats.count, count, "column {column}: count");
            assert_eq!(stats.min, min, "column {column}: min");
            assert_eq!(stats.max, max, "column {column}: max");
            assert_relative(stats.mean, mean, 1e-9, "mean");
            assert_relative(stats.stddev, stddev, 1e-9, "stddev");
        }
    });
}

fn table_document(row: &[Option<i64>]) -> Document {
    let mut fields = Vec::new();
    for (i, cell) in row.iter().enumerate() {
        if let Some(v) = cell {
            fields.push((format!("c{i}"), DocValue::from_json_str(&v.to_string()).unwrap()));
        }
    }
    let body = DocValue::record(fields);
    Document {
        id: compute_id(&body, "t"),
        body,
        provenance: ProvenanceStamp {
            availability: AvailabilityStatus::Collected,
            collected_at: Timestamp::from_unix(0),
            jurisdiction: "xx".into(),
            provider_id: "t".into(),
        },
    }
}

/// Exhaustive per-group majority count over the raw table, sharing only the
/// published decision rule with the implementation.
fn oracle_fd_holds(table: &[Vec<Option<i64>>], from: usize, to: usize, epsilon: f64) -> bool {
    let mut groups: HashMap<i64, HashMap<i64, u64>> = HashMap::new();
    for row in table {
        if let (Some(a), Some(b)) = (row[from], row[to]) {
            *groups.entry(a).or_default().entry(b).or_insert(0) += 1;
        }
    }
    let mut support = 0u64;
    let mut violations = 0u64;
    for images in groups.values() {
        let size: u64 = images.values().sum();
        let majority = images.values().copied().max().unwrap_or(0);
        support += size;
        violations += size - majority;
    }
    support > 0 && violations as f64 <= epsilon * support as f64
}

#[test]
fn criterion_02_dependency_detection_matches_exhaustive_majority_counts() {
    criterion(2, "approximate dependencies vs exhaustive counts", 60.0, || {
        let mut rng = ChaCha12Rng::seed_from_u64(202);
        for _ in 0..500 {
            let cols = rng.random_range(2..=8usize);
            let rows = rng.random_range(1..=200usize);
            // Column value generators: either independent draws from a small
            // domain, or a function of column zero (a planted dependency).
            let domains: Vec<i64> = (0..cols).map(|_| rng.random_range(1..=6)).collect();
            let derived: Vec<Option<(i64, i64)>> = (0..cols)
                .map(|c| {
                    (c > 0 && rng.random_bool(0.4))
                        .then(|| (rng.random_range(1..=5), rng.random_range(0..=3)))
                })
                .collect();
            let mut table: Vec<Vec<Option<i64>>> = Vec::with_capacity(rows);
            for _ in 0..rows {
                let base = rng.random_range(0..domains[0]);
                let mut row = Vec::with_capacity(cols);
                for c in 0..cols {
                    if rng.random_bool(0.05) {
                        row.push(None);
                        continue;
                    }
                    let v = match derived[c] {
                        Some((m, a)) => (base * m + a) % 7,
                        None => rng.random_range(0..domains[c]),
                    };
                    row.push(Some(v));
                }
                table.push(row);
            }

            let docs: Vec<Document> = table.iter().map(|r| table_document(r)).collect();
            let mut pairs = Vec::new();
            for a in 0..cols {
                for b in 0..cols {
                    if a != b {
                        pairs.push((format!("c{a}"), format!("c{b}")));
                    }
                }
            }

            for epsilon in [0.0, 0.01, 0.1] {
                let got: Vec<(String, String)> = detect_fd(&docs, &pairs, epsilon, &[])
                    .into_iter()
                    .map(|r| (r.from_path, r.to_path))
                    .collect();
                let want: Vec<(String, String)> = pairs
                    .iter()
                    .filter(|(a, b)| {
                        let ai: usize = a[1..].parse().unwrap();
                        let bi: usize = b[1..].parse().unwrap();
                        oracle_fd_holds(&table, ai, bi, epsilon)
                    })
                    .cloned()
                    .collect();
                assert_eq!(got, want, "epsilon {epsilon}");
            }
        }
    });
}

#[test]
fn criterion_03_no_window_ever_exceeds_its_quota() {
    criterion(3, "rate limiter vs brute-force window scan", 30.0, || {
        let mut rng = ChaCha12Rng::seed_from_u64(303);
        for _ in 0..10_000 {
            let max = rng.random_range(1..=6u32);
            let window = [60.0, 3600.0][rng.random_range(0..2)];
            let sla = SlaContract {
                max_requests: max,
                window,
                auth_required: false,
                default_privacy: PrivacyLevel::Public,
                default_license: String::new(),
            };
            let mut limiter = RateLimiter::new(sla.clone());
            let mut granted: Vec<f64> = Vec::new();
            let mut now = 0.0f64;
            let mut pending_retry: Option<f64> = None;
            for _ in 0..40 {
                // Mix bursts, dense traffic, long gaps, and exact retry
                // boundaries.
                now = match pending_retry.take() {
                    Some(at) if rng.random_bool(0.5) => at,
                    _ => {
                        now + match rng.random_range(0..10) {
                            0 => 0.0,
                            1..=6 => rng.random_range(0.0..window / max as f64),
                            _ => rng.random_range(0.0..window * 1.5),
                        }
                    }
                };
                let stateless = rate_limit_check(&sla, &granted, now);
                let decision = limiter.check(now);
                assert_eq!(decision, stateless, "stateful and stateless routes disagree");
                match decision {
                    RateDecision::Allow => {
                        limiter.record(now);
                        granted.push(now);
                    }
                    RateDecision::Deny { retry_after } => {
                        assert!(retry_after > 0.0, "deny must name a positive wait");
                        pending_retry = Some(now + retry_after);
                    }
                }
            }
            // Brute force: count maxima occur at windows ending on a grant.
            for &end in &granted {
                let in_window = granted.iter().filter(|&&t| t > end - window && t <= end).count();
                assert!(
                    in_window <= max as usize,
                    "window ending at {end} holds {in_window} grants, quota {max}"
                );
            }
        }
    });
}

#[test]
fn criterion_04_every_flush_names_the_first_bound_crossed() {
    criterion(4, "flush decisions vs reference replay", 15.0, || {
        use poliview_core::collect::stream::FlushTrigger;
        let mut rng = ChaCha12Rng::seed_from_u64(404);
        for _ in 0..2000 {
            let policy = loop {
                let p = FlushPolicy {
                    max_count: rng.random_bool(0.6).then(|| rng.random_range(1..=6)),
                    max_elapsed: rng.random_bool(0.6).then(|| rng.random_range(0.5..8.0)),
                    max_bytes: rng.random_bool(0.6).then(|| rng.random_range(10..=250)),
                };
                if p.validate().is_ok() {
                    break p;
                }
            };
            let started = rng.random_range(0.0..5.0);
            let mut sub = Subscription::new(
                "s".into(),
                1.0,
                started,
                SubscriptionEnd::Unsubscribe,
                policy,
            )
            .unwrap();

            // Reference replay state.
            let mut buffer: Vec<StreamItem> = Vec::new();
            let mut buffered_bytes = 0u64;
            let mut last_flush = started;

            let mut now = started;
            let mut fed = 0u64;
            for step in 0..60 {
                now += rng.random_range(0.0..2.0);
                let item = if rng.random_bool(0.75) {
                    let pad = "x".repeat(rng.random_range(0..20));
                    let body = DocValue::from_json_str(&format!(
                        r#"{{"n":{step},"pad":"{pad}"}}"#
                    ))
                    .unwrap();
                    fed += 1;
                    Some(StreamItem { body, at: now })
                } else {
                    None
                };

                if let Some(it) = item.clone() {
                    buffered_bytes += it.bytes();
                    buffer.push(it);
                }
                let expected_trigger = if buffer.is_empty() {
                    None
                } else if policy.max_count.is_some_and(|c| buffer.len() as u32 >= c) {
                    Some(FlushTrigger::Count)
                } else if policy.max_elapsed.is_some_and(|e| now - last_flush >= e) {
                    Some(FlushTrigger::Elapsed)
                } else if policy.max_bytes.is_some_and(|b| buffered_bytes >= b) {
                    Some(FlushTrigger::Bytes)
                } else {
                    None
                };
                let expected = match expected_trigger {
                    None => FlushOutcome::Hold,
                    Some(trigger) => {
                        buffered_bytes = 0;
                        last_flush = now;
                        FlushOutcome::Flush {
                            batch: std::mem::take(&mut buffer),
                            trigger,
                        }
                    }
                };

                let got = sub.flush_decision(item, now).unwrap();
                assert_eq!(got, expected, "decision diverged at step {step}");
                if let FlushOutcome::Flush { ref batch, trigger } = got {
                    if trigger == FlushTrigger::Count {
                        assert_eq!(batch.len() as u32, policy.max_count.unwrap());
                    }
                }
            }
            assert_eq!(sub.delivered(), fed);
            let residual = sub.unsubscribe(now).unwrap();
            let expected_residual = if buffer.is_empty() { None } else { Some(buffer.clone()) };
            assert_eq!(residual, expected_residual, "unsubscribe residual diverged");
        }
    });
}

fn random_body(rng: &mut ChaCha12Rng, index: usize) -> DocValue {
    let mut fields = vec![("i".to_string(), DocValue::from_json_str(&index.to_string()).unwrap())];
    if rng.random_bool(0.8) {
        fields.push((
            "user".into(),
            DocValue::text(&format!("u{}", rng.random_range(0..6))),
        ));
    }
    if rng.random_bool(0.7) {
        let v = if rng.random_bool(0.8) {
            rng.random_range(0..100).to_string()
        } else {
            format!("{:.2}", rng.random_range(0.0..10.0))
        };
        fields.push(("score".into(), DocValue::from_json_str(&v).unwrap()));
    }
    if rng.random_bool(0.6) {
        let note = match rng.random_range(0..5) {
            0 => String::new(),
            1 => "N/A".into(),
            k => format!("note {k} #t{} #t{}", rng.random_range(0..5), rng.random_range(0..5)),
        };
        fields.push(("note".into(), DocValue::text(&note)));
    }
    if rng.random_bool(0.7) {
        fields.push((
            "ts".into(),
            DocValue::text(&format!(
                "2014-05-{:02}T{:02}:00:00Z",
                rng.random_range(1..=28),
                rng.random_range(0..24)
            )),
        ));
    }
    DocValue::record(fields)
}

#[test]
fn criterion_05_batched_merges_equal_one_shot_extraction() {
    criterion(5, "incremental merge vs full extraction", 30.0, || {
        let mut rng = ChaCha12Rng::seed_from_u64(505);
        let root = TempDir::new().unwrap();
        let config = ViewConfig {
            author_path: Some("user".into()),
            time_path: Some("ts".into()),
            link_path: Some("re".into()),
            link_native_id_path: Some("i".into()),
            ..ViewConfig::default()
        };
        for case in 0..200 {
            let n = rng.random_range(5..=60usize);
            let mut docs = Vec::with_capacity(n);
            for i in 0..n {
                let mut body = random_body(&mut rng, i);
                // Occasionally link back to an earlier document by its
                // native id.
                if i > 0 && rng.random_bool(0.15) {
                    if let DocValue::Record(ref mut fields) = body {
                        let target = rng.random_range(0..i);
                        fields.insert("re".into(), DocValue::text(target.to_string()));
                    }
                }
                let provider = if rng.random_bool(0.5) { "p0" } else { "p1" };
                let availability = match rng.random_range(0..20) {
                    0 => AvailabilityStatus::Empty,
                    _ => AvailabilityStatus::Collected,
                };
                docs.push(Document {
                    id: compute_id(&body, provider),
                    body,
                    provenance: ProvenanceStamp {
                        availability,
                        collected_at: Timestamp::from_unix(rng.random_range(0..10_000_000)),
                        jurisdiction: "xx".into(),
                        provider_id: provider.into(),
                    },
                });
            }

            let dir = root.path().join(format!("ds{case}"));
            let mut ds = DatasetCollection::create(&dir, &format!("ds{case}")).unwrap();

            // Random cut points split the sequence into 2..=10 batches, some
            // possibly empty.
            let batches = rng.random_range(2..=10usize);
            let mut cuts: Vec<usize> = (0..batches - 1).map(|_| rng.random_range(0..=n)).collect();
            cuts.sort_unstable();
            cuts.insert(0, 0);
            cuts.push(n);

            let mut view = None;
            for w in cuts.windows(2) {
                for doc in &docs[w[0]..w[1]] {
                    ds.ingest_document(doc.clone()).unwrap();
                }
                view = Some(match view {
                    None => extract_view(&ds, &config).unwrap(),
                    Some(v) => merge_view(&v, &ds).unwrap(),
                });
            }
            let merged = view.unwrap();
            let full = extract_view(&ds, &config).unwrap();

            assert_eq!(merged.profiles, full.profiles, "case {case}: profiles diverged");
            assert_eq!(
                merged.relationships, full.relationships,
                "case {case}: relationships diverged"
            );
            assert_eq!(merged.documents, full.documents, "case {case}: document lists diverged");
            assert_eq!(merged.created_at, full.created_at, "case {case}: created_at diverged");
        }
    });
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/ep2014")
        .join(name)
}

fn poliview(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_poliview"))
        .args(args)
        .env_remove("POLIVIEW_SEED")
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "poliview {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn simulate_fixture(out_root: &Path) {
    poliview(&[
        "simulate",
        "--plan",
        fixture("plan.json").to_str().unwrap(),
        "--out-root",
        out_root.to_str().unwrap(),
    ]);
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader
        .headers()
        .unwrap()
        .iter()
        .map(str::to_string)
        .collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

#[test]
fn criterion_06_blocked_platforms_are_marked_not_zeroed() {
    criterion(6, "availability tri-state in emitted reports", 5.0, || {
        let tmp = TempDir::new().unwrap();
        let run = tmp.path().join("run");
        simulate_fixture(&run);
        let report_dir = tmp.path().join("reports");
        poliview(&[
            "report",
            "profile",
            "--dataset",
            run.join("posts").to_str().unwrap(),
            "--roster",
            fixture("roster.json").to_str().unwrap(),
            "--config",
            fixture("view_config.json").to_str().unwrap(),
            "--format",
            "csv",
            "--out",
            report_dir.to_str().unwrap(),
        ]);
        poliview(&[
            "report",
            "profile",
            "--dataset",
            run.join("posts").to_str().unwrap(),
            "--roster",
            fixture("roster.json").to_str().unwrap(),
            "--config",
            fixture("view_config.json").to_str().unwrap(),
            "--format",
            "json",
            "--out",
            report_dir.to_str().unwrap(),
        ]);

        let (header, rows) = csv_rows(&report_dir.join("profiles.csv"));
        let col = |name: &str| header.iter().position(|h| h == name).unwrap();
        let row = |candidate: &str| {
            rows.iter()
                .find(|r| r[col("candidate")] == candidate)
                .unwrap()
        };

        // The privacy-blocked platform is labelled, never a numeric zero.
        let blocked = row("uk-02");
        assert_eq!(blocked[col("facebook_status")], "unavailable(privacy)");
        assert_eq!(blocked[col("facebook_posts")], "NA(privacy)");
        assert_eq!(blocked[col("facebook_influence")], "NA(privacy)");
        assert_ne!(blocked[col("facebook_posts")], "0");

        // The silent control candidate is a known zero on both platforms.
        let control = row("fr-06");
        assert_eq!(control[col("twitter_status")], "empty");
        assert_eq!(control[col("twitter_posts")], "0");
        assert_eq!(control[col("facebook_posts")], "0");

        // Same distinction in the JSON form: the count key is absent, not 0.
        let profiles: serde_json::Value =
            serde_json::from_slice(&std::fs::read(report_dir.join("profiles.json")).unwrap())
                .unwrap();
        let platform = |candidate: &str, provider: &str| -> serde_json::Value {
            profiles
                .as_array()
                .unwrap()
                .iter()
                .find(|p| p["candidate"] == candidate)
                .unwrap()["platforms"]
                .as_array()
                .unwrap()
                .iter()
                .find(|p| p["provider"] == provider)
                .unwrap()
                .clone()
        };
        let uk02 = platform("uk-02", "facebook");
        assert_eq!(uk02["status"]["reason"], "privacy");
        assert!(uk02.get("post_count").is_none(), "unknowable count must stay unknown");
        let fr06 = platform("fr-06", "twitter");
        assert_eq!(fr06["post_count"], 0);
    });
}

fn tree_bytes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.unwrap();
        if entry.file_type().is_file() {
            let rel = entry
                .path()
                .strip_prefix(root)
                .unwrap()
                .to_string_lossy()
                .into_owned();
            files.insert(rel, std::fs::read(entry.path()).unwrap());
        }
    }
    files
}

fn full_pipeline(root: &Path) {
    let run = root.join("harvest");
    simulate_fixture(&run);
    let dataset = run.join("posts");
    let view = root.join("posts.view.json");
    poliview(&[
        "view",
        "extract",
        "--dataset",
        dataset.to_str().unwrap(),
        "--config",
        fixture("view_config.json").to_str().unwrap(),
        "--out",
        view.to_str().unwrap(),
    ]);
    poliview(&[
        "view",
        "validate",
        "--view",
        view.to_str().unwrap(),
        "--confirm-all",
        "--analyst",
        "audit",
        "--at",
        "2014-06-01T00:00:00Z",
    ]);
    poliview(&[
        "policy",
        "check",
        "--dataset",
        dataset.to_str().unwrap(),
        "--purpose",
        "analyze",
        "--config",
        fixture("view_config.json").to_str().unwrap(),
        "--audit",
        root.join("audit.jsonl").to_str().unwrap(),
    ]);
    let reports = root.join("reports");
    for (kind, format) in [
        ("profile", "csv"),
        ("party", "json"),
        ("compare", "json"),
        ("compare", "plot-tsv"),
    ] {
        poliview(&[
            "report",
            kind,
            "--dataset",
            dataset.to_str().unwrap(),
            "--roster",
            fixture("roster.json").to_str().unwrap(),
            "--config",
            fixture("view_config.json").to_str().unwrap(),
            "--format",
            format,
            "--out",
            reports.to_str().unwrap(),
        ]);
    }
}

#[test]
fn criterion_07_fixed_seed_reproduces_every_output_byte() {
    criterion(7, "pipeline determinism across two runs", 10.0, || {
        let tmp = TempDir::new().unwrap();
        let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
        full_pipeline(&a);
        full_pipeline(&b);
        let (ta, tb) = (tree_bytes(&a), tree_bytes(&b));
        let names_a: Vec<&String> = ta.keys().collect();
        let names_b: Vec<&String> = tb.keys().collect();
        assert_eq!(names_a, names_b, "the two runs wrote different file sets");
        assert!(!ta.is_empty(), "pipeline produced no files");
        for (name, bytes) in &ta {
            assert_eq!(bytes, &tb[name], "{name} differs between runs");
        }
    });
}

#[test]
fn criterion_08_report_counts_reconcile_with_the_script() {
    criterion(8, "reconciliation against scripted counts", 5.0, || {
        let tmp = TempDir::new().unwrap();
        let run = tmp.path().join("run");
        simulate_fixture(&run);
        let reports = tmp.path().join("reports");
        poliview(&[
            "report",
            "compare",
            "--dataset",
            run.join("posts").to_str().unwrap(),
            "--roster",
            fixture("roster.json").to_str().unwrap(),
            "--config",
            fixture("view_config.json").to_str().unwrap(),
            "--format",
            "json",
            "--out",
            reports.to_str().unwrap(),
        ]);

        // Independent count: how many documents the scripts serve into the
        // "posts" dataset, straight from the fixture files.
        let plan: serde_json::Value =
            serde_json::from_slice(&std::fs::read(fixture("plan.json")).unwrap()).unwrap();
        let mut scripted = 0u64;
        for task in plan["tasks"].as_array().unwrap() {
            if task["type"] != "pull" || task["dataset"] != "posts" {
                continue;
            }
            let provider = task["provider"].as_str().unwrap();
            let endpoint = plan["providers"]
                .as_array()
                .unwrap()
                .iter()
                .find(|p| p["id"] == provider)
                .unwrap()["endpoint"]
                .as_str()
                .unwrap()
                .to_string();
            let script: serde_json::Value =
                serde_json::from_slice(&std::fs::read(fixture(&endpoint)).unwrap()).unwrap();
            for response in script["responses"].as_object().unwrap().values() {
                if let Some(docs) = response.get("documents") {
                    scripted += docs.as_array().unwrap().len() as u64;
                }
            }
        }

        let report: serde_json::Value =
            serde_json::from_slice(&std::fs::read(reports.join("report.json")).unwrap()).unwrap();

        let mut reported = 0u64;
        for profile in report["profiles"].as_array().unwrap() {
            for platform in profile["platforms"].as_array().unwrap() {
                if let Some(count) = platform.get("post_count") {
                    reported += count.as_u64().unwrap();
                }
            }
        }
        assert_eq!(reported, scripted, "post counts must add up to the scripted total");
        assert_eq!(report["reconciliation"]["collected_documents"], scripted);
        assert_eq!(report["reconciliation"]["profiled_posts"], scripted);
        assert_eq!(report["reconciliation"]["unattributed"], 0);

        // One country posts more in total, the other more per head.
        let country = |code: &str| -> (f64, f64) {
            let c = report["countries"]
                .as_array()
                .unwrap()
                .iter()
                .find(|c| c["country"] == code)
                .unwrap();
            let total = c["total_posts"].as_u64().unwrap() as f64;
            (total, total / c["candidate_count"].as_u64().unwrap() as f64)
        };
        let (fr_total, fr_per_capita) = country("fr");
        let (uk_total, uk_per_capita) = country("uk");
        assert!(fr_total > uk_total, "fr {fr_total} must out-post uk {uk_total}");
        assert!(
            fr_per_capita < uk_per_capita,
            "per head the ordering must invert: fr {fr_per_capita} vs uk {uk_per_capita}"
        );

        let average = |party: &str| -> f64 {
            report["parties"]
                .as_array()
                .unwrap()
                .iter()
                .find(|p| p["party"] == party)
                .unwrap()["global_average"]
                .as_f64()
                .unwrap()
        };
        assert!(average("avenir") < average("forward"));
    });
}

#[test]
fn criterion_09_denied_documents_never_reach_an_output_file() {
    criterion(9, "export gate vs planted sentinels", 20.0, || {
        let mut rng = ChaCha12Rng::seed_from_u64(909);
        let root = TempDir::new().unwrap();

        // A small corpus where every document carries a unique sentinel tag.
        let providers = ["pa", "pb", "pc"];
        let jurisdictions = ["fr", "uk"];
        let dir = root.path().join("corpus");
        let mut ds = DatasetCollection::create(&dir, "corpus").unwrap();
        let mut sentinels = Vec::new();
        for i in 0..14usize {
            let tag = format!("sq{i}");
            let provider = providers[i % providers.len()];
            let body = DocValue::record(vec![
                ("user".to_string(), DocValue::text(&format!("c{}", i % 4))),
                ("content".to_string(), DocValue::text(&format!("post {i} #{tag}"))),
                ("location".to_string(), DocValue::text(&format!("town{i}"))),
            ]);
            let doc = Document {
                id: compute_id(&body, provider),
                body,
                provenance: ProvenanceStamp {
                    availability: AvailabilityStatus::Collected,
                    collected_at: Timestamp::from_unix(1_400_000_000 + i as i64 * 3600),
                    jurisdiction: jurisdictions[i % 2].into(),
                    provider_id: provider.into(),
                },
            };
            sentinels.push((doc.id.clone(), tag));
            ds.ingest_document(doc).unwrap();
        }
        let roster = Roster {
            candidates: (0..4)
                .map(|k| Candidate {
                    id: format!("cand-{k}"),
                    party: if k < 2 { "north".into() } else { "south".into() },
                    country: if k < 2 { "fr".into() } else { "uk".into() },
                    accounts: providers
                        .iter()
                        .map(|p| (p.to_string(), format!("c{k}")))
                        .collect(),
                })
                .collect(),
        };

        let levels = [PrivacyLevel::Public, PrivacyLevel::Restricted, PrivacyLevel::Private];
        let scopes = |rng: &mut ChaCha12Rng| -> RuleScope {
            match rng.random_range(0..7) {
                0 | 1 => RuleScope::Wildcard,
                2 => RuleScope::Provider("pa".into()),
                3 => RuleScope::Provider("pb".into()),
                4 => RuleScope::Jurisdiction("fr".into()),
                5 => RuleScope::Attribute("location".into()),
                _ => RuleScope::Attribute("user".into()),
            }
        };
        let docs = ds.documents(DocFilter::default()).unwrap();
        let (mut denied_runs, mut allowed_runs) = (0u32, 0u32);
        for case in 0..100u32 {
            let mut rules: Vec<PolicyRule> = Vec::new();
            // Half the runs start from a fully open baseline so both gate
            // outcomes stay well represented.
            if case % 2 == 0 {
                rules.push(PolicyRule {
                    scope: RuleScope::Wildcard,
                    max_privacy: PrivacyLevel::Private,
                    purpose: Purpose::Export,
                    action: PolicyAction::Allow,
                });
            }
            for _ in 0..rng.random_range(1..=4) {
                let action = match rng.random_range(0..10) {
                    0..=4 => PolicyAction::Allow,
                    5..=7 => PolicyAction::Deny,
                    _ => PolicyAction::Redact(vec!["location".into()]),
                };
                rules.push(PolicyRule {
                    scope: scopes(&mut rng),
                    max_privacy: levels[rng.random_range(0..3)],
                    purpose: if rng.random_bool(0.8) { Purpose::Export } else { Purpose::Analyze },
                    action,
                });
            }
            let config = ViewConfig {
                author_path: Some("user".into()),
                provider_privacy: providers
                    .iter()
                    .map(|p| (p.to_string(), levels[rng.random_range(0..3)]))
                    .collect(),
                ..ViewConfig::default()
            };

            // Independent expectation: which documents the ruleset denies.
            let denied: Vec<&str> = docs
                .iter()
                .filter(|d| {
                    let privacy = config
                        .provider_privacy
                        .get(&d.provenance.provider_id)
                        .copied()
                        .unwrap_or(PrivacyLevel::Public);
                    evaluate(d, privacy, Purpose::Export, &rules).is_deny()
                })
                .map(|d| d.id.as_str())
                .collect();

            let out = root.path().join(format!("out{case}"));
            let gate = export_gate(&ds, &rules, &config, Purpose::Export);
            if gate.is_err() {
                assert!(
                    !denied.is_empty(),
                    "case {case}: gate refused although nothing evaluates to deny"
                );
                assert!(!out.exists(), "case {case}: refused run must write nothing");
                denied_runs += 1;
                continue;
            }
            assert!(
                denied.is_empty(),
                "case {case}: gate passed with {} documents denied",
                denied.len()
            );
            allowed_runs += 1;

            let profiles = build_all_profiles(&ds, &roster, &config).unwrap().0;
            let parties = [
                party_aggregate(&profiles, "north").unwrap(),
                party_aggregate(&profiles, "south").unwrap(),
            ];
            let comparison = build_comparison(&ds, &roster, &config, Some(100)).unwrap();
            for format in [ReportFormat::Json, ReportFormat::Csv] {
                emit_profiles(&profiles, format, &out).unwrap();
                emit_parties(&parties, format, &out).unwrap();
                emit_comparison(&comparison, format, &out).unwrap();
            }

            let emitted = tree_bytes(&out);
            assert!(!emitted.is_empty(), "case {case}: allowed run must emit files");
            let blob: String = emitted
                .values()
                .map(|b| String::from_utf8_lossy(b).into_owned())
                .collect();
            for (id, tag) in &sentinels {
                if denied.contains(&id.as_str()) {
                    assert!(!blob.contains(tag), "case {case}: denied sentinel {tag} leaked");
                }
            }
            assert!(
                blob.contains(&sentinels[0].1),
                "case {case}: an allowed sentinel should surface in the comparison topics"
            );
        }
        assert!(denied_runs >= 10 && allowed_runs >= 10,
            "both gate outcomes need coverage, got {denied_runs} denied / {allowed_runs} allowed");
    });
}

#[test]
fn criterion_10_ledger_records_satisfy_the_cost_formulas() {
    criterion(10, "cost ledger vs closed-form recomputation", 5.0, || {
        let mut rng = ChaCha12Rng::seed_from_u64(1010);
        let tmp = TempDir::new().unwrap();

        let sources = [("alpha-src", 600usize), ("beta-src", 400usize)];
        let mut providers = Vec::new();
        let mut tasks = Vec::new();
        let mut scripted: HashMap<String, Vec<(String, DocValue)>> = HashMap::new();
        for (pi, (pid, count)) in sources.iter().enumerate() {
            let mut responses = serde_json::Map::new();
            let mut requests = Vec::with_capacity(*count);
            for i in 0..*count {
                let request = format!("q{i}-{}", "r".repeat(rng.random_range(0..30)));
                let body = serde_json::json!({
                    "r": i,
                    "text": "y".repeat(rng.random_range(1..200)),
                });
                responses.insert(
                    request.clone(),
                    serde_json::json!({ "documents": [body] }),
                );
                scripted
                    .entry(pid.to_string())
                    .or_default()
                    .push((request.clone(), DocValue::from_json(&body).unwrap()));
                requests.push(request);
            }
            let script = serde_json::json!({ "responses": responses });
            let endpoint = format!("{pid}.json");
            std::fs::write(tmp.path().join(&endpoint), serde_json::to_vec(&script).unwrap())
                .unwrap();
            providers.push(ProviderDescriptor {
                id: pid.to_string(),
                kind: ProviderKind::OnDemand,
                endpoint,
                sla: SlaContract {
                    max_requests: 50,
                    window: 60.0,
                    auth_required: false,
                    default_privacy: PrivacyLevel::Public,
                    default_license: String::new(),
                },
                network: NetworkProfile {
                    latency: [0.05, 0.08][pi],
                    throughput: [1_000_000.0, 500_000.0][pi],
                    price_per_byte: [0.0, 1e-7][pi],
                },
                invocation_price: [1e-4, 2e-4][pi],
                method_throughput: [20.0, 10.0][pi],
                jurisdiction: "xx".into(),
                credentials: None,
            });
            tasks.push(TaskSpec::Pull {
                provider: pid.to_string(),
                dataset: "bulk".into(),
                requests,
            });
        }
        let plan = CollectionPlan {
            name: "bulk".into(),
            seed: 99,
            clock: ClockMode::Virtual,
            virtual_start: Some(Timestamp::from_unix(1_400_000_000)),
            horizon: None,
            cost: CostParams { alpha: 1.3, beta: 2e-6 },
            durability: Default::default(),
            providers: providers.clone(),
            tasks,
        };

        let out_root = tmp.path().join("out");
        std::fs::create_dir_all(&out_root).unwrap();
        let outcome = run_collection(&plan, tmp.path(), &out_root).unwrap();
        let records = &outcome.ledger.records;
        assert_eq!(records.len(), 1000, "one billing record per scripted request");

        let by_id: HashMap<&str, &ProviderDescriptor> =
            providers.iter().map(|p| (p.id.as_str(), p)).collect();
        let (mut transfer, mut execution, mut monetary, mut energy) = (0.0f64, 0.0, 0.0, 0.0);
        let (mut bytes_in, mut bytes_out) = (0u64, 0u64);
        for record in records {
            let (pid, seq) = record.request_id.split_once('#').unwrap();
            let p = by_id[pid];
            let (request, body) = &scripted[pid][seq.parse::<usize>().unwrap()];

            // Request and response sizes are re-derived from the script.
            assert_eq!(record.bytes_in, request.len() as u64);
            assert_eq!(record.bytes_out, body.canonical_bytes().len() as u64);

            // The declared closed forms, recomputed from first principles.
            let total_bytes = (record.bytes_in + record.bytes_out) as f64;
            assert_eq!(record.transfer_time, p.network.latency + total_bytes / p.network.throughput);
            assert_eq!(record.execution_time, 1.0 / p.method_throughput);
            assert_eq!(
                record.monetary_cost,
                p.invocation_price + p.network.price_per_byte * total_bytes
            );
            assert_eq!(
                record.energy_cost,
                plan.cost.alpha * (record.transfer_time + record.execution_time)
                    + plan.cost.beta * total_bytes
            );

            transfer += record.transfer_time;
            execution += record.execution_time;
            monetary += record.monetary_cost;
            energy += record.energy_cost;
            bytes_in += record.bytes_in;
            bytes_out += record.bytes_out;
        }

        // Reported totals must equal an independent in-order summation
        // exactly, down to the last bit.
        let totals = &outcome.report.cost;
        assert_eq!(totals.requests, 1000);
        assert_eq!(totals.transfer_time, transfer);
        assert_eq!(totals.execution_time, execution);
        assert_eq!(totals.monetary_cost, monetary);
        assert_eq!(totals.energy_cost, energy);
        assert_eq!(totals.bytes_in, bytes_in);
        assert_eq!(totals.bytes_out, bytes_out);
    });
}
