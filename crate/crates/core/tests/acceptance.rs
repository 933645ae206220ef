//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.
//!
//! Run alone with `cargo test -p resid-core --test acceptance`.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use resid_core::embedding::{
    random_walks, train_skipgram, walk_fidelity, PositionalEncoder, SkipGramConfig, WalkConfig,
};
use resid_core::geometry::{complete_graph_prune, segments_intersect, AccessibilityGraph, Point, Segment};
use resid_core::graph::{apg_from_ag, AccessProbabilityGraph};
use resid_core::ingest::{
    build_features, chunk, downsample, label_events, merge_logs, parse_log, LabeledEvent, SamplingConfig,
    SensorVocab, StatusMapping,
};
use resid_core::model::{cross_validate, forward, gradient_check, CvConfig, CvReport, EvalReport, LstmParams, TrainConfig};
use resid_core::rng;
use resid_core::simulator::{make_fixture, simulate, Fixture};
use resid_core::timecodec::{cyclic_distance, encode_component};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn paper_apg() -> AccessProbabilityGraph {
    let ids = (1..=4).map(|i| format!("N{i}")).collect();
    let ag = AccessibilityGraph::from_adjacency(ids, common::paper_adjacency()).unwrap();
    apg_from_ag(&ag, 0.5).unwrap()
}

// ---------- 1 ----------

fn apg_exact() -> Verdict {
    let printed = [
        [0.5, 0.5, 0.0, 0.0],
        [0.23, 0.5, 0.15, 0.12],
        [0.0, 0.2, 0.5, 0.3],
        [0.0, 0.17, 0.33, 0.5],
    ];
    let ids = (1..=4).map(|i| format!("N{i}")).collect();
    let ag = AccessibilityGraph::from_adjacency(ids, common::paper_adjacency()).unwrap();
    apg_from_ag(&ag, 0.5).unwrap();
    let mut worst = Duration::ZERO;
    for _ in 0..100 {
        let t = Instant::now();
        std::hint::black_box(apg_from_ag(&ag, 0.5).unwrap());
        worst = worst.max(t.elapsed());
    }
    let apg = apg_from_ag(&ag, 0.5).unwrap();
    let r = |x: f64, dp: i32| (x * 10f64.powi(dp)).round();
    let mut printed_ok = true;
    let mut analytic_ok = true;
    for (i, row) in apg.trans().iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            printed_ok &= r(v, 2) == r(printed[i][j], 2);
            analytic_ok &= r(v, 4) == r(common::analytic_apg(0.5)[i][j], 4);
        }
    }
    verdict(
        printed_ok && analytic_ok && worst < Duration::from_millis(1),
        format!("printed {printed_ok}, 4dp {analytic_ok}, slowest call {worst:?}"),
    )
}

// ---------- 2 ----------

fn time_values() -> Verdict {
    let mut err: f64 = 0.0;
    for ((t, p), want) in [(236, 365), (3, 7), (54_000, 86_400)]
        .into_iter()
        .zip([(-0.796, -0.605), (0.434, -0.901), (-0.707, -0.707)])
    {
        let (s, c) = encode_component(t, p).unwrap();
        err = err.max((s - want.0).abs()).max((c - want.1).abs());
    }
    let h = |t| encode_component(t, 24).unwrap();
    err = err.max((cyclic_distance(h(0), h(23)).unwrap() - 0.03407).abs());
    err = err.max((cyclic_distance(h(0), h(15)).unwrap() - 1.7071).abs());
    verdict(err <= 1e-3, format!("max error {err:.2e}"))
}

// ---------- 3 ----------

fn geometry() -> Verdict {
    let mut r = rng::seeded(3);
    let (mut checked, mut skipped, mut wrong) = (0, 0, 0);
    while checked + skipped < 10_000 {
        // a third on a coarse integer grid, where touching and collinear
        // cases are common
        let grid = r.random_bool(1.0 / 3.0);
        let mut p = || {
            if grid {
                Point::xy(r.random_range(0..5) as f64, r.random_range(0..5) as f64)
            } else {
                Point::xy(r.random_range(-10.0..10.0), r.random_range(-10.0..10.0))
            }
        };
        let (Ok(a), Ok(b)) = (Segment::new(p(), p()), Segment::new(p(), p())) else {
            continue;
        };
        let d = common::sampled_distance(&a, &b, 1000);
        if (1e-9..1e-6).contains(&d) {
            skipped += 1;
            continue;
        }
        checked += 1;
        if segments_intersect(&a, &b).unwrap() != (d < 1e-9) {
            wrong += 1;
        }
    }
    let f = make_fixture("square4").unwrap();
    let g = complete_graph_prune(&f.layout).unwrap();
    let i = |id: &str| g.index_of(id).unwrap();
    let diagonals_gone = !g.has_edge(i("M1"), i("M3")) && !g.has_edge(i("M2"), i("M4"));
    verdict(
        wrong == 0 && diagonals_gone && g.edge_count() == 4,
        format!("{checked} pairs, {skipped} near-degenerate skipped, {wrong} disagreements; square4 edges {}", g.edge_count()),
    )
}

// ---------- 4 ----------

fn lstm() -> Verdict {
    let mut grad: f64 = 0.0;
    let mut fwd: f64 = 0.0;
    for seed in 0..20 {
        let params = LstmParams::init(4, 5, 3, &mut rng::seeded(seed));
        let seq = common::toy_chunk(1000 + seed, 10, 6 + (seed as usize % 5), 4, 3);
        grad = grad.max(gradient_check(&params, &seq, 1e-5).unwrap());
        let got = forward(&seq, &params).unwrap();
        let want = common::reference_forward(&seq, &params);
        for (a, b) in got.iter().flatten().zip(want.iter().flatten()) {
            fwd = fwd.max((a - b).abs());
        }
    }
    verdict(
        grad < 1e-4 && fwd < 1e-8,
        format!("max relative gradient error {grad:.2e}, max forward deviation {fwd:.2e}"),
    )
}

// ---------- 5 ----------

fn walks() -> Verdict {
    let apg = paper_apg();
    let walks = random_walks(
        &apg,
        &WalkConfig {
            num_walks_per_node: 50,
            walk_length: 100,
            rng_seed: 5,
        },
    )
    .unwrap();
    let n = apg.trans().len();
    let mut counts = vec![vec![0u32; n]; n];
    let mut seen = vec![0u32; n];
    for w in &walks.sequences {
        for s in w.windows(2) {
            let (a, b) = (s[0] as usize, s[1] as usize);
            if seen[a] < 1000 {
                seen[a] += 1;
                counts[a][b] += 1;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let tv: f64 = (0..n)
            .map(|j| (counts[i][j] as f64 / 1000.0 - apg.trans()[i][j]).abs())
            .sum::<f64>()
            / 2.0;
        worst = worst.max(tv);
    }
    let all = walk_fidelity(&walks, &apg)
        .iter()
        .map(|f| f.total_variation)
        .fold(0.0, f64::max);
    verdict(
        seen.iter().all(|&s| s == 1000) && worst < 0.05,
        format!("max total variation {worst:.4} at 1000 samples/node ({all:.4} over all samples)"),
    )
}

// ---------- 6, 7 ----------

const CYCLE_SEEDS: u64 = 5;
const CYCLE_CHUNK: usize = 200;

fn seeded_run(fx: &Fixture, seed: u64) -> Vec<LabeledEvent> {
    let ag = complete_graph_prune(&fx.layout).unwrap();
    let mut run = fx.run.clone();
    run.seed = seed;
    for (k, s) in run.scripts.iter_mut().enumerate() {
        s.rng_seed = seed * 10 + k as u64;
    }
    simulate(&ag, &run).unwrap()
}

fn node2vec(fx: &Fixture, window: usize, seed: u64) -> PositionalEncoder {
    let apg = apg_from_ag(&complete_graph_prune(&fx.layout).unwrap(), 0.5).unwrap();
    let walks = random_walks(
        &apg,
        &WalkConfig {
            num_walks_per_node: 50,
            walk_length: 100,
            rng_seed: seed,
        },
    )
    .unwrap();
    let emb = train_skipgram(
        &walks,
        &SkipGramConfig {
            dimension: 16,
            window_size: window,
            rng_seed: seed,
            ..SkipGramConfig::default()
        },
    )
    .unwrap();
    PositionalEncoder::Node2Vec(emb)
}

fn cv(events: &[LabeledEvent], enc: &PositionalEncoder, chunk_len: usize, upsample: usize, classes: usize, seed: u64) -> (CvReport, Vec<resid_core::ingest::FeatureSequence>) {
    let vocab = SensorVocab::from_events(events.iter().map(|e| &e.event));
    let rows = build_features(events, enc, &vocab, &StatusMapping::default()).unwrap();
    let chunks = chunk(&rows, chunk_len).unwrap();
    let cfg = CvConfig {
        folds: 5,
        upsample_factor: upsample,
        valid_fraction: 0.25,
        train: TrainConfig {
            hidden_size: 16,
            max_epochs: 10,
            chunk_len,
            rng_seed: seed,
            ..TrainConfig::default()
        },
    };
    (cross_validate(&chunks, classes, &cfg).unwrap(), chunks)
}

struct CycleRuns {
    baseline: Vec<f64>,
    window1: Vec<f64>,
    elapsed: Duration,
}

fn cycle_runs() -> CycleRuns {
    let fx = make_fixture("cycle8").unwrap();
    let t = Instant::now();
    let mut out = CycleRuns {
        baseline: vec![],
        window1: vec![],
        elapsed: Duration::ZERO,
    };
    for seed in 0..CYCLE_SEEDS {
        let events = seeded_run(&fx, seed);
        out.baseline
            .push(cv(&events, &PositionalEncoder::None, CYCLE_CHUNK, 1, 2, seed).0.aggregate.mean.accuracy);
        out.window1
            .push(cv(&events, &node2vec(&fx, 1, seed), CYCLE_CHUNK, 1, 2, seed).0.aggregate.mean.accuracy);
    }
    out.elapsed = t.elapsed();
    out
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn encoding_benefit(runs: &CycleRuns) -> Verdict {
    let (base, n2v) = (mean(&runs.baseline), mean(&runs.window1));
    verdict(
        n2v - base >= 0.10 && n2v >= 0.85 && runs.elapsed <= Duration::from_secs(15 * 60),
        format!(
            "node2vec {n2v:.4} vs none {base:.4} (gap {:.4}) over {CYCLE_SEEDS} seeds in {:.0}s",
            n2v - base,
            runs.elapsed.as_secs_f64()
        ),
    )
}

fn window_size(runs: &CycleRuns) -> Verdict {
    let fx = make_fixture("cycle8").unwrap();
    let mut wide = vec![];
    for seed in 0..CYCLE_SEEDS {
        let events = seeded_run(&fx, seed);
        wide.push(cv(&events, &node2vec(&fx, 5, seed), CYCLE_CHUNK, 1, 2, seed).0.aggregate.mean.accuracy);
    }
    let (w1, w5) = (mean(&runs.window1), mean(&wide));
    verdict(w1 >= w5, format!("window 1 {w1:.4}, window 5 {w5:.4}"))
}

// ---------- 8 ----------

fn downsampling() -> Verdict {
    let fx = make_fixture("office9").unwrap();
    let residents = fx.run.residents();
    let (mut sampled, mut unsampled, mut stationary) = (vec![], vec![], vec![]);
    for seed in 0..5 {
        let events = seeded_run(&fx, seed);
        let home = |e: &LabeledEvent| e.resident.is_some_and(|r| fx.home_sensors[&residents[r]] == e.event.sensor_id);
        stationary.push(events.iter().filter(|e| home(e)).count() as f64 / events.len() as f64);
        let vocab = SensorVocab::from_events(events.iter().map(|e| &e.event));
        let enc = node2vec(&fx, 1, seed);
        for (interval, up) in [(0.0, 1), (60.0, 8)] {
            let cfg = SamplingConfig {
                downsample_interval: interval,
                home_sensors: fx.home_sensors.clone(),
                upsample_factor: up,
            };
            let kept = downsample(&events, &residents, &cfg, &vocab).unwrap();
            let chunk_len = 100;
            let (rep, chunks) = cv(&kept, &enc, chunk_len, up, 3, seed);
            // score only the events away from the resident's own desk
            let mut pairs = vec![];
            for f in &rep.folds {
                for (ci, pred) in f.test_chunks.iter().zip(&f.predictions) {
                    for (t, y) in chunks[*ci].labeled() {
                        if !home(&kept[ci * chunk_len + t]) {
                            pairs.push((y, pred[t]));
                        }
                    }
                }
            }
            let f1 = EvalReport::from_pairs(pairs, 3).unwrap().metrics.f1;
            if interval > 0.0 {
                sampled.push(f1);
            } else {
                unsampled.push(f1);
            }
        }
    }
    let (s, u, st) = (mean(&sampled), mean(&unsampled), mean(&stationary));
    verdict(
        (0.85..=0.95).contains(&st) && s > u,
        format!("movement F1 sampled {s:.4} vs unsampled {u:.4} ({:+.4}), stationary share {st:.3}", s - u),
    )
}

// ---------- 9 ----------

/// Full-dataset run, enabled by pointing RESID_TWOR_DIR at a directory of
/// raw logs and RESID_TWOR_LAYOUT at a matching layout file.
fn full_dataset() -> Verdict {
    let (Some(dir), Some(layout)) = (std::env::var_os("RESID_TWOR_DIR"), std::env::var_os("RESID_TWOR_LAYOUT")) else {
        return Verdict::Skip("set RESID_TWOR_DIR and RESID_TWOR_LAYOUT to run".into());
    };
    let run = || -> resid_core::Result<f64> {
        let layout = resid_core::geometry::LayoutMap::from_path(PathBuf::from(layout))?;
        let mut logs = vec![];
        let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        files.sort();
        for f in files {
            logs.push(parse_log(std::io::BufReader::new(std::fs::File::open(f)?), 2009)?.records);
        }
        let records = merge_logs(logs);
        let events = label_events(&records, &["R1".into(), "R2".into()]);
        let apg = apg_from_ag(&complete_graph_prune(&layout)?, 0.5)?;
        let walks = random_walks(&apg, &WalkConfig { rng_seed: 1, ..WalkConfig::default() })?;
        let emb = train_skipgram(&walks, &SkipGramConfig { rng_seed: 2, ..SkipGramConfig::default() })?;
        let vocab = SensorVocab::from_events(events.iter().map(|e| &e.event));
        let rows = build_features(&events, &PositionalEncoder::Node2Vec(emb), &vocab, &StatusMapping::default())?;
        let train = TrainConfig { rng_seed: 3, ..TrainConfig::default() };
        let chunks = chunk(&rows, train.chunk_len)?;
        let cfg = CvConfig { train, ..CvConfig::default() };
        Ok(cross_validate(&chunks, 2, &cfg)?.aggregate.mean.accuracy)
    };
    match run() {
        Ok(acc) => verdict(acc >= 0.90, format!("accuracy {acc:.4}")),
        Err(e) => Verdict::Fail(format!("could not run: {e}")),
    }
}

// ---------- 10 ----------

fn determinism() -> Verdict {
    let fx = make_fixture("cycle8").unwrap();
    let once = || {
        let mut short = fx.clone();
        short.run.duration = 86_400.0;
        let events = seeded_run(&short, 9);
        let enc = node2vec(&short, 1, 9);
        let PositionalEncoder::Node2Vec(emb) = &enc else { unreachable!() };
        let bytes = serde_json::to_vec(&emb.to_export()).unwrap();
        let (rep, _) = cv(&events, &enc, 100, 2, 2, 9);
        (bytes, rep)
    };
    let (e1, r1) = once();
    let (e2, r2) = once();
    let same_metrics = r1 == r2 && serde_json::to_string(&r1).unwrap() == serde_json::to_string(&r2).unwrap();
    verdict(
        e1 == e2 && same_metrics,
        format!("embedding bytes equal {}, reports equal {same_metrics}", e1 == e2),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, v: Verdict| {
        let (tag, detail) = match v {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("criterion {n:>2} {name:<28} {tag}  {detail}");
    };
    report(1, "apg exactness", apg_exact());
    report(2, "time encoding", time_values());
    report(3, "segment oracle", geometry());
    report(4, "lstm correctness", lstm());
    report(5, "walk fidelity", walks());
    let runs = cycle_runs();
    report(6, "positional encoding benefit", encoding_benefit(&runs));
    report(7, "window size", window_size(&runs));
    report(8, "down-sampling", downsampling());
    report(9, "full dataset", full_dataset());
    report(10, "determinism", determinism());
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
