//! The pipeline stages behind each subcommand.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;

use resid_core::embedding::{
    random_walks, train_skipgram, walk_fidelity, EmbeddingExport, NodeEmbeddings, PositionalEncoder,
};
use resid_core::geometry::{complete_graph_prune, AccessibilityGraph, LayoutMap};
use resid_core::graph::{apg_from_ag, AccessProbabilityGraph};
use resid_core::ingest::{
    build_features, chunk, downsample, label_events, merge_logs, parse_log, resident_tag,
    upsample_training, FeatureSequence, LabeledEvent, SensorVocab,
};
use resid_core::model::{cross_validate, evaluate, train, Checkpoint, CvConfig, CvReport, EvalReport};
use resid_core::rng;
use resid_core::simulator::{ground_truth_csv, make_fixture, simulate, to_log, Fixture};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::fail::Failure;
use crate::run_dir::RunDir;

/// Embedding file: the core export plus an explicit `[n, d]` shape.
#[derive(Serialize, Deserialize)]
struct EmbeddingFile {
    shape: [usize; 2],
    #[serde(flatten)]
    export: EmbeddingExport,
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("artifact serializes") + "\n"
}

pub struct Pipeline {
    cfg: RunConfig,
    fixture: Option<Fixture>,
    out: RunDir,
}

impl Pipeline {
    /// Loads the fixture if one is named, fills fixture defaults into the
    /// config and writes the resolved config to the run directory.
    pub fn new(mut cfg: RunConfig) -> Result<Self, Failure> {
        let fixture = match &cfg.paths.fixture {
            Some(name) => Some(make_fixture(name)?),
            None => None,
        };
        if let Some(f) = &fixture {
            if cfg.dataset.residents.is_empty() {
                cfg.dataset.residents = f.run.residents();
            }
            if cfg.sampling.home_sensors.is_empty() {
                cfg.sampling.home_sensors = f.home_sensors.clone();
            }
        }
        let mut out = RunDir::create(&cfg.paths.output_dir)?;
        out.write("config.resolved.toml", cfg.to_toml())?;
        Ok(Pipeline { cfg, fixture, out })
    }

    pub fn finish(self) -> Result<(), Failure> {
        self.out.finish()
    }

    fn layout(&self) -> Result<Option<LayoutMap>, Failure> {
        if let Some(f) = &self.fixture {
            return Ok(Some(f.layout.clone()));
        }
        match &self.cfg.paths.layout {
            Some(p) => Ok(Some(LayoutMap::from_path(p)?)),
            None => Ok(None),
        }
    }

    fn require_layout(&self) -> Result<LayoutMap, Failure> {
        self.layout()?
            .ok_or_else(|| Failure::config("no layout: set paths.layout or paths.fixture"))
    }

    /// Accessibility graph and APG, with their artifacts and a summary.
    pub fn build_graph(&mut self) -> Result<(AccessibilityGraph, AccessProbabilityGraph), Failure> {
        let layout = self.require_layout()?;
        let ag = complete_graph_prune(&layout)?;
        let apg = apg_from_ag(&ag, self.cfg.graph.self_weight)?;
        let comps = ag.component_report();
        let mut summary = format!(
            "{}, {}, {}\n",
            plural(ag.len(), "node"),
            plural(ag.edge_count(), "edge"),
            plural(comps.len(), "component")
        );
        if comps.len() > 1 {
            let listed: Vec<String> = comps.iter().map(|c| format!("[{}]", c.join(" "))).collect();
            let warn = format!("WARN graph is disconnected: {}", listed.join(" "));
            log::warn!("{warn}");
            summary.push_str(&warn);
            summary.push('\n');
        }
        print!("{summary}");
        self.out.write("graph.json", pretty(&ag.to_export()))?;
        self.out.write("apg.json", pretty(&apg.to_export()))?;
        self.out.write("graph_summary.txt", summary)?;
        Ok((ag, apg))
    }

    /// Node2Vec embeddings plus the walk fidelity table.
    pub fn embed(&mut self) -> Result<NodeEmbeddings, Failure> {
        let (_, apg) = self.build_graph()?;
        let walks = random_walks(&apg, &self.cfg.walk)?;
        let fid = walk_fidelity(&walks, &apg);
        let mut stats = String::from("node,samples,total_variation\n");
        let mut worst: f64 = 0.0;
        for f in &fid {
            writeln!(stats, "{},{},{:.6}", f.node_id, f.samples, f.total_variation).unwrap();
            if f.total_variation.is_finite() {
                worst = worst.max(f.total_variation);
            }
        }
        writeln!(stats, "max,,{worst:.6}").unwrap();
        let emb = train_skipgram(&walks, &self.cfg.skipgram)?;
        let (n, d) = (emb.node_ids().len(), emb.dimension());
        println!("embeddings {n}x{d}, max walk total variation {worst:.4}");

        let file = EmbeddingFile {
            shape: [n, d],
            export: emb.to_export(),
        };
        self.out.write("embeddings.json", pretty(&file))?;
        self.out
            .write("embeddings.csv", format!("# shape {n}x{d}\n{}", emb.to_csv()))?;
        self.out.write("walk_stats.csv", stats)?;
        Ok(emb)
    }

    fn embeddings(&mut self) -> Result<NodeEmbeddings, Failure> {
        match self.cfg.paths.embeddings.clone() {
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| Failure::data(format!("{}: {e}", p.display())))?;
                let file: EmbeddingFile = serde_json::from_str(&text)
                    .map_err(|e| Failure::data(format!("{}: {e}", p.display())))?;
                Ok(NodeEmbeddings::from_export(file.export)?)
            }
            None => self.embed(),
        }
    }

    /// Simulated log and ground-truth sidecar for the configured fixture.
    pub fn simulate(&mut self) -> Result<Vec<LabeledEvent>, Failure> {
        let f = self
            .fixture
            .as_ref()
            .ok_or_else(|| Failure::config("simulate needs paths.fixture"))?;
        let ag = complete_graph_prune(&f.layout)?;
        let mut run = f.run.clone();
        let s = &self.cfg.simulate;
        if let Some(days) = s.days {
            run.duration = days * 86_400.0;
        }
        if let Some(i) = s.detection_interval {
            run.sensor.detection_interval = i;
        }
        if let Some(p) = s.p_fail {
            run.sensor.p_fail = p;
        }
        run.seed = rng::derive_seed(self.cfg.seed, 4);
        for (k, script) in run.scripts.iter_mut().enumerate() {
            script.rng_seed = rng::derive_seed(self.cfg.seed, 16 + k as u64);
        }
        let events = simulate(&ag, &run)?;
        println!("simulated {} events", events.len());
        self.out.write("simulated.log", to_log(&events))?;
        self.out
            .write("ground_truth.csv", ground_truth_csv(&events, &run.residents()))?;
        Ok(events)
    }

    /// Labeled events from the configured logs, or from a fresh simulation
    /// when no logs are given and a fixture is.
    fn events(&mut self) -> Result<Vec<LabeledEvent>, Failure> {
        if self.cfg.paths.logs.is_empty() {
            if self.fixture.is_none() {
                return Err(Failure::config("no input: set paths.logs or paths.fixture"));
            }
            return self.simulate();
        }
        let mut logs = Vec::new();
        for p in &self.cfg.paths.logs {
            let file = File::open(p).map_err(|e| Failure::data(format!("{}: {e}", p.display())))?;
            let parsed = parse_log(BufReader::new(file), self.cfg.dataset.year)
                .map_err(|e| Failure::data(format!("{}: {e}", p.display())))?;
            if let Some(m) = parsed.malformed.first() {
                log::warn!(
                    "{}: skipped {} malformed lines (first at line {}: {})",
                    p.display(),
                    parsed.malformed.len(),
                    m.line_no,
                    m.reason
                );
            }
            logs.push(parsed.records);
        }
        let records = merge_logs(logs);
        if self.cfg.dataset.residents.is_empty() {
            let tags: BTreeSet<String> = records
                .iter()
                .filter_map(|r| r.annotation.as_ref())
                .map(|a| resident_tag(&a.activity).to_string())
                .collect();
            log::info!("residents from annotations: {tags:?}");
            self.cfg.dataset.residents = tags.into_iter().collect();
        }
        if self.cfg.dataset.residents.is_empty() {
            return Err(Failure::data("logs carry no resident annotations"));
        }
        Ok(label_events(&records, &self.cfg.dataset.residents))
    }

    fn encoder(&mut self, name: &str) -> Result<PositionalEncoder, Failure> {
        Ok(match name {
            "none" => PositionalEncoder::None,
            "coordinates" => PositionalEncoder::coordinates(&self.require_layout()?),
            "room_number" => PositionalEncoder::room_number(&self.require_layout()?)?,
            "node2vec" => PositionalEncoder::Node2Vec(self.embeddings()?),
            other => return Err(Failure::config(format!("unknown encoder `{other}`"))),
        })
    }

    /// Chunks per configured encoder, in config order.
    fn datasets(&mut self) -> Result<Vec<(String, Vec<FeatureSequence>)>, Failure> {
        let events = self.events()?;
        let residents = self.cfg.dataset.residents.clone();
        let vocab = SensorVocab::from_events(events.iter().map(|e| &e.event));
        let kept = downsample(&events, &residents, &self.cfg.sampling, &vocab)?;
        log::info!("{} of {} events after down-sampling", kept.len(), events.len());
        let mut node2vec = None;
        let mut out = Vec::new();
        for name in self.cfg.encoder.variants.clone() {
            // embeddings are built once even if several stages ask
            let enc = if name == "node2vec" {
                if node2vec.is_none() {
                    node2vec = Some(self.encoder(&name)?);
                }
                node2vec.clone().expect("just set")
            } else {
                self.encoder(&name)?
            };
            let rows = build_features(&kept, &enc, &vocab, &self.cfg.status)?;
            let chunks = chunk(&rows, self.cfg.train.chunk_len)?;
            out.push((name, chunks));
        }
        Ok(out)
    }

    fn n_classes(&self) -> usize {
        self.cfg.dataset.residents.len()
    }

    /// Chronological hold-out: the last chunks are the test set, the ones
    /// before them validation, the rest training.
    pub fn train(&mut self) -> Result<(), Failure> {
        let sets = self.datasets()?;
        let n_classes = self.n_classes();
        for (name, chunks) in sets {
            let n = chunks.len();
            let n_test = (n as f64 * self.cfg.cv.test_fraction).round() as usize;
            let n_test = n_test.min(n.saturating_sub(1));
            let rest = n - n_test;
            let n_valid = ((rest as f64 * self.cfg.cv.valid_fraction).round() as usize)
                .min(rest.saturating_sub(1));
            let n_train = rest - n_valid;
            let mut up_rng = rng::rng(self.cfg.train.rng_seed, 200);
            let train_set =
                upsample_training(&chunks[..n_train], self.cfg.sampling.upsample_factor, &mut up_rng)?;
            let outcome = train(&train_set, &chunks[n_train..rest], n_classes, &self.cfg.train)?;
            let test = if n_test > 0 { &chunks[rest..] } else { &chunks[..] };
            if n_test == 0 {
                log::warn!("no test chunks; evaluating {name} on the training data");
            }
            let report = evaluate(test, &outcome.params)?;
            println!(
                "{name}: accuracy {:.4} f1 {:.4} (best epoch {})",
                report.metrics.accuracy, report.metrics.f1, outcome.best_epoch
            );
            let ckpt = Checkpoint::new(self.cfg.train.clone(), outcome.params);
            self.out.write(&format!("checkpoint-{name}.json"), ckpt.to_json()? + "\n")?;
            self.out.write(&format!("eval-{name}.json"), pretty(&report))?;
            self.out.write(&format!("eval-{name}.csv"), eval_csv(&report))?;
            let mut curve = String::from("epoch,train_loss,valid_loss\n");
            for s in &outcome.curve {
                writeln!(curve, "{},{:.8},{:.8}", s.epoch, s.train_loss, s.valid_loss).unwrap();
            }
            self.out.write(&format!("curve-{name}.csv"), curve)?;
        }
        Ok(())
    }

    pub fn crossval(&mut self) -> Result<(), Failure> {
        let sets = self.datasets()?;
        let n_classes = self.n_classes();
        let cv = CvConfig {
            folds: self.cfg.cv.folds,
            valid_fraction: self.cfg.cv.valid_fraction,
            upsample_factor: self.cfg.sampling.upsample_factor,
            train: self.cfg.train.clone(),
        };
        let mut reports: Vec<(String, CvReport)> = Vec::new();
        for (name, chunks) in sets {
            let rep = cross_validate(&chunks, n_classes, &cv)?;
            let m = rep.aggregate.mean;
            println!("{name}: mean accuracy {:.4} f1 {:.4}", m.accuracy, m.f1);
            self.out.write(&format!("cv-{name}.json"), pretty(&rep))?;
            self.out.write(&format!("cv-{name}.csv"), rep.to_csv())?;
            reports.push((name, rep));
        }
        if reports.len() > 1 {
            self.out.write("comparison.csv", comparison_csv(&reports))?;
        }
        Ok(())
    }
}

fn eval_csv(r: &EvalReport) -> String {
    let mut s = String::from("metric,value\n");
    for (k, v) in ["accuracy", "precision", "recall", "f1"].iter().zip(r.metrics.values()) {
        writeln!(s, "{k},{v:.6}").unwrap();
    }
    writeln!(s, "events,{}", r.total).unwrap();
    s
}

fn comparison_csv(reports: &[(String, CvReport)]) -> String {
    let mut s = String::from("encoder");
    for m in ["accuracy", "precision", "recall", "f1"] {
        write!(s, ",{m}_mean,{m}_std").unwrap();
    }
    s.push('\n');
    for (name, r) in reports {
        s.push_str(name);
        for (m, sd) in r.aggregate.mean.values().iter().zip(r.aggregate.std.values()) {
            write!(s, ",{m:.6},{sd:.6}").unwrap();
        }
        s.push('\n');
    }
    s
}
