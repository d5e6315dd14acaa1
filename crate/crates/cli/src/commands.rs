use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use gakit::manifest::{encode_f32_base64, write_manifest, ManifestDoc};
use gakit::retrieval::{query_topk_vector, rank_by_gak};
use gakit::selftest::{self, Fault, SelfTestOptions, SUITES};
use gakit::synthetic::{ClusterTask, ClusterTaskSpec};
use gakit::train::write_loss_trace;
use gakit::{
    best_path, build_index, gak_forward, load_index, make_prefix_views, mean_pairwise_similarity,
    recall_at_k, save_index, sequence_representation, train_projector, winoground_scores, Hit,
    IndexInput, KernelConfig, PoolingPolicy, PrefixView, Projector, QueryShape, TrainerConfig,
};
use serde_json::{json, Value};

use crate::config::CliConfig;
use crate::failure::{CmdResult, Failure};
use crate::inputs;
use crate::output::{num, Report};

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    fs::write(path, bytes)
        .map_err(|e| Failure::user(format!("cannot write {}: {e}", path.display())))
}

pub fn kernel_eval(
    cfg: &CliConfig,
    json: bool,
    manifest: &Path,
    a: &str,
    b: &str,
    show_path: bool,
) -> CmdResult<String> {
    let docs = inputs::manifest(manifest)?;
    let by_id = inputs::manifest_by_id(&docs);
    let x = inputs::find_doc(&by_id, a)?;
    let y = inputs::find_doc(&by_id, b)?;
    let raw_cfg = KernelConfig {
        normalize_gak: false,
        ..cfg.kernel
    };
    let norm_cfg = KernelConfig {
        normalize_gak: true,
        ..cfg.kernel
    };
    let raw = gak_forward(x.slices(), y.slices(), &raw_cfg)?;
    if raw > 1.0 {
        log::warn!("raw alignment kernel {raw} is above 1; see normalized_gak");
    }
    let normalized = gak_forward(x.slices(), y.slices(), &norm_cfg)?;
    let mean = mean_pairwise_similarity(x.slices(), y.slices(), &cfg.kernel)?;
    let mut r = Report::new("kernel-eval", json);
    r.text("doc_a", a)
        .text("doc_b", b)
        .real("raw_gak", raw)
        .real("normalized_gak", normalized)
        .real("mean_pairwise", mean);
    if show_path {
        let path = best_path(x.slices(), y.slices(), &cfg.kernel)?;
        let text: Vec<String> = path.pairs().iter().map(|(i, j)| format!("{i},{j}")).collect();
        r.raw(
            "path",
            json!(path.pairs().iter().map(|&(i, j)| [i, j]).collect::<Vec<_>>()),
            format!("path={}", text.join(";")),
        );
    }
    Ok(r.render())
}

pub fn selftest(cfg: &CliConfig, json: bool, list: bool, fault: Fault) -> CmdResult<String> {
    if list {
        let mut r = Report::new("selftest", json);
        r.raw("suites", json!(SUITES), SUITES.join("\n"));
        return Ok(r.render());
    }
    let opts = SelfTestOptions {
        seed: cfg.seed,
        delta: cfg.kernel.delta,
        fault,
    };
    let reports = selftest::run_all(&opts)?;
    let passed = reports.iter().all(|s| s.passed);
    let mut r = Report::new("selftest", json);
    let rows: Vec<Value> = reports
        .iter()
        .map(|s| {
            json!({
                "name": s.name,
                "passed": s.passed,
                "worst_error": s.worst_error,
                "tolerance": s.tolerance,
                "checks": s.checks,
            })
        })
        .collect();
    let text: Vec<String> = reports
        .iter()
        .map(|s| {
            format!(
                "suite={} status={} worst_error={} tolerance={} checks={}",
                s.name,
                if s.passed { "pass" } else { "FAIL" },
                num(s.worst_error),
                num(s.tolerance),
                s.checks
            )
        })
        .collect();
    r.raw("suites", Value::from(rows), text.join("\n"));
    r.text("result", if passed { "pass" } else { "fail" });
    let out = r.render();
    if passed {
        Ok(out)
    } else {
        let failed: Vec<&str> = reports.iter().filter(|s| !s.passed).map(|s| s.name).collect();
        print!("{out}");
        Err(Failure::internal(format!("failing suites: {}", failed.join(", "))))
    }
}

pub enum IndexSource<'a> {
    Manifest(&'a Path, PoolingPolicy),
    Vectors(&'a Path),
}

fn created_at(explicit: Option<u64>) -> u64 {
    explicit
        .or_else(|| std::env::var("SOURCE_DATE_EPOCH").ok()?.parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

pub fn index(
    cfg: &CliConfig,
    json: bool,
    source: IndexSource,
    out: &Path,
    stamp: Option<u64>,
) -> CmdResult<String> {
    let inputs = match source {
        IndexSource::Manifest(path, policy) => inputs::manifest(path)?
            .iter()
            .map(|d| {
                let seq = &d.sequence;
                let rep = sequence_representation(seq.doc_id(), seq.slices(), policy)?;
                Ok(IndexInput::new(seq.doc_id(), rep.values().to_vec(), d.meta.clone()))
            })
            .collect::<CmdResult<Vec<_>>>()?,
        IndexSource::Vectors(path) => inputs::vectors(path)?
            .into_iter()
            .map(|(id, v, meta)| IndexInput::new(id, v, meta))
            .collect(),
    };
    let idx = build_index(inputs, &cfg.kernel)?.with_created_at(created_at(stamp));
    save_index(&idx, out)?;
    let mut r = Report::new("index", json);
    r.int("entries", idx.len() as u64)
        .int("dim", idx.dim() as u64)
        .text("config_fingerprint", &format!("{:016x}", idx.config_fingerprint()))
        .text("path", &out.display().to_string());
    Ok(r.render())
}

pub enum QuerySource<'a> {
    Vector(&'a str),
    Doc {
        manifest: &'a Path,
        doc: &'a str,
        policy: PoolingPolicy,
    },
}

fn hits_report(r: &mut Report, hits: &[Hit]) {
    let rows: Vec<Value> = hits
        .iter()
        .enumerate()
        .map(|(i, h)| json!({"rank": i + 1, "doc_id": h.doc_id, "score": h.score}))
        .collect();
    let text: Vec<String> = hits
        .iter()
        .enumerate()
        .map(|(i, h)| format!("rank={} doc_id={} score={}", i + 1, h.doc_id, num(h.score)))
        .collect();
    r.raw("hits", Value::from(rows), text.join("\n"));
}

pub fn query(
    cfg: &CliConfig,
    json: bool,
    index: Option<&Path>,
    source: QuerySource,
    k: usize,
    gak: bool,
) -> CmdResult<String> {
    let hits = match (source, gak) {
        (QuerySource::Doc { manifest, doc, .. }, true) => {
            let docs = inputs::manifest(manifest)?;
            let by_id = inputs::manifest_by_id(&docs);
            let q = inputs::find_doc(&by_id, doc)?;
            let corpus: Vec<_> = docs.iter().map(|d| d.sequence.clone()).collect();
            rank_by_gak(q.slices(), &corpus, &cfg.kernel, k)?
        }
        (QuerySource::Vector(_), true) => {
            return Err(Failure::user("--gak needs a manifest document as the query"))
        }
        (source, false) => {
            let path = index.ok_or_else(|| Failure::user("--index is required"))?;
            let idx = load_index(path)?;
            let q = match source {
                QuerySource::Vector(b64) => {
                    inputs::decode_vector(b64).map_err(|e| Failure::user(format!("--vector: {e}")))?
                }
                QuerySource::Doc {
                    manifest,
                    doc,
                    policy,
                } => {
                    let docs = inputs::manifest(manifest)?;
                    let by_id = inputs::manifest_by_id(&docs);
                    let q = inputs::find_doc(&by_id, doc)?;
                    sequence_representation(q.doc_id(), q.slices(), policy)?
                        .values()
                        .to_vec()
                }
            };
            query_topk_vector(&idx, &q, k)?
        }
    };
    let mut r = Report::new("query", json);
    hits_report(&mut r, &hits);
    Ok(r.render())
}

pub fn eval_recall(
    json: bool,
    index: &Path,
    cases: &Path,
    ks: &[usize],
    policy: PoolingPolicy,
    shape: Option<&str>,
) -> CmdResult<String> {
    let shape = shape.map(QueryShape::parse).transpose()?;
    let idx = load_index(index)?;
    let cases = inputs::cases(cases, shape.as_ref())?;
    let report = recall_at_k(&cases, &idx, ks, policy)?;
    let mut r = Report::new("eval-recall", json);
    let recall: Vec<Value> = report
        .ks
        .iter()
        .zip(&report.recall)
        .map(|(k, v)| json!({"k": k, "recall": v}))
        .collect();
    let text: Vec<String> = report
        .ks
        .iter()
        .zip(&report.recall)
        .map(|(k, v)| format!("recall@{k}={}", num(*v)))
        .collect();
    r.int("cases", cases.len() as u64);
    r.raw("recall", Value::from(recall), text.join("\n"));
    let ranks: Vec<String> = report.ranks.iter().map(|x| x.to_string()).collect();
    r.raw("ranks", json!(report.ranks), format!("ranks={}", ranks.join(",")));
    Ok(r.render())
}

pub fn eval_winoground(json: bool, input: &Path) -> CmdResult<String> {
    let examples = inputs::winoground(input)?;
    let s = winoground_scores(&examples)?;
    let mut r = Report::new("eval-winoground", json);
    r.int("examples", examples.len() as u64)
        .real("text", s.text)
        .real("image", s.image)
        .real("group", s.group);
    Ok(r.render())
}

pub struct TrainArgs<'a> {
    pub manifest: &'a Path,
    pub hidden: &'a Path,
    pub out: &'a Path,
    pub trace: Option<&'a Path>,
    pub steps: usize,
    pub learning_rate: f64,
    pub output_dim: usize,
}

fn view_for(
    by_id: &std::collections::HashMap<&str, &gakit::InterleavedSequence>,
    h: &inputs::HiddenState,
) -> CmdResult<PrefixView> {
    let seq = inputs::find_doc(by_id, &h.doc_id)?;
    Ok(match h.cut {
        Some(cut) => make_prefix_views(seq, &[cut])?.remove(0),
        None => PrefixView::full(seq),
    })
}

pub fn train(cfg: &CliConfig, json: bool, a: TrainArgs) -> CmdResult<String> {
    let docs = inputs::manifest(a.manifest)?;
    let by_id = inputs::manifest_by_id(&docs);
    let states = inputs::hidden(a.hidden)?;
    let first = states
        .first()
        .ok_or_else(|| Failure::user(format!("{} has no hidden states", a.hidden.display())))?;
    let views = states
        .iter()
        .map(|h| view_for(&by_id, h))
        .collect::<CmdResult<Vec<_>>>()?;
    let hidden: Vec<Vec<f64>> = states.iter().map(|h| h.hidden.clone()).collect();
    let tcfg = TrainerConfig {
        learning_rate: a.learning_rate,
        steps: a.steps,
        seed: cfg.seed,
        input_dim: first.hidden.len(),
        output_dim: a.output_dim,
        alpha: 0.0,
    };
    let outcome = train_projector(&hidden, &views, &cfg.kernel, &tcfg)?;
    let text = serde_json::to_string_pretty(&outcome.projector)
        .map_err(|e| Failure::internal(e.to_string()))?;
    write_file(a.out, format!("{text}\n").as_bytes())?;
    if let Some(path) = a.trace {
        let mut buf = Vec::new();
        write_loss_trace(&outcome.trace, &mut buf).map_err(|e| Failure::internal(e.to_string()))?;
        write_file(path, &buf)?;
    }
    let initial = outcome.trace[0];
    let last = *outcome.trace.last().expect("trace has the initial loss");
    let mut r = Report::new("train-projector", json);
    r.int("steps_run", (outcome.trace.len() - 1) as u64)
        .real("initial_loss", initial)
        .real("final_loss", last)
        .text("projector", &a.out.display().to_string());
    Ok(r.render())
}

pub fn project(json: bool, projector: &Path, hidden: &Path, out: &Path) -> CmdResult<String> {
    let text = fs::read_to_string(projector)
        .map_err(|e| Failure::user(format!("cannot read {}: {e}", projector.display())))?;
    let p: Projector = serde_json::from_str(&text)
        .map_err(|e| Failure::format(format!("{}: {e}", projector.display())))?;
    if p.weights.len() != p.input_dim * p.output_dim {
        return Err(Failure::format(format!(
            "{}: {} weights for a {}x{} projector",
            projector.display(),
            p.weights.len(),
            p.output_dim,
            p.input_dim
        )));
    }
    let mut buf = Vec::new();
    let states = inputs::hidden(hidden)?;
    for h in &states {
        if h.hidden.len() != p.input_dim {
            return Err(gakit::Error::DimensionMismatch {
                expected: p.input_dim,
                found: h.hidden.len(),
            }
            .into());
        }
        let id = match h.cut {
            Some(c) => format!("{}@{c}", h.doc_id),
            None => h.doc_id.clone(),
        };
        let line = json!({"doc_id": id, "vector": encode_f32_base64(&p.apply(&h.hidden))});
        writeln!(buf, "{line}").expect("write to memory");
    }
    write_file(out, &buf)?;
    let mut r = Report::new("project", json);
    r.int("vectors", states.len() as u64)
        .int("dim", p.output_dim as u64)
        .text("path", &out.display().to_string());
    Ok(r.render())
}

pub fn synth(cfg: &CliConfig, json: bool, out_dir: &Path, docs: usize) -> CmdResult<String> {
    let spec = ClusterTaskSpec {
        docs,
        seed: cfg.seed,
        ..ClusterTaskSpec::default()
    };
    let task = ClusterTask::generate(&spec);
    fs::create_dir_all(out_dir)
        .map_err(|e| Failure::user(format!("cannot create {}: {e}", out_dir.display())))?;
    let manifest: PathBuf = out_dir.join("manifest.jsonl");
    let hidden: PathBuf = out_dir.join("hidden.jsonl");
    let records: Vec<ManifestDoc> = task
        .docs
        .iter()
        .zip(&task.cluster_of)
        .map(|(d, c)| ManifestDoc {
            sequence: d.clone(),
            meta: format!("cluster={c}"),
        })
        .collect();
    let mut buf = Vec::new();
    write_manifest(&records, &mut buf).expect("write to memory");
    write_file(&manifest, &buf)?;
    let mut buf = Vec::new();
    for (d, h) in task.docs.iter().zip(&task.hidden) {
        let line = json!({"doc_id": d.doc_id(), "hidden": encode_f32_base64(h)});
        writeln!(buf, "{line}").expect("write to memory");
    }
    write_file(&hidden, &buf)?;
    let mut r = Report::new("synth", json);
    r.int("docs", docs as u64)
        .text("manifest", &manifest.display().to_string())
        .text("hidden", &hidden.display().to_string());
    Ok(r.render())
}
