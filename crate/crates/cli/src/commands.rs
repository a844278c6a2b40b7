use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use variety_core::analysis::role_series;
use variety_core::io::{manifest_path, read_manifest, read_run, write_run, WriteOptions};
use variety_core::regulation::{bound_report, BruteForce, RNG_ALGORITHM};
use variety_core::trainer::ExperimentConfig;
use variety_core::variety as entropy_bits;
use variety_core::{
    cardinality_variety, classify_dominance, classify_layers, closed_loop_run, core_periphery,
    empirical_distribution, entropy_profile, median_range_threshold, quantize_joint, ComponentSet,
    Distribution, JointHistogram, PartitionMode, Policy, RegulationGame, Trajectory,
};

use crate::report::{self, Output};
use crate::CliError;

pub const ENUM_CAP_VAR: &str = "VARIETY_ENUM_CAP";

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn parse<T: DeserializeOwned>(path: &Path, v: Value) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Input(format!("{}: malformed json: {e}", path.display())))
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("result serializes")
}

pub fn variety(input: &Path, cardinality: bool) -> Result<Output, CliError> {
    let text = read_text(input)?;
    let head = text.trim_start().chars().next();
    let (kind, bits, count) = match head {
        Some('{') => {
            let d: Distribution = parse(input, read_json(input)?)?;
            let bits = if cardinality {
                (d.len() as f64).log2()
            } else {
                entropy_bits(&d)
            };
            ("distribution", bits, d.len())
        }
        _ => {
            let labels: Vec<String> = if head == Some('[') {
                parse(input, read_json(input)?)?
            } else {
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(String::from)
                    .collect()
            };
            let bits = if cardinality {
                cardinality_variety(&ComponentSet::from_labels(
                    labels.iter().map(String::as_str),
                )?)
            } else {
                entropy_bits(&empirical_distribution(&labels)?)
            };
            ("labels", bits, labels.len())
        }
    };
    let mode = if cardinality {
        "cardinality"
    } else {
        "entropy"
    };
    Ok(Output {
        inputs: vec![input.to_path_buf()],
        parameters: json!({ "mode": mode }),
        seeds: vec![],
        results: json!({ "bits": bits, "input_kind": kind, "entries": count }),
        text: Some(format!("{bits:.6}")),
    })
}

pub fn partition(path: &Path, from: i64, to: i64, mode: PartitionMode) -> Result<Output, CliError> {
    let t: Trajectory = parse(path, read_json(path)?)?;
    t.validate()?;
    let result = core_periphery(t.at(from)?, t.at(to)?, mode)?;
    Ok(Output {
        inputs: vec![path.to_path_buf()],
        parameters: json!({ "from": from, "to": to, "mode": mode }),
        seeds: vec![],
        results: to_value(&result),
        text: None,
    })
}

fn enumeration_cap() -> Result<BruteForce, CliError> {
    match std::env::var(ENUM_CAP_VAR) {
        Ok(s) => s
            .trim()
            .parse::<u128>()
            .map(BruteForce::with_cap)
            .map_err(|e| CliError::Input(format!("{ENUM_CAP_VAR}={s:?}: {e}"))),
        Err(_) => Ok(BruteForce::default()),
    }
}

pub fn simulate(
    path: &Path,
    brute_force: bool,
    closed_loop: Option<(f64, usize, u64)>,
) -> Result<Output, CliError> {
    let mut doc = read_json(path)?;
    let file_policy = doc.as_object_mut().and_then(|m| m.remove("policy"));
    let game: RegulationGame = parse(path, doc)?;
    let solver = enumeration_cap()?;

    let (policy, source) = match file_policy {
        Some(p) if !brute_force => (parse::<Policy>(path, p)?, "file"),
        _ => {
            let (p, _) = solver.solve(&game)?;
            (p, "brute-force")
        }
    };
    let bound = bound_report(&game, &policy)?;
    let mut results = to_value(&bound);
    let obj = results.as_object_mut().expect("report is an object");
    obj.insert("policy".into(), to_value(&policy));
    obj.insert("policy_source".into(), json!(source));
    obj.insert(
        "policy_count".into(),
        json!(u64::try_from(game.policy_count()).unwrap_or(u64::MAX)),
    );

    let mut seeds = vec![];
    if let Some((coupling, steps, seed)) = closed_loop {
        let trace = closed_loop_run(&game, &policy, coupling, steps, seed, None)?;
        seeds.push(seed);
        obj.insert(
            "closed_loop".into(),
            json!({
                "coupling": coupling,
                "steps": steps,
                "seed": seed,
                "rng": trace.rng,
                "outcome_variety": trace.outcome_variety,
                "distribution": trace.distribution,
            }),
        );
    }
    let (coupling, steps, seed) = match closed_loop {
        Some((c, n, s)) => (json!(c), json!(n), json!(s)),
        None => (Value::Null, Value::Null, Value::Null),
    };
    Ok(Output {
        inputs: vec![path.to_path_buf()],
        parameters: json!({
            "brute_force": brute_force,
            "enumeration_cap": u64::try_from(solver.cap).unwrap_or(u64::MAX),
            "coupling": coupling,
            "steps": steps,
            "seed": seed,
        }),
        seeds,
        results,
        text: None,
    })
}

/// Every file a run read touches: its manifest, its matrices, and the
/// baseline run's manifest and matrices for the referenced epoch.
fn run_inputs(manifest: &Path) -> Result<Vec<PathBuf>, CliError> {
    let m = read_manifest(manifest)?;
    let root = manifest.parent().unwrap_or(Path::new("."));
    let mut out = vec![manifest.to_path_buf()];
    out.extend(
        m.epochs
            .iter()
            .flat_map(|e| e.files.iter().map(|f| root.join(f))),
    );
    if let Some(b) = &m.baseline {
        if b.run_id != m.run_id {
            let base = manifest_path(root.parent().unwrap_or(Path::new("..")), &b.run_id);
            let bm = read_manifest(&base)?;
            let broot = base.parent().unwrap_or(Path::new("."));
            out.push(base.clone());
            if let Some(e) = bm.epochs.iter().find(|e| e.index == b.epoch) {
                out.extend(e.files.iter().map(|f| broot.join(f)));
            }
        }
    }
    Ok(out)
}

fn written_files(manifest: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let root = manifest.parent().unwrap_or(Path::new("."));
    let m = read_manifest(manifest)?;
    let mut files = BTreeMap::new();
    let mut add = |rel: &str| -> Result<(), CliError> {
        let d = report::digest_file(&root.join(rel))?;
        files.insert(rel.to_owned(), d.sha256);
        Ok(())
    };
    add(variety_core::io::MANIFEST_NAME)?;
    for e in &m.epochs {
        for f in &e.files {
            add(f)?;
        }
    }
    Ok(files)
}

pub fn train_toy(path: &Path, out: &Path, force: bool) -> Result<Output, CliError> {
    let text = read_text(path)?;
    let config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let shift = config.run()?;
    let config_digest = report::sha256_hex(text.as_bytes());

    let mut runs = Vec::new();
    let mut paths = Vec::new();
    for (task, t) in [("a", &shift.run_a), ("b", &shift.run_b)] {
        let provenance = BTreeMap::from([
            (
                "tool".to_string(),
                format!("{} {}", report::TOOL, env!("CARGO_PKG_VERSION")),
            ),
            ("rng".to_string(), RNG_ALGORITHM.to_string()),
            ("experiment_sha256".to_string(), config_digest.clone()),
            ("task".to_string(), task.to_string()),
            ("final_accuracy".to_string(), t.final_accuracy.to_string()),
            (
                "final_loss".to_string(),
                t.losses.last().map_or_else(String::new, f64::to_string),
            ),
        ]);
        let opts = WriteOptions { force, provenance };
        write_run(&t.run, out, &opts)?;
        let manifest = manifest_path(out, &t.run.run_id);
        runs.push(json!({
            "run_id": t.run.run_id,
            "manifest": manifest.display().to_string(),
            "baseline": t.run.baseline.as_ref().map(|b| json!({"run_id": b.run_id, "epoch": b.epoch})),
            "final_accuracy": t.final_accuracy,
            "losses": t.losses,
            "files": written_files(&manifest)?,
        }));
        paths.push(manifest.display().to_string());
    }
    Ok(Output {
        inputs: vec![path.to_path_buf()],
        parameters: json!({ "out": out.display().to_string(), "force": force }),
        seeds: vec![
            config.task_a.mlp.seed,
            config.task_a.data.seed,
            config.task_b.mlp.seed,
            config.task_b.data.seed,
        ],
        results: json!({ "runs": runs }),
        text: Some(paths.join("\n")),
    })
}

pub fn profile(
    manifest: &Path,
    threshold: Option<f64>,
    csv: Option<&Path>,
) -> Result<Output, CliError> {
    let run = read_run(manifest)?;
    let p = entropy_profile(&run)?;
    if p.is_degenerate() {
        let cells: Vec<String> = p
            .degenerate
            .iter()
            .map(|c| format!("{}@{}", c.layer, c.epoch))
            .collect();
        eprintln!(
            "warning: {} all-zero matrices reported as 0 bits: {}",
            cells.len(),
            cells.join(", ")
        );
    }
    let (threshold, labels) = if p.epochs.len() >= 2 {
        let t = match threshold {
            Some(t) => t,
            None => median_range_threshold(&p)?,
        };
        (Some(t), Some(classify_layers(&p, t)?))
    } else {
        eprintln!("warning: single-epoch run, layers are not labelled");
        (threshold, None)
    };
    if let Some(path) = csv {
        let f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        p.write_csv(std::io::BufWriter::new(f))
            .map_err(|e| CliError::io(path, e))?;
    }
    Ok(Output {
        inputs: run_inputs(manifest)?,
        parameters: json!({
            "threshold": threshold,
            "csv": csv.map(|c| c.display().to_string()),
        }),
        seeds: vec![],
        results: json!({ "profile": p, "threshold": threshold, "labels": labels }),
        text: None,
    })
}

pub fn classify(input: &Path, delta: f64, gamma: f64, bins: usize) -> Result<Output, CliError> {
    let doc = read_json(input)?;
    let is_manifest = doc.get("format_version").is_some();
    let (hist, extra, inputs) = if is_manifest {
        let run = read_run(input)?;
        let p = entropy_profile(&run)?;
        let threshold = median_range_threshold(&p)?;
        let labels = classify_layers(&p, threshold)?;
        let (core, periphery) = role_series(&p, &labels)?;
        let h = quantize_joint(&core, &periphery, bins)?;
        let extra = json!({
            "threshold": threshold,
            "labels": labels,
            "histogram": {
                "counts": h.counts(),
                "core_edges": h.core_edges(),
                "periphery_edges": h.periphery_edges(),
            },
        });
        (h, Some(extra), run_inputs(input)?)
    } else {
        let h: JointHistogram = parse(input, doc)?;
        (h, None, vec![input.to_path_buf()])
    };
    let verdict = classify_dominance(&hist, delta, gamma)?;
    let mut results = to_value(&verdict);
    if let (Some(obj), Some(Value::Object(extra))) = (results.as_object_mut(), extra) {
        obj.extend(extra);
    }
    let finite = |v: f64| v.is_finite().then_some(v);
    Ok(Output {
        inputs,
        parameters: json!({
            "delta": finite(delta),
            "gamma": finite(gamma),
            "bins": is_manifest.then_some(bins),
        }),
        seeds: vec![],
        results,
        text: None,
    })
}
