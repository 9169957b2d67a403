//! Dataset file formats and report parsing.
//!
//! A dataset on disk is either:
//!
//! * a TOML manifest declaring `n_s`, `n_d`, `l_d` and pointing at a static
//!   CSV (header row, one sample per row, last column `label`) plus either
//!   one CSV per dynamic feature or a single long-form CSV with columns
//!   `sample_id,feature_id,t,value`; or
//! * a UCR-style univariate text file (`label,v1,...,v_l` per line), in
//!   which case the spatialized sequence doubles as the static feature
//!   vector.
//!
//! All files written here go through a temp-file-plus-rename so partial
//! writes never clobber existing artifacts.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{spatialize, ClassLabel, Dataset, Sample, StaticSource};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    #[serde(default)]
    name: Option<String>,
    n_s: usize,
    n_d: usize,
    l_d: usize,
    #[serde(default)]
    pos_label: Option<String>,
    #[serde(rename = "static")]
    static_file: String,
    #[serde(default)]
    dynamic: Option<Vec<String>>,
    #[serde(default)]
    dynamic_long: Option<String>,
    #[serde(default)]
    static_is_spatialized: bool,
}

fn load_error(
    file: &Path,
    row: usize,
    column: impl Into<String>,
    message: impl Into<String>,
) -> Error {
    Error::Load {
        file: file.display().to_string(),
        row,
        column: column.into(),
        message: message.into(),
    }
}

fn parse_cell(file: &Path, row: usize, column: &str, raw: &str) -> Result<f64> {
    let value: f64 = raw
        .trim()
        .parse()
        .map_err(|_| load_error(file, row, column, format!("non-numeric cell {raw:?}")))?;
    if !value.is_finite() {
        return Err(load_error(file, row, column, "non-finite value"));
    }
    Ok(value)
}

/// Default positive-class designation when the manifest does not pick one:
/// the lexicographically greatest label name.
fn assign_labels(
    raw: &[String],
    pos_label: Option<&str>,
    file: &Path,
) -> Result<(Vec<ClassLabel>, String, String)> {
    let distinct: BTreeSet<&str> = raw.iter().map(|s| s.as_str()).collect();
    if distinct.len() != 2 {
        return Err(load_error(
            file,
            0,
            "label",
            format!(
                "expected exactly 2 distinct labels, found {}",
                distinct.len()
            ),
        ));
    }
    let names: Vec<&str> = distinct.into_iter().collect();
    let pos = match pos_label {
        Some(p) => {
            if !names.contains(&p) {
                return Err(load_error(
                    file,
                    0,
                    "label",
                    format!("pos_label {p:?} does not occur in the data"),
                ));
            }
            p.to_string()
        }
        None => names[1].to_string(),
    };
    let neg = names
        .iter()
        .find(|&&n| n != pos)
        .expect("two distinct labels")
        .to_string();
    let labels = raw
        .iter()
        .map(|s| {
            if *s == pos {
                ClassLabel::Pos
            } else {
                ClassLabel::Neg
            }
        })
        .collect();
    Ok((labels, pos, neg))
}

fn read_static_csv(path: &Path, n_s: usize) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| load_error(path, 0, "-", e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| load_error(path, 0, "-", e.to_string()))?
        .clone();
    if headers.len() != n_s + 1 {
        return Err(load_error(
            path,
            0,
            "-",
            format!(
                "expected {} columns (features + label), found {}",
                n_s + 1,
                headers.len()
            ),
        ));
    }
    if headers.iter().next_back() != Some("label") {
        return Err(load_error(path, 0, "-", "last column must be `label`"));
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| load_error(path, i + 1, "-", e.to_string()))?;
        let mut row = Vec::with_capacity(n_s);
        for j in 0..n_s {
            row.push(parse_cell(path, i + 1, &headers[j], &record[j])?);
        }
        rows.push(row);
        labels.push(record[n_s].trim().to_string());
    }
    if rows.is_empty() {
        return Err(load_error(path, 0, "-", "no samples"));
    }
    Ok((rows, labels))
}

fn read_dynamic_feature_csv(path: &Path, l_d: usize, n_rows: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| load_error(path, 0, "-", e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| load_error(path, 0, "-", e.to_string()))?
        .clone();
    if headers.len() != l_d {
        return Err(load_error(
            path,
            0,
            "-",
            format!(
                "declared l_d = {l_d} but file has {} time columns",
                headers.len()
            ),
        ));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| load_error(path, i + 1, "-", e.to_string()))?;
        let mut row = Vec::with_capacity(l_d);
        for t in 0..l_d {
            row.push(parse_cell(path, i + 1, &headers[t], &record[t])?);
        }
        rows.push(row);
    }
    if rows.len() != n_rows {
        return Err(load_error(
            path,
            rows.len(),
            "-",
            format!("expected {n_rows} sample rows, found {}", rows.len()),
        ));
    }
    Ok(rows)
}

fn read_dynamic_long_csv(
    path: &Path,
    n_d: usize,
    l_d: usize,
    n_rows: usize,
) -> Result<Vec<Array2<f64>>> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| load_error(path, 0, "-", e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| load_error(path, 0, "-", e.to_string()))?
        .clone();
    let expect = ["sample_id", "feature_id", "t", "value"];
    if headers.iter().collect::<Vec<_>>() != expect {
        return Err(load_error(
            path,
            0,
            "-",
            format!("long-form header must be {expect:?}"),
        ));
    }
    let mut matrices = vec![Array2::from_elem((n_d, l_d), f64::NAN); n_rows];
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| load_error(path, i + 1, "-", e.to_string()))?;
        let idx = |j: usize, name: &str| -> Result<usize> {
            record[j]
                .trim()
                .parse()
                .map_err(|_| load_error(path, i + 1, name, format!("bad index {:?}", &record[j])))
        };
        let sample = idx(0, "sample_id")?;
        let feature = idx(1, "feature_id")?;
        let t = idx(2, "t")?;
        if sample >= n_rows || feature >= n_d || t >= l_d {
            return Err(load_error(
                path,
                i + 1,
                "sample_id",
                format!("index out of range: sample {sample}, feature {feature}, t {t}"),
            ));
        }
        matrices[sample][(feature, t)] = parse_cell(path, i + 1, "value", &record[3])?;
    }
    for (s, m) in matrices.iter().enumerate() {
        if m.iter().any(|v| v.is_nan()) {
            return Err(load_error(
                path,
                0,
                "sample_id",
                format!("missing dynamic values for sample {s}"),
            ));
        }
    }
    Ok(matrices)
}

fn load_manifest_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let manifest: Manifest =
        toml::from_str(&text).map_err(|e| load_error(path, 0, "-", e.to_string()))?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));

    let static_path = dir.join(&manifest.static_file);
    let (static_rows, raw_labels) = read_static_csv(&static_path, manifest.n_s)?;
    let n_rows = static_rows.len();

    let dynamics: Vec<Array2<f64>> = match (&manifest.dynamic, &manifest.dynamic_long) {
        (Some(files), None) => {
            if files.len() != manifest.n_d {
                return Err(load_error(
                    path,
                    0,
                    "dynamic",
                    format!(
                        "declared n_d = {} but {} dynamic files listed",
                        manifest.n_d,
                        files.len()
                    ),
                ));
            }
            let mut per_feature = Vec::with_capacity(files.len());
            for f in files {
                per_feature.push(read_dynamic_feature_csv(
                    &dir.join(f),
                    manifest.l_d,
                    n_rows,
                )?);
            }
            (0..n_rows)
                .map(|s| {
                    Array2::from_shape_fn((manifest.n_d, manifest.l_d), |(c, t)| {
                        per_feature[c][s][t]
                    })
                })
                .collect()
        }
        (None, Some(long)) => {
            read_dynamic_long_csv(&dir.join(long), manifest.n_d, manifest.l_d, n_rows)?
        }
        _ => {
            return Err(load_error(
                path,
                0,
                "dynamic",
                "manifest must set exactly one of `dynamic` or `dynamic_long`",
            ))
        }
    };

    let (labels, pos, neg) = assign_labels(&raw_labels, manifest.pos_label.as_deref(), path)?;
    let samples: Vec<Sample> = static_rows
        .into_iter()
        .zip(dynamics)
        .zip(labels)
        .map(|((statics, dynamics), label)| Sample {
            statics,
            dynamics,
            label,
        })
        .collect();
    let mut ds = Dataset::new(samples, manifest.n_s, manifest.n_d, manifest.l_d, pos, neg)?;
    if manifest.static_is_spatialized {
        verify_spatialized(&ds, path)?;
        ds = ds.with_static_source(StaticSource::SpatializedDynamic);
    }
    Ok(ds)
}

fn verify_spatialized(ds: &Dataset, path: &Path) -> Result<()> {
    if ds.n_s() != ds.n_d() * ds.l_d() {
        return Err(load_error(
            path,
            0,
            "static_is_spatialized",
            format!(
                "n_s = {} does not equal n_d * l_d = {}",
                ds.n_s(),
                ds.n_d() * ds.l_d()
            ),
        ));
    }
    for (i, s) in ds.samples().iter().enumerate() {
        let spat = spatialize(&s.dynamics)?;
        if spat != s.statics {
            return Err(load_error(
                path,
                i + 1,
                "static_is_spatialized",
                "static features differ from the spatialized dynamics",
            ));
        }
    }
    Ok(())
}

fn load_ucr_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut width: Option<usize> = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = if line.contains(',') {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        if tokens.len() < 3 {
            return Err(load_error(
                path,
                i + 1,
                "-",
                "need a label and at least two sequence values",
            ));
        }
        match width {
            None => width = Some(tokens.len()),
            Some(w) if w != tokens.len() => {
                return Err(load_error(
                    path,
                    i + 1,
                    "-",
                    format!("row has {} fields, previous rows had {w}", tokens.len()),
                ))
            }
            _ => {}
        }
        raw_labels.push(tokens[0].to_string());
        let mut row = Vec::with_capacity(tokens.len() - 1);
        for (j, tok) in tokens[1..].iter().enumerate() {
            row.push(parse_cell(path, i + 1, &format!("v{}", j + 1), tok)?);
        }
        values.push(row);
    }
    if values.is_empty() {
        return Err(load_error(path, 0, "-", "no samples"));
    }
    let l_d = values[0].len();
    let (labels, pos, neg) = assign_labels(&raw_labels, None, path)?;
    let samples: Vec<Sample> = values
        .into_iter()
        .zip(labels)
        .map(|(row, label)| Sample {
            statics: row.clone(),
            dynamics: Array2::from_shape_vec((1, l_d), row).expect("row length checked"),
            label,
        })
        .collect();
    Ok(Dataset::new(samples, l_d, 1, l_d, pos, neg)?
        .with_static_source(StaticSource::SpatializedDynamic))
}

/// Load a dataset from a manifest (`.toml`) or a UCR-style univariate file
/// (anything else).
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "toml") {
        load_manifest_dataset(path)
    } else {
        load_ucr_dataset(path)
    }
}

/// Write `contents` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp{}",
        path.extension()
            .map(|e| e.to_string_lossy().to_string())
            .unwrap_or_default(),
        std::process::id()
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Save `dataset` under `dir` as `<name>.toml` plus its CSV files; values
/// are formatted with shortest round-trip precision, so a reload is
/// bit-identical. Returns the manifest path.
pub fn save_dataset(dataset: &Dataset, dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;

    let static_file = format!("{name}_static.csv");
    let mut static_csv = String::new();
    for j in 0..dataset.n_s() {
        static_csv.push_str(&format!("f{j},"));
    }
    static_csv.push_str("label\n");
    for s in dataset.samples() {
        for v in &s.statics {
            static_csv.push_str(&format!("{v},"));
        }
        static_csv.push_str(dataset.label_name(s.label));
        static_csv.push('\n');
    }
    write_atomic(&dir.join(&static_file), &static_csv)?;

    let mut dynamic_files = Vec::with_capacity(dataset.n_d());
    for c in 0..dataset.n_d() {
        let file = format!("{name}_dyn_{c:03}.csv");
        let mut csv = (0..dataset.l_d())
            .map(|t| format!("t{t}"))
            .collect::<Vec<_>>()
            .join(",");
        csv.push('\n');
        for s in dataset.samples() {
            let row = (0..dataset.l_d())
                .map(|t| format!("{}", s.dynamics[(c, t)]))
                .collect::<Vec<_>>()
                .join(",");
            csv.push_str(&row);
            csv.push('\n');
        }
        write_atomic(&dir.join(&file), &csv)?;
        dynamic_files.push(file);
    }

    let manifest = Manifest {
        name: Some(name.to_string()),
        n_s: dataset.n_s(),
        n_d: dataset.n_d(),
        l_d: dataset.l_d(),
        pos_label: Some(dataset.pos_name().to_string()),
        static_file,
        dynamic: Some(dynamic_files),
        dynamic_long: None,
        static_is_spatialized: dataset.static_source() == StaticSource::SpatializedDynamic,
    };
    let manifest_path = dir.join(format!("{name}.toml"));
    let text =
        toml::to_string_pretty(&manifest).map_err(|e| Error::Serialization(e.to_string()))?;
    write_atomic(&manifest_path, &text)?;
    Ok(manifest_path)
}

/// One parsed row of a reports CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub id: usize,
    pub name: String,
    pub accuracy: f64,
    pub n_folds: usize,
    pub seed: u64,
    pub wall_time_s: f64,
}

/// Parse a reports CSV produced by the pipeline
/// (`id,name,accuracy,n_folds,seed,wall_time_s`).
pub fn parse_reports_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "id,name,accuracy,n_folds,seed,wall_time_s" {
        return Err(Error::Serialization(format!(
            "unexpected reports header {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Serialization(format!(
                "reports row {} has {} fields",
                i + 1,
                fields.len()
            )));
        }
        let parse_err =
            |what: &str| Error::Serialization(format!("reports row {}: bad {what}", i + 1));
        rows.push(ReportRow {
            id: fields[0].parse().map_err(|_| parse_err("id"))?,
            name: fields[1].to_string(),
            accuracy: fields[2].parse().map_err(|_| parse_err("accuracy"))?,
            n_folds: fields[3].parse().map_err(|_| parse_err("n_folds"))?,
            seed: fields[4].parse().map_err(|_| parse_err("seed"))?,
            wall_time_s: fields[5].parse().map_err(|_| parse_err("wall_time_s"))?,
        });
    }
    Ok(rows)
}

/// Render parsed report rows back to CSV with the fixed decimal formatting
/// (6 decimal digits for accuracy, 3 for wall time).
pub fn reports_rows_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("id,name,accuracy,n_folds,seed,wall_time_s\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.6},{},{},{:.3}\n",
            r.id, r.name, r.accuracy, r.n_folds, r.seed, r.wall_time_s
        ));
    }
    out
}

/// Human-readable dataset statistics: dimensions, class balance, and
/// per-feature summaries.
pub fn dataset_summary(ds: &Dataset, name: &str) -> String {
    let (pos, neg) = ds.class_counts();
    let mut out = format!(
        "dataset: {name}\nsamples: {} ({} {} / {} {})\nn_s: {}  n_d: {}  l_d: {}\nstatic source: {}\n",
        ds.len(),
        pos,
        ds.pos_name(),
        neg,
        ds.neg_name(),
        ds.n_s(),
        ds.n_d(),
        ds.l_d(),
        match ds.static_source() {
            StaticSource::Independent => "independent",
            StaticSource::SpatializedDynamic => "spatialized dynamics",
        },
    );
    let summarize = |values: &mut dyn Iterator<Item = f64>| -> (f64, f64, f64, f64) {
        let mut n = 0.0;
        let (mut sum, mut sq) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            n += 1.0;
            sum += v;
            sq += v * v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let mean = sum / n;
        ((sq / n - mean * mean).max(0.0).sqrt(), mean, lo, hi)
    };
    out.push_str("static features (mean/std/min/max):\n");
    for j in 0..ds.n_s().min(20) {
        let (std, mean, lo, hi) = summarize(&mut ds.samples().iter().map(|s| s.statics[j]));
        out.push_str(&format!(
            "  f{j}: {mean:.4} / {std:.4} / {lo:.4} / {hi:.4}\n"
        ));
    }
    if ds.n_s() > 20 {
        out.push_str(&format!("  ... {} more\n", ds.n_s() - 20));
    }
    out.push_str("dynamic channels (mean/std/min/max, pooled over time):\n");
    for c in 0..ds.n_d().min(20) {
        let (std, mean, lo, hi) =
            summarize(&mut ds.samples().iter().flat_map(|s| s.dynamics.row(c).to_vec()));
        out.push_str(&format!(
            "  d{c}: {mean:.4} / {std:.4} / {lo:.4} / {hi:.4}\n"
        ));
    }
    if ds.n_d() > 20 {
        out.push_str(&format!("  ... {} more\n", ds.n_d() - 20));
    }
    out
}
