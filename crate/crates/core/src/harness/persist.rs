//! Plain-text artifacts: dataset CSVs, generator sidecars and checkpoints.
//!
//! Checkpoints are `key=value` header lines, a `---` separator, then one
//! whitespace-separated numeric row per line. Floats use Rust's shortest
//! round-trip formatting, so save/load is bit-exact. Every line, including
//! the last, ends with a newline.
//!
//! | kind      | header keys                              | rows                          |
//! |-----------|------------------------------------------|-------------------------------|
//! | `moe`     | `n_experts`, `k`, `d`, `link`, `sigma`   | W_g (E rows), W_noise (E), θᵢ (E) |
//! | `blr`     | `d`, `sigma`                             | μ (1 row), Σ (d rows)         |
//! | `samples` | `provenance`, `n_samples`, `d`, `seed`   | one θ per row                 |

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::bayes::{GaussianPosterior, PosteriorSamples, Provenance};
use crate::datagen::{Dataset, GeneratorSpec, TaskKind};
use crate::error::{Error, Result};
use crate::models::{GlmParams, Link};
use crate::moe::{GatingParams, MoeModel};
use crate::numerics::Matrix;

const SEPARATOR: &str = "---";

/// Anything the CLI can train and reload.
#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Moe(MoeModel),
    Blr(GaussianPosterior),
    Samples(PosteriorSamples),
}

impl Checkpoint {
    pub fn kind(&self) -> &'static str {
        match self {
            Checkpoint::Moe(_) => "moe",
            Checkpoint::Blr(_) => "blr",
            Checkpoint::Samples(_) => "samples",
        }
    }
}

fn row(out: &mut String, values: &[f64]) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        write!(out, "{v}").unwrap();
    }
    out.push('\n');
}

pub fn checkpoint_to_string(ck: &Checkpoint) -> String {
    let mut s = format!("kind={}\n", ck.kind());
    match ck {
        Checkpoint::Moe(m) => {
            writeln!(s, "n_experts={}\nk={}\nd={}\nlink={}\nsigma={}", m.n_experts(), m.gating.k, m.dim(), m.link(), m.noise_std()).unwrap();
            s.push_str(SEPARATOR);
            s.push('\n');
            for mat in [&m.gating.w_gate, &m.gating.w_noise] {
                for r in mat.row_iter() {
                    row(&mut s, r);
                }
            }
            for e in &m.experts {
                row(&mut s, &e.theta);
            }
        }
        Checkpoint::Blr(p) => {
            writeln!(s, "d={}\nsigma={}", p.dim(), p.noise_std).unwrap();
            s.push_str(SEPARATOR);
            s.push('\n');
            row(&mut s, &p.mean);
            for r in p.cov.row_iter() {
                row(&mut s, r);
            }
        }
        Checkpoint::Samples(p) => {
            writeln!(s, "provenance={}\nn_samples={}\nd={}\nseed={}", p.provenance, p.len(), p.dim(), p.seed).unwrap();
            s.push_str(SEPARATOR);
            s.push('\n');
            for t in p.samples() {
                row(&mut s, t);
            }
        }
    }
    s
}

/// Header values with their line numbers, plus the numeric body.
struct Doc {
    header: HashMap<String, (usize, String)>,
    rows: Vec<(usize, Vec<f64>)>,
    next: usize,
    end_line: usize,
}

impl Doc {
    fn parse(text: &str) -> Result<Doc> {
        let mut header = HashMap::new();
        let mut rows = Vec::new();
        let mut in_body = false;
        let mut last = 0;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            last = line_no;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !in_body {
                if line == SEPARATOR {
                    in_body = true;
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(line_no, format!("expected key=value, got `{line}`")))?;
                let k = k.trim().to_string();
                if header.insert(k.clone(), (line_no, v.trim().to_string())).is_some() {
                    return Err(Error::parse(line_no, format!("duplicate key `{k}`")));
                }
            } else {
                let values = line
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|_| Error::parse(line_no, format!("bad number `{t}`"))))
                    .collect::<Result<Vec<_>>>()?;
                rows.push((line_no, values));
            }
        }
        if !in_body {
            return Err(Error::parse(last + 1, "missing `---` separator"));
        }
        // every line is newline-terminated, so a cut inside the last row is detectable
        if !text.is_empty() && !text.ends_with('\n') {
            return Err(Error::parse(last, "last line is not terminated; file truncated"));
        }
        Ok(Doc { header, rows, next: 0, end_line: last })
    }

    fn only_keys(&self, allowed: &[&str]) -> Result<()> {
        let mut unknown: Vec<&String> = self.header.keys().filter(|k| !allowed.contains(&k.as_str())).collect();
        unknown.sort();
        match unknown.first() {
            Some(k) => Err(Error::UnknownKey((*k).clone())),
            None => Ok(()),
        }
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let (line, v) = self.header.get(key).ok_or_else(|| Error::parse(self.end_line + 1, format!("missing header key `{key}`")))?;
        v.parse().map_err(|_| Error::parse(*line, format!("bad value `{v}` for {key}")))
    }

    fn take_row(&mut self, width: usize) -> Result<Vec<f64>> {
        let (line, values) = self
            .rows
            .get(self.next)
            .cloned()
            .ok_or_else(|| Error::parse(self.end_line + 1, "file truncated: expected more rows"))?;
        if values.len() != width {
            return Err(Error::parse(line, format!("expected {width} values, got {}", values.len())));
        }
        self.next += 1;
        Ok(values)
    }

    fn take_matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.take_row(cols)?);
        }
        Matrix::from_vec(rows, cols, data)
    }

    fn finish(&self) -> Result<()> {
        match self.rows.get(self.next) {
            Some((line, _)) => Err(Error::parse(*line, "unexpected trailing row")),
            None => Ok(()),
        }
    }
}

pub fn checkpoint_from_str(text: &str) -> Result<Checkpoint> {
    let mut doc = Doc::parse(text)?;
    let kind: String = doc.get("kind")?;
    let ck = match kind.as_str() {
        "moe" => {
            doc.only_keys(&["kind", "n_experts", "k", "d", "link", "sigma"])?;
            let (e, k, d): (usize, usize, usize) = (doc.get("n_experts")?, doc.get("k")?, doc.get("d")?);
            let link: Link = doc.get("link")?;
            let sigma: f64 = doc.get("sigma")?;
            let w_gate = doc.take_matrix(e, d)?;
            let w_noise = doc.take_matrix(e, d)?;
            let experts = (0..e)
                .map(|_| Ok(GlmParams { theta: doc.take_row(d)?, link, noise_std: sigma }))
                .collect::<Result<Vec<_>>>()?;
            Checkpoint::Moe(MoeModel::new(GatingParams::new(w_gate, w_noise, k)?, experts)?)
        }
        "blr" => {
            doc.only_keys(&["kind", "d", "sigma"])?;
            let d: usize = doc.get("d")?;
            let sigma: f64 = doc.get("sigma")?;
            let mean = doc.take_row(d)?;
            let cov = doc.take_matrix(d, d)?;
            Checkpoint::Blr(GaussianPosterior::new(mean, cov, sigma)?)
        }
        "samples" => {
            doc.only_keys(&["kind", "provenance", "n_samples", "d", "seed"])?;
            let provenance: Provenance = doc.get("provenance")?;
            let (n, d): (usize, usize) = (doc.get("n_samples")?, doc.get("d")?);
            let seed: u64 = doc.get("seed")?;
            let samples = (0..n).map(|_| doc.take_row(d)).collect::<Result<Vec<_>>>()?;
            Checkpoint::Samples(PosteriorSamples::new(samples, provenance, seed)?)
        }
        other => return Err(Error::parse(doc.header["kind"].0, format!("unknown checkpoint kind `{other}`"))),
    };
    doc.finish()?;
    Ok(ck)
}

pub fn save_model(path: &Path, ck: &Checkpoint) -> Result<()> {
    std::fs::write(path, checkpoint_to_string(ck))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Checkpoint> {
    checkpoint_from_str(&std::fs::read_to_string(path)?)
}

/// Target column name; also records the task kind.
fn target_column(kind: TaskKind) -> &'static str {
    match kind {
        TaskKind::Regression => "y",
        TaskKind::Classification => "label",
    }
}

/// CSV with columns `x0..x{d-1}` and `y` (regression) or `label`.
pub fn write_dataset<W: Write>(out: W, ds: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..ds.dim()).map(|j| format!("x{j}")).collect();
    header.push(target_column(ds.kind()).to_string());
    w.write_record(&header)?;
    for (x, y) in ds.iter() {
        w.write_record(x.iter().chain(std::iter::once(&y)).map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let d = header.len().saturating_sub(1);
    let kind = match header.iter().last() {
        Some("y") => TaskKind::Regression,
        Some("label") => TaskKind::Classification,
        _ => return Err(Error::parse(1, "last column must be `y` or `label`")),
    };
    if d == 0 || header.iter().take(d).enumerate().any(|(j, h)| h != format!("x{j}")) {
        return Err(Error::parse(1, "feature columns must be x0, x1, ..."));
    }
    let mut data = Vec::new();
    let mut targets = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != d + 1 {
            return Err(Error::parse(line, format!("expected {} fields, got {}", d + 1, rec.len())));
        }
        for (j, f) in rec.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| Error::parse(line, format!("bad number `{f}`")))?;
            if j < d {
                data.push(v);
            } else {
                targets.push(v);
            }
        }
    }
    Dataset::new(Matrix::from_vec(targets.len(), d, data)?, targets, kind)
}

pub fn save_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    write_dataset(std::fs::File::create(path)?, ds)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset(std::fs::File::open(path)?)
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// `key=value` sidecar describing the generator of a dataset pair.
pub fn spec_to_string(spec: &GeneratorSpec) -> String {
    format!(
        "kind={}\ndegree={}\ncoeffs={}\nx_range={},{}\nnoise_std={}\nmeans={}\nstds={}\nn_train={}\nn_test={}\nseed={}\n",
        spec.kind,
        spec.degree,
        list(&spec.coeffs),
        spec.x_range.0,
        spec.x_range.1,
        spec.noise_std,
        list(&spec.means),
        list(&spec.stds),
        spec.n_train,
        spec.n_test,
        spec.seed
    )
}

pub fn spec_from_str(text: &str) -> Result<GeneratorSpec> {
    let doc = Doc::parse(&format!("{text}\n{SEPARATOR}\n"))?;
    doc.only_keys(&["kind", "degree", "coeffs", "x_range", "noise_std", "means", "stds", "n_train", "n_test", "seed"])?;
    let floats = |key: &str| -> Result<Vec<f64>> {
        let raw: String = doc.get(key)?;
        let line = doc.header[key].0;
        raw.split(',').map(|t| t.trim().parse().map_err(|_| Error::parse(line, format!("bad number `{t}` in {key}")))).collect()
    };
    let range = floats("x_range")?;
    if range.len() != 2 {
        return Err(Error::parse(doc.header["x_range"].0, "x_range needs two values"));
    }
    Ok(GeneratorSpec {
        kind: doc.get("kind")?,
        degree: doc.get("degree")?,
        coeffs: floats("coeffs")?,
        x_range: (range[0], range[1]),
        noise_std: doc.get("noise_std")?,
        means: floats("means")?,
        stds: floats("stds")?,
        n_train: doc.get("n_train")?,
        n_test: doc.get("n_test")?,
        seed: doc.get("seed")?,
    })
}

pub fn save_spec(path: &Path, spec: &GeneratorSpec) -> Result<()> {
    std::fs::write(path, spec_to_string(spec))?;
    Ok(())
}

pub fn load_spec(path: &Path) -> Result<GeneratorSpec> {
    spec_from_str(&std::fs::read_to_string(path)?)
}
