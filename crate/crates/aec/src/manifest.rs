//! CSV dataset manifests with the fixed header
//! `path,label,domain,split,condition`.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HEADER: [&str; 5] = ["path", "label", "domain", "split", "condition"];

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    ParseError { line: u64, message: String },
    #[error("line {line}: file not found: {path}")]
    MissingFile { line: u64, path: PathBuf },
    #[error("manifest has no entries")]
    EmptyManifest,
    #[error("line {line}: {path} is listed for both target train and target eval")]
    TrainEvalOverlap { line: u64, path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Source,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: String,
    pub domain: Domain,
    pub split: Split,
    pub condition: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

fn parse_domain(s: &str) -> Option<Domain> {
    match s {
        "source" => Some(Domain::Source),
        "target" => Some(Domain::Target),
        _ => None,
    }
}

fn parse_split(s: &str) -> Option<Split> {
    match s {
        "train" => Some(Split::Train),
        "eval" => Some(Split::Eval),
        _ => None,
    }
}

impl Manifest {
    /// Parses CSV text. Relative paths are resolved against `base`; when
    /// `check_files` is set, every path must exist.
    pub fn parse(text: &str, base: &Path, check_files: bool) -> Result<Self, ManifestError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut records = rdr.records();
        let header = match records.next() {
            None => return Err(ManifestError::EmptyManifest),
            Some(r) => r.map_err(|e| ManifestError::ParseError { line: 1, message: e.to_string() })?,
        };
        if header.iter().ne(HEADER.iter().copied()) {
            return Err(ManifestError::ParseError { line: 1, message: format!("expected header {}", HEADER.join(",")) });
        }
        let mut entries = Vec::new();
        let mut lines = Vec::new();
        for rec in records {
            let rec = rec.map_err(|e| ManifestError::ParseError {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.iter().all(str::is_empty) {
                continue;
            }
            let bad = |message: String| ManifestError::ParseError { line, message };
            if rec.len() != 5 {
                return Err(bad(format!("expected 5 fields, found {}", rec.len())));
            }
            let (path, label) = (&rec[0], &rec[1]);
            if path.is_empty() {
                return Err(bad("empty path".into()));
            }
            if label.is_empty() {
                return Err(bad("empty label".into()));
            }
            let domain = parse_domain(&rec[2]).ok_or_else(|| bad(format!("unknown domain {:?}", &rec[2])))?;
            let split = parse_split(&rec[3]).ok_or_else(|| bad(format!("unknown split {:?}", &rec[3])))?;
            let condition = if rec[4].is_empty() { "clean".to_string() } else { rec[4].to_string() };
            let path = base.join(path);
            if check_files && !path.is_file() {
                return Err(ManifestError::MissingFile { line, path });
            }
            entries.push(ManifestEntry { path, label: label.to_string(), domain, split, condition });
            lines.push(line);
        }
        if entries.is_empty() {
            return Err(ManifestError::EmptyManifest);
        }
        let m = Self { entries };
        m.check_disjoint(&lines)?;
        Ok(m)
    }

    fn check_disjoint(&self, lines: &[u64]) -> Result<(), ManifestError> {
        let mut train: HashMap<PathBuf, ()> = HashMap::new();
        for e in self.select(Domain::Target, Split::Train) {
            train.insert(canonical(&e.path), ());
        }
        for (e, &line) in self.entries.iter().zip(lines) {
            if e.domain == Domain::Target && e.split == Split::Eval && train.contains_key(&canonical(&e.path)) {
                return Err(ManifestError::TrainEvalOverlap { line, path: e.path.clone() });
            }
        }
        Ok(())
    }

    pub fn select(&self, domain: Domain, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.domain == domain && e.split == split)
    }

    /// Sorted distinct labels of a domain.
    pub fn classes(&self, domain: Domain) -> Vec<String> {
        let set: BTreeSet<&str> = self.entries.iter().filter(|e| e.domain == domain).map(|e| e.label.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Condition tags of target eval entries in order of first appearance.
    pub fn conditions(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in self.select(Domain::Target, Split::Eval) {
            if !out.contains(&e.condition) {
                out.push(e.condition.clone());
            }
        }
        out
    }

    /// Writes CSV with paths relative to `base` when they lie under it and
    /// absolute otherwise. Relative entry paths are taken against the
    /// working directory.
    pub fn to_csv(&self, base: &Path) -> String {
        let abs = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
        let base = abs(base);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(HEADER).expect("in-memory write");
        for e in &self.entries {
            let full = abs(&e.path);
            let p = full.strip_prefix(&base).unwrap_or(&full);
            let domain = match e.domain {
                Domain::Source => "source",
                Domain::Target => "target",
            };
            let split = match e.split {
                Split::Train => "train",
                Split::Eval => "eval",
            };
            w.write_record([&*p.to_string_lossy(), &e.label, domain, split, &e.condition]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

fn canonical(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

pub fn load_manifest(path: &Path) -> Result<Manifest, ManifestError> {
    let text = fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.into(), source })?;
    Manifest::parse(&text, path.parent().unwrap_or(Path::new(".")), true)
}

pub fn save_manifest(path: &Path, m: &Manifest) -> Result<(), ManifestError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let io = |source| ManifestError::Io { path: path.into(), source };
    fs::create_dir_all(base).map_err(io)?;
    fs::write(path, m.to_csv(base)).map_err(io)
}
