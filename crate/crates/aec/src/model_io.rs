//! Binary artifact files.
//!
//! Layout: magic `AECF`, format version (u32 LE), header length (u32 LE), a
//! UTF-8 JSON header describing the artifact and its parameter blocks, the
//! blocks themselves as little-endian f64 in row-major order, and a CRC32 of
//! everything before it. Every float lives in a block, never in the JSON, so
//! a save/load round trip is bit-exact.

use std::fs;
use std::path::{Path, PathBuf};

use aec_core::classifiers::{BinarySvm, ClassGmm, ClassifierModel, DnnClassifier, GmmModel, SvmModel};
use aec_core::frontend::{FeatureKind, FeatureMatrix, InputMode, NormStats, Provenance};
use aec_core::nn::{Activation, Dense, LayerSpec, Network};
use aec_core::transfer::{DnnFilter, FilterVariant, SourceModel};
use aec_core::transforms::{DctSpec, PcaModel, TransformModel};
use aec_core::{Fingerprint, Matrix};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::features::{FeatureItem, FeatureSet};
use crate::manifest::Split;

pub const MAGIC: &[u8; 4] = b"AECF";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad magic: not an artifact file")]
    BadMagic,
    #[error("format version {found} is not supported (this build reads {VERSION})")]
    VersionMismatch { found: u32 },
    #[error("checksum mismatch: file is truncated or corrupted")]
    ChecksumFail,
    #[error("malformed header: {0}")]
    Header(String),
    #[error("expected a {expected} artifact, found {found}")]
    WrongKind { expected: &'static str, found: String },
    #[error(transparent)]
    Core(#[from] aec_core::Error),
}

type Result<T> = std::result::Result<T, ModelIoError>;

fn header_err(e: impl std::fmt::Display) -> ModelIoError {
    ModelIoError::Header(e.to_string())
}

/// Provenance of an artifact: which run configuration and seed produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Stamp {
    pub config_fingerprint: Option<Fingerprint>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Network(Network),
    Source(SourceModel),
    Filter(DnnFilter),
    Norm(NormStats),
    Transform(TransformModel),
    Classifier(ClassifierModel),
    Features(FeatureSet),
}

impl Artifact {
    pub fn kind(&self) -> &'static str {
        match self {
            Artifact::Network(_) => "network",
            Artifact::Source(_) => "source_model",
            Artifact::Filter(_) => "filter",
            Artifact::Norm(_) => "norm_stats",
            Artifact::Transform(_) => "transform",
            Artifact::Classifier(_) => "classifier",
            Artifact::Features(_) => "features",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BlockMeta {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: String,
    dtype: String,
    config_fingerprint: Option<String>,
    seed: Option<u64>,
    meta: Value,
    blocks: Vec<BlockMeta>,
}

#[derive(Default)]
struct BlockWriter {
    blocks: Vec<BlockMeta>,
    data: Vec<f64>,
}

impl BlockWriter {
    fn put(&mut self, name: impl Into<String>, rows: usize, cols: usize, values: &[f64]) {
        debug_assert_eq!(rows * cols, values.len());
        self.blocks.push(BlockMeta { name: name.into(), rows, cols });
        self.data.extend_from_slice(values);
    }

    fn matrix(&mut self, name: impl Into<String>, m: &Matrix) {
        self.put(name, m.rows(), m.cols(), m.as_slice());
    }

    fn vector(&mut self, name: impl Into<String>, v: &[f64]) {
        self.put(name, 1, v.len(), v);
    }
}

struct BlockReader<'a> {
    blocks: std::vec::IntoIter<BlockMeta>,
    data: &'a [f64],
}

impl BlockReader<'_> {
    fn take(&mut self, name: &str) -> Result<(usize, usize, Vec<f64>)> {
        let b = self.blocks.next().ok_or_else(|| header_err(format!("missing block {name}")))?;
        if b.name != name {
            return Err(header_err(format!("expected block {name}, found {}", b.name)));
        }
        let n = b.rows * b.cols;
        if n > self.data.len() {
            return Err(header_err(format!("block {name} overruns the payload")));
        }
        let (head, tail) = self.data.split_at(n);
        self.data = tail;
        Ok((b.rows, b.cols, head.to_vec()))
    }

    fn matrix(&mut self, name: &str) -> Result<Matrix> {
        let (r, c, v) = self.take(name)?;
        Ok(Matrix::from_vec(r, c, v)?)
    }

    fn vector(&mut self, name: &str) -> Result<Vec<f64>> {
        Ok(self.take(name)?.2)
    }

    fn scalar(&mut self, name: &str) -> Result<f64> {
        match self.take(name)?.2[..] {
            [v] => Ok(v),
            _ => Err(header_err(format!("block {name} should hold one value"))),
        }
    }
}

fn fp_hex(fp: Option<Fingerprint>) -> Value {
    fp.map_or(Value::Null, |f| Value::String(f.to_hex()))
}

fn parse_fp(v: &Value) -> Result<Option<Fingerprint>> {
    match v {
        Value::Null => Ok(None),
        Value::String(s) => Fingerprint::from_hex(s).map(Some).ok_or_else(|| header_err(format!("bad fingerprint {s}"))),
        other => Err(header_err(format!("bad fingerprint {other}"))),
    }
}

fn field<'a>(meta: &'a Value, key: &str) -> Result<&'a Value> {
    meta.get(key).ok_or_else(|| header_err(format!("missing field {key}")))
}

fn from_field<T: for<'de> Deserialize<'de>>(meta: &Value, key: &str) -> Result<T> {
    serde_json::from_value(field(meta, key)?.clone()).map_err(|e| header_err(format!("{key}: {e}")))
}

#[derive(Serialize, Deserialize)]
struct LayerMeta {
    in_dim: usize,
    out_dim: usize,
    activation: String,
    frozen: bool,
}

fn put_network(w: &mut BlockWriter, prefix: &str, net: &Network) -> Value {
    let layers: Vec<LayerMeta> = net
        .layers
        .iter()
        .enumerate()
        .map(|(i, l)| {
            w.matrix(format!("{prefix}w{i}"), &l.weights);
            w.vector(format!("{prefix}b{i}"), &l.bias);
            LayerMeta {
                in_dim: l.spec.in_dim,
                out_dim: l.spec.out_dim,
                activation: l.spec.activation.name().into(),
                frozen: l.spec.frozen,
            }
        })
        .collect();
    json!({ "seed": net.seed, "layers": layers })
}

fn get_network(r: &mut BlockReader, prefix: &str, meta: &Value) -> Result<Network> {
    let seed: u64 = from_field(meta, "seed")?;
    let layers: Vec<LayerMeta> = from_field(meta, "layers")?;
    let mut out = Vec::with_capacity(layers.len());
    for (i, l) in layers.into_iter().enumerate() {
        let activation =
            Activation::from_name(&l.activation).ok_or_else(|| header_err(format!("unknown activation {}", l.activation)))?;
        let weights = r.matrix(&format!("{prefix}w{i}"))?;
        let bias = r.vector(&format!("{prefix}b{i}"))?;
        let spec = LayerSpec { in_dim: l.in_dim, out_dim: l.out_dim, activation, frozen: l.frozen };
        out.push(Dense { spec, weights, bias });
    }
    Ok(Network::from_layers(out, seed)?)
}

fn kind_name(k: FeatureKind) -> String {
    match k {
        FeatureKind::Frontend { mode, context } => format!("frontend:{}:{context}", mode.name()),
        FeatureKind::Filter => "filter".into(),
        FeatureKind::Reduced => "reduced".into(),
    }
}

fn parse_kind(s: &str) -> Result<FeatureKind> {
    match s {
        "filter" => Ok(FeatureKind::Filter),
        "reduced" => Ok(FeatureKind::Reduced),
        _ => {
            let mut it = s.split(':');
            match (it.next(), it.next(), it.next()) {
                (Some("frontend"), Some(mode), Some(ctx)) => {
                    let mode = [InputMode::DftMag, InputMode::Waveform, InputMode::DftRealImag, InputMode::Concat]
                        .into_iter()
                        .find(|m| m.name() == mode)
                        .ok_or_else(|| header_err(format!("unknown input mode {mode}")))?;
                    Ok(FeatureKind::Frontend { mode, context: ctx.parse().map_err(header_err)? })
                }
                _ => Err(header_err(format!("unknown feature kind {s}"))),
            }
        }
    }
}

fn split_name(s: Split) -> &'static str {
    match s {
        Split::Train => "train",
        Split::Eval => "eval",
    }
}

fn encode_artifact(a: &Artifact, w: &mut BlockWriter) -> Value {
    match a {
        Artifact::Network(net) => put_network(w, "", net),
        Artifact::Source(m) => json!({
            "network": put_network(w, "", &m.network),
            "classes": m.classes,
            "norm_fingerprint": m.norm_fingerprint.to_hex(),
        }),
        Artifact::Filter(f) => json!({
            "network": put_network(w, "", &f.network),
            "variant": f.variant.name(),
            "norm_fingerprint": fp_hex(f.norm_fingerprint),
        }),
        Artifact::Norm(s) => {
            w.vector("mean", &s.mean);
            w.vector("std", &s.std);
            json!({ "n_frames": s.n_frames, "source_tags": s.source_tags.bits() })
        }
        Artifact::Transform(t) => match t {
            TransformModel::Identity => json!({ "transform": "none" }),
            TransformModel::Dct(spec) => {
                w.matrix("basis", &spec.basis);
                json!({ "transform": "dct", "n_points": spec.n_points, "n_keep": spec.n_keep })
            }
            TransformModel::Pca(p) => {
                w.vector("mean", &p.mean);
                w.matrix("components", &p.components);
                w.vector("eigenvalues", &p.eigenvalues);
                json!({ "transform": "pca" })
            }
        },
        Artifact::Classifier(c) => match c {
            ClassifierModel::Gmm(g) => {
                w.vector("var_floor", &g.var_floor);
                for (i, cg) in g.classes.iter().enumerate() {
                    w.vector(format!("gmm{i}.weights"), &cg.weights);
                    w.matrix(format!("gmm{i}.means"), &cg.means);
                    w.matrix(format!("gmm{i}.variances"), &cg.variances);
                }
                json!({ "classifier": "gmm", "classes": g.classes.len() })
            }
            ClassifierModel::Svm(s) => {
                w.vector("params", &[s.gamma, s.c]);
                for (i, m) in s.machines.iter().enumerate() {
                    w.matrix(format!("svm{i}.support"), &m.support);
                    w.vector(format!("svm{i}.coef"), &m.coef);
                    w.vector(format!("svm{i}.bias"), &[m.bias]);
                }
                json!({ "classifier": "svm", "classes": s.machines.len() })
            }
            ClassifierModel::Dnn(d) => json!({ "classifier": "dnn", "network": put_network(w, "", &d.network) }),
        },
        Artifact::Features(set) => {
            let items: Vec<Value> = set
                .items
                .iter()
                .enumerate()
                .map(|(i, it)| {
                    w.matrix(format!("x{i}"), &it.features.values);
                    json!({
                        "path": it.path,
                        "label": it.label,
                        "split": split_name(it.split),
                        "condition": it.condition,
                        "kind": kind_name(it.features.kind),
                        "normalized": it.features.normalized,
                        "norm_fingerprint": fp_hex(it.features.norm_fingerprint),
                        "provenance": it.features.provenance.bits(),
                    })
                })
                .collect();
            json!({ "classes": set.classes, "items": items })
        }
    }
}

fn decode_artifact(kind: &str, meta: &Value, r: &mut BlockReader) -> Result<Artifact> {
    Ok(match kind {
        "network" => Artifact::Network(get_network(r, "", meta)?),
        "source_model" => {
            let network = get_network(r, "", field(meta, "network")?)?;
            let fp = parse_fp(field(meta, "norm_fingerprint")?)?.ok_or_else(|| header_err("source model needs a fingerprint"))?;
            Artifact::Source(SourceModel::new(network, from_field(meta, "classes")?, fp)?)
        }
        "filter" => {
            let network = get_network(r, "", field(meta, "network")?)?;
            let variant = FilterVariant::from_name(&from_field::<String>(meta, "variant")?)?;
            Artifact::Filter(DnnFilter { network, variant, norm_fingerprint: parse_fp(field(meta, "norm_fingerprint")?)? })
        }
        "norm_stats" => Artifact::Norm(NormStats {
            mean: r.vector("mean")?,
            std: r.vector("std")?,
            n_frames: from_field(meta, "n_frames")?,
            source_tags: Provenance::from_bits(from_field(meta, "source_tags")?),
        }),
        "transform" => Artifact::Transform(match from_field::<String>(meta, "transform")?.as_str() {
            "none" => TransformModel::Identity,
            "dct" => TransformModel::Dct(DctSpec {
                n_points: from_field(meta, "n_points")?,
                n_keep: from_field(meta, "n_keep")?,
                basis: r.matrix("basis")?,
            }),
            "pca" => TransformModel::Pca(PcaModel {
                mean: r.vector("mean")?,
                components: r.matrix("components")?,
                eigenvalues: r.vector("eigenvalues")?,
            }),
            other => return Err(header_err(format!("unknown transform {other}"))),
        }),
        "classifier" => Artifact::Classifier(match from_field::<String>(meta, "classifier")?.as_str() {
            "gmm" => {
                let n: usize = from_field(meta, "classes")?;
                let var_floor = r.vector("var_floor")?;
                let mut classes = Vec::with_capacity(n);
                for i in 0..n {
                    classes.push(ClassGmm {
                        weights: r.vector(&format!("gmm{i}.weights"))?,
                        means: r.matrix(&format!("gmm{i}.means"))?,
                        variances: r.matrix(&format!("gmm{i}.variances"))?,
                    });
                }
                ClassifierModel::Gmm(GmmModel { classes, var_floor })
            }
            "svm" => {
                let n: usize = from_field(meta, "classes")?;
                let params = r.vector("params")?;
                if params.len() != 2 {
                    return Err(header_err("svm params block"));
                }
                let mut machines = Vec::with_capacity(n);
                for i in 0..n {
                    machines.push(BinarySvm {
                        support: r.matrix(&format!("svm{i}.support"))?,
                        coef: r.vector(&format!("svm{i}.coef"))?,
                        bias: r.scalar(&format!("svm{i}.bias"))?,
                    });
                }
                ClassifierModel::Svm(SvmModel { machines, gamma: params[0], c: params[1] })
            }
            "dnn" => ClassifierModel::Dnn(DnnClassifier { network: get_network(r, "", field(meta, "network")?)? }),
            other => return Err(header_err(format!("unknown classifier {other}"))),
        }),
        "features" => {
            #[derive(Deserialize)]
            struct ItemMeta {
                path: String,
                label: usize,
                split: Split,
                condition: String,
                kind: String,
                normalized: bool,
                norm_fingerprint: Value,
                provenance: u8,
            }
            let metas: Vec<ItemMeta> = from_field(meta, "items")?;
            let mut items = Vec::with_capacity(metas.len());
            for (i, m) in metas.into_iter().enumerate() {
                let features = FeatureMatrix {
                    values: r.matrix(&format!("x{i}"))?,
                    kind: parse_kind(&m.kind)?,
                    normalized: m.normalized,
                    norm_fingerprint: parse_fp(&m.norm_fingerprint)?,
                    provenance: Provenance::from_bits(m.provenance),
                };
                items.push(FeatureItem { path: m.path, label: m.label, split: m.split, condition: m.condition, features });
            }
            Artifact::Features(FeatureSet { classes: from_field(meta, "classes")?, items })
        }
        other => return Err(header_err(format!("unknown artifact kind {other}"))),
    })
}

pub fn encode(artifact: &Artifact, stamp: Stamp) -> Vec<u8> {
    let mut w = BlockWriter::default();
    let meta = encode_artifact(artifact, &mut w);
    let header = Header {
        kind: artifact.kind().into(),
        dtype: "f64".into(),
        config_fingerprint: stamp.config_fingerprint.map(|f| f.to_hex()),
        seed: stamp.seed,
        meta,
        blocks: w.blocks,
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + header.len() + 8 * w.data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for v in &w.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn decode(bytes: &[u8]) -> Result<(Artifact, Stamp)> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(ModelIoError::BadMagic);
    }
    if bytes.len() < 8 {
        return Err(ModelIoError::ChecksumFail);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(ModelIoError::VersionMismatch { found: version });
    }
    if bytes.len() < 16 {
        return Err(ModelIoError::ChecksumFail);
    }
    let (body, crc) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().expect("4 bytes")) {
        return Err(ModelIoError::ChecksumFail);
    }
    let hlen = u32::from_le_bytes(body[8..12].try_into().expect("4 bytes")) as usize;
    let payload = body.get(12 + hlen..).ok_or_else(|| header_err("header overruns file"))?;
    let header: Header = serde_json::from_slice(&body[12..12 + hlen]).map_err(header_err)?;
    if header.dtype != "f64" {
        return Err(header_err(format!("unsupported dtype {}", header.dtype)));
    }
    if payload.len() % 8 != 0 {
        return Err(header_err("payload is not a whole number of f64 values"));
    }
    let data: Vec<f64> = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let expected: usize = header.blocks.iter().map(|b| b.rows * b.cols).sum();
    if expected != data.len() {
        return Err(header_err(format!("blocks declare {expected} values, payload holds {}", data.len())));
    }
    let stamp = Stamp {
        config_fingerprint: header
            .config_fingerprint
            .as_deref()
            .map(|s| Fingerprint::from_hex(s).ok_or_else(|| header_err(format!("bad fingerprint {s}"))))
            .transpose()?,
        seed: header.seed,
    };
    let mut reader = BlockReader { blocks: header.blocks.into_iter(), data: &data };
    let artifact = decode_artifact(&header.kind, &header.meta, &mut reader)?;
    Ok((artifact, stamp))
}

pub fn save(path: &Path, artifact: &Artifact, stamp: Stamp) -> Result<()> {
    let io = |source| ModelIoError::Io { path: path.into(), source };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, encode(artifact, stamp)).map_err(io)
}

pub fn load(path: &Path) -> Result<(Artifact, Stamp)> {
    decode(&fs::read(path).map_err(|source| ModelIoError::Io { path: path.into(), source })?)
}

macro_rules! typed_loader {
    ($name:ident, $variant:ident, $ty:ty, $kind:literal) => {
        pub fn $name(path: &Path) -> Result<($ty, Stamp)> {
            match load(path)? {
                (Artifact::$variant(v), s) => Ok((v, s)),
                (other, _) => Err(ModelIoError::WrongKind { expected: $kind, found: other.kind().into() }),
            }
        }
    };
}

typed_loader!(load_network, Network, Network, "network");
typed_loader!(load_source, Source, SourceModel, "source_model");
typed_loader!(load_filter, Filter, DnnFilter, "filter");
typed_loader!(load_norm, Norm, NormStats, "norm_stats");
typed_loader!(load_transform, Transform, TransformModel, "transform");
typed_loader!(load_classifier, Classifier, ClassifierModel, "classifier");
typed_loader!(load_features, Features, FeatureSet, "features");
