use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aec::config::{seed_offset, ConfigError, RunConfig};
use aec::error::{Error, Result, Stage, StageExt};
use aec::manifest::{load_manifest, save_manifest};
use aec::model_io::{self, Artifact};
use aec::pipeline::{self, files, EvalReport};
use aec::prepare::{self, NoiseSource, RirChoice};
use aec::report::{self, ReportStyle, ReportTable};
use aec::{audio, synth};
use aec_core::transfer::FilterVariant;
use clap::{Parser, Subcommand};
use log::info;

#[derive(Parser)]
#[command(name = "aec", version, about = "Transfer-learned DNN filter features for acoustic event classification")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run seed; overrides the one in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for artifacts and reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for per-segment work.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bring every source class to the configured duration budget.
    PrepareSource {
        #[arg(long)]
        manifest: PathBuf,
        /// Measured room impulse response; a synthetic one is used otherwise.
        #[arg(long)]
        rir: Option<PathBuf>,
    },
    /// Mix background noises into the clean target evaluation segments.
    PrepareConditions {
        #[arg(long)]
        manifest: PathBuf,
        /// Noise as NAME=PATH; repeatable.
        #[arg(long = "noise")]
        noises: Vec<String>,
    },
    /// Fit normalization statistics and train the source network.
    TrainSource {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Train the adaptation layers on target data.
    Adapt {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Build the DNN filter and extract target features.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Fit the feature transform on target-train features.
    FitTransform,
    /// Fit the back-end classifier.
    FitClassifier,
    /// Classify evaluation segments and write the report.
    Evaluate {
        /// Row label for tables.
        #[arg(long)]
        method: Option<String>,
    },
    /// Render evaluation reports or a prepared table as text.
    Report {
        #[arg(long, default_value = "table4")]
        style: String,
        /// Report JSON files, or one JSON table.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Grid-search classifier hyperparameters with stratified k-fold.
    CrossValidate,
    /// Run every training and evaluation stage on a prepared manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        method: Option<String>,
    },
    /// Write the bundled synthetic dataset.
    Synth {
        /// Target directory; defaults to OUT/synth.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    workers: usize,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn save(&self, name: &str, a: &Artifact) -> Result<()> {
        pipeline::save_artifact(&self.out, name, a, &self.cfg)
    }
}

fn context(cli: &Cli) -> Result<Ctx> {
    let mut cfg = match (&cli.config, cli.seed) {
        (Some(p), _) => RunConfig::load(p)?,
        (None, Some(seed)) => RunConfig::with_seed(seed),
        (None, None) => {
            return Err(ConfigError::Invalid("a seed is required: pass --seed or a --config that sets one".into()).into())
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    cfg.validate()?;
    let out = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let workers = cfg.workers.unwrap_or_else(audio::default_workers);
    Ok(Ctx { cfg, out, workers })
}

fn load_reports(inputs: &[PathBuf]) -> Result<Vec<EvalReport>> {
    inputs
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| ConfigError::Invalid(format!("{}: {e}", p.display())).into())
        })
        .collect()
}

fn load_features(ctx: &Ctx) -> Result<aec::features::FeatureSet> {
    let (f, s) = model_io::load_features(&ctx.path(files::FEATURES))?;
    pipeline::check_stamp("feature file", &s, &ctx.cfg);
    Ok(f)
}

fn load_reduced(ctx: &Ctx) -> Result<aec::features::FeatureSet> {
    let feats = load_features(ctx)?;
    let (t, s) = model_io::load_transform(&ctx.path(files::TRANSFORM))?;
    pipeline::check_stamp("transform", &s, &ctx.cfg);
    Ok(feats.transformed(&t)?)
}

fn parse_noise(arg: &str) -> Result<NoiseSource> {
    let (name, path) =
        arg.split_once('=').ok_or_else(|| ConfigError::Invalid(format!("--noise expects NAME=PATH, got {arg:?}")))?;
    Ok(NoiseSource { name: name.into(), audio: audio::read(Path::new(path))? })
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Report { style, inputs } = &cli.command {
        let style = ReportStyle::from_name(style)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown report style {style:?}")))
            .stage(Stage::Report)?;
        let table = match inputs.as_slice() {
            [one] => {
                let text = std::fs::read_to_string(one).map_err(|e| Error::io(one, e)).stage(Stage::Report)?;
                match serde_json::from_str::<ReportTable>(&text) {
                    Ok(t) => t,
                    Err(_) => report::table_from_reports(&load_reports(inputs).stage(Stage::Report)?, style).stage(Stage::Report)?,
                }
            }
            _ => report::table_from_reports(&load_reports(inputs).stage(Stage::Report)?, style).stage(Stage::Report)?,
        };
        print!("{}", report::render_report(&table).stage(Stage::Report)?);
        return Ok(());
    }
    let ctx = context(&cli).stage(Stage::Load)?;
    let cfg = &ctx.cfg;
    match cli.command {
        Command::Report { .. } => unreachable!("handled above"),
        Command::Synth { dir } => {
            let dir = dir.unwrap_or_else(|| ctx.path("synth"));
            let spec = synth::SynthSpec { seed: cfg.seed, ..Default::default() };
            let ds = synth::generate(&spec, &dir).stage(Stage::Synth)?;
            println!("manifest: {}", ds.manifest_path.display());
            for (name, path) in ds.noises {
                println!("noise {name}: {}", path.display());
            }
        }
        Command::PrepareSource { manifest, rir } => {
            let stage = Stage::PrepareSource;
            let m = load_manifest(&manifest).stage(stage)?;
            let rir = match rir {
                Some(p) => RirChoice::Given(audio::read(&p).stage(stage)?.samples().to_vec()),
                None => RirChoice::Synthetic { rt60_s: cfg.prepare.rt60_s, length_s: cfg.prepare.rir_length_s },
            };
            let seed = cfg.stage_seed(seed_offset::PREPARE);
            let (out, summary) =
                prepare::prepare_source(&m, &ctx.path("source"), cfg.prepare.source_seconds, &rir, seed).stage(stage)?;
            let path = ctx.path("manifest_source.csv");
            save_manifest(&path, &out).stage(stage)?;
            for c in summary {
                println!(
                    "{:<24} {:>9.1} s -> {:>9.1} s kept + {:>9.1} s reverberated ({} files)",
                    c.label,
                    c.original_samples as f64 / 16_000.0,
                    c.kept_samples as f64 / 16_000.0,
                    c.augmented_samples as f64 / 16_000.0,
                    c.files
                );
            }
            println!("manifest: {}", path.display());
        }
        Command::PrepareConditions { manifest, noises } => {
            let stage = Stage::PrepareConditions;
            let m = load_manifest(&manifest).stage(stage)?;
            let noises: Vec<NoiseSource> = noises.iter().map(|n| parse_noise(n)).collect::<Result<_>>().stage(stage)?;
            let seed = cfg.stage_seed(seed_offset::PREPARE);
            let (out, checks) =
                prepare::prepare_conditions(&m, &noises, &cfg.prepare.snrs_db, &ctx.path("conditions"), seed).stage(stage)?;
            let path = ctx.path("manifest_conditions.csv");
            save_manifest(&path, &out).stage(stage)?;
            let worst = checks.iter().filter(|c| c.clipped == 0).map(|c| (c.measured_db - c.requested_db).abs()).fold(0.0, f64::max);
            println!("{} mixtures written, worst SNR deviation {worst:.2e} dB", checks.len());
            println!("manifest: {}", path.display());
        }
        Command::TrainSource { manifest } => {
            let stage = Stage::TrainSource;
            let m = load_manifest(&manifest).stage(stage)?;
            let transfer = cfg.variant().stage(stage)? != FilterVariant::NoTransfer;
            let data = pipeline::load_dataset(&m, cfg, transfer, ctx.workers).stage(Stage::Load)?;
            let ff = pipeline::frontend_stage(&data, cfg, None, ctx.workers).stage(Stage::Frontend)?;
            ctx.save(files::NORM, &Artifact::Norm(ff.norm.clone())).stage(stage)?;
            if transfer {
                let (model, rep) = pipeline::train_source_stage(&ff, &data.source_classes, cfg).stage(stage)?;
                ctx.save(files::SOURCE, &Artifact::Source(model)).stage(stage)?;
                println!("source network: {} epochs, best {:?}", rep.epochs.len(), rep.best_epoch);
            } else {
                println!("variant B: source training skipped");
            }
        }
        Command::Adapt { manifest } => {
            let stage = Stage::Adapt;
            let m = load_manifest(&manifest).stage(stage)?;
            let (norm, s) = model_io::load_norm(&ctx.path(files::NORM)).stage(stage)?;
            pipeline::check_stamp("normalization statistics", &s, cfg);
            let data = pipeline::load_dataset(&m, cfg, false, ctx.workers).stage(Stage::Load)?;
            let ff = pipeline::frontend_stage(&data, cfg, Some(norm), ctx.workers).stage(Stage::Frontend)?;
            let source = if cfg.variant().stage(stage)? == FilterVariant::NoTransfer {
                None
            } else {
                Some(model_io::load_source(&ctx.path(files::SOURCE)).stage(stage)?.0)
            };
            let (net, rep) = pipeline::adapt_stage(source.as_ref(), &ff.target, cfg).stage(stage)?;
            ctx.save(files::COMPOSITE, &Artifact::Network(net)).stage(stage)?;
            println!("adaptation: {} epochs, best {:?}", rep.epochs.len(), rep.best_epoch);
        }
        Command::Extract { manifest } => {
            let stage = Stage::Extract;
            let m = load_manifest(&manifest).stage(stage)?;
            let (norm, _) = model_io::load_norm(&ctx.path(files::NORM)).stage(stage)?;
            let (net, s) = model_io::load_network(&ctx.path(files::COMPOSITE)).stage(stage)?;
            pipeline::check_stamp("composite network", &s, cfg);
            let data = pipeline::load_dataset(&m, cfg, false, ctx.workers).stage(Stage::Load)?;
            let ff = pipeline::frontend_stage(&data, cfg, Some(norm.clone()), ctx.workers).stage(Stage::Frontend)?;
            let (filter, feats) = pipeline::extract_stage(&net, &ff.target, &norm, cfg).stage(stage)?;
            ctx.save(files::FILTER, &Artifact::Filter(filter)).stage(stage)?;
            ctx.save(files::FEATURES, &Artifact::Features(feats.clone())).stage(stage)?;
            println!("{} segments, {} dims", feats.items.len(), feats.items.first().map_or(0, |i| i.features.dims()));
        }
        Command::FitTransform => {
            let stage = Stage::FitTransform;
            let feats = load_features(&ctx).stage(stage)?;
            let t = pipeline::fit_transform_stage(&feats, cfg).stage(stage)?;
            println!("transform: {}", t.name());
            ctx.save(files::TRANSFORM, &Artifact::Transform(t)).stage(stage)?;
        }
        Command::FitClassifier => {
            let stage = Stage::FitClassifier;
            let reduced = load_reduced(&ctx).stage(stage)?;
            let model = pipeline::fit_classifier_stage(&reduced, cfg).stage(stage)?;
            ctx.save(files::CLASSIFIER, &Artifact::Classifier(model)).stage(stage)?;
            println!("classifier: {}", cfg.classifier.name());
        }
        Command::Evaluate { method } => {
            let stage = Stage::Evaluate;
            let reduced = load_reduced(&ctx).stage(stage)?;
            let (model, s) = model_io::load_classifier(&ctx.path(files::CLASSIFIER)).stage(stage)?;
            pipeline::check_stamp("classifier", &s, cfg);
            let mut rep = pipeline::evaluate_stage(&reduced, &model, cfg, ctx.workers).stage(stage)?;
            if let Some(m) = method {
                rep.method = m;
            }
            pipeline::write_json(&ctx.path(files::REPORT), &rep).stage(stage)?;
            let table = report::table_from_reports(std::slice::from_ref(&rep), ReportStyle::Table4).stage(Stage::Report)?;
            print!("{}", report::render_report(&table).stage(Stage::Report)?);
        }
        Command::CrossValidate => {
            let stage = Stage::CrossValidate;
            let reduced = load_reduced(&ctx).stage(stage)?;
            let cv = pipeline::cross_validate_stage(&reduced, cfg).stage(stage)?;
            pipeline::write_json(&ctx.path(files::CV), &cv).stage(stage)?;
            for (g, m) in cv.grid.iter().zip(&cv.mean_accuracy) {
                println!("{g:<32} {m:6.1}");
            }
            println!("best: {}", cv.best);
        }
        Command::Run { manifest, method } => {
            let m = load_manifest(&manifest).stage(Stage::Load)?;
            let outcome = pipeline::run_pipeline(cfg, &m, &ctx.out, ctx.workers)?;
            let mut rep = outcome.report;
            if let Some(name) = method {
                rep.method = name;
                pipeline::write_json(&ctx.path(files::REPORT), &rep).stage(Stage::Evaluate)?;
            }
            info!("artifacts in {}", ctx.out.display());
            let table = report::table_from_reports(std::slice::from_ref(&rep), ReportStyle::Table4).stage(Stage::Report)?;
            print!("{}", report::render_report(&table).stage(Stage::Report)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
