//! Command-line surface for the forgery-localization pipeline.
//!
//! Every subcommand accepts a line-based `key=value` config file plus
//! repeated `--set key=value` overrides, and writes its outputs under a run
//! directory together with a JSON-lines manifest.

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use focal::codec::{
    encode_sequence_gop, load_y4m, write_y4m, CodecConfig, Flavor, TextureParams,
};
use focal::config::Config;
use focal::dataset::{
    build_dataset_d, build_spatial_splices, build_temporal_splices, DatasetSpec, WindowSpec,
};
use focal::descriptors::{
    descriptor_cache_key, feature_tensor, frame_descriptor, read_descriptor_cache,
    temporal_average, write_descriptor_cache, FeatureTensor, FrameDescriptor, ModelPair,
};
use focal::harness::{evaluate_spatial, evaluate_temporal, FeatureSet};
use focal::manifest::RunManifest;
use focal::nn::{
    input_geom, load_weights, rf_chain, save_weights, table1_conv_specs, OptimizerKind,
    TrainConfig, TABLE1_EXPECTED_GEOMETRY,
};
use focal::spatial::{activation_maps, fuse, render_heatmap, write_pgm, write_score_csv};
use focal::temporal::{detect_splices, distance_series_on, write_report_csv, write_series_csv};
use focal::trainer::{build_patch_corpus, train, CorpusSpec, Task, TrainOptions};
use focal::video::VideoSequence;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "focal",
    about = "Video forgery localization from coding-trace self-consistency",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Line-based key=value config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one config key, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run directory for outputs and the manifest.
    #[arg(short, long, default_value = "run")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the encoded collection and spliced evaluation clips.
    GenData(Common),
    /// Encode a Y4M clip with one synthetic codec configuration.
    Encode {
        #[command(flatten)]
        common: Common,
        /// Input YUV4MPEG2 file.
        #[arg(long)]
        input: PathBuf,
    },
    /// Train the codec or quality classifier on synthetic patches.
    Train {
        #[command(flatten)]
        common: Common,
        /// codec | quality
        #[arg(long)]
        task: String,
    },
    /// Print the receptive-field table of the built-in architecture.
    RfGeometry,
    /// Detect temporal splicing points in one clip.
    DetectTemporal {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        video: PathBuf,
        #[arg(long)]
        codec_model: PathBuf,
        #[arg(long)]
        quality_model: PathBuf,
    },
    /// Render the spatial forgery heatmap of a frame window.
    LocalizeSpatial {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        video: PathBuf,
        #[arg(long)]
        codec_model: PathBuf,
        #[arg(long)]
        quality_model: PathBuf,
    },
    /// Frame-wise ROC/PR evaluation on a generated temporal dataset.
    EvalTemporal {
        #[command(flatten)]
        common: Common,
        /// Run directory produced by gen-data.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        codec_model: PathBuf,
        #[arg(long)]
        quality_model: PathBuf,
    },
    /// Patch-wise ROC evaluation on a generated spatial dataset.
    EvalSpatial {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        codec_model: PathBuf,
        #[arg(long)]
        quality_model: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenData(common) => gen_data(&common),
        Command::Encode { common, input } => encode(&common, &input),
        Command::Train { common, task } => train_cmd(&common, &task),
        Command::RfGeometry => rf_geometry(),
        Command::DetectTemporal {
            common,
            video,
            codec_model,
            quality_model,
        } => detect_temporal(&common, &video, &codec_model, &quality_model),
        Command::LocalizeSpatial {
            common,
            video,
            codec_model,
            quality_model,
        } => localize_spatial(&common, &video, &codec_model, &quality_model),
        Command::EvalTemporal {
            common,
            dataset,
            codec_model,
            quality_model,
        } => eval_temporal_cmd(&common, &dataset, &codec_model, &quality_model),
        Command::EvalSpatial {
            common,
            dataset,
            codec_model,
            quality_model,
        } => eval_spatial_cmd(&common, &dataset, &codec_model, &quality_model),
    }
}

fn load_config(common: &Common) -> anyhow::Result<Config> {
    let mut cfg = match &common.config {
        Some(path) => Config::from_file(path)?,
        None => Config::new(),
    };
    for spec in &common.overrides {
        cfg.apply_override(spec)?;
    }
    std::fs::create_dir_all(&common.out)?;
    Ok(cfg)
}

fn parse_flavors(cfg: &Config, key: &str, default: &str) -> anyhow::Result<Vec<Flavor>> {
    cfg.get_list(key, default)
        .iter()
        .map(|s| Flavor::from_str(s).map_err(Into::into))
        .collect()
}

fn parse_deltas(cfg: &Config, key: &str, default: &str) -> anyhow::Result<Vec<f64>> {
    cfg.get_list(key, default)
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| anyhow!("config key '{key}': bad number '{s}'"))
        })
        .collect()
}

fn texture_params(cfg: &Config) -> anyhow::Result<TextureParams> {
    let d = TextureParams::default();
    Ok(TextureParams {
        base: cfg.get_f64("texture_base", d.base)?,
        noise_amp: cfg.get_f64("texture_noise_amp", d.noise_amp)?,
        noise_sigma: cfg.get_f64("texture_noise_sigma", d.noise_sigma)?,
        grad_amp: cfg.get_f64("texture_grad_amp", d.grad_amp)?,
        drift_period: cfg.get_f64("texture_drift_period", d.drift_period)?,
    })
}

fn reencode_config(cfg: &Config) -> anyhow::Result<Option<CodecConfig>> {
    if !cfg.get_bool("reencode", true)? {
        return Ok(None);
    }
    let flavor = Flavor::from_str(cfg.get_str("reencode_flavor", "A"))?;
    let delta = cfg.get_f64("reencode_delta", 2.0)?;
    Ok(Some(CodecConfig::new(flavor, delta)?))
}

fn load_models(codec: &Path, quality: &Path) -> anyhow::Result<ModelPair> {
    let codec_net = load_weights(codec).with_context(|| format!("loading {}", codec.display()))?;
    let quality_net =
        load_weights(quality).with_context(|| format!("loading {}", quality.display()))?;
    Ok(ModelPair::new(codec_net, quality_net)?)
}

// ---------------------------------------------------------------- gen-data

fn dataset_spec_from_config(cfg: &Config) -> anyhow::Result<DatasetSpec> {
    let gop = cfg.get_usize("gop_period", 16)?;
    Ok(DatasetSpec {
        n_sources: cfg.get_usize("sources", 1)?,
        frame_rows: cfg.get_usize("frame_rows", 256)?,
        frame_cols: cfg.get_usize("frame_cols", 256)?,
        frames_per_video: cfg.get_usize("frames", 64)?,
        texture: texture_params(cfg)?,
        flavors: parse_flavors(cfg, "flavors", "A,B,C,D")?,
        deltas: parse_deltas(cfg, "deltas", "5,20,40")?,
        gop_period: if gop == 0 { None } else { Some(gop) },
        reencode: reencode_config(cfg)?,
        seed: cfg.get_u64("seed", 0)?,
    })
}

fn write_truth_jsonl(lines: &[serde_json::Value], path: &Path) -> anyhow::Result<()> {
    let mut text = String::new();
    for line in lines {
        text.push_str(&line.to_string());
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn gen_data(common: &Common) -> anyhow::Result<()> {
    let cfg = load_config(common)?;
    let spec = dataset_spec_from_config(&cfg)?;
    let mut manifest = RunManifest::new("gen-data", &cfg.digest(), spec.seed);
    let dataset = build_dataset_d(&spec)?;

    if cfg.get_bool("write_d", false)? {
        let d_dir = common.out.join("d");
        std::fs::create_dir_all(&d_dir)?;
        for clip in &dataset.clips {
            let name = format!(
                "s{}_v{:02}_{}{}.y4m",
                clip.source,
                clip.version,
                clip.flavor.name(),
                clip.delta
            );
            let path = d_dir.join(&name);
            write_y4m(&clip.seq, &path)?;
            manifest.record_file(
                &common.out,
                &path,
                "encoded-version",
                Some(serde_json::json!({
                    "source": clip.source,
                    "version": clip.version,
                    "flavor": clip.flavor.name(),
                    "delta": clip.delta,
                })),
            )?;
        }
    }

    if cfg.get_bool("temporal", true)? {
        let dir = common.out.join("temporal");
        std::fs::create_dir_all(&dir)?;
        let clips = build_temporal_splices(&dataset, spec.reencode)?;
        let mut truth_lines = Vec::new();
        for (idx, clip) in clips.iter().enumerate() {
            let name = format!("temp_{idx:04}.y4m");
            write_y4m(&clip.seq, dir.join(&name))?;
            truth_lines.push(serde_json::json!({
                "file": name,
                "truth_index": clip.truth_index,
                "source": clip.source,
                "version_a": clip.version_a,
                "version_b": clip.version_b,
            }));
        }
        let truth_path = dir.join("truth.jsonl");
        write_truth_jsonl(&truth_lines, &truth_path)?;
        manifest.record_file(&common.out, &truth_path, "temporal-truth", None)?;
        println!("wrote {} temporally-spliced clips", clips.len());
    }

    if cfg.get_bool("spatial", true)? {
        let dir = common.out.join("spatial");
        std::fs::create_dir_all(&dir)?;
        let window = WindowSpec::centered(
            spec.frame_rows,
            spec.frame_cols,
            cfg.get_usize("window_rows", 96)?,
            cfg.get_usize("window_cols", 96)?,
        )?;
        let cap = cfg.get_usize("max_pairs_per_source", 0)?;
        let clips = build_spatial_splices(
            &dataset,
            window,
            spec.reencode,
            if cap == 0 { None } else { Some(cap) },
        )?;
        let mut truth_lines = Vec::new();
        for (idx, clip) in clips.iter().enumerate() {
            let name = format!("spat_{idx:04}.y4m");
            write_y4m(&clip.seq, dir.join(&name))?;
            truth_lines.push(serde_json::json!({
                "file": name,
                "window": {
                    "u0": clip.window.u0,
                    "v0": clip.window.v0,
                    "rows": clip.window.rows,
                    "cols": clip.window.cols,
                },
                "source": clip.source,
                "version_a": clip.version_a,
                "version_b": clip.version_b,
            }));
        }
        let truth_path = dir.join("truth.jsonl");
        write_truth_jsonl(&truth_lines, &truth_path)?;
        manifest.record_file(&common.out, &truth_path, "spatial-truth", None)?;
        println!("wrote {} spatially-spliced clips", clips.len());
    }

    manifest.write(&common.out)?;
    Ok(())
}

// ------------------------------------------------------------------ encode

fn encode(common: &Common, input: &Path) -> anyhow::Result<()> {
    let cfg = load_config(common)?;
    let seq = load_y4m(input)?;
    let flavor = Flavor::from_str(cfg.get_str("flavor", "A"))?;
    let delta = cfg.get_f64("delta", 20.0)?;
    let gop = cfg.get_usize("gop_period", 0)?;
    let codec = CodecConfig::new(flavor, delta)?;
    let padded = seq.pad_to_multiple(8);
    let encoded =
        encode_sequence_gop(&padded, codec, if gop == 0 { None } else { Some(gop) }).quantize_u8();
    let out_path = common.out.join(format!(
        "{}_{}{}.y4m",
        input.file_stem().unwrap_or_default().to_string_lossy(),
        flavor.name(),
        delta
    ));
    write_y4m(&encoded, &out_path)?;
    let mut manifest = RunManifest::new("encode", &cfg.digest(), 0);
    manifest.record_file(
        &common.out,
        &out_path,
        "encoded",
        Some(serde_json::json!({"flavor": flavor.name(), "delta": delta, "gop": gop})),
    )?;
    manifest.write(&common.out)?;
    println!("wrote {}", out_path.display());
    Ok(())
}

// ------------------------------------------------------------------- train

fn train_cmd(common: &Common, task: &str) -> anyhow::Result<()> {
    let cfg = load_config(common)?;
    let task = match task {
        "codec" => Task::Codec,
        "quality" => Task::Quality,
        other => bail!("unknown task '{other}', expected codec or quality"),
    };
    let seed = cfg.get_u64("seed", 11)?;
    let corpus_spec = CorpusSpec {
        task,
        patches_per_class: cfg.get_usize("patches_per_class", 8192)?,
        variance_threshold: cfg.get_f64("variance_threshold", 1e3)?,
        frame_rows: cfg.get_usize("corpus_frame_rows", 256)?,
        frame_cols: cfg.get_usize("corpus_frame_cols", 256)?,
        texture: texture_params(&cfg)?,
        quality_flavors: parse_flavors(&cfg, "quality_flavors", "A,B")?,
        codec_delta: cfg.get_f64("codec_delta", 20.0)?,
        seed,
    };
    eprintln!(
        "synthesizing corpus ({} patches per class)...",
        corpus_spec.patches_per_class
    );
    let corpus = build_patch_corpus(&corpus_spec)?;

    let optimizer = match cfg.get_str("optimizer", "adam") {
        "adam" => OptimizerKind::Adam,
        "sgdm" => OptimizerKind::Sgdm,
        other => bail!("unknown optimizer '{other}'"),
    };
    let mut train_cfg = match optimizer {
        OptimizerKind::Adam => TrainConfig::adam_recipe(),
        OptimizerKind::Sgdm => TrainConfig::sgdm_recipe(),
    };
    train_cfg.learning_rate = cfg.get_f64("learning_rate", train_cfg.learning_rate)?;
    train_cfg.epochs = cfg.get_usize("epochs", 6)?;
    train_cfg.batch_size = cfg.get_usize("batch_size", 128)?;
    train_cfg.lr_drop_factor = cfg.get_f64("lr_drop_factor", train_cfg.lr_drop_factor)?;
    train_cfg.lr_drop_period = cfg.get_usize("lr_drop_period", train_cfg.lr_drop_period)?;
    train_cfg.seed = seed;

    let early = cfg.get_f64("early_stop_val_acc", 0.0)?;
    let options = TrainOptions {
        width: cfg.get_usize("width", 16)?,
        fc1_relu: cfg.get_bool("fc1_relu", false)?,
        early_stop_val_accuracy: if early > 0.0 { Some(early) } else { None },
        verbose: cfg.get_bool("verbose", true)?,
    };

    let (net, mut log) = train(&corpus, &train_cfg, &options)?;
    log.task = match task {
        Task::Codec => "codec".to_string(),
        Task::Quality => "quality".to_string(),
    };

    let weights_path = common.out.join(format!("{}.focw", log.task));
    save_weights(&net, &weights_path)?;
    let log_path = common.out.join(format!("{}_train_log.csv", log.task));
    log.write_csv(&log_path)?;
    let summary_path = common.out.join(format!("{}_summary.json", log.task));
    std::fs::write(&summary_path, serde_json::to_string_pretty(&log)?)?;

    let mut manifest = RunManifest::new("train", &cfg.digest(), seed);
    manifest.record_file(
        &common.out,
        &weights_path,
        "weights",
        Some(serde_json::json!({"task": log.task, "test_accuracy": log.test_accuracy})),
    )?;
    manifest.record_file(&common.out, &log_path, "train-log", None)?;
    manifest.record_file(&common.out, &summary_path, "train-summary", None)?;
    manifest.write(&common.out)?;
    println!(
        "{} model: test accuracy {:.4} (best epoch {})",
        log.task, log.test_accuracy, log.best_epoch
    );
    Ok(())
}

// ------------------------------------------------------------- rf-geometry

fn rf_geometry() -> anyhow::Result<()> {
    let geoms = rf_chain(&table1_conv_specs(64), 64)?;
    let mut rows = vec![input_geom(64)];
    rows.extend(geoms);
    println!("layer        m   j   r     c");
    let names = ["input", "conv-1", "conv-2", "conv-3", "conv-4", "conv-5"];
    let mut ok = true;
    for (idx, (g, name)) in rows.iter().zip(names).enumerate() {
        println!(
            "{name:<9} {m:>4} {j:>3} {r:>3} {c:>5.1}",
            m = g.m,
            j = g.j,
            r = g.r,
            c = g.c
        );
        let want = TABLE1_EXPECTED_GEOMETRY[idx];
        if (g.m, g.j, g.r) != (want.0, want.1, want.2) || g.c != want.3 {
            ok = false;
        }
    }
    if !ok {
        bail!("computed geometry deviates from the published table");
    }
    Ok(())
}

// --------------------------------------------------------- detect-temporal

/// Per-frame descriptor grids, through the content-addressed cache when
/// enabled.
#[allow(clippy::too_many_arguments)]
fn tensors_for_video(
    cfg: &Config,
    out_dir: &Path,
    video_path: &Path,
    seq: &VideoSequence,
    models: &ModelPair,
    codec_model: &Path,
    quality_model: &Path,
    stride: usize,
) -> anyhow::Result<Vec<FeatureTensor>> {
    let use_cache = cfg.get_bool("cache", true)?;
    let cache_dir = match cfg.get("cache_dir") {
        Some(d) => PathBuf::from(d),
        None => out_dir.join("cache"),
    };
    let key = if use_cache {
        let video_bytes = std::fs::read(video_path)?;
        let cw = std::fs::read(codec_model)?;
        let qw = std::fs::read(quality_model)?;
        Some(descriptor_cache_key(&video_bytes, &cw, &qw, stride, "tensor"))
    } else {
        None
    };
    if let Some(key) = &key {
        let path = cache_dir.join(format!("{key}.focd"));
        if path.exists() {
            return Ok(read_descriptor_cache(&path)?);
        }
    }
    let tensors: Vec<FeatureTensor> = seq
        .frames
        .iter()
        .map(|f| feature_tensor(f, stride, models))
        .collect::<focal::Result<_>>()?;
    if let Some(key) = &key {
        std::fs::create_dir_all(&cache_dir)?;
        write_descriptor_cache(&tensors, cache_dir.join(format!("{key}.focd")))?;
    }
    Ok(tensors)
}

fn frame_descriptors_from_tensors(
    tensors: &[FeatureTensor],
) -> anyhow::Result<Vec<FrameDescriptor>> {
    tensors
        .iter()
        .enumerate()
        .map(|(n, t)| {
            let descs: Vec<focal::descriptors::PatchDescriptor> = (0..t.p_u)
                .flat_map(|i| (0..t.p_v).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let cell = t.cell(i, j);
                    let mut f_c = [0f32; 4];
                    let mut f_q = [0f32; 4];
                    f_c.copy_from_slice(&cell[..4]);
                    f_q.copy_from_slice(&cell[4..8]);
                    focal::descriptors::PatchDescriptor { f_c, f_q, i, j }
                })
                .collect();
            Ok(frame_descriptor(&descs, n)?)
        })
        .collect()
}

fn feature_set_from_config(cfg: &Config) -> anyhow::Result<FeatureSet> {
    Ok(match cfg.get_str("features", "concat") {
        "concat" => FeatureSet::Concatenated,
        "codec" => FeatureSet::CodecOnly,
        "quality" => FeatureSet::QualityOnly,
        other => bail!("unknown feature set '{other}'"),
    })
}

fn resolve_threshold(cfg: &Config, codec_model: &Path) -> anyhow::Result<f64> {
    if let Some(t) = cfg.get("threshold") {
        return t.parse().map_err(|_| anyhow!("bad threshold '{t}'"));
    }
    // calibration sidecar stored alongside the models by eval-temporal
    let sidecar = codec_model.with_file_name("calibration.json");
    if sidecar.exists() {
        let text = std::fs::read_to_string(&sidecar)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        if let Some(t) = value.get("threshold").and_then(|v| v.as_f64()) {
            return Ok(t);
        }
    }
    bail!(
        "no detection threshold: pass --set threshold=VALUE or place calibration.json \
         (from eval-temporal) next to the model files"
    )
}

fn detect_temporal(
    common: &Common,
    video: &Path,
    codec_model: &Path,
    quality_model: &Path,
) -> anyhow::Result<()> {
    let cfg = load_config(common)?;
    let models = load_models(codec_model, quality_model)?;
    let stride = cfg.get_usize("stride", 64)?;
    let seq = load_y4m(video)?;
    let tensors = tensors_for_video(
        &cfg,
        &common.out,
        video,
        &seq,
        &models,
        codec_model,
        quality_model,
        stride,
    )?;
    let descs = frame_descriptors_from_tensors(&tensors)?;
    let set = feature_set_from_config(&cfg)?;
    let series = distance_series_on(&descs, set.range())?;

    let threshold = resolve_threshold(&cfg, codec_model)?;
    let suppress = cfg.get_bool("suppress", true)?;
    let period = cfg.get_usize("period", 0)?;
    let report = detect_splices(
        &series,
        threshold,
        suppress,
        if period == 0 { None } else { Some(period) },
    )?;

    let report_path = common.out.join("splices.csv");
    write_report_csv(&report, &report_path)?;
    let series_path = common.out.join("series.csv");
    write_series_csv(&series, &series_path)?;

    let mut manifest = RunManifest::new("detect-temporal", &cfg.digest(), 0);
    manifest.record_file(&common.out, &report_path, "splice-report", None)?;
    manifest.record_file(&common.out, &series_path, "distance-series", None)?;
    manifest.write(&common.out)?;

    for d in &report.detections {
        println!("splice at frame {} (delta_f = {:.6})", d.frame_index, d.value);
    }
    if report.detections.is_empty() {
        println!("no splice detected above threshold {threshold}");
    }
    Ok(())
}

// -------------------------------------------------------- localize-spatial

fn localize_spatial(
    common: &Common,
    video: &Path,
    codec_model: &Path,
    quality_model: &Path,
) -> anyhow::Result<()> {
    let cfg = load_config(common)?;
    let models = load_models(codec_model, quality_model)?;
    let stride = cfg.get_usize("stride", 8)?;
    let first = cfg.get_usize("frame", 0)?;
    let window_frames = cfg.get_usize("window_frames", 1)?;
    let seq = load_y4m(video)?;
    if first >= seq.len() {
        bail!("frame {first} out of range for a {}-frame clip", seq.len());
    }
    let last = (first + window_frames.max(1)).min(seq.len());
    let tensors: Vec<FeatureTensor> = seq.frames[first..last]
        .iter()
        .map(|f| feature_tensor(f, stride, &models))
        .collect::<focal::Result<_>>()?;
    let avg = temporal_average(&tensors)?;
    let maps = activation_maps(&avg)?;
    let fused = fuse(&maps)?;

    let heatmap = render_heatmap(&fused, seq.rows, seq.cols, stride)?;
    let pgm_path = common.out.join(format!("heatmap_{first:04}.pgm"));
    write_pgm(&heatmap, &pgm_path)?;
    let csv_path = common.out.join(format!("scores_{first:04}.csv"));
    write_score_csv(&fused, &csv_path)?;

    let mut manifest = RunManifest::new("localize-spatial", &cfg.digest(), 0);
    manifest.record_file(&common.out, &pgm_path, "heatmap", None)?;
    manifest.record_file(&common.out, &csv_path, "scores", None)?;
    manifest.write(&common.out)?;
    println!("wrote {}", pgm_path.display());
    Ok(())
}

// ----------------------------------------------------------- eval-temporal

fn read_truth_jsonl(path: &Path) -> anyhow::Result<Vec<serde_json::Value>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(|l| serde_json::from_str(l).map_err(Into::into))
        .collect()
}

fn eval_temporal_cmd(
    common: &Common,
    dataset: &Path,
    codec_model: &Path,
    quality_model: &Path,
) -> anyhow::Result<()> {
    let cfg = load_config(common)?;
    let models = load_models(codec_model, quality_model)?;
    let stride = cfg.get_usize("stride", 64)?;
    let suppress = cfg.get_bool("suppress", true)?;
    let period = cfg.get_usize("period", 0)?;

    let truth = read_truth_jsonl(&dataset.join("temporal").join("truth.jsonl"))?;
    let mut clips = Vec::new();
    let mut descriptors = Vec::new();
    for entry in &truth {
        let file = entry["file"]
            .as_str()
            .ok_or_else(|| anyhow!("truth entry lacks file"))?;
        let truth_index = entry["truth_index"]
            .as_u64()
            .ok_or_else(|| anyhow!("truth entry lacks truth_index"))? as usize;
        let seq = load_y4m(dataset.join("temporal").join(file))?;
        let descs = focal::descriptors::video_frame_descriptors(&seq.frames, stride, &models)?;
        clips.push(focal::dataset::TemporalClip {
            seq,
            truth_index,
            source: entry["source"].as_u64().unwrap_or(0) as usize,
            version_a: entry["version_a"].as_u64().unwrap_or(0) as usize,
            version_b: entry["version_b"].as_u64().unwrap_or(0) as usize,
        });
        descriptors.push(descs);
    }

    let eval = evaluate_temporal(
        &clips,
        &descriptors,
        suppress,
        if period == 0 { None } else { Some(period) },
    )?;
    let mut summary = serde_json::Map::new();
    for (set, curve) in &eval.curves {
        let csv_path = common.out.join(format!("temporal_curve_{}.csv", set.name()));
        focal::eval::write_curve_csv(curve, &csv_path)?;
        summary.insert(
            set.name().to_string(),
            serde_json::json!({
                "auc": curve.auc,
                "pr_auc": curve.pr_auc,
                "best_f1": curve.best_f1,
                "best_f1_threshold": curve.best_f1_threshold,
            }),
        );
    }
    let concat = eval.curve(FeatureSet::Concatenated);
    let summary_path = common.out.join("temporal_summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&serde_json::Value::Object(summary))?,
    )?;
    // calibration sidecar consumed by detect-temporal
    let calib_path = common.out.join("calibration.json");
    std::fs::write(
        &calib_path,
        serde_json::to_string_pretty(&serde_json::json!({
            "threshold": concat.best_f1_threshold,
            "source": "best F1 on the evaluated temporal dataset",
        }))?,
    )?;

    let mut manifest = RunManifest::new("eval-temporal", &cfg.digest(), 0);
    manifest.record_file(&common.out, &summary_path, "temporal-summary", None)?;
    manifest.record_file(&common.out, &calib_path, "calibration", None)?;
    manifest.write(&common.out)?;
    println!(
        "temporal AUC: codec {:.4}, quality {:.4}, concat {:.4}",
        eval.auc(FeatureSet::CodecOnly),
        eval.auc(FeatureSet::QualityOnly),
        eval.auc(FeatureSet::Concatenated)
    );
    Ok(())
}

// ------------------------------------------------------------ eval-spatial

fn eval_spatial_cmd(
    common: &Common,
    dataset: &Path,
    codec_model: &Path,
    quality_model: &Path,
) -> anyhow::Result<()> {
    let cfg = load_config(common)?;
    let models = load_models(codec_model, quality_model)?;
    let stride = cfg.get_usize("stride", 8)?;
    let windows: Vec<usize> = cfg
        .get_list("window_frames", "1,32")
        .iter()
        .map(|s| s.parse().map_err(|_| anyhow!("bad window_frames '{s}'")))
        .collect::<anyhow::Result<_>>()?;

    let truth = read_truth_jsonl(&dataset.join("spatial").join("truth.jsonl"))?;
    let mut clips = Vec::new();
    for entry in &truth {
        let file = entry["file"]
            .as_str()
            .ok_or_else(|| anyhow!("truth entry lacks file"))?;
        let w = &entry["window"];
        let window = WindowSpec {
            u0: w["u0"].as_u64().unwrap_or(0) as usize,
            v0: w["v0"].as_u64().unwrap_or(0) as usize,
            rows: w["rows"].as_u64().unwrap_or(0) as usize,
            cols: w["cols"].as_u64().unwrap_or(0) as usize,
        };
        let seq = load_y4m(dataset.join("spatial").join(file))?;
        clips.push(focal::dataset::SpatialClip {
            seq,
            window,
            source: entry["source"].as_u64().unwrap_or(0) as usize,
            version_a: entry["version_a"].as_u64().unwrap_or(0) as usize,
            version_b: entry["version_b"].as_u64().unwrap_or(0) as usize,
        });
    }

    let mut summary = serde_json::Map::new();
    let mut printed = Vec::new();
    for &w in &windows {
        let curve = evaluate_spatial(&clips, &models, stride, w)?;
        let csv_path = common.out.join(format!("spatial_curve_w{w}.csv"));
        focal::eval::write_curve_csv(&curve, &csv_path)?;
        summary.insert(
            format!("w{w}"),
            serde_json::json!({"auc": curve.auc, "pr_auc": curve.pr_auc, "best_f1": curve.best_f1}),
        );
        printed.push(format!("W={w}: AUC {:.4}", curve.auc));
    }
    let summary_path = common.out.join("spatial_summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&serde_json::Value::Object(summary))?,
    )?;
    let mut manifest = RunManifest::new("eval-spatial", &cfg.digest(), 0);
    manifest.record_file(&common.out, &summary_path, "spatial-summary", None)?;
    manifest.write(&common.out)?;
    println!("spatial {}", printed.join(", "));
    Ok(())
}
