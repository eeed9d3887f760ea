use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use satrdo_core::codec::{PatchCodec, PatchDims, QualityValue};
use satrdo_core::denoise::DenoiserSpec;
use satrdo_core::metrics::sse;
use satrdo_core::pipeline::DetectionConfig;
use satrdo_core::rdo::{check_grid, Reference};
use satrdo_core::saturation::{analyze, detect_qv_star, qp_to_lambda, BoundSource, Verdict};
use satrdo_core::synth::{procedural_frames, SynthSpec};
use satrdo_core::{Frame, FrameSet, PatchGrid};

use crate::frame_io::{expand_inputs, format_for, load_frames, save_frame, FrameFormat};
use crate::parallel::{synthesize_ugc, with_jobs};
use crate::report::{
    read_curve_csv, read_json, read_qv_csv, write_curve_csv, write_json, write_qv_csv, Manifest, ReferenceInfo,
    SaturationReport, CURVE_U_CSV, CURVE_Z_CSV, MANIFEST_JSON, QV_CURVE_CSV, REFERENCE_JSON, SATURATION_JSON,
};
use crate::run::{detect, parse_denoiser, ReferenceRun};

#[derive(Debug, Parser)]
#[command(name = "satrdo", version, about = "Quality-saturation detection for re-encoding compressed frames")]
pub struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "SATRDO_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the saturation lambda and QP of the input frames.
    Detect(DetectArgs),
    /// Write the RD curves only.
    RdCurve(CurveArgs),
    /// Degrade pristine frames into synthetic user-generated content.
    GenerateUgc(UgcArgs),
    /// Write procedural test frames.
    GeneratePristine(PristineArgs),
    /// Code frames at one quality value; write reconstructions and rates.
    Encode(EncodeArgs),
    /// Repeat the run recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Frame files or directories (PGM, or raw 8-bit luma with --width/--height).
    pub inputs: Vec<PathBuf>,
    #[arg(long, requires = "height")]
    pub width: Option<usize>,
    #[arg(long, requires = "width")]
    pub height: Option<usize>,
}

impl InputArgs {
    fn dims(&self) -> Option<(usize, usize)> {
        self.width.zip(self.height)
    }

    fn load(&self) -> Result<(Vec<PathBuf>, FrameSet)> {
        ensure!(!self.inputs.is_empty(), "no input frames given");
        let paths = expand_inputs(&self.inputs)?;
        let set = load_frames(&paths, self.dims())?;
        Ok((paths, set))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundArg {
    USweep,
    ZSweep,
}

impl From<BoundArg> for BoundSource {
    fn from(b: BoundArg) -> Self {
        match b {
            BoundArg::USweep => BoundSource::USweep,
            BoundArg::ZSweep => BoundSource::ZSweep,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Frames sampled uniformly from the input.
    #[arg(long, default_value_t = 5)]
    pub sample_count: usize,
    #[arg(long, default_value_t = 48)]
    pub patch_width: usize,
    #[arg(long, default_value_t = 40)]
    pub patch_height: usize,
    /// Quality ladder as `first:last:step` or a comma list.
    #[arg(long, default_value = "19:95:4")]
    pub qv_grid: String,
    /// Lambda grid as `qp_to_lambda` of a QP range `first:last[:step]`.
    #[arg(long, default_value = "0:51", conflicts_with = "lambda_grid")]
    pub qp_grid: String,
    /// Explicit lambda grid, comma separated, strictly increasing.
    #[arg(long)]
    pub lambda_grid: Option<String>,
    /// deblock[:strength], gaussian[:sigma] or external:<dir>. Repeat for
    /// several references; each gets its own `z<N>` subdirectory.
    #[arg(long, default_value = "deblock:20")]
    pub denoiser: Vec<String>,
    /// Which sweep's lambda_min point supplies the band half-width.
    #[arg(long, value_enum, default_value_t = BoundArg::ZSweep)]
    pub bound_source: BoundArg,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    /// Redo detection from a directory written by `rd-curve` instead of
    /// coding frames.
    #[arg(long, conflicts_with = "inputs")]
    pub from_curves: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct UgcArgs {
    /// Quality value of the lossy pass (1..=100).
    #[arg(long)]
    pub severity: i64,
    /// Standard deviation of Gaussian noise added before coding.
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, requires = "height")]
    pub width: Option<usize>,
    #[arg(long, requires = "width")]
    pub height: Option<usize>,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PristineArgs {
    #[arg(long, default_value_t = 480)]
    pub width: usize,
    #[arg(long, default_value_t = 360)]
    pub height: usize,
    #[arg(long, default_value_t = 10)]
    pub frames: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub qv: i64,
    /// Patch size; the whole frame when omitted.
    #[arg(long, requires = "patch_height")]
    pub patch_width: Option<usize>,
    #[arg(long, requires = "patch_width")]
    pub patch_height: Option<usize>,
    /// Also write every patch bitstream to `bitstreams/`.
    #[arg(long)]
    pub dump_bitstreams: bool,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Process exit status for a verdict.
pub fn exit_code(v: Verdict) -> u8 {
    match v {
        Verdict::Detected => 0,
        Verdict::NoSaturationInRange => 2,
        Verdict::DegenerateReference => 3,
    }
}

fn parse_range(s: &str) -> Option<Vec<i64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| p.trim().parse::<i64>().ok();
    match parts.as_slice() {
        [a, b] => Some((num(a)?..=num(b)?).collect()),
        [a, b, step] => {
            let step = num(step).filter(|&s| s > 0)?;
            Some((num(a)?..=num(b)?).step_by(step as usize).collect())
        }
        _ => None,
    }
}

pub fn parse_qv_grid(s: &str) -> Result<Vec<QualityValue>> {
    let values = if s.contains(':') {
        parse_range(s).with_context(|| format!("bad quality range `{s}`"))?
    } else {
        s.split(',')
            .map(|v| v.trim().parse::<i64>().with_context(|| format!("bad quality value `{v}`")))
            .collect::<Result<_>>()?
    };
    let qvs = values.into_iter().map(QualityValue::new).collect::<Result<Vec<_>, _>>()?;
    ensure!(
        !qvs.is_empty() && qvs.windows(2).all(|w| w[0] < w[1]),
        "quality grid must be non-empty and strictly increasing"
    );
    Ok(qvs)
}

pub fn parse_lambda_grid(qp_grid: &str, lambda_grid: Option<&str>) -> Result<Vec<f64>> {
    let grid = match lambda_grid {
        Some(s) => s
            .split(',')
            .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad lambda `{v}`")))
            .collect::<Result<Vec<_>>>()?,
        None => parse_range(qp_grid)
            .with_context(|| format!("bad QP range `{qp_grid}`"))?
            .into_iter()
            .map(qp_to_lambda)
            .collect::<Result<Vec<_>, _>>()?,
    };
    check_grid(&grid)?;
    Ok(grid)
}

struct Resolved {
    config: DetectionConfig,
    denoisers: Vec<DenoiserSpec>,
}

impl CurveArgs {
    /// Checks every option before any frame is read.
    fn resolve(&self) -> Result<Resolved> {
        ensure!(self.sample_count > 0, "--sample-count must be positive");
        for (name, v) in [("--patch-width", self.patch_width), ("--patch-height", self.patch_height)] {
            ensure!(v > 0 && v % 8 == 0, "{name} must be a positive multiple of 8, got {v}");
        }
        if let Some((w, h)) = self.input.dims() {
            satrdo_core::frame::check_dims(w, h)?;
            ensure!(
                w % self.patch_width == 0 && h % self.patch_height == 0,
                "{w}x{h} frames cannot be split into {}x{} patches",
                self.patch_width,
                self.patch_height
            );
        }
        ensure!(!self.denoiser.is_empty(), "at least one --denoiser is needed");
        let denoisers = self
            .denoiser
            .iter()
            .map(|d| parse_denoiser(d))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Resolved {
            config: DetectionConfig {
                sample_count: self.sample_count,
                patch_width: self.patch_width,
                patch_height: self.patch_height,
                qualities: parse_qv_grid(&self.qv_grid)?,
                lambda_grid: parse_lambda_grid(&self.qp_grid, self.lambda_grid.as_deref())?,
                bound_source: self.bound_source.into(),
            },
            denoisers,
        })
    }
}

fn config_json(r: &Resolved, args: &CurveArgs) -> serde_json::Value {
    json!({
        "sample_count": r.config.sample_count,
        "patch_width": r.config.patch_width,
        "patch_height": r.config.patch_height,
        "qualities": r.config.qualities.iter().map(|q| q.get()).collect::<Vec<_>>(),
        "lambda_grid": r.config.lambda_grid,
        "bound_source": r.config.bound_source.to_string(),
        "denoisers": args.denoiser,
        "width": args.input.width,
        "height": args.input.height,
    })
}

fn strings(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

/// Output directory of reference `i` out of `n`.
fn reference_dir(out: &Path, i: usize, n: usize) -> PathBuf {
    if n == 1 {
        out.to_path_buf()
    } else {
        out.join(format!("z{}", i + 1))
    }
}

fn write_curves(dir: &Path, run: &ReferenceRun) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let d = &run.detection;
    let files = [dir.join(CURVE_U_CSV), dir.join(CURVE_Z_CSV), dir.join(QV_CURVE_CSV), dir.join(REFERENCE_JSON)];
    write_curve_csv(&files[0], &d.curve_u, run.pixels)?;
    write_curve_csv(&files[1], &d.curve_z, run.pixels)?;
    write_qv_csv(&files[2], &d.qv_curve, run.pixels)?;
    write_json(
        &files[3],
        &ReferenceInfo {
            denoiser: run.denoiser.to_string(),
            pixels: run.pixels,
            d_uz_sse: d.d_uz,
            source_indices: run.source_indices.clone(),
        },
    )?;
    Ok(files.to_vec())
}

fn summary_line(report: &SaturationReport) -> String {
    match (report.qp_star, report.lambda_star_u) {
        (Some(qp), Some(l)) => format!("{}: {}, QP* {qp} (lambda*_U {l})", report.denoiser, report.verdict),
        _ => format!("{}: {}", report.denoiser, report.verdict),
    }
}

fn verdict_of(report: &SaturationReport) -> Verdict {
    match report.verdict.as_str() {
        "detected" => Verdict::Detected,
        "degenerate-reference" => Verdict::DegenerateReference,
        _ => Verdict::NoSaturationInRange,
    }
}

/// All detected is 0; otherwise the code of the first other verdict.
fn combined_code(verdicts: &[Verdict]) -> u8 {
    verdicts
        .iter()
        .map(|&v| exit_code(v))
        .find(|&c| c != 0)
        .unwrap_or(0)
}

fn cmd_curves(args: &CurveArgs, jobs: Option<usize>, argv: Vec<String>, with_detection: bool) -> Result<u8> {
    let resolved = args.resolve()?;
    let (paths, frames) = args.input.load()?;
    create_dir(&args.out)?;
    let runs = with_jobs(jobs, || detect(&frames, &resolved.denoisers, &resolved.config, args.input.dims()))?;
    let command = if with_detection { "detect" } else { "rd-curve" };
    let mut manifest = Manifest::new(command, argv, config_json(&resolved, args));
    manifest.inputs = strings(&paths);
    let mut verdicts = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        let dir = reference_dir(&args.out, i, runs.len());
        manifest.outputs.extend(strings(&write_curves(&dir, run)?));
        if with_detection {
            let report = SaturationReport::from_detection(&run.detection, &run.denoiser.to_string(), run.pixels);
            let path = dir.join(SATURATION_JSON);
            write_json(&path, &report)?;
            manifest.outputs.push(path.display().to_string());
            println!("{}", summary_line(&report));
            verdicts.push(run.detection.result.verdict);
        }
    }
    write_json(&args.out.join(MANIFEST_JSON), &manifest)?;
    Ok(combined_code(&verdicts))
}

/// Detection from curves written by an earlier run.
pub fn detect_from_curves(dir: &Path, bound_source: BoundSource) -> Result<SaturationReport> {
    let info: ReferenceInfo = read_json(&dir.join(REFERENCE_JSON))?;
    ensure!(info.pixels > 0, "{}: zero pixels", dir.display());
    let curve_u = read_curve_csv(&dir.join(CURVE_U_CSV), Reference::U, info.pixels)?;
    let curve_z = read_curve_csv(&dir.join(CURVE_Z_CSV), Reference::Z, info.pixels)?;
    let result = analyze(&curve_u, &curve_z, info.d_uz_sse, bound_source)?;
    let qv_path = dir.join(QV_CURVE_CSV);
    let qv_star = if qv_path.exists() {
        let points = read_qv_csv(&qv_path, info.pixels)?;
        if points.len() >= 2 {
            detect_qv_star(&points, info.d_uz_sse)?.map(|i| points[i].qv)
        } else {
            None
        }
    } else {
        None
    };
    Ok(SaturationReport::new(&result, &curve_u.lambda_grid(), qv_star, &info.denoiser, info.pixels))
}

fn cmd_detect(args: &DetectArgs, jobs: Option<usize>, argv: Vec<String>) -> Result<u8> {
    let Some(src) = &args.from_curves else {
        return cmd_curves(&args.curve, jobs, argv, true);
    };
    let report = detect_from_curves(src, args.curve.bound_source.into())?;
    create_dir(&args.curve.out)?;
    let path = args.curve.out.join(SATURATION_JSON);
    write_json(&path, &report)?;
    let mut manifest = Manifest::new(
        "detect",
        argv,
        json!({ "from_curves": src.display().to_string(), "bound_source": report.bound_source }),
    );
    manifest.inputs = strings(&[src.join(CURVE_U_CSV), src.join(CURVE_Z_CSV), src.join(REFERENCE_JSON)]);
    manifest.outputs.push(path.display().to_string());
    write_json(&args.curve.out.join(MANIFEST_JSON), &manifest)?;
    println!("{}", summary_line(&report));
    Ok(exit_code(verdict_of(&report)))
}

fn output_paths(inputs: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    inputs
        .iter()
        .map(|p| {
            p.file_name()
                .map(|n| out_dir.join(n))
                .with_context(|| format!("{} has no file name", p.display()))
        })
        .collect()
}

fn save_all(frames: &[Frame], inputs: &[PathBuf], outputs: &[PathBuf], dims: Option<(usize, usize)>) -> Result<()> {
    for ((f, src), dst) in frames.iter().zip(inputs).zip(outputs) {
        let format = match format_for(src, dims)? {
            FrameFormat::Pgm => FrameFormat::Pgm,
            FrameFormat::Raw { .. } => FrameFormat::Raw {
                width: f.width(),
                height: f.height(),
            },
        };
        save_frame(f, dst, format)?;
    }
    Ok(())
}

fn cmd_generate_ugc(args: &UgcArgs, jobs: Option<usize>, argv: Vec<String>) -> Result<u8> {
    let spec = SynthSpec::new(QualityValue::new(args.severity)?, args.noise_sigma, args.seed)?;
    let dims = args.width.zip(args.height);
    let paths = expand_inputs(std::slice::from_ref(&args.input))?;
    let pristine = load_frames(&paths, dims)?;
    let ugc = with_jobs(jobs, || synthesize_ugc(&pristine, &spec))?;
    create_dir(&args.output)?;
    let outputs = output_paths(&paths, &args.output)?;
    if outputs.iter().zip(&paths).any(|(o, i)| o == i) {
        bail!("output directory must differ from the input directory");
    }
    save_all(ugc.frames(), &paths, &outputs, dims)?;
    let mut manifest = Manifest::new(
        "generate-ugc",
        argv,
        json!({ "severity": args.severity, "noise_sigma": args.noise_sigma, "seed": args.seed,
                "width": args.width, "height": args.height }),
    );
    manifest.inputs = strings(&paths);
    manifest.outputs = strings(&outputs);
    write_json(&args.output.join(MANIFEST_JSON), &manifest)?;
    Ok(0)
}

fn cmd_generate_pristine(args: &PristineArgs, argv: Vec<String>) -> Result<u8> {
    ensure!(args.frames > 0, "--frames must be positive");
    let set = procedural_frames(args.width, args.height, args.frames, args.seed)?;
    create_dir(&args.output)?;
    let mut outputs = Vec::new();
    for (i, f) in set.frames().iter().enumerate() {
        let p = args.output.join(format!("frame_{i:04}.pgm"));
        save_frame(f, &p, FrameFormat::Pgm)?;
        outputs.push(p);
    }
    let mut manifest = Manifest::new(
        "generate-pristine",
        argv,
        json!({ "width": args.width, "height": args.height, "frames": args.frames, "seed": args.seed }),
    );
    manifest.outputs = strings(&outputs);
    write_json(&args.output.join(MANIFEST_JSON), &manifest)?;
    Ok(0)
}

fn cmd_encode(args: &EncodeArgs, argv: Vec<String>) -> Result<u8> {
    let qv = QualityValue::new(args.qv)?;
    let (paths, frames) = args.input.load()?;
    let (pw, ph) = args
        .patch_width
        .zip(args.patch_height)
        .unwrap_or((frames.width(), frames.height()));
    let grid = PatchGrid::new(&frames, pw, ph)?;
    let dims = PatchDims::new(pw, ph)?;
    let codec = PatchCodec::new();
    let recon_dir = args.out.join("recon");
    let bits_dir = args.out.join("bitstreams");
    create_dir(&recon_dir)?;
    if args.dump_bitstreams {
        create_dir(&bits_dir)?;
    }

    let stats_path = args.out.join("stats.csv");
    let mut stats = csv::Writer::from_path(&stats_path).with_context(|| format!("creating {}", stats_path.display()))?;
    stats.write_record(["frame", "patch", "qv", "rate_bits", "rate_bpp", "mse"])?;
    let mut outputs = vec![stats_path.clone()];
    let mut recon = Vec::with_capacity(grid.total_patches());
    for k in 0..grid.total_patches() {
        let loc = grid.locate(k);
        let patch = grid.extract(&frames, k);
        let enc = codec.encode(&patch, dims, qv)?;
        let px = dims.pixels() as f64;
        stats.write_record([
            loc.frame.to_string(),
            (k % grid.patches_per_frame()).to_string(),
            qv.get().to_string(),
            enc.rate_bits.to_string(),
            (enc.rate_bits as f64 / px).to_string(),
            (sse(&enc.recon, &patch) as f64 / px).to_string(),
        ])?;
        if args.dump_bitstreams {
            let stem = paths[loc.frame].file_stem().unwrap_or_default().to_string_lossy();
            let p = bits_dir.join(format!("{stem}_p{:04}.bin", k % grid.patches_per_frame()));
            fs::write(&p, &enc.bitstream).with_context(|| format!("writing {}", p.display()))?;
            outputs.push(p);
        }
        recon.push(enc.recon);
    }
    stats.flush()?;
    let recon = grid.assemble(&recon)?;
    let recon_paths = output_paths(&paths, &recon_dir)?;
    save_all(recon.frames(), &paths, &recon_paths, args.input.dims())?;
    outputs.extend(recon_paths);

    let mut manifest = Manifest::new(
        "encode",
        argv,
        json!({ "qv": qv.get(), "patch_width": pw, "patch_height": ph,
                "dump_bitstreams": args.dump_bitstreams,
                "width": args.input.width, "height": args.input.height }),
    );
    manifest.inputs = strings(&paths);
    manifest.outputs = strings(&outputs);
    write_json(&args.out.join(MANIFEST_JSON), &manifest)?;
    Ok(0)
}

fn cmd_rerun(args: &RerunArgs, jobs: Option<usize>) -> Result<u8> {
    let manifest: Manifest = read_json(&args.manifest)?;
    let out = match &args.out {
        Some(o) => Some(std::path::absolute(o)?),
        None => None,
    };
    // recorded paths are relative to the original working directory
    std::env::set_current_dir(&manifest.cwd)
        .with_context(|| format!("entering recorded working directory {}", manifest.cwd))?;
    let mut cli = Cli::try_parse_from(std::iter::once("satrdo".to_string()).chain(manifest.args.iter().cloned()))
        .with_context(|| format!("{}: recorded arguments no longer parse", args.manifest.display()))?;
    if let Some(out) = &out {
        match &mut cli.command {
            Command::Detect(d) => d.curve.out = out.clone(),
            Command::RdCurve(c) => c.out = out.clone(),
            Command::GenerateUgc(g) => g.output = out.clone(),
            Command::GeneratePristine(p) => p.output = out.clone(),
            Command::Encode(e) => e.out = out.clone(),
            Command::Rerun(_) => bail!("a manifest cannot record a rerun"),
        }
    }
    if matches!(cli.command, Command::Rerun(_)) {
        bail!("a manifest cannot record a rerun");
    }
    cli.jobs = cli.jobs.or(jobs);
    execute(&cli, manifest.args)
}

/// Runs a parsed command. `argv` is recorded in the manifest.
pub fn execute(cli: &Cli, argv: Vec<String>) -> Result<u8> {
    match &cli.command {
        Command::Detect(a) => cmd_detect(a, cli.jobs, argv),
        Command::RdCurve(a) => cmd_curves(a, cli.jobs, argv, false),
        Command::GenerateUgc(a) => cmd_generate_ugc(a, cli.jobs, argv),
        Command::GeneratePristine(a) => cmd_generate_pristine(a, argv),
        Command::Encode(a) => cmd_encode(a, argv),
        Command::Rerun(a) => cmd_rerun(a, cli.jobs),
    }
}

/// Parses `args` (program name first) and runs; returns the exit status.
/// Errors are reported on standard error with status 1.
pub fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let argv = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
