//! Command-line surface: curate, profile, sample, plot, phantom, score,
//! and a pipeline command chaining the first four.
//!
//! Conventions: data goes to files (or stdout for `score`), diagnostics
//! to stderr, exit code 0 on success and 2 on usage or input errors.
//! All outputs are byte-deterministic for fixed inputs and flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::curation::{curate_volume, load_mask_stack, CurationManifest};
use crate::error::{Error, Result};
use crate::glcm::{
    par_entropy_profile, read_profile_csv, write_profile_csv, write_smoothed_profile_csv,
    EntropyProfile, GlcmConfig, ProfileRows, RangeMode,
};
use crate::metrics::{confusion, macro_f1, sensitivity, specificity};
use crate::plot::render_svg;
use crate::sampler::{sample_plan, QuantileMode, SamplingConfig, SamplingPlan, Strategy};
use crate::smoothing::{sg_smooth, SgConfig};
use crate::volume::{
    generate_phantom, load_image_stack, load_raw_volume, write_raw_volume, Band, Dtype,
    PhantomSpec, Texture, Volume,
};

#[derive(Parser)]
#[command(
    name = "slicesampler",
    version,
    about = "Curate volumetric scans and sample their most informative slices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Keep only slices whose lung mask covers enough of the frame
    Curate(CurateArgs),
    /// Compute the per-slice GLCM entropy profile of a volume
    Profile(ProfileArgs),
    /// Select slices from an entropy profile
    Sample(SampleArgs),
    /// Render a profile (and optional plan) as a standalone SVG
    Plot(PlotArgs),
    /// Generate a synthetic banded test volume in the raw format
    Phantom(PhantomArgs),
    /// Score a two-column prediction/label file
    Score(ScoreArgs),
    /// Run curate, profile, sample, and plot in one invocation
    Pipeline(PipelineArgs),
}

fn parse_offset(s: &str) -> std::result::Result<(i32, i32), String> {
    let (dx, dy) = s
        .split_once(',')
        .ok_or_else(|| format!("expected dx,dy but got \"{s}\""))?;
    let dx = dx.trim().parse().map_err(|_| format!("invalid dx \"{dx}\""))?;
    let dy = dy.trim().parse().map_err(|_| format!("invalid dy \"{dy}\""))?;
    Ok((dx, dy))
}

fn parse_preset(s: &str) -> std::result::Result<f64, String> {
    match s {
        "0.5" => Ok(0.005),
        "1" => Ok(0.01),
        "2" => Ok(0.02),
        "3" => Ok(0.03),
        "4" => Ok(0.04),
        "5" => Ok(0.05),
        other => Err(format!(
            "unknown preset \"{other}\" (expected one of 0.5, 1, 2, 3, 4, 5 percent)"
        )),
    }
}

/// GLCM flags shared by `profile` and `pipeline`.
#[derive(Args)]
pub struct GlcmFlags {
    /// Number of gray levels
    #[arg(long, default_value_t = 32)]
    pub levels: usize,
    /// Pixel pair displacement dx,dy
    #[arg(long, default_value = "1,0", allow_hyphen_values = true, value_parser = parse_offset)]
    pub offset: (i32, i32),
    /// Count each pair in both directions
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub symmetric: bool,
    /// Quantization range: global or per-slice
    #[arg(long, default_value = "global")]
    pub range_mode: RangeMode,
}

impl GlcmFlags {
    fn to_config(&self) -> GlcmConfig {
        GlcmConfig {
            levels: self.levels,
            offset: self.offset,
            symmetric: self.symmetric,
            range_mode: self.range_mode,
        }
    }
}

#[derive(Args)]
pub struct CurateArgs {
    /// Volume: image-stack directory or raw header file
    #[arg(long)]
    pub volume: PathBuf,
    /// Directory of external masks parallel to the volume (nonzero = lung)
    #[arg(long)]
    pub masks: Option<PathBuf>,
    /// Minimum lung fraction in [0,1] for a slice to be kept
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    /// Preset threshold in percent: 0.5, 1, 2, 3, 4, or 5
    #[arg(long, conflicts_with = "threshold", value_parser = parse_preset)]
    pub preset: Option<f64>,
    /// Manifest output path (JSON)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ProfileArgs {
    /// Volume: image-stack directory or raw header file
    #[arg(long)]
    pub volume: PathBuf,
    /// Curation manifest; omitted means an implicit threshold-0 curation
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub glcm: GlcmFlags,
    /// Add a smoothed column using this Savitzky-Golay window
    #[arg(long)]
    pub sg_window: Option<usize>,
    /// Savitzky-Golay polynomial order for the smoothed column
    #[arg(long, default_value_t = 2)]
    pub sg_order: usize,
    /// Profile CSV output path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SampleArgs {
    /// Entropy profile CSV
    #[arg(long)]
    pub profile: PathBuf,
    /// glcm, center, or uniform
    #[arg(long, default_value_t = Strategy::Glcm)]
    pub strategy: Strategy,
    /// Number of slices to select
    #[arg(long)]
    pub n: usize,
    /// Savitzky-Golay window (glcm strategy only)
    #[arg(long, default_value_t = 3)]
    pub sg_window: usize,
    /// Savitzky-Golay polynomial order (glcm strategy only)
    #[arg(long, default_value_t = 2)]
    pub sg_order: usize,
    /// midpoint (deterministic) or seeded (random draws)
    #[arg(long, default_value = "midpoint")]
    pub quantile_mode: String,
    /// Seed for the seeded quantile mode
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep duplicate inverse-CDF hits instead of backfilling
    #[arg(long)]
    pub allow_duplicates: bool,
    /// Volume id recorded in the plan; defaults to the profile file stem
    #[arg(long)]
    pub volume_id: Option<String>,
    /// Plan output path (JSON)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PlotArgs {
    /// Entropy profile CSV
    #[arg(long)]
    pub profile: PathBuf,
    /// Sampling plan to overlay (markers and CDF)
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// SVG output path
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PhantomArgs {
    /// Comma-separated bands LEN:TEXTURE, where TEXTURE is constant,
    /// checker[:period], or noise[:seed[:amplitude]]
    #[arg(long)]
    pub bands: String,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    /// Base intensity of every band
    #[arg(long, default_value_t = 100)]
    pub base: u16,
    /// Sample width written to disk: u8 or u16
    #[arg(long, default_value = "u16")]
    pub dtype: Dtype,
    /// Header output path; the blob lands next to it
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ScoreArgs {
    /// Two-column file: prediction label, 0/1, comma or space separated
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Args)]
pub struct PipelineArgs {
    /// Volume: image-stack directory or raw header file
    #[arg(long)]
    pub volume: PathBuf,
    /// Directory of external masks parallel to the volume
    #[arg(long)]
    pub masks: Option<PathBuf>,
    /// Minimum lung fraction in [0,1] for a slice to be kept
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    #[command(flatten)]
    pub glcm: GlcmFlags,
    #[arg(long, default_value_t = 3)]
    pub sg_window: usize,
    #[arg(long, default_value_t = 2)]
    pub sg_order: usize,
    /// Number of slices to select
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = Strategy::Glcm)]
    pub strategy: Strategy,
    #[arg(long, default_value = "midpoint")]
    pub quantile_mode: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub allow_duplicates: bool,
    /// Directory receiving manifest.json, profile.csv, plan.json, plot.svg
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Execute a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Curate(args) => cmd_curate(&args),
        Command::Profile(args) => cmd_profile(&args),
        Command::Sample(args) => cmd_sample(&args),
        Command::Plot(args) => cmd_plot(&args),
        Command::Phantom(args) => cmd_phantom(&args),
        Command::Score(args) => cmd_score(&args),
        Command::Pipeline(args) => cmd_pipeline(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn load_volume(path: &Path) -> Result<Volume> {
    if path.is_dir() {
        let id = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "volume".to_string());
        load_image_stack(path, &id)
    } else {
        load_raw_volume(path)
    }
}

fn curation_summary(manifest: &CurationManifest) -> String {
    format!(
        "kept {} of {} slices (threshold {}%)",
        manifest.kept_indices().len(),
        manifest.entries.len(),
        manifest.threshold_fraction * 100.0
    )
}

fn cmd_curate(args: &CurateArgs) -> Result<()> {
    let volume = load_volume(&args.volume)?;
    let masks = args.masks.as_deref().map(load_mask_stack).transpose()?;
    let threshold = args.preset.unwrap_or(args.threshold);
    let manifest = curate_volume(&volume, masks.as_deref(), threshold)?;
    manifest.write_json(&args.out)?;
    println!("{}", curation_summary(&manifest));
    Ok(())
}

fn profile_with_manifest(
    volume: &Volume,
    manifest_path: Option<&Path>,
    config: &GlcmConfig,
) -> Result<EntropyProfile> {
    let manifest = match manifest_path {
        Some(path) => CurationManifest::read_json(path)?,
        None => curate_volume(volume, None, 0.0)?,
    };
    par_entropy_profile(volume, &manifest, config)
}

fn cmd_profile(args: &ProfileArgs) -> Result<()> {
    let volume = load_volume(&args.volume)?;
    let profile = profile_with_manifest(&volume, args.manifest.as_deref(), &args.glcm.to_config())?;
    match args.sg_window {
        Some(window) => {
            let smoothed = sg_smooth(&profile.values, &SgConfig { window, order: args.sg_order })?;
            write_smoothed_profile_csv(&args.out, &profile, &smoothed)
        }
        None => write_profile_csv(&args.out, &profile),
    }
}

fn sampling_config(
    strategy: Strategy,
    n: usize,
    sg_window: usize,
    sg_order: usize,
    quantile_mode: &str,
    seed: Option<u64>,
    allow_duplicates: bool,
) -> Result<SamplingConfig> {
    let quantile_mode = match quantile_mode {
        "midpoint" => QuantileMode::Midpoint,
        "seeded" => QuantileMode::Seeded(seed.unwrap_or(0)),
        other => {
            return Err(Error::invalid(format!(
                "unknown quantile mode \"{other}\" (expected midpoint or seeded)"
            )));
        }
    };
    Ok(SamplingConfig {
        n_samples: n,
        strategy,
        sg: SgConfig { window: sg_window, order: sg_order },
        quantile_mode,
        allow_duplicates,
    })
}

fn profile_from_rows(rows: ProfileRows, volume_id: String) -> EntropyProfile {
    EntropyProfile {
        volume_id,
        values: rows.entropy,
        slice_indices: rows.slice_indices,
        // the CSV does not carry the GLCM configuration
        config: GlcmConfig::default(),
    }
}

fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let rows = read_profile_csv(&args.profile)?;
    let volume_id = args.volume_id.clone().unwrap_or_else(|| {
        args.profile
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "volume".to_string())
    });
    let profile = profile_from_rows(rows, volume_id);
    let config = sampling_config(
        args.strategy,
        args.n,
        args.sg_window,
        args.sg_order,
        &args.quantile_mode,
        args.seed,
        args.allow_duplicates,
    )?;
    let plan = sample_plan(&profile, &config)?;
    plan.write_json(&args.out)
}

fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let rows = read_profile_csv(&args.profile)?;
    let plan = args.plan.as_deref().map(SamplingPlan::read_json).transpose()?;
    let svg = render_svg(&rows, plan.as_ref())?;
    fs::write(&args.out, svg).map_err(|e| Error::io(&args.out, e))
}

fn parse_bands(spec: &str) -> Result<Vec<Band>> {
    let mut bands = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let fields: Vec<&str> = part.split(':').collect();
        let bad = |msg: String| Error::invalid(format!("band \"{part}\": {msg}"));
        if fields.len() < 2 {
            return Err(bad("expected LEN:TEXTURE".to_string()));
        }
        let length: usize = fields[0]
            .parse()
            .map_err(|_| bad(format!("invalid length \"{}\"", fields[0])))?;
        let texture = match fields[1] {
            "constant" => {
                if fields.len() > 2 {
                    return Err(bad("constant takes no parameters".to_string()));
                }
                Texture::Constant
            }
            "checker" => {
                let period = match fields.get(2) {
                    Some(p) => p.parse().map_err(|_| bad(format!("invalid period \"{p}\"")))?,
                    None => 1,
                };
                if fields.len() > 3 {
                    return Err(bad("checker takes at most one parameter".to_string()));
                }
                Texture::Checker { period }
            }
            "noise" => {
                let seed = match fields.get(2) {
                    Some(s) => s.parse().map_err(|_| bad(format!("invalid seed \"{s}\"")))?,
                    None => 0,
                };
                let amplitude = match fields.get(3) {
                    Some(a) => a.parse().map_err(|_| bad(format!("invalid amplitude \"{a}\"")))?,
                    None => 100,
                };
                if fields.len() > 4 {
                    return Err(bad("noise takes at most two parameters".to_string()));
                }
                Texture::Noise { seed, amplitude }
            }
            other => return Err(bad(format!("unknown texture \"{other}\""))),
        };
        bands.push(Band { length, texture });
    }
    if bands.is_empty() {
        return Err(Error::invalid("at least one band is required"));
    }
    Ok(bands)
}

fn cmd_phantom(args: &PhantomArgs) -> Result<()> {
    let spec = PhantomSpec {
        width: args.width,
        height: args.height,
        bands: parse_bands(&args.bands)?,
        base_intensity: args.base,
    };
    let volume = generate_phantom(&spec)?;
    write_raw_volume(&volume, &args.out, args.dtype)
}

fn parse_predictions(path: &Path) -> Result<(Vec<bool>, Vec<bool>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut predictions = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| Error::malformed(path, format!("line {}: {msg}", lineno + 1));
        let normalized = line.replace(',', " ");
        let fields: Vec<&str> = normalized.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(bad(format!("expected 2 fields, got {}", fields.len())));
        }
        let parse_bit = |s: &str| match s {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(bad(format!("expected 0 or 1, got \"{other}\""))),
        };
        predictions.push(parse_bit(fields[0])?);
        labels.push(parse_bit(fields[1])?);
    }
    if predictions.is_empty() {
        return Err(Error::malformed(path, "no prediction rows"));
    }
    Ok((predictions, labels))
}

fn cmd_score(args: &ScoreArgs) -> Result<()> {
    let (predictions, labels) = parse_predictions(&args.input)?;
    let counts = confusion(&predictions, &labels)?;
    println!("macro_f1: {:.2}", macro_f1(&counts)? * 100.0);
    println!("sensitivity: {:.2}", sensitivity(&counts)? * 100.0);
    println!("specificity: {:.2}", specificity(&counts)? * 100.0);
    Ok(())
}

fn cmd_pipeline(args: &PipelineArgs) -> Result<()> {
    fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let volume = load_volume(&args.volume)?;
    let masks = args.masks.as_deref().map(load_mask_stack).transpose()?;
    let manifest = curate_volume(&volume, masks.as_deref(), args.threshold)?;
    manifest.write_json(&args.out_dir.join("manifest.json"))?;
    println!("{}", curation_summary(&manifest));

    let profile = par_entropy_profile(&volume, &manifest, &args.glcm.to_config())?;
    let sg = SgConfig { window: args.sg_window, order: args.sg_order };
    let smoothed = sg_smooth(&profile.values, &sg)?;
    write_smoothed_profile_csv(&args.out_dir.join("profile.csv"), &profile, &smoothed)?;

    let config = sampling_config(
        args.strategy,
        args.n,
        args.sg_window,
        args.sg_order,
        &args.quantile_mode,
        args.seed,
        args.allow_duplicates,
    )?;
    let plan = sample_plan(&profile, &config)?;
    plan.write_json(&args.out_dir.join("plan.json"))?;

    let rows = ProfileRows {
        slice_indices: profile.slice_indices.clone(),
        entropy: profile.values.clone(),
        smoothed: Some(smoothed),
    };
    let svg = render_svg(&rows, Some(&plan))?;
    let svg_path = args.out_dir.join("plot.svg");
    fs::write(&svg_path, svg).map_err(|e| Error::io(&svg_path, e))?;
    Ok(())
}
