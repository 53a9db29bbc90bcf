use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cellcode::bench::{run_from_config, MANIFEST_FILE};
use cellcode::decoder::ThresholdMode;
use cellcode::io::{
    centers_to_csv, export_png16, read_center_set, read_centers, read_sfld, write_sfld, write_text,
};
use cellcode::manifest::{KvDocument, RunManifest};
use cellcode::metrics::{DEFAULT_BIN_COUNT, DEFAULT_DILATION_DIAMETER};
use cellcode::{
    count_by_integration, detect_local_maxima, encode, generate_scene, perturb, score,
    CodingQuality, CodingSpec, Dataset, DecodeSpec, Error, Normalization, PerturbSpec, SceneSpec,
    Scheme,
};
use clap::{Args, Parser, Subcommand};

/// Encode dot labels into training targets, score codings, decode them back
/// and evaluate detections.
#[derive(Parser)]
#[command(name = "cellcode", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Code a center CSV into an SFLD field.
    Encode(EncodeArgs),
    /// Entropy and reversibility of coded fields, as CSV.
    Metrics(MetricsArgs),
    /// Recover centers (or a count) from a field.
    Decode(DecodeArgs),
    /// Score detections against ground truth with greedy matching.
    Eval(EvalArgs),
    /// Generate a synthetic scene as a center CSV.
    Synth(SynthArgs),
    /// Blur a field and add seeded Gaussian noise.
    Perturb(PerturbArgs),
    /// Run a benchmark sweep from a config file.
    Bench(BenchArgs),
    /// Write a field as a 16-bit grayscale PNG (lossy, for viewing).
    ExportPng(ExportArgs),
}

#[derive(Args)]
struct EncodeArgs {
    /// Center CSV with a `row,col` header.
    input: PathBuf,
    #[arg(long)]
    height: usize,
    #[arg(long)]
    width: usize,
    /// dot, gaussian, rect, proximity or repel.
    #[arg(long)]
    scheme: Scheme,
    /// Average cell radius; sets the defaults for the parameters below.
    #[arg(long, default_value_t = 6.0)]
    cell_radius: f64,
    /// Proximity/repel decay. Default 0.8.
    #[arg(long)]
    alpha: Option<f64>,
    /// Proximity/repel distance cutoff r. Default 2 * cell radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Gaussian sigma. Default cell radius / 2.
    #[arg(long)]
    sigma: Option<f64>,
    /// Rectangle side, odd. Default 2 * cell radius + 1.
    #[arg(long)]
    kernel_size: Option<usize>,
    /// raw, peak_one or unit_mass. Default unit_mass.
    #[arg(long)]
    norm: Option<Normalization>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// One or more SFLD fields coded from the same labels.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BIN_COUNT)]
    bins: usize,
    /// Diameter of the disk used for the dilated mask.
    #[arg(long, default_value_t = DEFAULT_DILATION_DIAMETER)]
    dilate: f64,
    /// Scheme names for the `scheme` column, one per input. Otherwise taken
    /// from each field's manifest, falling back to the file stem.
    #[arg(long, num_args = 1..)]
    scheme: Vec<String>,
    /// Write CSV here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 6.0)]
    nms_radius: f64,
    #[arg(long, default_value_t = DecodeSpec::DEFAULT_RELATIVE_THRESHOLD)]
    threshold: f64,
    /// absolute or relative_to_max.
    #[arg(long, default_value_t = ThresholdMode::RelativeToMax)]
    threshold_mode: ThresholdMode,
    /// Emit the integration count instead of centers.
    #[arg(long)]
    count: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("radius").required(true).args(["threshold", "dataset"]))]
struct EvalArgs {
    detections: PathBuf,
    truth: PathBuf,
    /// Match distance in pixels.
    #[arg(long)]
    threshold: Option<f64>,
    /// Use a dataset's average cell radius: dg, adip, hbm or vgg.
    #[arg(long)]
    dataset: Option<Dataset>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 128)]
    height: usize,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 40)]
    n_cells: usize,
    /// Default: the cell radius.
    #[arg(long)]
    min_spacing: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    crowded_fraction: f64,
    #[arg(long, default_value_t = 6.0)]
    cell_radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct PerturbArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    blur_sigma: f64,
    #[arg(long, default_value_t = 0.01)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    config: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("error: invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::FAILURE
        }
    }
}

/// The error chain on one line, skipping causes the message already quotes.
fn one_line(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !msg.contains(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg.replace('\n', " ")
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Encode(a) => cmd_encode(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Bench(a) => cmd_bench(a),
        Command::ExportPng(a) => cmd_export(a),
    }
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

fn write_manifest(output: &Path, manifest: &RunManifest) -> Result<()> {
    write_text(&manifest_path(output), &manifest.render())?;
    Ok(())
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => write_text(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    let mut spec = CodingSpec::for_cell_radius(a.scheme, a.cell_radius);
    if let Some(v) = a.alpha {
        spec.alpha = v;
    }
    if let Some(v) = a.radius {
        spec.radius_cutoff = v;
    }
    if let Some(v) = a.sigma {
        spec.sigma = v;
    }
    if let Some(v) = a.kernel_size {
        spec.kernel_size = v;
    }
    if let Some(v) = a.norm {
        spec.normalization = v;
    }
    let labels = read_center_set(&a.input, a.height, a.width)?;
    let field = encode(&labels, &spec)?;
    write_sfld(&a.output, &field)?;

    let mut m = RunManifest::new("encode");
    m.params
        .push("scheme", spec.scheme)
        .push("height", a.height)
        .push("width", a.width)
        .push("cell_radius", a.cell_radius)
        .push("alpha", spec.alpha)
        .push("radius", spec.radius_cutoff)
        .push("sigma", spec.sigma)
        .push("kernel_size", spec.kernel_size)
        .push("norm", spec.normalization);
    m.inputs.push("labels", path_str(&a.input));
    m.outputs.push("field", path_str(&a.output));
    write_manifest(&a.output, &m)
}

/// Scheme recorded in a field's `encode` manifest, if there is one.
fn scheme_from_manifest(field: &Path) -> Option<String> {
    let text = std::fs::read_to_string(manifest_path(field)).ok()?;
    let doc = KvDocument::parse(&text).ok()?;
    Some(doc.section("params")?.get("scheme")?.value.clone())
}

fn cmd_metrics(a: MetricsArgs) -> Result<()> {
    if !a.scheme.is_empty() && a.scheme.len() != a.inputs.len() {
        bail!(
            "--scheme got {} names for {} inputs",
            a.scheme.len(),
            a.inputs.len()
        );
    }
    let mut csv = String::from("scheme,entropy_bits,R,R5,bin_count\n");
    for (i, input) in a.inputs.iter().enumerate() {
        let field = read_sfld(input)?;
        let labels = read_center_set(&a.labels, field.height(), field.width())
            .with_context(|| format!("labels do not fit field {}", input.display()))?;
        let q = CodingQuality::measure(&field, &labels, a.bins, a.dilate)
            .with_context(|| input.display().to_string())?;
        let name = a
            .scheme
            .get(i)
            .cloned()
            .or_else(|| scheme_from_manifest(input))
            .unwrap_or_else(|| {
                input
                    .file_stem()
                    .map_or_else(String::new, |s| s.to_string_lossy().into_owned())
            });
        csv.push_str(&format!(
            "{name},{},{},{},{}\n",
            q.entropy_bits, q.reversibility, q.reversibility_dilated, q.bin_count
        ));
    }
    emit(a.output.as_deref(), &csv)?;
    if let Some(out) = &a.output {
        let mut m = RunManifest::new("metrics");
        m.params
            .push("bins", a.bins)
            .push("dilate", a.dilate)
            .push("scheme", a.scheme.join(","));
        m.inputs.push("labels", path_str(&a.labels));
        for (i, input) in a.inputs.iter().enumerate() {
            m.inputs.push(format!("field{}", i + 1), path_str(input));
        }
        m.outputs.push("csv", path_str(out));
        write_manifest(out, &m)?;
    }
    Ok(())
}

fn cmd_decode(a: DecodeArgs) -> Result<()> {
    let field = read_sfld(&a.input)?;
    let spec = DecodeSpec {
        nms_radius: a.nms_radius,
        threshold_mode: a.threshold_mode,
        threshold: a.threshold,
    };
    let text = if a.count {
        spec.validate()?;
        format!("count\n{}\n", count_by_integration(&field))
    } else {
        centers_to_csv(detect_local_maxima(&field, &spec)?.centers())
    };
    emit(a.output.as_deref(), &text)?;
    if let Some(out) = &a.output {
        let mut m = RunManifest::new("decode");
        m.params
            .push("nms_radius", spec.nms_radius)
            .push("threshold_mode", spec.threshold_mode)
            .push("threshold", spec.threshold)
            .push("count", a.count);
        m.inputs.push("field", path_str(&a.input));
        m.outputs.push(if a.count { "count" } else { "centers" }, path_str(out));
        write_manifest(out, &m)?;
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let threshold = match (a.threshold, a.dataset) {
        (Some(t), _) => t,
        (None, Some(d)) => d.radius(),
        (None, None) => unreachable!("clap requires one of --threshold / --dataset"),
    };
    let det = read_centers(&a.detections)?;
    let truth = read_centers(&a.truth)?;
    let r = score(&det, &truth, threshold)?;
    let csv = format!(
        "precision,recall,f1,f1_paper_literal,n_det,n_gt,threshold\n{},{},{},{},{},{},{}\n",
        r.precision, r.recall, r.f1_standard, r.f1_paper_literal, r.n_detections, r.n_truth, threshold
    );
    emit(a.output.as_deref(), &csv)?;
    if let Some(out) = &a.output {
        let mut m = RunManifest::new("eval");
        m.params.push("threshold", threshold);
        if let Some(d) = a.dataset {
            m.params.push("dataset", d);
        }
        m.inputs
            .push("detections", path_str(&a.detections))
            .push("truth", path_str(&a.truth));
        m.outputs.push("csv", path_str(out));
        write_manifest(out, &m)?;
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let spec = SceneSpec {
        height: a.height,
        width: a.width,
        n_cells: a.n_cells,
        min_spacing: a.min_spacing.unwrap_or(a.cell_radius),
        crowded_fraction: a.crowded_fraction,
        cell_radius: a.cell_radius,
        seed: a.seed,
    };
    let labels = generate_scene(&spec)?;
    write_text(&a.output, &centers_to_csv(labels.centers()))?;

    let mut m = RunManifest::new("synth");
    m.params
        .push("height", spec.height)
        .push("width", spec.width)
        .push("n_cells", spec.n_cells)
        .push("min_spacing", spec.min_spacing)
        .push("crowded_fraction", spec.crowded_fraction)
        .push("cell_radius", spec.cell_radius)
        .push("seed", spec.seed);
    m.outputs.push("centers", path_str(&a.output));
    m.seeds.push(spec.seed);
    write_manifest(&a.output, &m)
}

fn cmd_perturb(a: PerturbArgs) -> Result<()> {
    let spec = PerturbSpec {
        blur_sigma: a.blur_sigma,
        noise_sigma: a.noise_sigma,
        seed: a.seed,
    };
    let field = read_sfld(&a.input)?;
    write_sfld(&a.output, &perturb(&field, &spec)?)?;

    let mut m = RunManifest::new("perturb");
    m.params
        .push("blur_sigma", spec.blur_sigma)
        .push("noise_sigma", spec.noise_sigma)
        .push("seed", spec.seed);
    m.inputs.push("field", path_str(&a.input));
    m.outputs.push("field", path_str(&a.output));
    m.seeds.push(spec.seed);
    write_manifest(&a.output, &m)
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).map_err(|source| Error::Io {
        path: a.config.clone(),
        source,
    })?;
    let result = run_from_config(&text, &a.output)
        .with_context(|| format!("bench config {}", a.config.display()))?;
    eprintln!(
        "{} cells, {} schemes -> {} (manifest: {})",
        result.cells.len(),
        result.summary.len(),
        a.output.display(),
        a.output.join(MANIFEST_FILE).display()
    );
    Ok(())
}

fn cmd_export(a: ExportArgs) -> Result<()> {
    let field = read_sfld(&a.input)?;
    export_png16(&a.output, &field)?;
    Ok(())
}
