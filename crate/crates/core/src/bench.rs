//! End-to-end benchmark: for every (scene seed, scheme, perturbation) cell,
//! encode the synthetic labels, perturb the coding, decode it and score the
//! recovered centers, alongside entropy / R / R5 of the clean coding.
//!
//! Fields are rounded through `f32` after encoding and after perturbation,
//! the same precision the `SFLD` files carry, so a cell can be replayed
//! exactly with the individual `encode`, `perturb`, `decode` and `eval`
//! subcommands.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::decoder::{count_by_integration, detect_local_maxima, DecodeSpec};
use crate::encoders::{encode, CodingSpec, Scheme};
use crate::error::{Error, Result};
use crate::evaluator::score;
use crate::io::write_text;
use crate::manifest::{join, KvDocument, RunManifest, Section, TOOL_NAME, TOOL_VERSION};
use crate::metrics::{l2_distance, CodingQuality, DEFAULT_BIN_COUNT, DEFAULT_DILATION_DIAMETER};
use crate::synth::{generate_scene, perturb, PerturbSpec, SceneSpec};

pub const CELLS_FILE: &str = "cells.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Fully resolved benchmark configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Scene template; its `seed` is replaced by each entry of `seeds`.
    pub scene: SceneSpec,
    pub seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
    /// Coding parameters shared by all schemes.
    pub coding: CodingSpec,
    pub blur_sigmas: Vec<f64>,
    pub noise_sigmas: Vec<f64>,
    pub perturb_seed: u64,
    pub decode: DecodeSpec,
    pub match_threshold: f64,
    pub bin_count: usize,
    pub dilation_diameter: f64,
}

impl BenchConfig {
    /// A crowded Vgg-like sweep with all five schemes.
    pub fn default_for_radius(cell_radius: f64) -> Self {
        Self {
            scene: SceneSpec {
                height: 128,
                width: 128,
                n_cells: 40,
                min_spacing: cell_radius,
                crowded_fraction: 0.5,
                cell_radius,
                seed: 0,
            },
            seeds: (1..=5).collect(),
            schemes: Scheme::ALL.to_vec(),
            coding: CodingSpec::for_cell_radius(Scheme::Dot, cell_radius),
            blur_sigmas: vec![0.5, 1.0, 2.0],
            noise_sigmas: vec![0.01, 0.05],
            perturb_seed: 7,
            decode: DecodeSpec::for_cell_radius(cell_radius),
            match_threshold: cell_radius,
            bin_count: DEFAULT_BIN_COUNT,
            dilation_diameter: DEFAULT_DILATION_DIAMETER,
        }
    }

    /// Parses a config; keys that are absent fall back to defaults derived
    /// from `[scene] cell_radius`.
    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDocument::parse(text)?;
        for section in &doc.sections {
            let known: &[&str] = match section.name.as_str() {
                "scene" => &[
                    "height",
                    "width",
                    "n_cells",
                    "min_spacing",
                    "crowded_fraction",
                    "cell_radius",
                    "seeds",
                ],
                "coding" => &[
                    "schemes",
                    "alpha",
                    "radius_cutoff",
                    "sigma",
                    "kernel_size",
                    "normalization",
                ],
                "perturb" => &["blur_sigma", "noise_sigma", "seed"],
                "decode" => &["nms_radius", "threshold_mode", "threshold"],
                "eval" => &["threshold"],
                "metrics" => &["bins", "dilate"],
                // Written by `bench` into its manifest; informational only.
                "run" => continue,
                other => {
                    let line = section.entries.first().map_or(0, |e| e.line);
                    return Err(Error::Config {
                        line,
                        message: format!("unknown section [{other}]"),
                    });
                }
            };
            if let Some(e) = section.entries.iter().find(|e| !known.contains(&e.key.as_str())) {
                return Err(Error::Config {
                    line: e.line,
                    message: format!("unknown key `{}` in [{}]", e.key, section.name),
                });
            }
        }

        let empty = Section::default();
        let sec = |name: &str| doc.section(name).unwrap_or(&empty);
        let scene = sec("scene");
        let cell_radius: f64 = get(scene, "cell_radius")?.unwrap_or(6.0);
        let mut cfg = Self::default_for_radius(cell_radius);

        set(&mut cfg.scene.height, scene, "height")?;
        set(&mut cfg.scene.width, scene, "width")?;
        set(&mut cfg.scene.n_cells, scene, "n_cells")?;
        set(&mut cfg.scene.min_spacing, scene, "min_spacing")?;
        set(&mut cfg.scene.crowded_fraction, scene, "crowded_fraction")?;
        if let Some(e) = scene.get("seeds") {
            cfg.seeds = parse_seeds(&e.value).map_err(|m| config_err(e.line, m))?;
        }

        let coding = sec("coding");
        if let Some(e) = coding.get("schemes") {
            cfg.schemes = parse_list(e)?;
        }
        set(&mut cfg.coding.alpha, coding, "alpha")?;
        set(&mut cfg.coding.radius_cutoff, coding, "radius_cutoff")?;
        set(&mut cfg.coding.sigma, coding, "sigma")?;
        set(&mut cfg.coding.kernel_size, coding, "kernel_size")?;
        set(&mut cfg.coding.normalization, coding, "normalization")?;

        let pert = sec("perturb");
        if let Some(e) = pert.get("blur_sigma") {
            cfg.blur_sigmas = parse_list(e)?;
        }
        if let Some(e) = pert.get("noise_sigma") {
            cfg.noise_sigmas = parse_list(e)?;
        }
        set(&mut cfg.perturb_seed, pert, "seed")?;

        let dec = sec("decode");
        set(&mut cfg.decode.nms_radius, dec, "nms_radius")?;
        set(&mut cfg.decode.threshold_mode, dec, "threshold_mode")?;
        set(&mut cfg.decode.threshold, dec, "threshold")?;

        set(&mut cfg.match_threshold, sec("eval"), "threshold")?;
        let met = sec("metrics");
        set(&mut cfg.bin_count, met, "bins")?;
        set(&mut cfg.dilation_diameter, met, "dilate")?;

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Err(Error::Config { line: 0, message });
        if self.seeds.is_empty() {
            return fail("[scene] seeds must not be empty".into());
        }
        if self.schemes.is_empty() {
            return fail("[coding] schemes must not be empty".into());
        }
        if self.blur_sigmas.is_empty() || self.noise_sigmas.is_empty() {
            return fail("[perturb] blur_sigma and noise_sigma need at least one value".into());
        }
        if !(self.match_threshold > 0.0) {
            return fail(format!("[eval] threshold must be > 0, got {}", self.match_threshold));
        }
        if self.bin_count < 2 {
            return fail(format!("[metrics] bins must be >= 2, got {}", self.bin_count));
        }
        if !(self.dilation_diameter >= 1.0) {
            return fail(format!("[metrics] dilate must be >= 1, got {}", self.dilation_diameter));
        }
        self.scene.validate()?;
        self.coding.validate()?;
        self.decode.validate()?;
        for &blur_sigma in &self.blur_sigmas {
            for &noise_sigma in &self.noise_sigmas {
                PerturbSpec {
                    blur_sigma,
                    noise_sigma,
                    seed: 0,
                }
                .validate()?;
            }
        }
        Ok(())
    }

    /// The resolved config, every default spelled out.
    pub fn to_document(&self) -> KvDocument {
        let mut scene = Section::new("scene");
        scene
            .push("height", self.scene.height)
            .push("width", self.scene.width)
            .push("n_cells", self.scene.n_cells)
            .push("min_spacing", self.scene.min_spacing)
            .push("crowded_fraction", self.scene.crowded_fraction)
            .push("cell_radius", self.scene.cell_radius)
            .push("seeds", join(&self.seeds));
        let mut coding = Section::new("coding");
        coding
            .push("schemes", join(&self.schemes))
            .push("alpha", self.coding.alpha)
            .push("radius_cutoff", self.coding.radius_cutoff)
            .push("sigma", self.coding.sigma)
            .push("kernel_size", self.coding.kernel_size)
            .push("normalization", self.coding.normalization);
        let mut pert = Section::new("perturb");
        pert.push("blur_sigma", join(&self.blur_sigmas))
            .push("noise_sigma", join(&self.noise_sigmas))
            .push("seed", self.perturb_seed);
        let mut dec = Section::new("decode");
        dec.push("nms_radius", self.decode.nms_radius)
            .push("threshold_mode", self.decode.threshold_mode)
            .push("threshold", self.decode.threshold);
        let mut eval = Section::new("eval");
        eval.push("threshold", self.match_threshold);
        let mut met = Section::new("metrics");
        met.push("bins", self.bin_count)
            .push("dilate", self.dilation_diameter);
        KvDocument {
            sections: vec![scene, coding, pert, dec, eval, met],
        }
    }

    /// Manifest text; it parses back into the same config.
    pub fn manifest_text(&self, output_dir: &Path) -> String {
        let mut run = RunManifest::new("bench");
        run.seeds = self.seeds.clone();
        run.seeds.push(self.perturb_seed);
        let mut doc = self.to_document();
        doc.sections.insert(0, run.run_section());
        format!(
            "# {TOOL_NAME} {TOOL_VERSION} bench manifest\n\
             # outputs: {out}/{CELLS_FILE}, {out}/{SUMMARY_FILE}\n\
             # reproduce: {TOOL_NAME} bench <this file> -o <dir>\n{}",
            doc.render(),
            out = output_dir.display()
        )
    }

    /// Noise seed for one scene: shared by every scheme and perturbation
    /// level of that scene so schemes see the same noise realization.
    pub fn perturb_seed_for(&self, scene_seed: u64) -> u64 {
        self.perturb_seed ^ scene_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn get<T: FromStr>(section: &Section, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    section
        .get(key)
        .map(|e| {
            e.value
                .parse::<T>()
                .map_err(|err| config_err(e.line, format!("`{key}` = `{}`: {err}", e.value)))
        })
        .transpose()
}

fn set<T: FromStr>(slot: &mut T, section: &Section, key: &str) -> Result<()>
where
    T::Err: std::fmt::Display,
{
    if let Some(v) = get(section, key)? {
        *slot = v;
    }
    Ok(())
}

fn parse_list<T: FromStr>(e: &crate::manifest::Entry) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    e.value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|err| config_err(e.line, format!("`{}`: bad item `{s}`: {err}", e.key)))
        })
        .collect()
}

/// Comma-separated seeds; `a..=b` expands to an inclusive range.
fn parse_seeds(text: &str) -> std::result::Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = item.split_once("..=") {
            let (a, b): (u64, u64) = (
                a.trim().parse().map_err(|e| format!("bad seed range `{item}`: {e}"))?,
                b.trim().parse().map_err(|e| format!("bad seed range `{item}`: {e}"))?,
            );
            if a > b {
                return Err(format!("empty seed range `{item}`"));
            }
            seeds.extend(a..=b);
        } else {
            seeds.push(item.parse().map_err(|e| format!("bad seed `{item}`: {e}"))?);
        }
    }
    Ok(seeds)
}

/// One benchmark cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRow {
    pub scene_seed: u64,
    pub scheme: Scheme,
    pub blur_sigma: f64,
    pub noise_sigma: f64,
    pub perturb_seed: u64,
    pub n_truth: usize,
    pub n_detections: usize,
    pub count: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f1_paper_literal: f64,
    /// Clean-coding quality; NaN where reversibility is undefined (empty scene).
    pub entropy_bits: f64,
    pub reversibility: f64,
    pub reversibility_dilated: f64,
    pub l2: f64,
}

/// Per-scheme aggregate over all of its cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub n: usize,
    pub f1: MeanStd,
    pub f1_paper_literal: MeanStd,
    pub count_abs_error: MeanStd,
    pub entropy_bits: MeanStd,
    pub reversibility: MeanStd,
    pub reversibility_dilated: MeanStd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n - 1); zero for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub cells: Vec<CellRow>,
    pub summary: Vec<SummaryRow>,
}

/// Runs one cell exactly as the chained subcommands would.
pub fn run_cell(
    config: &BenchConfig,
    scene_seed: u64,
    scheme: Scheme,
    blur_sigma: f64,
    noise_sigma: f64,
) -> Result<CellRow> {
    let labels = generate_scene(&SceneSpec {
        seed: scene_seed,
        ..config.scene
    })?;
    let clean = encode(&labels, &config.coding.with_scheme(scheme))?.quantize_f32();
    let quality = match CodingQuality::measure(
        &clean,
        &labels,
        config.bin_count,
        config.dilation_diameter,
    ) {
        Ok(q) => (q.entropy_bits, q.reversibility, q.reversibility_dilated),
        Err(Error::ZeroMass) => (
            crate::metrics::coding_entropy(&clean, config.bin_count),
            f64::NAN,
            f64::NAN,
        ),
        Err(e) => return Err(e),
    };
    let perturb_seed = config.perturb_seed_for(scene_seed);
    let noisy = perturb(
        &clean,
        &PerturbSpec {
            blur_sigma,
            noise_sigma,
            seed: perturb_seed,
        },
    )?
    .quantize_f32();
    let detections = detect_local_maxima(&noisy, &config.decode)?;
    let report = score(detections.centers(), labels.centers(), config.match_threshold)?;

    Ok(CellRow {
        scene_seed,
        scheme,
        blur_sigma,
        noise_sigma,
        perturb_seed,
        n_truth: labels.len(),
        n_detections: detections.len(),
        count: count_by_integration(&noisy),
        precision: report.precision,
        recall: report.recall,
        f1: report.f1_standard,
        f1_paper_literal: report.f1_paper_literal,
        entropy_bits: quality.0,
        reversibility: quality.1,
        reversibility_dilated: quality.2,
        l2: l2_distance(&noisy, &clean)?,
    })
}

/// Runs every cell in canonical order: seeds, then schemes, then blur, then
/// noise, each in config order.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchResult> {
    config.validate()?;
    let mut cells = Vec::new();
    for &seed in &config.seeds {
        for &scheme in &config.schemes {
            for &blur in &config.blur_sigmas {
                for &noise in &config.noise_sigmas {
                    let row = run_cell(config, seed, scheme, blur, noise).map_err(|e| {
                        Error::BenchCell {
                            cell: format!(
                                "seed={seed} scheme={scheme} blur_sigma={blur} noise_sigma={noise}"
                            ),
                            source: Box::new(e),
                        }
                    })?;
                    cells.push(row);
                }
            }
        }
    }

    let summary = config
        .schemes
        .iter()
        .map(|&scheme| {
            let rows: Vec<&CellRow> = cells.iter().filter(|r| r.scheme == scheme).collect();
            let stat = |f: fn(&CellRow) -> f64| MeanStd::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
            SummaryRow {
                scheme,
                n: rows.len(),
                f1: stat(|r| r.f1),
                f1_paper_literal: stat(|r| r.f1_paper_literal),
                count_abs_error: stat(|r| (r.count - r.n_truth as f64).abs()),
                entropy_bits: stat(|r| r.entropy_bits),
                reversibility: stat(|r| r.reversibility),
                reversibility_dilated: stat(|r| r.reversibility_dilated),
            }
        })
        .collect();

    Ok(BenchResult { cells, summary })
}

pub const CELLS_HEADER: &str = "seed,scheme,blur_sigma,noise_sigma,perturb_seed,n_gt,n_det,count,precision,recall,f1,f1_paper_literal,entropy_bits,R,R5,l2";
pub const SUMMARY_HEADER: &str = "scheme,n,f1_mean,f1_std,f1_paper_literal_mean,f1_paper_literal_std,count_abs_err_mean,count_abs_err_std,entropy_bits_mean,entropy_bits_std,R_mean,R_std,R5_mean,R5_std";

impl BenchResult {
    pub fn cells_csv(&self) -> String {
        let mut out = format!("{CELLS_HEADER}\n");
        for r in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.scene_seed,
                r.scheme,
                r.blur_sigma,
                r.noise_sigma,
                r.perturb_seed,
                r.n_truth,
                r.n_detections,
                r.count,
                r.precision,
                r.recall,
                r.f1,
                r.f1_paper_literal,
                r.entropy_bits,
                r.reversibility,
                r.reversibility_dilated,
                r.l2
            );
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{SUMMARY_HEADER}\n");
        for s in &self.summary {
            let _ = write!(out, "{},{}", s.scheme, s.n);
            for m in [
                s.f1,
                s.f1_paper_literal,
                s.count_abs_error,
                s.entropy_bits,
                s.reversibility,
                s.reversibility_dilated,
            ] {
                let _ = write!(out, ",{},{}", m.mean, m.std);
            }
            out.push('\n');
        }
        out
    }

    /// Writes `cells.csv`, `summary.csv` and `manifest.txt` into `dir`.
    pub fn write(&self, config: &BenchConfig, dir: &Path) -> Result<()> {
        write_text(&dir.join(CELLS_FILE), &self.cells_csv())?;
        write_text(&dir.join(SUMMARY_FILE), &self.summary_csv())?;
        write_text(&dir.join(MANIFEST_FILE), &config.manifest_text(dir))
    }
}

/// Parses `config_text`, runs the sweep and writes all outputs to `dir`.
pub fn run_from_config(config_text: &str, dir: &Path) -> Result<BenchResult> {
    let config = BenchConfig::parse(config_text)?;
    let result = run_benchmark(&config)?;
    result.write(&config, dir)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::ThresholdMode;
    use crate::encoders::{Normalization, DEFAULT_ALPHA};

    fn small() -> BenchConfig {
        let mut cfg = BenchConfig::default_for_radius(5.0);
        cfg.scene.height = 48;
        cfg.scene.width = 48;
        cfg.scene.n_cells = 8;
        cfg.seeds = vec![1, 2];
        cfg.blur_sigmas = vec![0.0];
        cfg.noise_sigmas = vec![0.0];
        cfg
    }

    #[test]
    fn config_round_trips_through_its_document() {
        let cfg = small();
        let text = cfg.to_document().render();
        assert_eq!(BenchConfig::parse(&text).unwrap(), cfg);
        let manifest = cfg.manifest_text(Path::new("out"));
        assert_eq!(BenchConfig::parse(&manifest).unwrap(), cfg);
    }

    #[test]
    fn defaults_follow_cell_radius() {
        let cfg = BenchConfig::parse("[scene]\ncell_radius = 4\n").unwrap();
        assert_eq!(cfg.coding.radius_cutoff, 8.0);
        assert_eq!(cfg.coding.sigma, 2.0);
        assert_eq!(cfg.coding.kernel_size, 9);
        assert_eq!(cfg.coding.alpha, DEFAULT_ALPHA);
        assert_eq!(cfg.coding.normalization, Normalization::UnitMass);
        assert_eq!(cfg.decode.nms_radius, 4.0);
        assert_eq!(cfg.decode.threshold_mode, ThresholdMode::RelativeToMax);
        assert_eq!(cfg.match_threshold, 4.0);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            BenchConfig::parse("[scene]\nhieght = 3\n"),
            Err(Error::Config { line: 2, .. })
        ));
        assert!(matches!(
            BenchConfig::parse("[scenes]\nheight = 3\n"),
            Err(Error::Config { line: 2, .. })
        ));
        assert!(BenchConfig::parse("[coding]\nschemes = dot,foo\n").is_err());
        assert!(BenchConfig::parse("[scene]\nseeds = 5..=2\n").is_err());
        assert!(BenchConfig::parse("[scene]\nseeds =\n").is_err());
    }

    #[test]
    fn seed_ranges_expand() {
        assert_eq!(parse_seeds("1..=3, 9").unwrap(), vec![1, 2, 3, 9]);
    }

    #[test]
    fn summary_has_one_row_per_scheme() {
        let mut cfg = small();
        cfg.schemes = vec![Scheme::Repel, Scheme::Dot];
        cfg.blur_sigmas = vec![0.0, 1.0];
        let res = run_benchmark(&cfg).unwrap();
        assert_eq!(res.cells.len(), 2 * 2 * 2);
        let names: Vec<Scheme> = res.summary.iter().map(|s| s.scheme).collect();
        assert_eq!(names, vec![Scheme::Repel, Scheme::Dot]);
        assert!(res.summary.iter().all(|s| s.n == 4));
    }

    #[test]
    fn unsatisfiable_scene_names_the_cell() {
        let mut cfg = small();
        cfg.scene.n_cells = 500;
        match run_benchmark(&cfg) {
            Err(Error::BenchCell { cell, source }) => {
                assert!(cell.starts_with("seed=1 scheme=dot"), "{cell}");
                assert!(matches!(*source, Error::Placement { .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[1.0, 2.0, 3.0]);
        assert_eq!(m.mean, 2.0);
        assert_eq!(m.std, 1.0);
        assert_eq!(MeanStd::of(&[4.0]).std, 0.0);
    }
}
