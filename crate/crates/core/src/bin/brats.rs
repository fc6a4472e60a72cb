use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use brats_toolkit::batch::{run_evaluate, BatchConfig, BatchMode};
use brats_toolkit::fusion::{average_fusion, staple_fusion, StapleParams};
use brats_toolkit::metrics::{EvalMode, MatchParams};
use brats_toolkit::morphology::Connectivity;
use brats_toolkit::nifti::{read_label, read_region_prob, read_scalar, write_label, write_region_prob, write_scalar};
use brats_toolkit::phantom::PhantomDocument;
use brats_toolkit::postprocess::{apply_thresholds, legacy_et_to_ncr, ThresholdScope, ThresholdSpec};
use brats_toolkit::ranking::{rank_solutions_with, ranking_rows, write_ranking_csv, MetricTable, RankNormalization};
use brats_toolkit::regions::BinaryMask;
use brats_toolkit::synthprep::{
    build_corruption_field, corrupt_crop, crop_labels, crop_scalar, place_label, tumour_geometry, CROP_SIZE,
};
use brats_toolkit::Error;

#[derive(Parser)]
#[command(name = "brats", version, about = "Tumour segmentation evaluation, fusion and synthetic-data preparation")]
struct Cli {
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Seed for randomized subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConnArg {
    #[value(name = "6")]
    Face6,
    #[value(name = "26")]
    Full26,
}

impl From<ConnArg> for Connectivity {
    fn from(c: ConnArg) -> Self {
        match c {
            ConnArg::Face6 => Connectivity::Face6,
            ConnArg::Full26 => Connectivity::Full26,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Legacy,
    Lesionwise,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Component,
    Region,
}

#[derive(Clone, Copy, ValueEnum)]
enum FuseMethod {
    Mean,
    Staple,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    ZeroToOne,
    OverParticipants,
}

#[derive(clap::Args)]
struct ThresholdArgs {
    #[arg(long, default_value_t = 0)]
    wt: usize,
    #[arg(long, default_value_t = 0)]
    tc: usize,
    #[arg(long, default_value_t = 0)]
    et: usize,
    #[arg(long, value_enum, default_value = "component")]
    scope: ScopeArg,
    #[arg(long, value_enum, default_value = "26")]
    connectivity: ConnArg,
}

impl ThresholdArgs {
    fn spec(&self) -> ThresholdSpec {
        ThresholdSpec {
            wt: self.wt,
            tc: self.tc,
            et: self.et,
            scope: match self.scope {
                ScopeArg::Component => ThresholdScope::PerComponent,
                ScopeArg::Region => ThresholdScope::WholeRegion,
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Score every prediction against its ground truth and write a metrics CSV.
    Evaluate {
        #[arg(long)]
        gt_dir: PathBuf,
        #[arg(long)]
        pred_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        mode: ModeArg,
        /// Dilation steps used when matching lesions.
        #[arg(long, default_value_t = 3)]
        dilation: usize,
        /// Ground-truth lesions smaller than this are not scored.
        #[arg(long, default_value_t = 0)]
        min_lesion_size: usize,
        #[command(flatten)]
        thresholds: ThresholdArgs,
    },
    /// Rank solutions from their metrics CSVs (one file per solution).
    Rank {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Evaluation mode to rank on when the CSVs contain both.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum, default_value = "zero-to-one")]
        normalization: NormArg,
    },
    /// Fuse model outputs by probability averaging or STAPLE.
    Fuse {
        #[arg(long, value_enum)]
        method: FuseMethod,
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the averaged probabilities (mean method only).
        #[arg(long)]
        out_probs: Option<PathBuf>,
    },
    /// Suppress small predicted lesions.
    Postprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        /// Apply the whole-region ET-to-NCR rule with this threshold afterwards.
        #[arg(long)]
        legacy_et: Option<usize>,
    },
    /// Build the noise-corrupted 96³ crop around the tumour.
    Corrupt {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        label: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Place a tumour label crop into healthy brain.
    Place {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        brain_mask: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        max_attempts: usize,
    },
    /// Write gt/pred phantom pairs described by a TOML document.
    Phantom {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::Format { .. } | Error::UnsupportedDatatype { .. } | Error::CompressedInput(_) => 2,
                _ => 1,
            })
        }
    }
}

fn run(cli: Cli) -> brats_toolkit::Result<u8> {
    if cli.workers == 0 {
        return Err(Error::Config("--workers must be >= 1".into()));
    }
    match cli.command {
        Command::Evaluate { gt_dir, pred_dir, out, mode, dilation, min_lesion_size, thresholds } => {
            let mut config = BatchConfig::new(gt_dir, pred_dir, out);
            config.mode = match mode {
                ModeArg::Legacy => BatchMode::Legacy,
                ModeArg::Lesionwise => BatchMode::LesionWise,
                ModeArg::Both => BatchMode::Both,
            };
            config.match_params = MatchParams {
                dilation_iterations: dilation,
                connectivity: thresholds.connectivity.into(),
                min_gt_lesion_size: min_lesion_size,
            };
            let spec = thresholds.spec();
            config.thresholds = (!spec.is_noop()).then_some(spec);
            config.threshold_connectivity = thresholds.connectivity.into();
            config.workers = cli.workers;
            config.master_seed = cli.seed;
            let report = run_evaluate(&config)?;
            for s in &report.skipped {
                eprintln!("skipped {}: {}", s.case_id, s.reason);
            }
            if !report.skipped.is_empty() {
                eprintln!("{} case(s) failed", report.skipped.len());
            }
            Ok(report.exit_code() as u8)
        }
        Command::Rank { inputs, out, mode, normalization } => {
            let mode = mode.map(|m| match m {
                ModeArg::Legacy => Ok(EvalMode::Legacy),
                ModeArg::Lesionwise => Ok(EvalMode::LesionWise),
                ModeArg::Both => Err(Error::Config("--mode for ranking must be legacy or lesionwise".into())),
            });
            let mode = mode.transpose()?;
            let table = MetricTable::from_csv_files(&inputs, mode)?;
            let norm = match normalization {
                NormArg::ZeroToOne => RankNormalization::ZeroToOne,
                NormArg::OverParticipants => RankNormalization::OverParticipants,
            };
            let result = rank_solutions_with(&table, norm)?;
            write_ranking_csv(std::fs::File::create(out)?, &ranking_rows(&table, &result))?;
            Ok(0)
        }
        Command::Fuse { method, inputs, out, out_probs } => {
            match method {
                FuseMethod::Mean => {
                    let maps = inputs.iter().map(read_region_prob).collect::<Result<Vec<_>, _>>()?;
                    let (probs, labels) = average_fusion(&maps)?;
                    write_label(&labels, out)?;
                    if let Some(p) = out_probs {
                        write_region_prob(&probs, p)?;
                    }
                }
                FuseMethod::Staple => {
                    let labels = inputs
                        .iter()
                        .map(|p| read_label(p).map(|r| r.volume))
                        .collect::<Result<Vec<_>, _>>()?;
                    write_label(&staple_fusion(&labels, &StapleParams::default())?, out)?;
                }
            }
            Ok(0)
        }
        Command::Postprocess { input, out, thresholds, legacy_et } => {
            let pred = read_label(input)?.volume;
            let mut result = apply_thresholds(&pred, &thresholds.spec(), thresholds.connectivity.into());
            if let Some(t) = legacy_et {
                result = legacy_et_to_ncr(&result, t);
            }
            write_label(&result, out)?;
            Ok(0)
        }
        Command::Corrupt { image, label, out } => {
            let image = read_scalar(image)?;
            let labels = read_label(label)?.volume;
            image.geometry().ensure_compatible(labels.geometry())?;
            let tumour = tumour_geometry(&labels)?;
            let image_crop = crop_scalar(&image, tumour.center, CROP_SIZE)?;
            let label_crop = crop_labels(&labels, tumour.center, CROP_SIZE)?;
            let field = build_corruption_field(&tumour, image_crop.geometry())?;
            write_scalar(&corrupt_crop(&image_crop, &label_crop, &field, cli.seed)?, out)?;
            Ok(0)
        }
        Command::Place { target, brain_mask, candidate, out, max_attempts } => {
            let target = read_label(target)?.volume;
            let brain = read_label(brain_mask)?.volume;
            let brain = BinaryMask::new(brain.geometry().clone(), brain.voxels().iter().map(|&v| v != 0).collect())?;
            let candidate = read_label(candidate)?.volume;
            let placement = place_label(&target, &brain, &candidate, cli.seed, max_attempts)?;
            write_label(&placement.placed, out)?;
            println!("{} {} {}", placement.crop_origin[0], placement.crop_origin[1], placement.crop_origin[2]);
            Ok(0)
        }
        Command::Phantom { spec, out } => {
            PhantomDocument::load(spec)?.write_corpus(out)?;
            Ok(0)
        }
    }
}
