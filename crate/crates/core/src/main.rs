use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use unida_core::harness::{
    emit_plots, make_datasets, run_alpha_sensitivity, run_noise_tolerance_sweep, run_spcr_robustness_sweep,
    run_ssl_ablation, run_toy_seeds, train_unida, write_eval_rows, write_noise_rows, write_step_log,
    write_toy_points, write_toy_summary, EvalRow, ExperimentConfig, PlotKind,
};
use unida_core::synthdata::write_dataset_csv;
use unida_core::Error;

#[derive(Parser)]
#[command(name = "unida", version, about = "Partial domain alignment and SSL experiments on synthetic data")]
struct Cli {
    /// TOML experiment config; defaults apply to absent keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the configured source and target sets to dataset.csv.
    Generate {
        /// Write target labels as -1.
        #[arg(long)]
        hide_target_labels: bool,
    },
    /// One training run: steps.csv and eval.csv.
    Train,
    /// Toy study for every entry of `toy_source_private`.
    Toy,
    /// Oracle weights with flip noise across SPCR values.
    SweepNoise,
    /// SSL on all target data, on common data only, and without SSL.
    AblateSsl,
    /// H-score over `alpha_values`.
    SweepAlpha,
    /// Alignment with and without SSL across SPCR values.
    SweepSpcr,
    /// Render SVG plots from a CSV written by another subcommand.
    Plot {
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Noise,
    Spcr,
    Alpha,
    Ablation,
    Uncertainty,
    Losses,
    Toy,
}

impl From<KindArg> for PlotKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Noise => PlotKind::NoiseCurves,
            KindArg::Spcr => PlotKind::SpcrCurves,
            KindArg::Alpha => PlotKind::AlphaCurve,
            KindArg::Ablation => PlotKind::AblationCurves,
            KindArg::Uncertainty => PlotKind::UncertaintyNoise,
            KindArg::Losses => PlotKind::Losses,
            KindArg::Toy => PlotKind::ToyScatter,
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(BufWriter::new(f))
}

fn write_rows(dir: &Path, name: &str, rows: &[EvalRow]) -> Result<()> {
    write_eval_rows(create(dir, name)?, rows)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Cmd::Plot { input, kind } = &cli.cmd {
        let f = File::open(input).with_context(|| format!("opening {}", input.display()))?;
        let files = emit_plots(f, kind.map(PlotKind::from))?;
        if files.is_empty() {
            println!("nothing to plot");
            return Ok(());
        }
        fs::create_dir_all(&cli.out)?;
        for p in files {
            let path = cli.out.join(&p.name);
            fs::write(&path, p.svg).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        return Ok(());
    }

    let cfg = load_config(cli)?;
    let out = &cli.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("config.toml"), cfg.to_toml_string())?;

    match &cli.cmd {
        Cmd::Generate { hide_target_labels } => {
            let (s, t) = make_datasets(&cfg)?;
            write_dataset_csv(create(out, "dataset.csv")?, &s, &t, *hide_target_labels)?;
        }
        Cmd::Train => {
            let rec = train_unida(&cfg)?;
            write_step_log(create(out, "steps.csv")?, &rec.log)?;
            write_rows(out, "eval.csv", &[EvalRow::from_record(&rec, &cfg, "train")])?;
            let e = &rec.eval;
            println!(
                "acc_common {:.4}  acc_private {}  h_score {:.4}  misclass_sp {:.4}  ({:.1}s)",
                e.acc_common,
                e.acc_private.map_or("n/a".to_string(), |a| format!("{a:.4}")),
                e.h_score,
                e.misclass_into_source_private,
                rec.wall_time_secs
            );
        }
        Cmd::Toy => {
            let train = cfg.toy_train_config();
            let mut all = Vec::new();
            for &sp in &cfg.toy_source_private {
                let outs = run_toy_seeds(&cfg.toy_config(sp)?, &train, cfg.seed, cfg.seeds)?;
                for o in &outs {
                    println!(
                        "SPCR {:.0} seed {:>20}: alignment L_s {:.4}, L_s + L_ssl {:.4}",
                        o.spcr, o.seed, o.alignment_sup, o.alignment_ssl
                    );
                }
                all.extend(outs);
            }
            write_toy_points(create(out, "toy_points.csv")?, &all)?;
            write_toy_summary(create(out, "toy_summary.csv")?, &all)?;
        }
        Cmd::SweepNoise => {
            let sw = run_noise_tolerance_sweep(&cfg)?;
            write_rows(out, "noise_eval.csv", &sw.rows)?;
            write_noise_rows(create(out, "noise_uncertainty.csv")?, &sw.noise_rows)?;
        }
        Cmd::AblateSsl => write_rows(out, "ssl_ablation.csv", &run_ssl_ablation(&cfg)?)?,
        Cmd::SweepAlpha => write_rows(out, "alpha.csv", &run_alpha_sensitivity(&cfg)?)?,
        Cmd::SweepSpcr => write_rows(out, "spcr.csv", &run_spcr_robustness_sweep(&cfg)?)?,
        Cmd::Plot { .. } => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::NumericAbort { .. }) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
