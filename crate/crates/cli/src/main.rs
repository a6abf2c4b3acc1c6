use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use smkl::data_io::{load_dense_matrix, load_labels};
use smkl::evaluation::{evaluate, EvalMode};
use smkl::kernel_bank::{build_bank, Recipe};
use smkl_cli::{run_experiment, ExperimentSpec};

#[derive(Parser)]
#[command(name = "smkl", version, about = "Self-weighted multiple kernel learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a spec file.
    Run {
        spec: PathBuf,
        /// Overrides `out_dir` from the spec.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Build a kernel bank and write it as one CSV per kernel.
    Kernels {
        data: PathBuf,
        /// clustering12, ssl7 or custom:<kind>,<kind>,...
        recipe: String,
        out_dir: PathBuf,
        #[arg(long, default_value_t = ',')]
        delimiter: char,
    },
    /// Accuracy and NMI of a label file against ground truth.
    Eval {
        pred: PathBuf,
        truth: PathBuf,
        #[arg(long, value_enum, default_value_t = EvalArg::Clustering)]
        mode: EvalArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalArg {
    Clustering,
    Ssl,
}

fn count_lines(path: &Path) -> smkl::Result<usize> {
    let text = fs::read_to_string(path).map_err(|e| smkl::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut n = text.lines().count();
    if text.lines().last().is_some_and(|l| l.trim().is_empty()) {
        n -= 1;
    }
    Ok(n)
}

fn eval(pred: &Path, truth: &Path, mode: EvalArg) -> smkl::Result<()> {
    let n = count_lines(pred)?;
    let pred = load_labels(pred, n)?;
    let truth = load_labels(truth, n)?;
    if let Some(i) = pred.classes().iter().position(Option::is_none) {
        return Err(smkl::Error::InvalidLabel { line: i + 1, label: -1 });
    }
    let p: Vec<usize> = pred.classes().into_iter().map(|c| c.unwrap_or(0)).collect();
    let t: Vec<usize> = truth.classes().iter().map(|c| c.unwrap_or(usize::MAX)).collect();
    let known: Vec<usize> = (0..n).filter(|&i| truth.class_of(i).is_some()).collect();
    let mode = match mode {
        EvalArg::Clustering => EvalMode::Clustering,
        EvalArg::Ssl => EvalMode::Ssl,
    };
    let report = evaluate(&p, &t, Some(&known), mode)?;
    println!("samples={}", report.n);
    println!("acc={:.6}", report.acc);
    println!("nmi={:.6}", report.nmi);
    Ok(())
}

fn kernels(data: &Path, recipe: &str, out_dir: &Path, delimiter: char) -> smkl::Result<()> {
    let recipe: Recipe = recipe.parse()?;
    let x = load_dense_matrix(data, delimiter)?;
    let bank = build_bank(&x, &recipe)?;
    bank.save(out_dir)?;
    println!("wrote {} kernels to {}", bank.len(), out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run { spec, out_dir } => ExperimentSpec::load(&spec).and_then(|mut s| {
            if let Some(dir) = out_dir {
                s.out_dir = dir;
            }
            run_experiment(&s)
        }),
        Command::Kernels {
            data,
            recipe,
            out_dir,
            delimiter,
        } => {
            return match kernels(&data, &recipe, &out_dir, delimiter) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Eval { pred, truth, mode } => {
            return match eval(&pred, &truth, mode) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    };
    match outcome {
        Ok(out) if out.failed == 0 => {
            println!("{} points, report in {}", out.points, out.out_dir.display());
            ExitCode::SUCCESS
        }
        Ok(out) => {
            eprintln!(
                "{} of {} points failed, see {}",
                out.failed,
                out.points,
                out.out_dir.join("report.txt").display()
            );
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
