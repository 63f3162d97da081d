use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use fastce::bench::{
    enhance, run_sweep, summarize, trend_warnings, write_records_csv, write_summary_csv, Algorithm,
    EnhanceParams, SweepConfig,
};
use fastce::imageio::{read_image, write_image, Image};
use fastce::sampling::{quantization_shift, BlockGrid};
use fastce::smirank::{fsmirank_trace, smirank_trace};
use fastce::synth::{generate_synthetic, SyntheticKind};
use fastce::verify::{collect_images, verify_corpus, Kernels};
use fastce::{bench, Error};

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "fastce",
    version,
    about = "Accelerated histogram-based contrast enhancement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enhance one PGM/PPM image.
    Enhance(EnhanceArgs),
    /// Time naive and fast algorithms over an (s, ng) grid.
    Sweep(SweepArgs),
    /// Check naive/fast equivalence and pipeline invariants over a corpus.
    Verify(VerifyArgs),
    /// Write a synthetic test image.
    Gen(GenArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// Spatial sampling step.
    #[arg(long = "s", default_value_t = fastce::DEFAULT_STEP)]
    s: usize,
    /// Histogram bin count (power of two, at most 256).
    #[arg(long = "ng", default_value_t = fastce::DEFAULT_BINS)]
    ng: usize,
    /// Damping factor for the ranking algorithms.
    #[arg(long, default_value_t = fastce::DEFAULT_ALPHA)]
    alpha: f64,
    /// Block grid as <blocks_y>x<blocks_x>.
    #[arg(long, default_value = "8x8")]
    grid: BlockGrid,
}

#[derive(Args)]
struct EnhanceArgs {
    #[arg(long, default_value = "fhe")]
    algo: Algorithm,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Write the LUT (and for ranking algorithms I, S, r) as CSV into this directory.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Args)]
struct CorpusArgs {
    /// Directory of .pgm/.ppm images.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Number of synthetic images to add.
    #[arg(long, default_value_t = 0)]
    synthetic: usize,
    #[arg(long, default_value_t = 1024)]
    width: usize,
    #[arg(long, default_value_t = 768)]
    height: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long = "s", value_delimiter = ',', default_values_t = [1, 4, 8, 16])]
    s: Vec<usize>,
    #[arg(long = "ng", value_delimiter = ',', default_values_t = [256, 128, 64, 32])]
    ng: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [Algorithm::Fhe, Algorithm::Fsmirank])]
    algo: Vec<Algorithm>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    #[arg(long, default_value_t = fastce::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value = "8x8")]
    grid: BlockGrid,
    /// Output CSV; a per-configuration summary goes to <stem>.summary.csv.
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Directory of .pgm/.ppm images.
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    synthetic: usize,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 192)]
    height: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    kind: SyntheticKind,
    #[arg(long, default_value_t = 1024)]
    width: usize,
    #[arg(long, default_value_t = 768)]
    height: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    output: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_)
            | Error::MalformedHeader(_)
            | Error::UnsupportedFormat(_)
            | Error::UnsupportedMaxval(_)
            | Error::TruncatedPayload { .. } => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn usage(message: String) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message,
    }
}

fn check_pipeline(p: &PipelineArgs) -> Result<EnhanceParams, Failure> {
    quantization_shift(p.ng, 256)?;
    if p.s == 0 {
        return Err(usage("s must be a positive integer".into()));
    }
    if !(0.0..1.0).contains(&p.alpha) {
        return Err(Error::InvalidDamping(p.alpha).into());
    }
    Ok(EnhanceParams {
        s: p.s,
        n_g: p.ng,
        alpha: p.alpha,
        grid: p.grid,
    })
}

fn cmd_enhance(args: EnhanceArgs) -> Result<(), Failure> {
    let params = check_pipeline(&args.pipeline)?;
    let img = read_image(&args.input).map_err(|e| io_failure(&args.input, e))?;
    let start = Instant::now();
    let out = enhance(args.algo, &img, &params)?;
    let elapsed = start.elapsed();
    write_image(&out, &args.output).map_err(|e| io_failure(&args.output, e))?;
    eprintln!(
        "algo={} s={} ng={} alpha={} grid={} size={}x{} time={:.3}ms",
        args.algo,
        params.s,
        params.n_g,
        params.alpha,
        params.grid,
        img.width(),
        img.height(),
        elapsed.as_secs_f64() * 1e3
    );

    if let Some(dir) = &args.dump_dir {
        let gray = bench::luminance(img);
        let dump = || -> Result<(), Error> {
            std::fs::create_dir_all(dir)?;
            match args.algo {
                Algorithm::Smirank => {
                    smirank_trace(&gray, params.alpha, params.grid)?.write_csv_dir(dir)?
                }
                Algorithm::Fsmirank => {
                    fsmirank_trace(&gray, params.s, params.n_g, params.alpha, params.grid)?
                        .write_csv_dir(dir)?
                }
                alg => {
                    let lut = bench::lut_for(alg, &gray, &params)?;
                    lut.write_csv(BufWriter::new(File::create(dir.join("lut.csv"))?))?;
                }
            }
            Ok(())
        };
        dump().map_err(|e| io_failure(dir, e))?;
    }
    Ok(())
}

fn summary_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}.summary.csv"))
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let config = SweepConfig {
        s_values: args.s,
        n_g_values: args.ng,
        algorithms: args.algo,
        repetitions: args.reps,
        warmup: args.warmup,
        alpha: args.alpha,
        grid: args.grid,
        corpus: args.corpus.corpus,
        synthetic: args.corpus.synthetic,
        synthetic_size: (args.corpus.width, args.corpus.height),
        seed: args.corpus.seed,
    };
    config.validate()?;
    let images = config.load_images().map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("cannot load corpus: {e}"),
    })?;
    let records = run_sweep(&config, &images)?;
    let file = File::create(&args.csv).map_err(|e| io_failure(&args.csv, e))?;
    write_records_csv(&records, BufWriter::new(file))?;

    let summary = summarize(&records);
    let summary_csv = summary_path(&args.csv);
    let file = File::create(&summary_csv).map_err(|e| io_failure(&summary_csv, e))?;
    write_summary_csv(&summary, BufWriter::new(file))?;

    println!(
        "{:<9} {:>3} {:>4} {:>7} {:>14} {:>10} {:>9}",
        "algorithm", "s", "ng", "images", "median_us", "mean_diff", "speedup"
    );
    for r in &summary {
        println!(
            "{:<9} {:>3} {:>4} {:>7} {:>14.1} {:>10.3} {:>8.2}x",
            r.algorithm.name(),
            r.s,
            r.n_g,
            r.images,
            r.median_wall_time_us,
            r.mean_abs_diff,
            r.median_speedup
        );
    }
    for w in trend_warnings(&records) {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "wrote {} rows to {} and summary to {}",
        records.len(),
        args.csv.display(),
        summary_csv.display()
    );
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    if args.corpus.is_none() && args.synthetic == 0 {
        return Err(usage(
            "give a corpus directory or --synthetic <count>".into(),
        ));
    }
    let images = collect_images(
        args.corpus.as_deref(),
        args.synthetic,
        (args.width, args.height),
        args.seed,
    )
    .map_err(|e| Failure {
        code: EXIT_IO,
        message: format!("cannot load corpus: {e}"),
    })?;
    if images.is_empty() {
        return Err(Failure {
            code: EXIT_IO,
            message: "corpus contains no .pgm/.ppm images".into(),
        });
    }
    let results = verify_corpus(&images, &Kernels::default());
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:<28} {:<30} {}", r.check, r.image_id, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} checks, {failed} failed", results.len());
    match results.iter().find(|r| !r.passed) {
        Some(first) => Err(Failure {
            code: EXIT_VERIFY,
            message: format!(
                "verification failed: image {} check {}",
                first.image_id, first.check
            ),
        }),
        None => Ok(()),
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), Failure> {
    if args.width == 0 || args.height == 0 {
        return Err(usage("width and height must be positive".into()));
    }
    let img = generate_synthetic(args.kind, args.width, args.height, args.seed);
    write_image(&Image::Gray(img), &args.output).map_err(|e| io_failure(&args.output, e))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Enhance(a) => cmd_enhance(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
