use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use bstree::bench::{emit_plot_data, run_experiment, Dataset, ExperimentConfig, Settings};
use bstree::index::BsTree;
use bstree::prune::{IndexBuilder, PruneReport};
use bstree::query::{parse_query_line, range_search, result_csv_row, RESULT_CSV_HEADER};
use bstree::sax::SaxConfig;
use bstree::stream::{read_stream_file, synth_stream, ParseOptions, SlidingWindow, WindowArchive, WindowSpec};
use bstree::Error;

#[derive(Parser)]
#[command(name = "bstree", version, about = "SAX/B-tree stream index with LRV pruning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index over a stream and print its statistics.
    Index {
        #[command(flatten)]
        common: Common,
        /// Print the preorder index dump.
        #[arg(long)]
        dump: bool,
        /// Write the MBR catalog as lo<TAB>hi lines.
        #[arg(long, value_name = "PATH")]
        catalog_out: Option<PathBuf>,
    },
    /// Build an index, then run a batch of range queries.
    Query {
        #[command(flatten)]
        common: Common,
        /// Query file, one `radius<TAB>v1,v2,...` per line.
        #[arg(long, value_name = "PATH")]
        batch: PathBuf,
    },
    /// Run the precision/recall experiment.
    Bench {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Default)]
struct Common {
    /// key=value settings file; flags take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    dataset: Option<String>,
    /// walk | sine
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long)]
    tw: Option<String>,
    #[arg(long)]
    nw: Option<String>,
    #[arg(long)]
    slide: Option<String>,
    #[arg(long)]
    word_len: Option<String>,
    /// Comma-separated alphabet sizes.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    mbr_cap: Option<String>,
    #[arg(long)]
    htree: Option<String>,
    #[arg(long)]
    tmpth: Option<String>,
    /// Treat --tmpth as a maximum age (clock - ts) instead of an absolute clock value.
    #[arg(long)]
    age_mode: bool,
    /// Comma-separated, ascending.
    #[arg(long)]
    radii: Option<String>,
    /// approximate | exact
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    queries: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    hot_fraction: Option<String>,
    #[arg(long)]
    random_fraction: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    drop_first_column: bool,
    /// Include wall-clock query latency in the bench report.
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn settings(&self) -> Result<Settings, Error> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p).map_err(|e| match e {
                Error::Io(io) => Error::Config(format!("{}: {io}", p.display())),
                other => other,
            })?,
            None => Settings::default(),
        };
        let pairs = [
            ("dataset", &self.dataset),
            ("synthetic", &self.synthetic),
            ("tw", &self.tw),
            ("nw", &self.nw),
            ("slide", &self.slide),
            ("word-len", &self.word_len),
            ("alpha", &self.alpha),
            ("order", &self.order),
            ("mbr-cap", &self.mbr_cap),
            ("htree", &self.htree),
            ("tmpth", &self.tmpth),
            ("radii", &self.radii),
            ("mode", &self.mode),
            ("queries", &self.queries),
            ("noise", &self.noise),
            ("hot-fraction", &self.hot_fraction),
            ("random-fraction", &self.random_fraction),
            ("seed", &self.seed),
            ("out", &self.out),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                s.set(k, v.as_str())?;
            }
        }
        for (k, on) in [("age-mode", self.age_mode), ("drop-first-column", self.drop_first_column), ("timing", self.timing)] {
            if on {
                s.set(k, "true")?;
            }
        }
        Ok(s)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Index { common, dump, catalog_out } => {
            let settings = common.settings()?;
            let cfg = settings.experiment()?;
            let (builder, archive) = build(&cfg)?;
            let tree = builder.tree();
            let stdout = io::stdout();
            let mut out = stdout.lock();
            writeln!(out, "windows={}", archive.len())?;
            writeln!(out, "height={}", tree.height())?;
            writeln!(out, "elements={}", tree.element_count())?;
            writeln!(out, "words={}", tree.word_count())?;
            writeln!(out, "prunes={}", builder.prune_reports().len())?;
            writeln!(out, "escapes={}", builder.escapes())?;
            if !builder.prune_reports().is_empty() {
                writeln!(out, "{}", PruneReport::CSV_HEADER)?;
                for p in builder.prune_reports() {
                    writeln!(out, "{p}")?;
                }
            }
            if dump {
                write!(out, "{}", tree.dump())?;
            }
            if let Some(path) = catalog_out {
                let f = io::BufWriter::new(fs::File::create(path)?);
                tree.catalog().export(f)?;
            }
            Ok(())
        }
        Command::Query { common, batch } => {
            let settings = common.settings()?;
            let cfg = settings.experiment()?;
            let (mut builder, archive) = build(&cfg)?;
            let text = fs::read_to_string(&batch)?;
            let mut csv = format!("{RESULT_CSV_HEADER}\n");
            for (i, line) in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).enumerate() {
                let q = parse_query_line(line, cfg.mode).map_err(|e| Error::Parse {
                    path: batch.clone(),
                    line: i + 1,
                    msg: e.to_string(),
                })?;
                let r = range_search(builder.tree_mut(), &q, &archive)?;
                csv.push_str(&result_csv_row(i, q.mode, &r));
                csv.push('\n');
            }
            write_or_print(settings.out().as_deref(), &csv)
        }
        Command::Bench { common } => {
            let settings = common.settings()?;
            let cfg = settings.experiment()?;
            let report = run_experiment(&cfg)?;
            let dir = settings.out().unwrap_or_else(|| PathBuf::from("bench_out"));
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("report.csv"), report.to_csv())?;
            fs::write(dir.join("prune_events.csv"), report.prune_csv())?;
            emit_plot_data(&report, &dir)?;
            println!("wrote {} rows to {}", report.rows.len(), dir.join("report.csv").display());
            Ok(())
        }
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Indexes the configured stream with the first alphabet size.
fn build(cfg: &ExperimentConfig) -> Result<(IndexBuilder, Arc<WindowArchive>), Error> {
    let sax = SaxConfig::new(cfg.tw, cfg.word_len, cfg.alphas[0])?;
    let spec = WindowSpec::new(cfg.tw, cfg.slide)?;
    let values: Vec<f64> = match &cfg.dataset {
        Dataset::File { path, drop_first_column } => {
            read_stream_file(path, ParseOptions { drop_first_column: *drop_first_column })?
        }
        Dataset::Synthetic(kind) => synth_stream(*kind, spec.points_for(cfg.nw), cfg.seed).map(|p| p.value).collect(),
    };
    let archive = Arc::new(WindowArchive::with_capacity(cfg.nw));
    let mut window = SlidingWindow::new(spec, sax.clone(), Arc::clone(&archive))?;
    let mut builder = IndexBuilder::new(BsTree::new(sax, cfg.tree)?);
    let mut emitted = 0;
    for v in values {
        if emitted == cfg.nw {
            break;
        }
        if let Some(rec) = window.push_value(v)? {
            builder.feed(&rec.word, rec.window_id)?;
            emitted += 1;
        }
    }
    Ok((builder, archive))
}
