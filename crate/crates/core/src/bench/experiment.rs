use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bench::config::{Dataset, ExperimentConfig, WorkloadSpec};
use crate::error::{Error, Result};
use crate::index::BsTree;
use crate::prune::{IndexBuilder, PruneMode, PruneReport};
use crate::query::{precision_recall, range_search, range_search_untouched, QueryMode, RangeQuery};
use crate::sax::{euclidean, znormalize, SaxConfig};
use crate::stream::{
    read_stream_file, replay_values, synth_stream, ParseOptions, SlidingWindow, WindowArchive, WindowSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    PrePrune,
    PostPrune,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::PrePrune => "pre-prune",
            Phase::PostPrune => "post-prune",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub alpha: usize,
    pub radius: f64,
    pub phase: Phase,
    pub precision: f64,
    pub recall: f64,
    pub mean_query_us: Option<f64>,
    pub index_height: usize,
    pub element_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    /// Free-form description lines written as `#` comments.
    pub header: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub prune_events: Vec<(usize, PruneReport)>,
}

pub const REPORT_COLUMNS: &str =
    "alpha,radius,phase,precision,recall,mean_query_us,index_height,element_count";
pub const PLOT_COLUMNS: &str = "alpha,radius,phase,precision,recall";

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for h in &self.header {
            let _ = writeln!(out, "# {h}");
        }
        let _ = writeln!(out, "{REPORT_COLUMNS}");
        for r in &self.rows {
            let us = r.mean_query_us.map(|v| format!("{v:.3}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{},{},{}",
                r.alpha,
                r.radius,
                r.phase.as_str(),
                r.precision,
                r.recall,
                us,
                r.index_height,
                r.element_count
            );
        }
        out
    }

    pub fn prune_csv(&self) -> String {
        let mut out = format!("alpha,{}\n", PruneReport::CSV_HEADER);
        for (alpha, p) in &self.prune_events {
            let _ = writeln!(out, "{alpha},{p}");
        }
        out
    }

    /// Mean precision over radii for one alpha and phase.
    pub fn mean_precision(&self, alpha: usize, phase: Phase) -> Option<f64> {
        let v: Vec<f64> =
            self.rows.iter().filter(|r| r.alpha == alpha && r.phase == phase).map(|r| r.precision).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Window ids whose normalized distance to `query` is within its radius.
pub fn ground_truth(archive: &WindowArchive, query: &RangeQuery, cfg: &SaxConfig) -> Result<BTreeSet<u64>> {
    let q = znormalize(&query.pattern, cfg)?;
    Ok(archive_distances(archive, &q.values)
        .into_iter()
        .filter(|&(_, d)| d <= query.radius)
        .map(|(id, _)| id)
        .collect())
}

fn archive_distances(archive: &WindowArchive, normalized: &[f64]) -> Vec<(u64, f64)> {
    archive
        .records()
        .iter()
        .map(|r| (r.window_id, euclidean(normalized, &r.normalized.values)))
        .collect()
}

/// Patterns used for one experiment; shared by every alphabet size.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub hot_windows: Vec<u64>,
    /// One noisy copy of each hot window, issued with visit recording
    /// before the measurement passes.
    pub training: Vec<Vec<f64>>,
    /// Issued without visit recording before and after the forced prune.
    pub measurement: Vec<Vec<f64>>,
}

impl Workload {
    pub fn generate(windows: &[Vec<f64>], spec: &WorkloadSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_b57e);
        let n = windows.len();
        let hot = ((spec.hot_fraction * n as f64).ceil() as usize).clamp(1, n);
        let mut hot_windows: Vec<u64> = sample(&mut rng, n, hot).into_iter().map(|i| i as u64).collect();
        hot_windows.sort_unstable();
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let len = windows[0].len();
            if spec.random_fraction > 0.0 && rng.random::<f64>() < spec.random_fraction {
                let mut level = 0.0;
                return (0..len)
                    .map(|_| {
                        level += rng.sample::<f64, _>(StandardNormal);
                        level
                    })
                    .collect();
            }
            let src = &windows[hot_windows[rng.random_range(0..hot_windows.len())] as usize];
            src.iter().map(|v| v + spec.noise * rng.sample::<f64, _>(StandardNormal)).collect()
        };
        // one warm-up visit per hot pattern, then the measured draws
        let training = hot_windows
            .iter()
            .map(|&i| windows[i as usize].iter().map(|v| v + spec.noise * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let measurement = (0..spec.query_count).map(|_| draw(&mut rng)).collect();
        Self { hot_windows, training, measurement }
    }
}

fn load_values(cfg: &ExperimentConfig, required: usize) -> Result<Vec<f64>> {
    let mut values = match &cfg.dataset {
        Dataset::File { path, drop_first_column } => {
            read_stream_file(path, ParseOptions { drop_first_column: *drop_first_column })?
        }
        Dataset::Synthetic(kind) => synth_stream(*kind, required, cfg.seed).map(|p| p.value).collect(),
    };
    if values.len() < required {
        return Err(Error::DatasetTooShort { required, available: values.len() });
    }
    values.truncate(required);
    Ok(values)
}

fn describe(cfg: &ExperimentConfig) -> Vec<String> {
    let mode = match cfg.tree.prune_mode {
        PruneMode::Absolute => "absolute",
        PruneMode::Age => "age",
    };
    vec![
        format!(
            "dataset={} tw={} nw={} slide={} word_len={} order={} mbr_cap={} htree={} tmpth={} prune_mode={} query_mode={} seed={}",
            cfg.dataset,
            cfg.tw,
            cfg.nw,
            cfg.slide,
            cfg.word_len,
            cfg.tree.order,
            cfg.tree.mbr_capacity,
            cfg.tree.max_height,
            cfg.tree.prune_threshold,
            mode,
            cfg.mode.as_str(),
            cfg.seed
        ),
        format!(
            "workload: {}; one training query per hot window (radii cycling over the grid) records visits, measurement queries do not; \
             pre-prune measured before one forced prune, post-prune after it; \
             ground truth is a brute-force scan of the archive",
            cfg.workload
        ),
    ]
}

struct Measured {
    precision: f64,
    recall: f64,
    mean_us: f64,
}

fn measure(
    tree: &BsTree,
    archive: &WindowArchive,
    queries: &[Vec<f64>],
    distances: &[Vec<(u64, f64)>],
    radius: f64,
    mode: QueryMode,
) -> Result<Measured> {
    let (mut p_sum, mut r_sum, mut us) = (0.0, 0.0, 0.0);
    for (pattern, dists) in queries.iter().zip(distances) {
        let q = RangeQuery::new(pattern.clone(), radius, mode)?;
        let res = range_search_untouched(tree, &q, archive)?;
        let truth: BTreeSet<u64> = dists.iter().filter(|&&(_, d)| d <= radius).map(|&(id, _)| id).collect();
        let (p, r) = precision_recall(&res.matches, &truth);
        p_sum += p;
        r_sum += r;
        us += res.elapsed.as_secs_f64() * 1e6;
    }
    let n = queries.len() as f64;
    Ok(Measured { precision: p_sum / n, recall: r_sum / n, mean_us: us / n })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let spec = WindowSpec::new(cfg.tw, cfg.slide)?;
    let values = load_values(cfg, spec.points_for(cfg.nw))?;

    let norm_cfg = SaxConfig::new(cfg.tw, cfg.word_len, cfg.alphas[0])?;
    let windows = (0..cfg.nw)
        .map(|i| Ok(znormalize(&values[i * cfg.slide..i * cfg.slide + cfg.tw], &norm_cfg)?.values))
        .collect::<Result<Vec<_>>>()?;
    let workload = Workload::generate(&windows, &cfg.workload, cfg.seed);

    let mut report = ExperimentReport { header: describe(cfg), ..ExperimentReport::default() };
    for &alpha in &cfg.alphas {
        let sax = SaxConfig::new(cfg.tw, cfg.word_len, alpha)?;
        let archive = Arc::new(WindowArchive::with_capacity(cfg.nw));
        let window = SlidingWindow::new(spec, sax.clone(), Arc::clone(&archive))?;
        let mut builder = IndexBuilder::new(BsTree::new(sax.clone(), cfg.tree)?);
        builder.build_index(replay_values(values.iter().copied(), window))?;

        let distances: Vec<Vec<(u64, f64)>> = workload
            .measurement
            .iter()
            .map(|p| Ok(archive_distances(&archive, &znormalize(p, &sax)?.values)))
            .collect::<Result<_>>()?;

        // training radii cycle through the grid like a mixed query stream
        for (i, pattern) in workload.training.iter().enumerate() {
            let q = RangeQuery::new(pattern.clone(), cfg.radii[i % cfg.radii.len()], QueryMode::Approximate)?;
            range_search(builder.tree_mut(), &q, &archive)?;
        }

        for phase in [Phase::PrePrune, Phase::PostPrune] {
            if phase == Phase::PostPrune {
                builder.prune()?;
            }
            let tree = builder.tree();
            for &radius in &cfg.radii {
                let m = measure(tree, &archive, &workload.measurement, &distances, radius, cfg.mode)?;
                report.rows.push(ReportRow {
                    alpha,
                    radius,
                    phase,
                    precision: m.precision,
                    recall: m.recall,
                    mean_query_us: cfg.timing.then_some(m.mean_us),
                    index_height: tree.height(),
                    element_count: tree.element_count(),
                });
            }
        }
        report.prune_events.extend(builder.prune_reports().iter().map(|p| (alpha, *p)));
    }
    Ok(report)
}

pub const PHASE_PLOT_FILE: &str = "precision_by_phase.csv";
pub const ALPHA_PLOT_FILE: &str = "precision_by_alpha.csv";

fn plot_csv<'a>(rows: impl Iterator<Item = &'a ReportRow>) -> String {
    let mut out = format!("{PLOT_COLUMNS}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6}",
            r.alpha,
            r.radius,
            r.phase.as_str(),
            r.precision,
            r.recall
        );
    }
    out
}

/// Writes the plot tables into `dir`: precision by phase for the first
/// alphabet size, and post-prune precision for every alphabet size.
pub fn emit_plot_data(report: &ExperimentReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let first = report.rows.first().map(|r| r.alpha);
    let by_phase = plot_csv(report.rows.iter().filter(|r| Some(r.alpha) == first));
    let by_alpha = plot_csv(report.rows.iter().filter(|r| r.phase == Phase::PostPrune));
    let (a, b) = (dir.join(PHASE_PLOT_FILE), dir.join(ALPHA_PLOT_FILE));
    fs::write(&a, by_phase)?;
    fs::write(&b, by_alpha)?;
    Ok((a, b))
}
