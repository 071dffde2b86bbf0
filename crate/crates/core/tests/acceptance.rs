//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use bstree::bench::{ground_truth, run_experiment, ExperimentConfig, Phase, WorkloadSpec};
use bstree::index::{BsTree, Mbr, Node, TreeParams};
use bstree::prune::{lrv_prune, IndexBuilder, PruneMode};
use bstree::query::{range_search, QueryMode, RangeQuery};
use bstree::sax::{euclidean, mindist, sax_transform, SaxConfig, SaxWord};
use bstree::stream::{synth_stream, SlidingWindow, SynthKind, WindowArchive, WindowSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn random_walk(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut level = 0.0;
    (0..n)
        .map(|_| {
            level += rng.sample::<f64, _>(StandardNormal);
            level
        })
        .collect()
}

fn radii() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

fn lower_bound() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (w, l, pairs) = (512, 8, 10_000);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut checked = 0;
    for alpha in [4, 6, 8] {
        let cfg = SaxConfig::new(w, l, alpha).map_err(|e| e.to_string())?;
        for i in 0..pairs {
            // mix of random walks and noisy sines so that words spread over the alphabet
            let a = if i % 3 == 0 { sine(&mut rng, w) } else { random_walk(&mut rng, w) };
            let b = if i % 5 == 0 { sine(&mut rng, w) } else { random_walk(&mut rng, w) };
            let (wa, na) = sax_transform(&a, &cfg).map_err(|e| e.to_string())?;
            let (wb, nb) = sax_transform(&b, &cfg).map_err(|e| e.to_string())?;
            let md = mindist(&wa, &wb, &cfg).map_err(|e| e.to_string())?;
            let ed = euclidean(&na.values, &nb.values);
            worst_gap = worst_gap.max(md - ed);
            if md > ed + 1e-9 {
                return Err(format!("alpha={alpha} pair {i}: mindist {md} > ED {ed}"));
            }
            checked += 1;
        }
    }
    let took = start.elapsed();
    if took > Duration::from_secs(30) {
        return Err(format!("took {took:.1?}, limit 30s"));
    }
    Ok(format!("{checked} pairs, 0 violations, max(mindist-ED)={worst_gap:.4}, {took:.1?}"))
}

fn sine(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let period = rng.random_range(8.0..256.0);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    (0..n)
        .map(|t| (std::f64::consts::TAU * t as f64 / period + phase).sin() + 0.3 * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn exact_mode() -> Outcome {
    let start = Instant::now();
    let (w, nw) = (128, 5000);
    let cfg = SaxConfig::new(w, 8, 6).map_err(|e| e.to_string())?;
    let archive = Arc::new(WindowArchive::unbounded());
    let mut window = SlidingWindow::new(WindowSpec::tumbling(w).unwrap(), cfg.clone(), archive.clone())
        .map_err(|e| e.to_string())?;
    let mut builder = IndexBuilder::new(
        BsTree::new(cfg.clone(), TreeParams { max_height: usize::MAX, ..TreeParams::default() })
            .map_err(|e| e.to_string())?,
    );
    let mut raw = Vec::new();
    let mut chunk = Vec::with_capacity(w);
    for p in synth_stream(SynthKind::RandomWalk, w * nw, 21) {
        chunk.push(p.value);
        if let Some(rec) = window.push_value(p.value).map_err(|e| e.to_string())? {
            builder.feed(&rec.word, rec.window_id).map_err(|e| e.to_string())?;
            raw.push(std::mem::take(&mut chunk));
        }
    }
    if archive.len() != nw {
        return Err(format!("archived {} windows", archive.len()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut total_matches = 0usize;
    let mut queries = 0;
    for qi in 0..200 {
        // perturbed copies of archived windows give non-empty answers across the radius grid
        let pattern: Vec<f64> = if qi % 4 == 3 {
            random_walk(&mut rng, w)
        } else {
            let src = &raw[rng.random_range(0..nw)];
            let mean = src.iter().sum::<f64>() / w as f64;
            let sd = (src.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w as f64).sqrt();
            let noise = rng.random_range(0.0..0.1) * sd;
            src.iter().map(|v| v + noise * rng.sample::<f64, _>(StandardNormal)).collect()
        };
        for &r in &radii() {
            let q = RangeQuery::new(pattern.clone(), r, QueryMode::Exact).map_err(|e| e.to_string())?;
            let got = range_search(builder.tree_mut(), &q, &archive).map_err(|e| e.to_string())?;
            let truth = ground_truth(&archive, &q, &cfg).map_err(|e| e.to_string())?;
            if got.matches != truth {
                return Err(format!("query {qi} r={r}: {} results vs {} truth", got.matches.len(), truth.len()));
            }
            if !got.unverifiable.is_empty() {
                return Err(format!("query {qi}: unverifiable ids with an unbounded archive"));
            }
            total_matches += truth.len();
            queries += 1;
        }
    }
    let took = start.elapsed();
    if took > Duration::from_secs(120) {
        return Err(format!("took {took:.1?}, limit 2 min"));
    }
    Ok(format!("{queries} queries over {nw} windows, precision=recall=1, {total_matches} total matches, {took:.1?}"))
}

fn structure() -> Outcome {
    let cfg = SaxConfig::new(8, 8, 4).unwrap();
    let params = TreeParams { order: 32, mbr_capacity: 64, max_height: usize::MAX, ..TreeParams::default() };
    let mut tree = BsTree::new(cfg, params).map_err(|e| e.to_string())?;
    let mut oracle: BTreeMap<SaxWord, Vec<u64>> = BTreeMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    // a skewed word source: repeated hot words next to uniformly drawn ones
    let hot: Vec<Vec<u8>> = (0..50).map(|_| (0..8).map(|_| rng.random_range(0..4)).collect()).collect();
    for id in 0..100_000u64 {
        let symbols = if rng.random_bool(0.3) {
            hot[rng.random_range(0..hot.len())].clone()
        } else {
            (0..8).map(|_| rng.random_range(0..4u8)).collect()
        };
        let word = SaxWord::from_symbols(symbols);
        tree.insert_feature(&word, id).map_err(|e| e.to_string())?;
        oracle.entry(word).or_default().push(id);
    }
    tree.check_invariants()?;
    check_members(&tree)?;
    if tree.word_postings() != oracle {
        return Err("word -> postings map differs from the flat oracle".into());
    }
    Ok(format!(
        "height={} elements={} words={} postings=100000",
        tree.height(),
        tree.element_count(),
        oracle.len()
    ))
}

fn check_members(tree: &BsTree) -> Result<(), String> {
    for e in tree.in_order() {
        let words: Vec<&SaxWord> = e.members().iter().map(|m| &m.word).collect();
        if words.windows(2).any(|p| p[0] >= p[1]) {
            return Err(format!("members of [{}, {}] not strictly sorted", e.lo(), e.hi()));
        }
        if words.iter().any(|w| !e.covers(w)) || e.members().len() > e.capacity() {
            return Err(format!("element [{}, {}] holds foreign or too many words", e.lo(), e.hi()));
        }
        if let Some(env) = e.envelope() {
            if words.iter().any(|w| !env.contains(w)) {
                return Err(format!("envelope of [{}, {}] misses a member", e.lo(), e.hi()));
            }
        }
    }
    Ok(())
}

/// Node elements left to right, then subtrees left to right.
fn dfs<'a>(node: &'a Node, out: &mut Vec<&'a Mbr>) {
    out.extend(node.elements());
    for c in node.children() {
        dfs(c, out);
    }
}

/// Direct reading of the flat-sequence rule, kept independent of the
/// library's verdict helper.
fn simulate(ts: &[u64], tmp_th: u64) -> Vec<bool> {
    (0..ts.len())
        .map(|i| {
            let fresh = ts[i] >= tmp_th;
            let bridge = i + 1 < ts.len() && ts[i] < ts[i + 1];
            fresh || bridge
        })
        .collect()
}

fn pruning() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let (mut kept_total, mut pruned_total) = (0, 0);
    for t in 0..500 {
        let order = rng.random_range(3..=6);
        let cap = rng.random_range(1..=4);
        let cfg = SaxConfig::new(4, 4, 4).unwrap();
        let params = TreeParams { order, mbr_capacity: cap, max_height: usize::MAX, ..TreeParams::default() };
        let mut tree = BsTree::new(cfg, params).unwrap();
        let target = rng.random_range(0..=100).min(tree.catalog().range_count() as usize);
        let mut id = 0;
        while tree.element_count() < target {
            let word = tree.catalog().unrank(rng.random_range(0..256));
            tree.insert_feature(&word, id).map_err(|e| e.to_string())?;
            id += 1;
        }
        let max_ts = rng.random_range(1..50u64);
        let mut seq = Vec::new();
        dfs(tree.root(), &mut seq);
        for e in &seq {
            e.set_ts(rng.random_range(0..=max_ts));
        }
        let ts: Vec<u64> = seq.iter().map(|e| e.ts()).collect();
        let ranges: Vec<(SaxWord, SaxWord)> = seq.iter().map(|e| (e.lo().clone(), e.hi().clone())).collect();
        let before = tree.word_postings();
        let tmp_th = rng.random_range(0..=max_ts + 1);

        let keep = simulate(&ts, tmp_th);
        let expected: BTreeSet<(SaxWord, SaxWord)> =
            ranges.iter().zip(&keep).filter(|(_, k)| **k).map(|(r, _)| r.clone()).collect();

        let (fresh, report) = lrv_prune(tree, tmp_th, PruneMode::Absolute).map_err(|e| e.to_string())?;
        let got: BTreeSet<(SaxWord, SaxWord)> =
            fresh.in_order().iter().map(|e| (e.lo().clone(), e.hi().clone())).collect();
        if got != expected {
            return Err(format!("tree {t}: kept {} elements, simulator {}", got.len(), expected.len()));
        }
        for (r, &s) in ranges.iter().zip(&ts) {
            if s >= tmp_th && !got.contains(r) {
                return Err(format!("tree {t}: fresh element [{}, {}] was pruned", r.0, r.1));
            }
        }
        if fresh.in_order().iter().any(|e| e.ts() != 0) || fresh.clock() != 0 {
            return Err(format!("tree {t}: timestamps not reset"));
        }
        fresh.check_invariants().map_err(|e| format!("tree {t}: {e}"))?;
        check_members(&fresh).map_err(|e| format!("tree {t}: {e}"))?;
        // surviving elements keep their exact postings
        let survivors: BTreeMap<SaxWord, Vec<u64>> = before
            .into_iter()
            .filter(|(w, _)| got.iter().any(|(lo, hi)| lo <= w && w <= hi))
            .collect();
        if fresh.word_postings() != survivors {
            return Err(format!("tree {t}: postings changed across the rebuild"));
        }
        kept_total += report.kept;
        pruned_total += report.pruned;
    }
    Ok(format!("500 trees, {kept_total} kept, {pruned_total} pruned, all match the simulator"))
}

fn height_discipline() -> Outcome {
    let (w, htree) = (128, 4);
    let cfg = SaxConfig::new(w, 8, 4).unwrap();
    let params = TreeParams { order: 4, mbr_capacity: 64, max_height: htree, prune_threshold: 1, ..TreeParams::default() };
    let archive = Arc::new(WindowArchive::with_capacity(256));
    let mut window =
        SlidingWindow::new(WindowSpec::new(w, 16).unwrap(), cfg.clone(), archive.clone()).map_err(|e| e.to_string())?;
    let mut builder = IndexBuilder::new(BsTree::new(cfg, params).map_err(|e| e.to_string())?);
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut recent: VecDeque<f64> = VecDeque::with_capacity(w);
    let (mut features, mut max_seen, mut max_after_prune) = (0usize, 0usize, 0usize);

    for p in synth_stream(SynthKind::RandomWalk, usize::MAX, 56) {
        if recent.len() == w {
            recent.pop_front();
        }
        recent.push_back(p.value);
        let Some(rec) = window.push_value(p.value).map_err(|e| e.to_string())? else { continue };
        let out = builder.feed(&rec.word, rec.window_id).map_err(|e| e.to_string())?;
        features += 1;
        max_seen = max_seen.max(out.height);
        if out.height > htree + 1 {
            return Err(format!("height {} at feature {features}", out.height));
        }
        if let Some(r) = out.prune {
            max_after_prune = max_after_prune.max(r.new_height);
            if r.new_height > htree {
                return Err(format!("height {} right after a prune at feature {features}", r.new_height));
            }
        }
        if out.escaped {
            return Err(format!("escape hatch fired at feature {features}"));
        }
        // interleaved queries keep part of the index warm
        if features % 50 == 0 {
            let q = RangeQuery::new(recent.iter().copied().collect(), rng.random_range(0.1..1.0), QueryMode::Approximate)
                .map_err(|e| e.to_string())?;
            range_search(builder.tree_mut(), &q, &archive).map_err(|e| e.to_string())?;
        }
        if features == 100_000 {
            break;
        }
    }
    builder.tree().check_invariants()?;
    let prunes = builder.prune_reports();
    if prunes.is_empty() {
        return Err("workload never triggered a prune".into());
    }
    let bridges: usize = prunes.iter().map(|r| r.bridges).sum();
    Ok(format!(
        "{features} features, {} prunes ({bridges} bridges), max height {max_seen}, max post-prune {max_after_prune}, 0 escapes",
        prunes.len()
    ))
}

fn alphabet_trend() -> Outcome {
    let cfg = ExperimentConfig { nw: 2000, alphas: vec![4, 6, 8], ..ExperimentConfig::default() };
    let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let means: Vec<f64> = cfg
        .alphas
        .iter()
        .map(|&a| mean_over_phases(&report, a))
        .collect::<Option<_>>()
        .ok_or("missing rows")?;
    let text = format!("mean precision a=4 {:.4}, a=6 {:.4}, a=8 {:.4}", means[0], means[1], means[2]);
    if means.windows(2).all(|p| p[0] <= p[1]) {
        Ok(text)
    } else {
        Err(text)
    }
}

fn mean_over_phases(report: &bstree::bench::ExperimentReport, alpha: usize) -> Option<f64> {
    Some((report.mean_precision(alpha, Phase::PrePrune)? + report.mean_precision(alpha, Phase::PostPrune)?) / 2.0)
}

fn pruning_trend() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    // the long window leaves every radius at mindist 0, the short one lets pruning bite
    for tw in [512, 32] {
        let cfg = ExperimentConfig {
            tw,
            slide: tw,
            nw: 2000,
            alphas: vec![4, 6, 8],
            workload: WorkloadSpec { hot_fraction: 0.2, ..WorkloadSpec::default() },
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
        for &a in &cfg.alphas {
            let pre = report.mean_precision(a, Phase::PrePrune).ok_or("missing rows")?;
            let post = report.mean_precision(a, Phase::PostPrune).ok_or("missing rows")?;
            let pruned: usize = report.prune_events.iter().filter(|(x, _)| *x == a).map(|(_, p)| p.pruned).sum();
            ok &= post >= pre;
            parts.push(format!("tw={tw} a={a} pre {pre:.4} post {post:.4} pruned {pruned}"));
        }
    }
    let text = parts.join(", ");
    if ok {
        Ok(text)
    } else {
        Err(text)
    }
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig { nw: 600, ..ExperimentConfig::default() };
    let a = run_experiment(&cfg).map_err(|e| e.to_string())?.to_csv();
    let b = run_experiment(&cfg).map_err(|e| e.to_string())?.to_csv();
    if a != b {
        return Err("library report differs between runs".into());
    }

    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let mut outputs = Vec::new();
    for d in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_bstree"))
            .args(["bench", "--nw", "600", "--seed", "7", "--out"])
            .arg(d.path())
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("bench exited with {status}"));
        }
        let mut files = Vec::new();
        for name in ["report.csv", "prune_events.csv", "precision_by_phase.csv", "precision_by_alpha.csv"] {
            files.push(std::fs::read(d.path().join(name)).map_err(|e| format!("{name}: {e}"))?);
        }
        outputs.push(files);
    }
    if outputs[0] != outputs[1] {
        return Err("bench CSV output differs between runs".into());
    }
    Ok(format!("library and CLI CSVs byte-identical ({} bytes report)", outputs[0][0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 lower-bound soundness", lower_bound),
        ("2 exact-mode correctness", exact_mode),
        ("3 structural invariants", structure),
        ("4 pruning oracle", pruning),
        ("5 build height discipline", height_discipline),
        ("6 precision grows with alphabet", alphabet_trend),
        ("7 precision after pruning", pruning_trend),
        ("8 bench determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match run() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
