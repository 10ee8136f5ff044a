//! Search-strategy drivers over the architecture space and the
//! cross-method comparison harness.
//!
//! Baselines (grid, random, Parzen-estimator) operate on the even-width
//! space — every width code crossed with every depth — and select by
//! relative L2 error, the supervised oracle criterion grid search defines.
//! The differentiable variants search the full uneven-width space through
//! the mixed network and are scored by the same evaluation phase so error
//! ratios compare like with like.

use crate::metrics::mean;
use crate::pde::PdeProblem;
use crate::profile::Profile;
use crate::sampling::{SampleCounts, SampleSet};
use crate::supernet::{ArchitectureSpec, MixedNetwork, MixtureMode, WidthCode};
use crate::train::{eval_phase, search_phase, EvalContext, SearchOutcome};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// The even-width baseline space: {width codes} × {depths 1..=max_depth}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchSpace {
    max_depth: usize,
}

/// One even-width configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EvenConfig {
    pub code: WidthCode,
    pub depth: usize,
}

impl EvenConfig {
    pub fn spec(&self) -> ArchitectureSpec {
        ArchitectureSpec::even(self.code, self.depth)
    }
}

impl SearchSpace {
    pub fn even_width(max_depth: usize) -> Self {
        assert!(max_depth >= 1 && max_depth <= crate::supernet::N_EDGES);
        SearchSpace { max_depth }
    }

    pub fn len(&self) -> usize {
        4 * self.max_depth
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Members in canonical order: depth-major within each width code.
    pub fn members(&self) -> Vec<EvenConfig> {
        let mut out = Vec::with_capacity(self.len());
        for code in WidthCode::ALL {
            for depth in 1..=self.max_depth {
                out.push(EvenConfig { code, depth });
            }
        }
        out
    }
}

/// Outcome of evaluating one architecture under one seed.
#[derive(Debug, Clone, Copy)]
pub struct EvalRecord {
    pub test_loss: f64,
    pub relative_l2: f64,
    pub seconds: f64,
}

/// Anything that can train-and-score an architecture; the production
/// implementation wraps the evaluation phase, tests can mock it.
pub trait ArchEvaluator {
    fn evaluate(&self, spec: &ArchitectureSpec, seed: u64) -> Result<EvalRecord, String>;
}

/// Full evaluation context for one problem at one profile: the shared
/// train/test sets ("fixed across different initializations") plus the
/// reference solution on the test grid.
pub struct Bench<'a> {
    pub problem: PdeProblem,
    pub profile: &'a Profile,
    pub train_set: &'a SampleSet,
    pub test_set: &'a SampleSet,
    pub reference: &'a [f64],
}

impl Bench<'_> {
    fn eval_context(&self) -> EvalContext<'_> {
        EvalContext {
            widths: &self.profile.widths,
            activation: self.profile.activation(self.problem.kind()),
            weights: Default::default(),
            config: self.profile.eval_config(),
        }
    }

    fn counts(&self) -> SampleCounts {
        SampleCounts {
            interior: self.train_set.interior.len(),
            boundary: self.train_set.boundary.len(),
            initial: self.train_set.initial.len(),
        }
    }
}

impl ArchEvaluator for Bench<'_> {
    fn evaluate(&self, spec: &ArchitectureSpec, seed: u64) -> Result<EvalRecord, String> {
        let t0 = Instant::now();
        let out = eval_phase(
            spec,
            &self.problem,
            self.train_set,
            self.test_set,
            self.reference,
            &self.eval_context(),
            seed,
        )
        .map_err(|e| format!("eval of {spec} seed {seed}: {e}"))?;
        Ok(EvalRecord {
            test_loss: out.test_loss.total,
            relative_l2: out.relative_l2,
            seconds: t0.elapsed().as_secs_f64(),
        })
    }
}

/// Per-seed search result.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeedRow {
    pub seed: u64,
    pub spec: String,
    pub test_loss: f64,
    pub relative_l2: f64,
    pub seconds: f64,
    pub stop_reason: Option<String>,
    pub search_iterations: Option<usize>,
}

/// One search run: method, per-seed selections, aggregates, timing.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchReport {
    pub method: String,
    pub problem: String,
    pub profile: String,
    pub sampling: SampleCounts,
    pub sampling_seed: Option<u64>,
    pub seeds: Vec<u64>,
    pub rows: Vec<SeedRow>,
    pub mean_error: f64,
    pub mean_test_loss: f64,
    pub total_seconds: f64,
    /// 100 × mean_error / grid mean_error, filled by [`error_ratio`].
    pub error_ratio_vs_grid: Option<f64>,
    /// Evaluations that failed, with messages (runs continue without them).
    pub failures: Vec<String>,
}

fn assemble_report(
    method: &str,
    bench_meta: (&str, &str, SampleCounts, Option<u64>),
    seeds: &[u64],
    rows: Vec<SeedRow>,
    failures: Vec<String>,
) -> SearchReport {
    let errs: Vec<f64> = rows.iter().map(|r| r.relative_l2).collect();
    let losses: Vec<f64> = rows.iter().map(|r| r.test_loss).collect();
    let total_seconds = rows.iter().map(|r| r.seconds).sum();
    SearchReport {
        method: method.into(),
        problem: bench_meta.0.into(),
        profile: bench_meta.1.into(),
        sampling: bench_meta.2,
        sampling_seed: bench_meta.3,
        seeds: seeds.to_vec(),
        mean_error: if errs.is_empty() { f64::NAN } else { mean(&errs) },
        mean_test_loss: if losses.is_empty() {
            f64::NAN
        } else {
            mean(&losses)
        },
        rows,
        total_seconds,
        error_ratio_vs_grid: None,
        failures,
    }
}

/// Heatmap cell: seed-averaged error of one even-width configuration.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HeatmapCell {
    pub code: u8,
    pub width: usize,
    pub depth: usize,
    pub mean_error: Option<f64>,
    pub per_seed: Vec<Option<f64>>,
    pub failures: usize,
}

/// The full even-width error table (4 widths × max_depth depths).
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Heatmap {
    pub problem: String,
    pub depths: Vec<usize>,
    pub widths: Vec<usize>,
    pub cells: Vec<HeatmapCell>,
}

/// Exhaustive search: evaluates every even-width configuration under every
/// seed; the per-seed best (smallest relative L2) forms the report and the
/// seed-averaged errors form the heatmap. Failed evaluations are recorded
/// per cell and skipped in selection.
pub fn grid_search<E: ArchEvaluator>(
    bench_meta: (&str, &str, SampleCounts, Option<u64>),
    space: &SearchSpace,
    widths: &crate::supernet::WidthTable,
    evaluator: &E,
    seeds: &[u64],
) -> (SearchReport, Heatmap) {
    let members = space.members();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    // cell index -> per-seed errors
    let mut table: Vec<Vec<Option<f64>>> = vec![Vec::new(); members.len()];

    for &seed in seeds {
        let t0 = Instant::now();
        let mut best: Option<(usize, EvalRecord)> = None;
        for (ci, cfg) in members.iter().enumerate() {
            match evaluator.evaluate(&cfg.spec(), seed) {
                Ok(rec) => {
                    table[ci].push(Some(rec.relative_l2));
                    let better = match &best {
                        None => true,
                        Some((_, b)) => rec.relative_l2 < b.relative_l2,
                    };
                    if better {
                        best = Some((ci, rec));
                    }
                }
                Err(e) => {
                    table[ci].push(None);
                    failures.push(format!("seed {seed} {}: {e}", cfg.spec()));
                }
            }
        }
        if let Some((ci, rec)) = best {
            rows.push(SeedRow {
                seed,
                spec: members[ci].spec().to_string(),
                test_loss: rec.test_loss,
                relative_l2: rec.relative_l2,
                seconds: t0.elapsed().as_secs_f64(),
                stop_reason: None,
                search_iterations: None,
            });
        }
    }

    let cells = members
        .iter()
        .zip(&table)
        .map(|(cfg, per_seed)| {
            let ok: Vec<f64> = per_seed.iter().flatten().cloned().collect();
            HeatmapCell {
                code: cfg.code.code(),
                width: widths[cfg.code.index()],
                depth: cfg.depth,
                mean_error: if ok.is_empty() { None } else { Some(mean(&ok)) },
                per_seed: per_seed.clone(),
                failures: per_seed.iter().filter(|e| e.is_none()).count(),
            }
        })
        .collect();

    let report = assemble_report("grid", bench_meta, seeds, rows, failures);
    let heatmap = Heatmap {
        problem: bench_meta.0.into(),
        depths: (1..=space.max_depth).collect(),
        widths: widths.to_vec(),
        cells,
    };
    (report, heatmap)
}

/// Uniform random search without replacement: k distinct configurations
/// per seed, best by relative L2.
pub fn random_search<E: ArchEvaluator>(
    bench_meta: (&str, &str, SampleCounts, Option<u64>),
    space: &SearchSpace,
    evaluator: &E,
    seeds: &[u64],
    k: usize,
    rng_seed: u64,
) -> Result<SearchReport, String> {
    if k < 1 {
        return Err("random search needs k >= 1".into());
    }
    if k > space.len() {
        return Err(format!(
            "k = {k} exceeds the {}-member even-width space",
            space.len()
        ));
    }
    let members = space.members();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (si, &seed) in seeds.iter().enumerate() {
        let mut rng = method_rng(rng_seed, si as u64);
        let t0 = Instant::now();
        // Partial Fisher-Yates draw of k distinct indices.
        let mut idx: Vec<usize> = (0..members.len()).collect();
        for i in 0..k {
            let j = rng.gen_range(i..idx.len());
            idx.swap(i, j);
        }
        let mut best: Option<(usize, EvalRecord)> = None;
        for &ci in &idx[..k] {
            match evaluator.evaluate(&members[ci].spec(), seed) {
                Ok(rec) => {
                    let better = best
                        .as_ref()
                        .map(|(_, b)| rec.relative_l2 < b.relative_l2)
                        .unwrap_or(true);
                    if better {
                        best = Some((ci, rec));
                    }
                }
                Err(e) => failures.push(format!("seed {seed} {}: {e}", members[ci].spec())),
            }
        }
        if let Some((ci, rec)) = best {
            rows.push(SeedRow {
                seed,
                spec: members[ci].spec().to_string(),
                test_loss: rec.test_loss,
                relative_l2: rec.relative_l2,
                seconds: t0.elapsed().as_secs_f64(),
                stop_reason: None,
                search_iterations: None,
            });
        }
    }
    Ok(assemble_report(
        &format!("random@{k}"),
        bench_meta,
        seeds,
        rows,
        failures,
    ))
}

/// Tree-structured Parzen estimator settings.
#[derive(Debug, Clone, Copy)]
pub struct TpeConfig {
    /// Quantile splitting good from bad observations.
    pub gamma: f64,
    /// Uniform draws before the model kicks in.
    pub startup: usize,
    /// Candidates sampled from the good density per draw.
    pub candidates: usize,
}

impl Default for TpeConfig {
    fn default() -> Self {
        TpeConfig {
            gamma: 0.25,
            startup: 2,
            candidates: 16,
        }
    }
}

/// Smoothed categorical density: add-one counts over `support` values.
fn categorical_density(observed: &[usize], support: usize) -> Vec<f64> {
    let mut counts = vec![1.0; support];
    for &v in observed {
        counts[v] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    counts.into_iter().map(|c| c / total).collect()
}

fn sample_categorical(rng: &mut ChaCha8Rng, density: &[f64]) -> usize {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in density.iter().enumerate() {
        acc += p;
        if r < acc {
            return i;
        }
    }
    density.len() - 1
}

/// Parzen-estimator search over the two categorical variables (width code,
/// depth). After `startup` uniform draws, each draw splits past
/// observations at the γ objective quantile, builds smoothed good/bad
/// densities per variable, samples candidates from the good density and
/// proposes the argmax of the density ratio l/g. Best by relative L2.
pub fn tpe_search<E: ArchEvaluator>(
    bench_meta: (&str, &str, SampleCounts, Option<u64>),
    space: &SearchSpace,
    evaluator: &E,
    seeds: &[u64],
    k: usize,
    rng_seed: u64,
    cfg: TpeConfig,
) -> Result<SearchReport, String> {
    if k < 1 {
        return Err("parzen search needs k >= 1".into());
    }
    let n_depth = space.max_depth;
    let mut rows = Vec::new();
    let mut failures = Vec::new();

    for (si, &seed) in seeds.iter().enumerate() {
        let mut rng = method_rng(rng_seed, si as u64);
        let t0 = Instant::now();
        let mut observations: Vec<(usize, usize, EvalRecord)> = Vec::new();
        let startup = cfg.startup.min(k);

        for draw in 0..k {
            let (wi, di) = if draw < startup || observations.is_empty() {
                (rng.gen_range(0..4), rng.gen_range(0..n_depth))
            } else {
                let objectives: Vec<(usize, usize, f64)> = observations
                    .iter()
                    .map(|(w, d, r)| (*w, *d, r.relative_l2))
                    .collect();
                propose_tpe(&mut rng, &objectives, n_depth, &cfg)
            };
            let config = EvenConfig {
                code: WidthCode::ALL[wi],
                depth: di + 1,
            };
            match evaluator.evaluate(&config.spec(), seed) {
                Ok(rec) => observations.push((wi, di, rec)),
                Err(e) => failures.push(format!("seed {seed} {}: {e}", config.spec())),
            }
        }

        if let Some((wi, di, rec)) = observations
            .iter()
            .min_by(|a, b| a.2.relative_l2.partial_cmp(&b.2.relative_l2).unwrap())
        {
            let config = EvenConfig {
                code: WidthCode::ALL[*wi],
                depth: di + 1,
            };
            rows.push(SeedRow {
                seed,
                spec: config.spec().to_string(),
                test_loss: rec.test_loss,
                relative_l2: rec.relative_l2,
                seconds: t0.elapsed().as_secs_f64(),
                stop_reason: None,
                search_iterations: None,
            });
        }
    }
    Ok(assemble_report(
        &format!("bayes@{k}"),
        bench_meta,
        seeds,
        rows,
        failures,
    ))
}

fn propose_tpe(
    rng: &mut ChaCha8Rng,
    observations: &[(usize, usize, f64)],
    n_depth: usize,
    cfg: &TpeConfig,
) -> (usize, usize) {
    let mut sorted: Vec<usize> = (0..observations.len()).collect();
    sorted.sort_by(|&a, &b| {
        observations[a]
            .2
            .partial_cmp(&observations[b].2)
            .unwrap()
            .then(a.cmp(&b))
    });
    let n_good = ((cfg.gamma * observations.len() as f64).ceil() as usize)
        .max(1)
        .min(observations.len());
    let good: Vec<usize> = sorted[..n_good].to_vec();
    let bad: Vec<usize> = sorted[n_good..].to_vec();

    let gw: Vec<usize> = good.iter().map(|&i| observations[i].0).collect();
    let gd: Vec<usize> = good.iter().map(|&i| observations[i].1).collect();
    let bw: Vec<usize> = bad.iter().map(|&i| observations[i].0).collect();
    let bd: Vec<usize> = bad.iter().map(|&i| observations[i].1).collect();

    let lw = categorical_density(&gw, 4);
    let ld = categorical_density(&gd, n_depth);
    let gw_d = categorical_density(&bw, 4);
    let gd_d = categorical_density(&bd, n_depth);

    let mut best = (0usize, 0usize);
    let mut best_ratio = f64::NEG_INFINITY;
    for _ in 0..cfg.candidates {
        let wi = sample_categorical(rng, &lw);
        let di = sample_categorical(rng, &ld);
        let ratio = (lw[wi] * ld[di]) / (gw_d[wi] * gd_d[di]);
        if ratio > best_ratio {
            best_ratio = ratio;
            best = (wi, di);
        }
    }
    best
}

/// Differentiable-search variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DartsVariant {
    Darts,
    DartsPlus,
    SDarts,
    SDartsPlus,
}

impl DartsVariant {
    pub fn name(self) -> &'static str {
        match self {
            DartsVariant::Darts => "darts",
            DartsVariant::DartsPlus => "darts+",
            DartsVariant::SDarts => "sdarts",
            DartsVariant::SDartsPlus => "sdarts+",
        }
    }

    pub fn from_name(s: &str) -> Result<Self, String> {
        match s {
            "darts" => Ok(DartsVariant::Darts),
            "darts+" => Ok(DartsVariant::DartsPlus),
            "sdarts" => Ok(DartsVariant::SDarts),
            "sdarts+" => Ok(DartsVariant::SDartsPlus),
            other => Err(format!("unknown search variant '{other}'")),
        }
    }

    pub fn mixture(self) -> MixtureMode {
        match self {
            DartsVariant::Darts | DartsVariant::DartsPlus => MixtureMode::Softmax,
            DartsVariant::SDarts | DartsVariant::SDartsPlus => MixtureMode::Sigmoid,
        }
    }

    pub fn early_stop(self) -> bool {
        matches!(self, DartsVariant::DartsPlus | DartsVariant::SDartsPlus)
    }

    pub fn all() -> [DartsVariant; 4] {
        [
            DartsVariant::Darts,
            DartsVariant::DartsPlus,
            DartsVariant::SDarts,
            DartsVariant::SDartsPlus,
        ]
    }
}

/// Differentiable search: per seed, build a fresh mixed network, run the
/// searching phase, evaluate the discretized architecture. Returns the
/// report plus each seed's search outcome (α trajectories for export).
pub fn darts_search(
    bench: &Bench<'_>,
    variant: DartsVariant,
    seeds: &[u64],
) -> Result<(SearchReport, Vec<(u64, SearchOutcome)>), String> {
    let meta = (
        bench.problem.name(),
        bench.profile.name.as_str(),
        bench.counts(),
        bench.train_set.seed(),
    );
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut outcomes = Vec::new();
    for &seed in seeds {
        let t0 = Instant::now();
        let mut net = MixedNetwork::seeded(
            2,
            bench.profile.widths,
            bench.profile.activation(bench.problem.kind()),
            variant.mixture(),
            seed,
        );
        let cfg = bench
            .profile
            .search_config(&bench.problem, variant.early_stop());
        let outcome = match search_phase(
            &mut net,
            &bench.problem,
            bench.train_set,
            bench.test_set,
            &cfg,
        ) {
            Ok(o) => o,
            Err(e) => {
                failures.push(format!("seed {seed} search: {e}"));
                continue;
            }
        };
        match bench.evaluate(&outcome.spec, seed) {
            Ok(rec) => rows.push(SeedRow {
                seed,
                spec: outcome.spec.to_string(),
                test_loss: rec.test_loss,
                relative_l2: rec.relative_l2,
                seconds: t0.elapsed().as_secs_f64(),
                stop_reason: Some(outcome.stop.name().into()),
                search_iterations: Some(outcome.iterations_run),
            }),
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
        outcomes.push((seed, outcome));
    }
    Ok((
        assemble_report(variant.name(), meta, seeds, rows, failures),
        outcomes,
    ))
}

/// 100 × mean(report errors) / mean(grid errors); errors unless the two
/// reports share problem and seed set.
pub fn error_ratio(report: &SearchReport, grid: &SearchReport) -> Result<f64, String> {
    if report.problem != grid.problem {
        return Err(format!(
            "error ratio across problems: {} vs {}",
            report.problem, grid.problem
        ));
    }
    if report.seeds != grid.seeds {
        return Err("error ratio across different seed sets".into());
    }
    if !grid.mean_error.is_finite() || grid.mean_error == 0.0 {
        return Err("grid mean error degenerate".into());
    }
    Ok(100.0 * report.mean_error / grid.mean_error)
}

fn method_rng(rng_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(0x5ea2c4 ^ stream);
    rng
}
