//! Repeated runs over (method, semantic) pairs and the files they produce.
//!
//! Layout under the output directory:
//!
//! ```text
//! summary.csv                      one row per run
//! campaign.csv                     one row per (method, semantic) pair
//! po_front_<method>_<mode>.csv     accumulated test-space front of a pair
//! <method>_<mode>/front_<run>.csv        archive per generation, pivot flagged
//! <method>_<mode>/duplication_<run>.csv  archive multiplicities per generation
//! <method>_<mode>/test_front_<run>.csv   final front on the test half
//! ```
//!
//! `<mode>` is `canonical` or `semantic`. Every file is a pure function of
//! the configuration, so reruns are byte-identical regardless of `jobs`.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use semgp_core::dataset::{load_delimited, stratified_split, DatasetError, SplitDataset};
use semgp_core::engine::{run, EngineError, RunResult};
use semgp_core::metrics::{
    accumulated_po_front, duplication_histogram, hypervolume_2d, mean_multiplicity, mean_std, wilcoxon_rank_sum,
    MetricsError, TestReport,
};
use semgp_core::objectives::ObjectiveVector;
use thiserror::Error;

use crate::config::{ExperimentConfig, Method};
use crate::svg::emit_svg_scatter;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("{method} {mode} run {run}: {source}")]
    Engine {
        method: Method,
        mode: &'static str,
        run: usize,
        source: EngineError,
    },
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("thread pool: {0}")]
    Pool(String),
}

pub fn mode_name(semantic: bool) -> &'static str {
    if semantic {
        "semantic"
    } else {
        "canonical"
    }
}

/// Numbers kept from one run once its files are written.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub run: usize,
    pub seed: u64,
    pub hv_train: f64,
    pub hv_test: f64,
    /// Mean multiplicity of the final training-space archive.
    pub multiplicity: f64,
    pub test_front: Vec<ObjectiveVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSummary {
    pub method: Method,
    pub semantic: bool,
    pub runs: Vec<RunStats>,
    pub hv_mean: f64,
    pub hv_std: f64,
    /// Hypervolume of the front accumulated over all runs of the pair.
    pub hv_po: f64,
    /// Semantic-vs-canonical rank-sum test on test hypervolume, present
    /// when both modes ran. Shared by the two rows of a method.
    pub comparison: Option<TestReport>,
}

impl PairSummary {
    /// True when the comparison is significant and this row has the larger
    /// mean.
    pub fn significantly_better(&self, other_mean: f64) -> bool {
        self.comparison.is_some_and(|t| t.significant) && self.hv_mean > other_mean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub dataset: String,
    pub out_dir: PathBuf,
    pub pairs: Vec<PairSummary>,
}

impl CampaignSummary {
    pub fn pair(&self, method: Method, semantic: bool) -> Option<&PairSummary> {
        self.pairs.iter().find(|p| p.method == method && p.semantic == semantic)
    }

    fn partner_mean(&self, p: &PairSummary) -> Option<f64> {
        self.pair(p.method, !p.semantic).map(|q| q.hv_mean)
    }

    /// Plain-text table of the pair rows; `*` marks a significantly better
    /// mean.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<6} {:<10} {:>9} {:>9} {:>9} {:>9}\n",
            "method", "mode", "hv_mean", "hv_std", "hv_po", "p"
        );
        for p in &self.pairs {
            let mark = match self.partner_mean(p) {
                Some(m) if p.significantly_better(m) => "*",
                _ => "",
            };
            let pv = p.comparison.map(|t| format!("{:.4}", t.p_value)).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:<6} {:<10} {:>9} {:>9.4} {:>9.4} {:>9}",
                p.method.to_string(),
                mode_name(p.semantic),
                format!("{:.4}{mark}", p.hv_mean),
                p.hv_std,
                p.hv_po,
                pv
            );
        }
        s
    }
}

fn write(path: &Path, text: &str) -> Result<(), CampaignError> {
    fs::write(path, text).map_err(|source| CampaignError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), CampaignError> {
    fs::create_dir_all(path).map_err(|source| CampaignError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn front_csv(result: &RunResult) -> String {
    let mut s = String::from("generation,tpr,tnr,is_pivot\n");
    for r in &result.per_generation {
        for p in &r.archive {
            let _ = writeln!(s, "{},{},{},0", r.generation, p.tpr, p.tnr);
        }
        if let Some(p) = r.pivot {
            let _ = writeln!(s, "{},{},{},1", r.generation, p.tpr, p.tnr);
        }
    }
    s
}

fn duplication_csv(result: &RunResult) -> String {
    let mut s = String::from("tpr,tnr,multiplicity,generation\n");
    for r in &result.per_generation {
        for p in duplication_histogram(&r.archive) {
            let _ = writeln!(s, "{},{},{},{}", p.tpr, p.tnr, p.multiplicity, r.generation);
        }
    }
    s
}

fn points_csv(points: &[ObjectiveVector]) -> String {
    let mut s = String::from("tpr,tnr\n");
    for p in points {
        let _ = writeln!(s, "{},{}", p.tpr, p.tnr);
    }
    s
}

struct Job {
    method: Method,
    semantic: bool,
    run: usize,
}

fn execute(cfg: &ExperimentConfig, data: &SplitDataset, job: &Job) -> Result<RunStats, CampaignError> {
    let seed = cfg.run_seed(job.run);
    let mode = mode_name(job.semantic);
    let engine = cfg.engine(job.method, job.semantic, seed);
    let result = run(&engine, data).map_err(|source| CampaignError::Engine {
        method: job.method,
        mode,
        run: job.run,
        source,
    })?;
    let dir = cfg.out_dir.join(format!("{}_{mode}", job.method));
    write(&dir.join(format!("front_{}.csv", job.run)), &front_csv(&result))?;
    write(&dir.join(format!("duplication_{}.csv", job.run)), &duplication_csv(&result))?;
    write(&dir.join(format!("test_front_{}.csv", job.run)), &points_csv(&result.test_front))?;
    if cfg.emit_svg {
        let stem = format!("run_{}", job.run);
        emit_svg_scatter(&result, &dir, &stem, &cfg.svg_generations).map_err(|source| CampaignError::Io {
            path: dir.clone(),
            source,
        })?;
    }
    log::info!(
        "{} {mode} run {} seed {seed}: hv_test {:.4}",
        job.method,
        job.run,
        result.hypervolume_test
    );
    Ok(RunStats {
        run: job.run,
        seed,
        hv_train: result.hypervolume_train,
        hv_test: result.hypervolume_test,
        multiplicity: mean_multiplicity(&result.final_archive.objectives()),
        test_front: result.test_front,
    })
}

/// Loads and splits the dataset named in `cfg`, then runs the campaign.
pub fn run_campaign(cfg: &ExperimentConfig) -> Result<CampaignSummary, CampaignError> {
    let data = load_delimited(&cfg.dataset_path, &cfg.minority_label)?;
    let split = stratified_split(&data, cfg.split_seed)?;
    run_campaign_on(cfg, &split)
}

/// Runs `cfg.runs` runs of every (method, semantic) pair on `data` and
/// writes all campaign files.
pub fn run_campaign_on(cfg: &ExperimentConfig, data: &SplitDataset) -> Result<CampaignSummary, CampaignError> {
    let mut jobs = Vec::new();
    for &method in &cfg.methods {
        for &semantic in cfg.semantic.flags() {
            create_dir(&cfg.out_dir.join(format!("{method}_{}", mode_name(semantic))))?;
            for run in 0..cfg.runs {
                jobs.push(Job { method, semantic, run });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CampaignError::Pool(e.to_string()))?;
    let stats: Vec<RunStats> = pool.install(|| {
        jobs.par_iter()
            .map(|job| execute(cfg, data, job))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut pairs = Vec::new();
    let mut summary = String::from("method,semantic,run,seed,hv_train,hv_test\n");
    for (chunk, job) in stats.chunks(cfg.runs).zip(jobs.iter().step_by(cfg.runs)) {
        for s in chunk {
            let _ = writeln!(
                summary,
                "{},{},{},{},{},{}",
                job.method, job.semantic, s.run, s.seed, s.hv_train, s.hv_test
            );
        }
        let hv: Vec<f64> = chunk.iter().map(|s| s.hv_test).collect();
        let (hv_mean, hv_std) = mean_std(&hv);
        let fronts: Vec<Vec<ObjectiveVector>> = chunk.iter().map(|s| s.test_front.clone()).collect();
        let po = accumulated_po_front(&fronts);
        let po_points: Vec<ObjectiveVector> = po.iter().map(|p| p.point()).collect();
        let mut po_text = String::from("tpr,tnr,multiplicity\n");
        for p in &po {
            let _ = writeln!(po_text, "{},{},{}", p.tpr, p.tnr, p.multiplicity);
        }
        write(
            &cfg.out_dir
                .join(format!("po_front_{}_{}.csv", job.method, mode_name(job.semantic))),
            &po_text,
        )?;
        pairs.push(PairSummary {
            method: job.method,
            semantic: job.semantic,
            runs: chunk.to_vec(),
            hv_mean,
            hv_std,
            hv_po: hypervolume_2d(&po_points)?,
            comparison: None,
        });
    }

    // Canonical rows precede their semantic partner.
    for i in 0..pairs.len() {
        if pairs[i].semantic || i + 1 >= pairs.len() {
            continue;
        }
        if pairs[i + 1].method != pairs[i].method || !pairs[i + 1].semantic {
            continue;
        }
        let canonical: Vec<f64> = pairs[i].runs.iter().map(|s| s.hv_test).collect();
        let semantic: Vec<f64> = pairs[i + 1].runs.iter().map(|s| s.hv_test).collect();
        let report = wilcoxon_rank_sum(&semantic, &canonical)?;
        pairs[i].comparison = Some(report);
        pairs[i + 1].comparison = Some(report);
    }

    let mut campaign = String::from("method,semantic,hv_mean,hv_std,hv_po,p_value,significant\n");
    for p in &pairs {
        let (pv, sig) = match p.comparison {
            Some(t) => (t.p_value.to_string(), t.significant.to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            campaign,
            "{},{},{},{},{},{pv},{sig}",
            p.method, p.semantic, p.hv_mean, p.hv_std, p.hv_po
        );
    }
    write(&cfg.out_dir.join("summary.csv"), &summary)?;
    write(&cfg.out_dir.join("campaign.csv"), &campaign)?;

    Ok(CampaignSummary {
        dataset: data.train.name().to_string(),
        out_dir: cfg.out_dir.clone(),
        pairs,
    })
}
