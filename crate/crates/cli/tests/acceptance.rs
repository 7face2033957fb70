//! Acceptance checks, one `[PASS]`/`[FAIL]` line each. Exits non-zero when
//! any check fails.
//!
//! The two real-data checks read `ionosphere.csv` and `wine.csv` from
//! `$SEMGP_DATA_DIR` (default: `data/` at the workspace root, filled by
//! `scripts/prepare_data.py`). A missing file fails its check.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semgp::config::{resolve, Overrides};
use semgp::{run_campaign, run_campaign_on, ExperimentConfig, Method, SemanticSetting};
use semgp_core::dataset::{bundled_toy, load_delimited, stratified_split, SplitDataset};
use semgp_core::decomp::{g_pbi, g_tch, g_ws, pbi_distances, IdealPoint, Scalarizer, WeightVector};
use semgp_core::engine::{
    run, run_with_observer, EngineConfig, Individual, Population, ReplacementRule, RunObserver,
    UpdateOutcome,
};
use semgp_core::gp::ProgramTree;
use semgp_core::metrics::{hypervolume_2d, mean_multiplicity, nondominated_indices, rank_sum_exact, rank_sum_normal};
use semgp_core::objectives::ObjectiveVector;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_front(rng: &mut ChaCha8Rng, max: usize) -> Vec<ObjectiveVector> {
    let n = rng.random_range(1..=max);
    (0..n)
        .map(|_| ObjectiveVector::new(rng.random(), rng.random()))
        .collect()
}

/// Counts 1000x1000 grid cells whose centre is dominated by some point.
fn grid_hypervolume(points: &[ObjectiveVector]) -> f64 {
    const N: usize = 1000;
    let mut cells = 0usize;
    for cx in 0..N {
        let x = (cx as f64 + 0.5) / N as f64;
        let height = points
            .iter()
            .filter(|p| p.tpr >= x)
            .map(|p| p.tnr)
            .fold(0.0f64, f64::max);
        for cy in 0..N {
            if (cy as f64 + 0.5) / N as f64 <= height {
                cells += 1;
            }
        }
    }
    cells as f64 / (N * N) as f64
}

fn hypervolume_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let front = random_front(&mut rng, 50);
        let hv = hypervolume_2d(&front).map_err(|e| e.to_string())?;
        worst = worst.max((hv - grid_hypervolume(&front)).abs());
    }
    let elapsed = start.elapsed();
    ensure(worst <= 2e-3, format!("max |sweep - grid| = {worst:.2e}"))?;
    ensure(elapsed < Duration::from_secs(10), format!("took {elapsed:?}"))?;
    Ok(format!("max error {worst:.2e} in {:.2?}", elapsed))
}

fn dominance_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for set in 0..500 {
        let n = rng.random_range(0..=200);
        // Coarse coordinates so ties and duplicates occur.
        let pts: Vec<ObjectiveVector> = (0..n)
            .map(|_| {
                ObjectiveVector::new(
                    rng.random_range(0..=20) as f64 / 20.0,
                    rng.random_range(0..=20) as f64 / 20.0,
                )
            })
            .collect();
        let brute: Vec<usize> = (0..n)
            .filter(|&i| !pts.iter().any(|q| q.dominates(&pts[i])))
            .collect();
        let mut got = nondominated_indices(&pts);
        got.sort_unstable();
        ensure(got == brute, format!("set {set}: {got:?} vs {brute:?}"))?;
    }
    Ok("500 sets match".into())
}

fn scalarizer_suite() -> Check {
    let close = |a: f64, b: f64, what: &str| ensure((a - b).abs() <= 1e-9, format!("{what}: {a} vs {b}"));
    let v = ObjectiveVector::new;
    let w = |a: f64, b: f64| WeightVector([a, b]);
    let z = |a: f64, b: f64| IdealPoint([a, b]);

    close(g_ws(&v(0.8, 0.6), &w(0.5, 0.5)).value, 0.7, "ws equal weights")?;
    close(g_ws(&v(0.3, 0.9), &w(1.0, 0.0)).value, 0.3, "ws axis")?;
    close(g_ws(&v(0.0, 0.0), &w(0.3, 0.7)).value, 0.0, "ws zero")?;
    close(g_tch(&v(0.6, 0.9), &w(1.0, 0.0), &z(1.0, 1.0)).value, 0.4, "tch axis")?;
    close(g_tch(&v(0.7, 0.2), &w(0.4, 0.6), &z(0.7, 0.2)).value, 0.0, "tch ideal")?;
    close(g_tch(&v(0.8, 0.4), &w(0.5, 0.5), &z(1.0, 1.0)).value, 0.3, "tch equal weights")?;

    // f' - z' = (0.2, 0.2) and (0.4, 0.0) with z' at the origin.
    let ray = 0.2 * 2f64.sqrt();
    let (d1, d2) = pbi_distances(&v(0.8, 0.8), &w(1.0, 1.0), &z(1.0, 1.0)).map_err(|e| e.to_string())?;
    close(d1, ray, "pbi on-ray d1")?;
    close(d2, 0.0, "pbi on-ray d2")?;
    let g = g_pbi(&v(0.8, 0.8), &w(1.0, 1.0), &z(1.0, 1.0), 0.1).map_err(|e| e.to_string())?;
    close(g.value, ray, "pbi on-ray g")?;
    // Independent projection: unit ray (1,1)/sqrt2, residual of (0.4, 0).
    let u = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
    let p1 = 0.4 * u[0];
    let r = [0.4 - p1 * u[0], -p1 * u[1]];
    let p2 = (r[0] * r[0] + r[1] * r[1]).sqrt();
    let g = g_pbi(&v(0.6, 1.0), &w(1.0, 1.0), &z(1.0, 1.0), 0.1).map_err(|e| e.to_string())?;
    close(g.value, p1 + 0.1 * p2, "pbi off-ray g")?;
    // The published value is rounded to five places.
    ensure((g.value - 0.31113).abs() < 5e-6, format!("pbi off-ray {} vs 0.31113", g.value))?;
    let g = g_pbi(&v(0.4, 0.5), &w(0.2, 0.8), &z(0.4, 0.5), 0.1).map_err(|e| e.to_string())?;
    close(g.value, 0.0, "pbi ideal")?;

    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let zz = z(rng.random(), rng.random());
        let f = v(rng.random::<f64>() * zz.0[0], rng.random::<f64>() * zz.0[1]);
        let ww = w(rng.random(), rng.random::<f64>() + 1e-3);
        let (d1, d2) = pbi_distances(&f, &ww, &zz).map_err(|e| e.to_string())?;
        let diff = [(1.0 - f.tpr) - (1.0 - zz.0[0]), (1.0 - f.tnr) - (1.0 - zz.0[1])];
        let norm2 = diff[0] * diff[0] + diff[1] * diff[1];
        worst = worst.max((d1 * d1 + d2 * d2 - norm2).abs());
    }
    ensure(worst <= 1e-12, format!("orthogonality error {worst:.2e}"))?;
    Ok(format!("examples exact, orthogonality error {worst:.1e}"))
}

#[derive(Default)]
struct UpdateAudit {
    updates: usize,
    max_replacements: usize,
    order_violations: usize,
}

impl RunObserver for UpdateAudit {
    fn on_update(&mut self, _generation: usize, _subproblem: usize, outcome: &UpdateOutcome) {
        self.updates += 1;
        self.max_replacements = self.max_replacements.max(outcome.replacements());
        if outcome.visited_similarity.windows(2).any(|w| w[0] > w[1]) {
            self.order_violations += 1;
        }
    }
}

fn leaf(id: u64, tpr: f64, tnr: f64) -> Arc<Individual> {
    Arc::new(Individual {
        id,
        tree: ProgramTree::leaf(0),
        semantics: vec![0.0],
        objectives: ObjectiveVector::new(tpr, tnr),
    })
}

fn semantic_update_invariant() -> Check {
    let split = stratified_split(&bundled_toy(), 4).map_err(|e| e.to_string())?;
    let mut audited = 0;
    for (k, scalarizer) in [Scalarizer::WeightedSum, Scalarizer::Tchebycheff, Scalarizer::pbi()]
        .into_iter()
        .enumerate()
    {
        let mut cfg = EngineConfig {
            scalarizer,
            semantic_ordering: true,
            seed: 40 + k as u64,
            ..EngineConfig::default()
        };
        cfg.gp.population_size = 100;
        cfg.gp.generations = 20;
        let mut audit = UpdateAudit::default();
        run_with_observer(&cfg, &split, &mut audit).map_err(|e| e.to_string())?;
        ensure(audit.updates == 100 * 20, format!("{} updates observed", audit.updates))?;
        ensure(audit.max_replacements <= 1, format!("{} replacements by one offspring", audit.max_replacements))?;
        ensure(audit.order_violations == 0, format!("{} unordered visits", audit.order_violations))?;
        audited += audit.updates;
    }

    let members = vec![leaf(0, 0.2, 0.2), leaf(1, 0.3, 0.1), leaf(2, 0.1, 0.3), leaf(3, 0.2, 0.1)];
    let mut pop = Population::new(members, 4, Scalarizer::WeightedSum).map_err(|e| e.to_string())?;
    let y = leaf(9, 0.9, 0.9);
    let out = pop
        .canonical_update(&y, 1, ReplacementRule::AtLeastAsGood)
        .map_err(|e| e.to_string())?;
    ensure(out.replacements() >= 2, format!("canonical made {} replacements", out.replacements()))?;
    Ok(format!(
        "{audited} semantic updates clean; canonical instance made {} replacements",
        out.replacements()
    ))
}

fn duplication_reduction() -> Check {
    let start = Instant::now();
    let split = stratified_split(&bundled_toy(), 5).map_err(|e| e.to_string())?;
    let mut wins = 0;
    let mut detail = Vec::new();
    for pair in 0..10u64 {
        let mut mult = [0.0; 2];
        for (slot, semantic) in [false, true].into_iter().enumerate() {
            let mut cfg = EngineConfig {
                scalarizer: Scalarizer::pbi(),
                semantic_ordering: semantic,
                seed: 500 + pair,
                ..EngineConfig::default()
            };
            cfg.gp.population_size = 200;
            cfg.gp.generations = 30;
            let result = run(&cfg, &split).map_err(|e| e.to_string())?;
            mult[slot] = mean_multiplicity(&result.final_archive.objectives());
        }
        if mult[1] < mult[0] {
            wins += 1;
        }
        detail.push(format!("{:.1}/{:.1}", mult[0], mult[1]));
    }
    let elapsed = start.elapsed();
    let summary = format!("semantic lower in {wins}/10 (canonical/semantic: {})", detail.join(" "));
    ensure(wins >= 8, summary.clone())?;
    ensure(elapsed < Duration::from_secs(300), format!("took {elapsed:?}"))?;
    Ok(format!("{summary} in {elapsed:.1?}"))
}

fn data_dir() -> PathBuf {
    std::env::var_os("SEMGP_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn load_split(file: &str, minority: &str, seed: u64) -> Result<SplitDataset, String> {
    let path = data_dir().join(file);
    let data = load_delimited(&path, minority)
        .map_err(|e| format!("{} unavailable ({e}); run scripts/prepare_data.py", path.display()))?;
    stratified_split(&data, seed).map_err(|e| e.to_string())
}

fn full_config(method: Method, semantic: SemanticSetting, seed: u64, out: PathBuf) -> Result<ExperimentConfig, String> {
    let flags = Overrides {
        dataset: Some("unused".into()),
        minority: Some("unused".into()),
        methods: vec![method],
        semantic: Some(semantic),
        runs: Some(30),
        seed: Some(seed),
        out: Some(out),
        ..Overrides::default()
    };
    resolve(&[], &flags, None).map_err(|e| e.to_string())
}

fn ion_direction() -> Check {
    const SEMANTIC_TARGET: f64 = 0.787;
    const CANONICAL_TARGET: f64 = 0.731;
    let mut attempts = Vec::new();
    for seed in [1u64, 2] {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = full_config(Method::Wgt, SemanticSetting::Both, seed, tmp.path().to_path_buf())?;
        let split = load_split("ionosphere.csv", "b", cfg.split_seed)?;
        let summary = run_campaign_on(&cfg, &split).map_err(|e| e.to_string())?;
        let canonical = summary.pair(Method::Wgt, false).ok_or("missing canonical row")?;
        let semantic = summary.pair(Method::Wgt, true).ok_or("missing semantic row")?;
        let p = semantic.comparison.ok_or("missing test")?.p_value;
        let line = format!(
            "seed {seed}: semantic {:.3}±{:.3}, canonical {:.3}±{:.3}, p={p:.4}",
            semantic.hv_mean, semantic.hv_std, canonical.hv_mean, canonical.hv_std
        );
        let significant = semantic.hv_mean > canonical.hv_mean && p < 0.05;
        let in_band = (semantic.hv_mean - SEMANTIC_TARGET).abs() <= 0.05
            && (canonical.hv_mean - CANONICAL_TARGET).abs() <= 0.05;
        attempts.push(line);
        if significant && in_band {
            return Ok(attempts.join("; "));
        }
        if !significant {
            continue;
        }
        // Significant but out of band: a new seed batch is not a remedy.
        break;
    }
    Err(format!(
        "{} (need semantic > canonical, p < 0.05, means within 0.05 of {SEMANTIC_TARGET}/{CANONICAL_TARGET})",
        attempts.join("; ")
    ))
}

fn wine_sanity() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = full_config(Method::Tch, SemanticSetting::On, 7, tmp.path().to_path_buf())?;
    let split = load_split("wine.csv", "1", cfg.split_seed)?;
    let summary = run_campaign_on(&cfg, &split).map_err(|e| e.to_string())?;
    let pair = summary.pair(Method::Tch, true).ok_or("missing row")?;
    ensure(pair.hv_po >= 0.95, format!("PO-front HV {:.4}", pair.hv_po))?;
    Ok(format!("PO-front HV {:.4} (mean {:.4})", pair.hv_po, pair.hv_mean))
}

fn wilcoxon_correctness() -> Check {
    let t = rank_sum_exact(&[1.0, 2.0], &[3.0, 4.0]).map_err(|e| e.to_string())?;
    ensure((t.p_value - 1.0 / 3.0).abs() < 1e-12, format!("exact p {} vs 1/3", t.p_value))?;
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let shift: f64 = rng.random_range(0.0..1.5);
        let a: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..8).map(|_| rng.random::<f64>() + shift).collect();
        let exact = rank_sum_exact(&a, &b).map_err(|e| e.to_string())?.p_value;
        let normal = rank_sum_normal(&a, &b).map_err(|e| e.to_string())?.p_value;
        worst = worst.max((exact - normal).abs());
    }
    ensure(worst <= 0.02, format!("exact vs normal differ by {worst:.4}"))?;
    Ok(format!("p(1,2 | 3,4) = 1/3, max exact/normal gap {worst:.4}"))
}

fn campaign_determinism() -> Check {
    let toy = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data/toy_imbalanced.csv");
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    for (k, dir) in dirs.iter().enumerate() {
        let flags = Overrides {
            dataset: Some(toy.clone()),
            minority: Some("pos".into()),
            semantic: Some(SemanticSetting::Both),
            runs: Some(3),
            seed: Some(99),
            population: Some(40),
            generations: Some(6),
            neighborhood: Some(8),
            jobs: Some(k + 1),
            out: Some(dir.path().to_path_buf()),
            ..Overrides::default()
        };
        let cfg = resolve(&[], &flags, None).map_err(|e| e.to_string())?;
        run_campaign(&cfg).map_err(|e| e.to_string())?;
    }
    let mut files = Vec::new();
    for entry in walk(dirs[0].path()) {
        if entry.extension().is_some_and(|e| e == "csv") {
            files.push(entry.strip_prefix(dirs[0].path()).unwrap().to_path_buf());
        }
    }
    files.sort();
    ensure(files.len() > 20, format!("only {} CSV files", files.len()))?;
    for f in &files {
        let a = std::fs::read(dirs[0].path().join(f)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dirs[1].path().join(f)).map_err(|e| format!("{}: {e}", f.display()))?;
        ensure(a == b, format!("{} differs", f.display()))?;
    }
    Ok(format!("{} CSV files identical", files.len()))
}

fn walk(dir: &std::path::Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out
}

fn ubss_independence() -> Check {
    let split = stratified_split(&bundled_toy(), 10).map_err(|e| e.to_string())?;
    for scalarizer in [Scalarizer::WeightedSum, Scalarizer::Tchebycheff, Scalarizer::pbi()] {
        let mut cfg = EngineConfig {
            scalarizer,
            seed: 1010,
            ubss: 0.1,
            ..EngineConfig::default()
        };
        cfg.gp.population_size = 60;
        cfg.gp.generations = 10;
        let a = run(&cfg, &split).map_err(|e| e.to_string())?;
        cfg.ubss = 10.0;
        let b = run(&cfg, &split).map_err(|e| e.to_string())?;
        ensure(a == b, format!("{} results differ", scalarizer.name()))?;
    }
    Ok("wgt, tch and pbi runs identical".into())
}

fn main() {
    let checks: [Criterion; 10] = [
        ("hypervolume matches grid oracle", hypervolume_oracle),
        ("non-dominated filter matches brute force", dominance_oracle),
        ("scalarizer examples and PBI orthogonality", scalarizer_suite),
        ("semantic update replaces at most once, in order", semantic_update_invariant),
        ("semantic ordering reduces duplication", duplication_reduction),
        ("Ion WGT: semantic beats canonical", ion_direction),
        ("Wine TCH: PO-front hypervolume", wine_sanity),
        ("rank-sum test exact and normal branches", wilcoxon_correctness),
        ("campaign CSVs are byte-identical", campaign_determinism),
        ("canonical runs ignore ubss", ubss_independence),
    ];
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {:>2}. {name}: {detail} ({secs:.1}s)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name}: {detail} ({secs:.1}s)", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
