//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use plopt_core::io::{self, GapReportDoc, PlanDoc};
use plopt_core::number::{int, parse, ratio};
use plopt_core::optimizer::RatioQuality;
use plopt_core::testkit::{self, all_feasible, best, random_instance, random_shape};
use plopt_core::*;
use rand::Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/case-study")
        .join(name)
        .display()
        .to_string()
}

fn plopt(args: &[&str]) -> Result<String, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_plopt"))
        .args(args)
        .env_remove("PLOPT_THREADS")
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!(
            "plopt {} exited with {:?}: {}",
            args.join(" "),
            o.status.code(),
            String::from_utf8_lossy(&o.stderr)
        ));
    }
    String::from_utf8(o.stdout).map_err(|e| e.to_string())
}

fn case_args(cmd: &str) -> Vec<String> {
    let mut v = vec![
        cmd.to_owned(),
        "--model".into(),
        fixture("model.json"),
        "--assessment".into(),
        fixture("assessment.json"),
    ];
    if cmd == "optimize" || cmd == "pareto" {
        v.extend(["--catalog".into(), fixture("modifications.json")]);
    }
    v
}

fn run_case(cmd: &str, extra: &[&str]) -> Result<String, String> {
    let mut args = case_args(cmd);
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    plopt(&refs)
}

fn dec(s: &str) -> Rational {
    parse(s).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn plan_json(extra: &[&str]) -> Result<PlanDoc, String> {
    let mut args = extra.to_vec();
    args.extend(["--format", "json"]);
    let text = run_case("optimize", &args)?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn feasible_subset_count() -> Outcome {
    let (out, t) = timed(|| plopt(&["count", "--catalog", &fixture("modifications.json")]));
    let out = out?;
    ensure(out == "359\n", || format!("count printed {out:?}"))?;
    ensure(t < Duration::from_secs(1), || format!("took {t:?}"))?;
    Ok(format!("359 feasible subsets in {} ms", t.as_millis()))
}

fn modification_arithmetic() -> Outcome {
    let catalog =
        io::load_catalog(Path::new(&fixture("modifications.json"))).map_err(|e| e.to_string())?;
    let model = io::load_model(Path::new(&fixture("model.json"))).map_err(|e| e.to_string())?;
    let matrix =
        io::load_assessment(Path::new(&fixture("assessment.json"))).map_err(|e| e.to_string())?;
    let baseline = ResolvedAssessment::resolve(&model, &matrix, IrrelevancePolicy::Perfect)
        .map_err(|e| e.to_string())?;
    let m8 = &catalog.modifications[catalog.index_of("m8").map_err(|e| e.to_string())?];
    let cost = m8.total_cost();
    let gain = subset_gain(&catalog, &["m8"], &baseline).map_err(|e| e.to_string())?;
    ensure(cost == int(25), || format!("m8 cost {cost}"))?;
    ensure(gain == int(15), || format!("m8 gain {gain}"))?;
    Ok("m8 costs 25 and gains 15".into())
}

fn budget_optimum() -> Outcome {
    let (plan, t) = timed(|| plan_json(&["--budget", "250"]));
    let plan = plan?;
    ensure(plan.subset == ["m3", "m5", "m6", "m8", "m10"], || {
        format!("subset {:?}", plan.subset)
    })?;
    ensure(dec(&plan.total_gain) == dec("102.5"), || {
        format!("gain {}", plan.total_gain)
    })?;
    ensure(dec(&plan.total_cost) == int(233), || {
        format!("cost {}", plan.total_cost)
    })?;
    ensure(t < Duration::from_secs(1), || format!("took {t:?}"))?;
    Ok(format!(
        "m3+m5+m6+m8+m10, gain 102.5, cost 233 in {} ms",
        t.as_millis()
    ))
}

fn ratio_optimum() -> Outcome {
    let adherence = plan_json(&["--gamma", "1.6", "--ratio-quality", "adherence"])?;
    let plan = plan_json(&["--gamma", "1.6", "--ratio-quality", "gain"])?;
    ensure(plan.subset == ["m2", "m6", "m8", "m10"], || {
        format!("subset {:?}", plan.subset)
    })?;
    ensure(dec(&plan.total_gain) == dec("69.3"), || {
        format!("gain {}", plan.total_gain)
    })?;
    ensure(dec(&plan.total_cost) == int(109), || {
        format!("cost {}", plan.total_cost)
    })?;
    Ok(format!(
        "m2+m6+m8+m10, gain 69.3, cost 109, objective {:.4} (quality = gain; with quality = total adherence the optimum is {} instead)",
        plan.objective_value,
        adherence.subset.join("+")
    ))
}

fn adherence_improvement() -> Outcome {
    let score: serde_json::Value = serde_json::from_str(&run_case("score", &["--format", "json"])?)
        .map_err(|e| e.to_string())?;
    let before = score["adherence"].as_str().unwrap_or_default().to_owned();
    let plan = plan_json(&["--budget", "250"])?;
    ensure(dec(&before) == dec("262.4"), || {
        format!("baseline {before}")
    })?;
    ensure(dec(&plan.baseline_adherence) == dec("262.4"), || {
        format!("plan baseline {}", plan.baseline_adherence)
    })?;
    ensure(dec(&plan.adherence_after) == dec("364.9"), || {
        format!("after {}", plan.adherence_after)
    })?;
    Ok("262.4 -> 364.9".into())
}

fn gap_flags() -> Outcome {
    let doc: GapReportDoc = serde_json::from_str(&run_case("gaps", &["--format", "json"])?)
        .map_err(|e| e.to_string())?;
    let expected = ["2.1.2", "2.2.2", "3.1", "3.6", "4.2", "5.2", "5.3"];
    ensure(doc.high_impact_features == expected, || {
        format!("flagged {:?}", doc.high_impact_features)
    })?;
    ensure(doc.stddev_form == "population", || doc.stddev_form.clone())?;
    for f in doc.features.iter().filter(|f| f.high_impact) {
        ensure(dec(&f.gap) > ratio(27, 10), || {
            format!("{} gap {}", f.id, f.gap)
        })?;
    }
    let min = doc
        .features
        .iter()
        .filter(|f| f.high_impact)
        .map(|f| dec(&f.gap))
        .min()
        .unwrap_or_else(|| int(0));
    Ok(format!(
        "{} (population stddev, threshold {:.4}, smallest flagged gap {})",
        expected.join(", "),
        doc.threshold,
        number::format(&min)
    ))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = testkit::rng(0x5eed);
    let instances = 1000;
    let mut checks = 0;
    for i in 0..instances {
        let shape = random_shape(&mut rng, 12);
        let inst = random_instance(&mut rng, &shape);
        let baseline = inst.baseline();
        let entries = all_feasible(&inst.catalog, &baseline);
        let quality = if i % 2 == 0 {
            RatioQuality::Gain
        } else {
            RatioQuality::Adherence
        };
        let config = OptimizerConfig {
            ratio_quality: quality,
            ..OptimizerConfig::default()
        };
        let opt = Optimizer::new(&inst.catalog, &baseline, config).map_err(|e| e.to_string())?;
        let xi = testkit::generous_budget(&inst.catalog) * ratio(rng.gen_range(0..=20), 20);
        let gamma: f64 = rng.gen_range(0.1..4.0);
        for objective in [Objective::Budget(xi), Objective::Ratio(gamma)] {
            let want = best(&entries, &objective, quality, &baseline.adherence());
            let got = opt.optimize(&objective);
            checks += 1;
            match (got, want) {
                (Ok(plan), Some(e))
                    if plan.subset == e.ids
                        && plan.total_gain == e.gain
                        && plan.total_cost == e.cost =>
                {
                    if !opt.verify(&plan, &objective).is_empty() {
                        return Err(format!("instance {i}: plan failed verification"));
                    }
                }
                (Err(Error::NoCandidates), None) => {}
                (got, want) => {
                    return Err(format!(
                        "instance {i} {objective:?}: search {:?}, reference {:?}",
                        got.map(|p| p.subset),
                        want.map(|e| &e.ids)
                    ))
                }
            }
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(60), || format!("took {t:?}"))?;
    Ok(format!(
        "{instances} instances, {checks} optima, 0 mismatches in {:.1} s",
        t.as_secs_f64()
    ))
}

fn budget_monotonicity() -> Outcome {
    let mut rng = testkit::rng(0xb0d9e7);
    let instances = 300;
    let steps = 25;
    for i in 0..instances {
        let shape = random_shape(&mut rng, 12);
        let inst = random_instance(&mut rng, &shape);
        let baseline = inst.baseline();
        let opt = Optimizer::new(&inst.catalog, &baseline, OptimizerConfig::default())
            .map_err(|e| e.to_string())?;
        let total = testkit::generous_budget(&inst.catalog);
        let mut last = int(0);
        for k in 0..=steps {
            let plan = opt
                .optimize_budget(&(&total * ratio(k, steps)))
                .map_err(|e| e.to_string())?;
            ensure(plan.total_gain >= last, || {
                format!("instance {i}: gain fell at step {k}")
            })?;
            last = plan.total_gain;
        }
    }
    Ok(format!(
        "{instances} instances x {} budgets, 0 violations",
        steps + 1
    ))
}

fn normalization() -> Outcome {
    let mut rng = testkit::rng(0x100);
    let models = 1000;
    for i in 0..models {
        let model = testkit::random_model(&mut rng);
        let total: Rational = model
            .features()
            .map(|(_, f)| model.feature_overall_weight(&f.id).unwrap())
            .sum();
        ensure(total == int(100), || {
            format!("model {i}: weights sum to {total}")
        })?;

        let products = rng.gen_range(1..=4);
        let mut matrix = testkit::random_matrix(&mut rng, &model, products);
        let products_list = matrix.products.clone();
        for c in &model.characteristics {
            // make irrelevance common enough to matter
            for f in &c.features {
                for p in &products_list {
                    if rng.gen_bool(0.2) {
                        matrix.set(&f.id, &p.id, CellValue::Irrelevant);
                    }
                }
            }
            // a fully irrelevant characteristic is rejected by design; keep one cell
            for p in &products_list {
                let all_irrelevant = c
                    .features
                    .iter()
                    .all(|f| matrix.get(&f.id, &p.id) == Some(&CellValue::Irrelevant));
                if all_irrelevant {
                    matrix.set(&c.features[0].id, &p.id, CellValue::Score(ratio(1, 2)));
                }
            }
        }
        let r = ResolvedAssessment::resolve(&model, &matrix, IrrelevancePolicy::Redistribute)
            .map_err(|e| format!("model {i}: {e}"))?;
        for p in 0..r.product_count() {
            let sum: Rational = (0..r.feature_count())
                .map(|f| r.weight_at(f, p).clone())
                .sum();
            ensure(sum == int(100), || {
                format!("model {i} product {p}: effective weights sum to {sum}")
            })?;
        }
    }
    Ok(format!(
        "{models} models: sum of w(f) = 100 and redistributed sums = 100, exactly"
    ))
}

fn pareto_export() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = testkit::rng(0xca7);
    let instances = 100;
    for i in 0..instances {
        let shape = random_shape(&mut rng, 12);
        let inst = random_instance(&mut rng, &shape);
        let m = dir.path().join("model.json");
        let a = dir.path().join("assessment.json");
        let c = dir.path().join("modifications.json");
        std::fs::write(&m, io::model_to_json(&inst.model)).map_err(|e| e.to_string())?;
        std::fs::write(&a, io::assessment_to_json(&inst.matrix)).map_err(|e| e.to_string())?;
        std::fs::write(&c, io::catalog_to_json(&inst.catalog)).map_err(|e| e.to_string())?;
        let (m, a, c) = (
            m.to_str().unwrap(),
            a.to_str().unwrap(),
            c.to_str().unwrap(),
        );
        let count: u128 = plopt(&["count", "--catalog", c])?
            .trim()
            .parse()
            .map_err(|e| format!("{e}"))?;
        let csv = plopt(&["pareto", "--model", m, "--assessment", a, "--catalog", c])?;
        let rows = csv.lines().count() - 1;
        ensure(rows as u128 == count, || {
            format!("instance {i}: {rows} rows, count {count}")
        })?;
    }
    let csv = run_case("pareto", &[])?;
    let row = csv
        .lines()
        .find(|l| l.split(',').nth(1) == Some("m3+m5+m6+m8+m10"))
        .ok_or("row for m3+m5+m6+m8+m10 missing")?;
    ensure(row.starts_with("351,"), || format!("row {row}"))?;
    ensure(csv.lines().count() == 360, || "case study row count".into())?;
    Ok(format!("{instances} random catalogs match count; case study: 359 rows, m3+m5+m6+m8+m10 at rank 351"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("feasible-subset count", feasible_subset_count),
        ("modification arithmetic", modification_arithmetic),
        ("budget optimum", budget_optimum),
        ("ratio optimum", ratio_optimum),
        ("adherence improvement", adherence_improvement),
        ("gap flags", gap_flags),
        ("oracle equivalence", oracle_equivalence),
        ("budget monotonicity", budget_monotonicity),
        ("normalization invariants", normalization),
        ("pareto export", pareto_export),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {:>2}  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
