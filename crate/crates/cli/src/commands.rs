use crate::table::Table;
use crate::{Command, Format, ModelArgs, ObjectiveArgs, SearchArgs};
use anyhow::{anyhow, bail, Context, Result};
use plopt_core::io::{self, GapReportDoc, PlanDoc, ScoreDoc};
use plopt_core::number::{self, Exact};
use plopt_core::optimizer::{write_pareto_csv, PARETO_HEADER};
use plopt_core::{
    build_gap_report, Catalog, IrrelevancePolicy, Objective, Optimizer, OptimizerConfig,
    QualityModel, ResolvedAssessment, ScoreMatrix, StddevForm, ValidationReport,
};
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

const THREADS_ENV: &str = "PLOPT_THREADS";

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Validate {
            model,
            assessment,
            catalog,
            policy,
            format,
        } => validate(
            &model,
            assessment.as_deref(),
            catalog.as_deref(),
            policy,
            format,
        ),
        Command::Score { inputs, format } => score(&inputs, format),
        Command::Gaps {
            inputs,
            stddev,
            format,
        } => gaps(&inputs, stddev, format),
        Command::Count { catalog, format } => count(&catalog, format),
        Command::Optimize {
            search,
            objective,
            format,
        } => optimize(&search, &objective, format),
        Command::Pareto {
            search,
            gamma,
            out,
            format,
        } => pareto(&search, gamma, out.as_deref(), format),
    }
}

fn print(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn warn(report: &ValidationReport) {
    for w in report.warnings() {
        eprintln!("{w}");
    }
}

/// Fails with every error in `report`; prints its warnings.
fn require_valid(what: &str, report: ValidationReport) -> Result<()> {
    warn(&report);
    if !report.is_valid() {
        bail!("{what} is invalid:\n{report}");
    }
    Ok(())
}

struct Inputs {
    baseline: ResolvedAssessment,
}

fn load(args: &ModelArgs) -> Result<Inputs> {
    let model = io::load_model(&args.model)?;
    require_valid(&format!("model {}", args.model.display()), model.validate())?;
    let matrix = io::load_assessment(&args.assessment)?;
    require_valid(
        &format!("assessment {}", args.assessment.display()),
        matrix.validate(&model),
    )?;
    let baseline = ResolvedAssessment::resolve(&model, &matrix, args.policy)?;
    Ok(Inputs { baseline })
}

fn load_catalog(path: &Path, baseline: &ResolvedAssessment) -> Result<Catalog> {
    let catalog = io::load_catalog(path)?;
    require_valid(
        &format!("catalog {}", path.display()),
        catalog.validate_against(baseline),
    )?;
    Ok(catalog)
}

fn threads(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
            Ok(Some(n))
        }
        _ => Ok(flag),
    }
}

fn json_line<T: Serialize>(value: &T) -> String {
    io::to_json(value)
}

// ------------------------------------------------------------- validate

#[derive(Serialize)]
struct ValidateDoc<'a> {
    valid: bool,
    violations: &'a [plopt_core::Violation],
}

fn validate(
    model_path: &Path,
    assessment: Option<&Path>,
    catalog: Option<&Path>,
    policy: IrrelevancePolicy,
    format: Format,
) -> Result<ExitCode> {
    let mut report = ValidationReport::new();
    let model = io::load_model(model_path)?;
    report.merge(prefixed(model_path, model.validate()));
    let mut baseline = None;
    if let Some(path) = assessment {
        let matrix = io::load_assessment(path)?;
        let r = matrix.validate(&model);
        let clean = r.is_valid() && model.validate().is_valid();
        report.merge(prefixed(path, r));
        if clean {
            baseline = resolve_into(&model, &matrix, policy, path, &mut report);
        }
    }
    if let Some(path) = catalog {
        let c = io::load_catalog(path)?;
        let r = match &baseline {
            Some(b) => c.validate_against(b),
            None => c.validate(),
        };
        report.merge(prefixed(path, r));
    }
    let valid = report.is_valid();
    match format {
        Format::Json => print(&json_line(&ValidateDoc {
            valid,
            violations: &report.violations,
        }))?,
        Format::Csv => {
            let mut s = String::from("severity,subject,message\n");
            for v in &report.violations {
                let sev = serde_json::to_value(v.severity)?;
                s.push_str(&format!(
                    "{},{},{}\n",
                    sev.as_str().unwrap_or_default(),
                    csv_field(&v.subject),
                    csv_field(&v.message)
                ));
            }
            print(&s)?;
        }
        Format::Table => {
            let mut s = String::new();
            for v in &report.violations {
                s.push_str(&format!("{v}\n"));
            }
            s.push_str(&format!(
                "{}: {} error(s), {} warning(s)\n",
                if valid { "ok" } else { "invalid" },
                report.errors().count(),
                report.warnings().count()
            ));
            print(&s)?;
        }
    }
    Ok(if valid {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(crate::EXIT_FAILURE)
    })
}

fn resolve_into(
    model: &QualityModel,
    matrix: &ScoreMatrix,
    policy: IrrelevancePolicy,
    path: &Path,
    report: &mut ValidationReport,
) -> Option<ResolvedAssessment> {
    match ResolvedAssessment::resolve(model, matrix, policy) {
        Ok(b) => Some(b),
        Err(e) => {
            report.error(path.display().to_string(), e.to_string());
            None
        }
    }
}

fn prefixed(path: &Path, report: ValidationReport) -> ValidationReport {
    let mut out = ValidationReport::new();
    for mut v in report.violations {
        v.subject = format!("{}: {}", path.display(), v.subject);
        out.violations.push(v);
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

// ---------------------------------------------------------------- score

fn score(args: &ModelArgs, format: Format) -> Result<ExitCode> {
    let Inputs { baseline } = load(args)?;
    let doc = ScoreDoc::new(&baseline, args.policy);
    match format {
        Format::Json => print(&json_line(&doc))?,
        Format::Csv => {
            let mut s = String::from("feature,product,score\n");
            for f in &doc.features {
                for (p, v) in &f.scores {
                    s.push_str(&format!("{},{},{}\n", f.id, p, v));
                }
            }
            print(&s)?;
        }
        Format::Table => {
            let mut t = Table::new(["product", "name", "quality"]);
            for p in &doc.products {
                t.row([p.id.clone(), p.name.clone(), p.quality.clone()]);
            }
            print(&format!(
                "{}\nadherence {} of {}\n",
                t.render(),
                doc.adherence,
                doc.max_adherence
            ))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

// ----------------------------------------------------------------- gaps

fn gaps(args: &ModelArgs, stddev: StddevForm, format: Format) -> Result<ExitCode> {
    let Inputs { baseline } = load(args)?;
    let report = build_gap_report(&baseline, stddev)?;
    let doc = GapReportDoc::new(&report);
    match format {
        Format::Json => print(&json_line(&doc))?,
        Format::Csv => {
            let mut s = String::from("feature,weight,mean,stddev,gap,high_impact\n");
            for f in &doc.features {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    f.id, f.weight, f.mean, f.stddev, f.gap, f.high_impact
                ));
            }
            print(&s)?;
        }
        Format::Table => {
            let products: Vec<&str> = baseline.products().iter().map(|p| p.id.as_str()).collect();
            let mut header = vec!["feature".to_owned(), "w".to_owned()];
            header.extend(products.iter().map(|p| p.to_string()));
            header.extend(["mean", "stddev", "gap", ""].map(String::from));
            let mut t = Table::new(header);
            for (fi, f) in doc.features.iter().enumerate() {
                let mut row = vec![f.id.clone(), f.weight.clone()];
                for (pi, p) in products.iter().enumerate() {
                    let mark = report
                        .annotations
                        .iter()
                        .find(|a| a.feature_id == f.id && a.product_id == *p)
                        .map(|a| match a.level {
                            plopt_core::CellLevel::Low => "-",
                            plopt_core::CellLevel::High => "+",
                        })
                        .unwrap_or("");
                    row.push(format!("{}{}", round2(&baseline.score_at(fi, pi)), mark));
                }
                row.push(round2(&report.features[fi].mean));
                row.push(format!("{:.2}", f.stddev));
                row.push(round2(&report.features[fi].gap));
                row.push(if f.high_impact { "HIGH IMPACT" } else { "" }.to_owned());
                t.row(row);
            }
            print(&format!(
                "{}\n({stddev} stddev; + / - mark cells more than one stddev above / below the feature mean)\nthreshold {:.4}\nhigh impact: {}\n",
                t.render(),
                doc.threshold,
                doc.high_impact_features.join(", ")
            ))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn round2(v: &plopt_core::Rational) -> String {
    if number::decimal_places(v).is_some_and(|d| d <= 2) {
        number::format(v)
    } else {
        format!("{:.2}", number::to_f64(v))
    }
}

// ---------------------------------------------------------------- count

fn count(path: &Path, format: Format) -> Result<ExitCode> {
    let catalog = io::load_catalog(path)?;
    require_valid(&format!("catalog {}", path.display()), catalog.validate())?;
    let n = catalog.count_feasible()?;
    match format {
        Format::Json => print(&format!("{{\n  \"feasible_subsets\": {n}\n}}\n"))?,
        Format::Csv => print(&format!("feasible_subsets\n{n}\n"))?,
        Format::Table => print(&format!("{n}\n"))?,
    }
    Ok(ExitCode::SUCCESS)
}

// ------------------------------------------------------------- optimize

fn optimizer<'c>(
    search: &SearchArgs,
    catalog: &'c Catalog,
    baseline: &ResolvedAssessment,
) -> Result<Optimizer<'c>> {
    let config = OptimizerConfig {
        threads: threads(search.threads)?,
        ratio_quality: search.ratio_quality,
        ..OptimizerConfig::default()
    };
    Ok(Optimizer::new(catalog, baseline, config)?)
}

fn optimize(search: &SearchArgs, objective: &ObjectiveArgs, format: Format) -> Result<ExitCode> {
    let Inputs { baseline } = load(&search.inputs)?;
    let catalog = load_catalog(&search.catalog, &baseline)?;
    let objective = match (&objective.budget, objective.gamma) {
        (Some(xi), None) => Objective::Budget(xi.clone()),
        (None, Some(g)) => Objective::Ratio(g),
        _ => return Err(anyhow!("exactly one of --budget and --gamma is required")),
    };
    let opt = optimizer(search, &catalog, &baseline)?;
    let plan = opt.optimize(&objective)?;
    let check = opt.verify(&plan, &objective);
    if !check.is_valid() {
        bail!("internal error: plan failed verification:\n{check}");
    }
    let doc = PlanDoc::new(
        &plan,
        &objective,
        search.ratio_quality,
        &baseline.adherence(),
    );
    match format {
        Format::Json => print(&json_line(&doc))?,
        Format::Csv => print(&format!(
            "subset,gain,cost,adherence,objective\n{},{},{},{},{}\n",
            plan.subset_label(),
            doc.total_gain,
            doc.total_cost,
            doc.adherence_after,
            plan.objective_value
        ))?,
        Format::Table => {
            let subset = if plan.subset.is_empty() {
                "(none)".to_owned()
            } else {
                plan.subset_label()
            };
            let what = match &objective {
                Objective::Budget(xi) => format!("budget {}", Exact(xi)),
                Objective::Ratio(g) => format!("gamma {g} ({})", search.ratio_quality),
            };
            print(&format!(
                "objective  {what}\nsubset     {subset}\ngain       {}\ncost       {}\nadherence  {} -> {}\nvalue      {}\n",
                doc.total_gain, doc.total_cost, doc.baseline_adherence, doc.adherence_after, plan.objective_value
            ))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

// --------------------------------------------------------------- pareto

fn pareto(search: &SearchArgs, gamma: f64, out: Option<&Path>, format: Format) -> Result<ExitCode> {
    Objective::Ratio(gamma).check()?;
    let Inputs { baseline } = load(&search.inputs)?;
    let catalog = load_catalog(&search.catalog, &baseline)?;
    let rows = optimizer(search, &catalog, &baseline)?.pareto_export(gamma)?;
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_pareto_csv(&rows, &mut buf)?,
        Format::Table => {
            let mut t = Table::new(PARETO_HEADER.split(','));
            for r in &rows {
                t.row(r.csv_line().split(',').map(String::from));
            }
            buf.extend_from_slice(t.render().as_bytes());
        }
        Format::Json => {
            let docs: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "rank": r.rank,
                        "subset": r.subset,
                        "gain": number::format(&r.gain),
                        "cost": number::format(&r.cost),
                        "adherence": number::format(&r.adherence),
                        "objective": r.objective.is_finite().then_some(r.objective),
                    })
                })
                .collect();
            buf.extend_from_slice(json_line(&docs).as_bytes());
        }
    }
    match out {
        Some(path) => std::fs::write(path, &buf)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print(std::str::from_utf8(&buf)?)?,
    }
    Ok(ExitCode::SUCCESS)
}
