//! Exact selection of modification subsets.
//!
//! Two objectives are supported: the largest gain within a cost budget, and
//! the best quality-to-cost ratio `q^γ / cost`. Both are solved by a
//! branch-and-bound search that fans out over rayon workers; small catalogs
//! can also be enumerated exhaustively.

mod pareto;
mod search;

pub use pareto::{write_pareto_csv, ParetoRow, PARETO_HEADER};

use crate::assessment::ResolvedAssessment;
use crate::catalog::{Catalog, GainEvaluator};
use crate::error::{Error, Result};
use crate::number::{self, to_f64, Rational};
use crate::validation::ValidationReport;
use num_traits::{Signed, Zero};
use search::{Cand, Mode, Search};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_ENUMERATION_LIMIT: usize = 20;

/// Absolute tolerance below which two ratio objective values tie.
pub const RATIO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Maximize gain subject to `cost ≤ xi`.
    Budget(Rational),
    /// Maximize `q^gamma / cost` over non-empty subsets.
    Ratio(f64),
}

impl Objective {
    pub fn check(&self) -> Result<()> {
        match self {
            Self::Budget(xi) if xi.is_negative() => Err(Error::InvalidObjective(format!(
                "budget must be non-negative, got {}",
                number::format(xi)
            ))),
            Self::Ratio(g) if !(g.is_finite() && *g > 0.0) => Err(Error::InvalidObjective(
                format!("gamma must be finite and positive, got {g}"),
            )),
            _ => Ok(()),
        }
    }
}

/// What `q` stands for in the ratio objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RatioQuality {
    /// Gain of the subset over the baseline.
    #[default]
    Gain,
    /// Total adherence after applying the subset.
    Adherence,
}

impl FromStr for RatioQuality {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "gain" => Ok(Self::Gain),
            "adherence" => Ok(Self::Adherence),
            other => Err(format!(
                "unknown ratio quality {other:?} (expected gain or adherence)"
            )),
        }
    }
}

impl fmt::Display for RatioQuality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gain => "gain",
            Self::Adherence => "adherence",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimizerConfig {
    /// Worker count; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub enumeration_limit: usize,
    pub ratio_quality: RatioQuality,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            threads: None,
            enumeration_limit: DEFAULT_ENUMERATION_LIMIT,
            ratio_quality: RatioQuality::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    /// Member ids in catalog order.
    pub subset: Vec<String>,
    pub total_cost: Rational,
    pub total_gain: Rational,
    pub adherence_after: Rational,
    /// Gain for budget plans, `q^γ / cost` for ratio plans.
    pub objective_value: f64,
}

impl Plan {
    pub fn subset_label(&self) -> String {
        self.subset.join("+")
    }
}

/// `q^gamma / cost`, or negative infinity when `q < 0`.
pub fn ratio_objective(quality: &Rational, cost: &Rational, gamma: f64) -> f64 {
    if quality.is_negative() {
        return f64::NEG_INFINITY;
    }
    to_f64(quality).powf(gamma) / to_f64(cost)
}

/// Gain descending, cost ascending, then catalog positions lexicographically.
pub(crate) fn preference(a: &Cand, b: &Cand) -> Ordering {
    b.gain
        .cmp(&a.gain)
        .then_with(|| a.cost.cmp(&b.cost))
        .then_with(|| a.subset.cmp(&b.subset))
}

/// Solver bound to one catalog and baseline.
pub struct Optimizer<'a> {
    catalog: &'a Catalog,
    eval: GainEvaluator,
    adj: Vec<u64>,
    config: OptimizerConfig,
}

impl<'a> Optimizer<'a> {
    pub fn new(
        catalog: &'a Catalog,
        baseline: &ResolvedAssessment,
        config: OptimizerConfig,
    ) -> Result<Self> {
        Ok(Self {
            adj: catalog.conflict_masks()?,
            eval: GainEvaluator::new(catalog, baseline)?,
            catalog,
            config,
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn evaluator(&self) -> &GainEvaluator {
        &self.eval
    }

    pub fn optimize(&self, objective: &Objective) -> Result<Plan> {
        objective.check()?;
        match objective {
            Objective::Budget(xi) => self.optimize_budget(xi),
            Objective::Ratio(g) => self.optimize_ratio(*g),
        }
    }

    pub fn optimize_budget(&self, xi: &Rational) -> Result<Plan> {
        Objective::Budget(xi.clone()).check()?;
        let mode = Mode::Budget { xi: xi.clone() };
        let cands = self.in_pool(|| self.search(mode).run());
        let best = cands
            .into_iter()
            .min_by(preference)
            .expect("the empty subset is always a candidate");
        Ok(self.plan(best, None))
    }

    pub fn optimize_ratio(&self, gamma: f64) -> Result<Plan> {
        Objective::Ratio(gamma).check()?;
        let mode = self.ratio_mode(gamma);
        let cands = self.in_pool(|| self.search(mode).run());
        select_ratio(cands)
            .map(|c| self.plan(c, Some(gamma)))
            .ok_or(Error::NoCandidates)
    }

    /// Exhaustive counterpart of [`Optimizer::optimize`], for small catalogs.
    pub fn optimize_exhaustive(&self, objective: &Objective) -> Result<Plan> {
        objective.check()?;
        self.check_limit()?;
        let all = self.search(Mode::All).run_exhaustive();
        match objective {
            Objective::Budget(xi) => {
                let best = all
                    .into_iter()
                    .filter(|c| &c.cost <= xi)
                    .min_by(preference)
                    .expect("the empty subset is always a candidate");
                Ok(self.plan(best, None))
            }
            Objective::Ratio(g) => {
                let base = self.quality_base();
                let cands = all
                    .into_iter()
                    .filter(|c| !c.subset.is_empty())
                    .filter_map(|mut c| {
                        let q = &base + &c.gain;
                        if q.is_negative() {
                            return None;
                        }
                        c.objective = ratio_objective(&q, &c.cost, *g);
                        Some(c)
                    })
                    .collect();
                select_ratio(cands)
                    .map(|c| self.plan(c, Some(*g)))
                    .ok_or(Error::NoCandidates)
            }
        }
    }

    /// Every non-empty feasible subset, best gain first. `objective_value`
    /// holds the ratio objective at `gamma`.
    pub fn enumerate_feasible(&self, gamma: f64) -> Result<Vec<Plan>> {
        self.check_limit()?;
        let mut all: Vec<Cand> = self
            .search(Mode::All)
            .run_exhaustive()
            .into_iter()
            .filter(|c| !c.subset.is_empty())
            .collect();
        all.sort_by(preference);
        Ok(all.into_iter().map(|c| self.plan(c, Some(gamma))).collect())
    }

    /// One row per non-empty feasible subset; the best subset has the
    /// highest rank.
    pub fn pareto_export(&self, gamma: f64) -> Result<Vec<ParetoRow>> {
        Ok(pareto::rows(self.enumerate_feasible(gamma)?))
    }

    /// Rechecks a plan from scratch against the catalog and baseline.
    pub fn verify(&self, plan: &Plan, objective: &Objective) -> ValidationReport {
        verify_plan(
            self.catalog,
            self.eval.baseline(),
            objective,
            self.config.ratio_quality,
            plan,
        )
    }

    fn check_limit(&self) -> Result<()> {
        if self.catalog.len() > self.config.enumeration_limit {
            return Err(Error::EnumerationLimit {
                count: self.catalog.len(),
                limit: self.config.enumeration_limit,
            });
        }
        Ok(())
    }

    fn quality_base(&self) -> Rational {
        match self.config.ratio_quality {
            RatioQuality::Gain => Rational::zero(),
            RatioQuality::Adherence => self.eval.baseline_adherence().clone(),
        }
    }

    fn ratio_mode(&self, gamma: f64) -> Mode {
        Mode::Ratio {
            gamma,
            base: self.quality_base(),
        }
    }

    fn search(&self, mode: Mode) -> Search<'_> {
        Search::new(&self.eval, &self.adj, mode)
    }

    fn in_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        match self.config.threads {
            Some(n) => match rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
            {
                Ok(pool) => pool.install(f),
                Err(_) => f(),
            },
            None => f(),
        }
    }

    fn plan(&self, c: Cand, gamma: Option<f64>) -> Plan {
        let adherence_after = self.eval.baseline_adherence() + &c.gain;
        let objective_value = match gamma {
            Some(g) => ratio_objective(&(self.quality_base() + &c.gain), &c.cost, g),
            None => to_f64(&c.gain),
        };
        Plan {
            subset: self.catalog.ids_of(&c.subset),
            total_cost: c.cost,
            total_gain: c.gain,
            adherence_after,
            objective_value,
        }
    }
}

/// Highest objective wins; values within [`RATIO_TOLERANCE`] of the maximum
/// tie and fall back to [`preference`].
fn select_ratio(cands: Vec<Cand>) -> Option<Cand> {
    let max = cands
        .iter()
        .map(|c| c.objective)
        .fold(f64::NEG_INFINITY, f64::max);
    cands
        .into_iter()
        .filter(|c| c.objective >= max - RATIO_TOLERANCE)
        .min_by(preference)
}

pub fn optimize_budget(
    catalog: &Catalog,
    baseline: &ResolvedAssessment,
    xi: &Rational,
) -> Result<Plan> {
    Optimizer::new(catalog, baseline, OptimizerConfig::default())?.optimize_budget(xi)
}

pub fn optimize_ratio(
    catalog: &Catalog,
    baseline: &ResolvedAssessment,
    gamma: f64,
    quality: RatioQuality,
) -> Result<Plan> {
    let config = OptimizerConfig {
        ratio_quality: quality,
        ..OptimizerConfig::default()
    };
    Optimizer::new(catalog, baseline, config)?.optimize_ratio(gamma)
}

pub fn enumerate_feasible(catalog: &Catalog, baseline: &ResolvedAssessment) -> Result<Vec<Plan>> {
    Optimizer::new(catalog, baseline, OptimizerConfig::default())?.enumerate_feasible(1.0)
}

/// Independent post-hoc check of a plan; shares no code with the search.
pub fn verify_plan(
    catalog: &Catalog,
    baseline: &ResolvedAssessment,
    objective: &Objective,
    quality: RatioQuality,
    plan: &Plan,
) -> ValidationReport {
    let mut report = ValidationReport::new();
    let subject = format!("plan {}", plan.subset_label());
    let indices = match catalog.indices(&plan.subset) {
        Ok(i) => i,
        Err(e) => {
            report.error(&subject, e.to_string());
            return report;
        }
    };
    if catalog.ids_of(&indices) != plan.subset {
        report.error(&subject, "subset is not in catalog order or has duplicates");
    }
    let applied = match crate::catalog::apply(catalog, &plan.subset, baseline) {
        Ok(a) => a,
        Err(e) => {
            report.error(&subject, e.to_string());
            return report;
        }
    };
    let cost = catalog
        .subset_cost(&plan.subset)
        .unwrap_or_else(|_| Rational::zero());
    if cost != plan.total_cost {
        report.error(
            &subject,
            format!(
                "cost {} should be {}",
                number::format(&plan.total_cost),
                number::format(&cost)
            ),
        );
    }
    if applied.gain != plan.total_gain {
        report.error(
            &subject,
            format!(
                "gain {} should be {}",
                number::format(&plan.total_gain),
                number::format(&applied.gain)
            ),
        );
    }
    if applied.adherence != plan.adherence_after {
        report.error(
            &subject,
            format!(
                "adherence {} should be {}",
                number::format(&plan.adherence_after),
                number::format(&applied.adherence)
            ),
        );
    }
    match objective {
        Objective::Budget(xi) => {
            if &cost > xi {
                report.error(
                    &subject,
                    format!("cost exceeds the budget {}", number::format(xi)),
                );
            }
        }
        Objective::Ratio(g) => {
            if plan.subset.is_empty() {
                report.error(&subject, "ratio plans must not be empty");
            } else {
                let q = match quality {
                    RatioQuality::Gain => applied.gain.clone(),
                    RatioQuality::Adherence => applied.adherence.clone(),
                };
                if q.is_negative() {
                    report.error(&subject, "quality term is negative");
                }
                let expected = to_f64(&q).powf(*g) / to_f64(&cost);
                let scale = expected.abs().max(1.0);
                if (expected - plan.objective_value).abs() > RATIO_TOLERANCE * scale {
                    report.error(
                        &subject,
                        format!("objective {} should be {expected}", plan.objective_value),
                    );
                }
            }
        }
    }
    report
}
