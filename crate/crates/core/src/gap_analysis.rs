//! Quality gap statistics.
//!
//! For each feature the weighted scores across products give a mean `μ_f`
//! and a standard deviation `σ_f`; the gap is `Δ_f = w(f) − μ_f`. Features
//! whose gap exceeds `mean(Δ) + σ(Δ)` are the product-line weak spots, and a
//! cell with `s(f, p) < μ_f − σ_f` is a product-specific weak spot.
//!
//! Means and variances stay exact. Every threshold test is also exact:
//! `x > sqrt(V)` is decided as `x > 0 && x² > V`, so no float rounding can
//! move a feature across a threshold. Floating-point standard deviations are
//! reported for display only.

use crate::assessment::ResolvedAssessment;
use crate::error::{Error, Result};
use crate::number::{exceeds_sqrt, int, to_f64, Rational};
use num_traits::Zero;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StddevForm {
    /// Divide by `n`.
    #[default]
    Population,
    /// Divide by `n − 1`; a single observation has zero spread.
    Sample,
}

impl FromStr for StddevForm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "population" => Ok(Self::Population),
            "sample" => Ok(Self::Sample),
            other => Err(format!("unknown stddev form {other:?}")),
        }
    }
}

impl fmt::Display for StddevForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Population => "population",
            Self::Sample => "sample",
        })
    }
}

/// Exact mean and variance of `xs`.
pub fn mean_variance(xs: &[Rational], form: StddevForm) -> (Rational, Rational) {
    let n = xs.len();
    if n == 0 {
        return (Rational::zero(), Rational::zero());
    }
    let mean: Rational = xs.iter().sum::<Rational>() / int(n as i64);
    let ss: Rational = xs.iter().map(|x| (x - &mean) * (x - &mean)).sum();
    let divisor = match form {
        StddevForm::Population => n,
        StddevForm::Sample if n > 1 => n - 1,
        StddevForm::Sample => return (mean, Rational::zero()),
    };
    (mean, ss / int(divisor as i64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub feature_id: String,
    /// `w(f)`, averaged over products when weights were redistributed.
    pub weight: Rational,
    pub mean: Rational,
    pub variance: Rational,
    pub stddev: f64,
    pub gap: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellLevel {
    Low,
    High,
}

impl CellLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::High => "high",
        }
    }
}

/// A cell more than one standard deviation away from its feature mean.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellAnnotation {
    pub feature_id: String,
    pub product_id: String,
    pub level: CellLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub stddev_form: StddevForm,
    pub features: Vec<FeatureStats>,
    pub gap_mean: Rational,
    pub gap_variance: Rational,
    pub gap_stddev: f64,
    /// In model order.
    pub high_impact_features: Vec<String>,
    /// `(feature_id, product_id)`, feature-major in model and product order.
    pub product_major_gaps: Vec<(String, String)>,
    pub annotations: Vec<CellAnnotation>,
}

impl GapReport {
    /// Cut-off for high-impact features, for display.
    pub fn threshold(&self) -> f64 {
        to_f64(&self.gap_mean) + self.gap_stddev
    }
}

fn stats_at(r: &ResolvedAssessment, f: usize, form: StddevForm) -> FeatureStats {
    let m = r.product_count();
    let scores: Vec<Rational> = (0..m).map(|p| r.score_at(f, p)).collect();
    let weight: Rational =
        (0..m).map(|p| r.weight_at(f, p).clone()).sum::<Rational>() / int(m as i64);
    let (mean, variance) = mean_variance(&scores, form);
    FeatureStats {
        feature_id: r.feature_ids()[f].clone(),
        gap: &weight - &mean,
        stddev: to_f64(&variance).sqrt(),
        weight,
        mean,
        variance,
    }
}

/// `(μ_f, σ_f)` plus the gap for one feature.
pub fn feature_stats(
    r: &ResolvedAssessment,
    feature_id: &str,
    form: StddevForm,
) -> Result<FeatureStats> {
    if r.product_count() == 0 {
        return Err(Error::NoProducts);
    }
    Ok(stats_at(r, r.feature_index(feature_id)?, form))
}

fn all_stats(r: &ResolvedAssessment, form: StddevForm) -> Vec<FeatureStats> {
    (0..r.feature_count())
        .map(|f| stats_at(r, f, form))
        .collect()
}

fn high_impact(stats: &[FeatureStats], form: StddevForm) -> (Rational, Rational, Vec<String>) {
    let gaps: Vec<Rational> = stats.iter().map(|s| s.gap.clone()).collect();
    let (mean, variance) = mean_variance(&gaps, form);
    let flagged = stats
        .iter()
        .filter(|s| exceeds_sqrt(&(&s.gap - &mean), &variance))
        .map(|s| s.feature_id.clone())
        .collect();
    (mean, variance, flagged)
}

/// Features with `Δ_f > mean(Δ) + σ(Δ)`.
pub fn high_impact_features(r: &ResolvedAssessment, form: StddevForm) -> Vec<String> {
    high_impact(&all_stats(r, form), form).2
}

fn annotate(r: &ResolvedAssessment, stats: &[FeatureStats]) -> Vec<CellAnnotation> {
    let mut out = Vec::new();
    for (f, st) in stats.iter().enumerate() {
        for p in 0..r.product_count() {
            let s = r.score_at(f, p);
            let level = if exceeds_sqrt(&(&st.mean - &s), &st.variance) {
                CellLevel::Low
            } else if exceeds_sqrt(&(&s - &st.mean), &st.variance) {
                CellLevel::High
            } else {
                continue;
            };
            out.push(CellAnnotation {
                feature_id: st.feature_id.clone(),
                product_id: r.products()[p].id.clone(),
                level,
            });
        }
    }
    out
}

/// Cells with `s(f, p) < μ_f − σ_f`.
pub fn product_major_gaps(r: &ResolvedAssessment, form: StddevForm) -> Vec<(String, String)> {
    annotate(r, &all_stats(r, form))
        .into_iter()
        .filter(|a| a.level == CellLevel::Low)
        .map(|a| (a.feature_id, a.product_id))
        .collect()
}

pub fn build_gap_report(r: &ResolvedAssessment, form: StddevForm) -> Result<GapReport> {
    if r.product_count() == 0 {
        return Err(Error::NoProducts);
    }
    let features = all_stats(r, form);
    let (gap_mean, gap_variance, high_impact_features) = high_impact(&features, form);
    let annotations = annotate(r, &features);
    let product_major_gaps = annotations
        .iter()
        .filter(|a| a.level == CellLevel::Low)
        .map(|a| (a.feature_id.clone(), a.product_id.clone()))
        .collect();
    Ok(GapReport {
        stddev_form: form,
        gap_stddev: to_f64(&gap_variance).sqrt(),
        features,
        gap_mean,
        gap_variance,
        high_impact_features,
        product_major_gaps,
        annotations,
    })
}
