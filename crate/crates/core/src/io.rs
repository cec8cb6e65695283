//! JSON input files and report documents.
//!
//! All numbers travel as strings (`"0.2"`, or `"1/3"` when a value has no
//! finite decimal form) so nothing is rounded on the way in or out.

use crate::assessment::{CellValue, IrrelevancePolicy, Product, ResolvedAssessment, ScoreMatrix};
use crate::catalog::{Catalog, ConflictGraph, GainSpec, Modification};
use crate::gap_analysis::{GapReport, StddevForm};
use crate::number::{self, ParseNumberError, Rational};
use crate::optimizer::{Objective, Plan, RatioQuality};
use crate::quality_model::{Characteristic, Feature, QualityModel};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {field}: {source}")]
    Number {
        path: PathBuf,
        field: String,
        source: ParseNumberError,
    },
}

impl LoadError {
    fn at(self, path: &Path) -> Self {
        match self {
            Self::Json { source, .. } => Self::Json {
                path: path.to_owned(),
                source,
            },
            Self::Number { field, source, .. } => Self::Number {
                path: path.to_owned(),
                field,
                source,
            },
            other => other,
        }
    }
}

fn num(field: impl FnOnce() -> String, text: &str) -> Result<Rational, LoadError> {
    number::parse(text).map_err(|source| LoadError::Number {
        path: PathBuf::new(),
        field: field(),
        source,
    })
}

fn json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, LoadError> {
    serde_json::from_str(text).map_err(|source| LoadError::Json {
        path: PathBuf::new(),
        source,
    })
}

fn read(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Read {
        path: path.to_owned(),
        source,
    })
}

// ---------------------------------------------------------------- model

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    characteristics: Vec<CharacteristicFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CharacteristicFile {
    id: String,
    name: String,
    weight: String,
    features: Vec<FeatureFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureFile {
    id: String,
    name: String,
    #[serde(default)]
    question: String,
    weight: String,
}

pub fn parse_model(text: &str) -> Result<QualityModel, LoadError> {
    let file: ModelFile = json(text)?;
    let mut characteristics = Vec::with_capacity(file.characteristics.len());
    for c in file.characteristics {
        let weight = num(|| format!("characteristic {} weight", c.id), &c.weight)?;
        let mut features = Vec::with_capacity(c.features.len());
        for f in c.features {
            features.push(Feature {
                weight: num(|| format!("feature {} weight", f.id), &f.weight)?,
                id: f.id,
                name: f.name,
                question: f.question,
            });
        }
        characteristics.push(Characteristic {
            id: c.id,
            name: c.name,
            weight,
            features,
        });
    }
    Ok(QualityModel::new(characteristics))
}

pub fn model_to_json(model: &QualityModel) -> String {
    let file = ModelFile {
        characteristics: model
            .characteristics
            .iter()
            .map(|c| CharacteristicFile {
                id: c.id.clone(),
                name: c.name.clone(),
                weight: number::format(&c.weight),
                features: c
                    .features
                    .iter()
                    .map(|f| FeatureFile {
                        id: f.id.clone(),
                        name: f.name.clone(),
                        question: f.question.clone(),
                        weight: number::format(&f.weight),
                    })
                    .collect(),
            })
            .collect(),
    };
    pretty(&file)
}

pub fn load_model(path: &Path) -> Result<QualityModel, LoadError> {
    parse_model(&read(path)?).map_err(|e| e.at(path))
}

// ----------------------------------------------------------- assessment

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssessmentFile {
    products: Vec<ProductFile>,
    scores: BTreeMap<String, BTreeMap<String, Option<String>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductFile {
    id: String,
    name: String,
}

pub fn parse_assessment(text: &str) -> Result<ScoreMatrix, LoadError> {
    let file: AssessmentFile = json(text)?;
    let mut matrix = ScoreMatrix::new(
        file.products
            .into_iter()
            .map(|p| Product {
                id: p.id,
                name: p.name,
            })
            .collect(),
    );
    for (f, row) in file.scores {
        for (p, cell) in row {
            let value = match cell {
                Some(text) => CellValue::Score(num(|| format!("score ({f}, {p})"), &text)?),
                None => CellValue::Irrelevant,
            };
            matrix.set(&f, &p, value);
        }
    }
    Ok(matrix)
}

pub fn assessment_to_json(matrix: &ScoreMatrix) -> String {
    let mut scores: BTreeMap<String, BTreeMap<String, Option<String>>> = BTreeMap::new();
    for ((f, p), cell) in &matrix.entries {
        let value = match cell {
            CellValue::Score(v) => Some(number::format(v)),
            CellValue::Irrelevant => None,
        };
        scores
            .entry(f.clone())
            .or_default()
            .insert(p.clone(), value);
    }
    pretty(&AssessmentFile {
        products: matrix
            .products
            .iter()
            .map(|p| ProductFile {
                id: p.id.clone(),
                name: p.name.clone(),
            })
            .collect(),
        scores,
    })
}

pub fn load_assessment(path: &Path) -> Result<ScoreMatrix, LoadError> {
    parse_assessment(&read(path)?).map_err(|e| e.at(path))
}

// -------------------------------------------------------------- catalog

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    modifications: Vec<ModificationFile>,
    #[serde(default)]
    conflicts: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModificationFile {
    id: String,
    #[serde(default)]
    label: String,
    shared_cost: String,
    #[serde(default)]
    per_product_costs: BTreeMap<String, String>,
    gains: GainsFile,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum GainsFile {
    PerProduct(BTreeMap<String, String>),
    PerFeature(BTreeMap<String, BTreeMap<String, String>>),
}

pub fn parse_catalog(text: &str) -> Result<Catalog, LoadError> {
    let file: CatalogFile = json(text)?;
    let mut modifications = Vec::with_capacity(file.modifications.len());
    for m in file.modifications {
        let id = m.id;
        let shared_cost = num(|| format!("{id} shared_cost"), &m.shared_cost)?;
        let mut per_product_costs = BTreeMap::new();
        for (p, c) in m.per_product_costs {
            let v = num(|| format!("{id} cost for {p}"), &c)?;
            per_product_costs.insert(p, v);
        }
        let gains = match m.gains {
            GainsFile::PerProduct(g) => {
                let mut out = BTreeMap::new();
                for (p, v) in g {
                    let v = num(|| format!("{id} gain for {p}"), &v)?;
                    out.insert(p, v);
                }
                GainSpec::PerProduct(out)
            }
            GainsFile::PerFeature(g) => {
                let mut out: BTreeMap<String, BTreeMap<String, Rational>> = BTreeMap::new();
                for (f, row) in g {
                    for (p, v) in row {
                        let v = num(|| format!("{id} delta for ({f}, {p})"), &v)?;
                        out.entry(f.clone()).or_default().insert(p, v);
                    }
                }
                GainSpec::PerFeature(out)
            }
        };
        modifications.push(Modification {
            id,
            label: m.label,
            shared_cost,
            per_product_costs,
            gains,
        });
    }
    Ok(Catalog::new(
        modifications,
        ConflictGraph::new(file.conflicts),
    ))
}

pub fn catalog_to_json(catalog: &Catalog) -> String {
    let fmt_map = |m: &BTreeMap<String, Rational>| -> BTreeMap<String, String> {
        m.iter()
            .map(|(k, v)| (k.clone(), number::format(v)))
            .collect()
    };
    pretty(&CatalogFile {
        modifications: catalog
            .modifications
            .iter()
            .map(|m| ModificationFile {
                id: m.id.clone(),
                label: m.label.clone(),
                shared_cost: number::format(&m.shared_cost),
                per_product_costs: fmt_map(&m.per_product_costs),
                gains: match &m.gains {
                    GainSpec::PerProduct(g) => GainsFile::PerProduct(fmt_map(g)),
                    GainSpec::PerFeature(g) => GainsFile::PerFeature(
                        g.iter().map(|(f, row)| (f.clone(), fmt_map(row))).collect(),
                    ),
                },
            })
            .collect(),
        conflicts: catalog
            .conflicts
            .pairs()
            .map(|(a, b)| (a.to_owned(), b.to_owned()))
            .collect(),
    })
}

pub fn load_catalog(path: &Path) -> Result<Catalog, LoadError> {
    parse_catalog(&read(path)?).map_err(|e| e.at(path))
}

// -------------------------------------------------------------- reports

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductScoreDoc {
    pub id: String,
    pub name: String,
    pub quality: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScoreDoc {
    pub id: String,
    /// Product id to weighted score.
    pub scores: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDoc {
    pub policy: String,
    pub products: Vec<ProductScoreDoc>,
    pub features: Vec<FeatureScoreDoc>,
    pub adherence: String,
    pub max_adherence: String,
}

impl ScoreDoc {
    pub fn new(r: &ResolvedAssessment, policy: IrrelevancePolicy) -> Self {
        let products = r.products();
        Self {
            policy: policy.to_string(),
            products: products
                .iter()
                .enumerate()
                .map(|(p, prod)| ProductScoreDoc {
                    id: prod.id.clone(),
                    name: prod.name.clone(),
                    quality: number::format(&r.product_quality_at(p)),
                })
                .collect(),
            features: r
                .feature_ids()
                .iter()
                .enumerate()
                .map(|(f, id)| FeatureScoreDoc {
                    id: id.clone(),
                    scores: products
                        .iter()
                        .enumerate()
                        .map(|(p, prod)| (prod.id.clone(), number::format(&r.score_at(f, p))))
                        .collect(),
                })
                .collect(),
            adherence: number::format(&r.adherence()),
            max_adherence: number::format(&number::int(100 * products.len() as i64)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGapDoc {
    pub id: String,
    pub weight: String,
    pub mean: String,
    pub variance: String,
    pub stddev: f64,
    pub gap: String,
    pub high_impact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDoc {
    pub feature: String,
    pub product: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationDoc {
    pub feature: String,
    pub product: String,
    pub level: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReportDoc {
    pub stddev_form: String,
    pub gap_mean: String,
    pub gap_variance: String,
    pub gap_stddev: f64,
    pub threshold: f64,
    pub features: Vec<FeatureGapDoc>,
    pub high_impact_features: Vec<String>,
    pub product_major_gaps: Vec<CellDoc>,
    pub annotations: Vec<AnnotationDoc>,
}

impl GapReportDoc {
    pub fn new(report: &GapReport) -> Self {
        Self {
            stddev_form: report.stddev_form.to_string(),
            gap_mean: number::format(&report.gap_mean),
            gap_variance: number::format(&report.gap_variance),
            gap_stddev: report.gap_stddev,
            threshold: report.threshold(),
            features: report
                .features
                .iter()
                .map(|f| FeatureGapDoc {
                    id: f.feature_id.clone(),
                    weight: number::format(&f.weight),
                    mean: number::format(&f.mean),
                    variance: number::format(&f.variance),
                    stddev: f.stddev,
                    gap: number::format(&f.gap),
                    high_impact: report.high_impact_features.contains(&f.feature_id),
                })
                .collect(),
            high_impact_features: report.high_impact_features.clone(),
            product_major_gaps: report
                .product_major_gaps
                .iter()
                .map(|(f, p)| CellDoc {
                    feature: f.clone(),
                    product: p.clone(),
                })
                .collect(),
            annotations: report
                .annotations
                .iter()
                .map(|a| AnnotationDoc {
                    feature: a.feature_id.clone(),
                    product: a.product_id.clone(),
                    level: a.level.as_str().to_owned(),
                })
                .collect(),
        }
    }

    pub fn form(&self) -> Option<StddevForm> {
        self.stddev_form.parse().ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveDoc {
    Budget { budget: String },
    Ratio { gamma: f64, quality: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDoc {
    pub objective: ObjectiveDoc,
    pub subset: Vec<String>,
    pub total_cost: String,
    pub total_gain: String,
    pub baseline_adherence: String,
    pub adherence_after: String,
    pub objective_value: f64,
}

impl PlanDoc {
    pub fn new(
        plan: &Plan,
        objective: &Objective,
        quality: RatioQuality,
        baseline: &Rational,
    ) -> Self {
        Self {
            objective: match objective {
                Objective::Budget(xi) => ObjectiveDoc::Budget {
                    budget: number::format(xi),
                },
                Objective::Ratio(g) => ObjectiveDoc::Ratio {
                    gamma: *g,
                    quality: quality.to_string(),
                },
            },
            subset: plan.subset.clone(),
            total_cost: number::format(&plan.total_cost),
            total_gain: number::format(&plan.total_gain),
            baseline_adherence: number::format(baseline),
            adherence_after: number::format(&plan.adherence_after),
            objective_value: plan.objective_value,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    pretty(value)
}
