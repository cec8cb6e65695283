//! Per-product compliance values, irrelevance handling, weighted scores and
//! overall adherence.

use crate::error::{Error, Result};
use crate::number::{self, int, Rational};
use crate::quality_model::{overall_weight, QualityModel};
use crate::validation::ValidationReport;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Product {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellValue {
    Score(Rational),
    Irrelevant,
}

/// Raw questionnaire results, keyed by `(feature_id, product_id)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreMatrix {
    pub products: Vec<Product>,
    pub entries: BTreeMap<(String, String), CellValue>,
}

impl ScoreMatrix {
    pub fn new(products: Vec<Product>) -> Self {
        Self {
            products,
            entries: BTreeMap::new(),
        }
    }

    pub fn get(&self, feature_id: &str, product_id: &str) -> Option<&CellValue> {
        self.entries
            .get(&(feature_id.to_owned(), product_id.to_owned()))
    }

    pub fn set(&mut self, feature_id: &str, product_id: &str, value: CellValue) {
        self.entries
            .insert((feature_id.to_owned(), product_id.to_owned()), value);
    }

    /// Reports missing and extra cells, values outside `[0, 1]`, unknown
    /// ids and duplicate products.
    pub fn validate(&self, model: &QualityModel) -> ValidationReport {
        let mut report = ValidationReport::new();
        if self.products.is_empty() {
            report.error("assessment", "assessment has no products");
        }
        let mut product_ids = HashSet::new();
        for p in &self.products {
            if !product_ids.insert(p.id.as_str()) {
                report.error(&p.id, "duplicate product id");
            }
        }
        let feature_ids: HashSet<&str> = model.features().map(|(_, f)| f.id.as_str()).collect();

        let mut unknown_features = HashSet::new();
        for ((f, p), value) in &self.entries {
            let subject = format!("({f}, {p})");
            if !feature_ids.contains(f.as_str()) {
                if unknown_features.insert(f.as_str()) {
                    report.error(f, "unknown feature id in assessment");
                }
                continue;
            }
            if !product_ids.contains(p.as_str()) {
                report.error(&subject, format!("unknown product id {p}"));
                continue;
            }
            if let CellValue::Score(v) = value {
                if *v < Rational::zero() || *v > Rational::one() {
                    report.error(
                        &subject,
                        format!("value {} outside [0, 1]", number::format(v)),
                    );
                }
            }
        }
        for (_, f) in model.features() {
            for p in &self.products {
                if self.get(&f.id, &p.id).is_none() {
                    report.error(format!("({}, {})", f.id, p.id), "missing cell");
                }
            }
        }
        report
    }
}

/// What an irrelevant cell turns into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IrrelevancePolicy {
    /// The feature's weight is split among the other features of the same
    /// characteristic for that product, proportionally to their `wf`.
    Redistribute,
    /// The cell counts as fully compliant.
    #[default]
    Perfect,
    /// The cell counts as zero compliance.
    Empty,
}

impl FromStr for IrrelevancePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "redistribute" => Ok(Self::Redistribute),
            "perfect" => Ok(Self::Perfect),
            "empty" => Ok(Self::Empty),
            other => Err(format!("unknown irrelevance policy {other:?}")),
        }
    }
}

impl fmt::Display for IrrelevancePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Redistribute => "redistribute",
            Self::Perfect => "perfect",
            Self::Empty => "empty",
        })
    }
}

/// A score matrix with every irrelevant cell resolved, together with the
/// effective per-product feature weights. Rows follow model feature order,
/// columns follow product order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedAssessment {
    feature_ids: Vec<String>,
    products: Vec<Product>,
    weights: Vec<Vec<Rational>>,
    values: Vec<Vec<Rational>>,
    irrelevant: Vec<Vec<bool>>,
    feature_index: HashMap<String, usize>,
    product_index: HashMap<String, usize>,
}

impl ResolvedAssessment {
    /// Applies `policy` to every irrelevant cell.
    pub fn resolve(
        model: &QualityModel,
        matrix: &ScoreMatrix,
        policy: IrrelevancePolicy,
    ) -> Result<Self> {
        if matrix.products.is_empty() {
            return Err(Error::NoProducts);
        }
        let m = matrix.products.len();
        let mut feature_ids = Vec::with_capacity(model.feature_count());
        let mut weights = Vec::with_capacity(model.feature_count());
        let mut values = Vec::with_capacity(model.feature_count());
        let mut irrelevant = Vec::with_capacity(model.feature_count());

        for c in &model.characteristics {
            let first_row = feature_ids.len();
            for f in &c.features {
                let base = overall_weight(c, f);
                let mut w_row = Vec::with_capacity(m);
                let mut v_row = Vec::with_capacity(m);
                let mut i_row = Vec::with_capacity(m);
                for p in &matrix.products {
                    let cell = matrix.get(&f.id, &p.id).ok_or_else(|| Error::MissingCell {
                        feature: f.id.clone(),
                        product: p.id.clone(),
                    })?;
                    let (v, irr) = match (cell, policy) {
                        (CellValue::Score(v), _) => (v.clone(), false),
                        (CellValue::Irrelevant, IrrelevancePolicy::Perfect) => {
                            (Rational::one(), true)
                        }
                        (CellValue::Irrelevant, _) => (Rational::zero(), true),
                    };
                    w_row.push(base.clone());
                    v_row.push(v);
                    i_row.push(irr);
                }
                feature_ids.push(f.id.clone());
                weights.push(w_row);
                values.push(v_row);
                irrelevant.push(i_row);
            }

            if policy == IrrelevancePolicy::Redistribute {
                let rows = first_row..feature_ids.len();
                for (pi, p) in matrix.products.iter().enumerate() {
                    if rows.clone().all(|r| !irrelevant[r][pi]) {
                        continue;
                    }
                    let relevant: Vec<usize> =
                        rows.clone().filter(|&r| !irrelevant[r][pi]).collect();
                    if relevant.is_empty() {
                        return Err(Error::CharacteristicFullyIrrelevant {
                            characteristic: c.id.clone(),
                            product: p.id.clone(),
                        });
                    }
                    let mass = int(100) * &c.weight;
                    let relevant_wf: Rational = relevant
                        .iter()
                        .map(|&r| c.features[r - first_row].weight.clone())
                        .sum();
                    for r in rows.clone() {
                        weights[r][pi] = if irrelevant[r][pi] {
                            Rational::zero()
                        } else if relevant_wf.is_zero() {
                            // nothing to be proportional to: split evenly
                            &mass / int(relevant.len() as i64)
                        } else {
                            &mass * &c.features[r - first_row].weight / &relevant_wf
                        };
                    }
                }
            }
        }

        let feature_index = feature_ids
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();
        let product_index = matrix
            .products
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.clone(), i))
            .collect();
        Ok(Self {
            feature_ids,
            products: matrix.products.clone(),
            weights,
            values,
            irrelevant,
            feature_index,
            product_index,
        })
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.feature_ids
    }

    pub fn products(&self) -> &[Product] {
        &self.products
    }

    pub fn feature_count(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn product_count(&self) -> usize {
        self.products.len()
    }

    pub fn feature_index(&self, feature_id: &str) -> Result<usize> {
        self.feature_index
            .get(feature_id)
            .copied()
            .ok_or_else(|| Error::UnknownFeature(feature_id.to_owned()))
    }

    pub fn product_index(&self, product_id: &str) -> Result<usize> {
        self.product_index
            .get(product_id)
            .copied()
            .ok_or_else(|| Error::UnknownProduct(product_id.to_owned()))
    }

    /// Effective `w(f)` for one product.
    pub fn weight_at(&self, feature: usize, product: usize) -> &Rational {
        &self.weights[feature][product]
    }

    pub fn value_at(&self, feature: usize, product: usize) -> &Rational {
        &self.values[feature][product]
    }

    pub fn is_irrelevant(&self, feature: usize, product: usize) -> bool {
        self.irrelevant[feature][product]
    }

    /// `s(f, p) = w(f) * v(f, p)`.
    pub fn score_at(&self, feature: usize, product: usize) -> Rational {
        &self.weights[feature][product] * &self.values[feature][product]
    }

    pub fn weighted_score(&self, feature_id: &str, product_id: &str) -> Result<Rational> {
        Ok(self.score_at(
            self.feature_index(feature_id)?,
            self.product_index(product_id)?,
        ))
    }

    pub fn product_quality(&self, product_id: &str) -> Result<Rational> {
        let p = self.product_index(product_id)?;
        Ok(self.product_quality_at(p))
    }

    pub fn product_quality_at(&self, product: usize) -> Rational {
        (0..self.feature_count())
            .map(|f| self.score_at(f, product))
            .sum()
    }

    /// Total weighted score over all features and products.
    pub fn adherence(&self) -> Rational {
        (0..self.product_count())
            .map(|p| self.product_quality_at(p))
            .sum()
    }

    /// Same weights, new compliance values (rows and columns as here).
    pub(crate) fn with_values(&self, values: Vec<Vec<Rational>>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            values,
            ..self.clone()
        }
    }

    pub(crate) fn values(&self) -> &[Vec<Rational>] {
        &self.values
    }

    /// Back to a raw matrix. Cells that were irrelevant stay irrelevant
    /// under every policy except `Perfect`/`Empty`, where the substituted
    /// value is kept.
    pub fn to_score_matrix(&self, policy: IrrelevancePolicy) -> ScoreMatrix {
        let mut matrix = ScoreMatrix::new(self.products.clone());
        for (fi, f) in self.feature_ids.iter().enumerate() {
            for (pi, p) in self.products.iter().enumerate() {
                let cell = if self.irrelevant[fi][pi] && policy == IrrelevancePolicy::Redistribute {
                    CellValue::Irrelevant
                } else {
                    CellValue::Score(self.values[fi][pi].clone())
                };
                matrix.set(f, &p.id, cell);
            }
        }
        matrix
    }
}
