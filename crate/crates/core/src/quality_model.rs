//! Weighted quality model: characteristics, their features, and the overall
//! weight `w(f) = 100 * wc * wf` that every later score is built on.
//!
//! Weights are business and engineering decisions, so nothing here repairs
//! them silently. [`QualityModel::validate`] reports broken normalization and
//! [`QualityModel::renormalized`] is the explicit opt-in fix.

use crate::error::{Error, Result};
use crate::number::{self, int, Rational};
use crate::validation::ValidationReport;
use num_traits::{One, Zero};
use std::collections::HashSet;

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    /// Dotted id, prefixed by the owning characteristic id (`"1.3.2"`).
    pub id: String,
    pub name: String,
    pub question: String,
    pub weight: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Characteristic {
    pub id: String,
    pub name: String,
    pub weight: Rational,
    pub features: Vec<Feature>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QualityModel {
    pub characteristics: Vec<Characteristic>,
}

fn in_unit(w: &Rational) -> bool {
    *w >= Rational::zero() && *w <= Rational::one()
}

impl QualityModel {
    pub fn new(characteristics: Vec<Characteristic>) -> Self {
        Self { characteristics }
    }

    /// Features in model order, paired with their characteristic.
    pub fn features(&self) -> impl Iterator<Item = (&Characteristic, &Feature)> {
        self.characteristics
            .iter()
            .flat_map(|c| c.features.iter().map(move |f| (c, f)))
    }

    pub fn feature_count(&self) -> usize {
        self.characteristics.iter().map(|c| c.features.len()).sum()
    }

    pub fn find_feature(&self, feature_id: &str) -> Option<(&Characteristic, &Feature)> {
        self.features().find(|(_, f)| f.id == feature_id)
    }

    /// Every violated invariant, each tagged with the offending id. A valid
    /// model yields a report without errors; zero feature weights only warn.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        if self.characteristics.is_empty() {
            report.error("model", "model has no characteristics");
            return report;
        }

        let mut char_ids = HashSet::new();
        let mut feature_ids = HashSet::new();
        let mut char_sum = Rational::zero();
        for c in &self.characteristics {
            if !char_ids.insert(c.id.as_str()) {
                report.error(&c.id, "duplicate characteristic id");
            }
            if !in_unit(&c.weight) {
                report.error(
                    &c.id,
                    format!(
                        "characteristic weight {} outside [0, 1]",
                        number::format(&c.weight)
                    ),
                );
            }
            char_sum += &c.weight;

            if c.features.is_empty() {
                report.error(&c.id, "characteristic has no features");
                continue;
            }
            let prefix = format!("{}.", c.id);
            let mut feature_sum = Rational::zero();
            for f in &c.features {
                if !feature_ids.insert(f.id.as_str()) {
                    report.error(&f.id, "duplicate feature id");
                }
                if !f.id.starts_with(&prefix) || f.id.len() == prefix.len() {
                    report.error(
                        &f.id,
                        format!("feature id does not extend characteristic id {}", c.id),
                    );
                }
                if !in_unit(&f.weight) {
                    report.error(
                        &f.id,
                        format!(
                            "feature weight {} outside [0, 1]",
                            number::format(&f.weight)
                        ),
                    );
                } else if f.weight.is_zero() {
                    report.warning(&f.id, "feature weight is zero");
                }
                feature_sum += &f.weight;
            }
            if !feature_sum.is_one() {
                report.error(
                    &c.id,
                    format!(
                        "feature weights sum to {} ≠ 1",
                        number::format(&feature_sum)
                    ),
                );
            }
        }
        if !char_sum.is_one() {
            report.error(
                "model",
                format!(
                    "characteristic weights sum to {} ≠ 1",
                    number::format(&char_sum)
                ),
            );
        }
        report
    }

    /// Replaces every characteristic weight by `1/|C|`, leaving feature
    /// weights untouched.
    pub fn with_default_characteristic_weights(&self) -> Result<Self> {
        if self.characteristics.is_empty() {
            return Err(Error::EmptyModel);
        }
        let share = Rational::one() / int(self.characteristics.len() as i64);
        let mut out = self.clone();
        for c in &mut out.characteristics {
            c.weight = share.clone();
        }
        Ok(out)
    }

    /// Scales characteristic weights, and feature weights within each
    /// characteristic, so that each group sums to one.
    pub fn renormalized(&self) -> Result<Self> {
        if self.characteristics.is_empty() {
            return Err(Error::EmptyModel);
        }
        let total: Rational = self.characteristics.iter().map(|c| c.weight.clone()).sum();
        if total.is_zero() {
            return Err(Error::ZeroWeightSum("model".into()));
        }
        let mut out = self.clone();
        for c in &mut out.characteristics {
            if c.features.is_empty() {
                return Err(Error::EmptyCharacteristic(c.id.clone()));
            }
            c.weight = &c.weight / &total;
            let sum: Rational = c.features.iter().map(|f| f.weight.clone()).sum();
            if sum.is_zero() {
                return Err(Error::ZeroWeightSum(c.id.clone()));
            }
            for f in &mut c.features {
                f.weight = &f.weight / &sum;
            }
        }
        Ok(out)
    }

    /// `w(f) = 100 * wc(f) * wf(f)`.
    pub fn feature_overall_weight(&self, feature_id: &str) -> Result<Rational> {
        let (c, f) = self
            .find_feature(feature_id)
            .ok_or_else(|| Error::UnknownFeature(feature_id.to_owned()))?;
        Ok(overall_weight(c, f))
    }

    /// Adherence reached when every compliance value is one.
    pub fn max_adherence(&self, product_count: usize) -> Result<Rational> {
        if product_count == 0 {
            return Err(Error::NoProducts);
        }
        Ok(int(100) * int(product_count as i64))
    }
}

pub(crate) fn overall_weight(c: &Characteristic, f: &Feature) -> Rational {
    int(100) * &c.weight * &f.weight
}


#[cfg(test)]
mod tests {
    use super::test_support::{arb_model, model};
    use super::*;
    use crate::number::ratio;
    use proptest::prelude::*;

    fn fifths() -> QualityModel {
        let feats = |n: i64| vec![ratio(1, n); n as usize];
        model(&[
            (ratio(1, 5), feats(8)),
            (ratio(1, 5), feats(4)),
            (ratio(1, 5), feats(5)),
            (ratio(1, 5), feats(2)),
            (ratio(1, 5), feats(1)),
        ])
    }

    #[test]
    fn five_balanced_characteristics_are_valid() {
        assert!(fifths().validate().is_empty());
    }

    #[test]
    fn single_feature_model_is_valid() {
        assert!(model(&[(int(1), vec![int(1)])]).validate().is_empty());
    }

    #[test]
    fn reports_characteristic_sum() {
        let m = model(&[(ratio(1, 2), vec![int(1)]), (ratio(1, 3), vec![int(1)])]);
        let report = m.validate();
        assert_eq!(report.violations.len(), 1);
        assert_eq!(
            report.violations[0].message,
            "characteristic weights sum to 5/6 ≠ 1"
        );
        assert_eq!(report.violations[0].subject, "model");
    }

    #[test]
    fn reports_feature_sum_range_and_ids() {
        let mut m = model(&[(int(1), vec![ratio(1, 2), ratio(3, 2)])]);
        m.characteristics[0].features[0].id = "2.1".into();
        let report = m.validate();
        let subjects: Vec<_> = report.errors().map(|v| v.subject.as_str()).collect();
        assert!(subjects.contains(&"2.1"));
        assert!(subjects.contains(&"1.2"));
        assert!(subjects.contains(&"1"));
        assert!(!report.is_valid());
    }

    #[test]
    fn duplicate_feature_ids_are_reported() {
        let mut m = model(&[(int(1), vec![ratio(1, 2), ratio(1, 2)])]);
        m.characteristics[0].features[1].id = "1.1".into();
        assert!(m
            .validate()
            .errors()
            .any(|v| v.message == "duplicate feature id"));
    }

    #[test]
    fn zero_feature_weight_warns_only() {
        let m = model(&[(int(1), vec![int(0), int(1)])]);
        let report = m.validate();
        assert!(report.is_valid());
        assert_eq!(report.warnings().count(), 1);
    }

    #[test]
    fn empty_model_and_empty_characteristic() {
        assert!(!QualityModel::default().validate().is_valid());
        assert!(!model(&[(int(1), vec![])]).validate().is_valid());
        assert!(matches!(
            QualityModel::default().with_default_characteristic_weights(),
            Err(Error::EmptyModel)
        ));
    }

    #[test]
    fn default_weights() {
        let m = fifths().with_default_characteristic_weights().unwrap();
        assert!(m.characteristics.iter().all(|c| c.weight == ratio(1, 5)));

        let one = model(&[(ratio(1, 7), vec![int(1)])])
            .with_default_characteristic_weights()
            .unwrap();
        assert_eq!(one.characteristics[0].weight, int(1));

        let three = model(&[
            (ratio(1, 2), vec![int(1)]),
            (ratio(1, 4), vec![int(1)]),
            (int(0), vec![int(1)]),
        ])
        .with_default_characteristic_weights()
        .unwrap();
        assert!(three
            .characteristics
            .iter()
            .all(|c| c.weight == ratio(1, 3)));
        assert_eq!(three.characteristics[0].features[0].weight, int(1));
    }

    #[test]
    fn overall_weight_examples() {
        let m = model(&[
            (ratio(1, 5), vec![ratio(1, 5); 5]),
            (ratio(4, 5), vec![ratio(1, 8); 8]),
        ]);
        assert_eq!(m.feature_overall_weight("1.1").unwrap(), int(4));
        let m2 = model(&[
            (ratio(1, 5), vec![ratio(1, 8); 8]),
            (ratio(4, 5), vec![int(1)]),
        ]);
        assert_eq!(m2.feature_overall_weight("1.3").unwrap(), ratio(5, 2));
        let unit = model(&[(int(1), vec![int(1)])]);
        assert_eq!(unit.feature_overall_weight("1.1").unwrap(), int(100));
        assert!(matches!(
            unit.feature_overall_weight("9.9"),
            Err(Error::UnknownFeature(_))
        ));
    }

    #[test]
    fn max_adherence_scales_with_products() {
        let m = fifths();
        assert_eq!(m.max_adherence(5).unwrap(), int(500));
        assert_eq!(m.max_adherence(1).unwrap(), int(100));
        assert!(matches!(m.max_adherence(0), Err(Error::NoProducts)));
    }

    #[test]
    fn renormalize_fixes_sums() {
        let m = model(&[(int(2), vec![int(1), int(3)]), (int(2), vec![int(5)])]);
        let r = m.renormalized().unwrap();
        assert!(r.validate().is_empty());
        assert_eq!(r.characteristics[0].features[1].weight, ratio(3, 4));
        assert!(matches!(
            model(&[(int(1), vec![int(0)])]).renormalized(),
            Err(Error::ZeroWeightSum(_))
        ));
    }

    proptest! {
        #[test]
        fn overall_weights_sum_to_one_hundred(m in arb_model()) {
            prop_assert!(m.validate().is_valid());
            let total: Rational = m.features().map(|(c, f)| overall_weight(c, f)).sum();
            prop_assert_eq!(total, int(100));
        }

        #[test]
        fn default_weights_idempotent(m in arb_model()) {
            let once = m.with_default_characteristic_weights().unwrap();
            let twice = once.with_default_characteristic_weights().unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn overall_weight_monotone(wc in 0i64..=10, wf in 0i64..=10, dc in 0i64..=5, df in 0i64..=5) {
            let w = |c: i64, f: i64| {
                let m = model(&[(ratio(c, 20), vec![ratio(f, 20)])]);
                m.feature_overall_weight("1.1").unwrap()
            };
            prop_assert!(w(wc + dc, wf) >= w(wc, wf));
            prop_assert!(w(wc, wf + df) >= w(wc, wf));
        }
    }
}
