use plopt_core::gap_analysis::high_impact_features;
use plopt_core::io::{load_assessment, load_catalog, load_model};
use plopt_core::number::{int, parse};
use plopt_core::optimizer::RatioQuality;
use plopt_core::*;
use std::path::PathBuf;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/case-study")
        .join(name)
}

struct Case {
    model: QualityModel,
    matrix: ScoreMatrix,
    catalog: Catalog,
}

impl Case {
    fn load() -> Self {
        Self {
            model: load_model(&fixture("model.json")).unwrap(),
            matrix: load_assessment(&fixture("assessment.json")).unwrap(),
            catalog: load_catalog(&fixture("modifications.json")).unwrap(),
        }
    }

    fn baseline(&self) -> ResolvedAssessment {
        ResolvedAssessment::resolve(&self.model, &self.matrix, IrrelevancePolicy::Perfect).unwrap()
    }

    fn optimizer(&self, quality: RatioQuality) -> (ResolvedAssessment, OptimizerConfig) {
        let config = OptimizerConfig {
            ratio_quality: quality,
            ..OptimizerConfig::default()
        };
        (self.baseline(), config)
    }
}

fn dec(s: &str) -> Rational {
    parse(s).unwrap()
}

#[test]
fn fixtures_are_clean() {
    let c = Case::load();
    assert!(c.model.validate().is_empty(), "{}", c.model.validate());
    assert!(
        c.matrix.validate(&c.model).is_empty(),
        "{}",
        c.matrix.validate(&c.model)
    );
    let report = c.catalog.validate_against(&c.baseline());
    assert!(report.is_empty(), "{report}");
}

#[test]
fn baseline_adherence() {
    assert_eq!(Case::load().baseline().adherence(), dec("262.4"));
}

#[test]
fn high_impact_features_match() {
    let c = Case::load();
    let expected = ["2.1.2", "2.2.2", "3.1", "3.6", "4.2", "5.2", "5.3"];
    for form in [StddevForm::Population, StddevForm::Sample] {
        let report = build_gap_report(&c.baseline(), form).unwrap();
        assert_eq!(report.high_impact_features, expected);
        for f in &report.features {
            if expected.contains(&f.feature_id.as_str()) {
                assert!(f.gap > dec("2.7"), "{} gap {}", f.feature_id, f.gap);
            }
        }
        assert_eq!(high_impact_features(&c.baseline(), form), expected);
    }
}

#[test]
fn access_control_modification() {
    let c = Case::load();
    let m8 = &c.catalog.modifications[c.catalog.index_of("m8").unwrap()];
    assert_eq!(m8.total_cost(), int(25));
    assert_eq!(
        subset_gain(&c.catalog, &["m8"], &c.baseline()).unwrap(),
        int(15)
    );
    assert!(!c.catalog.is_feasible(&["m7", "m8"]).unwrap());
    assert!(c.catalog.is_feasible(&["m3", "m5"]).unwrap());
}

#[test]
fn count_and_enumeration() {
    let c = Case::load();
    assert_eq!(c.catalog.count_feasible().unwrap(), 359);
    let all = optimizer::enumerate_feasible(&c.catalog, &c.baseline()).unwrap();
    assert_eq!(all.len(), 359);
    assert!(all.windows(2).all(|w| w[0].total_gain >= w[1].total_gain));
}

#[test]
fn budget_optimum() {
    let c = Case::load();
    let (baseline, config) = c.optimizer(RatioQuality::Gain);
    let opt = Optimizer::new(&c.catalog, &baseline, config).unwrap();
    let plan = opt.optimize_budget(&int(250)).unwrap();
    assert_eq!(plan.subset, ["m3", "m5", "m6", "m8", "m10"]);
    assert_eq!(plan.total_gain, dec("102.5"));
    assert_eq!(plan.total_cost, int(233));
    assert_eq!(plan.adherence_after, dec("364.9"));
    assert!(opt.verify(&plan, &Objective::Budget(int(250))).is_empty());
    assert_eq!(
        opt.optimize_exhaustive(&Objective::Budget(int(250)))
            .unwrap(),
        plan
    );
    assert!(opt.optimize_budget(&int(0)).unwrap().subset.is_empty());
}

#[test]
fn ratio_optimum_gain_reading() {
    let c = Case::load();
    let (baseline, config) = c.optimizer(RatioQuality::Gain);
    let opt = Optimizer::new(&c.catalog, &baseline, config).unwrap();
    let plan = opt.optimize_ratio(1.6).unwrap();
    assert_eq!(plan.subset, ["m2", "m6", "m8", "m10"]);
    assert_eq!(plan.total_gain, dec("69.3"));
    assert_eq!(plan.total_cost, int(109));
    assert_eq!(
        opt.optimize_exhaustive(&Objective::Ratio(1.6)).unwrap(),
        plan
    );
}

#[test]
fn ratio_optimum_adherence_reading_differs() {
    // With total adherence as the quality term, a cheap singleton dominates.
    let c = Case::load();
    let (baseline, config) = c.optimizer(RatioQuality::Adherence);
    let opt = Optimizer::new(&c.catalog, &baseline, config).unwrap();
    let plan = opt.optimize_ratio(1.6).unwrap();
    assert_ne!(plan.subset, ["m2", "m6", "m8", "m10"]);
    assert_eq!(plan.subset.len(), 1);
    assert_eq!(
        opt.optimize_exhaustive(&Objective::Ratio(1.6)).unwrap(),
        plan
    );
}

#[test]
fn pareto_rank() {
    let c = Case::load();
    let opt = Optimizer::new(&c.catalog, &c.baseline(), OptimizerConfig::default()).unwrap();
    let rows = opt.pareto_export(1.0).unwrap();
    assert_eq!(rows.len(), 359);
    let row = rows
        .iter()
        .find(|r| r.subset == ["m3", "m5", "m6", "m8", "m10"])
        .unwrap();
    assert_eq!(row.rank, 351);
    let u = rows
        .iter()
        .find(|r| r.subset == ["m2", "m6", "m8", "m10"])
        .unwrap();
    assert_eq!(u.rank, 201);
    assert_eq!(rows.last().unwrap().rank, 1);
}
