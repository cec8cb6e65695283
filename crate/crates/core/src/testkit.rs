//! Random instances and a brute-force reference solver.
//!
//! The reference solver walks every bitmask and evaluates gains with its own
//! sum-then-clamp code, so it shares nothing with the search it checks.

use crate::assessment::{CellValue, IrrelevancePolicy, Product, ResolvedAssessment, ScoreMatrix};
use crate::catalog::{Catalog, ConflictGraph, GainSpec, Modification};
use crate::number::{clamp_unit, int, ratio, to_f64, Rational};
use crate::optimizer::{Objective, RatioQuality, RATIO_TOLERANCE};
use crate::quality_model::{Characteristic, Feature, QualityModel};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainKind {
    PerProduct,
    PerFeature,
    Mixed,
}

#[derive(Debug, Clone)]
pub struct Shape {
    pub modifications: usize,
    pub products: usize,
    /// Probability that a given pair of modifications conflicts.
    pub conflict_density: f64,
    pub gains: GainKind,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub model: QualityModel,
    pub matrix: ScoreMatrix,
    pub catalog: Catalog,
}

impl Instance {
    pub fn baseline(&self) -> ResolvedAssessment {
        ResolvedAssessment::resolve(&self.model, &self.matrix, IrrelevancePolicy::Perfect)
            .expect("generated instances resolve")
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 1 to 3 characteristics of 1 to 4 features, integer weights renormalized.
pub fn random_model<R: Rng>(rng: &mut R) -> QualityModel {
    let chars = (1..=rng.gen_range(1..=3))
        .map(|c| Characteristic {
            id: c.to_string(),
            name: format!("characteristic {c}"),
            weight: int(rng.gen_range(1..=5)),
            features: (1..=rng.gen_range(1..=4))
                .map(|f| Feature {
                    id: format!("{c}.{f}"),
                    name: format!("feature {c}.{f}"),
                    question: String::new(),
                    weight: int(rng.gen_range(1..=6)),
                })
                .collect(),
        })
        .collect();
    QualityModel::new(chars)
        .renormalized()
        .expect("positive weights renormalize")
}

/// Values in tenths; about one cell in ten is irrelevant.
pub fn random_matrix<R: Rng>(rng: &mut R, model: &QualityModel, products: usize) -> ScoreMatrix {
    let mut m = ScoreMatrix::new(
        (1..=products)
            .map(|p| Product {
                id: format!("p{p}"),
                name: format!("Product {p}"),
            })
            .collect(),
    );
    for (_, f) in model.features() {
        for p in 1..=products {
            let cell = if rng.gen_bool(0.1) {
                CellValue::Irrelevant
            } else {
                CellValue::Score(ratio(rng.gen_range(0..=10), 10))
            };
            m.set(&f.id, &format!("p{p}"), cell);
        }
    }
    m
}

pub fn random_catalog<R: Rng>(rng: &mut R, model: &QualityModel, shape: &Shape) -> Catalog {
    let features: Vec<String> = model.features().map(|(_, f)| f.id.clone()).collect();
    let products: Vec<String> = (1..=shape.products).map(|p| format!("p{p}")).collect();
    let mut mods = Vec::with_capacity(shape.modifications);
    for i in 1..=shape.modifications {
        // narrow integer ranges so equal costs and gains occur often
        let mut shared = int(rng.gen_range(0..=40));
        let mut per_product = BTreeMap::new();
        if rng.gen_bool(0.5) {
            for p in &products {
                per_product.insert(p.clone(), int(rng.gen_range(0..=5)));
            }
        }
        if shared.is_zero() && per_product.values().all(Zero::is_zero) {
            shared = int(1);
        }
        let per_feature = match shape.gains {
            GainKind::PerProduct => false,
            GainKind::PerFeature => true,
            GainKind::Mixed => rng.gen_bool(0.5),
        };
        let gains = if per_feature {
            let mut g: BTreeMap<String, BTreeMap<String, Rational>> = BTreeMap::new();
            for _ in 0..rng.gen_range(1..=3) {
                let f = &features[rng.gen_range(0..features.len())];
                let p = &products[rng.gen_range(0..products.len())];
                g.entry(f.clone())
                    .or_default()
                    .insert(p.clone(), ratio(rng.gen_range(-3..=6), 10));
            }
            GainSpec::PerFeature(g)
        } else {
            GainSpec::PerProduct(
                products
                    .iter()
                    .map(|p| (p.clone(), ratio(rng.gen_range(-4..=16), 2)))
                    .collect(),
            )
        };
        mods.push(Modification {
            id: format!("m{i}"),
            label: String::new(),
            shared_cost: shared,
            per_product_costs: per_product,
            gains,
        });
    }
    let mut conflicts = ConflictGraph::default();
    for a in 1..=shape.modifications {
        for b in a + 1..=shape.modifications {
            if rng.gen_bool(shape.conflict_density) {
                conflicts.insert(format!("m{a}"), format!("m{b}"));
            }
        }
    }
    Catalog::new(mods, conflicts)
}

pub fn random_instance<R: Rng>(rng: &mut R, shape: &Shape) -> Instance {
    let model = random_model(rng);
    let matrix = random_matrix(rng, &model, shape.products);
    let catalog = random_catalog(rng, &model, shape);
    Instance {
        model,
        matrix,
        catalog,
    }
}

/// A shape with up to `max_modifications` modifications and a random mix of
/// gain kinds and conflict densities.
pub fn random_shape<R: Rng>(rng: &mut R, max_modifications: usize) -> Shape {
    Shape {
        modifications: rng.gen_range(1..=max_modifications),
        products: rng.gen_range(1..=4),
        conflict_density: [0.0, 0.1, 0.3, 0.6][rng.gen_range(0..4)],
        gains: [GainKind::PerProduct, GainKind::PerFeature, GainKind::Mixed][rng.gen_range(0..3)],
    }
}

/// One feasible subset as seen by the reference solver.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    /// Catalog positions, ascending.
    pub indices: Vec<usize>,
    pub ids: Vec<String>,
    pub gain: Rational,
    pub cost: Rational,
}

/// Every feasible subset, including the empty one, by plain bitmask walk.
pub fn all_feasible(catalog: &Catalog, baseline: &ResolvedAssessment) -> Vec<Entry> {
    let n = catalog.len();
    assert!(n < 24, "reference solver is exponential");
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        let indices: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let ids = catalog.ids_of(&indices);
        if !catalog
            .is_feasible(&ids)
            .expect("ids come from the catalog")
        {
            continue;
        }
        let mut gain = Rational::zero();
        let mut deltas: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
        for &i in &indices {
            match &catalog.modifications[i].gains {
                GainSpec::PerProduct(g) => gain += g.values().sum::<Rational>(),
                GainSpec::PerFeature(g) => {
                    for (f, row) in g {
                        let fi = baseline.feature_index(f).expect("known feature");
                        for (p, d) in row {
                            let pi = baseline.product_index(p).expect("known product");
                            *deltas.entry((fi, pi)).or_insert_with(Rational::zero) += d;
                        }
                    }
                }
            }
        }
        for ((f, p), d) in deltas {
            let v = baseline.value_at(f, p);
            let after = clamp_unit(v + d);
            gain += baseline.weight_at(f, p) * (after - v);
        }
        let cost = indices
            .iter()
            .map(|&i| {
                let m = &catalog.modifications[i];
                &m.shared_cost + m.per_product_costs.values().sum::<Rational>()
            })
            .sum();
        out.push(Entry {
            indices,
            ids,
            gain,
            cost,
        });
    }
    out
}

fn prefer(a: &Entry, b: &Entry) -> Ordering {
    b.gain
        .cmp(&a.gain)
        .then_with(|| a.cost.cmp(&b.cost))
        .then_with(|| a.indices.cmp(&b.indices))
}

/// The optimum of `objective` over `entries` under the documented tie-break.
pub fn best<'e>(
    entries: &'e [Entry],
    objective: &Objective,
    quality: RatioQuality,
    baseline_adherence: &Rational,
) -> Option<&'e Entry> {
    match objective {
        Objective::Budget(xi) => entries
            .iter()
            .filter(|e| &e.cost <= xi)
            .min_by(|a, b| prefer(a, b)),
        Objective::Ratio(gamma) => {
            let scored: Vec<(f64, &Entry)> = entries
                .iter()
                .filter(|e| !e.indices.is_empty())
                .filter_map(|e| {
                    let q = match quality {
                        RatioQuality::Gain => e.gain.clone(),
                        RatioQuality::Adherence => baseline_adherence + &e.gain,
                    };
                    if q.is_negative() {
                        None
                    } else {
                        Some((to_f64(&q).powf(*gamma) / to_f64(&e.cost), e))
                    }
                })
                .collect();
            let max = scored.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
            scored
                .into_iter()
                .filter(|s| s.0 >= max - RATIO_TOLERANCE)
                .map(|s| s.1)
                .min_by(|a, b| prefer(a, b))
        }
    }
}

/// Cost of the whole catalog; no subset exceeds it.
pub fn generous_budget(catalog: &Catalog) -> Rational {
    catalog
        .modifications
        .iter()
        .map(Modification::total_cost)
        .sum()
}
