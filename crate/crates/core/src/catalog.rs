//! Architecture modification options: costs, quality gains and the pairs
//! that cannot be applied together.

use crate::assessment::ResolvedAssessment;
use crate::error::{Error, Result};
use crate::number::{self, clamp_unit, int, Rational};
use crate::validation::ValidationReport;
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

/// Largest catalog the bitmask-based routines accept.
pub const MAX_MODIFICATIONS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum GainSpec {
    /// Adherence gain per product id. May be negative.
    PerProduct(BTreeMap<String, Rational>),
    /// Change of the compliance value, keyed by feature id then product id.
    /// Applied as `clamp(v + Σ deltas, 0, 1)`.
    PerFeature(BTreeMap<String, BTreeMap<String, Rational>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Modification {
    pub id: String,
    pub label: String,
    /// Product-line level effort, in workdays.
    pub shared_cost: Rational,
    pub per_product_costs: BTreeMap<String, Rational>,
    pub gains: GainSpec,
}

impl Modification {
    pub fn total_cost(&self) -> Rational {
        &self.shared_cost + self.per_product_costs.values().sum::<Rational>()
    }
}

/// Unordered pairs of mutually exclusive modifications.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConflictGraph {
    pairs: BTreeSet<(String, String)>,
}

impl ConflictGraph {
    pub fn new<I, A, B>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let mut g = Self::default();
        for (a, b) in pairs {
            g.insert(a.into(), b.into());
        }
        g
    }

    pub fn insert(&mut self, a: String, b: String) {
        if a <= b {
            self.pairs.insert((a, b));
        } else {
            self.pairs.insert((b, a));
        }
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        self.pairs.contains(&(x.to_owned(), y.to_owned()))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Catalog {
    pub modifications: Vec<Modification>,
    pub conflicts: ConflictGraph,
}

impl Catalog {
    pub fn new(modifications: Vec<Modification>, conflicts: ConflictGraph) -> Self {
        Self {
            modifications,
            conflicts,
        }
    }

    pub fn len(&self) -> usize {
        self.modifications.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modifications.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.modifications
            .iter()
            .position(|m| m.id == id)
            .ok_or_else(|| Error::UnknownModification(id.to_owned()))
    }

    /// Catalog positions of `ids`, sorted and deduplicated.
    pub fn indices<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>> {
        let mut out = ids
            .iter()
            .map(|id| self.index_of(id.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Ids in catalog order.
    pub fn ids_of(&self, indices: &[usize]) -> Vec<String> {
        indices
            .iter()
            .map(|&i| self.modifications[i].id.clone())
            .collect()
    }

    /// Sum of member costs; costs do not interact.
    pub fn subset_cost<S: AsRef<str>>(&self, ids: &[S]) -> Result<Rational> {
        Ok(self
            .indices(ids)?
            .into_iter()
            .map(|i| self.modifications[i].total_cost())
            .sum())
    }

    /// True when no two members conflict.
    pub fn is_feasible<S: AsRef<str>>(&self, ids: &[S]) -> Result<bool> {
        let idx = self.indices(ids)?;
        Ok(self.first_conflict(&idx).is_none())
    }

    pub(crate) fn first_conflict(&self, indices: &[usize]) -> Option<(String, String)> {
        for (k, &i) in indices.iter().enumerate() {
            for &j in &indices[k + 1..] {
                let (a, b) = (&self.modifications[i].id, &self.modifications[j].id);
                if self.conflicts.contains(a, b) {
                    return Some((a.clone(), b.clone()));
                }
            }
        }
        None
    }

    /// Adjacency as bitmasks over catalog positions. Unknown ids are ignored
    /// here; [`Catalog::validate`] reports them.
    pub(crate) fn conflict_masks(&self) -> Result<Vec<u64>> {
        let n = self.len();
        if n > MAX_MODIFICATIONS {
            return Err(Error::CatalogTooLarge {
                count: n,
                limit: MAX_MODIFICATIONS,
            });
        }
        let pos: HashMap<&str, usize> = self
            .modifications
            .iter()
            .enumerate()
            .map(|(i, m)| (m.id.as_str(), i))
            .collect();
        let mut adj = vec![0u64; n];
        for (a, b) in self.conflicts.pairs() {
            if let (Some(&i), Some(&j)) = (pos.get(a), pos.get(b)) {
                if i != j {
                    adj[i] |= 1 << j;
                    adj[j] |= 1 << i;
                }
            }
        }
        Ok(adj)
    }

    /// Number of non-empty feasible subsets (independent sets of the
    /// conflict graph).
    pub fn count_feasible(&self) -> Result<u128> {
        let adj = self.conflict_masks()?;
        let all = if adj.len() == 64 {
            u64::MAX
        } else {
            (1u64 << adj.len()) - 1
        };
        let mut memo = HashMap::new();
        Ok(count_independent(all, &adj, &mut memo) - 1)
    }

    /// Structural checks that need no assessment.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        let mut ids = HashSet::new();
        for m in &self.modifications {
            if m.id.is_empty() {
                report.error("catalog", "modification with empty id");
            }
            if !ids.insert(m.id.as_str()) {
                report.error(&m.id, "duplicate modification id");
            }
            check_cost(&mut report, &m.id, "shared cost", &m.shared_cost);
            for (p, c) in &m.per_product_costs {
                check_cost(&mut report, &m.id, &format!("cost for {p}"), c);
            }
            if !m.total_cost().is_positive() {
                report.error(&m.id, "total cost must be positive");
            }
        }
        for (a, b) in self.conflicts.pairs() {
            let subject = format!("conflict ({a}, {b})");
            if a == b {
                report.error(&subject, "modification conflicts with itself");
            }
            for id in [a, b] {
                if !ids.contains(id) {
                    report.error(&subject, format!("unknown modification {id}"));
                }
            }
        }
        report
    }

    /// Checks referenced product and feature ids against an assessment, and
    /// warns when purely additive gains could push adherence past its maximum.
    pub fn validate_against(&self, r: &ResolvedAssessment) -> ValidationReport {
        let mut report = self.validate();
        let mut positive = Rational::zero();
        for m in &self.modifications {
            for p in m.per_product_costs.keys() {
                if r.product_index(p).is_err() {
                    report.error(&m.id, format!("cost for unknown product {p}"));
                }
            }
            match &m.gains {
                GainSpec::PerProduct(g) => {
                    for (p, v) in g {
                        if r.product_index(p).is_err() {
                            report.error(&m.id, format!("gain for unknown product {p}"));
                        }
                        if v.is_positive() {
                            positive += v;
                        }
                    }
                }
                GainSpec::PerFeature(g) => {
                    for (f, per_product) in g {
                        if r.feature_index(f).is_err() {
                            report.error(&m.id, format!("delta for unknown feature {f}"));
                        }
                        for p in per_product.keys() {
                            if r.product_index(p).is_err() {
                                report.error(&m.id, format!("delta for unknown product {p}"));
                            }
                        }
                    }
                }
            }
        }
        let max = int(100) * int(r.product_count() as i64);
        let reachable = r.adherence() + &positive;
        if reachable > max {
            report.warning(
                "catalog",
                format!(
                    "baseline plus all positive per-product gains is {} which exceeds the maximum adherence {}",
                    number::format(&reachable),
                    number::format(&max)
                ),
            );
        }
        report
    }
}

fn check_cost(report: &mut ValidationReport, id: &str, what: &str, cost: &Rational) {
    if cost.is_negative() {
        report.error(id, format!("{what} is negative"));
    }
    match number::decimal_places(cost) {
        Some(p) if p <= 2 => {}
        _ => report.error(
            id,
            format!("{what} {} has more than two decimals", number::format(cost)),
        ),
    }
}

fn count_independent(mask: u64, adj: &[u64], memo: &mut HashMap<u64, u128>) -> u128 {
    if mask == 0 {
        return 1;
    }
    if let Some(&c) = memo.get(&mask) {
        return c;
    }
    let v = mask.trailing_zeros() as usize;
    let rest = mask & !(1u64 << v);
    let c = if adj[v] & rest == 0 {
        2 * count_independent(rest, adj, memo)
    } else {
        count_independent(rest, adj, memo) + count_independent(rest & !adj[v], adj, memo)
    };
    memo.insert(mask, c);
    c
}

/// What one modification does to the resolved baseline.
#[derive(Debug, Clone)]
struct Effect {
    /// Sum of per-product gains (PerProduct modifications).
    fixed: Rational,
    /// `(cell, delta)` with `cell = feature * products + product`.
    deltas: Vec<(usize, Rational)>,
    /// Upper bound on what this modification can add to any subset.
    optimistic: Rational,
}

/// Subset gains against one resolved baseline.
///
/// Per-product gains add up. Per-feature deltas are summed per cell and then
/// clamped, so their combined gain is not additive; [`EvalState`] tracks the
/// summed deltas incrementally for depth-first searches.
#[derive(Debug, Clone)]
pub struct GainEvaluator {
    baseline: ResolvedAssessment,
    baseline_adherence: Rational,
    effects: Vec<Effect>,
    costs: Vec<Rational>,
    products: usize,
}

impl GainEvaluator {
    pub fn new(catalog: &Catalog, baseline: &ResolvedAssessment) -> Result<Self> {
        let products = baseline.product_count();
        let mut effects = Vec::with_capacity(catalog.len());
        for m in &catalog.modifications {
            let effect = match &m.gains {
                GainSpec::PerProduct(g) => {
                    let mut fixed = Rational::zero();
                    for (p, v) in g {
                        baseline.product_index(p)?;
                        fixed += v;
                    }
                    let optimistic = g.values().filter(|v| v.is_positive()).sum::<Rational>();
                    Effect {
                        fixed,
                        deltas: Vec::new(),
                        optimistic,
                    }
                }
                GainSpec::PerFeature(g) => {
                    let mut deltas = Vec::new();
                    let mut optimistic = Rational::zero();
                    for (f, per_product) in g {
                        let fi = baseline.feature_index(f)?;
                        for (p, d) in per_product {
                            let pi = baseline.product_index(p)?;
                            if d.is_positive() {
                                optimistic += baseline.weight_at(fi, pi) * d;
                            }
                            deltas.push((fi * products + pi, d.clone()));
                        }
                    }
                    Effect {
                        fixed: Rational::zero(),
                        deltas,
                        optimistic,
                    }
                }
            };
            effects.push(effect);
        }
        Ok(Self {
            baseline_adherence: baseline.adherence(),
            baseline: baseline.clone(),
            effects,
            costs: catalog
                .modifications
                .iter()
                .map(Modification::total_cost)
                .collect(),
            products,
        })
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn baseline(&self) -> &ResolvedAssessment {
        &self.baseline
    }

    pub fn baseline_adherence(&self) -> &Rational {
        &self.baseline_adherence
    }

    pub fn cost(&self, index: usize) -> &Rational {
        &self.costs[index]
    }

    /// No subset containing `index` gains more from it than this.
    pub fn optimistic_gain(&self, index: usize) -> &Rational {
        &self.effects[index].optimistic
    }

    pub fn state(&self) -> EvalState<'_> {
        EvalState {
            eval: self,
            acc: HashMap::new(),
            gain: Rational::zero(),
            cost: Rational::zero(),
            stack: Vec::new(),
        }
    }

    /// Gain of a subset given by catalog positions.
    pub fn gain(&self, indices: &[usize]) -> Rational {
        let mut st = self.state();
        for &i in indices {
            st.push(i);
        }
        st.gain
    }

    pub fn cost_of(&self, indices: &[usize]) -> Rational {
        indices.iter().map(|&i| self.costs[i].clone()).sum()
    }

    /// The baseline with every per-feature delta of `indices` applied.
    pub fn applied(&self, indices: &[usize]) -> ResolvedAssessment {
        let mut values = self.baseline.values().to_vec();
        let mut acc: HashMap<usize, Rational> = HashMap::new();
        for &i in indices {
            for (cell, d) in &self.effects[i].deltas {
                *acc.entry(*cell).or_insert_with(Rational::zero) += d;
            }
        }
        for (cell, d) in acc {
            let (f, p) = (cell / self.products, cell % self.products);
            values[f][p] = clamp_unit(&values[f][p] + d);
        }
        self.baseline.with_values(values)
    }

    fn cell_score(&self, cell: usize, acc: &Rational) -> Rational {
        let (f, p) = (cell / self.products, cell % self.products);
        let v = clamp_unit(self.baseline.value_at(f, p) + acc);
        self.baseline.weight_at(f, p) * v
    }
}

/// Running gain and cost of a subset built by push/pop.
pub struct EvalState<'e> {
    eval: &'e GainEvaluator,
    acc: HashMap<usize, Rational>,
    gain: Rational,
    cost: Rational,
    stack: Vec<Rational>,
}

impl EvalState<'_> {
    pub fn gain(&self) -> &Rational {
        &self.gain
    }

    pub fn cost(&self) -> &Rational {
        &self.cost
    }

    pub fn push(&mut self, index: usize) {
        let effect = &self.eval.effects[index];
        let mut delta = effect.fixed.clone();
        for (cell, d) in &effect.deltas {
            let before = self.acc.get(cell).cloned().unwrap_or_else(Rational::zero);
            let after = &before + d;
            delta += self.eval.cell_score(*cell, &after) - self.eval.cell_score(*cell, &before);
            self.acc.insert(*cell, after);
        }
        self.gain += &delta;
        self.cost += &self.eval.costs[index];
        self.stack.push(delta);
    }

    /// Undoes the most recent push, which must have been `index`.
    pub fn pop(&mut self, index: usize) {
        let delta = self.stack.pop().expect("pop without push");
        for (cell, d) in &self.eval.effects[index].deltas {
            if let Some(a) = self.acc.get_mut(cell) {
                *a -= d;
            }
        }
        self.gain -= delta;
        self.cost -= &self.eval.costs[index];
    }
}

/// Result of applying a feasible subset.
#[derive(Debug, Clone)]
pub struct Applied {
    /// The baseline after per-feature deltas; per-product gains leave it as is.
    pub assessment: ResolvedAssessment,
    pub gain: Rational,
    pub adherence: Rational,
}

/// Applies a feasible subset to the baseline.
pub fn apply<S: AsRef<str>>(
    catalog: &Catalog,
    ids: &[S],
    baseline: &ResolvedAssessment,
) -> Result<Applied> {
    let idx = catalog.indices(ids)?;
    if let Some((a, b)) = catalog.first_conflict(&idx) {
        return Err(Error::Conflict(a, b));
    }
    let eval = GainEvaluator::new(catalog, baseline)?;
    let gain = eval.gain(&idx);
    Ok(Applied {
        assessment: eval.applied(&idx),
        adherence: eval.baseline_adherence() + &gain,
        gain,
    })
}

/// Adherence after applying the subset minus adherence before.
pub fn subset_gain<S: AsRef<str>>(
    catalog: &Catalog,
    ids: &[S],
    baseline: &ResolvedAssessment,
) -> Result<Rational> {
    apply(catalog, ids, baseline).map(|a| a.gain)
}
