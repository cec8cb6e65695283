use super::Plan;
use crate::number::{self, Rational};
use std::io::{self, Write};

pub const PARETO_HEADER: &str = "rank,subset,gain,cost,adherence,objective";

/// One feasible subset in the exported lattice. Rank 1 is the lowest gain.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoRow {
    pub rank: usize,
    pub subset: Vec<String>,
    pub gain: Rational,
    pub cost: Rational,
    pub adherence: Rational,
    pub objective: f64,
}

impl ParetoRow {
    pub fn csv_line(&self) -> String {
        let objective = if self.objective.is_finite() {
            self.objective.to_string()
        } else {
            String::new()
        };
        format!(
            "{},{},{},{},{},{}",
            self.rank,
            self.subset.join("+"),
            number::format(&self.gain),
            number::format(&self.cost),
            number::format(&self.adherence),
            objective
        )
    }
}

/// `plans` must already be in enumeration order (best first).
pub(super) fn rows(plans: Vec<Plan>) -> Vec<ParetoRow> {
    let n = plans.len();
    plans
        .into_iter()
        .enumerate()
        .map(|(i, p)| ParetoRow {
            rank: n - i,
            subset: p.subset,
            gain: p.total_gain,
            cost: p.total_cost,
            adherence: p.adherence_after,
            objective: p.objective_value,
        })
        .collect()
}

pub fn write_pareto_csv<W: Write>(rows: &[ParetoRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{PARETO_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.csv_line())?;
    }
    Ok(())
}
