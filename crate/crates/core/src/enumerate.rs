//! Exhaustive enumeration of small branching random walks with discrete
//! displacements.
//!
//! Generation configurations are multisets of positions; identical multisets
//! reached along different paths are merged, which keeps `n ≤ 3` instances with
//! a handful of offspring values well inside the outcome budget.

use std::collections::BTreeMap;

use crate::displacement::DisplacementModel;
use crate::error::{Error, Result};
use crate::functional::EventSpec;
use crate::offspring::OffspringLaw;
use crate::sim::SimConfig;

pub const OUTCOME_BUDGET: u64 = 10_000_000;

/// A generation-`n` configuration: sorted unscaled positions and its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub positions: Vec<f64>,
    pub probability: f64,
}

/// All generation-`n` configurations with their unconditioned probabilities.
pub fn enumerate_configurations(
    law: &OffspringLaw,
    model: &DisplacementModel,
    n: usize,
    budget: u64,
) -> Result<Vec<Configuration>> {
    let (values, probs) = model.table_entries().ok_or(Error::UnsupportedFamily {
        family: model.family().name(),
        operation: "exact enumeration",
    })?;
    let blocks = block_outcomes(law, values, probs);
    let mut spent = 0u64;
    let mut current: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
    current.insert(vec![0f64.to_bits()], 1.0);
    for _ in 0..n {
        let mut next: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
        for (config, p) in &current {
            // children of each parent in turn, merging partial multisets
            let mut partial: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
            partial.insert(Vec::new(), *p);
            for parent in config.iter().map(|b| f64::from_bits(*b)) {
                let mut grown: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
                for (acc, q) in &partial {
                    for (offsets, w) in &blocks {
                        spent += 1;
                        if spent > budget {
                            return Err(Error::OutcomeBudget { budget });
                        }
                        let mut pos: Vec<f64> = acc.iter().map(|b| f64::from_bits(*b)).collect();
                        pos.extend(offsets.iter().map(|d| parent + d));
                        pos.sort_by(f64::total_cmp);
                        *grown.entry(pos.iter().map(|x| x.to_bits()).collect()).or_insert(0.0) += q * w;
                    }
                }
                partial = grown;
            }
            for (k, v) in partial {
                *next.entry(k).or_insert(0.0) += v;
            }
        }
        current = next;
    }
    Ok(current
        .into_iter()
        .map(|(k, p)| Configuration {
            positions: k.into_iter().map(f64::from_bits).collect(),
            probability: p,
        })
        .collect())
}

/// Every (sorted displacement block, probability) a single parent can produce.
fn block_outcomes(law: &OffspringLaw, values: &[f64], probs: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let mut out = Vec::new();
    for (k, &pk) in law.probs().iter().enumerate() {
        if pk == 0.0 {
            continue;
        }
        let mut counts = vec![0usize; values.len()];
        compositions(k, 0, &mut counts, &mut |c| {
            let mut w = pk * multinomial(k, c);
            let mut block = Vec::with_capacity(k);
            for (i, &ci) in c.iter().enumerate() {
                w *= probs[i].powi(ci as i32);
                block.extend(std::iter::repeat_n(values[i], ci));
            }
            if w > 0.0 {
                out.push((block, w));
            }
        });
    }
    out
}

fn compositions(rest: usize, i: usize, counts: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if i + 1 == counts.len() {
        counts[i] = rest;
        visit(counts);
        return;
    }
    for c in 0..=rest {
        counts[i] = c;
        compositions(rest - c, i + 1, counts, visit);
    }
}

fn multinomial(k: usize, counts: &[usize]) -> f64 {
    let mut coef = 1.0;
    let mut left = k;
    for &c in counts {
        for j in 0..c {
            coef *= (left - j) as f64 / (j + 1) as f64;
        }
        left -= c;
    }
    coef
}

/// `P*(event)` (or `E*[F]`) under the configuration's law, conditioned on
/// `Z_n > 0` when the configuration asks for it.
pub fn enumerate_exact(event: &EventSpec, config: &SimConfig) -> Result<f64> {
    let configs = enumerate_configurations(
        &config.offspring,
        &config.displacement,
        config.n,
        OUTCOME_BUDGET,
    )?;
    let gamma = config.gamma_n();
    let mut alive = 0.0;
    let mut hit = 0.0;
    for c in &configs {
        if c.positions.is_empty() {
            continue;
        }
        alive += c.probability;
        let scaled: Vec<f64> = c.positions.iter().map(|s| s / gamma).collect();
        hit += c.probability * event.evaluate(&scaled);
    }
    if config.condition_on_survival {
        if alive == 0.0 {
            return Err(Error::Contract("the tree cannot survive to generation n".into()));
        }
        Ok(hit / alive)
    } else {
        Ok(hit)
    }
}
