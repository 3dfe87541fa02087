//! Table-based samplers used as independent references for the key race.
//!
//! Both need the normalized probabilities up front, and any weight change means
//! rebuilding the table. Guide tables and exact table look-up are not provided.

use std::collections::HashSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    Linear,
    Bisection,
}

/// Normalized weights with cumulative and alias arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    labels: Vec<String>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    alias_index: Vec<usize>,
    alias_cutoff: Vec<f64>,
}

impl WeightTable {
    /// Builds both tables in O(n) using small/large work lists
    /// (cells with mass `<= 1/n` count as small).
    pub fn build<S: AsRef<str>>(labels: &[S], weights: &[f64]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::WeightTable("no outcomes".into()));
        }
        if labels.len() != weights.len() {
            return Err(Error::WeightTable(format!(
                "{} labels but {} weights",
                labels.len(),
                weights.len()
            )));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for (label, &w) in labels.iter().zip(weights) {
            let label = label.as_ref();
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::WeightTable(format!("weight {w} of '{label}' is not positive")));
            }
            if !seen.insert(label) {
                return Err(Error::WeightTable(format!("duplicate label '{label}'")));
            }
        }

        let n = weights.len();
        let total: f64 = weights.iter().sum();

        let mut cumulative = Vec::with_capacity(n);
        let mut running = 0.0;
        for &w in weights {
            running += w;
            cumulative.push(running / total);
        }
        cumulative[n - 1] = 1.0;

        // Scaled so the average cell holds exactly 1.
        let mut scaled: Vec<f64> = weights.iter().map(|&w| w * n as f64 / total).collect();
        let mut alias_index: Vec<usize> = (0..n).collect();
        let mut alias_cutoff = vec![1.0; n];
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] <= 1.0);

        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias_cutoff[s] = scaled[s];
            alias_index[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] <= 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers hold mass 1 up to rounding.
        for i in small.into_iter().chain(large) {
            alias_cutoff[i] = 1.0;
            alias_index[i] = i;
        }

        Ok(WeightTable {
            labels: labels.iter().map(|l| l.as_ref().to_owned()).collect(),
            weights: weights.to_vec(),
            cumulative,
            alias_index,
            alias_cutoff,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn alias_index(&self) -> &[usize] {
        &self.alias_index
    }

    pub fn alias_cutoff(&self) -> &[f64] {
        &self.alias_cutoff
    }

    /// Outcome index drawn by the alias method from two uniforms.
    pub fn alias_index_of(&self, u1: f64, u2: f64) -> usize {
        let n = self.labels.len();
        let cell = ((u1 * n as f64) as usize).min(n - 1);
        if u2 < self.alias_cutoff[cell] {
            cell
        } else {
            self.alias_index[cell]
        }
    }

    /// Smallest index whose cumulative probability exceeds `u`.
    pub fn inverse_index_of(&self, u: f64, strategy: SearchStrategy) -> usize {
        let last = self.cumulative.len() - 1;
        match strategy {
            SearchStrategy::Linear => self.cumulative.iter().position(|&c| c > u).unwrap_or(last),
            SearchStrategy::Bisection => self.cumulative.partition_point(|&c| c <= u).min(last),
        }
    }

    /// Probability mass each outcome receives from the alias arrays.
    pub fn alias_masses(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut mass: Vec<f64> = self.alias_cutoff.iter().map(|c| c / n).collect();
        for (j, &a) in self.alias_index.iter().enumerate() {
            mass[a] += (1.0 - self.alias_cutoff[j]) / n;
        }
        mass
    }
}

pub fn build_weight_table<S: AsRef<str>>(labels: &[S], weights: &[f64]) -> Result<WeightTable> {
    WeightTable::build(labels, weights)
}

pub fn sample_alias(table: &WeightTable, u1: f64, u2: f64) -> &str {
    &table.labels[table.alias_index_of(u1, u2)]
}

pub fn sample_inverse(table: &WeightTable, u: f64, strategy: SearchStrategy) -> &str {
    &table.labels[table.inverse_index_of(u, strategy)]
}
