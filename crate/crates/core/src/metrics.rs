//! Run metrics and the collective fitness score.
//!
//! Fitness is `w_people * people_pct - w_energy * energy_pct - w_trip * trip_pct`.
//! The default weights (1.0, 0.4, 0.6) are not given anywhere as constants;
//! they are the least-squares fit to the reference result rows in
//! [`REFERENCE_ROWS`], which [`derive_fitness_weights`] recomputes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessWeights {
    pub w_people: f64,
    pub w_energy: f64,
    pub w_trip: f64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        Self {
            w_people: 1.0,
            w_energy: 0.4,
            w_trip: 0.6,
        }
    }
}

/// The three percentages of a run, before weighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPercentages {
    pub energy_pct: f64,
    pub people_pct: f64,
    pub trip_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationMetrics {
    pub energy_pct: f64,
    pub people_pct: f64,
    pub trip_pct: f64,
    pub fitness: f64,
}

impl SimulationMetrics {
    pub fn from_percentages(m: MetricPercentages, weights: &FitnessWeights) -> Self {
        Self {
            energy_pct: m.energy_pct,
            people_pct: m.people_pct,
            trip_pct: m.trip_pct,
            fitness: compute_fitness(&m, weights),
        }
    }

    pub fn percentages(&self) -> MetricPercentages {
        MetricPercentages {
            energy_pct: self.energy_pct,
            people_pct: self.people_pct,
            trip_pct: self.trip_pct,
        }
    }
}

/// Totals accumulated over a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RawTotals {
    /// Sum of lamp levels over every pole and tick.
    pub light_sum: f64,
    /// Sum over people of ticks spent between their start and arrival (or the end of the run).
    pub active_ticks: u64,
    pub finished: usize,
    pub n_people: usize,
    pub n_poles: usize,
    pub max_ticks: u32,
}

pub fn compute_metrics(raw: &RawTotals) -> MetricPercentages {
    let ticks = f64::from(raw.max_ticks);
    let energy_pct = 100.0 * raw.light_sum / (raw.n_poles as f64 * ticks);
    let (people_pct, trip_pct) = if raw.n_people == 0 {
        (100.0, 0.0)
    } else {
        let n = raw.n_people as f64;
        (
            100.0 * raw.finished as f64 / n,
            100.0 * raw.active_ticks as f64 / (n * ticks),
        )
    };
    MetricPercentages {
        energy_pct,
        people_pct,
        trip_pct,
    }
}

pub fn compute_fitness(m: &MetricPercentages, w: &FitnessWeights) -> f64 {
    w.w_people * m.people_pct - w.w_energy * m.energy_pct - w.w_trip * m.trip_pct
}

/// A published (energy, people, trip, fitness) result row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub energy: f64,
    pub people: f64,
    pub trip: f64,
    pub fitness: f64,
}

/// Reference results for the GPT iterations, the best neuroevolved network
/// and the best human-written controller on the small scenario (first five)
/// and the expanded scenario (last five).
pub const REFERENCE_ROWS: [(&str, ResultRow); 10] = [
    ("scenario1/gpt-iteration-1", row(4.03, 66.66, 59.25, 29.49)),
    ("scenario1/gpt-iteration-2", row(15.02, 100.0, 54.62, 61.2)),
    ("scenario1/gpt-iteration-3", row(11.92, 100.0, 54.62, 62.44)),
    ("scenario1/best-neuroevolution", row(8.1, 100.0, 62.03, 59.53)),
    ("scenario1/best-participant", row(9.46, 100.0, 55.55, 62.88)),
    ("scenario2/gpt-iteration-1", row(2.08, 66.66, 48.51, 36.72)),
    ("scenario2/gpt-iteration-2", row(11.29, 100.0, 41.10, 70.81)),
    ("scenario2/gpt-iteration-3", row(9.76, 100.0, 41.10, 71.42)),
    ("scenario2/best-neuroevolution", row(8.46, 100.0, 46.29, 68.83)),
    ("scenario2/best-participant", row(50.52, 100.0, 38.14, 56.9)),
];

const fn row(energy: f64, people: f64, trip: f64, fitness: f64) -> ResultRow {
    ResultRow {
        energy,
        people,
        trip,
        fitness,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFit {
    pub weights: FitnessWeights,
    pub max_residual: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("degenerate system: {0}")]
    DegenerateSystem(String),
}

/// Least-squares fit of `fitness ~ w_p*people - w_e*energy - w_t*trip`.
pub fn derive_fitness_weights(rows: &[ResultRow]) -> Result<WeightFit, FitError> {
    if rows.len() < 3 {
        return Err(FitError::DegenerateSystem(format!(
            "need at least 3 rows, got {}",
            rows.len()
        )));
    }
    let design = DMatrix::from_fn(rows.len(), 3, |i, j| match j {
        0 => rows[i].people,
        1 => -rows[i].energy,
        _ => -rows[i].trip,
    });
    let target = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.fitness));

    let svd = design.clone().svd(true, true);
    let largest = svd.singular_values.max();
    let smallest = svd.singular_values.min();
    if !(largest > 0.0) || smallest <= largest * 1e-10 {
        return Err(FitError::DegenerateSystem(
            "rows are not linearly independent".into(),
        ));
    }
    let solution = svd
        .solve(&target, largest * 1e-12)
        .map_err(|e| FitError::DegenerateSystem(e.to_string()))?;
    let residuals = &design * &solution - &target;
    Ok(WeightFit {
        weights: FitnessWeights {
            w_people: solution[0],
            w_energy: solution[1],
            w_trip: solution[2],
        },
        max_residual: residuals.amax(),
    })
}
