//! Parallel execution on a dedicated rayon pool.
//!
//! Work items are independent and results are collected in input order,
//! so outputs never depend on the number of threads.

use fpp_core::experiment::{aggregate, run_replica, ExperimentResult, ReplicaOutcome};
use fpp_core::field::{sample_weight, Provenance};
use fpp_core::{DistributionSpec, EdgeField, LatticeBox};
use rayon::prelude::*;

use crate::config::ExperimentSettings;
use crate::error::{LabError, LabResult};

#[derive(Debug)]
pub struct Runner {
    pool: rayon::ThreadPool,
}

/// Aggregated result plus the replica outcomes it came from, sorted by
/// `(n, replica)`.
#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub result: ExperimentResult,
    pub outcomes: Vec<ReplicaOutcome>,
}

impl Runner {
    /// `threads = 0` picks rayon's default.
    pub fn new(threads: usize) -> LabResult<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| LabError::Runtime(format!("thread pool: {e}")))?;
        Ok(Runner { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Ordered parallel map.
    pub fn map<T, U, F>(&self, items: Vec<T>, f: F) -> Vec<U>
    where
        T: Send,
        U: Send,
        F: Fn(T) -> U + Sync + Send,
    {
        self.pool.install(|| items.into_par_iter().map(f).collect())
    }

    /// Same weights as [`fpp_core::sample_edge_field`], computed in parallel.
    pub fn sample_field(&self, bx: &LatticeBox, spec: &DistributionSpec, seed: u64) -> LabResult<EdgeField> {
        spec.validate()?;
        let slots: Vec<usize> = (0..bx.edge_slot_count()).collect();
        let weights = self.map(slots, |slot| bx.edge_at_slot(slot).map_or(f64::NAN, |e| sample_weight(spec, seed, &e)));
        Ok(EdgeField::from_slot_weights(bx.clone(), weights, Some(Provenance { seed, spec: spec.clone() }))?)
    }

    /// Validates, runs every `(n, replica)` pair and aggregates.
    pub fn run_experiment(&self, settings: &ExperimentSettings) -> LabResult<ExperimentRun> {
        let cfg = &settings.config;
        cfg.validate(&settings.pc)?;
        let tasks: Vec<(u64, u64)> =
            cfg.ns.iter().flat_map(|&n| (0..cfg.replicas).map(move |r| (n, r))).collect();
        let mut outcomes = self
            .map(tasks, |(n, r)| run_replica(cfg, n, r))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        outcomes.sort_by_key(|o| (o.n, o.replica));
        let result = aggregate(cfg, &outcomes)?;
        Ok(ExperimentRun { result, outcomes })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fpp_core::experiment::{run_sequential, ExperimentConfig, ExperimentKind};
    use fpp_core::PcTable;

    #[test]
    fn parallel_sampling_matches_sequential() {
        let bx = LatticeBox::new(&[-3, -2, 0], &[2, 2, 3]).unwrap();
        let spec = DistributionSpec::exponential(1.0);
        let a = Runner::new(3).unwrap().sample_field(&bx, &spec, 11).unwrap();
        let b = fpp_core::sample_edge_field(&bx, &spec, 11).unwrap();
        for (e, w) in b.iter() {
            assert_eq!(w.to_bits(), a.weight(&e).unwrap().to_bits());
        }
    }

    #[test]
    fn parallel_experiment_matches_sequential() {
        let cfg = ExperimentConfig::new(ExperimentKind::Prop31, DistributionSpec::exponential(1.0), vec![4, 6], 12, 3)
            .with_m(1.0);
        let settings = ExperimentSettings { config: cfg.clone(), pc: PcTable::default() };
        let par = Runner::new(4).unwrap().run_experiment(&settings).unwrap();
        assert_eq!(par.result, run_sequential(&cfg, &PcTable::default()).unwrap());
        assert_eq!(par.outcomes.len(), 24);
    }
}
