//! Parallel evaluation of a full scenario sweep.

use rayon::prelude::*;
use whim_core::engine::{ProgressEvent, SweepPlan, SweepReport};
use whim_core::{Dataset, EngineConfig};

use crate::error::Result;

/// Evaluates every scenario on the current rayon pool. Scenario seeds do not
/// depend on scheduling, so the report equals the sequential one.
pub fn run_sweep(dataset: &Dataset, config: &EngineConfig, progress: &(dyn Fn(&ProgressEvent) + Sync)) -> Result<SweepReport> {
    let plan = SweepPlan::new(dataset, config)?;
    Ok(run_plan(dataset, &plan, progress))
}

pub fn run_plan(dataset: &Dataset, plan: &SweepPlan, progress: &(dyn Fn(&ProgressEvent) + Sync)) -> SweepReport {
    let outcomes = (0..plan.len())
        .into_par_iter()
        .map(|i| {
            let outcome = plan.evaluate(dataset, i);
            progress(&plan.progress_event(i, &outcome));
            outcome
        })
        .collect();
    plan.assemble(outcomes)
}
