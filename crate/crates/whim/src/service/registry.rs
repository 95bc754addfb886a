//! In-memory dataset and job tables.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use whim_core::engine::ProgressEvent;
use whim_core::seed::splitmix64;
use whim_core::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum JobState {
    Pending,
    Running { completed: usize, total: usize },
    Done { result: serde_json::Value },
    Failed { code: String, message: String },
}

impl JobState {
    pub fn is_terminal(&self) -> bool {
        matches!(self, JobState::Done { .. } | JobState::Failed { .. })
    }
}

/// A background job. State only moves forward:
/// pending, running, then done or failed.
#[derive(Debug)]
pub struct Job {
    pub id: String,
    pub kind: &'static str,
    state: Mutex<JobState>,
    events: Mutex<Vec<ProgressEvent>>,
}

impl Job {
    fn new(id: String, kind: &'static str) -> Self {
        Self {
            id,
            kind,
            state: Mutex::new(JobState::Pending),
            events: Mutex::new(Vec::new()),
        }
    }

    pub fn state(&self) -> JobState {
        self.state.lock().expect("job lock").clone()
    }

    pub fn start(&self, total: usize) {
        let mut s = self.state.lock().expect("job lock");
        if *s == JobState::Pending {
            *s = JobState::Running { completed: 0, total };
        }
    }

    pub fn record(&self, event: &ProgressEvent) {
        self.events.lock().expect("job lock").push(event.clone());
        if let JobState::Running { completed, .. } = &mut *self.state.lock().expect("job lock") {
            *completed += 1;
        }
    }

    pub fn finish(&self, outcome: JobState) {
        let mut s = self.state.lock().expect("job lock");
        if !s.is_terminal() {
            *s = outcome;
        }
    }

    /// Events from index `from` on.
    pub fn events_from(&self, from: usize) -> Vec<ProgressEvent> {
        let e = self.events.lock().expect("job lock");
        e.get(from..).map(<[_]>::to_vec).unwrap_or_default()
    }
}

#[derive(Debug)]
pub struct Registry {
    datasets: RwLock<HashMap<String, Arc<Dataset>>>,
    jobs: RwLock<HashMap<String, Arc<Job>>>,
    counter: AtomicU64,
    salt: u64,
}

impl Default for Registry {
    fn default() -> Self {
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64);
        Self {
            datasets: RwLock::default(),
            jobs: RwLock::default(),
            counter: AtomicU64::new(0),
            salt: splitmix64(nanos ^ u64::from(std::process::id())),
        }
    }
}

impl Registry {
    /// Opaque id, unique within this process.
    fn next_id(&self, prefix: &str) -> String {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        format!("{prefix}_{:016x}{n:x}", splitmix64(self.salt ^ n))
    }

    pub fn insert_dataset(&self, dataset: Dataset) -> String {
        let id = self.next_id("ds");
        self.datasets.write().expect("registry lock").insert(id.clone(), Arc::new(dataset));
        id
    }

    pub fn dataset(&self, id: &str) -> Option<Arc<Dataset>> {
        self.datasets.read().expect("registry lock").get(id).cloned()
    }

    pub fn remove_dataset(&self, id: &str) -> bool {
        self.datasets.write().expect("registry lock").remove(id).is_some()
    }

    pub fn create_job(&self, kind: &'static str) -> Arc<Job> {
        let job = Arc::new(Job::new(self.next_id("job"), kind));
        self.jobs.write().expect("registry lock").insert(job.id.clone(), job.clone());
        job
    }

    pub fn job(&self, id: &str) -> Option<Arc<Job>> {
        self.jobs.read().expect("registry lock").get(id).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use whim_core::engine::ScenarioStatus;

    #[test]
    fn ids_are_unique() {
        let r = Registry::default();
        let a = r.create_job("x").id.clone();
        let b = r.create_job("x").id.clone();
        assert_ne!(a, b);
        assert!(r.job(&a).is_some() && r.job("job_nope").is_none());
    }

    #[test]
    fn state_is_monotone() {
        let job = Job::new("j".into(), "x");
        job.finish(JobState::Failed {
            code: "c".into(),
            message: "m".into(),
        });
        job.start(3);
        job.finish(JobState::Done {
            result: serde_json::Value::Null,
        });
        assert!(matches!(job.state(), JobState::Failed { .. }));

        let job = Job::new("k".into(), "x");
        job.start(2);
        let ev = ProgressEvent {
            index: 0,
            total: 2,
            column: "c".into(),
            value: "v".into(),
            status: ScenarioStatus::Done { impact: 0.1 },
        };
        job.record(&ev);
        assert_eq!(job.state(), JobState::Running { completed: 1, total: 2 });
        assert_eq!(job.events_from(0).len(), 1);
        assert!(job.events_from(5).is_empty());
    }
}
