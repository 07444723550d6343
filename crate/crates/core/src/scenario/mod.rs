//! Problem instances: configuration, seeded generation and the on-disk
//! scenario format.

mod config;
mod generate;
mod io;

pub use config::{BreakdownConfig, DueDateConfig, ScenarioConfig, TABLE1_ROUTINGS};
pub use generate::generate_scenario;
pub use io::{load_scenario, parse_scenario, save_scenario, scenario_to_string, FORMAT_NAME, FORMAT_VERSION};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{AivConfig, Downtime, JobSpec, Layout, Product, Time};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("n_jobs = {n_jobs} is not divisible by the number of products ({n_products})")]
    NotDivisible { n_jobs: usize, n_products: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid scenario field {field}: {message}")]
    Field { field: String, message: String },
    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A complete, fully materialised problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub config: ScenarioConfig,
    pub layout: Layout,
    pub products: Vec<Product>,
    pub jobs: Vec<JobSpec>,
    /// Unavailability windows per workstation, sorted by start.
    pub breakdowns: Vec<Vec<Downtime>>,
}

impl Scenario {
    pub fn n_jobs(&self) -> usize {
        self.jobs.len()
    }

    pub fn n_workstations(&self) -> usize {
        self.layout.n_workstations
    }

    pub fn n_aivs(&self) -> usize {
        self.config.aiv.count
    }

    pub fn aiv(&self) -> &AivConfig {
        &self.config.aiv
    }

    pub fn product_of(&self, job: &JobSpec) -> &Product {
        &self.products[job.product]
    }

    /// Time normaliser used by observations: expected arrival span plus all
    /// jobs' mean work content.
    pub fn horizon_estimate(&self) -> Time {
        let work: Time = self
            .jobs
            .iter()
            .map(|j| self.products[j.product].remaining_mean_time(0))
            .sum();
        self.n_jobs() as f64 * self.config.interarrival_mean + work
    }

    /// SHA-256 of the canonical serialisation; equal hashes mean identical
    /// inputs for paired comparisons.
    pub fn content_hash(&self) -> String {
        let text = scenario_to_string(self).expect("scenario serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
