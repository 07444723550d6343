//! TOML scenario files.
//!
//! ```toml
//! format = "aivsched-scenario"
//! version = 1
//! seed = 7
//! [config]            # generation parameters, echoed verbatim
//! [layout]            # node names and the symmetric transfer-time matrix
//! [[products]]        # name + routing (eligible workstation sets, 0-based)
//! [[jobs]]            # id, product, arrival, due_date, t_draw
//! [[processing_times]]  # product, operation, workstations, times
//! [[breakdowns]]      # workstation + [[start, duration], ...]
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Scenario, ScenarioConfig, ScenarioError};
use crate::model::{Downtime, JobId, JobSpec, Layout, NodeId, OperationSpec, Product, WsId};

pub const FORMAT_NAME: &str = "aivsched-scenario";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ScenarioDoc {
    format: String,
    version: u32,
    seed: u64,
    config: ScenarioConfig,
    layout: LayoutDoc,
    products: Vec<ProductDoc>,
    jobs: Vec<JobDoc>,
    processing_times: Vec<ProcessingDoc>,
    #[serde(default)]
    breakdowns: Vec<BreakdownDoc>,
}

#[derive(Serialize, Deserialize)]
struct LayoutDoc {
    nodes: Vec<String>,
    transfer_times: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ProductDoc {
    name: String,
    routing: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct JobDoc {
    id: usize,
    product: usize,
    arrival: f64,
    due_date: f64,
    t_draw: f64,
}

#[derive(Serialize, Deserialize)]
struct ProcessingDoc {
    product: usize,
    operation: usize,
    workstations: Vec<usize>,
    times: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BreakdownDoc {
    workstation: usize,
    windows: Vec<[f64; 2]>,
}

pub fn scenario_to_string(s: &Scenario) -> Result<String, ScenarioError> {
    let layout = &s.layout;
    let doc = ScenarioDoc {
        format: FORMAT_NAME.to_string(),
        version: FORMAT_VERSION,
        seed: s.seed,
        config: s.config.clone(),
        layout: LayoutDoc {
            nodes: (0..layout.n_nodes()).map(|i| layout.node_name(NodeId(i))).collect(),
            transfer_times: layout.transfer_times.clone(),
        },
        products: s
            .products
            .iter()
            .map(|p| ProductDoc {
                name: p.name.clone(),
                routing: p
                    .operations
                    .iter()
                    .map(|op| op.eligible.iter().map(|w| w.0).collect())
                    .collect(),
            })
            .collect(),
        jobs: s
            .jobs
            .iter()
            .map(|j| JobDoc {
                id: j.id.0,
                product: j.product,
                arrival: j.arrival,
                due_date: j.due_date,
                t_draw: j.t_draw,
            })
            .collect(),
        processing_times: s
            .products
            .iter()
            .enumerate()
            .flat_map(|(p, prod)| {
                prod.operations.iter().enumerate().map(move |(o, op)| ProcessingDoc {
                    product: p,
                    operation: o,
                    workstations: op.eligible.iter().map(|w| w.0).collect(),
                    times: op.times.clone(),
                })
            })
            .collect(),
        breakdowns: s
            .breakdowns
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_empty())
            .map(|(ws, w)| BreakdownDoc {
                workstation: ws,
                windows: w.iter().map(|d| [d.start, d.duration]).collect(),
            })
            .collect(),
    };
    toml::to_string(&doc).map_err(|e| ScenarioError::Parse(e.to_string()))
}

pub fn save_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    let text = scenario_to_string(s)?;
    fs::write(path, text).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Field { field: field.into(), message: message.into() }
}

/// Parses and validates a scenario document. Nothing is returned unless the
/// whole document is consistent.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    if doc.format != FORMAT_NAME {
        return Err(field_err("format", format!("expected {FORMAT_NAME:?}, got {:?}", doc.format)));
    }
    if doc.version != FORMAT_VERSION {
        return Err(field_err("version", format!("unsupported version {}", doc.version)));
    }
    let config = doc.config;
    let m = config.n_workstations;

    let layout = Layout {
        n_workstations: m,
        n_chargers: config.n_chargers,
        transfer_times: doc.layout.transfer_times,
    };
    layout.validate(None).map_err(|e| field_err("layout.transfer_times", e))?;
    if doc.layout.nodes.len() != layout.n_nodes() {
        return Err(field_err("layout.nodes", format!("expected {} names", layout.n_nodes())));
    }

    let mut products: Vec<Product> = doc
        .products
        .iter()
        .enumerate()
        .map(|(p, pd)| {
            if pd.routing.is_empty() {
                return Err(field_err(format!("products[{p}].routing"), "empty routing"));
            }
            let operations = pd
                .routing
                .iter()
                .enumerate()
                .map(|(o, set)| {
                    if set.is_empty() || set.iter().any(|&w| w >= m) {
                        return Err(field_err(
                            format!("products[{p}].routing[{o}]"),
                            "eligible set must be non-empty and reference existing workstations",
                        ));
                    }
                    Ok(OperationSpec {
                        eligible: set.iter().map(|&w| WsId(w)).collect(),
                        times: vec![f64::NAN; set.len()],
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Product { name: pd.name.clone(), operations })
        })
        .collect::<Result<_, _>>()?;

    for (i, pt) in doc.processing_times.iter().enumerate() {
        let f = format!("processing_times[{i}]");
        let op = products
            .get_mut(pt.product)
            .and_then(|p| p.operations.get_mut(pt.operation))
            .ok_or_else(|| field_err(&f, "unknown product/operation"))?;
        let listed: Vec<usize> = op.eligible.iter().map(|w| w.0).collect();
        if pt.workstations != listed || pt.times.len() != listed.len() {
            return Err(field_err(&f, "workstations must match the product routing"));
        }
        if pt.times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(field_err(&f, "processing times must be positive"));
        }
        op.times = pt.times.clone();
    }
    for (p, prod) in products.iter().enumerate() {
        for (o, op) in prod.operations.iter().enumerate() {
            if op.times.iter().any(|t| t.is_nan()) {
                return Err(field_err(
                    "processing_times",
                    format!("missing entry for product {p} operation {o}"),
                ));
            }
        }
    }

    let mut jobs = Vec::with_capacity(doc.jobs.len());
    for (i, jd) in doc.jobs.iter().enumerate() {
        let f = format!("jobs[{i}]");
        if jd.id != i {
            return Err(field_err(format!("{f}.id"), "job ids must be 0..n in order"));
        }
        if jd.product >= products.len() {
            return Err(field_err(format!("{f}.product"), "unknown product"));
        }
        if !(jd.arrival.is_finite() && jd.arrival >= 0.0) {
            return Err(field_err(format!("{f}.arrival"), "must be a non-negative time"));
        }
        if !jd.due_date.is_finite() || !jd.t_draw.is_finite() {
            return Err(field_err(f, "due_date and t_draw must be finite"));
        }
        jobs.push(JobSpec {
            id: JobId(i),
            product: jd.product,
            arrival: jd.arrival,
            due_date: jd.due_date,
            t_draw: jd.t_draw,
        });
    }
    if jobs.is_empty() {
        return Err(field_err("jobs", "scenario has no jobs"));
    }
    for w in jobs.windows(2) {
        if w[1].arrival < w[0].arrival {
            return Err(field_err(format!("jobs[{}].arrival", w[1].id.0), "arrivals must not decrease"));
        }
    }

    let mut breakdowns = vec![Vec::new(); m];
    for (i, bd) in doc.breakdowns.iter().enumerate() {
        let f = format!("breakdowns[{i}]");
        let slot = breakdowns
            .get_mut(bd.workstation)
            .ok_or_else(|| field_err(&f, "unknown workstation"))?;
        if !slot.is_empty() {
            return Err(field_err(&f, "workstation listed twice"));
        }
        for (k, [start, duration]) in bd.windows.iter().copied().enumerate() {
            if !(start.is_finite() && start >= 0.0 && duration.is_finite() && duration > 0.0) {
                return Err(field_err(format!("{f}.windows[{k}]"), "need start >= 0 and duration > 0"));
            }
            slot.push(Downtime { start, duration });
        }
        slot.sort_by(|a, b| a.start.total_cmp(&b.start));
    }

    let scenario = Scenario {
        seed: doc.seed,
        config,
        layout,
        products,
        jobs,
        breakdowns,
    };
    if scenario.config.aiv.count == 0 || scenario.config.aiv.capacity == 0 {
        return Err(field_err("config.aiv", "need at least one vehicle with positive capacity"));
    }
    if scenario.config.aiv.energy.moving.len() <= scenario.config.aiv.capacity {
        return Err(field_err("config.aiv.energy.moving", "needs a rate for every load"));
    }
    Ok(scenario)
}
