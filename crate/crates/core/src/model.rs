//! Static problem description shared by the scenario generator and the
//! simulator: identifiers, the shop layout, product routings and the vehicle
//! energy model.

use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident, $prefix:literal) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub usize);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0 + 1)
            }
        }
    };
}

id_type!(/// Job (one product instance).
    JobId, "J");
id_type!(/// Workstation, 0-based; displayed 1-based as `WS1`.
    WsId, "WS");
id_type!(/// Vehicle.
    AivId, "A");
id_type!(/// Charging station.
    StationId, "CH");
id_type!(/// Node of the layout graph.
    NodeId, "N");

/// Simulation time in time units.
pub type Time = f64;

/// What a layout node is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Storage,
    Workstation(WsId),
    Charger(StationId),
}

/// Nodes are ordered `storage, WS1..WSm, CH1..CHc`. Transfer times are
/// point-to-point and symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub n_workstations: usize,
    pub n_chargers: usize,
    pub transfer_times: Vec<Vec<Time>>,
}

impl Layout {
    pub fn n_nodes(&self) -> usize {
        1 + self.n_workstations + self.n_chargers
    }

    pub fn storage(&self) -> NodeId {
        NodeId(0)
    }

    pub fn ws_node(&self, ws: WsId) -> NodeId {
        NodeId(1 + ws.0)
    }

    pub fn charger_node(&self, st: StationId) -> NodeId {
        NodeId(1 + self.n_workstations + st.0)
    }

    pub fn kind(&self, node: NodeId) -> NodeKind {
        let i = node.0;
        if i == 0 {
            NodeKind::Storage
        } else if i <= self.n_workstations {
            NodeKind::Workstation(WsId(i - 1))
        } else {
            NodeKind::Charger(StationId(i - 1 - self.n_workstations))
        }
    }

    pub fn node_name(&self, node: NodeId) -> String {
        match self.kind(node) {
            NodeKind::Storage => "S".to_string(),
            NodeKind::Workstation(ws) => ws.to_string(),
            NodeKind::Charger(st) => st.to_string(),
        }
    }

    #[inline]
    pub fn distance(&self, a: NodeId, b: NodeId) -> Time {
        self.transfer_times[a.0][b.0]
    }

    pub fn max_distance(&self) -> Time {
        self.transfer_times
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }

    /// Checks shape, symmetry, zero diagonal and (optionally) the range of
    /// off-diagonal entries.
    pub fn validate(&self, range: Option<(f64, f64)>) -> Result<(), String> {
        let n = self.n_nodes();
        if self.transfer_times.len() != n {
            return Err(format!("layout has {} rows, expected {n}", self.transfer_times.len()));
        }
        for (i, row) in self.transfer_times.iter().enumerate() {
            if row.len() != n {
                return Err(format!("layout row {i} has {} entries, expected {n}", row.len()));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() {
                    return Err(format!("layout entry ({i},{j}) is not finite"));
                }
                if i == j {
                    if d != 0.0 {
                        return Err(format!("layout diagonal ({i},{i}) is {d}, expected 0"));
                    }
                    continue;
                }
                if d != self.transfer_times[j][i] {
                    return Err(format!("layout is not symmetric at ({i},{j})"));
                }
                if d <= 0.0 {
                    return Err(format!("layout entry ({i},{j}) must be positive"));
                }
                if let Some((lo, hi)) = range {
                    if d < lo || d > hi {
                        return Err(format!("layout entry ({i},{j}) = {d} outside [{lo}, {hi}]"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One routing step: the eligible workstations and the processing time on
/// each (parallel vectors, same order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationSpec {
    pub eligible: Vec<WsId>,
    pub times: Vec<Time>,
}

impl OperationSpec {
    pub fn time_on(&self, ws: WsId) -> Option<Time> {
        self.eligible
            .iter()
            .position(|&w| w == ws)
            .map(|i| self.times[i])
    }

    pub fn is_eligible(&self, ws: WsId) -> bool {
        self.eligible.contains(&ws)
    }

    pub fn mean_time(&self) -> Time {
        crate::formulas::mean_processing_time(&self.times)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Product {
    pub name: String,
    pub operations: Vec<OperationSpec>,
}

impl Product {
    /// Sum of mean processing times of operations `from..`.
    pub fn remaining_mean_time(&self, from: usize) -> Time {
        self.operations[from.min(self.operations.len())..]
            .iter()
            .map(OperationSpec::mean_time)
            .sum()
    }
}

/// A job as generated: its product, arrival and due date, plus the due-date
/// coefficient that was drawn for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub id: JobId,
    pub product: usize,
    pub arrival: Time,
    pub due_date: Time,
    pub t_draw: f64,
}

/// One workstation unavailability window `[start, start + duration)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Downtime {
    pub start: Time,
    pub duration: Time,
}

/// Battery consumption in percent per time unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRates {
    pub not_moving: f64,
    /// Indexed by the number of products on board.
    pub moving: Vec<f64>,
}

impl Default for EnergyRates {
    fn default() -> Self {
        Self {
            not_moving: 0.01,
            moving: vec![0.02, 0.05, 0.10],
        }
    }
}

/// Vehicle fleet and charging configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AivConfig {
    pub count: usize,
    pub capacity: usize,
    /// Charge when strictly below this battery percentage after a tour.
    pub charge_threshold: f64,
    pub recharge_duration: Time,
    pub initial_battery: f64,
    pub energy: EnergyRates,
}

impl Default for AivConfig {
    fn default() -> Self {
        Self {
            count: 2,
            capacity: 2,
            charge_threshold: 40.0,
            recharge_duration: 30.0,
            initial_battery: 100.0,
            energy: EnergyRates::default(),
        }
    }
}
