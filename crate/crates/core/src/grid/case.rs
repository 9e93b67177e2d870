use std::collections::{BTreeMap, HashMap};

use super::GridError;

pub type BusId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

/// Network bus. Loads and shunts are per-unit on the system base.
#[derive(Debug, Clone)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    pub p_load: f64,
    pub q_load: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub g_shunt: f64,
    pub b_shunt: f64,
}

/// Transmission branch (pi model). Impedances are per-unit on the system
/// base; `tap` is the off-nominal ratio on the `from` side (1.0 = none).
#[derive(Debug, Clone)]
pub struct Line {
    pub id: String,
    pub from: BusId,
    pub to: BusId,
    pub resistance: f64,
    pub reactance: f64,
    pub charging: f64,
    pub tap: f64,
    /// Active-power transfer limits for the from-side flow, p.u.
    pub flow_min: f64,
    pub flow_max: f64,
}

impl Line {
    /// Series admittance g + jb.
    pub fn series_admittance(&self) -> (f64, f64) {
        let d = self.resistance * self.resistance + self.reactance * self.reactance;
        (self.resistance / d, -self.reactance / d)
    }
}

/// Synchronous generator. `inertia` is H in seconds on the system base;
/// cost coefficients act on megawatts so dollar figures stay readable.
#[derive(Debug, Clone)]
pub struct Generator {
    pub id: String,
    pub bus: BusId,
    /// Base-case active setpoint, p.u.
    pub p: f64,
    pub v_setpoint: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    /// Per-period ramp bounds, p.u. (`ramp_min` <= 0 <= `ramp_max`).
    pub ramp_min: f64,
    pub ramp_max: f64,
    pub inertia: f64,
    pub xd_transient: f64,
    pub damping: f64,
    /// Quadratic cost a*P^2 + b*P + c with P in MW.
    pub cost_a: f64,
    pub cost_b: f64,
    pub cost_c: f64,
}

impl Generator {
    pub fn cost(&self, p_pu: f64, base_mva: f64) -> f64 {
        let p = p_pu * base_mva;
        self.cost_a * p * p + self.cost_b * p + self.cost_c
    }
}

/// Wind farm with a piecewise power curve. `curtail_cost` is $ per MWh of
/// curtailed energy.
#[derive(Debug, Clone)]
pub struct WindFarm {
    pub id: String,
    pub bus: BusId,
    pub rated: f64,
    pub cut_in_speed: f64,
    pub rated_speed: f64,
    pub cut_out_speed: f64,
    pub curtail_cost: f64,
    /// Base-case injection, p.u.
    pub p: f64,
}

impl WindFarm {
    /// Available power (p.u.) at the given wind speed (m/s): zero below
    /// cut-in and above cut-out, cubic ramp between cut-in and rated.
    pub fn power_at_speed(&self, speed: f64) -> f64 {
        if speed < self.cut_in_speed || speed >= self.cut_out_speed {
            0.0
        } else if speed >= self.rated_speed {
            self.rated
        } else {
            let num = speed.powi(3) - self.cut_in_speed.powi(3);
            let den = self.rated_speed.powi(3) - self.cut_in_speed.powi(3);
            self.rated * num / den
        }
    }
}

/// Energy storage unit; discharge is positive injection. Energies are in
/// p.u.-hours on the system base.
#[derive(Debug, Clone)]
pub struct EssUnit {
    pub id: String,
    pub bus: BusId,
    pub charge_max: f64,
    pub discharge_max: f64,
    pub energy_min: f64,
    pub energy_max: f64,
    pub energy_initial: f64,
    /// Base-case injection, p.u.
    pub p: f64,
}

/// Monitored inter-area corridor line. Transfer is measured at the
/// `source_bus` end of the referenced line.
#[derive(Debug, Clone)]
pub struct TieLine {
    pub line: String,
    pub source_bus: BusId,
}

/// Static grid description: buses, branches, generators, wind farms,
/// storage units, the monitored corridor set and the source/sink split.
#[derive(Debug, Clone)]
pub struct NetworkCase {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub wind_farms: Vec<WindFarm>,
    pub ess_units: Vec<EssUnit>,
    pub tie_lines: Vec<TieLine>,
    pub source_buses: Vec<BusId>,
    pub sink_buses: Vec<BusId>,
}

impl NetworkCase {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn index(&self) -> NetworkIndex {
        NetworkIndex::new(self)
    }

    pub fn from_json(text: &str) -> Result<Self, GridError> {
        super::schema::case_from_json(text)
    }

    pub fn to_json(&self) -> String {
        super::schema::case_to_json(self)
    }

    /// Checks structural invariants: bus references, exactly one slack,
    /// ordered limit pairs, positive inertias, nonnegative quadratic cost.
    pub fn validate(&self) -> Result<(), GridError> {
        let err = |m: String| Err(GridError::InvalidCase(m));
        if self.buses.is_empty() {
            return err("no buses".into());
        }
        let mut ids = BTreeMap::new();
        for b in &self.buses {
            if ids.insert(b.id, ()).is_some() {
                return err(format!("duplicate bus id {}", b.id));
            }
            if b.v_min > b.v_max {
                return err(format!("bus {}: v_min > v_max", b.id));
            }
        }
        let n_slack = self
            .buses
            .iter()
            .filter(|b| b.kind == BusKind::Slack)
            .count();
        if n_slack != 1 {
            return err(format!("expected exactly one slack bus, found {n_slack}"));
        }
        let mut line_ids = HashMap::new();
        for l in &self.lines {
            for end in [l.from, l.to] {
                if !ids.contains_key(&end) {
                    return Err(GridError::UnknownBus(end));
                }
            }
            if l.from == l.to {
                return err(format!("line {} connects bus {} to itself", l.id, l.from));
            }
            if line_ids.insert(l.id.clone(), (l.from, l.to)).is_some() {
                return Err(GridError::DuplicateLine {
                    id: l.id.clone(),
                    from: l.from,
                    to: l.to,
                });
            }
            if l.flow_min > l.flow_max {
                return err(format!("line {}: flow_min > flow_max", l.id));
            }
            if l.reactance == 0.0 && l.resistance == 0.0 {
                return err(format!("line {}: zero impedance", l.id));
            }
        }
        for g in &self.generators {
            if !ids.contains_key(&g.bus) {
                return Err(GridError::UnknownBus(g.bus));
            }
            if g.p_min > g.p_max || g.q_min > g.q_max || g.ramp_min > g.ramp_max {
                return err(format!("generator {}: inverted limit pair", g.id));
            }
            if g.inertia <= 0.0 {
                return err(format!("generator {}: inertia must be positive", g.id));
            }
            if g.cost_a < 0.0 {
                return err(format!("generator {}: negative quadratic cost", g.id));
            }
            if g.xd_transient <= 0.0 {
                return err(format!("generator {}: transient reactance must be positive", g.id));
            }
        }
        for w in &self.wind_farms {
            if !ids.contains_key(&w.bus) {
                return Err(GridError::UnknownBus(w.bus));
            }
            if w.rated < 0.0 {
                return err(format!("wind farm {}: negative rating", w.id));
            }
        }
        for e in &self.ess_units {
            if !ids.contains_key(&e.bus) {
                return Err(GridError::UnknownBus(e.bus));
            }
            if e.energy_min > e.energy_max {
                return err(format!("ess {}: energy_min > energy_max", e.id));
            }
        }
        for t in &self.tie_lines {
            let Some(&(f, to)) = line_ids.get(&t.line) else {
                return Err(GridError::UnknownLine(t.line.clone()));
            };
            if t.source_bus != f && t.source_bus != to {
                return err(format!(
                    "tie line {}: source bus {} is not an endpoint",
                    t.line, t.source_bus
                ));
            }
        }
        if !self.source_buses.is_empty() || !self.sink_buses.is_empty() {
            let mut seen = BTreeMap::new();
            for &b in self.source_buses.iter().chain(&self.sink_buses) {
                if !ids.contains_key(&b) {
                    return Err(GridError::UnknownBus(b));
                }
                if seen.insert(b, ()).is_some() {
                    return err(format!("bus {b} assigned to both areas"));
                }
            }
            if seen.len() != self.buses.len() {
                return err("area partition does not cover all buses".into());
            }
        }
        Ok(())
    }
}

/// Positional lookups over a case: bus id -> vector index, line id -> index,
/// and per-bus attached equipment.
#[derive(Debug, Clone)]
pub struct NetworkIndex {
    bus_pos: HashMap<BusId, usize>,
    line_pos: HashMap<String, usize>,
    pub slack: usize,
    /// Generator indices attached to each bus position.
    pub gens_at_bus: Vec<Vec<usize>>,
    pub wind_at_bus: Vec<Vec<usize>>,
    pub ess_at_bus: Vec<Vec<usize>>,
}

impl NetworkIndex {
    pub fn new(case: &NetworkCase) -> Self {
        let bus_pos: HashMap<BusId, usize> =
            case.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        let line_pos = case
            .lines
            .iter()
            .enumerate()
            .map(|(i, l)| (l.id.clone(), i))
            .collect();
        let slack = case
            .buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated case has a slack bus");
        let n = case.buses.len();
        let mut gens_at_bus = vec![Vec::new(); n];
        for (i, g) in case.generators.iter().enumerate() {
            gens_at_bus[bus_pos[&g.bus]].push(i);
        }
        let mut wind_at_bus = vec![Vec::new(); n];
        for (i, w) in case.wind_farms.iter().enumerate() {
            wind_at_bus[bus_pos[&w.bus]].push(i);
        }
        let mut ess_at_bus = vec![Vec::new(); n];
        for (i, e) in case.ess_units.iter().enumerate() {
            ess_at_bus[bus_pos[&e.bus]].push(i);
        }
        NetworkIndex {
            bus_pos,
            line_pos,
            slack,
            gens_at_bus,
            wind_at_bus,
            ess_at_bus,
        }
    }

    pub fn bus(&self, id: BusId) -> Result<usize, GridError> {
        self.bus_pos.get(&id).copied().ok_or(GridError::UnknownBus(id))
    }

    pub fn line(&self, id: &str) -> Result<usize, GridError> {
        self.line_pos
            .get(id)
            .copied()
            .ok_or_else(|| GridError::UnknownLine(id.to_string()))
    }
}

/// A solved steady state aligned with the case's bus/equipment ordering.
/// Voltages in p.u., angles in radians, flows at the from side.
#[derive(Debug, Clone)]
pub struct OperatingPoint {
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    pub gen_p: Vec<f64>,
    pub gen_q: Vec<f64>,
    pub wind_p: Vec<f64>,
    pub ess_p: Vec<f64>,
    pub ess_e: Vec<f64>,
    pub line_flow: Vec<f64>,
}

impl OperatingPoint {
    /// Flat start: unit voltage everywhere, setpoints from the case.
    pub fn flat(case: &NetworkCase) -> Self {
        OperatingPoint {
            vm: vec![1.0; case.buses.len()],
            va: vec![0.0; case.buses.len()],
            gen_p: case.generators.iter().map(|g| g.p).collect(),
            gen_q: vec![0.0; case.generators.len()],
            wind_p: case.wind_farms.iter().map(|w| w.p).collect(),
            ess_p: case.ess_units.iter().map(|e| e.p).collect(),
            ess_e: case.ess_units.iter().map(|e| e.energy_initial).collect(),
            line_flow: vec![0.0; case.lines.len()],
        }
    }

    /// Net scheduled complex injection at every bus: generation plus device
    /// injections minus load.
    pub fn bus_injections(&self, case: &NetworkCase, index: &NetworkIndex) -> (Vec<f64>, Vec<f64>) {
        let n = case.buses.len();
        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        for (i, b) in case.buses.iter().enumerate() {
            p[i] -= b.p_load;
            q[i] -= b.q_load;
        }
        for (gi, g) in case.generators.iter().enumerate() {
            let i = index.bus(g.bus).expect("validated");
            p[i] += self.gen_p[gi];
            q[i] += self.gen_q[gi];
        }
        for (wi, w) in case.wind_farms.iter().enumerate() {
            let i = index.bus(w.bus).expect("validated");
            p[i] += self.wind_p[wi];
        }
        for (ei, e) in case.ess_units.iter().enumerate() {
            let i = index.bus(e.bus).expect("validated");
            p[i] += self.ess_p[ei];
        }
        (p, q)
    }
}
