//! JSON case schema. File quantities are in MW / MVAr / MWh on the
//! declared MVA base; branch impedances stay per-unit. Arrays are sorted
//! by id on load so in-memory ordering never depends on file order.

use serde::{Deserialize, Serialize};

use super::case::*;
use super::GridError;

#[derive(Serialize, Deserialize)]
struct CaseFile {
    name: String,
    base_mva: f64,
    buses: Vec<BusRow>,
    lines: Vec<LineRow>,
    generators: Vec<GenRow>,
    #[serde(default)]
    wind_farms: Vec<WindRow>,
    #[serde(default)]
    ess_units: Vec<EssRow>,
    #[serde(default)]
    tie_lines: Vec<TieRow>,
    #[serde(default)]
    source_buses: Vec<BusId>,
    #[serde(default)]
    sink_buses: Vec<BusId>,
}

#[derive(Serialize, Deserialize)]
struct BusRow {
    id: BusId,
    kind: String,
    #[serde(default)]
    load_mw: f64,
    #[serde(default)]
    load_mvar: f64,
    #[serde(default = "default_v_min")]
    v_min: f64,
    #[serde(default = "default_v_max")]
    v_max: f64,
    #[serde(default)]
    shunt_g_mw: f64,
    #[serde(default)]
    shunt_b_mvar: f64,
}

fn default_v_min() -> f64 {
    0.9
}
fn default_v_max() -> f64 {
    1.1
}
fn default_tap() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
struct LineRow {
    id: String,
    from: BusId,
    to: BusId,
    r: f64,
    x: f64,
    #[serde(default)]
    b: f64,
    #[serde(default = "default_tap")]
    tap: f64,
    limit_mw: f64,
}

#[derive(Serialize, Deserialize)]
struct GenRow {
    id: String,
    bus: BusId,
    p_mw: f64,
    v_setpoint: f64,
    p_min_mw: f64,
    p_max_mw: f64,
    q_min_mvar: f64,
    q_max_mvar: f64,
    ramp_mw: f64,
    inertia_h: f64,
    xd_transient: f64,
    #[serde(default)]
    damping: f64,
    cost_a: f64,
    cost_b: f64,
    cost_c: f64,
}

#[derive(Serialize, Deserialize)]
struct WindRow {
    id: String,
    bus: BusId,
    rated_mw: f64,
    cut_in_speed: f64,
    rated_speed: f64,
    cut_out_speed: f64,
    curtail_cost_per_mwh: f64,
    #[serde(default)]
    p_mw: f64,
}

#[derive(Serialize, Deserialize)]
struct EssRow {
    id: String,
    bus: BusId,
    charge_max_mw: f64,
    discharge_max_mw: f64,
    energy_min_mwh: f64,
    energy_max_mwh: f64,
    energy_initial_mwh: f64,
    #[serde(default)]
    p_mw: f64,
}

#[derive(Serialize, Deserialize)]
struct TieRow {
    line: String,
    source_bus: BusId,
}

pub fn case_from_json(text: &str) -> Result<NetworkCase, GridError> {
    let mut f: CaseFile = serde_json::from_str(text).map_err(|e| GridError::Io(e.to_string()))?;
    if f.base_mva <= 0.0 {
        return Err(GridError::InvalidCase("base_mva must be positive".into()));
    }
    f.buses.sort_by_key(|b| b.id);
    f.lines.sort_by(|a, b| a.id.cmp(&b.id));
    f.generators.sort_by(|a, b| a.id.cmp(&b.id));
    f.wind_farms.sort_by(|a, b| a.id.cmp(&b.id));
    f.ess_units.sort_by(|a, b| a.id.cmp(&b.id));
    let s = f.base_mva;
    let case = NetworkCase {
        name: f.name,
        base_mva: s,
        buses: f
            .buses
            .into_iter()
            .map(|b| {
                let kind = match b.kind.as_str() {
                    "slack" => Ok(BusKind::Slack),
                    "pv" => Ok(BusKind::Pv),
                    "pq" => Ok(BusKind::Pq),
                    other => Err(GridError::InvalidCase(format!(
                        "bus {}: unknown kind {other:?}",
                        b.id
                    ))),
                }?;
                Ok(Bus {
                    id: b.id,
                    kind,
                    p_load: b.load_mw / s,
                    q_load: b.load_mvar / s,
                    v_min: b.v_min,
                    v_max: b.v_max,
                    g_shunt: b.shunt_g_mw / s,
                    b_shunt: b.shunt_b_mvar / s,
                })
            })
            .collect::<Result<_, GridError>>()?,
        lines: f
            .lines
            .into_iter()
            .map(|l| Line {
                id: l.id,
                from: l.from,
                to: l.to,
                resistance: l.r,
                reactance: l.x,
                charging: l.b,
                tap: l.tap,
                flow_min: -l.limit_mw / s,
                flow_max: l.limit_mw / s,
            })
            .collect(),
        generators: f
            .generators
            .into_iter()
            .map(|g| Generator {
                id: g.id,
                bus: g.bus,
                p: g.p_mw / s,
                v_setpoint: g.v_setpoint,
                p_min: g.p_min_mw / s,
                p_max: g.p_max_mw / s,
                q_min: g.q_min_mvar / s,
                q_max: g.q_max_mvar / s,
                ramp_min: -g.ramp_mw / s,
                ramp_max: g.ramp_mw / s,
                inertia: g.inertia_h,
                xd_transient: g.xd_transient,
                damping: g.damping,
                cost_a: g.cost_a,
                cost_b: g.cost_b,
                cost_c: g.cost_c,
            })
            .collect(),
        wind_farms: f
            .wind_farms
            .into_iter()
            .map(|w| WindFarm {
                id: w.id,
                bus: w.bus,
                rated: w.rated_mw / s,
                cut_in_speed: w.cut_in_speed,
                rated_speed: w.rated_speed,
                cut_out_speed: w.cut_out_speed,
                curtail_cost: w.curtail_cost_per_mwh,
                p: w.p_mw / s,
            })
            .collect(),
        ess_units: f
            .ess_units
            .into_iter()
            .map(|e| EssUnit {
                id: e.id,
                bus: e.bus,
                charge_max: e.charge_max_mw / s,
                discharge_max: e.discharge_max_mw / s,
                energy_min: e.energy_min_mwh / s,
                energy_max: e.energy_max_mwh / s,
                energy_initial: e.energy_initial_mwh / s,
                p: e.p_mw / s,
            })
            .collect(),
        tie_lines: f
            .tie_lines
            .into_iter()
            .map(|t| TieLine {
                line: t.line,
                source_bus: t.source_bus,
            })
            .collect(),
        source_buses: f.source_buses,
        sink_buses: f.sink_buses,
    };
    case.validate()?;
    Ok(case)
}

pub fn case_to_json(case: &NetworkCase) -> String {
    let s = case.base_mva;
    let f = CaseFile {
        name: case.name.clone(),
        base_mva: s,
        buses: case
            .buses
            .iter()
            .map(|b| BusRow {
                id: b.id,
                kind: match b.kind {
                    BusKind::Slack => "slack",
                    BusKind::Pv => "pv",
                    BusKind::Pq => "pq",
                }
                .to_string(),
                load_mw: b.p_load * s,
                load_mvar: b.q_load * s,
                v_min: b.v_min,
                v_max: b.v_max,
                shunt_g_mw: b.g_shunt * s,
                shunt_b_mvar: b.b_shunt * s,
            })
            .collect(),
        lines: case
            .lines
            .iter()
            .map(|l| LineRow {
                id: l.id.clone(),
                from: l.from,
                to: l.to,
                r: l.resistance,
                x: l.reactance,
                b: l.charging,
                tap: l.tap,
                limit_mw: l.flow_max * s,
            })
            .collect(),
        generators: case
            .generators
            .iter()
            .map(|g| GenRow {
                id: g.id.clone(),
                bus: g.bus,
                p_mw: g.p * s,
                v_setpoint: g.v_setpoint,
                p_min_mw: g.p_min * s,
                p_max_mw: g.p_max * s,
                q_min_mvar: g.q_min * s,
                q_max_mvar: g.q_max * s,
                ramp_mw: g.ramp_max * s,
                inertia_h: g.inertia,
                xd_transient: g.xd_transient,
                damping: g.damping,
                cost_a: g.cost_a,
                cost_b: g.cost_b,
                cost_c: g.cost_c,
            })
            .collect(),
        wind_farms: case
            .wind_farms
            .iter()
            .map(|w| WindRow {
                id: w.id.clone(),
                bus: w.bus,
                rated_mw: w.rated * s,
                cut_in_speed: w.cut_in_speed,
                rated_speed: w.rated_speed,
                cut_out_speed: w.cut_out_speed,
                curtail_cost_per_mwh: w.curtail_cost,
                p_mw: w.p * s,
            })
            .collect(),
        ess_units: case
            .ess_units
            .iter()
            .map(|e| EssRow {
                id: e.id.clone(),
                bus: e.bus,
                charge_max_mw: e.charge_max * s,
                discharge_max_mw: e.discharge_max * s,
                energy_min_mwh: e.energy_min * s,
                energy_max_mwh: e.energy_max * s,
                energy_initial_mwh: e.energy_initial * s,
                p_mw: e.p * s,
            })
            .collect(),
        tie_lines: case
            .tie_lines
            .iter()
            .map(|t| TieRow {
                line: t.line.clone(),
                source_bus: t.source_bus,
            })
            .collect(),
        source_buses: case.source_buses.clone(),
        sink_buses: case.sink_buses.clone(),
    };
    serde_json::to_string_pretty(&f).expect("case serialization cannot fail")
}
