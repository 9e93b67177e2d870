//! The data collector: a fixed-order feature vector read off a solved
//! operating point. Ordering is keyed by bus id (and unit id within a
//! bus), never by file order, and is part of the serialized model
//! contract.

use crate::grid::{NetworkCase, OperatingPoint};

/// Indices of case equipment in canonical feature order.
pub struct FeatureLayout {
    /// (kind, equipment index) per unit: generators, wind farms, storage.
    pub units: Vec<(UnitKind, usize)>,
    pub gen_order: Vec<usize>,
    /// Bus positions sorted by bus id.
    pub bus_order: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    Generator,
    Wind,
    Ess,
}

impl FeatureLayout {
    pub fn new(case: &NetworkCase) -> Self {
        let mut units: Vec<(UnitKind, usize, (u32, String))> = Vec::new();
        for (i, g) in case.generators.iter().enumerate() {
            units.push((UnitKind::Generator, i, (g.bus, g.id.clone())));
        }
        for (i, w) in case.wind_farms.iter().enumerate() {
            units.push((UnitKind::Wind, i, (w.bus, w.id.clone())));
        }
        for (i, e) in case.ess_units.iter().enumerate() {
            units.push((UnitKind::Ess, i, (e.bus, e.id.clone())));
        }
        units.sort_by(|a, b| a.2.cmp(&b.2));

        let mut gen_order: Vec<usize> = (0..case.generators.len()).collect();
        gen_order.sort_by(|&a, &b| {
            (case.generators[a].bus, &case.generators[a].id)
                .cmp(&(case.generators[b].bus, &case.generators[b].id))
        });

        let mut bus_order: Vec<usize> = (0..case.buses.len()).collect();
        bus_order.sort_by_key(|&i| case.buses[i].id);

        FeatureLayout {
            units: units.into_iter().map(|(k, i, _)| (k, i)).collect(),
            gen_order,
            bus_order,
        }
    }

    pub fn dimension(&self) -> usize {
        2 * self.units.len() + self.gen_order.len() + 3 * self.bus_order.len()
    }
}

/// Stable feature labels in extraction order.
pub fn feature_names(case: &NetworkCase) -> Vec<String> {
    let layout = FeatureLayout::new(case);
    let unit_id = |kind: UnitKind, i: usize| -> &str {
        match kind {
            UnitKind::Generator => &case.generators[i].id,
            UnitKind::Wind => &case.wind_farms[i].id,
            UnitKind::Ess => &case.ess_units[i].id,
        }
    };
    let mut names = Vec::with_capacity(layout.dimension());
    for &(kind, i) in &layout.units {
        names.push(format!("P:{}", unit_id(kind, i)));
    }
    for &(kind, i) in &layout.units {
        names.push(format!("Q:{}", unit_id(kind, i)));
    }
    for &g in &layout.gen_order {
        names.push(format!("V:{}", case.generators[g].id));
    }
    for &b in &layout.bus_order {
        names.push(format!("PL:{}", case.buses[b].id));
    }
    for &b in &layout.bus_order {
        names.push(format!("QL:{}", case.buses[b].id));
    }
    for &b in &layout.bus_order {
        names.push(format!("VB:{}", case.buses[b].id));
    }
    names
}

/// Concatenates unit injections, generator-bus voltages, per-bus loads and
/// per-bus voltage magnitudes from a solved point, all p.u.
pub fn extract_features(case: &NetworkCase, point: &OperatingPoint) -> Vec<f64> {
    let layout = FeatureLayout::new(case);
    let index = case.index();
    let mut u = Vec::with_capacity(layout.dimension());
    for &(kind, i) in &layout.units {
        u.push(match kind {
            UnitKind::Generator => point.gen_p[i],
            UnitKind::Wind => point.wind_p[i],
            UnitKind::Ess => point.ess_p[i],
        });
    }
    for &(kind, i) in &layout.units {
        u.push(match kind {
            UnitKind::Generator => point.gen_q[i],
            // Converter-interfaced devices run at unity power factor.
            UnitKind::Wind | UnitKind::Ess => 0.0,
        });
    }
    for &g in &layout.gen_order {
        let b = index.bus(case.generators[g].bus).expect("validated");
        u.push(point.vm[b]);
    }
    for &b in &layout.bus_order {
        u.push(case.buses[b].p_load);
    }
    for &b in &layout.bus_order {
        u.push(case.buses[b].q_load);
    }
    for &b in &layout.bus_order {
        u.push(point.vm[b]);
    }
    u
}
