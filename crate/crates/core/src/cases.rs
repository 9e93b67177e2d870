//! Bundled network cases: the 39-bus New England system augmented with a
//! wind farm and a storage unit at bus 17, plus small closed-form systems
//! used across the test suites.

use crate::grid::{
    Bus, BusId, BusKind, EssUnit, Generator, Line, NetworkCase, TieLine, WindFarm,
};

fn bus(id: BusId, kind: BusKind, p: f64, q: f64) -> Bus {
    Bus {
        id,
        kind,
        p_load: p / 100.0,
        q_load: q / 100.0,
        v_min: 0.94,
        v_max: 1.08,
        g_shunt: 0.0,
        b_shunt: 0.0,
    }
}

#[allow(clippy::too_many_arguments)]
fn line(from: BusId, to: BusId, r: f64, x: f64, b: f64, tap: f64, limit_mw: f64) -> Line {
    Line {
        id: format!("{from}-{to}"),
        from,
        to,
        resistance: r,
        reactance: x,
        charging: b,
        tap,
        flow_min: -limit_mw / 100.0,
        flow_max: limit_mw / 100.0,
    }
}

#[allow(clippy::too_many_arguments)]
fn gen(
    bus: BusId,
    p_mw: f64,
    v: f64,
    p_max_mw: f64,
    q_min: f64,
    q_max: f64,
    h: f64,
    xd: f64,
    cost_a: f64,
    cost_b: f64,
) -> Generator {
    Generator {
        id: format!("G{bus}"),
        bus,
        p: p_mw / 100.0,
        v_setpoint: v,
        p_min: 0.0,
        p_max: p_max_mw / 100.0,
        q_min: q_min / 100.0,
        q_max: q_max / 100.0,
        ramp_min: -3.0,
        ramp_max: 3.0,
        inertia: h,
        xd_transient: xd,
        damping: 0.0,
        cost_a,
        cost_b,
        cost_c: 0.0,
    }
}

/// 39-bus New England system with a 500 MW wind farm and a 100 MWh / 100 MW
/// storage unit at bus 17. The network is split into a sending area (buses
/// around generators 30, 33-38) and a receiving area (buses around
/// generators 31, 32, 39); the four corridor lines joining them are the
/// monitored tie set.
pub fn ieee39() -> NetworkCase {
    let buses = vec![
        bus(1, BusKind::Pq, 97.6, 44.2),
        bus(2, BusKind::Pq, 0.0, 0.0),
        bus(3, BusKind::Pq, 322.0, 2.4),
        bus(4, BusKind::Pq, 500.0, 184.0),
        bus(5, BusKind::Pq, 0.0, 0.0),
        bus(6, BusKind::Pq, 0.0, 0.0),
        bus(7, BusKind::Pq, 233.8, 84.0),
        bus(8, BusKind::Pq, 522.0, 176.6),
        bus(9, BusKind::Pq, 6.5, -66.6),
        bus(10, BusKind::Pq, 0.0, 0.0),
        bus(11, BusKind::Pq, 0.0, 0.0),
        bus(12, BusKind::Pq, 8.5, 88.0),
        bus(13, BusKind::Pq, 0.0, 0.0),
        bus(14, BusKind::Pq, 0.0, 0.0),
        bus(15, BusKind::Pq, 320.0, 153.0),
        bus(16, BusKind::Pq, 329.0, 32.3),
        bus(17, BusKind::Pq, 0.0, 0.0),
        bus(18, BusKind::Pq, 158.0, 30.0),
        bus(19, BusKind::Pq, 0.0, 0.0),
        bus(20, BusKind::Pq, 680.0, 103.0),
        bus(21, BusKind::Pq, 274.0, 115.0),
        bus(22, BusKind::Pq, 0.0, 0.0),
        bus(23, BusKind::Pq, 247.5, 84.6),
        bus(24, BusKind::Pq, 308.6, -92.2),
        bus(25, BusKind::Pq, 224.0, 47.2),
        bus(26, BusKind::Pq, 139.0, 17.0),
        bus(27, BusKind::Pq, 281.0, 75.5),
        bus(28, BusKind::Pq, 206.0, 27.6),
        bus(29, BusKind::Pq, 283.5, 26.9),
        bus(30, BusKind::Pv, 0.0, 0.0),
        bus(31, BusKind::Slack, 9.2, 4.6),
        bus(32, BusKind::Pv, 0.0, 0.0),
        bus(33, BusKind::Pv, 0.0, 0.0),
        bus(34, BusKind::Pv, 0.0, 0.0),
        bus(35, BusKind::Pv, 0.0, 0.0),
        bus(36, BusKind::Pv, 0.0, 0.0),
        bus(37, BusKind::Pv, 0.0, 0.0),
        bus(38, BusKind::Pv, 0.0, 0.0),
        bus(39, BusKind::Pv, 1104.0, 250.0),
    ];
    let lines = vec![
        line(1, 2, 0.0035, 0.0411, 0.6987, 1.0, 600.0),
        line(1, 39, 0.0010, 0.0250, 0.7500, 1.0, 1000.0),
        line(2, 3, 0.0013, 0.0151, 0.2572, 1.0, 500.0),
        line(2, 25, 0.0070, 0.0086, 0.1460, 1.0, 500.0),
        line(2, 30, 0.0000, 0.0181, 0.0, 1.025, 900.0),
        line(3, 4, 0.0013, 0.0213, 0.2214, 1.0, 500.0),
        line(3, 18, 0.0011, 0.0133, 0.2138, 1.0, 500.0),
        line(4, 5, 0.0008, 0.0128, 0.1342, 1.0, 600.0),
        line(4, 14, 0.0008, 0.0129, 0.1382, 1.0, 500.0),
        line(5, 6, 0.0002, 0.0026, 0.0434, 1.0, 1200.0),
        line(5, 8, 0.0008, 0.0112, 0.1476, 1.0, 900.0),
        line(6, 7, 0.0006, 0.0092, 0.1130, 1.0, 900.0),
        line(6, 11, 0.0007, 0.0082, 0.1389, 1.0, 480.0),
        line(6, 31, 0.0000, 0.0250, 0.0, 1.070, 1800.0),
        line(7, 8, 0.0004, 0.0046, 0.0780, 1.0, 900.0),
        line(8, 9, 0.0023, 0.0363, 0.3804, 1.0, 900.0),
        line(9, 39, 0.0010, 0.0250, 1.2000, 1.0, 900.0),
        line(10, 11, 0.0004, 0.0043, 0.0729, 1.0, 600.0),
        line(10, 13, 0.0004, 0.0043, 0.0729, 1.0, 600.0),
        line(10, 32, 0.0000, 0.0200, 0.0, 1.070, 900.0),
        line(12, 11, 0.0016, 0.0435, 0.0, 1.006, 500.0),
        line(12, 13, 0.0016, 0.0435, 0.0, 1.006, 500.0),
        line(13, 14, 0.0009, 0.0101, 0.1723, 1.0, 600.0),
        line(14, 15, 0.0018, 0.0217, 0.3660, 1.0, 600.0),
        line(15, 16, 0.0009, 0.0094, 0.1710, 1.0, 600.0),
        line(16, 17, 0.0007, 0.0089, 0.1342, 1.0, 600.0),
        line(16, 19, 0.0016, 0.0195, 0.3040, 1.0, 600.0),
        line(16, 21, 0.0008, 0.0135, 0.2548, 1.0, 600.0),
        line(16, 24, 0.0003, 0.0059, 0.0680, 1.0, 600.0),
        line(17, 18, 0.0007, 0.0082, 0.1319, 1.0, 600.0),
        line(17, 27, 0.0013, 0.0173, 0.3216, 1.0, 600.0),
        line(19, 20, 0.0007, 0.0138, 0.0, 1.060, 900.0),
        line(19, 33, 0.0007, 0.0142, 0.0, 1.070, 900.0),
        line(20, 34, 0.0009, 0.0180, 0.0, 1.009, 900.0),
        line(21, 22, 0.0008, 0.0140, 0.2565, 1.0, 900.0),
        line(22, 23, 0.0006, 0.0096, 0.1846, 1.0, 600.0),
        line(22, 35, 0.0000, 0.0143, 0.0, 1.025, 900.0),
        line(23, 24, 0.0022, 0.0350, 0.3610, 1.0, 600.0),
        line(23, 36, 0.0005, 0.0272, 0.0, 1.000, 900.0),
        line(25, 26, 0.0032, 0.0323, 0.5310, 1.0, 600.0),
        line(25, 37, 0.0006, 0.0232, 0.0, 1.025, 900.0),
        line(26, 27, 0.0014, 0.0147, 0.2396, 1.0, 600.0),
        line(26, 28, 0.0043, 0.0474, 0.7802, 1.0, 600.0),
        line(26, 29, 0.0057, 0.0625, 1.0290, 1.0, 600.0),
        line(28, 29, 0.0014, 0.0151, 0.2490, 1.0, 600.0),
        line(29, 38, 0.0008, 0.0156, 0.0, 1.025, 1200.0),
    ];
    // Sending-area machines get the cheaper cost curves so economic dispatch
    // loads the corridor.
    let generators = vec![
        gen(30, 250.0, 1.0475, 1040.0, 140.0, 400.0, 42.0, 0.031, 0.0040, 6.5),
        gen(31, 520.0, 0.9820, 646.0, -100.0, 300.0, 30.3, 0.0697, 0.0100, 15.0),
        gen(32, 650.0, 0.9831, 725.0, 150.0, 300.0, 35.8, 0.0531, 0.0095, 14.0),
        gen(33, 632.0, 0.9972, 652.0, 0.0, 250.0, 28.6, 0.0436, 0.0035, 6.0),
        gen(34, 508.0, 1.0123, 508.0, 0.0, 167.0, 26.0, 0.1320, 0.0050, 7.0),
        gen(35, 650.0, 1.0493, 687.0, -100.0, 300.0, 34.8, 0.0500, 0.0038, 6.2),
        gen(36, 560.0, 1.0635, 580.0, 0.0, 240.0, 26.4, 0.0490, 0.0045, 7.5),
        gen(37, 540.0, 1.0278, 564.0, 0.0, 250.0, 24.3, 0.0570, 0.0042, 6.8),
        gen(38, 830.0, 1.0265, 865.0, -150.0, 300.0, 34.5, 0.0570, 0.0036, 6.4),
        gen(39, 1000.0, 1.0300, 1100.0, -100.0, 300.0, 500.0, 0.0060, 0.0090, 16.0),
    ];
    let wind_farms = vec![WindFarm {
        id: "W17".into(),
        bus: 17,
        rated: 5.0,
        cut_in_speed: 5.2,
        rated_speed: 11.5,
        cut_out_speed: 25.0,
        curtail_cost: 500.0,
        p: 3.0,
    }];
    let ess_units = vec![EssUnit {
        id: "S17".into(),
        bus: 17,
        charge_max: 1.0,
        discharge_max: 1.0,
        energy_min: 0.1,
        energy_max: 1.0,
        energy_initial: 0.5,
        p: 0.0,
    }];
    let tie_lines = vec![
        TieLine {
            line: "1-39".into(),
            source_bus: 1,
        },
        TieLine {
            line: "2-3".into(),
            source_bus: 2,
        },
        TieLine {
            line: "3-18".into(),
            source_bus: 18,
        },
        TieLine {
            line: "15-16".into(),
            source_bus: 16,
        },
    ];
    let source_buses = vec![
        1, 2, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 33, 34, 35, 36, 37, 38,
    ];
    let sink_buses = vec![3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 31, 32, 39];
    let case = NetworkCase {
        name: "ieee39".into(),
        base_mva: 100.0,
        buses,
        lines,
        generators,
        wind_farms,
        ess_units,
        tie_lines,
        source_buses,
        sink_buses,
    };
    case.validate().expect("bundled case is valid");
    case
}

/// Two buses joined by a single lossless reactance x = 0.1 p.u.: the
/// sending-angle solution has the closed form P = (V1*V2/x) * sin(theta).
pub fn two_bus(load_mw: f64) -> NetworkCase {
    let case = NetworkCase {
        name: "two-bus".into(),
        base_mva: 100.0,
        buses: vec![
            Bus {
                id: 1,
                kind: BusKind::Slack,
                p_load: 0.0,
                q_load: 0.0,
                v_min: 0.5,
                v_max: 1.5,
                g_shunt: 0.0,
                b_shunt: 0.0,
            },
            Bus {
                id: 2,
                kind: BusKind::Pq,
                p_load: load_mw / 100.0,
                q_load: 0.0,
                v_min: 0.5,
                v_max: 1.5,
                g_shunt: 0.0,
                b_shunt: 0.0,
            },
        ],
        lines: vec![Line {
            id: "1-2".into(),
            from: 1,
            to: 2,
            resistance: 0.0,
            reactance: 0.1,
            charging: 0.0,
            tap: 1.0,
            flow_min: -20.0,
            flow_max: 20.0,
        }],
        generators: vec![Generator {
            id: "G1".into(),
            bus: 1,
            p: 0.0,
            v_setpoint: 1.0,
            p_min: -20.0,
            p_max: 20.0,
            q_min: -20.0,
            q_max: 20.0,
            ramp_min: -20.0,
            ramp_max: 20.0,
            inertia: 5.0,
            xd_transient: 0.2,
            damping: 0.0,
            cost_a: 0.01,
            cost_b: 10.0,
            cost_c: 0.0,
        }],
        wind_farms: vec![],
        ess_units: vec![],
        tie_lines: vec![],
        source_buses: vec![],
        sink_buses: vec![],
    };
    case.validate().expect("two-bus case is valid");
    case
}

/// Single machine against a near-infinite bus over two parallel lossless
/// lines. A solid short at bus 1 drives the machine's electrical power to
/// zero, which gives the clearing-time experiment a closed-form
/// accelerating phase.
pub fn smib(p_mw: f64) -> NetworkCase {
    let mk_line = |id: &str| Line {
        id: id.into(),
        from: 1,
        to: 2,
        resistance: 0.0,
        reactance: 0.4,
        charging: 0.0,
        tap: 1.0,
        flow_min: -50.0,
        flow_max: 50.0,
    };
    let case = NetworkCase {
        name: "smib".into(),
        base_mva: 100.0,
        buses: vec![
            Bus {
                id: 1,
                kind: BusKind::Pv,
                p_load: 0.0,
                q_load: 0.0,
                v_min: 0.5,
                v_max: 1.5,
                g_shunt: 0.0,
                b_shunt: 0.0,
            },
            Bus {
                id: 2,
                kind: BusKind::Slack,
                p_load: 0.0,
                q_load: 0.0,
                v_min: 0.5,
                v_max: 1.5,
                g_shunt: 0.0,
                b_shunt: 0.0,
            },
        ],
        lines: vec![mk_line("L1"), mk_line("L2")],
        generators: vec![
            Generator {
                id: "G1".into(),
                bus: 1,
                p: p_mw / 100.0,
                v_setpoint: 1.0,
                p_min: 0.0,
                p_max: 50.0,
                q_min: -50.0,
                q_max: 50.0,
                ramp_min: -50.0,
                ramp_max: 50.0,
                inertia: 3.0,
                xd_transient: 0.3,
                damping: 0.0,
                cost_a: 0.01,
                cost_b: 5.0,
                cost_c: 0.0,
            },
            Generator {
                id: "G2".into(),
                bus: 2,
                p: 0.0,
                v_setpoint: 1.0,
                p_min: -100.0,
                p_max: 100.0,
                q_min: -100.0,
                q_max: 100.0,
                ramp_min: -100.0,
                ramp_max: 100.0,
                inertia: 1.0e5,
                xd_transient: 0.01,
                damping: 0.0,
                cost_a: 0.01,
                cost_b: 20.0,
                cost_c: 0.0,
            },
        ],
        wind_farms: vec![],
        ess_units: vec![],
        tie_lines: vec![],
        source_buses: vec![1],
        sink_buses: vec![2],
    };
    case.validate().expect("smib case is valid");
    case
}

/// Two-area toy system for transfer-limit searches: a cheap source machine
/// exports to a loaded sink bus over two parallel tie lines.
pub fn two_area() -> NetworkCase {
    let tie = |id: &str, x: f64| Line {
        id: id.into(),
        from: 1,
        to: 2,
        resistance: 0.005,
        reactance: x,
        charging: 0.02,
        tap: 1.0,
        flow_min: -1.6,
        flow_max: 1.6,
    };
    let case = NetworkCase {
        name: "two-area".into(),
        base_mva: 100.0,
        buses: vec![
            Bus {
                id: 1,
                kind: BusKind::Pv,
                p_load: 0.0,
                q_load: 0.0,
                v_min: 0.9,
                v_max: 1.1,
                g_shunt: 0.0,
                b_shunt: 0.0,
            },
            Bus {
                id: 2,
                kind: BusKind::Slack,
                p_load: 1.0,
                q_load: 0.3,
                v_min: 0.9,
                v_max: 1.1,
                g_shunt: 0.0,
                b_shunt: 0.0,
            },
        ],
        lines: vec![tie("T1", 0.3), tie("T2", 0.3)],
        generators: vec![
            Generator {
                id: "G1".into(),
                bus: 1,
                p: 1.0,
                v_setpoint: 1.02,
                p_min: 0.0,
                p_max: 6.0,
                q_min: -3.0,
                q_max: 3.0,
                ramp_min: -3.0,
                ramp_max: 3.0,
                inertia: 4.0,
                xd_transient: 0.25,
                damping: 0.0,
                cost_a: 0.004,
                cost_b: 6.0,
                cost_c: 0.0,
            },
            Generator {
                id: "G2".into(),
                bus: 2,
                p: 0.0,
                v_setpoint: 1.0,
                p_min: -1.0,
                p_max: 6.0,
                q_min: -3.0,
                q_max: 3.0,
                ramp_min: -3.0,
                ramp_max: 3.0,
                inertia: 8.0,
                xd_transient: 0.15,
                damping: 0.0,
                cost_a: 0.010,
                cost_b: 14.0,
                cost_c: 0.0,
            },
        ],
        wind_farms: vec![],
        ess_units: vec![],
        tie_lines: vec![
            TieLine {
                line: "T1".into(),
                source_bus: 1,
            },
            TieLine {
                line: "T2".into(),
                source_bus: 1,
            },
        ],
        source_buses: vec![1],
        sink_buses: vec![2],
    };
    case.validate().expect("two-area case is valid");
    case
}
