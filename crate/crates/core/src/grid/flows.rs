use nalgebra::DMatrix;

use super::case::{BusId, NetworkCase, NetworkIndex, OperatingPoint};
use super::ybus::AdmittanceMatrix;
use super::GridError;

/// One of the four local state variables a branch flow depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateVar {
    Vm(usize),
    Va(usize),
}

/// Analytic first and second derivatives of a branch active-power flow with
/// respect to its four local variables, with the global identity of each
/// slot in `vars`.
#[derive(Debug, Clone)]
pub struct FlowDerivatives {
    pub value: f64,
    pub grad: [f64; 4],
    pub hess: [[f64; 4]; 4],
    pub vars: [StateVar; 4],
}

impl FlowDerivatives {
    /// Scatters the gradient into a dense state vector ordered
    /// [Vm(0..n), Va(0..n)].
    pub fn scatter_grad(&self, n: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), 2 * n);
        for (k, var) in self.vars.iter().enumerate() {
            match *var {
                StateVar::Vm(i) => out[i] += self.grad[k],
                StateVar::Va(i) => out[n + i] += self.grad[k],
            }
        }
    }
}

/// Measuring-end flow of a pi branch:
///   P = g_self * Vm^2 - k * Vm * Vo * (g cos(th) + b sin(th))
/// with th the angle from the measuring end to the other end, (g, b) the
/// series admittance, k the coupling scale and g_self the self conductance
/// seen from the measuring end.
struct EndParams {
    g_self: f64,
    k: f64,
    g: f64,
    b: f64,
}

fn end_params(line: &super::case::Line, from_side: bool) -> EndParams {
    let (g, b) = line.series_admittance();
    let a = line.tap;
    if from_side {
        EndParams {
            g_self: g / (a * a),
            k: 1.0 / a,
            g,
            b,
        }
    } else {
        EndParams {
            g_self: g,
            k: 1.0 / a,
            g,
            b,
        }
    }
}

fn end_flow(p: &EndParams, vm_m: f64, vm_o: f64, th_m: f64, th_o: f64) -> f64 {
    let th = th_m - th_o;
    let a = p.g * th.cos() + p.b * th.sin();
    p.g_self * vm_m * vm_m - p.k * vm_m * vm_o * a
}

fn end_flow_derivatives(
    p: &EndParams,
    vm_m: f64,
    vm_o: f64,
    th_m: f64,
    th_o: f64,
) -> (f64, [f64; 4], [[f64; 4]; 4]) {
    let th = th_m - th_o;
    let (s, c) = th.sin_cos();
    let a = p.g * c + p.b * s;
    let bb = -p.g * s + p.b * c; // dA/dth
    let value = p.g_self * vm_m * vm_m - p.k * vm_m * vm_o * a;
    // Slot order: [Vm_m, Vm_o, Va_m, Va_o].
    let grad = [
        2.0 * p.g_self * vm_m - p.k * vm_o * a,
        -p.k * vm_m * a,
        -p.k * vm_m * vm_o * bb,
        p.k * vm_m * vm_o * bb,
    ];
    let h_mm = 2.0 * p.g_self;
    let h_mo = -p.k * a;
    let h_m_thm = -p.k * vm_o * bb;
    let h_o_thm = -p.k * vm_m * bb;
    let h_thth = p.k * vm_m * vm_o * a; // d2/dth2 with th = th_m - th_o
    let hess = [
        [h_mm, h_mo, h_m_thm, -h_m_thm],
        [h_mo, 0.0, h_o_thm, -h_o_thm],
        [h_m_thm, h_o_thm, h_thth, -h_thth],
        [-h_m_thm, -h_o_thm, -h_thth, h_thth],
    ];
    (value, grad, hess)
}

pub(crate) fn line_flow_indexed(
    case: &NetworkCase,
    index: &NetworkIndex,
    vm: &[f64],
    va: &[f64],
    li: usize,
    from_side: bool,
) -> f64 {
    let line = &case.lines[li];
    let f = index.bus(line.from).expect("validated");
    let t = index.bus(line.to).expect("validated");
    let p = end_params(line, from_side);
    if from_side {
        end_flow(&p, vm[f], vm[t], va[f], va[t])
    } else {
        end_flow(&p, vm[t], vm[f], va[t], va[f])
    }
}

/// Sending-end (from side) active power of a line at a solved point, p.u.
pub fn line_flow(
    case: &NetworkCase,
    point: &OperatingPoint,
    line_id: &str,
) -> Result<f64, GridError> {
    let index = case.index();
    let li = index.line(line_id)?;
    Ok(line_flow_indexed(case, &index, &point.vm, &point.va, li, true))
}

/// Active power leaving `source_bus` into the line, p.u. The source bus
/// must be one of the line endpoints.
pub fn directed_line_flow(
    case: &NetworkCase,
    point: &OperatingPoint,
    line_id: &str,
    source_bus: BusId,
) -> Result<f64, GridError> {
    let index = case.index();
    let li = index.line(line_id)?;
    let line = &case.lines[li];
    if source_bus != line.from && source_bus != line.to {
        return Err(GridError::UnknownBus(source_bus));
    }
    let from_side = source_bus == line.from;
    Ok(line_flow_indexed(case, &index, &point.vm, &point.va, li, from_side))
}

/// Gradient and Hessian of the sending-end flow with respect to the four
/// local state variables.
pub fn line_flow_derivatives(
    case: &NetworkCase,
    point: &OperatingPoint,
    line_id: &str,
) -> Result<FlowDerivatives, GridError> {
    let index = case.index();
    let li = index.line(line_id)?;
    Ok(flow_derivatives_indexed(case, &index, &point.vm, &point.va, li, true))
}

/// As [`line_flow_derivatives`], measured at the `source_bus` end.
pub fn directed_line_flow_derivatives(
    case: &NetworkCase,
    point: &OperatingPoint,
    line_id: &str,
    source_bus: BusId,
) -> Result<FlowDerivatives, GridError> {
    let index = case.index();
    let li = index.line(line_id)?;
    let line = &case.lines[li];
    if source_bus != line.from && source_bus != line.to {
        return Err(GridError::UnknownBus(source_bus));
    }
    let from_side = source_bus == line.from;
    Ok(flow_derivatives_indexed(case, &index, &point.vm, &point.va, li, from_side))
}

pub(crate) fn flow_derivatives_indexed(
    case: &NetworkCase,
    index: &NetworkIndex,
    vm: &[f64],
    va: &[f64],
    li: usize,
    from_side: bool,
) -> FlowDerivatives {
    let line = &case.lines[li];
    let f = index.bus(line.from).expect("validated");
    let t = index.bus(line.to).expect("validated");
    let (m, o) = if from_side { (f, t) } else { (t, f) };
    let p = end_params(line, from_side);
    let (value, grad, hess) = end_flow_derivatives(&p, vm[m], vm[o], va[m], va[o]);
    FlowDerivatives {
        value,
        grad,
        hess,
        vars: [
            StateVar::Vm(m),
            StateVar::Vm(o),
            StateVar::Va(m),
            StateVar::Va(o),
        ],
    }
}

/// Calculated complex power injections at every bus from the network state:
/// P_i = V_i * sum_j V_j (G_ij cos th_ij + B_ij sin th_ij),
/// Q_i = V_i * sum_j V_j (G_ij sin th_ij - B_ij cos th_ij).
pub fn power_injections(ybus: &AdmittanceMatrix, vm: &[f64], va: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = ybus.dim();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        let mut pi = 0.0;
        let mut qi = 0.0;
        for &(j, y) in ybus.row(i) {
            let th = va[i] - va[j];
            let (s, c) = th.sin_cos();
            pi += vm[j] * (y.re * c + y.im * s);
            qi += vm[j] * (y.re * s - y.im * c);
        }
        p[i] = vm[i] * pi;
        q[i] = vm[i] * qi;
    }
    (p, q)
}

/// First derivatives of the calculated bus injections with respect to
/// voltage angles and magnitudes.
pub struct BalanceJacobian {
    n: usize,
    vm: Vec<f64>,
    va: Vec<f64>,
    ybus: AdmittanceMatrix,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl BalanceJacobian {
    pub fn new(ybus: &AdmittanceMatrix, vm: &[f64], va: &[f64]) -> Self {
        let (p, q) = power_injections(ybus, vm, va);
        BalanceJacobian {
            n: ybus.dim(),
            vm: vm.to_vec(),
            va: va.to_vec(),
            ybus: ybus.clone(),
            p,
            q,
        }
    }

    fn entry(&self, i: usize, k: usize) -> (f64, f64) {
        let y = self.ybus.get(i, k);
        let th = self.va[i] - self.va[k];
        let (s, c) = th.sin_cos();
        (y.re * c + y.im * s, y.re * s - y.im * c)
    }

    pub fn dp_dva(&self, i: usize, k: usize) -> f64 {
        if i == k {
            let y = self.ybus.get(i, i);
            -self.q[i] - y.im * self.vm[i] * self.vm[i]
        } else {
            let (_, t) = self.entry(i, k);
            self.vm[i] * self.vm[k] * t
        }
    }

    pub fn dp_dvm(&self, i: usize, k: usize) -> f64 {
        if i == k {
            let y = self.ybus.get(i, i);
            self.p[i] / self.vm[i] + y.re * self.vm[i]
        } else {
            let (a, _) = self.entry(i, k);
            self.vm[i] * a
        }
    }

    pub fn dq_dva(&self, i: usize, k: usize) -> f64 {
        if i == k {
            let y = self.ybus.get(i, i);
            self.p[i] - y.re * self.vm[i] * self.vm[i]
        } else {
            let (a, _) = self.entry(i, k);
            -self.vm[i] * self.vm[k] * a
        }
    }

    pub fn dq_dvm(&self, i: usize, k: usize) -> f64 {
        if i == k {
            let y = self.ybus.get(i, i);
            self.q[i] / self.vm[i] - y.im * self.vm[i]
        } else {
            let (_, t) = self.entry(i, k);
            self.vm[i] * t
        }
    }

    /// Structural neighbors of bus i (including i).
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.ybus.row(i).iter().map(|&(j, _)| j)
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

/// Multiplier-weighted sum of injection Hessians,
/// sum_i (yp_i * d2P_i + yq_i * d2Q_i), in the state ordering
/// [Vm(0..n), Va(0..n)]. Used to assemble Lagrangian curvature without
/// materializing per-bus Hessians.
pub fn weighted_injection_hessian(
    ybus: &AdmittanceMatrix,
    vm: &[f64],
    va: &[f64],
    yp: &[f64],
    yq: &[f64],
) -> DMatrix<f64> {
    let n = ybus.dim();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    let vm_slot = |i: usize| i;
    let va_slot = |i: usize| n + i;
    for i in 0..n {
        for &(j, y) in ybus.row(i) {
            let (g, b) = (y.re, y.im);
            if i == j {
                // Self term: P_i += g * Vi^2, Q_i += -b * Vi^2.
                h[(vm_slot(i), vm_slot(i))] += yp[i] * 2.0 * g + yq[i] * (-2.0 * b);
                continue;
            }
            let th = va[i] - va[j];
            let (s, c) = th.sin_cos();
            let a = g * c + b * s; // cross term coefficient in P_i
            let t = g * s - b * c; // cross term coefficient in Q_i
            // P_i cross term: Vi*Vj*a(th_ij); Q_i cross term: Vi*Vj*t(th_ij).
            // da/dth = -t + ... careful: da/dth = -g s + b c = -(g s - b c) = -t;
            // dt/dth = g c + b s = a.
            let (wp, wq) = (yp[i], yq[i]);
            // Second derivatives of Vi*Vj*a:
            //   d2/dVi dVj = a
            //   d2/dVi dth = Vj * da/dth ; d2/dVj dth = Vi * da/dth
            //   d2/dth2    = Vi*Vj * d2a/dth2 = -Vi*Vj*a
            // with th = th_i - th_j, so dth/dth_i = 1, dth/dth_j = -1.
            let da = -t;
            let dt = a;
            let hp_vv = a;
            let hp_vthi = vm[j] * da;
            let hp_vthj = -vm[j] * da;
            let hp_wthi = vm[i] * da;
            let hp_wthj = -vm[i] * da;
            let hp_thth = -vm[i] * vm[j] * a;
            let hq_vv = t;
            let hq_vthi = vm[j] * dt;
            let hq_vthj = -vm[j] * dt;
            let hq_wthi = vm[i] * dt;
            let hq_wthj = -vm[i] * dt;
            let hq_thth = -vm[i] * vm[j] * t;

            let w_vv = wp * hp_vv + wq * hq_vv;
            h[(vm_slot(i), vm_slot(j))] += w_vv;
            h[(vm_slot(j), vm_slot(i))] += w_vv;

            let w_vthi = wp * hp_vthi + wq * hq_vthi;
            h[(vm_slot(i), va_slot(i))] += w_vthi;
            h[(va_slot(i), vm_slot(i))] += w_vthi;

            let w_vthj = wp * hp_vthj + wq * hq_vthj;
            h[(vm_slot(i), va_slot(j))] += w_vthj;
            h[(va_slot(j), vm_slot(i))] += w_vthj;

            let w_wthi = wp * hp_wthi + wq * hq_wthi;
            h[(vm_slot(j), va_slot(i))] += w_wthi;
            h[(va_slot(i), vm_slot(j))] += w_wthi;

            let w_wthj = wp * hp_wthj + wq * hq_wthj;
            h[(vm_slot(j), va_slot(j))] += w_wthj;
            h[(va_slot(j), vm_slot(j))] += w_wthj;

            let w_thth = wp * hp_thth + wq * hq_thth;
            h[(va_slot(i), va_slot(i))] += w_thth;
            h[(va_slot(j), va_slot(j))] += w_thth;
            h[(va_slot(i), va_slot(j))] -= w_thth;
            h[(va_slot(j), va_slot(i))] -= w_thth;
        }
    }
    h
}
