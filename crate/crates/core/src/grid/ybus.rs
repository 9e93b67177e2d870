use num_complex::Complex64;

use super::case::{NetworkCase, NetworkIndex};
use super::GridError;

/// Sparse symmetric nodal admittance matrix stored as per-row adjacency.
#[derive(Debug, Clone)]
pub struct AdmittanceMatrix {
    n: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl AdmittanceMatrix {
    pub fn zeros(n: usize) -> Self {
        AdmittanceMatrix {
            n,
            rows: vec![Vec::new(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, i: usize, j: usize, y: Complex64) {
        debug_assert!(i < self.n && j < self.n);
        let row = &mut self.rows[i];
        match row.iter_mut().find(|(c, _)| *c == j) {
            Some((_, v)) => *v += y,
            None => {
                row.push((j, y));
                row.sort_unstable_by_key(|(c, _)| *c);
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i]
            .iter()
            .find(|(c, _)| *c == j)
            .map(|(_, v)| *v)
            .unwrap_or_default()
    }

    pub fn row(&self, i: usize) -> &[(usize, Complex64)] {
        &self.rows[i]
    }

    pub fn dense(&self) -> nalgebra::DMatrix<Complex64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, y) in row {
                m[(i, j)] = y;
            }
        }
        m
    }

    /// y = Y * v
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, y)| y * v[j]).sum())
            .collect()
    }
}

/// Stamps one pi-model branch into the matrix. `skip` lets topology
/// variants drop a branch without rebuilding the case.
fn stamp_branch(y: &mut AdmittanceMatrix, from: usize, to: usize, line: &super::case::Line) {
    let (g, b) = line.series_admittance();
    let ys = Complex64::new(g, b);
    let ysh = Complex64::new(0.0, line.charging / 2.0);
    let a = line.tap;
    y.add(from, from, (ys + ysh) / (a * a));
    y.add(to, to, ys + ysh);
    y.add(from, to, -ys / a);
    y.add(to, from, -ys / a);
}

/// Assembles the bus admittance matrix from branch and shunt data.
pub fn build_admittance(case: &NetworkCase) -> Result<AdmittanceMatrix, GridError> {
    case.validate()?;
    let index = case.index();
    Ok(build_admittance_indexed(case, &index, &[]))
}

/// As [`build_admittance`] for a pre-validated case, with the listed line
/// positions left out of the matrix.
pub(crate) fn build_admittance_indexed(
    case: &NetworkCase,
    index: &NetworkIndex,
    skip_lines: &[usize],
) -> AdmittanceMatrix {
    let n = case.buses.len();
    let mut y = AdmittanceMatrix::zeros(n);
    for (li, line) in case.lines.iter().enumerate() {
        if skip_lines.contains(&li) {
            continue;
        }
        let f = index.bus(line.from).expect("validated");
        let t = index.bus(line.to).expect("validated");
        stamp_branch(&mut y, f, t, line);
    }
    for (i, bus) in case.buses.iter().enumerate() {
        if bus.g_shunt != 0.0 || bus.b_shunt != 0.0 {
            y.add(i, i, Complex64::new(bus.g_shunt, bus.b_shunt));
        }
    }
    y
}
