//! Dense symmetric indefinite factorization P A P^T = L D L^T with
//! Bunch-Kaufman partial pivoting (1x1 and 2x2 pivots), plus solves and
//! exact inertia. Operates on the lower triangle.

use nalgebra::DMatrix;

const ALPHA: f64 = 0.6403882032022076; // (1 + sqrt(17)) / 8

#[derive(Debug, Clone)]
pub struct SymIndefFactor {
    /// L below the diagonal (unit diagonal implied), D on the diagonal and
    /// first subdiagonal (for 2x2 pivots).
    f: DMatrix<f64>,
    /// Pivot record per column: Pivot1(swap row) or the first column of a
    /// 2x2 pivot with its swap row.
    pivots: Vec<Pivot>,
    n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pivot {
    One { swap: usize },
    TwoFirst { swap: usize },
    TwoSecond,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

pub fn factor_sym_indef(a: &DMatrix<f64>) -> SymIndefFactor {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut f = a.clone_owned();
    let mut pivots = Vec::with_capacity(n);
    let mut k = 0;
    while k < n {
        // Column max below the diagonal.
        let mut lambda = 0.0;
        let mut r = k;
        for i in k + 1..n {
            if f[(i, k)].abs() > lambda {
                lambda = f[(i, k)].abs();
                r = i;
            }
        }
        let akk = f[(k, k)].abs();
        let mut use_two = false;
        let mut swap = k;
        if lambda > 0.0 && akk < ALPHA * lambda {
            // Scan row/column r for its largest off-diagonal magnitude.
            let mut sigma = 0.0f64;
            for j in k..r {
                sigma = sigma.max(f[(r, j)].abs());
            }
            for i in r + 1..n {
                sigma = sigma.max(f[(i, r)].abs());
            }
            if akk * sigma >= ALPHA * lambda * lambda {
                // 1x1 with the original diagonal.
            } else if f[(r, r)].abs() >= ALPHA * sigma {
                swap = r; // 1x1 after bringing r to the front
            } else {
                use_two = true;
                swap = r; // 2x2 pivot on columns (k, k+1) after swapping r into k+1
            }
        }

        if !use_two {
            if swap != k {
                swap_sym(&mut f, k, swap);
            }
            pivots.push(Pivot::One { swap });
            let d = f[(k, k)];
            if d != 0.0 {
                for i in k + 1..n {
                    f[(i, k)] /= d;
                }
                // Trailing update A22 -= l d l^T.
                for j in k + 1..n {
                    let ljk = f[(j, k)];
                    if ljk != 0.0 {
                        for i in j..n {
                            f[(i, j)] -= f[(i, k)] * ljk * d;
                        }
                    }
                }
            }
            k += 1;
        } else {
            if swap != k + 1 {
                swap_sym(&mut f, k + 1, swap);
            }
            pivots.push(Pivot::TwoFirst { swap });
            pivots.push(Pivot::TwoSecond);
            // D = [[a, b], [b, c]] with b stored at (k+1, k).
            let a11 = f[(k, k)];
            let b = f[(k + 1, k)];
            let c = f[(k + 1, k + 1)];
            let det = a11 * c - b * b;
            if det != 0.0 {
                // L rows solve [l1 l2] D = [w1 w2].
                for i in k + 2..n {
                    let w1 = f[(i, k)];
                    let w2 = f[(i, k + 1)];
                    let l1 = (c * w1 - b * w2) / det;
                    let l2 = (a11 * w2 - b * w1) / det;
                    f[(i, k)] = l1;
                    f[(i, k + 1)] = l2;
                }
                for j in k + 2..n {
                    // Row j of W D^-1 is already in f; reconstruct w for the
                    // update: A22 -= L [w1 w2]^T with w = D l.
                    let l1 = f[(j, k)];
                    let l2 = f[(j, k + 1)];
                    let w1 = a11 * l1 + b * l2;
                    let w2 = b * l1 + c * l2;
                    for i in j..n {
                        f[(i, j)] -= f[(i, k)] * w1 + f[(i, k + 1)] * w2;
                    }
                }
            }
            k += 2;
        }
    }
    SymIndefFactor { f, pivots, n }
}

fn swap_sym(f: &mut DMatrix<f64>, a: usize, b: usize) {
    debug_assert!(a < b);
    let n = f.nrows();
    for j in 0..a {
        f.swap((a, j), (b, j));
    }
    // Lower-triangle swap between rows a..b: (i, a) <-> (b, i).
    for i in a + 1..b {
        f.swap((i, a), (b, i));
    }
    for i in b + 1..n {
        f.swap((i, a), (i, b));
    }
    f.swap((a, a), (b, b));
}

impl SymIndefFactor {
    /// Solves in place for multiple right-hand sides.
    pub fn solve_in_place(&self, b: &mut DMatrix<f64>) {
        let n = self.n;
        let nrhs = b.ncols();
        // Forward: apply permutations and L^{-1}.
        let mut k = 0;
        while k < n {
            match self.pivots[k] {
                Pivot::One { swap } => {
                    if swap != k {
                        for c in 0..nrhs {
                            b.swap((k, c), (swap, c));
                        }
                    }
                    for c in 0..nrhs {
                        let bk = b[(k, c)];
                        if bk != 0.0 {
                            for i in k + 1..n {
                                b[(i, c)] -= self.f[(i, k)] * bk;
                            }
                        }
                    }
                    k += 1;
                }
                Pivot::TwoFirst { swap } => {
                    if swap != k + 1 {
                        for c in 0..nrhs {
                            b.swap((k + 1, c), (swap, c));
                        }
                    }
                    for c in 0..nrhs {
                        let b1 = b[(k, c)];
                        let b2 = b[(k + 1, c)];
                        for i in k + 2..n {
                            b[(i, c)] -= self.f[(i, k)] * b1 + self.f[(i, k + 1)] * b2;
                        }
                    }
                    k += 2;
                }
                Pivot::TwoSecond => unreachable!("pivot bookkeeping"),
            }
        }
        // Diagonal solve.
        let mut k = 0;
        while k < n {
            match self.pivots[k] {
                Pivot::One { .. } => {
                    let d = self.f[(k, k)];
                    for c in 0..nrhs {
                        b[(k, c)] = if d != 0.0 { b[(k, c)] / d } else { 0.0 };
                    }
                    k += 1;
                }
                Pivot::TwoFirst { .. } => {
                    let a11 = self.f[(k, k)];
                    let bb = self.f[(k + 1, k)];
                    let c22 = self.f[(k + 1, k + 1)];
                    let det = a11 * c22 - bb * bb;
                    for c in 0..nrhs {
                        let r1 = b[(k, c)];
                        let r2 = b[(k + 1, c)];
                        if det != 0.0 {
                            b[(k, c)] = (c22 * r1 - bb * r2) / det;
                            b[(k + 1, c)] = (a11 * r2 - bb * r1) / det;
                        } else {
                            b[(k, c)] = 0.0;
                            b[(k + 1, c)] = 0.0;
                        }
                    }
                    k += 2;
                }
                Pivot::TwoSecond => unreachable!("pivot bookkeeping"),
            }
        }
        // Backward: L^{-T} and permutations in reverse.
        let mut k = n;
        while k > 0 {
            k -= 1;
            match self.pivots[k] {
                Pivot::One { swap } => {
                    for c in 0..nrhs {
                        let mut s = b[(k, c)];
                        for i in k + 1..n {
                            s -= self.f[(i, k)] * b[(i, c)];
                        }
                        b[(k, c)] = s;
                    }
                    if swap != k {
                        for c in 0..nrhs {
                            b.swap((k, c), (swap, c));
                        }
                    }
                }
                Pivot::TwoSecond => {
                    let first = k - 1;
                    let Pivot::TwoFirst { swap } = self.pivots[first] else {
                        unreachable!("pivot bookkeeping")
                    };
                    for c in 0..nrhs {
                        let mut s1 = b[(first, c)];
                        let mut s2 = b[(k, c)];
                        for i in k + 1..n {
                            s1 -= self.f[(i, first)] * b[(i, c)];
                            s2 -= self.f[(i, k)] * b[(i, c)];
                        }
                        b[(first, c)] = s1;
                        b[(k, c)] = s2;
                    }
                    if swap != k {
                        for c in 0..nrhs {
                            b.swap((k, c), (swap, c));
                        }
                    }
                    k -= 1;
                }
                Pivot::TwoFirst { .. } => unreachable!("pivot bookkeeping"),
            }
        }
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone_owned();
        self.solve_in_place(&mut x);
        x
    }

    /// Signs of D's eigenvalues. A 2x2 pivot with negative determinant
    /// carries one of each sign.
    pub fn inertia(&self) -> Inertia {
        let mut inertia = Inertia {
            positive: 0,
            negative: 0,
            zero: 0,
        };
        let mut k = 0;
        let scale = (0..self.n)
            .map(|i| self.f[(i, i)].abs())
            .fold(0.0f64, f64::max)
            .max(1.0);
        let tiny = 1e-14 * scale;
        while k < self.n {
            match self.pivots[k] {
                Pivot::One { .. } => {
                    let d = self.f[(k, k)];
                    if d > tiny {
                        inertia.positive += 1;
                    } else if d < -tiny {
                        inertia.negative += 1;
                    } else {
                        inertia.zero += 1;
                    }
                    k += 1;
                }
                Pivot::TwoFirst { .. } => {
                    let a = self.f[(k, k)];
                    let b = self.f[(k + 1, k)];
                    let c = self.f[(k + 1, k + 1)];
                    let det = a * c - b * b;
                    if det < -tiny * tiny {
                        inertia.positive += 1;
                        inertia.negative += 1;
                    } else if det > tiny * tiny {
                        if a + c > 0.0 {
                            inertia.positive += 2;
                        } else {
                            inertia.negative += 2;
                        }
                    } else {
                        inertia.zero += 1;
                        if a + c > tiny {
                            inertia.positive += 1;
                        } else if a + c < -tiny {
                            inertia.negative += 1;
                        } else {
                            inertia.zero += 1;
                        }
                    }
                    k += 2;
                }
                Pivot::TwoSecond => unreachable!("pivot bookkeeping"),
            }
        }
        inertia
    }

    pub fn is_singular(&self) -> bool {
        self.inertia().zero > 0
    }
}
