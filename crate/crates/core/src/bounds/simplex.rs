//! Dense two-phase simplex with Bland's rule.
//!
//! Exact on [`Rational`](crate::Rational); on floats the same code runs with
//! the scalar's negligibility tolerance.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// `opt c·x` subject to `A_eq x = b_eq`, `A_le x <= b_le`, `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram<T> {
    pub num_vars: usize,
    pub eq: Vec<(Vec<T>, T)>,
    pub le: Vec<(Vec<T>, T)>,
    pub objective: Vec<T>,
    pub sense: Sense,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(num_vars: usize, sense: Sense, objective: Vec<T>) -> Self {
        LinearProgram { num_vars, eq: Vec::new(), le: Vec::new(), objective, sense }
    }

    pub fn add_eq(&mut self, row: Vec<T>, rhs: T) {
        self.eq.push((row, rhs));
    }

    pub fn add_le(&mut self, row: Vec<T>, rhs: T) {
        self.le.push((row, rhs));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub value: T,
    pub x: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

/// Simplex tableau in canonical form: `a = B⁻¹A`, `b = B⁻¹b`.
#[derive(Debug, Clone)]
pub(crate) struct Tableau<T> {
    pub a: Vec<Vec<T>>,
    pub b: Vec<T>,
    pub basis: Vec<usize>,
    pub cols: usize,
}

impl<T: Scalar> Tableau<T> {
    pub fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.a[r][c].clone();
        for v in self.a[r].iter_mut() {
            *v = v.clone() / piv.clone();
        }
        self.b[r] = self.b[r].clone() / piv;
        for i in 0..self.a.len() {
            if i == r {
                continue;
            }
            let f = self.a[i][c].clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..self.cols {
                if !self.a[r][j].is_zero() {
                    let d = f.clone() * self.a[r][j].clone();
                    self.a[i][j] = self.a[i][j].clone() - d;
                }
            }
            self.b[i] = self.b[i].clone() - f * self.b[r].clone();
            if T::EXACT {
                continue;
            }
            // keep float tableaux clean
            if self.b[i].is_negligible() {
                self.b[i] = T::zero();
            }
        }
        self.basis[r] = c;
    }

    /// Basic solution restricted to the first `n` columns.
    pub fn solution(&self, n: usize) -> Vec<T> {
        let mut x = vec![T::zero(); n];
        for (i, &bv) in self.basis.iter().enumerate() {
            if bv < n {
                x[bv] = self.b[i].clone();
            }
        }
        x
    }

    fn reduced_costs(&self, c: &[T]) -> Vec<T> {
        let mut r: Vec<T> = c.to_vec();
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = &c[bv];
            if cb.is_zero() {
                continue;
            }
            for (j, rj) in r.iter_mut().enumerate() {
                if !self.a[i][j].is_zero() {
                    *rj = rj.clone() - cb.clone() * self.a[i][j].clone();
                }
            }
        }
        r
    }

    /// Minimizes `c·x` from the current feasible basis using Bland's rule;
    /// columns at or beyond `allowed` never enter.
    pub fn minimize(&mut self, c: &[T], allowed: usize) -> Result<(), LpError> {
        loop {
            let r = self.reduced_costs(c);
            let entering =
                (0..allowed).find(|&j| r[j] < T::zero() && !r[j].is_negligible() && !self.basis.contains(&j));
            let Some(j) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, T)> = None;
            for i in 0..self.a.len() {
                let aij = &self.a[i][j];
                if *aij > T::zero() && !aij.is_negligible() {
                    let ratio = self.b[i].clone() / aij.clone();
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => {
                            ratio < *br && !(ratio.approx_eq(br))
                                || (ratio.approx_eq(br) && self.basis[i] < self.basis[*bi])
                        }
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = best else {
                return Err(LpError::Unbounded);
            };
            self.pivot(row, j);
        }
    }
}

/// Phase 1 on `A x = b, x >= 0` (rows already sign-normalized inside).
/// Returns a feasible tableau over the original columns with redundant rows
/// removed.
pub(crate) fn feasible_tableau<T: Scalar>(rows: &[Vec<T>], rhs: &[T], n: usize) -> Result<Tableau<T>, LpError> {
    let m = rows.len();
    let cols = n + m;
    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for (i, (row, r)) in rows.iter().zip(rhs).enumerate() {
        if row.len() != n {
            return Err(LpError::Malformed(format!("row {i} has {} coefficients, expected {n}", row.len())));
        }
        let neg = *r < T::zero();
        let mut full: Vec<T> = row.iter().map(|v| if neg { -v.clone() } else { v.clone() }).collect();
        full.extend((0..m).map(|k| if k == i { T::one() } else { T::zero() }));
        a.push(full);
        b.push(if neg { -r.clone() } else { r.clone() });
    }
    let mut t = Tableau { a, b, basis: (n..n + m).collect(), cols };
    let mut c1 = vec![T::zero(); cols];
    for c in c1.iter_mut().skip(n) {
        *c = T::one();
    }
    t.minimize(&c1, cols)?;
    let infeas =
        t.basis.iter().enumerate().filter(|(_, &bv)| bv >= n).fold(T::zero(), |acc, (i, _)| acc + t.b[i].clone());
    if !infeas.is_negligible() {
        return Err(LpError::Infeasible);
    }
    // drive artificials out of the basis; rows where that is impossible are
    // linear combinations of the others
    let mut i = 0;
    while i < t.a.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| !t.a[i][j].is_negligible()) {
                Some(j) => {
                    t.pivot(i, j);
                    i += 1;
                }
                None => {
                    t.a.remove(i);
                    t.b.remove(i);
                    t.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }
    for row in t.a.iter_mut() {
        row.truncate(n);
    }
    t.cols = n;
    Ok(t)
}

/// Standard-form rows for an LP: equality rows plus slack columns for `<=`.
fn standard_form<T: Scalar>(lp: &LinearProgram<T>) -> Result<(Vec<Vec<T>>, Vec<T>, usize), LpError> {
    let n = lp.num_vars;
    if lp.objective.len() != n {
        return Err(LpError::Malformed(format!("objective has {} coefficients, expected {n}", lp.objective.len())));
    }
    let slack = lp.le.len();
    let total = n + slack;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (row, r) in &lp.eq {
        if row.len() != n {
            return Err(LpError::Malformed("equality row of wrong width".into()));
        }
        let mut full = row.clone();
        full.resize(total, T::zero());
        rows.push(full);
        rhs.push(r.clone());
    }
    for (k, (row, r)) in lp.le.iter().enumerate() {
        if row.len() != n {
            return Err(LpError::Malformed("inequality row of wrong width".into()));
        }
        let mut full = row.clone();
        full.resize(total, T::zero());
        full[n + k] = T::one();
        rows.push(full);
        rhs.push(r.clone());
    }
    Ok((rows, rhs, total))
}

/// Solves the program; the returned vertex satisfies every constraint.
pub fn simplex_solve<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>, LpError> {
    let (rows, rhs, total) = standard_form(lp)?;
    let mut t = feasible_tableau(&rows, &rhs, total)?;
    let mut c: Vec<T> = match lp.sense {
        Sense::Minimize => lp.objective.clone(),
        Sense::Maximize => lp.objective.iter().map(|v| -v.clone()).collect(),
    };
    c.resize(total, T::zero());
    t.minimize(&c, total)?;
    let full = t.solution(total);
    let x: Vec<T> = full[..lp.num_vars].to_vec();
    let value = x.iter().zip(&lp.objective).fold(T::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
    Ok(LpSolution { value, x })
}
