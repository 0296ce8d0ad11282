//! Dense two-phase simplex for the small linear programs produced by
//! per-island dispatch. Problems here have tens of rows, so a tableau
//! implementation with Bland's rule as an anti-cycling fallback is simpler
//! and more predictable than a sparse or interior-point method.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

/// One constraint row: `coeffs . x  (relation)  rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `minimize objective . x` subject to constraint rows and finite lower /
/// possibly infinite upper variable bounds.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("problem is unbounded below")]
    Unbounded,
    #[error("simplex did not converge within {0} pivots")]
    IterationLimit(usize),
    #[error("inconsistent problem dimensions")]
    BadDimensions,
}

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-8;

impl LpProblem {
    pub fn solve(&self) -> Result<LpOutcome, LpError> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::BadDimensions);
        }
        for c in &self.constraints {
            if c.coeffs.len() != n {
                return Err(LpError::BadDimensions);
            }
        }
        for j in 0..n {
            if self.upper[j] < self.lower[j] {
                return Ok(LpOutcome::Infeasible);
            }
        }

        // Shift variables to y = x - lower >= 0; finite upper bounds become
        // extra <= rows.
        let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
        for c in &self.constraints {
            let shift: f64 = c.coeffs.iter().zip(&self.lower).map(|(a, l)| a * l).sum();
            rows.push((c.coeffs.clone(), c.relation, c.rhs - shift));
        }
        for j in 0..n {
            if self.upper[j].is_finite() {
                let mut coeffs = vec![0.0; n];
                coeffs[j] = 1.0;
                rows.push((coeffs, Relation::Le, self.upper[j] - self.lower[j]));
            }
        }
        // Normalize to non-negative right-hand sides.
        for (coeffs, relation, rhs) in &mut rows {
            if *rhs < 0.0 {
                for a in coeffs.iter_mut() {
                    *a = -*a;
                }
                *rhs = -*rhs;
                *relation = match *relation {
                    Relation::Eq => Relation::Eq,
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                };
            }
        }

        let m = rows.len();
        let n_slack = rows
            .iter()
            .filter(|(_, rel, _)| matches!(rel, Relation::Le | Relation::Ge))
            .count();
        let n_art = rows
            .iter()
            .filter(|(_, rel, _)| matches!(rel, Relation::Eq | Relation::Ge))
            .count();
        let total = n + n_slack + n_art;

        // Tableau: m constraint rows then the objective row; last column rhs.
        let width = total + 1;
        let mut t = vec![0.0; (m + 1) * width];
        let mut basis = vec![0usize; m];
        let mut slack_at = n;
        let mut art_at = n + n_slack;
        let mut artificials = Vec::new();
        for (i, (coeffs, relation, rhs)) in rows.iter().enumerate() {
            let row = &mut t[i * width..(i + 1) * width];
            row[..n].copy_from_slice(coeffs);
            row[total] = *rhs;
            match relation {
                Relation::Le => {
                    row[slack_at] = 1.0;
                    basis[i] = slack_at;
                    slack_at += 1;
                }
                Relation::Ge => {
                    row[slack_at] = -1.0;
                    slack_at += 1;
                    row[art_at] = 1.0;
                    basis[i] = art_at;
                    artificials.push(art_at);
                    art_at += 1;
                }
                Relation::Eq => {
                    row[art_at] = 1.0;
                    basis[i] = art_at;
                    artificials.push(art_at);
                    art_at += 1;
                }
            }
        }

        // Phase 1: minimize the artificial sum.
        if !artificials.is_empty() {
            for &a in &artificials {
                t[m * width + a] = 1.0;
            }
            for i in 0..m {
                if artificials.contains(&basis[i]) {
                    cancel_basic_column(&mut t, width, m, i, basis[i]);
                }
            }
            run_simplex(&mut t, width, m, total, &mut basis)?;
            let phase1 = -t[m * width + total];
            if phase1 > 1e-7 {
                return Ok(LpOutcome::Infeasible);
            }
            // Pivot any artificial still basic (at zero) out of the basis.
            for i in 0..m {
                if artificials.contains(&basis[i]) {
                    let pivot_col = (0..n + n_slack)
                        .find(|&j| t[i * width + j].abs() > PIVOT_TOL);
                    if let Some(j) = pivot_col {
                        pivot(&mut t, width, m, i, j);
                        basis[i] = j;
                    }
                    // A fully zero row is redundant; the artificial stays
                    // basic at zero and is locked out below.
                }
            }
            // Lock artificial columns out of phase 2.
            for i in 0..=m {
                for &a in &artificials {
                    if i < m && basis.get(i) == Some(&a) {
                        continue;
                    }
                    t[i * width + a] = 0.0;
                }
            }
        }

        // Phase 2: original objective over the shifted variables.
        for j in 0..total {
            t[m * width + j] = if j < n { self.objective[j] } else { 0.0 };
        }
        t[m * width + total] = 0.0;
        for i in 0..m {
            cancel_basic_column(&mut t, width, m, i, basis[i]);
        }
        run_simplex(&mut t, width, m, total, &mut basis)?;

        let mut x = self.lower.clone();
        for i in 0..m {
            if basis[i] < n {
                x[basis[i]] = self.lower[basis[i]] + t[i * width + total];
            }
        }
        // Clamp rounding noise back into the box.
        for j in 0..n {
            x[j] = x[j].clamp(self.lower[j], self.upper[j]);
        }
        // Verify feasibility of the recovered point; tableau degeneracies
        // surface here rather than as silent bad answers.
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(&x).map(|(a, v)| a * v).sum();
            let scale = 1.0 + c.rhs.abs();
            let ok = match c.relation {
                Relation::Eq => (lhs - c.rhs).abs() <= FEAS_TOL * scale * 10.0,
                Relation::Le => lhs <= c.rhs + FEAS_TOL * scale * 10.0,
                Relation::Ge => lhs >= c.rhs - FEAS_TOL * scale * 10.0,
            };
            if !ok {
                return Ok(LpOutcome::Infeasible);
            }
        }
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpOutcome::Optimal { x, objective })
    }
}

/// Subtract a multiple of `row` from the objective row so that the basic
/// column `col` (unit in `row`) gets a zero reduced cost.
fn cancel_basic_column(t: &mut [f64], width: usize, m: usize, row: usize, col: usize) {
    let factor = t[m * width + col];
    if factor != 0.0 {
        for j in 0..width {
            t[m * width + j] -= factor * t[row * width + j];
        }
        t[m * width + col] = 0.0;
    }
}

fn run_simplex(
    t: &mut [f64],
    width: usize,
    m: usize,
    total: usize,
    basis: &mut [usize],
) -> Result<(), LpError> {
    let max_iter = 200 * (m + total).max(50);
    let bland_after = 20 * (m + total).max(50);
    for iter in 0..max_iter {
        let bland = iter >= bland_after;
        // Entering column: most negative reduced cost (or first, under Bland).
        let mut entering = None;
        let mut best = -PIVOT_TOL;
        for j in 0..total {
            let rc = t[m * width + j];
            if rc < best {
                entering = Some(j);
                if bland {
                    break;
                }
                best = rc;
            }
        }
        let Some(col) = entering else {
            return Ok(());
        };
        // Ratio test; ties resolved by the smallest basis index.
        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t[i * width + col];
            if a > PIVOT_TOL {
                let ratio = t[i * width + total] / a;
                match leaving {
                    None => leaving = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-12
                            || (ratio < lr + 1e-12 && basis[i] < basis[li])
                        {
                            leaving = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((row, _)) = leaving else {
            return Err(LpError::Unbounded);
        };
        pivot(t, width, m, row, col);
        basis[row] = col;
    }
    Err(LpError::IterationLimit(max_iter))
}

fn pivot(t: &mut [f64], width: usize, m: usize, row: usize, col: usize) {
    let p = t[row * width + col];
    for j in 0..width {
        t[row * width + j] /= p;
    }
    for i in 0..=m {
        if i == row {
            continue;
        }
        let f = t[i * width + col];
        if f != 0.0 {
            for j in 0..width {
                t[i * width + j] -= f * t[row * width + j];
            }
            t[i * width + col] = 0.0;
        }
    }
}
