//! Dense two-phase simplex for the small local seam programs.
//!
//! Variables carry box bounds `[lo, hi]` and are shifted so the tableau only
//! sees nonnegative variables. Pricing uses the most negative reduced cost
//! and falls back to Bland's rule while pivots are degenerate, which keeps
//! the solver cycle-free and fully deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{PlyError, Result};

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;
const PHASE1_EPS: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 20;
const MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `minimize c . x` subject to rows and per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// Program over `n_vars` variables bounded to `[0, inf)`.
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            objective: vec![0.0; n_vars],
            constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n_vars],
        }
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn add_sparse(&mut self, terms: &[(usize, f64)], relation: Relation, rhs: f64) {
        let mut coeffs = vec![0.0; self.n_vars];
        for &(j, a) in terms {
            coeffs[j] += a;
        }
        self.add(coeffs, relation, rhs);
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(PlyError::MalformedLp(m));
        if self.objective.len() != self.n_vars {
            return bad(format!(
                "objective has {} coefficients, expected {}",
                self.objective.len(),
                self.n_vars
            ));
        }
        if self.bounds.len() != self.n_vars {
            return bad(format!("{} bounds for {} variables", self.bounds.len(), self.n_vars));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !lo.is_finite() || hi.is_nan() || lo > hi {
                return bad(format!("variable {j} has bounds [{lo}, {hi}]"));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != self.n_vars {
                return bad(format!("row {i} has {} coefficients", c.coeffs.len()));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return bad(format!("row {i} is not finite"));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (&(lo, hi), &v) in self.bounds.iter().zip(x) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Optimal point; empty unless `status` is `Optimal`.
    pub solution: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
}

impl LpResult {
    fn failed(status: LpStatus, iterations: usize) -> Self {
        Self {
            status,
            solution: Vec::new(),
            objective_value: f64::NAN,
            iterations,
        }
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `(rows + 1) x (cols + 1)`, row-major; the last row holds reduced
    /// costs and the last column right-hand sides.
    data: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
}

enum PivotOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let p = self.data[r * w + c];
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for v in prow.iter_mut() {
            *v /= p;
        }
        prow[c] = 1.0;
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (v, &pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Runs simplex iterations on the current objective row. Columns at or
    /// beyond `allowed` never enter.
    fn optimize(&mut self, allowed: usize) -> Result<PivotOutcome> {
        let obj = self.rows;
        let mut streak = 0usize;
        loop {
            if self.iterations > MAX_ITERATIONS {
                return Err(PlyError::MalformedLp("iteration limit exceeded".into()));
            }
            let bland = streak >= DEGENERATE_STREAK;
            let mut enter = None;
            let mut best = -COST_EPS;
            for j in 0..allowed {
                let d = self.at(obj, j);
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = enter else {
                return Ok(PivotOutcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best_ratio)) => {
                        if ratio < best_ratio - 1e-12
                            || (ratio <= best_ratio + 1e-12 && self.basis[i] < self.basis[r])
                        {
                            Some((i, ratio))
                        } else {
                            Some((r, best_ratio))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leave else {
                return Ok(PivotOutcome::Unbounded);
            };
            streak = if ratio <= 1e-12 { streak + 1 } else { 0 };
            self.pivot(r, c);
        }
    }
}

/// Solves `lp` to optimality or reports infeasibility / unboundedness.
pub fn solve(lp: &LinearProgram) -> Result<LpResult> {
    lp.check()?;
    let n = lp.n_vars;
    let lo: Vec<f64> = lp.bounds.iter().map(|b| b.0).collect();

    // Every row becomes `a . y <= b` over the shifted variables y = x - lo.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &lp.constraints {
        let shift: f64 = c.coeffs.iter().zip(&lo).map(|(a, l)| a * l).sum();
        let b = c.rhs - shift;
        let neg = || (c.coeffs.iter().map(|a| -a).collect::<Vec<_>>(), -b);
        match c.relation {
            Relation::Le => rows.push((c.coeffs.clone(), b)),
            Relation::Ge => rows.push(neg()),
            Relation::Eq => {
                rows.push((c.coeffs.clone(), b));
                rows.push(neg());
            }
        }
    }
    for (j, &(l, h)) in lp.bounds.iter().enumerate() {
        if h.is_finite() {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            rows.push((e, h - l));
        }
    }

    let m = rows.len();
    let n_art = rows.iter().filter(|(_, b)| *b < 0.0).count();
    let cols = n + m + n_art;
    let width = cols + 1;
    let mut t = Tableau {
        rows: m,
        cols,
        data: vec![0.0; (m + 1) * width],
        basis: vec![0; m],
        iterations: 0,
    };

    let mut art = n + m;
    for (i, (a, b)) in rows.iter().enumerate() {
        let row = &mut t.data[i * width..(i + 1) * width];
        if *b >= 0.0 {
            row[..n].copy_from_slice(a);
            row[n + i] = 1.0;
            row[cols] = *b;
            t.basis[i] = n + i;
        } else {
            for (dst, src) in row[..n].iter_mut().zip(a) {
                *dst = -src;
            }
            row[n + i] = -1.0;
            row[art] = 1.0;
            row[cols] = -b;
            t.basis[i] = art;
            art += 1;
        }
    }

    // Phase 1: minimize the sum of artificials.
    if n_art > 0 {
        let obj = m * width;
        for i in 0..m {
            if t.basis[i] >= n + m {
                for j in 0..=cols {
                    let v = t.data[i * width + j];
                    t.data[obj + j] -= v;
                }
            }
        }
        for j in (n + m)..cols {
            t.data[obj + j] = 0.0;
        }
        t.optimize(cols)?;
        let infeasibility = -t.data[obj + cols];
        if infeasibility > PHASE1_EPS {
            return Ok(LpResult::failed(LpStatus::Infeasible, t.iterations));
        }
        // Drive zero-level artificials out of the basis where possible.
        for i in 0..m {
            if t.basis[i] >= n + m {
                if let Some(j) = (0..n + m).find(|&j| t.at(i, j).abs() > PIVOT_EPS) {
                    t.pivot(i, j);
                }
            }
        }
    }

    // Phase 2 with the true costs.
    let obj = m * width;
    t.data[obj..].fill(0.0);
    t.data[obj..obj + n].copy_from_slice(&lp.objective);
    for i in 0..m {
        let b = t.basis[i];
        if b < n {
            let cb = lp.objective[b];
            if cb != 0.0 {
                for j in 0..=cols {
                    let v = t.data[i * width + j];
                    t.data[obj + j] -= cb * v;
                }
            }
        }
    }
    if let PivotOutcome::Unbounded = t.optimize(n + m)? {
        return Ok(LpResult::failed(LpStatus::Unbounded, t.iterations));
    }

    let mut x = lo;
    for i in 0..m {
        if t.basis[i] < n {
            x[t.basis[i]] += t.rhs(i).max(0.0);
        }
    }
    let objective_value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpResult {
        status: LpStatus::Optimal,
        solution: x,
        objective_value,
        iterations: t.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_variable() {
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![-1.0];
        lp.add(vec![1.0], Relation::Le, 1.0);
        let r = solve(&lp).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert_abs_diff_eq!(r.solution[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.objective_value, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_face_is_deterministic() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, -1.0];
        lp.add(vec![1.0, 1.0], Relation::Le, 1.0);
        let a = solve(&lp).unwrap();
        let b = solve(&lp).unwrap();
        assert_abs_diff_eq!(a.objective_value, -1.0, epsilon = 1e-12);
        assert_eq!(a.solution, b.solution);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![1.0], Relation::Ge, 2.0);
        lp.add(vec![1.0], Relation::Le, 1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, 0.0];
        lp.add(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_shifted_bounds() {
        // min x + 2y, x + y = 3, x in [1, 2], y in [0.5, 5]
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.bounds = vec![(1.0, 2.0), (0.5, 5.0)];
        lp.add(vec![1.0, 1.0], Relation::Eq, 3.0);
        let r = solve(&lp).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert_abs_diff_eq!(r.solution[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.solution[1], 1.0, epsilon = 1e-12);
        assert!(lp.max_violation(&r.solution) < 1e-9);
    }

    #[test]
    fn malformed_dimensions_rejected() {
        let mut lp = LinearProgram::new(2);
        lp.add(vec![1.0], Relation::Le, 1.0);
        assert!(matches!(solve(&lp), Err(PlyError::MalformedLp(_))));
    }

    #[test]
    fn klee_minty_terminates() {
        // Classic worst case for Dantzig pricing; checks correctness only.
        let n = 6;
        let mut lp = LinearProgram::new(n);
        lp.objective = (0..n).map(|j| -(2f64.powi((n - 1 - j) as i32))).collect();
        for i in 0..n {
            let mut row = vec![0.0; n];
            for (j, r) in row.iter_mut().enumerate().take(i) {
                *r = 2f64.powi((i - j + 1) as i32);
            }
            row[i] = 1.0;
            lp.add(row, Relation::Le, 5f64.powi(i as i32 + 1));
        }
        let r = solve(&lp).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert_abs_diff_eq!(r.objective_value, -(5f64.powi(n as i32)), epsilon = 1e-6);
    }
}
