use crate::scalar::Scalar;

use super::SolveError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

/// Box constraint `lo <= x <= hi`; `hi = None` means unbounded above.
#[derive(Debug, Clone)]
pub struct Bounds<T> {
    pub lo: T,
    pub hi: Option<T>,
}

/// `maximize objective · x` subject to linear rows and per-variable bounds.
#[derive(Debug, Clone)]
pub struct LpProblem<T> {
    pub n_vars: usize,
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
    pub bounds: Vec<Bounds<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub x: Vec<T>,
    pub objective_value: T,
}

impl<T: Scalar> LpProblem<T> {
    /// Problem with a zero objective, no rows and `0 <= x` bounds.
    pub fn new(n_vars: usize) -> Self {
        LpProblem {
            n_vars,
            objective: vec![T::zero(); n_vars],
            constraints: Vec::new(),
            bounds: (0..n_vars).map(|_| Bounds { lo: T::zero(), hi: None }).collect(),
        }
    }

    pub fn with_objective(mut self, c: Vec<T>) -> Self {
        assert_eq!(c.len(), self.n_vars);
        self.objective = c;
        self
    }

    pub fn add_constraint(&mut self, coeffs: Vec<T>, relation: Relation, rhs: T) {
        assert_eq!(coeffs.len(), self.n_vars, "row length must equal n_vars");
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    /// Adds a row given as sparse `(column, coefficient)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, T)], relation: Relation, rhs: T) {
        let mut coeffs = vec![T::zero(); self.n_vars];
        for (j, a) in terms {
            coeffs[*j] += a.clone();
        }
        self.add_constraint(coeffs, relation, rhs);
    }

    pub fn set_bounds(&mut self, j: usize, lo: T, hi: Option<T>) {
        self.bounds[j] = Bounds { lo, hi };
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.objective.len() != self.n_vars || self.bounds.len() != self.n_vars {
            return Err(SolveError::InvalidProblem("objective/bounds length differs from n_vars".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != self.n_vars {
                return Err(SolveError::InvalidProblem(format!("row {i} has {} coefficients", c.coeffs.len())));
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if b.lo < T::zero() {
                return Err(SolveError::InvalidProblem(format!("variable {j} has a negative lower bound")));
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[T]) -> T {
        dot(&self.objective, x)
    }

    /// Largest violation of any row or bound, each scaled by `1 + |rhs|`.
    pub fn max_violation(&self, x: &[T]) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.constraints {
            let lhs = dot(&c.coeffs, x).to_f64_lossy();
            let rhs = c.rhs.to_f64_lossy();
            let v = match c.relation {
                Relation::Le => lhs - rhs,
                Relation::Ge => rhs - lhs,
                Relation::Eq => (lhs - rhs).abs(),
            };
            worst = worst.max(v / (1.0 + rhs.abs()));
        }
        for (xj, b) in x.iter().zip(&self.bounds) {
            let xj = xj.to_f64_lossy();
            let lo = b.lo.to_f64_lossy();
            worst = worst.max((lo - xj) / (1.0 + lo.abs()));
            if let Some(hi) = &b.hi {
                let hi = hi.to_f64_lossy();
                worst = worst.max((xj - hi) / (1.0 + hi.abs()));
            }
        }
        worst
    }

    pub fn is_feasible(&self, x: &[T], rel_tol: f64) -> bool {
        x.len() == self.n_vars && self.max_violation(x) <= rel_tol
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (p, q)| acc + p.clone() * q.clone())
}
