//! Two-phase primal simplex on a dense, bounded-variable tableau.
//!
//! Variables are shifted so every lower bound is zero; finite upper bounds are
//! handled by bound flips instead of extra rows. Pricing is Dantzig's rule
//! until a run of degenerate pivots is seen, then Bland's rule until the
//! objective moves again.

use crate::scalar::Scalar;

use super::lp::{dot, LpProblem, LpSolution, LpStatus, Relation};
use super::SolveError;

const DEGENERATE_RUN: usize = 40;

type NormRow<T> = (Vec<(usize, T)>, Relation, T);

/// Bounded-variable dense tableau. Cloning a prepared instance gives an
/// independent warm start.
#[derive(Debug, Clone)]
pub struct Simplex<T> {
    m: usize,
    ncol: usize,
    n: usize,
    tab: Vec<T>,
    rows: Vec<Vec<(usize, T)>>,
    rhs: Vec<T>,
    xb: Vec<T>,
    basis: Vec<usize>,
    pos: Vec<Option<usize>>,
    upper: Vec<Option<T>>,
    at_upper: Vec<bool>,
    cost: Vec<T>,
    d: Vec<T>,
    lo: Vec<T>,
    objective: Vec<T>,
    art_start: usize,
    pivots: usize,
    pivot_limit: usize,
    feasible: Option<bool>,
}

pub fn lp_solve<T: Scalar>(p: &LpProblem<T>) -> Result<LpSolution<T>, SolveError> {
    Simplex::new(p)?.solve()
}

impl<T: Scalar> Simplex<T> {
    pub fn new(p: &LpProblem<T>) -> Result<Self, SolveError> {
        p.validate()?;
        let n = p.n_vars;
        let m = p.constraints.len();
        let zero = T::zero();
        let one = T::one();

        // Normalize each row to a nonnegative right-hand side after the shift.
        let mut norm: Vec<NormRow<T>> = Vec::with_capacity(m);
        for c in &p.constraints {
            let mut b = c.rhs.clone();
            let mut terms = Vec::new();
            for (j, a) in c.coeffs.iter().enumerate() {
                if !a.is_zero() {
                    b -= a.clone() * p.bounds[j].lo.clone();
                    terms.push((j, a.clone()));
                }
            }
            let mut rel = c.relation;
            // A `>=` row with zero right-hand side becomes a `<=` row, which
            // starts with a feasible slack instead of an artificial.
            if b < zero || (rel == Relation::Ge && b.is_zero()) {
                b = -b;
                for t in &mut terms {
                    t.1 = -t.1.clone();
                }
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            norm.push((terms, rel, b));
        }
        let n_slack = norm.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = norm.iter().filter(|r| r.1 != Relation::Le).count();
        let art_start = n + n_slack;
        let ncol = art_start + n_art;

        let mut tab = vec![zero.clone(); m * ncol];
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut next_slack, mut next_art) = (n, art_start);
        for (i, (terms, rel, b)) in norm.into_iter().enumerate() {
            let mut row = terms;
            match rel {
                Relation::Le => {
                    row.push((next_slack, one.clone()));
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row.push((next_slack, -one.clone()));
                    row.push((next_art, one.clone()));
                    basis.push(next_art);
                    next_slack += 1;
                    next_art += 1;
                }
                Relation::Eq => {
                    row.push((next_art, one.clone()));
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            for (j, a) in &row {
                tab[i * ncol + j] = a.clone();
            }
            rows.push(row);
            rhs.push(b);
        }

        let mut upper: Vec<Option<T>> = vec![None; ncol];
        for (j, b) in p.bounds.iter().enumerate() {
            if let Some(hi) = &b.hi {
                upper[j] = Some(hi.clone() - b.lo.clone());
            }
        }
        let mut pos = vec![None; ncol];
        for (i, &b) in basis.iter().enumerate() {
            pos[b] = Some(i);
        }
        let size = m + ncol;
        Ok(Simplex {
            m,
            ncol,
            n,
            xb: rhs.clone(),
            tab,
            rows,
            rhs,
            basis,
            pos,
            upper,
            at_upper: vec![false; ncol],
            cost: vec![zero.clone(); ncol],
            d: vec![zero; ncol],
            lo: p.bounds.iter().map(|b| b.lo.clone()).collect(),
            objective: p.objective.clone(),
            art_start,
            pivots: 0,
            pivot_limit: 10 * size * size + 100,
            feasible: None,
        })
    }

    /// Runs phase one (if needed) and phase two against the problem objective.
    pub fn solve(&mut self) -> Result<LpSolution<T>, SolveError> {
        let c = self.objective.clone();
        self.reoptimize(&c)
    }

    /// Runs phase one if it has not run yet; returns whether the region is feasible.
    pub fn prepare(&mut self) -> Result<bool, SolveError> {
        if self.feasible.is_none() {
            let ok = self.phase_one()?;
            self.feasible = Some(ok);
        }
        Ok(self.feasible == Some(true))
    }

    /// Maximizes a new objective starting from the current basis. The first
    /// call also establishes feasibility.
    pub fn reoptimize(&mut self, objective: &[T]) -> Result<LpSolution<T>, SolveError> {
        assert_eq!(objective.len(), self.n);
        if !self.prepare()? {
            return Ok(LpSolution { status: LpStatus::Infeasible, x: Vec::new(), objective_value: T::zero() });
        }
        self.objective = objective.to_vec();
        for c in self.cost.iter_mut() {
            *c = T::zero();
        }
        self.cost[..self.n].clone_from_slice(objective);
        self.reduced_costs();
        let bounded = self.iterate()?;
        self.refresh();
        let x = self.primal();
        if !bounded {
            return Ok(LpSolution { status: LpStatus::Unbounded, x, objective_value: T::zero() });
        }
        let objective_value = dot(objective, &x);
        Ok(LpSolution { status: LpStatus::Optimal, x, objective_value })
    }

    pub fn pivot_count(&self) -> usize {
        self.pivots
    }

    fn phase_one(&mut self) -> Result<bool, SolveError> {
        if self.art_start == self.ncol {
            return Ok(true);
        }
        for j in self.art_start..self.ncol {
            self.cost[j] = -T::one();
        }
        self.reduced_costs();
        self.iterate()?;
        let infeasibility = self
            .basis
            .iter()
            .zip(&self.xb)
            .filter(|(&b, _)| b >= self.art_start)
            .fold(T::zero(), |acc, (_, v)| acc + v.clone());
        let scale = self.rhs.iter().fold(T::one(), |acc, b| T::max_of(acc, b.abs()));
        if infeasibility > T::feasibility_tolerance() * scale {
            return Ok(false);
        }
        for j in self.art_start..self.ncol {
            self.upper[j] = Some(T::zero());
            self.cost[j] = T::zero();
            if let Some(r) = self.pos[j] {
                self.xb[r] = T::zero();
            }
        }
        Ok(true)
    }

    fn reduced_costs(&mut self) {
        let ncol = self.ncol;
        for j in 0..ncol {
            self.d[j] = self.cost[j].clone();
        }
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = self.cost[b].clone();
            if cb.is_zero() {
                continue;
            }
            let row = &self.tab[i * ncol..(i + 1) * ncol];
            for (dj, a) in self.d.iter_mut().zip(row) {
                if !a.is_zero() {
                    *dj -= cb.clone() * a.clone();
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = T::zero();
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        matches!(&self.upper[j], Some(u) if u.is_zero())
    }

    /// Entering column and direction (+1 increases from lower, -1 decreases from upper).
    fn price(&self, bland: bool) -> Option<(usize, bool)> {
        let tol = T::tolerance();
        let mut best: Option<(usize, bool, T)> = None;
        for j in 0..self.ncol {
            if self.pos[j].is_some() || self.is_fixed(j) {
                continue;
            }
            let dj = &self.d[j];
            let up = if !self.at_upper[j] && *dj > tol {
                true
            } else if self.at_upper[j] && *dj < -tol.clone() {
                false
            } else {
                continue;
            };
            if bland {
                return Some((j, up));
            }
            let score = dj.abs();
            if best.as_ref().is_none_or(|b| score > b.2) {
                best = Some((j, up, score));
            }
        }
        best.map(|(j, up, _)| (j, up))
    }

    /// Returns false when the objective is unbounded along some edge.
    fn iterate(&mut self) -> Result<bool, SolveError> {
        let tol = T::tolerance();
        let mut degenerate = 0usize;
        loop {
            if self.pivots >= self.pivot_limit {
                return Err(SolveError::NumericalFailure { pivots: self.pivots });
            }
            let bland = degenerate >= DEGENERATE_RUN;
            let Some((j, up)) = self.price(bland) else {
                return Ok(true);
            };
            let ncol = self.ncol;

            // Ratio test. Basic variable i moves at rate -sigma * alpha_i.
            let mut best: Option<(usize, T, T)> = None;
            for i in 0..self.m {
                let a = &self.tab[i * ncol + j];
                if a.abs() <= tol {
                    continue;
                }
                let rate = if up { -a.clone() } else { a.clone() };
                let limit = if rate < T::zero() {
                    self.xb[i].clone() / (-rate.clone())
                } else if let Some(u) = &self.upper[self.basis[i]] {
                    (u.clone() - self.xb[i].clone()) / rate.clone()
                } else {
                    continue;
                };
                let limit = T::max_of(limit, T::zero());
                let take = match &best {
                    None => true,
                    Some((bi, bl, ba)) => {
                        if limit < bl.clone() - tol.clone() {
                            true
                        } else if limit <= bl.clone() + tol.clone() {
                            if bland {
                                self.basis[i] < self.basis[*bi]
                            } else {
                                a.abs() > *ba
                            }
                        } else {
                            false
                        }
                    }
                };
                if take {
                    best = Some((i, limit, a.abs()));
                }
            }
            let flip = match (&self.upper[j], &best) {
                (Some(u), Some((_, bl, _))) => *u <= *bl,
                (Some(_), None) => true,
                (None, None) => return Ok(false),
                (None, Some(_)) => false,
            };
            let step = if flip {
                self.upper[j].clone().expect("bounded")
            } else {
                best.as_ref().expect("row").1.clone()
            };
            if step <= tol {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivots += 1;

            if !step.is_zero() {
                for i in 0..self.m {
                    let a = &self.tab[i * ncol + j];
                    if a.is_zero() {
                        continue;
                    }
                    let delta = a.clone() * step.clone();
                    if up {
                        self.xb[i] -= delta;
                    } else {
                        self.xb[i] += delta;
                    }
                }
            }
            if flip {
                self.at_upper[j] = !self.at_upper[j];
                continue;
            }

            let r = best.expect("row").0;
            let leaving = self.basis[r];
            let a_rj = self.tab[r * ncol + j].clone();
            let leaving_rate_positive = if up { a_rj < T::zero() } else { a_rj > T::zero() };
            self.at_upper[leaving] = leaving_rate_positive;
            let entering_value = if up { step } else { self.upper[j].clone().expect("bounded") - step };
            self.xb[r] = entering_value;
            self.at_upper[j] = false;
            self.pivot(r, j);
            self.pos[leaving] = None;
            self.pos[j] = Some(r);
            self.basis[r] = j;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let ncol = self.ncol;
        let flush = T::flush_tolerance();
        let piv = self.tab[r * ncol + j].clone();
        let mut nz = Vec::new();
        for k in 0..ncol {
            let v = &mut self.tab[r * ncol + k];
            if !v.is_zero() {
                *v = v.clone() / piv.clone();
                nz.push(k);
            }
        }
        self.tab[r * ncol + j] = T::one();
        let prow: Vec<(usize, T)> = nz.iter().map(|&k| (k, self.tab[r * ncol + k].clone())).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * ncol + j].clone();
            if f.is_zero() {
                continue;
            }
            let row = &mut self.tab[i * ncol..(i + 1) * ncol];
            for (k, a) in &prow {
                let v = &mut row[*k];
                *v -= f.clone() * a.clone();
                if v.abs() <= flush {
                    *v = T::zero();
                }
            }
            row[j] = T::zero();
        }
        let f = self.d[j].clone();
        if !f.is_zero() {
            for (k, a) in &prow {
                let v = &mut self.d[*k];
                *v -= f.clone() * a.clone();
            }
            self.d[j] = T::zero();
        }
    }

    /// Current primal point in the original (unshifted) variables.
    fn primal(&self) -> Vec<T> {
        (0..self.n)
            .map(|j| {
                let mut v = match self.pos[j] {
                    Some(r) => self.xb[r].clone(),
                    None if self.at_upper[j] => self.upper[j].clone().expect("bounded"),
                    None => T::zero(),
                };
                if v < T::zero() {
                    v = T::zero();
                }
                if let Some(u) = &self.upper[j] {
                    if v > *u {
                        v = u.clone();
                    }
                }
                v + self.lo[j].clone()
            })
            .collect()
    }

    /// Recomputes basic values from the original rows, removing drift that
    /// accumulates in floating point over many pivots.
    pub fn refresh(&mut self) {
        let ncol = self.ncol;
        let mut b = self.rhs.clone();
        for (i, row) in self.rows.iter().enumerate() {
            for (j, a) in row {
                if self.pos[*j].is_none() && self.at_upper[*j] {
                    b[i] -= a.clone() * self.upper[*j].clone().expect("bounded");
                }
            }
        }
        // Each row owns a unit column (its slack or artificial); the tableau
        // columns of those units form the basis inverse.
        let mut unit = vec![0usize; self.m];
        for (i, row) in self.rows.iter().enumerate() {
            unit[i] = row.last().expect("unit column").0;
        }
        for r in 0..self.m {
            let mut v = T::zero();
            for (i, bi) in b.iter().enumerate() {
                let e = &self.tab[r * ncol + unit[i]];
                if !e.is_zero() {
                    v += e.clone() * bi.clone();
                }
            }
            self.xb[r] = v;
        }
    }
}
