//! Frank-Wolfe (conditional gradient) maximization of smooth concave functions
//! over polytopes given by a linear maximization oracle.

use std::collections::HashMap;

use super::lp::{LpProblem, LpStatus};
use super::simplex::Simplex;
use super::SolveError;

pub trait ConcaveFn {
    fn dim(&self) -> usize;
    /// Function value; `-inf` outside the domain.
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], g: &mut [f64]);
}

/// Linear maximization over a fixed polytope. Each answer is an atom with a
/// stable id so callers can map the iterate back to the atoms' payloads.
pub trait LinearOracle {
    fn dim(&self) -> usize;
    fn argmax(&mut self, g: &[f64]) -> Result<(usize, Vec<f64>), SolveError>;
}

/// Oracle over the convex hull of an explicit vertex list.
pub struct VertexOracle {
    pub vertices: Vec<Vec<f64>>,
}

impl LinearOracle for VertexOracle {
    fn dim(&self) -> usize {
        self.vertices.first().map_or(0, Vec::len)
    }

    fn argmax(&mut self, g: &[f64]) -> Result<(usize, Vec<f64>), SolveError> {
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in self.vertices.iter().enumerate() {
            let s: f64 = v.iter().zip(g).map(|(a, b)| a * b).sum();
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        let (i, _) = best.ok_or(SolveError::InfeasibleRegion)?;
        Ok((i, self.vertices[i].clone()))
    }
}

/// Oracle backed by the simplex, optionally composed with a linear map
/// `y = A x` so the search runs in a low-dimensional image of the region.
#[derive(Debug, Clone)]
pub struct LpOracle {
    simplex: Simplex<f64>,
    n: usize,
    image: Option<Vec<Vec<(usize, f64)>>>,
    atoms: Vec<Vec<f64>>,
    seen: HashMap<Vec<u64>, usize>,
}

impl LpOracle {
    pub fn new(region: &LpProblem<f64>) -> Result<Self, SolveError> {
        Ok(LpOracle {
            simplex: Simplex::new(region)?,
            n: region.n_vars,
            image: None,
            atoms: Vec::new(),
            seen: HashMap::new(),
        })
    }

    /// `rows[k]` lists the sparse coefficients of image coordinate `k`.
    pub fn with_image(region: &LpProblem<f64>, rows: Vec<Vec<(usize, f64)>>) -> Result<Self, SolveError> {
        let mut o = Self::new(region)?;
        o.image = Some(rows);
        Ok(o)
    }

    /// Establishes feasibility ahead of the first query.
    pub fn prepare(&mut self) -> Result<bool, SolveError> {
        self.simplex.prepare()
    }

    /// Point in the original variables for an atom id.
    pub fn atom(&self, id: usize) -> &[f64] {
        &self.atoms[id]
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match &self.image {
            None => x.to_vec(),
            Some(rows) => rows.iter().map(|r| r.iter().map(|&(j, a)| a * x[j]).sum()).collect(),
        }
    }
}

impl LinearOracle for LpOracle {
    fn dim(&self) -> usize {
        self.image.as_ref().map_or(self.n, Vec::len)
    }

    fn argmax(&mut self, g: &[f64]) -> Result<(usize, Vec<f64>), SolveError> {
        let c = match &self.image {
            None => g.to_vec(),
            Some(rows) => {
                let mut c = vec![0.0; self.n];
                for (r, gk) in rows.iter().zip(g) {
                    for &(j, a) in r {
                        c[j] += a * gk;
                    }
                }
                c
            }
        };
        let sol = self.simplex.reoptimize(&c)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(SolveError::InfeasibleRegion),
            LpStatus::Unbounded => return Err(SolveError::UnboundedRegion),
        }
        let key: Vec<u64> = sol.x.iter().map(|v| v.to_bits()).collect();
        let id = match self.seen.get(&key) {
            Some(&id) => id,
            None => {
                self.atoms.push(sol.x.clone());
                self.seen.insert(key, self.atoms.len() - 1);
                self.atoms.len() - 1
            }
        };
        Ok((id, self.project(&sol.x)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FwVariant {
    /// Textbook steps toward the oracle vertex.
    Classic,
    /// Moves weight from the worst active atom to the oracle vertex.
    Pairwise,
}

#[derive(Debug, Clone)]
pub struct FwOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub variant: FwVariant,
}

impl Default for FwOptions {
    fn default() -> Self {
        FwOptions { tol: 1e-5, max_iters: 10_000, variant: FwVariant::Pairwise }
    }
}

#[derive(Debug, Clone)]
pub struct FwResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Duality gap `grad f(x) · (s - x)` at the returned point.
    pub gap: f64,
    pub iterations: usize,
    /// Active atoms as `(oracle id, weight)`; weights sum to one.
    pub atoms: Vec<(usize, f64)>,
    /// Objective value after every accepted step, starting with the initial point.
    pub trace: Vec<f64>,
}

struct Atom {
    id: usize,
    point: Vec<f64>,
    weight: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn combine(atoms: &[Atom], dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for a in atoms {
        for (xi, pi) in x.iter_mut().zip(&a.point) {
            *xi += a.weight * pi;
        }
    }
    x
}

fn add_atom(atoms: &mut Vec<Atom>, id: usize, point: Vec<f64>, weight: f64) {
    match atoms.iter_mut().find(|a| a.id == id) {
        Some(a) => a.weight += weight,
        None => atoms.push(Atom { id, point, weight }),
    }
}

/// Largest step in `[0, max]` along `d` that does not decrease `f`, by
/// bisection on the directional derivative.
fn line_search<F: ConcaveFn>(f: &F, x: &[f64], d: &[f64], max: f64, scratch: &mut [f64]) -> f64 {
    let slope = |t: f64, g: &mut [f64]| {
        let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + t * b).collect();
        if !f.value(&y).is_finite() {
            return f64::NEG_INFINITY;
        }
        f.gradient(&y, g);
        let s = dot(g, d);
        if s.is_nan() {
            f64::NEG_INFINITY
        } else {
            s
        }
    };
    if slope(max, scratch) >= 0.0 {
        return max;
    }
    let (mut lo, mut hi) = (0.0, max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if slope(mid, scratch) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn frank_wolfe<F: ConcaveFn, O: LinearOracle>(
    oracle: &mut O,
    f: &F,
    opts: &FwOptions,
) -> Result<FwResult, SolveError> {
    let dim = oracle.dim();
    let mut atoms: Vec<Atom> = Vec::new();

    // Start from the vertex maximizing the coordinate sum, then average in
    // vertices for coordinates that are still at zero until f is finite.
    let (id, p) = oracle.argmax(&vec![1.0; dim])?;
    atoms.push(Atom { id, point: p, weight: 1.0 });
    let mut x = combine(&atoms, dim);
    if !f.value(&x).is_finite() {
        for k in 0..dim {
            if x[k] > 0.0 {
                continue;
            }
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            let (id, p) = oracle.argmax(&e)?;
            if atoms.iter().all(|a| a.id != id) {
                atoms.push(Atom { id, point: p, weight: 0.0 });
                let w = 1.0 / atoms.len() as f64;
                for a in &mut atoms {
                    a.weight = w;
                }
                x = combine(&atoms, dim);
            }
        }
        if !f.value(&x).is_finite() {
            return Err(SolveError::NoInteriorPoint);
        }
    }

    let mut value = f.value(&x);
    let mut trace = vec![value];
    let mut g = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        f.gradient(&x, &mut g);
        let (sid, s) = oracle.argmax(&g)?;
        gap = dot(&g, &s) - dot(&g, &x);
        if gap <= opts.tol {
            break;
        }
        iterations += 1;

        let away = match opts.variant {
            FwVariant::Classic => None,
            FwVariant::Pairwise => atoms
                .iter()
                .enumerate()
                .filter(|(_, a)| a.weight > 0.0 && a.id != sid)
                .min_by(|a, b| dot(&g, &a.1.point).total_cmp(&dot(&g, &b.1.point)))
                .map(|(i, _)| i),
        };
        let (d, max): (Vec<f64>, f64) = match away {
            Some(i) => (s.iter().zip(&atoms[i].point).map(|(p, q)| p - q).collect(), atoms[i].weight),
            None => (s.iter().zip(&x).map(|(p, q)| p - q).collect(), 1.0),
        };
        let step = line_search(f, &x, &d, max, &mut scratch);
        let next: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
        let next_value = f.value(&next);
        if next_value.partial_cmp(&value).is_none_or(|o| o.is_lt()) || step <= 0.0 {
            break;
        }
        match away {
            Some(i) => {
                atoms[i].weight -= step;
                if atoms[i].weight <= 1e-15 {
                    atoms[i].weight = 0.0;
                }
                add_atom(&mut atoms, sid, s, step);
            }
            None => {
                for a in &mut atoms {
                    a.weight *= 1.0 - step;
                }
                add_atom(&mut atoms, sid, s, step);
            }
        }
        atoms.retain(|a| a.weight > 0.0);
        x = next;
        value = next_value;
        trace.push(value);
    }
    let total: f64 = atoms.iter().map(|a| a.weight).sum();
    Ok(FwResult {
        x,
        value,
        gap,
        iterations,
        atoms: atoms.iter().map(|a| (a.id, a.weight / total)).collect(),
        trace,
    })
}

/// Maximizes `f` over the region described by the rows and bounds of `region`
/// (its objective is ignored).
pub fn maximize_concave<F: ConcaveFn>(region: &LpProblem<f64>, f: &F, opts: &FwOptions) -> Result<FwResult, SolveError> {
    let mut oracle = LpOracle::new(region)?;
    frank_wolfe(&mut oracle, f, opts)
}
