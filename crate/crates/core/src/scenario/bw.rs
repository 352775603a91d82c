use crate::solve::{frank_wolfe, ConcaveFn, FwOptions, LpOracle, LpProblem, Relation, VertexOracle};

use super::frontier::{pareto_frontier_2d, FrontierVertex};
use super::{BwObjective, Scenario, ScenarioError};

/// Per-flow allocation box `[floor · d, d]` plus capacity rows along each
/// flow's single shortest path.
pub(crate) fn region(s: &Scenario) -> LpProblem<f64> {
    let flows = &s.demands().flows;
    let mut p = LpProblem::new(flows.len());
    let mut arc_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); s.topology().arcs().len()];
    for (i, f) in flows.iter().enumerate() {
        p.set_bounds(i, s.options().bw_floor * f.demand, Some(f.demand));
        for &a in &s.paths().tunnels[i][0].arcs {
            arc_terms[a].push((i, 1.0));
        }
    }
    for (a, terms) in arc_terms.iter().enumerate() {
        if !terms.is_empty() {
            p.add_sparse(terms, Relation::Le, s.topology().arcs()[a].capacity);
        }
    }
    p
}

/// Sparse rows mapping allocations to per-class averages.
pub(crate) fn class_rows(s: &Scenario) -> Vec<Vec<(usize, f64)>> {
    let k = s.demands().classes;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    for (i, f) in s.demands().flows.iter().enumerate() {
        rows[f.class].push((i, 1.0));
    }
    for r in &mut rows {
        let n = r.len() as f64;
        for t in r.iter_mut() {
            t.1 = 1.0 / n;
        }
    }
    rows
}

fn dense(row: &[(usize, f64)], n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &(j, a) in row {
        v[j] = a;
    }
    v
}

/// Weighted log utility of class averages.
pub struct LogUtility<'a> {
    pub w: &'a [f64],
}

impl ConcaveFn for LogUtility<'_> {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn value(&self, y: &[f64]) -> f64 {
        let mut v = 0.0;
        for (w, yk) in self.w.iter().zip(y) {
            if *yk <= 0.0 {
                return f64::NEG_INFINITY;
            }
            v += w * yk.ln();
        }
        v
    }

    fn gradient(&self, y: &[f64], g: &mut [f64]) {
        for ((gk, w), yk) in g.iter_mut().zip(self.w).zip(y) {
            *gk = w / yk;
        }
    }
}

pub(crate) fn frontier(s: &Scenario) -> Result<&[FrontierVertex], ScenarioError> {
    let built = s.bw_frontier.get_or_init(|| {
        let rows = class_rows(s);
        let n = s.demands().flows.len();
        pareto_frontier_2d(&region(s), &dense(&rows[0], n), &dense(&rows[1], n)).map_err(|e| e.to_string())
    });
    built.as_deref().map_err(|e| ScenarioError::Parse(format!("BW frontier unavailable: {e}")))
}

pub(crate) fn improve(s: &Scenario, o: &BwObjective) -> Result<Vec<f64>, ScenarioError> {
    let k = s.demands().classes;
    if o.w.len() != k {
        return Err(ScenarioError::InvalidObjective(format!("expected {k} class weights")));
    }
    let f = LogUtility { w: &o.w };
    let opts = FwOptions { tol: s.options().fw_tol, ..FwOptions::default() };
    let n = s.param_dim();
    let mut x = vec![0.0; n];
    if k == 2 {
        let verts = frontier(s)?;
        let mut oracle = VertexOracle { vertices: verts.iter().map(|v| v.y.to_vec()).collect() };
        let r = frank_wolfe(&mut oracle, &f, &opts)?;
        for (id, w) in r.atoms {
            for (xj, vj) in x.iter_mut().zip(&verts[id].x) {
                *xj += w * vj;
            }
        }
    } else {
        let template = s.bw_oracle.get_or_init(|| {
            let mut o = LpOracle::with_image(&region(s), class_rows(s)).map_err(|e| e.to_string())?;
            o.prepare().map_err(|e| e.to_string())?;
            Ok(o)
        });
        let mut oracle = template.clone().map_err(|e| ScenarioError::Parse(format!("BW oracle unavailable: {e}")))?;
        let r = frank_wolfe(&mut oracle, &f, &opts)?;
        for (id, w) in r.atoms {
            for (xj, vj) in x.iter_mut().zip(oracle.atom(id)) {
                *xj += w * vj;
            }
        }
    }
    // Clamp rounding so the reconstructed point stays inside the box.
    for (xj, fl) in x.iter_mut().zip(&s.demands().flows) {
        *xj = xj.clamp(0.0, fl.demand);
    }
    Ok(x)
}
