use std::collections::BTreeSet;

use crate::solve::{lp_solve, LpProblem, LpStatus, Relation, SolveError};

use super::frontier::pareto_frontier_2d;
use super::{McfCache, McfObjective, Scenario, ScenarioError};

/// Tunnel-allocation polytope: per-flow demand rows and per-arc capacity rows,
/// with `extra` trailing variables left unconstrained for the caller.
pub(crate) fn tunnel_region(s: &Scenario, extra: usize) -> LpProblem<f64> {
    let n = s.paths().tunnel_count();
    let mut p = LpProblem::new(n + extra);
    let mut arc_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); s.topology().arcs().len()];
    let mut j = 0;
    for (f, tunnels) in s.paths().tunnels.iter().enumerate() {
        let demand = s.demands().flows[f].demand;
        let first = j;
        for path in tunnels {
            p.set_bounds(j, 0.0, Some(demand));
            for &a in &path.arcs {
                arc_terms[a].push((j, 1.0));
            }
            j += 1;
        }
        if tunnels.len() > 1 {
            let terms: Vec<(usize, f64)> = (first..j).map(|t| (t, 1.0)).collect();
            p.add_sparse(&terms, Relation::Le, demand);
        }
    }
    let used: BTreeSet<usize> = (0..arc_terms.len()).filter(|&a| !arc_terms[a].is_empty()).collect();
    for a in used {
        p.add_sparse(&arc_terms[a], Relation::Le, s.topology().arcs()[a].capacity);
    }
    p
}

/// Coefficients of throughput and of negated latency over tunnel variables.
pub(crate) fn metric_rows(s: &Scenario) -> (Vec<f64>, Vec<f64>) {
    let unit = s.options().latency_unit;
    let mut t = Vec::new();
    let mut l = Vec::new();
    for tunnels in &s.paths().tunnels {
        for path in tunnels {
            t.push(1.0);
            l.push(-unit * path.weight() as f64);
        }
    }
    (t, l)
}

pub(crate) fn build_cache(s: &Scenario) -> Result<McfCache, ScenarioError> {
    let region = tunnel_region(s, 0);
    let (t, l) = metric_rows(s);
    let frontier = pareto_frontier_2d(&region, &t, &l)?;
    let last = frontier.last().expect("frontier is nonempty");
    Ok(McfCache { t_max: last.y[0], l_max: -last.y[1], frontier })
}

/// Exact optimum over the convex hull of the frontier vertices: an epigraph
/// LP with one weight per vertex plus the two hinge variables.
pub(crate) fn improve(s: &Scenario, o: &McfObjective) -> Result<Vec<f64>, ScenarioError> {
    let cache = s.mcf_cache()?;
    let v = cache.frontier.len();
    let (ut, ul) = (v, v + 1);
    let mut p = LpProblem::new(v + 2);
    let mut c = vec![0.0; v + 2];
    for (i, vert) in cache.frontier.iter().enumerate() {
        let (t, l) = (vert.y[0], -vert.y[1]);
        c[i] = o.w_t * t - o.w_l * l;
    }
    c[ut] = -o.p_t;
    c[ul] = -o.p_l;
    p = p.with_objective(c);
    p.add_sparse(&(0..v).map(|i| (i, 1.0)).collect::<Vec<_>>(), Relation::Eq, 1.0);
    let mut row_t: Vec<(usize, f64)> = cache.frontier.iter().enumerate().map(|(i, x)| (i, -x.y[0])).collect();
    row_t.push((ut, 1.0));
    p.add_sparse(&row_t, Relation::Ge, -o.theta_t);
    let mut row_l: Vec<(usize, f64)> = cache.frontier.iter().enumerate().map(|(i, x)| (i, x.y[1])).collect();
    row_l.push((ul, 1.0));
    p.add_sparse(&row_l, Relation::Ge, -o.theta_l);
    let sol = lp_solve(&p)?;
    if sol.status != LpStatus::Optimal {
        return Err(ScenarioError::InfeasibleScenario);
    }
    let mut x = vec![0.0; s.param_dim()];
    for (i, vert) in cache.frontier.iter().enumerate() {
        let lambda = sol.x[i];
        if lambda > 0.0 {
            for (xj, vj) in x.iter_mut().zip(&vert.x) {
                *xj += lambda * vj;
            }
        }
    }
    Ok(x)
}

/// Epigraph LP directly over tunnel allocations. Used as a cross-check.
pub fn improve_direct(s: &Scenario, o: &McfObjective) -> Result<Vec<f64>, ScenarioError> {
    let n = s.paths().tunnel_count();
    let (ut, ul) = (n, n + 1);
    let mut p = tunnel_region(s, 2);
    let (t, l) = metric_rows(s);
    let mut c: Vec<f64> = t.iter().zip(&l).map(|(a, b)| o.w_t * a + o.w_l * b).collect();
    c.push(-o.p_t);
    c.push(-o.p_l);
    p.objective = c;
    let mut row_t: Vec<(usize, f64)> = t.iter().enumerate().map(|(j, a)| (j, -a)).collect();
    row_t.push((ut, 1.0));
    p.add_sparse(&row_t, Relation::Ge, -o.theta_t);
    let mut row_l: Vec<(usize, f64)> = l.iter().enumerate().map(|(j, a)| (j, *a)).collect();
    row_l.push((ul, 1.0));
    p.add_sparse(&row_l, Relation::Ge, -o.theta_l);
    let sol = lp_solve(&p)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.x[..n].to_vec()),
        LpStatus::Infeasible => Err(ScenarioError::InfeasibleScenario),
        LpStatus::Unbounded => Err(SolveError::UnboundedRegion.into()),
    }
}
