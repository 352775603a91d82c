//! Exact Pareto frontier of a two-metric linear image of a polytope.

use crate::solve::{lp_solve, LpProblem, LpStatus, Relation, Simplex, SolveError};

#[derive(Debug, Clone)]
pub struct FrontierVertex {
    pub y: [f64; 2],
    pub x: Vec<f64>,
}

fn image(x: &[f64], m: &[f64]) -> f64 {
    x.iter().zip(m).map(|(a, b)| a * b).sum()
}

fn optimal(sol: crate::solve::LpSolution<f64>) -> Result<Vec<f64>, SolveError> {
    match sol.status {
        LpStatus::Optimal => Ok(sol.x),
        LpStatus::Infeasible => Err(SolveError::InfeasibleRegion),
        LpStatus::Unbounded => Err(SolveError::UnboundedRegion),
    }
}

/// Lexicographic maximum: `primary` first, then `secondary` on the optimal face.
fn lex_max(region: &LpProblem<f64>, primary: &[f64], secondary: &[f64]) -> Result<Vec<f64>, SolveError> {
    let first = optimal(lp_solve(&region.clone().with_objective(primary.to_vec()))?)?;
    let best = image(&first, primary);
    let mut p = region.clone().with_objective(secondary.to_vec());
    p.add_constraint(primary.to_vec(), Relation::Ge, best - 1e-12 * (1.0 + best.abs()));
    optimal(lp_solve(&p)?)
}

/// Vertices of the Pareto frontier of `(m0 · x, m1 · x)` over the region, both
/// maximized, ordered by increasing first coordinate. Found by recursive
/// weighted-sum bisection between the two lexicographic endpoints.
pub fn pareto_frontier_2d(region: &LpProblem<f64>, m0: &[f64], m1: &[f64]) -> Result<Vec<FrontierVertex>, SolveError> {
    let vertex = |x: Vec<f64>| FrontierVertex { y: [image(&x, m0), image(&x, m1)], x };
    let left = vertex(lex_max(region, m1, m0)?);
    let right = vertex(lex_max(region, m0, m1)?);
    let close = |a: &FrontierVertex, b: &FrontierVertex| {
        (a.y[0] - b.y[0]).abs() <= 1e-9 * (1.0 + a.y[0].abs()) && (a.y[1] - b.y[1]).abs() <= 1e-9 * (1.0 + a.y[1].abs())
    };
    if close(&left, &right) {
        return Ok(vec![right]);
    }
    let mut simplex = Simplex::new(region)?;
    let mut out = vec![left.clone()];
    refine(&mut simplex, m0, m1, &left, &right, &mut out, &close)?;
    out.push(right);
    Ok(out)
}

fn refine(
    simplex: &mut Simplex<f64>,
    m0: &[f64],
    m1: &[f64],
    a: &FrontierVertex,
    b: &FrontierVertex,
    out: &mut Vec<FrontierVertex>,
    close: &dyn Fn(&FrontierVertex, &FrontierVertex) -> bool,
) -> Result<(), SolveError> {
    let (u, v) = (a.y[1] - b.y[1], b.y[0] - a.y[0]);
    let c: Vec<f64> = m0.iter().zip(m1).map(|(p, q)| u * p + v * q).collect();
    let level = u * a.y[0] + v * a.y[1];
    let x = optimal(simplex.reoptimize(&c)?)?;
    let cand = FrontierVertex { y: [image(&x, m0), image(&x, m1)], x };
    let gain = u * cand.y[0] + v * cand.y[1] - level;
    if gain > 1e-9 * (1.0 + level.abs()) && !close(&cand, a) && !close(&cand, b) {
        refine(simplex, m0, m1, a, &cand, out, close)?;
        out.push(cand.clone());
        refine(simplex, m0, m1, &cand, b, out, close)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_with_cut_corner() {
        // 0 <= x, y <= 2 and x + y <= 3: the frontier is the edge (1,2)-(2,1).
        let mut p = LpProblem::<f64>::new(2);
        p.set_bounds(0, 0.0, Some(2.0));
        p.set_bounds(1, 0.0, Some(2.0));
        p.add_constraint(vec![1.0, 1.0], Relation::Le, 3.0);
        let f = pareto_frontier_2d(&p, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let ys: Vec<[f64; 2]> = f.iter().map(|v| v.y).collect();
        assert_eq!(ys.len(), 2);
        assert!((ys[0][0] - 1.0).abs() < 1e-9 && (ys[0][1] - 2.0).abs() < 1e-9);
        assert!((ys[1][0] - 2.0).abs() < 1e-9 && (ys[1][1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn many_facets() {
        // Frontier of the polygon cut by tangents of the unit quarter circle.
        let mut p = LpProblem::<f64>::new(2);
        let n = 7;
        for i in 0..=n {
            let t = std::f64::consts::FRAC_PI_2 * i as f64 / n as f64;
            p.add_constraint(vec![t.cos(), t.sin()], Relation::Le, 1.0);
        }
        let f = pareto_frontier_2d(&p, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(f.len(), n);
        assert!(f.windows(2).all(|w| w[0].y[0] < w[1].y[0] && w[0].y[1] > w[1].y[1]));
    }
}
