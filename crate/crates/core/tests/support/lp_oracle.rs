//! Exact LP oracle: enumerate every basic solution of a small bounded LP in
//! rational arithmetic and keep the best feasible one.

use netq_core::scalar::Scalar;
use netq_core::solve::{LpProblem, Relation};
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use rand::Rng;

pub type Q = Ratio<i128>;

#[derive(Clone, Debug)]
pub struct SmallLp {
    pub c: Vec<i64>,
    /// (coefficients, relation: -1 for <=, 0 for =, 1 for >=, rhs)
    pub rows: Vec<(Vec<i64>, i8, i64)>,
    pub upper: Vec<Option<i64>>,
}

fn q(v: i64) -> Q {
    Q::from_integer(v as i128)
}

fn solve_square(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Option<Vec<Q>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col];
        for v in &mut a[col][col..n] {
            *v /= p;
        }
        b[col] /= p;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                let pivot_row = a[col].clone();
                for (v, t) in a[r][col..n].iter_mut().zip(&pivot_row[col..n]) {
                    *v -= f * *t;
                }
                let t = b[col];
                b[r] -= f * t;
            }
        }
    }
    Some(b)
}

fn feasible(lp: &SmallLp, x: &[Q]) -> bool {
    for (j, xj) in x.iter().enumerate() {
        if xj.is_negative() {
            return false;
        }
        if let Some(u) = lp.upper[j] {
            if *xj > q(u) {
                return false;
            }
        }
    }
    lp.rows.iter().all(|(a, rel, b)| {
        let lhs: Q = a.iter().zip(x).map(|(ai, xi)| q(*ai) * xi).sum();
        match rel {
            -1 => lhs <= q(*b),
            0 => lhs == q(*b),
            _ => lhs >= q(*b),
        }
    })
}

/// Best objective over all feasible basic solutions, or `None` when empty.
/// The caller guarantees the region is bounded.
pub fn best_vertex(lp: &SmallLp) -> Option<(Q, Vec<Q>)> {
    let n = lp.c.len();
    let mut planes: Vec<(Vec<Q>, Q)> = Vec::new();
    for (a, _, b) in &lp.rows {
        planes.push((a.iter().map(|v| q(*v)).collect(), q(*b)));
    }
    for j in 0..n {
        let mut e = vec![Q::zero(); n];
        e[j] = Q::one();
        planes.push((e.clone(), Q::zero()));
        if let Some(u) = lp.upper[j] {
            planes.push((e, q(u)));
        }
    }
    let mut best: Option<(Q, Vec<Q>)> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    let m = planes.len();
    if m < n {
        return None;
    }
    loop {
        let a = pick.iter().map(|&i| planes[i].0.clone()).collect();
        let b = pick.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(lp, &x) {
                let v: Q = lp.c.iter().zip(&x).map(|(c, xi)| q(*c) * xi).sum();
                if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                    best = Some((v, x));
                }
            }
        }
        // Next n-combination of 0..m in lexicographic order.
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < m - n + i {
                pick[i] += 1;
                for k in i + 1..n {
                    pick[k] = pick[k - 1] + 1;
                }
                break;
            }
        }
    }
}

pub fn to_problem<T: Scalar>(lp: &SmallLp) -> LpProblem<T> {
    let f = |v: i64| T::from_f64_lossy(v as f64);
    let mut p = LpProblem::new(lp.c.len()).with_objective(lp.c.iter().map(|&v| f(v)).collect());
    for (a, rel, b) in &lp.rows {
        let rel = match rel {
            -1 => Relation::Le,
            0 => Relation::Eq,
            _ => Relation::Ge,
        };
        p.add_constraint(a.iter().map(|&v| f(v)).collect(), rel, f(*b));
    }
    for (j, u) in lp.upper.iter().enumerate() {
        p.set_bounds(j, T::zero(), u.map(f));
    }
    p
}

/// Random bounded LP with at most 6 variables and 6 rows, the last a covering row.
pub fn random_lp<R: Rng>(rng: &mut R) -> SmallLp {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(0..=5);
    let c = (0..n).map(|_| rng.random_range(-6..=6)).collect();
    let mut rows: Vec<(Vec<i64>, i8, i64)> = (0..m)
        .map(|_| {
            let a = (0..n).map(|_| rng.random_range(-5..=5)).collect();
            let rel = [-1, -1, -1, 0, 1, 1][rng.random_range(0..6)];
            (a, rel, rng.random_range(-6..=20))
        })
        .collect();
    rows.push((vec![1; n], -1, 25));
    let upper = (0..n).map(|_| rng.random_bool(0.4).then(|| rng.random_range(1..=10))).collect();
    SmallLp { c, rows, upper }
}
