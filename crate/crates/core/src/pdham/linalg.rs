//! Exact linear algebra over the rational-function field of atom keys.
//! Elimination keeps every entry in canonical form; each pivot is recorded,
//! and the product of the nonconstant pivots is the genericity certificate:
//! the computed rank is valid wherever none of them vanish.

use crate::symexpr::normal::{ratfunc_to_expr, to_ratfunc, NormError, RatFunc};
use crate::symexpr::{is_zero, Expr, Verdict};

#[derive(thiserror::Error, Debug, Clone)]
pub enum LinError {
    #[error("rank is indeterminate: cannot decide whether `{0}` vanishes")]
    Indeterminate(String),
    #[error("entry outside the rational-function class: {0}")]
    Norm(#[from] NormError),
}

/// Reduced row echelon solve of `A x = b` in one pass.
#[derive(Clone, Debug)]
pub struct LinSolution {
    /// One value per column, with every free variable set to zero. Solves
    /// the system exactly when all `conditions` vanish.
    pub particular: Vec<Expr>,
    /// Basis of the homogeneous solution space.
    pub nullspace: Vec<Vec<Expr>>,
    /// Residuals of rows eliminated to zero coefficients; each must vanish
    /// for the system to be solvable.
    pub conditions: Vec<Expr>,
    /// Nonconstant pivots; the solution shape is valid off their zero loci.
    pub pivots: Vec<Expr>,
    /// Pivot decisions that relied on numeric sampling.
    pub notes: Vec<String>,
}

struct Echelon {
    rows: Vec<Vec<RatFunc>>,
    /// (column, row) per pivot, in elimination order
    pivot_cols: Vec<(usize, usize)>,
    free_cols: Vec<usize>,
    pivots: Vec<Expr>,
    notes: Vec<String>,
}

fn to_matrix(a: &[Vec<Expr>], b: Option<&[Expr]>) -> Result<Vec<Vec<RatFunc>>, LinError> {
    let mut rows = Vec::with_capacity(a.len());
    for (r, row) in a.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len() + 1);
        for e in row {
            out.push(to_ratfunc(e)?.canonical());
        }
        if let Some(rhs) = b {
            out.push(to_ratfunc(&rhs[r])?.canonical());
        }
        rows.push(out);
    }
    Ok(rows)
}

/// Classifies an entry as usable pivot, zero, or undecidable.
fn pivot_verdict(rf: &RatFunc) -> Verdict {
    if rf.num.is_zero() {
        return Verdict::Zero;
    }
    is_zero(&ratfunc_to_expr(rf))
}

/// Reduced row echelon form over the first `ncols` columns; any extra
/// column rides along as a right-hand side.
fn reduce(mut rows: Vec<Vec<RatFunc>>, ncols: usize) -> Result<Echelon, LinError> {
    let nrows = rows.len();
    let mut pivot_cols = Vec::new();
    let mut free_cols = Vec::new();
    let mut pivots = Vec::new();
    let mut notes = Vec::new();
    let mut next = 0usize;
    for c in 0..ncols {
        let mut chosen: Option<usize> = None;
        let mut fallback: Option<usize> = None;
        let mut undecided: Option<String> = None;
        for r in next..nrows {
            match pivot_verdict(&rows[r][c]) {
                Verdict::Nonzero => {
                    chosen = Some(r);
                    break;
                }
                Verdict::NonzeroNumeric => {
                    if fallback.is_none() {
                        fallback = Some(r);
                    }
                }
                Verdict::ZeroProbabilistic => {
                    notes.push(format!(
                        "treated `{}` as zero (numeric evidence only)",
                        ratfunc_to_expr(&rows[r][c]).to_text()
                    ));
                    rows[r][c] = RatFunc::zero();
                }
                Verdict::Unknown => {
                    if undecided.is_none() {
                        undecided = Some(ratfunc_to_expr(&rows[r][c]).to_text());
                    }
                }
                Verdict::Zero => {}
            }
        }
        let r = match (chosen, fallback, undecided) {
            (Some(r), _, _) => r,
            (None, Some(r), _) => {
                notes.push(format!(
                    "pivot `{}` nonzero by numeric evidence only",
                    ratfunc_to_expr(&rows[r][c]).to_text()
                ));
                r
            }
            (None, None, Some(entry)) => return Err(LinError::Indeterminate(entry)),
            (None, None, None) => {
                free_cols.push(c);
                continue;
            }
        };
        rows.swap(next, r);
        let pivot = rows[next][c].clone();
        pivots.push(ratfunc_to_expr(&pivot));
        let inv = pivot.inv()?;
        for e in rows[next].iter_mut() {
            *e = e.mul(&inv).canonical();
        }
        for r2 in 0..nrows {
            if r2 == next || rows[r2][c].is_zero() {
                continue;
            }
            let f = rows[r2][c].clone();
            for cc in 0..rows[r2].len() {
                let delta = f.mul(&rows[next][cc]);
                rows[r2][cc] = rows[r2][cc].sub(&delta).canonical();
            }
        }
        pivot_cols.push((c, next));
        next += 1;
    }
    Ok(Echelon { rows, pivot_cols, free_cols, pivots, notes })
}

fn nullspace_of(ech: &Echelon, ncols: usize) -> Vec<Vec<Expr>> {
    let mut basis = Vec::with_capacity(ech.free_cols.len());
    for &f in &ech.free_cols {
        let mut v = vec![Expr::zero(); ncols];
        v[f] = Expr::one();
        for &(c, r) in &ech.pivot_cols {
            v[c] = ratfunc_to_expr(&ech.rows[r][f].neg().canonical());
        }
        basis.push(v);
    }
    basis
}

fn constant_pivot(e: &Expr) -> bool {
    matches!(e, Expr::Rat(_))
}

/// Solves `A x = b` over the rational-function field.
pub fn solve_linear(a: &[Vec<Expr>], b: &[Expr]) -> Result<LinSolution, LinError> {
    assert_eq!(a.len(), b.len());
    let ncols = a.first().map(|r| r.len()).unwrap_or(0);
    let rows = to_matrix(a, Some(b))?;
    let ech = reduce(rows, ncols)?;
    let mut particular = vec![Expr::zero(); ncols];
    for &(c, r) in &ech.pivot_cols {
        particular[c] = ratfunc_to_expr(&ech.rows[r][ncols]);
    }
    let mut conditions = Vec::new();
    let rank = ech.pivot_cols.len();
    for r in rank..ech.rows.len() {
        let rf = ech.rows[r][ncols].clone().canonical();
        if !rf.is_zero() {
            conditions.push(ratfunc_to_expr(&rf));
        }
    }
    let nullspace = nullspace_of(&ech, ncols);
    let pivots = ech.pivots.into_iter().filter(|p| !constant_pivot(p)).collect();
    Ok(LinSolution { particular, nullspace, conditions, pivots, notes: ech.notes })
}

/// Nullspace basis of `A` with the genericity certificate.
pub fn nullspace(a: &[Vec<Expr>]) -> Result<(Vec<Vec<Expr>>, Vec<Expr>, Vec<String>), LinError> {
    let ncols = a.first().map(|r| r.len()).unwrap_or(0);
    let rows = to_matrix(a, None)?;
    let ech = reduce(rows, ncols)?;
    let basis = nullspace_of(&ech, ncols);
    let pivots = ech.pivots.into_iter().filter(|p| !constant_pivot(p)).collect();
    Ok((basis, pivots, ech.notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::normalize;

    fn sym(s: &str) -> Expr {
        Expr::sym(s)
    }

    #[test]
    fn invertible_system() {
        // [[1, a], [0, a]] x = (1, a) with symbolic a
        let a = vec![
            vec![Expr::one(), sym("a")],
            vec![Expr::zero(), sym("a")],
        ];
        let b = vec![Expr::one(), sym("a")];
        let sol = solve_linear(&a, &b).unwrap();
        assert!(sol.conditions.is_empty());
        assert!(sol.nullspace.is_empty());
        let x0 = Expr::one().sub(sym("a"));
        assert_eq!(normalize(&sol.particular[0].clone().sub(x0)), Expr::zero());
        assert_eq!(normalize(&sol.particular[1].clone().sub(Expr::one())), Expr::zero());
        // the symbolic pivot shows up in the certificate
        assert_eq!(sol.pivots.len(), 1);
    }

    #[test]
    fn deficient_rank_yields_condition_and_nullspace() {
        // rows proportional: second row minus a*first is the condition
        let a = vec![
            vec![Expr::one(), sym("u")],
            vec![sym("a"), Expr::mul(vec![sym("a"), sym("u")])],
        ];
        let b = vec![sym("p"), sym("q")];
        let sol = solve_linear(&a, &b).unwrap();
        assert_eq!(sol.nullspace.len(), 1);
        assert_eq!(sol.conditions.len(), 1);
        let want = sym("q").sub(Expr::mul(vec![sym("a"), sym("p")]));
        assert_eq!(normalize(&sol.conditions[0].clone().sub(want)), Expr::zero());
        // nullspace vector satisfies A v = 0
        let v = &sol.nullspace[0];
        for row in &a {
            let dot = Expr::add(
                row.iter().zip(v).map(|(c, x)| Expr::mul(vec![c.clone(), x.clone()])).collect(),
            );
            assert_eq!(normalize(&dot), Expr::zero());
        }
    }

    #[test]
    fn zero_columns_are_free() {
        let a = vec![vec![Expr::zero(), Expr::one()]];
        let b = vec![sym("r")];
        let sol = solve_linear(&a, &b).unwrap();
        assert_eq!(sol.nullspace.len(), 1);
        assert!(sol.conditions.is_empty());
        assert_eq!(normalize(&sol.particular[1].clone().sub(sym("r"))), Expr::zero());
    }

    #[test]
    fn empty_matrix() {
        let (basis, pivots, _) = nullspace(&[]).unwrap();
        assert!(basis.is_empty());
        assert!(pivots.is_empty());
    }
}
