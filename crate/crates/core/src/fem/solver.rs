use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::{Error, Result};

/// Relative residual accepted after refinement.
pub const RESIDUAL_TOL: f64 = 1e-9;
const MAX_REFINEMENTS: usize = 3;

/// Square sparse system in compressed column form.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: SparseColMat<usize, f64>,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn from_triplets(n: usize, entries: &[Triplet<usize, usize, f64>], rhs: Vec<f64>) -> Result<Self> {
        if rhs.len() != n {
            return Err(Error::Solver(format!("rhs length {} != dimension {n}", rhs.len())));
        }
        let matrix = SparseColMat::try_new_from_triplets(n, n, entries)
            .map_err(|e| Error::Solver(format!("sparse assembly: {e:?}")))?;
        Ok(Self { matrix, rhs })
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// `A x`, computed from the stored columns.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let m = &self.matrix;
        let mut y = vec![0.0; m.nrows()];
        let col_ptr = m.symbolic().col_ptr();
        let row_idx = m.symbolic().row_idx();
        let val = m.val();
        for j in 0..m.ncols() {
            for k in col_ptr[j]..col_ptr[j + 1] {
                y[row_idx[k]] += val[k] * x[j];
            }
        }
        y
    }

    /// `|A x - b| / max(|b|, |A| |x|)` in the max norm.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let ax = self.apply(x);
        let r = ax.iter().zip(&self.rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let b = self.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let xs = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let a = self.matrix.val().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = b.max(a * xs);
        if scale == 0.0 {
            0.0
        } else {
            r / scale
        }
    }
}

/// Sparse LU driver that reuses the symbolic factorization while the
/// sparsity pattern is unchanged.
#[derive(Default)]
pub struct LuSolver {
    cache: Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>,
    /// Symbolic factorizations computed so far.
    pub symbolic_count: usize,
}

/// Result of one solve with its diagnostics.
#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    pub residual: f64,
    pub refinements: usize,
}

impl LuSolver {
    pub fn new() -> Self {
        Self::default()
    }

    fn symbolic(&mut self, m: &SparseColMat<usize, f64>) -> Result<SymbolicLu<usize>> {
        let s = m.symbolic();
        if let Some((cp, ri, sym)) = &self.cache {
            if cp.as_slice() == s.col_ptr() && ri.as_slice() == s.row_idx() {
                return Ok(sym.clone());
            }
        }
        let sym = SymbolicLu::try_new(s).map_err(|e| Error::Solver(format!("symbolic LU: {e:?}")))?;
        self.symbolic_count += 1;
        self.cache = Some((s.col_ptr().to_vec(), s.row_idx().to_vec(), sym.clone()));
        Ok(sym)
    }

    /// Solves with LU and iterative refinement; fails if the relative
    /// residual stays above [`RESIDUAL_TOL`].
    pub fn solve(&mut self, sys: &SparseSystem) -> Result<Solution> {
        let n = sys.dim();
        if n == 0 {
            return Ok(Solution { x: Vec::new(), residual: 0.0, refinements: 0 });
        }
        let sym = self.symbolic(&sys.matrix)?;
        let lu = Lu::try_new_with_symbolic(sym, sys.matrix.as_ref())
            .map_err(|e| Error::Solver(format!("numeric LU: {e:?}")))?;
        let b = Mat::from_fn(n, 1, |i, _| sys.rhs[i]);
        let sol = lu.solve(&b);
        let mut x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("LU produced non-finite values (singular system)".into()));
        }
        let mut residual = sys.relative_residual(&x);
        let mut refinements = 0;
        while residual > RESIDUAL_TOL * 1e-3 && refinements < MAX_REFINEMENTS {
            let ax = sys.apply(&x);
            let r = Mat::from_fn(n, 1, |i, _| sys.rhs[i] - ax[i]);
            let dx = lu.solve(&r);
            let trial: Vec<f64> = (0..n).map(|i| x[i] + dx[(i, 0)]).collect();
            let res = sys.relative_residual(&trial);
            refinements += 1;
            if res < residual {
                x = trial;
                residual = res;
            } else {
                break;
            }
        }
        if !(residual <= RESIDUAL_TOL) {
            return Err(Error::Solver(format!(
                "relative residual {residual:.3e} after {refinements} refinement(s) exceeds {RESIDUAL_TOL:.0e}"
            )));
        }
        Ok(Solution { x, residual, refinements })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_saddle(n: usize, m: usize, seed: u64) -> (Vec<Triplet<usize, usize, f64>>, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dense = DMatrix::zeros(n + m, n + m);
        for i in 0..n {
            dense[(i, i)] = 4.0 + rng.gen::<f64>();
            if i + 1 < n {
                let v = rng.gen_range(-1.0..1.0);
                dense[(i, i + 1)] = v;
                dense[(i + 1, i)] = v;
            }
        }
        for p in 0..m {
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                let v = rng.gen_range(-1.0..1.0);
                dense[(n + p, j)] += v;
                dense[(j, n + p)] += v;
            }
            dense[(n + p, p * n / m)] += 1.0;
            dense[(p * n / m, n + p)] += 1.0;
        }
        let mut t = Vec::new();
        for i in 0..n + m {
            for j in 0..n + m {
                if dense[(i, j)] != 0.0 {
                    t.push(Triplet::new(i, j, dense[(i, j)]));
                }
            }
        }
        (t, dense)
    }

    #[test]
    fn matches_dense_solve_on_saddle_system() {
        let (t, dense) = random_saddle(40, 8, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rhs: Vec<f64> = (0..48).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sys = SparseSystem::from_triplets(48, &t, rhs.clone()).unwrap();
        let sol = LuSolver::new().solve(&sys).unwrap();
        let oracle = dense.lu().solve(&DVector::from_vec(rhs)).unwrap();
        for i in 0..48 {
            assert!((sol.x[i] - oracle[i]).abs() < 1e-10);
        }
        assert!(sol.residual <= RESIDUAL_TOL);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let (t, _) = random_saddle(20, 4, 5);
        let sys = SparseSystem::from_triplets(24, &t, vec![0.0; 24]).unwrap();
        let sol = LuSolver::new().solve(&sys).unwrap();
        assert!(sol.x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn symbolic_factorization_reused_for_same_pattern() {
        let (t, _) = random_saddle(20, 4, 5);
        let scaled: Vec<_> = t.iter().map(|e| Triplet::new(e.row, e.col, 2.0 * e.val)).collect();
        let mut solver = LuSolver::new();
        solver.solve(&SparseSystem::from_triplets(24, &t, vec![1.0; 24]).unwrap()).unwrap();
        solver.solve(&SparseSystem::from_triplets(24, &scaled, vec![1.0; 24]).unwrap()).unwrap();
        assert_eq!(solver.symbolic_count, 1);
    }

    #[test]
    fn singular_system_reported() {
        let t = vec![Triplet::new(0, 0, 1.0), Triplet::new(1, 0, 1.0), Triplet::new(0, 1, 1.0), Triplet::new(1, 1, 1.0)];
        let sys = SparseSystem::from_triplets(2, &t, vec![1.0, 0.0]).unwrap();
        assert!(matches!(LuSolver::new().solve(&sys), Err(Error::Solver(_))));
    }
}
