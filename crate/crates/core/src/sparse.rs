//! Sparse symmetric positive definite systems: CSR storage, reverse
//! Cuthill-McKee ordering, envelope Cholesky and Jacobi-preconditioned CG.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{KahanSum, Real};

/// Square CSR matrix with a fixed sparsity pattern (both triangles stored).
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Zero matrix with the given per-row column sets (sorted and deduplicated here).
    pub fn from_pattern(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let values = vec![T::zero(); col_idx.len()];
        Self { n, row_ptr, col_idx, values }
    }

    /// Dense input, keeping exact nonzeros and the diagonal.
    pub fn from_dense(a: &[Vec<T>]) -> Self {
        let rows = a
            .iter()
            .enumerate()
            .map(|(i, r)| (0..r.len()).filter(|&j| j == i || r[j] != T::zero()).collect())
            .collect();
        let mut m = Self::from_pattern(rows);
        for (i, r) in a.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != T::zero() {
                    m.add(i, j, v);
                }
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (cols, _) = self.row(i);
        cols.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    /// Adds `v` at `(i, j)`; panics if the entry is outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self.position(i, j).unwrap_or_else(|| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[k] = self.values[k] + v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.position(i, j).map_or(T::zero(), |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).collect::<KahanSum<T>>().value()
            })
            .collect()
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        let mut scale = T::zero();
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                scale = scale.max(v.abs());
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        if scale > T::zero() {
            worst / scale
        } else {
            T::zero()
        }
    }

    /// `P A Pᵀ` where `order[new] = old`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut inv = vec![0; self.n];
        for (new, &old) in order.iter().enumerate() {
            inv[old] = new;
        }
        let rows = order.iter().map(|&old| self.row(old).0.iter().map(|&j| inv[j]).collect()).collect();
        let mut out = Self::from_pattern(rows);
        for (new, &old) in order.iter().enumerate() {
            let (cols, vals) = self.row(old);
            for (&j, &v) in cols.iter().zip(vals) {
                out.add(new, inv[j], v);
            }
        }
        out
    }
}

fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).collect::<KahanSum<T>>().value().sqrt()
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).collect::<KahanSum<T>>().value()
}

/// Reverse Cuthill-McKee ordering of a symmetric pattern; `order[new] = old`.
pub fn reverse_cuthill_mckee<T: Real>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.n();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut head = order.len();
        order.push(start);
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut next: Vec<usize> = a.row(v).0.iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order
}

/// Lower-triangular envelope (skyline) Cholesky factor, row storage.
#[derive(Debug, Clone)]
pub struct SkylineCholesky<T> {
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> SkylineCholesky<T> {
    /// Factors `A = L Lᵀ`; fails if `A` is not numerically positive definite.
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.n();
        let mut first = Vec::with_capacity(n);
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            let f = a.row(i).0.first().copied().unwrap_or(i).min(i);
            first.push(f);
            start.push(start[i] + (i - f + 1));
        }
        let mut values = vec![T::zero(); start[n]];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    values[start[i] + j - first[i]] = v;
                }
            }
        }
        let mut s = Self { first, start, values };
        s.decompose()?;
        Ok(s)
    }

    fn at(&self, i: usize, j: usize) -> T {
        if j < self.first[i] {
            T::zero()
        } else {
            self.values[self.start[i] + j - self.first[i]]
        }
    }

    fn decompose(&mut self) -> Result<()> {
        let n = self.first.len();
        let mut max_diag = T::zero();
        for i in 0..n {
            max_diag = max_diag.max(self.at(i, i).abs());
        }
        let tiny = max_diag * T::epsilon() * T::lit(8.0);
        for i in 0..n {
            let fi = self.first[i];
            for j in fi..i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                let mut acc = KahanSum::new();
                for k in k0..j {
                    acc.add(self.at(i, k) * self.at(j, k));
                }
                let lij = (self.at(i, j) - acc.value()) / self.at(j, j);
                self.values[self.start[i] + j - fi] = lij;
            }
            let mut acc = KahanSum::new();
            for k in fi..i {
                let l = self.at(i, k);
                acc.add(l * l);
            }
            let d = self.at(i, i) - acc.value();
            if !(d > tiny) || !d.is_finite() {
                return Err(Error::Assembly(format!(
                    "matrix is not positive definite (pivot {i} = {d:e}); check Dirichlet constraints"
                )));
            }
            self.values[self.start[i + 1] - 1] = d.sqrt();
        }
        Ok(())
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.first.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut acc = KahanSum::new();
            for k in self.first[i]..i {
                acc.add(self.at(i, k) * y[k]);
            }
            y[i] = (y[i] - acc.value()) / self.at(i, i);
        }
        for i in (0..n).rev() {
            y[i] = y[i] / self.at(i, i);
            let xi = y[i];
            for k in self.first[i]..i {
                y[k] = y[k] - self.at(i, k) * xi;
            }
        }
        y
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }
}

/// Linear solver choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearSolver {
    /// RCM-ordered envelope Cholesky.
    #[default]
    Direct,
    /// Conjugate gradients with a diagonal preconditioner.
    Cg,
}

/// Solution statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// `‖A x − b‖ / ‖b‖` (zero for a zero right-hand side).
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients from a zero start.
pub fn conjugate_gradient<T: Real>(a: &CsrMatrix<T>, b: &[T], tol: T, max_iter: usize) -> Result<(Vec<T>, usize)> {
    let n = a.n();
    let bnorm = norm2(b);
    let mut x = vec![T::zero(); n];
    if bnorm == T::zero() {
        return Ok((x, 0));
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > T::zero())) {
        return Err(Error::Assembly(format!("non-positive diagonal entry at row {i}")));
    }
    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(&diag).map(|(&r, &d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if pap == T::zero() {
            // Search direction underflowed: the tolerance is below what the
            // arithmetic can resolve.
            let res = norm2(&r) / bnorm;
            return Err(Error::NoConvergence {
                solver: "conjugate gradient",
                iterations: it,
                residual: res.to_f64_lossy(),
            });
        }
        if !(pap > T::zero()) {
            return Err(Error::Assembly(format!("matrix is not positive definite (pᵀAp = {pap:e})")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        let res = norm2(&r) / bnorm;
        // An exactly zero residual also ends the iteration: the next search
        // direction would vanish.
        if res <= tol || res == T::zero() {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = norm2(&r) / bnorm;
    Err(Error::NoConvergence { solver: "conjugate gradient", iterations: max_iter, residual: res.to_f64_lossy() })
}

/// Solves `A x = b` with the chosen method and reports the true residual.
pub fn solve<T: Real>(a: &CsrMatrix<T>, b: &[T], method: LinearSolver, tol: T) -> Result<(Vec<T>, SolveStats)> {
    let (x, iterations) = match method {
        LinearSolver::Direct => {
            let order = reverse_cuthill_mckee(a);
            let pa = a.permuted(&order);
            let chol = SkylineCholesky::factor(&pa)?;
            let pb: Vec<T> = order.iter().map(|&o| b[o]).collect();
            let px = chol.solve(&pb);
            let mut x = vec![T::zero(); a.n()];
            for (new, &old) in order.iter().enumerate() {
                x[old] = px[new];
            }
            (x, 1)
        }
        LinearSolver::Cg => conjugate_gradient(a, b, tol, 20 * a.n().max(10))?,
    };
    let stats = SolveStats { iterations, relative_residual: residual(a, &x, b).to_f64_lossy() };
    Ok((x, stats))
}

/// `‖A x − b‖ / ‖b‖`.
pub fn residual<T: Real>(a: &CsrMatrix<T>, x: &[T], b: &[T]) -> T {
    let bn = norm2(b);
    if bn == T::zero() {
        return norm2(x);
    }
    let ax = a.mul_vec(x);
    let r: Vec<T> = ax.iter().zip(b).map(|(&p, &q)| p - q).collect();
    norm2(&r) / bn
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// 1D Laplacian with Dirichlet ends, scrambled so RCM has work to do.
    fn laplacian(n: usize, scramble: bool) -> CsrMatrix<f64> {
        let perm: Vec<usize> = if scramble { (0..n).map(|i| (i * 7) % n).collect() } else { (0..n).collect() };
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            dense[perm[i]][perm[i]] = 2.0;
            if i + 1 < n {
                dense[perm[i]][perm[i + 1]] = -1.0;
                dense[perm[i + 1]][perm[i]] = -1.0;
            }
        }
        CsrMatrix::from_dense(&dense)
    }

    #[test]
    fn rcm_shrinks_envelope() {
        let a = laplacian(50, true);
        let plain = SkylineCholesky::factor(&a).unwrap().envelope_size();
        let order = reverse_cuthill_mckee(&a);
        let reordered = SkylineCholesky::factor(&a.permuted(&order)).unwrap().envelope_size();
        assert!(reordered < plain / 4, "{reordered} vs {plain}");
        assert_eq!(reordered, 2 * 50 - 1);
    }

    #[test]
    fn direct_and_cg_agree() {
        let a = laplacian(40, true);
        let b: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let (x1, s1) = solve(&a, &b, LinearSolver::Direct, 1e-12).unwrap();
        let (x2, s2) = solve(&a, &b, LinearSolver::Cg, 1e-12).unwrap();
        assert!(s1.relative_residual < 1e-13);
        assert!(s2.relative_residual < 1e-11);
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_matrix_is_an_assembly_error() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(SkylineCholesky::factor(&a), Err(Error::Assembly(_))));
    }

    #[test]
    fn works_in_f32() {
        let dense = vec![vec![4.0f32, 1.0], vec![1.0, 3.0]];
        let a = CsrMatrix::from_dense(&dense);
        let (x, _) = solve(&a, &[1.0, 2.0], LinearSolver::Direct, 1e-6).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-6 && (x[1] - 7.0 / 11.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn random_spd_systems(seed in prop::collection::vec(-1.0..1.0f64, 36), rhs in prop::collection::vec(-1.0..1.0f64, 6)) {
            // A = Mᵀ M + I is SPD.
            let m: Vec<Vec<f64>> = seed.chunks(6).map(|c| c.to_vec()).collect();
            let mut dense = vec![vec![0.0; 6]; 6];
            for i in 0..6 {
                for j in 0..6 {
                    dense[i][j] = (0..6).map(|k| m[k][i] * m[k][j]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
                }
            }
            let a = CsrMatrix::from_dense(&dense);
            let (_, s) = solve(&a, &rhs, LinearSolver::Direct, 1e-12).unwrap();
            prop_assert!(s.relative_residual < 1e-12);
            let (_, s) = solve(&a, &rhs, LinearSolver::Cg, 1e-12).unwrap();
            prop_assert!(s.relative_residual < 1e-11);
        }
    }
}
