//! Discrete residual of the coupled HJB / Fokker–Planck system along the
//! homotopy, its exact Jacobian as a bordered sparse matrix, and the sparse
//! linear solve used by Newton.
//!
//! Unknowns are ordered `(u_0..u_{N-1}, m_0..m_{N-1}, H̄)`. Rows are ordered
//! the same way: FP rows (row 0 replaced by the mass constraint), HJB rows,
//! then the mean-zero row for `u`.

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::coupling::Coupling;
use crate::error::{MfgError, Result};
use crate::grid::{
    divergence, gradient, integrate, laplacian, ScalarField, TorusGrid, VectorField,
};
use crate::hamiltonian::{LambdaFamily, Mat3, Vec3};

/// A point `(u, m, H̄)` of the discrete system at homotopy parameter `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: ScalarField,
    pub m: ScalarField,
    pub hbar: f64,
    pub lambda: f64,
}

impl Solution {
    pub fn new(u: ScalarField, m: ScalarField, hbar: f64, lambda: f64) -> Result<Self> {
        if u.grid() != m.grid() {
            return Err(MfgError::GridMismatch);
        }
        Ok(Self { u, m, hbar, lambda })
    }

    pub fn grid(&self) -> &TorusGrid {
        self.u.grid()
    }

    /// Flattened unknown vector `(u, m, H̄)`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 * self.grid().len() + 1);
        x.extend_from_slice(self.u.values());
        x.extend_from_slice(self.m.values());
        x.push(self.hbar);
        x
    }

    /// `self + s * delta` with `delta` in unknown ordering.
    pub fn stepped(&self, delta: &[f64], s: f64) -> Solution {
        let n = self.grid().len();
        let mut out = self.clone();
        for (v, d) in out.u.values_mut().iter_mut().zip(&delta[..n]) {
            *v += s * d;
        }
        for (v, d) in out.m.values_mut().iter_mut().zip(&delta[n..2 * n]) {
            *v += s * d;
        }
        out.hbar += s * delta[2 * n];
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    /// `Δm - div(D_pH_λ(x, Du) m)` at every node.
    pub fp: Vec<f64>,
    /// `Δu + H_λ(x, Du) - g(m) - H̄` at every node.
    pub hjb: Vec<f64>,
    /// `1 - ∫m`.
    pub mass_gap: f64,
    /// `∫u`.
    pub mean_u: f64,
}

impl ResidualVector {
    pub fn sup_norm(&self) -> f64 {
        self.fp
            .iter()
            .chain(&self.hjb)
            .chain([&self.mass_gap, &self.mean_u])
            .fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    /// Residual in Jacobian row ordering: FP row 0 is replaced by `∫m - 1`.
    pub fn constrained(&self) -> Vec<f64> {
        let n = self.fp.len();
        let mut r = Vec::with_capacity(2 * n + 1);
        r.push(-self.mass_gap);
        r.extend_from_slice(&self.fp[1..]);
        r.extend_from_slice(&self.hjb);
        r.push(self.mean_u);
        r
    }
}

/// Drift `D_pH_λ(x, Du(x))` at every node.
pub fn drift(fam: &LambdaFamily<'_>, du: &VectorField) -> Vec<Vec3> {
    (0..du.grid().len())
        .map(|i| fam.eval_dp_h(i, &du.at(i)))
        .collect()
}

fn check_inputs(fam: &LambdaFamily<'_>, v: &Solution) -> Result<()> {
    if fam.grid() != v.grid() {
        return Err(MfgError::GridMismatch);
    }
    Ok(())
}

fn positivity_check(c: &Coupling, v: &Solution) -> Result<()> {
    let min_m = v.m.min();
    if !(min_m > 0.0) {
        return Err(MfgError::Positivity { min_m, floor: 0.0 });
    }
    c.check_density(v.m.values())
}

pub fn residual(fam: &LambdaFamily<'_>, c: &Coupling, v: &Solution) -> Result<ResidualVector> {
    check_inputs(fam, v)?;
    positivity_check(c, v)?;
    let grid = *v.grid();
    let du = gradient(&v.u);
    let lap_u = laplacian(&v.u);
    let lap_m = laplacian(&v.m);
    let b = drift(fam, &du);
    let m = v.m.values();

    let mut hjb = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        hjb.push(lap_u.values()[i] + fam.eval_h(i, &du.at(i)) - c.g(m[i])? - v.hbar);
    }

    let flux = VectorField::new(
        (0..grid.dim())
            .map(|axis| {
                ScalarField::new(grid, (0..grid.len()).map(|i| b[i][axis] * m[i]).collect())
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let div = divergence(&flux);
    let fp = lap_m
        .values()
        .iter()
        .zip(div.values())
        .map(|(l, d)| l - d)
        .collect();

    Ok(ResidualVector {
        fp,
        hjb,
        mass_gap: 1.0 - integrate(&v.m),
        mean_u: integrate(&v.u),
    })
}

/// Square sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    order: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl JacobianMatrix {
    /// Builds from `(row, col, value)` entries; duplicates are summed.
    pub fn from_triplets(order: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        if entries.iter().any(|&(r, c, _)| r >= order || c >= order) {
            return Err(MfgError::InvalidParameter(
                "matrix entry out of range".into(),
            ));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; order + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..order {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            order,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(order: usize) -> Self {
        Self {
            order,
            row_ptr: (0..=order).collect(),
            col_idx: (0..order).collect(),
            values: vec![1.0; order],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of a row, sorted by column.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.order)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> = (0..self.order)
            .flat_map(|r| self.row(r).map(move |(c, v)| Triplet::new(r, c, v)))
            .collect();
        SparseColMat::try_new_from_triplets(self.order, self.order, &triplets)
            .map_err(|e| MfgError::LinearSolve(format!("matrix assembly: {e:?}")))
    }
}

/// Exact derivative of [`ResidualVector::constrained`] with respect to `(u, m, H̄)`.
pub fn assemble_jacobian(
    fam: &LambdaFamily<'_>,
    c: &Coupling,
    v: &Solution,
) -> Result<JacobianMatrix> {
    check_inputs(fam, v)?;
    positivity_check(c, v)?;
    let grid = *v.grid();
    let dim = grid.dim();
    let n = grid.len();
    let order = 2 * n + 1;
    let inv2h = 0.5 / grid.h();
    let invh2 = 1.0 / (grid.h() * grid.h());
    let cell = grid.cell_volume();
    let m = v.m.values();

    let du = gradient(&v.u);
    let b = drift(fam, &du);
    let hess: Vec<Mat3> = (0..n).map(|i| fam.eval_dpp_h(i, &du.at(i))).collect();

    let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(n * (8 * dim * dim + 6 * dim + 8));

    // FP rows; row 0 carries the mass constraint instead
    for j in 0..n {
        t.push((0, n + j, cell));
    }
    for x in 1..n {
        t.push((x, n + x, -2.0 * dim as f64 * invh2));
        for a in 0..dim {
            for (sign, y) in [(1.0, grid.shift(x, a, 1)), (-1.0, grid.shift(x, a, -1))] {
                // Laplacian and transport of δm
                t.push((x, n + y, invh2 - sign * inv2h * b[y][a]));
                // -div(m D²_pp H D δu)
                for jx in 0..dim {
                    let s = -sign * inv2h * m[y] * hess[y][a][jx] * inv2h;
                    if s != 0.0 {
                        t.push((x, grid.shift(y, jx, 1), s));
                        t.push((x, grid.shift(y, jx, -1), -s));
                    }
                }
            }
        }
    }

    // HJB rows
    for x in 0..n {
        let row = n + x;
        t.push((row, x, -2.0 * dim as f64 * invh2));
        for a in 0..dim {
            t.push((row, grid.shift(x, a, 1), invh2 + inv2h * b[x][a]));
            t.push((row, grid.shift(x, a, -1), invh2 - inv2h * b[x][a]));
        }
        t.push((row, n + x, -c.g_prime(m[x])?));
        t.push((row, 2 * n, -1.0));
    }

    for j in 0..n {
        t.push((2 * n, j, cell));
    }

    JacobianMatrix::from_triplets(order, t)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

/// Sparse LU solve with up to two rounds of iterative refinement.
///
/// Succeeds only if `‖Jx - rhs‖_∞ <= max(1e-10, 1e-10 ‖rhs‖_∞)`.
pub fn solve_linear(j: &JacobianMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != j.order() {
        return Err(MfgError::LinearSolve(format!(
            "right-hand side has length {}, matrix order is {}",
            rhs.len(),
            j.order()
        )));
    }
    let mat = j.to_faer()?;
    let lu = mat
        .sp_lu()
        .map_err(|e| MfgError::LinearSolve(format!("factorization: {e:?}")))?;
    let solve = |b: &[f64]| -> Vec<f64> {
        let col = faer::Col::from_fn(b.len(), |i| b[i]);
        let x = lu.solve(&col);
        (0..b.len()).map(|i| x[i]).collect()
    };

    let tol = 1e-10_f64.max(1e-10 * sup(rhs));
    let mut x = solve(rhs);
    let mut res_norm = f64::INFINITY;
    for round in 0..3 {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(MfgError::LinearSolve(
                "non-finite solution (singular matrix)".into(),
            ));
        }
        let ax = j.matvec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        res_norm = sup(&r);
        if res_norm <= tol {
            return Ok(x);
        }
        if round < 2 {
            let dx = solve(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
    }
    Err(MfgError::LinearSolve(format!(
        "residual {res_norm:e} above tolerance {tol:e} (ill-conditioned)"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{TorusGrid, MAX_DIM};
    use crate::hamiltonian::HamiltonianSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn constant_solution(grid: TorusGrid, hbar: f64, lambda: f64) -> Solution {
        Solution::new(grid.zeros(), grid.constant(1.0), hbar, lambda).unwrap()
    }

    #[test]
    fn lambda_zero_trivial_solution() {
        let g = TorusGrid::new(2, 8).unwrap();
        let spec = HamiltonianSpec::new(
            1.7,
            g.sample(|x| 1.0 + 0.5 * (2.0 * PI * x[0]).sin()),
            g.sample(|x| (2.0 * PI * x[1]).cos()),
        )
        .unwrap();
        let fam = spec.at(0.0).unwrap();
        for c in [Coupling::Log, Coupling::power(0.7).unwrap()] {
            let v = constant_solution(g, 1.0 - c.g(1.0).unwrap(), 0.0);
            assert!(residual(&fam, &c, &v).unwrap().sup_norm() <= 1e-14);
        }
    }

    #[test]
    fn constant_coefficients_any_lambda() {
        let g = TorusGrid::new(1, 16).unwrap();
        let (a, vv) = (2.5, -0.75);
        let spec = HamiltonianSpec::new(2.4, g.constant(a), g.constant(vv)).unwrap();
        let c = Coupling::power(0.5).unwrap();
        for lambda in [0.0, 0.3, 1.0] {
            let fam = spec.at(lambda).unwrap();
            let hbar = lambda * (a + vv) + (1.0 - lambda) - 1.0;
            let r = residual(&fam, &c, &constant_solution(g, hbar, lambda)).unwrap();
            assert!(r.sup_norm() <= 1e-14);
        }
    }

    #[test]
    fn positivity_is_enforced() {
        let g = TorusGrid::new(1, 8).unwrap();
        let spec = HamiltonianSpec::new(2.0, g.constant(1.0), g.zeros()).unwrap();
        let fam = spec.at(1.0).unwrap();
        let mut m = g.constant(1.0);
        m.values_mut()[3] = 1e-15;
        let v = Solution::new(g.zeros(), m, 0.0, 1.0).unwrap();
        assert!(matches!(
            residual(&fam, &Coupling::Log, &v),
            Err(MfgError::Positivity { .. })
        ));
        let mut m = g.constant(1.0);
        m.values_mut()[3] = -0.1;
        let v = Solution::new(g.zeros(), m, 0.0, 1.0).unwrap();
        assert!(residual(&fam, &Coupling::power(1.0).unwrap(), &v).is_err());
    }

    #[test]
    fn quadratic_lambda_zero_coupling_block() {
        let g = TorusGrid::new(1, 8).unwrap();
        let spec = HamiltonianSpec::new(2.0, g.constant(1.0), g.zeros()).unwrap();
        let fam = spec.at(0.0).unwrap();
        let v = constant_solution(g, 1.0, 0.0);
        let j = assemble_jacobian(&fam, &Coupling::Log, &v).unwrap();
        let n = g.len();
        let h = g.h();
        // -2 div(grad δu) with the 2h stencil: entries at x, x±2
        for x in 1..n {
            let expect = |col: usize| {
                if col == x {
                    2.0 * 2.0 / (4.0 * h * h)
                } else if col == g.shift(x, 0, 2) || col == g.shift(x, 0, -2) {
                    -2.0 / (4.0 * h * h)
                } else {
                    0.0
                }
            };
            for col in 0..n {
                assert!(
                    (j.get(x, col) - expect(col)).abs() < 1e-9,
                    "row {x} col {col}"
                );
            }
        }
        // constraint rows
        for col in 0..2 * n + 1 {
            let mass = if (n..2 * n).contains(&col) {
                1.0 / n as f64
            } else {
                0.0
            };
            let mean = if col < n { 1.0 / n as f64 } else { 0.0 };
            assert_eq!(j.get(0, col), mass);
            assert_eq!(j.get(2 * n, col), mean);
        }
        assert_eq!(j.order(), 2 * n + 1);
    }

    #[test]
    fn triplets_merge_duplicates() {
        let j =
            JacobianMatrix::from_triplets(2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, 4.0)]).unwrap();
        assert_eq!(j.get(0, 1), 3.0);
        assert_eq!(j.nnz(), 2);
        assert_eq!(j.matvec(&[1.0, 1.0]), vec![3.0, 4.0]);
        assert!(JacobianMatrix::from_triplets(2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn identity_solve() {
        let j = JacobianMatrix::identity(10);
        let mut e = vec![0.0; 10];
        e[4] = 1.0;
        assert_eq!(solve_linear(&j, &e).unwrap(), e);
        assert!(solve_linear(&j, &[1.0]).is_err());
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let j =
            JacobianMatrix::from_triplets(3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 1, 1.0)]).unwrap();
        assert!(matches!(
            solve_linear(&j, &[1.0, 1.0, 1.0]),
            Err(MfgError::LinearSolve(_))
        ));
    }

    #[test]
    fn random_sparse_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100;
        let mut t = Vec::new();
        for i in 0..n {
            let mut off = 0.0;
            for _ in 0..4 {
                let jx = rng.gen_range(0..n);
                let v: f64 = rng.gen_range(-1.0..1.0);
                t.push((i, jx, v));
                t.push((jx, i, v));
                off += 2.0 * v.abs();
            }
            t.push((i, i, off + 1.0));
        }
        let j = JacobianMatrix::from_triplets(n, t).unwrap();
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rhs = j.matvec(&x0);
        let x = solve_linear(&j, &rhs).unwrap();
        let r: Vec<f64> = j.matvec(&x).iter().zip(&rhs).map(|(a, b)| a - b).collect();
        assert!(sup(&r) <= 1e-10);
        assert!(x.iter().zip(&x0).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn round_trip_at_trivial_solution() {
        let g = TorusGrid::new(1, 8).unwrap();
        let spec = HamiltonianSpec::new(2.0, g.constant(1.0), g.zeros()).unwrap();
        let fam = spec.at(0.0).unwrap();
        let v = constant_solution(g, 1.0, 0.0);
        let j = assemble_jacobian(&fam, &Coupling::Log, &v).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x0: Vec<f64> = (0..j.order()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = solve_linear(&j, &j.matvec(&x0)).unwrap();
        assert!(x.iter().zip(&x0).all(|(a, b)| (a - b).abs() < 1e-8));
    }

    #[test]
    fn stencil_width_in_one_dimension() {
        let g = TorusGrid::new(1, 16).unwrap();
        let spec = HamiltonianSpec::new(
            1.6,
            g.sample(|x| 1.0 + 0.2 * (2.0 * PI * x[0]).cos()),
            g.sample(|x| (2.0 * PI * x[0]).sin()),
        )
        .unwrap();
        let fam = spec.at(0.6).unwrap();
        let v = Solution::new(
            g.sample(|x| 0.1 * (2.0 * PI * x[0]).sin()),
            g.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[0]).cos()),
            0.2,
            0.6,
        )
        .unwrap();
        let j = assemble_jacobian(&fam, &Coupling::Log, &v).unwrap();
        let n = g.len();
        for r in (1..n).chain(n..2 * n) {
            assert!(j.row(r).count() <= 4 + 3, "row {r}");
        }
        assert!(j.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn translation_equivariance() {
        let g = TorusGrid::new(2, 8).unwrap();
        let a = g.sample(|x| 1.0 + 0.4 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin());
        let vpot = g.sample(|x| (2.0 * PI * (x[0] + 2.0 * x[1])).sin());
        let u = g.sample(|x| 0.2 * (2.0 * PI * x[1]).cos() + 0.1 * (4.0 * PI * x[0]).sin());
        let m = g.sample(|x| 1.0 + 0.5 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
        let c = Coupling::power(0.8).unwrap();
        let spec = HamiltonianSpec::new(1.7, a.clone(), vpot.clone()).unwrap();
        let r = residual(
            &spec.at(0.7).unwrap(),
            &c,
            &Solution::new(u.clone(), m.clone(), 0.3, 0.7).unwrap(),
        )
        .unwrap();
        for axis in 0..2 {
            let shifted = HamiltonianSpec::new(1.7, a.roll(axis), vpot.roll(axis)).unwrap();
            let v = Solution::new(u.roll(axis), m.roll(axis), 0.3, 0.7).unwrap();
            let rs = residual(&shifted.at(0.7).unwrap(), &c, &v).unwrap();
            let fp = ScalarField::new(g, r.fp.clone()).unwrap().roll(axis);
            let hjb = ScalarField::new(g, r.hjb.clone()).unwrap().roll(axis);
            assert_eq!(fp.values(), &rs.fp[..]);
            assert_eq!(hjb.values(), &rs.hjb[..]);
        }
    }

    #[test]
    fn fp_mass_is_conserved_for_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (d, n) in [(1, 32), (2, 12), (3, 6)] {
            let g = TorusGrid::new(d, n).unwrap();
            let rand_field = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
                ScalarField::new(g, (0..g.len()).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
            };
            let spec = HamiltonianSpec::new(
                1.5,
                rand_field(&mut rng, 0.5, 2.0),
                rand_field(&mut rng, -1.0, 1.0),
            )
            .unwrap();
            for _ in 0..5 {
                let v = Solution::new(
                    rand_field(&mut rng, -1.0, 1.0),
                    rand_field(&mut rng, 0.1, 3.0),
                    0.1,
                    0.5,
                )
                .unwrap();
                let r = residual(&spec.at(0.5).unwrap(), &Coupling::Log, &v).unwrap();
                let total = crate::grid::compensated_sum(r.fp.iter().copied()) / g.len() as f64;
                let scale = r.fp.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
                assert!(
                    total.abs() <= 1e-14 * scale.max(1.0),
                    "d={d}: {total} (scale {scale})"
                );
            }
        }
    }

    #[test]
    fn drift_dimension_padding() {
        let g = TorusGrid::new(1, 8).unwrap();
        let spec = HamiltonianSpec::new(2.0, g.constant(1.0), g.zeros()).unwrap();
        let du = gradient(&g.sample(|x| (2.0 * PI * x[0]).sin()));
        let b = drift(&spec.at(1.0).unwrap(), &du);
        assert!(b
            .iter()
            .all(|v| v[1] == 0.0 && v[2] == 0.0 && v.len() == MAX_DIM));
    }
}
