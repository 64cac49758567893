//! Sparse symmetric elimination (Schur complements, Dirichlet problems) and a
//! preconditioned conjugate-gradient solver for float mode.
//!
//! Eliminating a vertex is the star-mesh transform of the underlying network:
//! its row is divided out and every pair of its neighbours is updated. The
//! remaining block after eliminating a vertex set is exactly the Schur
//! complement onto the kept vertices, and the stored pivot rows give the
//! harmonic (energy-minimising) interior values by back substitution.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Symmetric matrix stored as a diagonal plus per-row off-diagonal maps.
#[derive(Clone, Debug)]
pub struct SymmetricSystem<S> {
    diag: Vec<S>,
    off: Vec<BTreeMap<usize, S>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EliminationOrder {
    /// Greedy minimum current degree, ties broken by the smaller index.
    MinimumDegree,
    /// The order in which the vertices were listed.
    AsGiven,
}

#[derive(Clone, Debug)]
pub struct PivotRecord<S> {
    pub vertex: usize,
    pub pivot: S,
    pub neighbors: Vec<(usize, S)>,
}

impl<S: Scalar> SymmetricSystem<S> {
    pub fn new(n: usize) -> Self {
        SymmetricSystem {
            diag: vec![S::zero(); n],
            off: vec![BTreeMap::new(); n],
        }
    }

    /// Graph Laplacian of weighted edges `(i, j, c)`; repeated edges accumulate.
    pub fn laplacian(n: usize, edges: impl IntoIterator<Item = (usize, usize, S)>) -> Self {
        let mut sys = Self::new(n);
        for (i, j, c) in edges {
            sys.add_edge(i, j, c);
        }
        sys
    }

    pub fn from_dense(m: &Matrix<S>) -> Self {
        assert!(m.is_square());
        let n = m.rows();
        let mut sys = Self::new(n);
        for i in 0..n {
            sys.diag[i] = m[(i, i)].clone();
            for j in 0..n {
                if i != j && !m[(i, j)].is_zero() {
                    sys.off[i].insert(j, m[(i, j)].clone());
                }
            }
        }
        sys
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn add_edge(&mut self, i: usize, j: usize, c: S) {
        assert_ne!(i, j, "self loop");
        self.diag[i] = self.diag[i].clone() + c.clone();
        self.diag[j] = self.diag[j].clone() + c.clone();
        add_entry(&mut self.off[i], j, -c.clone());
        add_entry(&mut self.off[j], i, -c);
    }

    pub fn diagonal(&self, i: usize) -> &S {
        &self.diag[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> S {
        if i == j {
            self.diag[i].clone()
        } else {
            self.off[i].get(&j).cloned().unwrap_or_else(S::zero)
        }
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, &S)> {
        self.off[i].iter().map(|(&j, v)| (j, v))
    }

    pub fn to_dense(&self) -> Matrix<S> {
        Matrix::from_fn(self.len(), self.len(), |i, j| self.entry(i, j))
    }

    /// `x · M · x` for a single vector.
    pub fn quadratic(&self, x: &[S]) -> S {
        let mut acc = S::zero();
        for i in 0..self.len() {
            acc = acc + self.diag[i].clone() * x[i].clone() * x[i].clone();
            for (&j, v) in &self.off[i] {
                acc = acc + v.clone() * x[i].clone() * x[j].clone();
            }
        }
        acc
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        (0..self.len())
            .map(|i| {
                self.off[i]
                    .iter()
                    .fold(self.diag[i].clone() * x[i].clone(), |acc, (&j, v)| {
                        acc + v.clone() * x[j].clone()
                    })
            })
            .collect()
    }

    /// Eliminates `targets` in place, returning the pivot rows in elimination
    /// order. Fails with `SingularInterior` on a zero or negative pivot.
    pub fn eliminate(
        &mut self,
        targets: &[usize],
        order: EliminationOrder,
    ) -> Result<Vec<PivotRecord<S>>> {
        let mut records = Vec::with_capacity(targets.len());
        match order {
            EliminationOrder::AsGiven => {
                for &v in targets {
                    records.push(self.eliminate_one(v)?);
                }
            }
            EliminationOrder::MinimumDegree => {
                let mut is_target = vec![false; self.len()];
                for &v in targets {
                    is_target[v] = true;
                }
                let mut degree: Vec<usize> = self.off.iter().map(BTreeMap::len).collect();
                let mut queue: BTreeSet<(usize, usize)> =
                    targets.iter().map(|&v| (degree[v], v)).collect();
                while let Some((_, v)) = queue.pop_first() {
                    is_target[v] = false;
                    let record = self.eliminate_one(v)?;
                    for &(j, _) in &record.neighbors {
                        if is_target[j] {
                            queue.remove(&(degree[j], j));
                            degree[j] = self.off[j].len();
                            queue.insert((degree[j], j));
                        }
                    }
                    records.push(record);
                }
            }
        }
        Ok(records)
    }

    fn eliminate_one(&mut self, v: usize) -> Result<PivotRecord<S>> {
        let pivot = std::mem::replace(&mut self.diag[v], S::zero());
        if pivot <= S::zero() {
            return Err(Error::SingularInterior);
        }
        let row = std::mem::take(&mut self.off[v]);
        let neighbors: Vec<(usize, S)> = row.into_iter().collect();
        for (a, (j, ajv)) in neighbors.iter().enumerate() {
            self.off[*j].remove(&v);
            let scaled = ajv.clone() / pivot.clone();
            self.diag[*j] = self.diag[*j].clone() - scaled.clone() * ajv.clone();
            for (k, akv) in &neighbors[a + 1..] {
                let delta = scaled.clone() * akv.clone();
                add_entry(&mut self.off[*j], *k, -delta.clone());
                add_entry(&mut self.off[*k], *j, -delta);
            }
        }
        Ok(PivotRecord {
            vertex: v,
            pivot,
            neighbors,
        })
    }

    /// Schur complement onto `keep` (in the given order).
    pub fn schur_complement(&self, keep: &[usize], order: EliminationOrder) -> Result<Matrix<S>> {
        let mut work = self.clone();
        let kept: BTreeSet<usize> = keep.iter().copied().collect();
        let targets: Vec<usize> = (0..self.len()).filter(|v| !kept.contains(v)).collect();
        work.eliminate(&targets, order)?;
        Ok(Matrix::from_fn(keep.len(), keep.len(), |a, b| {
            work.entry(keep[a], keep[b])
        }))
    }
}

fn add_entry<S: Scalar>(row: &mut BTreeMap<usize, S>, k: usize, delta: S) {
    use std::collections::btree_map::Entry;
    match row.entry(k) {
        Entry::Vacant(e) => {
            if !delta.is_zero() {
                e.insert(delta);
            }
        }
        Entry::Occupied(mut e) => {
            let v = e.get().clone() + delta;
            if v.is_zero() {
                e.remove();
            } else {
                *e.get_mut() = v;
            }
        }
    }
}

/// Fills in eliminated vertices from their pivot rows, last eliminated first.
/// `values[v]` must already hold every non-eliminated vertex; each value is a
/// vector of `width` right-hand sides.
pub fn back_substitute<S: Scalar>(records: &[PivotRecord<S>], values: &mut [Option<Vec<S>>], width: usize) {
    for rec in records.iter().rev() {
        let mut acc = vec![S::zero(); width];
        for (j, a) in &rec.neighbors {
            let xj = values[*j]
                .as_ref()
                .expect("neighbour value must be known during back substitution");
            for (slot, x) in acc.iter_mut().zip(xj) {
                *slot = slot.clone() + a.clone() * x.clone();
            }
        }
        values[rec.vertex] = Some(acc.into_iter().map(|s| -s / rec.pivot.clone()).collect());
    }
}

/// Harmonic extension of vector-valued data from `fixed` to every vertex by
/// exact sparse elimination. Returns one row of `width` values per vertex.
pub fn harmonic_extension<S: Scalar>(
    sys: &SymmetricSystem<S>,
    fixed: &[(usize, Vec<S>)],
    width: usize,
    order: EliminationOrder,
) -> Result<Vec<Vec<S>>> {
    if fixed.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let mut is_fixed = vec![false; sys.len()];
    for (v, _) in fixed {
        is_fixed[*v] = true;
    }
    let free: Vec<usize> = (0..sys.len()).filter(|&v| !is_fixed[v]).collect();
    let mut work = sys.clone();
    let records = work.eliminate(&free, order)?;
    let mut values: Vec<Option<Vec<S>>> = vec![None; sys.len()];
    for (v, val) in fixed {
        assert_eq!(val.len(), width);
        values[*v] = Some(val.clone());
    }
    back_substitute(&records, &mut values, width);
    Ok(values.into_iter().map(|v| v.expect("all vertices solved")).collect())
}

/// `‖L_FF x_F + L_FB x_B‖ / ‖L_FB x_B‖` over the free vertices of a
/// Dirichlet problem; 0 when the boundary data produce no load.
pub fn dirichlet_residual(sys: &SymmetricSystem<f64>, x: &[f64], is_fixed: &[bool]) -> f64 {
    let mut res = 0.0;
    let mut load = 0.0;
    for v in (0..sys.len()).filter(|&v| !is_fixed[v]) {
        let mut acc = sys.diagonal(v) * x[v];
        let mut b = 0.0;
        for (j, a) in sys.neighbors(v) {
            acc += a * x[j];
            if is_fixed[j] {
                b -= a * x[j];
            }
        }
        res += acc * acc;
        load += b * b;
    }
    if load == 0.0 {
        0.0
    } else {
        (res / load).sqrt()
    }
}

/// Outcome of the iterative solver.
#[derive(Clone, Debug)]
pub struct IterativeSolution {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradient on the free block of a Dirichlet
/// problem, iterating until the relative residual is at most `tol`.
pub fn conjugate_gradient(
    sys: &SymmetricSystem<f64>,
    fixed: &[(usize, f64)],
    tol: f64,
    max_iter: usize,
) -> Result<IterativeSolution> {
    if fixed.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let n = sys.len();
    let mut x = vec![0.0; n];
    let mut slot = vec![usize::MAX; n];
    for &(v, val) in fixed {
        x[v] = val;
    }
    let mut is_fixed = vec![false; n];
    for &(v, _) in fixed {
        is_fixed[v] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&v| !is_fixed[v]).collect();
    for (k, &v) in free.iter().enumerate() {
        slot[v] = k;
    }
    let m = free.len();
    if m == 0 {
        return Ok(IterativeSolution {
            values: x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    // b = -L_FB x_B
    let mut b = vec![0.0; m];
    for (k, &v) in free.iter().enumerate() {
        for (j, a) in sys.neighbors(v) {
            if slot[j] == usize::MAX {
                b[k] -= a * x[j];
            }
        }
    }
    let apply = |p: &[f64], out: &mut [f64]| {
        for (k, &v) in free.iter().enumerate() {
            let mut acc = sys.diagonal(v) * p[k];
            for (j, a) in sys.neighbors(v) {
                if slot[j] != usize::MAX {
                    acc += a * p[slot[j]];
                }
            }
            out[k] = acc;
        }
    };
    let inv_diag: Vec<f64> = free.iter().map(|&v| 1.0 / sys.diagonal(v)).collect();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut y = vec![0.0; m];
    if b_norm == 0.0 {
        return Ok(IterativeSolution {
            values: x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; m];
    let mut iterations = 0;
    let mut rel = 1.0;
    while iterations < max_iter {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Solver("operator is not positive definite".into()));
        }
        let alpha = rz / pap;
        for k in 0..m {
            y[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        iterations += 1;
        rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / b_norm;
        if rel <= tol {
            break;
        }
        for k in 0..m {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..m {
            p[k] = z[k] + beta * p[k];
        }
    }
    // true residual, not the recursively updated one
    apply(&y, &mut ap);
    let true_rel = ap
        .iter()
        .zip(&b)
        .map(|(a, bb)| (a - bb) * (a - bb))
        .sum::<f64>()
        .sqrt()
        / b_norm;
    rel = rel.max(true_rel);
    if rel > tol {
        return Err(Error::Solver(format!(
            "conjugate gradient stalled at relative residual {rel:e} after {iterations} iterations"
        )));
    }
    for (k, &v) in free.iter().enumerate() {
        x[v] = y[k];
    }
    Ok(IterativeSolution {
        values: x,
        iterations,
        relative_residual: rel,
    })
}
