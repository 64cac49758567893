//! Level-`l` subdivision of the closed regular `d`-simplex into its upward
//! cells.
//!
//! Points are barycentric integer tuples in units of `1/l` (entries sum to
//! `l`), so vertex identification is exact. A cell is determined by its
//! offset `a` (entries sum to `l - 1`); its map is `z ↦ (a + z) / l` and its
//! vertices are `(a + e_k) / l`.

use std::collections::HashMap;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::scalar::Rational;

#[derive(Clone, Debug)]
pub struct SimplexSubdivision {
    d: usize,
    l: usize,
    offsets: Vec<Vec<u32>>,
    vertices: Vec<Vec<u32>>,
    vertex_index: HashMap<Vec<u32>, usize>,
    cell_vertices: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VertexRow {
    pub id: usize,
    pub coordinates: Vec<Rational>,
    pub boundary: bool,
}

fn check_params(d: usize, l: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be >= 2, got {d}")));
    }
    if l < 2 {
        return Err(Error::InvalidParameter(format!("level must be >= 2, got {l}")));
    }
    Ok(())
}

/// `N(l) = l (l+1) ... (l+d-1) / d!`.
pub fn cell_count(d: usize, l: usize) -> Result<u128> {
    check_params(d, l)?;
    let mut num: u128 = 1;
    for k in 0..d {
        // running product stays an integer: C(l-1+k+1, k+1)
        num = num * (l + k) as u128 / (k + 1) as u128;
    }
    Ok(num)
}

/// All nonnegative integer tuples of length `parts` summing to `total`, in
/// lexicographic order.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            rec(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// Builds the subdivision. Cells `0..=d` are the corner cells (cell `i`
/// contains and fixes vertex `p_{i+1}`); the rest follow in lexicographic
/// order of their offsets.
pub fn subdivide(d: usize, l: usize) -> Result<SimplexSubdivision> {
    check_params(d, l)?;
    let lm1 = (l - 1) as u32;
    let corners: Vec<Vec<u32>> = (0..=d)
        .map(|i| {
            let mut a = vec![0; d + 1];
            a[i] = lm1;
            a
        })
        .collect();
    let mut offsets = corners.clone();
    offsets.extend(compositions(lm1, d + 1).into_iter().filter(|a| !corners.contains(a)));

    let mut vertices: Vec<Vec<u32>> = (0..=d)
        .map(|k| {
            let mut p = vec![0; d + 1];
            p[k] = l as u32;
            p
        })
        .collect();
    let mut vertex_index: HashMap<Vec<u32>, usize> =
        vertices.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let mut cell_vertices = Vec::with_capacity(offsets.len());
    for a in &offsets {
        let ids = (0..=d)
            .map(|k| {
                let mut p = a.clone();
                p[k] += 1;
                *vertex_index.entry(p.clone()).or_insert_with(|| {
                    vertices.push(p);
                    vertices.len() - 1
                })
            })
            .collect();
        cell_vertices.push(ids);
    }
    Ok(SimplexSubdivision {
        d,
        l,
        offsets,
        vertices,
        vertex_index,
        cell_vertices,
    })
}

impl SimplexSubdivision {
    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn level(&self) -> usize {
        self.l
    }

    pub fn num_cells(&self) -> usize {
        self.offsets.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Offset `a` of cell `i` in units of `1/l`; `α_i = a / l`.
    pub fn offset(&self, cell: usize) -> &[u32] {
        &self.offsets[cell]
    }

    pub fn offset_rational(&self, cell: usize) -> Vec<Rational> {
        self.offsets[cell]
            .iter()
            .map(|&a| Rational::new(BigInt::from(a), BigInt::from(self.l)))
            .collect()
    }

    /// Global vertex ids of `ψ_i(p_1), ..., ψ_i(p_{d+1})`.
    pub fn cell_vertices(&self, cell: usize) -> &[usize] {
        &self.cell_vertices[cell]
    }

    pub fn corner_cells(&self) -> Vec<usize> {
        (0..=self.d).collect()
    }

    /// Integer barycentric coordinates of a vertex, in units of `1/l`.
    pub fn vertex_scaled(&self, id: usize) -> &[u32] {
        &self.vertices[id]
    }

    pub fn vertex_id(&self, scaled: &[u32]) -> Option<usize> {
        self.vertex_index.get(scaled).copied()
    }

    pub fn is_boundary(&self, id: usize) -> bool {
        id <= self.d
    }

    /// Ids of `p_1..p_{d+1}`, which are always `0..=d`.
    pub fn boundary_ids(&self) -> Vec<usize> {
        (0..=self.d).collect()
    }

    pub fn interior_ids(&self) -> Vec<usize> {
        (self.d + 1..self.vertices.len()).collect()
    }

    /// Applies `ψ_i` to a barycentric point given with denominator `den`;
    /// the result has denominator `den * l`.
    pub fn apply_map(&self, cell: usize, point: &[u64], den: u64) -> Vec<u64> {
        let a = &self.offsets[cell];
        point
            .iter()
            .zip(a)
            .map(|(&z, &ak)| ak as u64 * den + z)
            .collect()
    }

    pub fn vertex_table(&self) -> Vec<VertexRow> {
        self.vertices
            .iter()
            .enumerate()
            .map(|(id, p)| VertexRow {
                id,
                coordinates: p
                    .iter()
                    .map(|&x| Rational::new(BigInt::from(x), BigInt::from(self.l)))
                    .collect(),
                boundary: self.is_boundary(id),
            })
            .collect()
    }
}

/// Cartesian embedding of a barycentric point into `R^d` with unit edge
/// length (Helmert basis of the sum-zero hyperplane). Export only.
pub fn cartesian(bary: &[f64]) -> Vec<f64> {
    let n = bary.len();
    (1..n)
        .map(|k| {
            let norm = ((k * (k + 1)) as f64).sqrt();
            let s: f64 = bary[..k].iter().sum::<f64>() - k as f64 * bary[k];
            s / norm / std::f64::consts::SQRT_2
        })
        .collect()
}
