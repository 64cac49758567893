//! Push-forward of squared-equilibrium-weighted energy mass under a rescaled
//! planar harmonic map.

use std::collections::HashMap;

use serde::Serialize;

use crate::capacity::{inner_set, relative_capacity, InnerSetDescriptor};
use crate::error::{Error, Result};
use crate::gasket::{level_network_with, CellScalar, Gasket, Normalization, Word};
use crate::harmonic::q_form;
use crate::matrix::Matrix;
use crate::scalar::{format_rational, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct CloudPoint<S> {
    /// Subcell continuation below the base word.
    pub word: Word,
    pub x: f64,
    pub y: f64,
    pub weight: S,
    pub e_value: S,
}

#[derive(Clone, Debug)]
pub struct BlowupCloud<S> {
    pub base: Word,
    pub depth: usize,
    pub corner_depth: usize,
    pub refinement: usize,
    pub alpha: f64,
    pub points: Vec<CloudPoint<S>>,
    pub total_mass: S,
    /// `Σ |ν_{h_1,h_2}| / Σ ν_{bold-h}` over the subcells, in the frame where
    /// the pair is orthonormal on the base cell.
    pub off_diagonal_ratio: f64,
}

/// Serializable summary of a cloud.
#[derive(Clone, Debug, Serialize)]
pub struct CloudSummary {
    pub base: String,
    pub depth: usize,
    pub corner_depth: usize,
    pub refinement: usize,
    pub alpha: f64,
    pub points: usize,
    pub total_mass: f64,
    pub total_mass_exact: Option<String>,
    pub off_diagonal_ratio: f64,
    pub placement: String,
    pub mass_on_high_potential: f64,
}

impl<S: Scalar> BlowupCloud<S> {
    /// Fraction of the mass on subcells whose equilibrium value exceeds `level`.
    pub fn mass_fraction_above(&self, level: f64) -> f64 {
        let total = self.total_mass.to_f64();
        if total == 0.0 {
            return 0.0;
        }
        self.points
            .iter()
            .filter(|p| p.e_value.to_f64() > level)
            .map(|p| p.weight.to_f64())
            .sum::<f64>()
            / total
    }

    pub fn summary(&self) -> CloudSummary {
        CloudSummary {
            base: self.base.encode(),
            depth: self.depth,
            corner_depth: self.corner_depth,
            refinement: self.refinement,
            alpha: self.alpha,
            points: self.points.len(),
            total_mass: self.total_mass.to_f64(),
            total_mass_exact: self.total_mass.as_exact().map(format_rational),
            off_diagonal_ratio: self.off_diagonal_ratio,
            placement: "mean of alpha*h over the subcell vertices".into(),
            mass_on_high_potential: self.mass_fraction_above(0.5),
        }
    }
}

#[derive(Clone, Debug)]
struct SubcellState<S> {
    e: Vec<S>,
    h: [Vec<S>; 2],
    r: S,
}

/// Equilibrium values at the vertices of every depth-`s` cell below the base
/// word, `s ≤ N + K`, read off the solved depth-`(N + K)` network.
fn equilibrium_on_cells<S: CellScalar>(
    g: &Gasket,
    desc: &InnerSetDescriptor,
    refinement: usize,
    s: usize,
) -> Result<HashMap<Word, Vec<S>>> {
    let cap = relative_capacity::<S>(g, desc, refinement, Normalization::Root)?;
    let fine = level_network_with(g, desc.depth + refinement, &desc.word, Normalization::Root)?;
    let coarse = if s == desc.depth + refinement {
        fine.clone()
    } else {
        level_network_with(g, s, &desc.word, Normalization::Root)?
    };
    let index: HashMap<&[u128], usize> = (0..fine.num_vertices()).map(|v| (fine.coordinates(v), v)).collect();
    let factor = fine.denominator() / coarse.denominator();
    let mut out = HashMap::with_capacity(coarse.cells().len());
    for cell in coarse.cells() {
        let values = cell
            .vertices
            .iter()
            .map(|&v| {
                let scaled: Vec<u128> = coarse.coordinates(v).iter().map(|c| c * factor).collect();
                index
                    .get(scaled.as_slice())
                    .map(|&id| cap.potential[id].clone())
                    .ok_or_else(|| Error::InvalidVertex("cell vertex missing from the solved network".into()))
            })
            .collect::<Result<Vec<S>>>()?;
        out.insert(cell.word.clone(), values);
    }
    Ok(out)
}

fn mean<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |a, x| a + x.clone()) / S::from_i64(v.len() as i64)
}

/// Cloud of the depth-`m` subcells of `K_w` for the harmonic pair with
/// boundary data `b1`, `b2`; `e` is the equilibrium potential of the inner
/// set of depth `corner_depth`, solved `refinement` levels deeper.
pub fn blowup_cloud<S: CellScalar>(
    g: &Gasket,
    w: &Word,
    b1: &[S],
    b2: &[S],
    m: usize,
    corner_depth: usize,
    refinement: usize,
) -> Result<BlowupCloud<S>> {
    g.check_admissible(w)?;
    let a_w = g.chain_matrix::<S>(w)?;
    let hw = [a_w.mul_vec(b1), a_w.mul_vec(b2)];
    // mass normalised on the base cell; the factor 2 / r_w cancels
    let gram = Matrix::from_fn(2, 2, |i, j| q_form(&hw[i], &hw[j]));
    let det = gram.determinant();
    let degenerate = if S::is_exact() {
        det.is_zero()
    } else {
        det.to_f64().abs() <= 1e-12 * gram[(0, 0)].to_f64() * gram[(1, 1)].to_f64()
    };
    if degenerate {
        return Err(Error::DegeneratePair);
    }
    let gram_inv = gram.inverse().ok_or(Error::DegeneratePair)?;
    let desc = inner_set(g, w, corner_depth)?;
    let solve_depth = corner_depth + refinement;
    let s = m.min(solve_depth);
    let e_cells = equilibrium_on_cells::<S>(g, &desc, refinement, s)?;

    // walk to depth s collecting harmonic values, then continue below with
    // the equilibrium values carried along by the extension matrices
    let top = g.descendants(
        w,
        s,
        (hw.clone(), S::one()),
        |(h, r), letter| {
            (
                [g.step_vector(&h[0], letter), g.step_vector(&h[1], letter)],
                r.clone() * g.letter_factor::<S>(letter),
            )
        },
    )?;
    let mut leaves: Vec<(Word, SubcellState<S>)> = Vec::new();
    for (full, (h, r)) in top {
        let rel = Word(full.letters()[w.len()..].to_vec());
        let e = e_cells
            .get(&rel)
            .cloned()
            .ok_or_else(|| Error::InvalidVertex(format!("no equilibrium values for `{rel}`")))?;
        let init = SubcellState { e, h, r };
        if s == m {
            leaves.push((rel, init));
            continue;
        }
        let below = g.descendants(&full, m - s, init, |st, letter| SubcellState {
            e: g.step_vector(&st.e, letter),
            h: [g.step_vector(&st.h[0], letter), g.step_vector(&st.h[1], letter)],
            r: st.r.clone() * g.letter_factor::<S>(letter),
        })?;
        leaves.extend(
            below
                .into_iter()
                .map(|(word, st)| (Word(word.letters()[w.len()..].to_vec()), st)),
        );
    }

    let mut max_norm: f64 = 0.0;
    for (_, st) in &leaves {
        for k in 0..st.h[0].len() {
            let (x, y) = (st.h[0][k].to_f64(), st.h[1][k].to_f64());
            max_norm = max_norm.max(x.hypot(y));
        }
    }
    let alpha = if max_norm > 0.0 { 1.0 / max_norm } else { 1.0 };
    let chol = gram
        .to_f64()
        .to_nalgebra()
        .cholesky()
        .ok_or(Error::DegeneratePair)?;
    let linv = chol.l().try_inverse().ok_or(Error::DegeneratePair)?;
    let mut total_mass = S::zero();
    let mut off_sum = 0.0;
    let mut nu_sum = 0.0;
    let mut points = Vec::with_capacity(leaves.len());
    for (word, st) in leaves {
        let b = Matrix::from_fn(2, 2, |i, j| q_form(&st.h[i], &st.h[j]) / st.r.clone());
        let nu = gram_inv.mul(&b).trace() / S::from_i64(2);
        let e = mean(&st.e);
        let weight = e.clone() * e.clone() * nu.clone();
        total_mass = total_mass + weight.clone();
        let bf = b.to_f64().to_nalgebra();
        let rotated = &linv * &bf * linv.transpose();
        off_sum += rotated[(0, 1)].abs();
        nu_sum += nu.to_f64();
        let hx: f64 = st.h[0].iter().map(Scalar::to_f64).sum::<f64>() / st.h[0].len() as f64;
        let hy: f64 = st.h[1].iter().map(Scalar::to_f64).sum::<f64>() / st.h[1].len() as f64;
        points.push(CloudPoint {
            word,
            x: alpha * hx,
            y: alpha * hy,
            weight,
            e_value: e,
        });
    }
    Ok(BlowupCloud {
        base: w.clone(),
        depth: m,
        corner_depth,
        refinement,
        alpha,
        points,
        total_mass,
        off_diagonal_ratio: if nu_sum > 0.0 { off_sum / nu_sum } else { 0.0 },
    })
}

/// Largest `|α h|` over the vertices of the cloud's subcells.
pub fn max_scaled_vertex_norm<S: CellScalar>(g: &Gasket, w: &Word, b1: &[S], b2: &[S], m: usize, alpha: f64) -> Result<f64> {
    let a_w = g.chain_matrix::<S>(w)?;
    let vals = g.descendants(w, m, [a_w.mul_vec(b1), a_w.mul_vec(b2)], |h, letter| {
        [g.step_vector(&h[0], letter), g.step_vector(&h[1], letter)]
    })?;
    Ok(vals
        .iter()
        .flat_map(|(_, h)| (0..h[0].len()).map(move |k| (alpha * h[0][k].to_f64()).hypot(alpha * h[1][k].to_f64())))
        .fold(0.0, f64::max))
}

/// Histogram of a cloud on `[-1, 1]^2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityGrid {
    pub resolution: usize,
    /// Row-major, row index from `y`, column index from `x`.
    pub mass: Vec<f64>,
}

impl DensityGrid {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.mass[row * self.resolution + col]
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Sums of `2 × 2` blocks: the grid at half the resolution.
    pub fn coarsen(&self) -> DensityGrid {
        let half = self.resolution / 2;
        let mut mass = vec![0.0; half * half];
        for row in 0..self.resolution {
            for col in 0..self.resolution {
                mass[(row / 2) * half + col / 2] += self.at(row, col);
            }
        }
        DensityGrid { resolution: half, mass }
    }
}

fn bin(t: f64, resolution: usize) -> usize {
    let k = ((t + 1.0) * resolution as f64 / 2.0).floor();
    if k < 0.0 {
        0
    } else {
        (k as usize).min(resolution - 1)
    }
}

pub fn density_grid<S: Scalar>(cloud: &BlowupCloud<S>, resolution: usize) -> Result<DensityGrid> {
    if resolution < 8 {
        return Err(Error::InvalidParameter("grid resolution must be at least 8".into()));
    }
    let mut mass = vec![0.0; resolution * resolution];
    for p in &cloud.points {
        mass[bin(p.y, resolution) * resolution + bin(p.x, resolution)] += p.weight.to_f64();
    }
    Ok(DensityGrid { resolution, mass })
}

/// `off_diagonal_ratio` of the clouds at depths `1..=m`.
pub fn off_diagonal_trend<S: CellScalar>(
    g: &Gasket,
    w: &Word,
    b1: &[S],
    b2: &[S],
    m: usize,
    corner_depth: usize,
    refinement: usize,
) -> Result<Vec<f64>> {
    (1..=m)
        .map(|k| blowup_cloud(g, w, b1, b2, k, corner_depth, refinement).map(|c| c.off_diagonal_ratio))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::relative_capacity;
    use crate::energy::EnergyBasis;
    use crate::gasket::GasketSpec;
    use crate::scalar::{int, Rational};

    fn sg() -> Gasket {
        Gasket::new(GasketSpec::homogeneous(2, 2).unwrap()).unwrap()
    }

    fn pair() -> (Vec<Rational>, Vec<Rational>) {
        let b = EnergyBasis::standard(2).unwrap();
        (b.vectors()[0].clone(), b.vectors()[1].clone())
    }

    #[test]
    fn mass_is_the_weighted_sum_and_grids_conserve_it() {
        let g = sg();
        let (b1, b2) = pair();
        let cloud = blowup_cloud(&g, &Word::root(), &b1, &b2, 5, 2, 1).unwrap();
        assert_eq!(cloud.points.len(), 243);
        // independent recomputation of every weight from the chain matrices
        let gram = Matrix::from_fn(2, 2, |i, j| q_form(&[&b1, &b2][i][..], &[&b1, &b2][j][..]));
        let gi = gram.inverse().unwrap();
        let mut expected = int(0);
        for p in &cloud.points {
            let a = g.chain_matrix::<Rational>(&p.word).unwrap();
            let r = g.r_of(&p.word);
            let h = [a.mul_vec(&b1), a.mul_vec(&b2)];
            let b = Matrix::from_fn(2, 2, |i, j| q_form(&h[i], &h[j]) / &r);
            let nu = gi.mul(&b).trace() / int(2);
            expected += &p.e_value * &p.e_value * nu;
        }
        assert_eq!(cloud.total_mass, expected);
        for res in [64, 256] {
            let grid = density_grid(&cloud, res).unwrap();
            assert!((grid.total() - cloud.total_mass.to_f64()).abs() < 1e-12);
        }
        let fine = density_grid(&cloud, 256).unwrap();
        let coarse = density_grid(&cloud, 128).unwrap();
        for (a, b) in fine.coarsen().mass.iter().zip(&coarse.mass) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(density_grid(&cloud, 4), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn empty_cloud_gives_zero_grid() {
        let cloud: BlowupCloud<f64> = BlowupCloud {
            base: Word::root(),
            depth: 0,
            corner_depth: 1,
            refinement: 0,
            alpha: 1.0,
            points: Vec::new(),
            total_mass: 0.0,
            off_diagonal_ratio: 0.0,
        };
        let grid = density_grid(&cloud, 8).unwrap();
        assert!(grid.mass.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn scaled_map_has_unit_maximum() {
        let g = sg();
        let (b1, b2) = pair();
        let w: Word = "2^2".parse().unwrap();
        let cloud = blowup_cloud(&g, &w, &b1, &b2, 4, 2, 0).unwrap();
        let max = max_scaled_vertex_norm(&g, &w, &b1, &b2, 4, cloud.alpha).unwrap();
        assert!((max - 1.0).abs() < 1e-15);
        assert!(cloud.points.iter().all(|p| p.x.hypot(p.y) <= 1.0 + 1e-12));
        assert!(cloud.points.iter().all(|p| p.weight >= int(0)));
    }

    #[test]
    fn carried_equilibrium_matches_direct_solve() {
        let g = Gasket::new(GasketSpec::seeded(2, &[(2, 0.5), (3, 0.5)], 2).unwrap()).unwrap();
        let (b1, b2) = pair();
        let w = Word::root();
        let lazy = blowup_cloud(&g, &w, &b1, &b2, 4, 1, 1).unwrap();
        let desc = inner_set(&g, &w, 1).unwrap();
        let direct = relative_capacity::<Rational>(&g, &desc, 3, Normalization::Root).unwrap();
        let net = level_network_with(&g, 4, &w, Normalization::Root).unwrap();
        for (p, cell) in lazy.points.iter().zip(net.cells()) {
            assert_eq!(p.word, cell.word);
            let avg = cell.vertices.iter().map(|&v| direct.potential[v].clone()).sum::<Rational>() / int(3);
            assert_eq!(p.e_value, avg);
        }
    }

    #[test]
    fn dependent_pair_is_rejected() {
        let g = sg();
        let (b1, _) = pair();
        let b2: Vec<Rational> = b1.iter().map(|x| x * int(2) + int(5)).collect();
        assert!(matches!(
            blowup_cloud(&g, &Word::root(), &b1, &b2, 2, 1, 0),
            Err(Error::DegeneratePair)
        ));
    }

    #[test]
    fn float_cloud_matches_exact() {
        let g = sg();
        let (b1, b2) = pair();
        let exact = blowup_cloud(&g, &Word::root(), &b1, &b2, 4, 2, 1).unwrap();
        let f1: Vec<f64> = b1.iter().map(Scalar::to_f64).collect();
        let f2: Vec<f64> = b2.iter().map(Scalar::to_f64).collect();
        let float = blowup_cloud(&g, &Word::root(), &f1, &f2, 4, 2, 1).unwrap();
        assert!((float.total_mass - exact.total_mass.to_f64()).abs() < 1e-12);
        assert!((float.off_diagonal_ratio - exact.off_diagonal_ratio).abs() < 1e-12);
    }
}
