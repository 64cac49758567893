//! Energy measures of harmonic functions on cells.
//!
//! For boundary data `b_1..b_k` the cell matrix of a word `w` is
//! `B_w[i][j] = (2 / r_w) Q(A_w b_i, A_w b_j) = ν_{h_i,h_j}(K_w)`. With
//! `G = B_root` the Gram matrix of the basis, the generalised eigenvalues of
//! `(B_w, G)` do not depend on which basis of the same span is used, and
//! `tr(G^{-1} B_w) / k` is the cell mass of `ν_{bold-h}`, normalised to 1 on
//! the whole gasket.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gasket::{CellScalar, Gasket, Letter, Word};
use crate::harmonic::{base_form, extension_matrices, project, q_form, theta, u_vector, v_vector, HarmonicCellData};
use crate::matrix::{dot, Matrix};
use crate::scalar::{format_rational, int, ArithmeticMode, Rational, Scalar};

/// Boundary vectors of the harmonic functions together with their Gram
/// matrix `G[i][j] = 2 Q(b_i, b_j)`.
#[derive(Clone, Debug)]
pub struct EnergyBasis<S> {
    vectors: Vec<Vec<S>>,
    gram: Matrix<S>,
    gram_inv: Matrix<S>,
    gram_det: S,
}

impl<S: Scalar> EnergyBasis<S> {
    pub fn new(vectors: Vec<Vec<S>>) -> Result<Self> {
        let k = vectors.len();
        if k == 0 {
            return Err(Error::DegenerateBasis("basis is empty".into()));
        }
        let n = vectors[0].len();
        if n < 3 || vectors.iter().any(|v| v.len() != n) {
            return Err(Error::DegenerateBasis("basis vectors must share a length of at least 3".into()));
        }
        let two = S::from_i64(2);
        let gram = Matrix::from_fn(k, k, |i, j| two.clone() * q_form(&vectors[i], &vectors[j]));
        let gram_det = gram.determinant();
        let diag_scale = (0..k).fold(1.0, |acc, i| acc * gram[(i, i)].to_f64().abs());
        let singular = if S::is_exact() {
            gram_det.is_zero()
        } else {
            gram_det.to_f64().abs() <= 1e-12 * diag_scale
        };
        if singular {
            return Err(Error::DegenerateBasis(
                "basis is dependent modulo constants or carries no energy".into(),
            ));
        }
        let gram_inv = gram
            .inverse()
            .ok_or_else(|| Error::DegenerateBasis("Gram matrix is singular".into()))?;
        Ok(EnergyBasis {
            vectors,
            gram,
            gram_inv,
            gram_det,
        })
    }

    pub fn vectors(&self) -> &[Vec<S>] {
        &self.vectors
    }

    pub fn gram(&self) -> &Matrix<S> {
        &self.gram
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Generalised eigenvalues of `(b, G)`, descending.
    pub fn eigenvalues(&self, b: &Matrix<S>) -> Vec<f64> {
        let k = self.len();
        if k == 1 {
            return vec![(b[(0, 0)].clone() / self.gram[(0, 0)].clone()).to_f64()];
        }
        if k == 2 {
            // trace and determinant are carried in `S`; only the square root
            // of the discriminant is taken in floating point
            let t = self.gram_inv.mul(b).trace();
            let delta = b.determinant() / self.gram_det.clone();
            let disc = (t.clone() * t.clone() - S::from_i64(4) * delta.clone()).to_f64().max(0.0);
            let t = t.to_f64();
            let lambda1 = (t + disc.sqrt()) / 2.0;
            let lambda2 = if lambda1 > 0.0 { delta.to_f64() / lambda1 } else { 0.0 };
            return vec![lambda1, lambda2];
        }
        let g = self.gram.to_f64().to_nalgebra();
        let bm = b.to_f64().to_nalgebra();
        generalized_symmetric_eigenvalues(&bm, &g)
    }
}

impl EnergyBasis<Rational> {
    /// `P e_1, …, P e_d` made `Q`-orthogonal by Gram–Schmidt.
    pub fn standard(d: usize) -> Result<Self> {
        base_form(d)?;
        let mut out: Vec<Vec<Rational>> = Vec::with_capacity(d);
        for k in 0..d {
            let e: Vec<Rational> = (0..=d).map(|j| int(i64::from(j == k))).collect();
            let mut v = project(&e);
            for b in &out {
                let coef = q_form(&v, b) / q_form(b, b);
                v = v.iter().zip(b).map(|(x, y)| x - &coef * y).collect();
            }
            out.push(v);
        }
        Self::new(out)
    }

    pub fn to_f64(&self) -> EnergyBasis<f64> {
        EnergyBasis {
            vectors: self.vectors.iter().map(|v| v.iter().map(Scalar::to_f64).collect()).collect(),
            gram: self.gram.to_f64(),
            gram_inv: self.gram_inv.to_f64(),
            gram_det: self.gram_det.to_f64(),
        }
    }
}

/// Basis in the requested scalar type.
pub trait BasisFor: CellScalar {
    fn basis(exact: &EnergyBasis<Rational>) -> EnergyBasis<Self>;
}

impl BasisFor for Rational {
    fn basis(exact: &EnergyBasis<Rational>) -> EnergyBasis<Self> {
        exact.clone()
    }
}

impl BasisFor for f64 {
    fn basis(exact: &EnergyBasis<Rational>) -> EnergyBasis<Self> {
        exact.to_f64()
    }
}

/// Eigenvalues (descending) of `G^{-1/2} B G^{-1/2}` via a Cholesky factor.
pub fn generalized_symmetric_eigenvalues(b: &DMatrix<f64>, g: &DMatrix<f64>) -> Vec<f64> {
    let Some(chol) = g.clone().cholesky() else {
        return vec![f64::NAN; b.nrows()];
    };
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .unwrap_or_else(|| DMatrix::from_element(b.nrows(), b.ncols(), f64::NAN));
    let m = &linv * b * linv.transpose();
    let sym = (&m + m.transpose()) * 0.5;
    let mut vals: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellEnergyMatrix<S> {
    pub word: Word,
    pub r: S,
    pub mu: S,
    pub b: Matrix<S>,
    pub nu_mass: S,
    pub eigenvalues: Vec<f64>,
}

impl<S: Scalar> CellEnergyMatrix<S> {
    /// `λ2 / λ1`, or 0 when there is a single direction or no energy.
    pub fn ratio21(&self) -> f64 {
        ratio21(&self.eigenvalues)
    }

    /// Number of eigenvalues above `eps · λ1`.
    pub fn rank(&self, eps: f64) -> usize {
        rank_eps(&self.eigenvalues, eps)
    }
}

fn ratio21(eig: &[f64]) -> f64 {
    match eig {
        [l1, l2, ..] if *l1 > 0.0 => (l2 / l1).clamp(0.0, 1.0),
        _ => 0.0,
    }
}

fn rank_eps(eig: &[f64], eps: f64) -> usize {
    match eig.first() {
        Some(&l1) if l1 > 0.0 => eig.iter().filter(|&&x| x > eps * l1).count(),
        _ => 0,
    }
}

/// Per-cell state carried down the word tree.
#[derive(Clone, Debug)]
struct ChainState<S> {
    r: S,
    mu: S,
    vectors: Vec<Vec<S>>,
}

fn chain_step<S: CellScalar>(g: &Gasket, parent: &ChainState<S>, letter: &Letter) -> ChainState<S> {
    ChainState {
        r: parent.r.clone() * g.letter_factor::<S>(letter),
        mu: parent.mu.clone() * g.letter_mass::<S>(letter),
        vectors: parent.vectors.iter().map(|v| g.step_vector(v, letter)).collect(),
    }
}

fn finish_cell<S: CellScalar>(basis: &EnergyBasis<S>, word: &Word, st: &ChainState<S>) -> CellEnergyMatrix<S> {
    let k = st.vectors.len();
    let scale = S::from_i64(2) / st.r.clone();
    let mut b = Matrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = scale.clone() * q_form(&st.vectors[i], &st.vectors[j]);
            b[(j, i)] = v.clone();
            b[(i, j)] = v;
        }
    }
    let nu_mass = basis.gram_inv.mul(&b).trace() / S::from_i64(k as i64);
    let eigenvalues = basis.eigenvalues(&b);
    CellEnergyMatrix {
        word: word.clone(),
        r: st.r.clone(),
        mu: st.mu.clone(),
        b,
        nu_mass,
        eigenvalues,
    }
}

fn root_state<S: CellScalar>(g: &Gasket, root: &Word, basis: &EnergyBasis<S>) -> Result<ChainState<S>> {
    let a = g.chain_matrix::<S>(root)?;
    Ok(ChainState {
        r: S::from_rational(&g.r_of(root)),
        mu: S::from_rational(&g.mu_of(root)),
        vectors: basis.vectors.iter().map(|v| a.mul_vec(v)).collect(),
    })
}

fn check_basis<S: CellScalar>(g: &Gasket, basis: &EnergyBasis<S>) -> Result<()> {
    if basis.vectors[0].len() != g.dimension() + 1 {
        return Err(Error::DegenerateBasis(format!(
            "basis vectors need {} entries",
            g.dimension() + 1
        )));
    }
    Ok(())
}

/// `B_w` for a single admissible word.
pub fn cell_energy_matrix<S: CellScalar>(g: &Gasket, w: &Word, basis: &EnergyBasis<S>) -> Result<CellEnergyMatrix<S>> {
    check_basis(g, basis)?;
    let st = root_state(g, w, basis)?;
    Ok(finish_cell(basis, w, &st))
}

/// `ν_h(K_w) = (2 / r_w) Q(A_w u, A_w u)` for one harmonic function.
pub fn energy_mass<S: CellScalar>(g: &Gasket, w: &Word, u: &[S]) -> Result<S> {
    let a = g.chain_matrix::<S>(w)?;
    let au = a.mul_vec(u);
    Ok(S::from_i64(2) * q_form(&au, &au) / S::from_rational(&g.r_of(w)))
}

/// Mutual energy `(2 / r_w) Q(A_w f, A_w g)`; zero for constant input.
pub fn mutual_energy_mass<S: CellScalar>(g: &Gasket, w: &Word, f: &[S], h: &[S]) -> Result<S> {
    let a = g.chain_matrix::<S>(w)?;
    Ok(S::from_i64(2) * q_form(&a.mul_vec(f), &a.mul_vec(h)) / S::from_rational(&g.r_of(w)))
}

/// One record per word of `tilde W_m`, in enumeration order.
pub fn kusuoka_distribution<S: CellScalar>(g: &Gasket, m: usize, basis: &EnergyBasis<S>) -> Result<Vec<CellEnergyMatrix<S>>> {
    kusuoka_below(g, &Word::root(), m, basis)
}

/// Records for the continuations of length `m` below `root`.
pub fn kusuoka_below<S: CellScalar>(
    g: &Gasket,
    root: &Word,
    m: usize,
    basis: &EnergyBasis<S>,
) -> Result<Vec<CellEnergyMatrix<S>>> {
    fold_cell_matrices(g, root, m, basis, Vec::new, |mut acc, cell| {
        acc.push(cell);
        acc
    }, |mut a, mut b| {
        a.append(&mut b);
        a
    })
}

/// Streams the cell matrices of depth `m` below `root` through a fold.
pub fn fold_cell_matrices<S, A, Zero, Fold, Combine>(
    g: &Gasket,
    root: &Word,
    m: usize,
    basis: &EnergyBasis<S>,
    zero: Zero,
    fold: Fold,
    combine: Combine,
) -> Result<A>
where
    S: CellScalar,
    A: Send,
    Zero: Fn() -> A + Sync + Send,
    Fold: Fn(A, CellEnergyMatrix<S>) -> A + Sync + Send,
    Combine: Fn(A, A) -> A,
{
    check_basis(g, basis)?;
    let init = root_state(g, root, basis)?;
    g.fold_cells(
        root,
        m,
        init,
        |st, letter| chain_step(g, st, letter),
        zero,
        |acc, word, st| fold(acc, finish_cell(basis, word, st)),
        combine,
    )
}

/// Rank statistics of one depth.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct DepthStats {
    pub depth: usize,
    pub cells: usize,
    /// `ν`-mass of the cells with `rank_ε = k`, for `k = 0..=d'`.
    pub histogram: Vec<f64>,
    pub total_mass: f64,
    pub mean_ratio21: f64,
    pub max_ratio21: f64,
    pub estimated_index: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Sensitivity {
    pub epsilon: f64,
    pub histogram: Vec<f64>,
    pub estimated_index: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RankReport {
    pub depth: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub arithmetic_mode: ArithmeticMode,
    pub basis_size: usize,
    /// `ν`-mass summed exactly in exact mode, as a `p/q` string.
    pub total_mass_exact: Option<String>,
    pub per_depth: Vec<DepthStats>,
    /// `ν`-weighted mean `λ2 / λ1` for depths `1..=m`.
    pub ratio_trend: Vec<f64>,
    pub trend_non_increasing: bool,
    pub sensitivity: Vec<Sensitivity>,
    pub estimated_index: usize,
}

#[derive(Clone, Debug)]
struct RankAccumulator<S> {
    cells: usize,
    hist: Vec<Vec<f64>>,
    mass: S,
    mass_f64: f64,
    ratio_sum: f64,
    ratio_max: f64,
}

impl<S: Scalar> RankAccumulator<S> {
    fn new(k: usize, eps_count: usize) -> Self {
        RankAccumulator {
            cells: 0,
            hist: vec![vec![0.0; k + 1]; eps_count],
            mass: S::zero(),
            mass_f64: 0.0,
            ratio_sum: 0.0,
            ratio_max: 0.0,
        }
    }

    fn add(mut self, cell: &CellEnergyMatrix<S>, eps: &[f64]) -> Self {
        let w = cell.nu_mass.to_f64();
        self.cells += 1;
        for (h, &e) in self.hist.iter_mut().zip(eps) {
            h[rank_eps(&cell.eigenvalues, e)] += w;
        }
        self.mass = self.mass + cell.nu_mass.clone();
        self.mass_f64 += w;
        let ratio = ratio21(&cell.eigenvalues);
        self.ratio_sum += w * ratio;
        self.ratio_max = self.ratio_max.max(ratio);
        self
    }

    fn merge(mut self, other: Self) -> Self {
        self.cells += other.cells;
        for (a, b) in self.hist.iter_mut().zip(&other.hist) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.mass = self.mass + other.mass;
        self.mass_f64 += other.mass_f64;
        self.ratio_sum += other.ratio_sum;
        self.ratio_max = self.ratio_max.max(other.ratio_max);
        self
    }
}

/// Largest `k` whose cells with `rank ≥ k` carry at least a `delta`
/// fraction of the mass.
pub fn index_from_histogram(hist: &[f64], delta: f64) -> usize {
    let total: f64 = hist.iter().sum();
    if total <= 0.0 {
        return 0;
    }
    let mut tail = 0.0;
    for k in (1..hist.len()).rev() {
        tail += hist[k];
        if tail / total >= delta {
            return k;
        }
    }
    0
}

/// Rank-ε statistics of `ν_{bold-h}` over depths `0..=m`.
pub fn index_estimate<S: CellScalar>(
    g: &Gasket,
    m: usize,
    eps: f64,
    delta: f64,
    basis: &EnergyBasis<S>,
) -> Result<RankReport> {
    if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter("eps and delta must lie in (0, 1)".into()));
    }
    g.count_words(&Word::root(), m)?;
    let k = basis.len();
    let eps_all = [eps, eps * 10.0, eps / 10.0];
    let mut per_depth = Vec::with_capacity(m + 1);
    let mut last = None;
    for depth in 0..=m {
        let eps_here: &[f64] = if depth == m { &eps_all } else { &eps_all[..1] };
        let acc = fold_cell_matrices(
            g,
            &Word::root(),
            depth,
            basis,
            || RankAccumulator::<S>::new(k, eps_here.len()),
            |acc, cell| acc.add(&cell, eps_here),
            RankAccumulator::merge,
        )?;
        let normalised: Vec<f64> = acc.hist[0].iter().map(|x| x / acc.mass_f64).collect();
        per_depth.push(DepthStats {
            depth,
            cells: acc.cells,
            estimated_index: index_from_histogram(&normalised, delta),
            histogram: normalised,
            total_mass: acc.mass_f64,
            mean_ratio21: acc.ratio_sum / acc.mass_f64,
            max_ratio21: acc.ratio_max,
        });
        if depth == m {
            last = Some(acc);
        }
    }
    let last = last.expect("final depth accumulated");
    let sensitivity = eps_all[1..]
        .iter()
        .zip(&last.hist[1..])
        .map(|(&e, h)| {
            let hist: Vec<f64> = h.iter().map(|x| x / last.mass_f64).collect();
            Sensitivity {
                epsilon: e,
                estimated_index: index_from_histogram(&hist, delta),
                histogram: hist,
            }
        })
        .collect();
    let ratio_trend: Vec<f64> = per_depth[1..].iter().map(|s| s.mean_ratio21).collect();
    let trend_non_increasing = ratio_trend.windows(2).all(|w| w[1] <= w[0]);
    let estimated_index = per_depth[m].estimated_index;
    Ok(RankReport {
        depth: m,
        epsilon: eps,
        delta,
        arithmetic_mode: if S::is_exact() { ArithmeticMode::Exact } else { ArithmeticMode::Float },
        basis_size: k,
        total_mass_exact: last.mass.as_exact().map(format_rational),
        per_depth,
        ratio_trend,
        trend_non_increasing,
        sensitivity,
        estimated_index,
    })
}

/// Outcome of the corner-decay search.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CornerDecay {
    pub n: usize,
    /// Largest `ν_h(K_{w v}) / ν_h(K_w)` over corner chains of length `n`.
    pub worst_ratio: f64,
    pub chains_checked: usize,
}

/// Cap on `(d + 1) |T|^N` chains examined per length.
pub const CORNER_CHAIN_CAP: usize = 1 << 20;

/// Smallest `N ≤ max_n` such that every corner chain `i^{l_1} … i^{l_N}` with
/// labels in `levels` shrinks every harmonic energy by at least the factor `c`.
/// The test `c r_chain Q - A^T Q A ⪰ 0` on the complement of constants is
/// decided in exact arithmetic.
pub fn corner_decay_n(d: usize, levels: &[u32], c: &Rational, max_n: usize) -> Result<CornerDecay> {
    if *c <= int(0) || *c > int(1) {
        return Err(Error::InvalidParameter("c must lie in (0, 1]".into()));
    }
    if levels.is_empty() {
        return Err(Error::InvalidParameter("at least one level is required".into()));
    }
    let q = base_form(d)?.matrix;
    let data: Vec<HarmonicCellData> = levels
        .iter()
        .map(|&l| extension_matrices(d, l as usize))
        .collect::<Result<_>>()?;
    let e = complement_basis(d);
    let et = e.transpose();
    let m2 = e.mul(&q).mul(&et);
    let m2_f = m2.to_nalgebra();
    let mut chains: Vec<(Matrix<Rational>, Rational)> = (0..=d)
        .map(|_| (Matrix::identity(d + 1), int(1)))
        .collect();
    let mut corner_of: Vec<usize> = (0..=d).collect();
    let mut best = f64::INFINITY;
    for n in 1..=max_n {
        let count = chains.len() * data.len();
        if count > CORNER_CHAIN_CAP {
            return Err(Error::BudgetExceeded {
                count,
                budget: CORNER_CHAIN_CAP,
            });
        }
        let mut next = Vec::with_capacity(count);
        let mut next_corner = Vec::with_capacity(count);
        for ((a, r), &i) in chains.iter().zip(&corner_of) {
            for hd in &data {
                next.push((hd.extension[i].mul(a), r * &hd.r));
                next_corner.push(i);
            }
        }
        chains = next;
        corner_of = next_corner;
        let mut all_ok = true;
        let mut worst: f64 = 0.0;
        for (a, r) in &chains {
            let m1 = e.mul(&a.transpose()).mul(&q).mul(a).mul(&et);
            let lam = generalized_symmetric_eigenvalues(&m1.to_nalgebra(), &m2_f)[0] / r.to_f64();
            worst = worst.max(lam);
            if all_ok && !m2.scale(&(c * r)).sub(&m1).is_positive_semidefinite() {
                all_ok = false;
            }
        }
        best = best.min(worst);
        if all_ok {
            return Ok(CornerDecay {
                n,
                worst_ratio: worst,
                chains_checked: chains.len(),
            });
        }
    }
    Err(Error::NotFound { max_n, best })
}

/// Rows `P e_1 … P e_d`: a basis of the complement of constants.
fn complement_basis(d: usize) -> Matrix<Rational> {
    Matrix::from_rows(
        (0..d)
            .map(|k| project(&(0..=d).map(|j| int(i64::from(j == k))).collect::<Vec<_>>()))
            .collect(),
    )
}

/// Residuals of the corner contraction `r_chain^{-1} P A_chain u → (u_i, u) P v_i`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ContractionCurve {
    pub corner: usize,
    pub labels: Vec<u32>,
    pub residuals: Vec<f64>,
    /// `Π |s/r|` over the first `n` labels times the initial residual.
    pub predicted: Vec<f64>,
    pub theta: f64,
    /// `max_n residual_n / θ^n`.
    pub fitted_k: f64,
    /// `‖P u - (u_i, u) P v_i‖`, the constant of the uniform bound.
    pub bound_k: f64,
    pub within_bound: bool,
}

/// Contraction of the corner chain `i^{τ_1} i^{τ_2} …` applied to `u`.
pub fn contraction_check(d: usize, i: usize, tau: &[u32], u: &[Rational]) -> Result<ContractionCurve> {
    if i > d || u.len() != d + 1 {
        return Err(Error::InvalidParameter(format!("corner {i} or vector length invalid for d = {d}")));
    }
    let mut levels: Vec<u32> = tau.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let data: Vec<(u32, HarmonicCellData)> = levels
        .iter()
        .map(|&l| extension_matrices(d, l as usize).map(|h| (l, h)))
        .collect::<Result<_>>()?;
    let lookup = |l: u32| &data.iter().find(|(x, _)| *x == l).expect("level loaded").1;
    let th = theta(&data.iter().map(|(_, h)| h).collect::<Vec<_>>()).to_f64();
    let coef = dot(&u_vector(d, i), u);
    let target: Vec<Rational> = project(&v_vector(d, i)).iter().map(|x| x * &coef).collect();
    let norm = |v: &[Rational]| -> f64 {
        let diff: Vec<Rational> = v.iter().zip(&target).map(|(a, b)| a - b).collect();
        dot(&diff, &diff).to_f64().sqrt()
    };
    let bound_k = norm(&project(u));
    let mut x: Vec<Rational> = u.to_vec();
    let mut r = int(1);
    let mut factor = 1.0;
    let mut residuals = Vec::with_capacity(tau.len());
    let mut predicted = Vec::with_capacity(tau.len());
    for &l in tau {
        let hd = lookup(l);
        x = hd.extension[i].mul_vec(&x);
        r *= &hd.r;
        factor *= (hd.s.clone() / hd.r.clone()).to_f64().abs();
        let scaled: Vec<Rational> = project(&x).iter().map(|v| v / &r).collect();
        residuals.push(norm(&scaled));
        predicted.push(factor * bound_k);
    }
    let fitted_k = residuals
        .iter()
        .enumerate()
        .map(|(n, res)| res / th.powi(n as i32 + 1))
        .fold(0.0, f64::max);
    let within_bound = residuals
        .iter()
        .enumerate()
        .all(|(n, res)| *res <= bound_k * th.powi(n as i32 + 1) * (1.0 + 1e-9) + 1e-300);
    Ok(ContractionCurve {
        corner: i,
        labels: tau.to_vec(),
        residuals,
        predicted,
        theta: th,
        fitted_k,
        bound_k,
        within_bound,
    })
}
