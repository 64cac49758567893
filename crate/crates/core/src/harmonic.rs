//! Base energy form, renormalisation factor and harmonic-extension matrices of
//! the level-`l` subdivision, all in exact rational arithmetic.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::scalar::{format_rational, int, Rational, Scalar};
use crate::solver::{harmonic_extension, EliminationOrder, SymmetricSystem};
use crate::subdivision::{subdivide, SimplexSubdivision};

/// Symmetric form `Q(f, g) = f · M · g`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    pub matrix: Matrix<Rational>,
}

impl QuadraticForm {
    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn eval(&self, f: &[Rational], g: &[Rational]) -> Rational {
        self.matrix.bilinear(f, g)
    }

    pub fn energy(&self, f: &[Rational]) -> Rational {
        self.eval(f, f)
    }
}

/// Laplacian of the complete graph on `d + 1` vertices, unit conductances.
pub fn base_form(d: usize) -> Result<QuadraticForm> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be >= 2, got {d}")));
    }
    let n = d + 1;
    Ok(QuadraticForm {
        matrix: Matrix::from_fn(n, n, |i, j| if i == j { int(d as i64) } else { int(-1) }),
    })
}

/// `Q(f, g)` for the base form, evaluated edge by edge.
pub fn q_form<S: Scalar>(f: &[S], g: &[S]) -> S {
    let n = f.len();
    let mut acc = S::zero();
    for p in 0..n {
        for q in p + 1..n {
            acc = acc + (f[p].clone() - f[q].clone()) * (g[p].clone() - g[q].clone());
        }
    }
    acc
}

fn level_system(s: &SimplexSubdivision) -> SymmetricSystem<Rational> {
    let mut sys = SymmetricSystem::new(s.num_vertices());
    for c in 0..s.num_cells() {
        let vs = s.cell_vertices(c);
        for a in 0..vs.len() {
            for b in a + 1..vs.len() {
                sys.add_edge(vs[a], vs[b], int(1));
            }
        }
    }
    sys
}

/// `Q^(l)` on `V^(l)`: every cell contributes a unit complete graph.
pub fn level_form(s: &SimplexSubdivision) -> QuadraticForm {
    QuadraticForm {
        matrix: level_system(s).to_dense(),
    }
}

fn boundary_trace(s: &SimplexSubdivision, order: EliminationOrder) -> Result<Matrix<Rational>> {
    level_system(s).schur_complement(&s.boundary_ids(), order)
}

fn proportionality(trace: &Matrix<Rational>, d: usize) -> Result<Rational> {
    let q = base_form(d)?;
    // Q has -1 off the diagonal
    let r = -trace[(0, 1)].clone();
    for i in 0..=d {
        for j in 0..=d {
            let expected = &q.matrix[(i, j)] * &r;
            if trace[(i, j)] != expected {
                return Err(Error::ProportionalityViolation {
                    row: i,
                    col: j,
                    found: format_rational(&trace[(i, j)]),
                    expected: format_rational(&expected),
                });
            }
        }
    }
    Ok(r)
}

/// `r^(l)`: the boundary trace of `Q^(l)` divided by `Q`, checked entrywise.
pub fn renormalization_factor(d: usize, l: usize) -> Result<Rational> {
    let s = subdivide(d, l)?;
    let trace = boundary_trace(&s, EliminationOrder::MinimumDegree)?;
    let r = proportionality(&trace, d)?;
    if r <= int(0) || r >= int(1) {
        return Err(Error::EigenrelationViolation(format!(
            "renormalisation factor {} outside (0,1)",
            format_rational(&r)
        )));
    }
    Ok(r)
}

/// Everything attached to one `(d, l)` pair.
#[derive(Clone, Debug)]
pub struct HarmonicCellData {
    pub d: usize,
    pub l: usize,
    pub r: Rational,
    /// `A_{i^l}` for `i = 1..=N(l)` (index 0 is cell 1).
    pub extension: Vec<Matrix<Rational>>,
    /// Common eigenvalue of the `y_{i,j}` directions for the corner matrices.
    pub s: Rational,
    /// `|s / r|`.
    pub theta_term: Rational,
    pub subdivision: SimplexSubdivision,
}

/// Values of the harmonic extension on `V^(l)`: row `v` holds the response at
/// vertex `v` to the standard basis vectors of `l(V_0)`.
pub fn extension_operator(
    s: &SimplexSubdivision,
    order: EliminationOrder,
) -> Result<Vec<Vec<Rational>>> {
    let d = s.dimension();
    let fixed: Vec<(usize, Vec<Rational>)> = (0..=d)
        .map(|k| {
            let mut e = vec![int(0); d + 1];
            e[k] = int(1);
            (k, e)
        })
        .collect();
    harmonic_extension(&level_system(s), &fixed, d + 1, order)
}

/// Harmonic-extension matrices and the factors `r^(l)`, `s^(l)`.
pub fn extension_matrices(d: usize, l: usize) -> Result<HarmonicCellData> {
    let s = subdivide(d, l)?;
    let r = renormalization_factor(d, l)?;
    let h = extension_operator(&s, EliminationOrder::MinimumDegree)?;
    let extension: Vec<Matrix<Rational>> = (0..s.num_cells())
        .map(|c| {
            let vs = s.cell_vertices(c);
            Matrix::from_fn(d + 1, d + 1, |row, col| h[vs[row]][col].clone())
        })
        .collect();
    let sval = secondary_eigenvalue(&extension[0], d)?;
    let theta_term = (&sval / &r).abs_val();
    Ok(HarmonicCellData {
        d,
        l,
        r,
        extension,
        s: sval,
        theta_term,
        subdivision: s,
    })
}

fn secondary_eigenvalue(a: &Matrix<Rational>, d: usize) -> Result<Rational> {
    let y = y_vector(d, 0, 2 % (d + 1));
    let ay = a.mul_vec(&y);
    let ip = 1 % (d + 1);
    Ok(ay[ip].clone() / y[ip].clone())
}

pub fn ones(d: usize) -> Vec<Rational> {
    vec![int(1); d + 1]
}

/// `u_i`: `-d` at `p_i`, `1` elsewhere (0-based `i`).
pub fn u_vector(d: usize, i: usize) -> Vec<Rational> {
    (0..=d).map(|k| if k == i { int(-(d as i64)) } else { int(1) }).collect()
}

/// `v_i`: `0` at `p_i`, `1/d` elsewhere.
pub fn v_vector(d: usize, i: usize) -> Vec<Rational> {
    (0..=d)
        .map(|k| if k == i { int(0) } else { Rational::new(1.into(), (d as i64).into()) })
        .collect()
}

/// Partner index `i'` used by `y_{i,j}`: the next vertex cyclically.
pub fn partner(d: usize, i: usize) -> usize {
    (i + 1) % (d + 1)
}

/// `y_{i,j}`: `1` at `p_{i'}`, `-1` at `p_j`.
pub fn y_vector(d: usize, i: usize, j: usize) -> Vec<Rational> {
    let ip = partner(d, i);
    assert!(j != i && j != ip, "j must differ from i and i'");
    (0..=d)
        .map(|k| {
            if k == ip {
                int(1)
            } else if k == j {
                int(-1)
            } else {
                int(0)
            }
        })
        .collect()
}

/// Orthogonal projection onto the complement of constants.
pub fn project<S: Scalar>(u: &[S]) -> Vec<S> {
    let n = S::from_i64(u.len() as i64);
    let mean = u.iter().fold(S::zero(), |a, x| a + x.clone()) / n;
    u.iter().map(|x| x.clone() - mean.clone()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub dimension: usize,
    pub level: usize,
    #[serde(with = "crate::scalar::serde_pq")]
    pub r: Rational,
    #[serde(with = "crate::scalar::serde_pq")]
    pub s: Rational,
    #[serde(with = "crate::scalar::serde_pq")]
    pub theta_term: Rational,
    pub r_float: f64,
    pub s_float: f64,
    pub theta_term_float: f64,
    /// Coefficients of `det(xI - A_{1^l})`, leading first.
    pub characteristic_polynomial: Vec<String>,
}

/// Checks exactly that `1, v_i, y_{i,j}` are right eigenvectors and `u_i` a
/// left eigenvector of every corner matrix, the three inner-product
/// identities, the factorisation of the characteristic polynomial and
/// `|s| < r`.
pub fn spectral_data(d: usize, l: usize) -> Result<SpectralReport> {
    let data = extension_matrices(d, l)?;
    verify_spectral(&data)?;
    let charpoly = data.extension[0].characteristic_polynomial();
    Ok(SpectralReport {
        dimension: d,
        level: l,
        r_float: data.r.to_f64(),
        s_float: data.s.to_f64(),
        theta_term_float: data.theta_term.to_f64(),
        characteristic_polynomial: charpoly.iter().map(format_rational).collect(),
        r: data.r,
        s: data.s,
        theta_term: data.theta_term,
    })
}

fn violation(what: String) -> Error {
    Error::EigenrelationViolation(what)
}

pub fn verify_spectral(data: &HarmonicCellData) -> Result<()> {
    let d = data.d;
    let r = &data.r;
    let s = &data.s;
    let one = ones(d);
    for i in 0..=d {
        let a = &data.extension[i];
        if a.mul_vec(&one) != one {
            return Err(violation(format!("A_{{{}}} 1 != 1", i + 1)));
        }
        let v = v_vector(d, i);
        let rv: Vec<Rational> = v.iter().map(|x| x * r).collect();
        if a.mul_vec(&v) != rv {
            return Err(violation(format!("A_{{{}}} v != r v", i + 1)));
        }
        let u = u_vector(d, i);
        let ru: Vec<Rational> = u.iter().map(|x| x * r).collect();
        if a.transpose().mul_vec(&u) != ru {
            return Err(violation(format!("A_{{{}}}^T u != r u", i + 1)));
        }
        if dot(&u, &one) != int(0) || dot(&u, &v) != int(1) {
            return Err(violation(format!("inner products of u_{}", i + 1)));
        }
        let ip = partner(d, i);
        for j in (0..=d).filter(|&j| j != i && j != ip) {
            let y = y_vector(d, i, j);
            let sy: Vec<Rational> = y.iter().map(|x| x * s).collect();
            if a.mul_vec(&y) != sy {
                return Err(violation(format!("A_{{{}}} y_{{{},{}}} != s y", i + 1, i + 1, j + 1)));
            }
            if dot(&u, &y) != int(0) {
                return Err(violation(format!("(u_{}, y) != 0", i + 1)));
            }
        }
        // det(xI - A) = (x - 1)(x - r)(x - s)^{d-1}
        let mut expected = vec![int(1)];
        let mut roots = vec![int(1), r.clone()];
        roots.extend(std::iter::repeat_n(s.clone(), d - 1));
        for root in roots {
            let mut next = expected.clone();
            next.push(int(0));
            for k in 1..next.len() {
                next[k] = &next[k] - &expected[k - 1] * &root;
            }
            expected = next;
        }
        if a.characteristic_polynomial() != expected {
            return Err(violation(format!("spectrum of A_{{{}}}", i + 1)));
        }
    }
    if s.abs_val() >= *r {
        return Err(violation("|s| >= r".into()));
    }
    Ok(())
}

impl HarmonicCellData {
    pub fn num_cells(&self) -> usize {
        self.extension.len()
    }

    /// Maximum principle in matrix form and the energy decomposition
    /// `Σ_i Q(A_i u, A_i u) / r = Q(u, u)` on a basis (hence for all `u`).
    pub fn verify_invariants(&self) -> Result<()> {
        let d = self.d;
        for (c, a) in self.extension.iter().enumerate() {
            for row in 0..=d {
                let sum: Rational = a.row(row).iter().sum();
                if sum != int(1) || a.row(row).iter().any(|x| *x < int(0) || *x > int(1)) {
                    return Err(violation(format!("row {row} of A_{{{}}} not stochastic", c + 1)));
                }
            }
        }
        for p in 0..=d {
            for q in 0..=d {
                let ep = unit(d, p);
                let eq = unit(d, q);
                let lhs = self
                    .extension
                    .iter()
                    .map(|a| q_form(&a.mul_vec(&ep), &a.mul_vec(&eq)))
                    .sum::<Rational>()
                    / &self.r;
                if lhs != q_form(&ep, &eq) {
                    return Err(violation(format!("energy decomposition fails at ({p},{q})")));
                }
            }
        }
        Ok(())
    }
}

pub fn unit(d: usize, k: usize) -> Vec<Rational> {
    let mut e = vec![int(0); d + 1];
    e[k] = int(1);
    e
}

/// `θ = max_{l∈T} |s^(l) / r^(l)|`.
pub fn theta(data: &[&HarmonicCellData]) -> Rational {
    data.iter()
        .map(|h| h.theta_term.clone())
        .max()
        .unwrap_or_else(|| int(0))
}
