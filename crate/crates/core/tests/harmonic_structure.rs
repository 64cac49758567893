//! Harmonic structure and network checks against independent computations.

use gasketlab::gasket::{dirichlet_solve, level_network, Gasket, GasketSpec};
use gasketlab::harmonic::{extension_matrices, q_form, renormalization_factor};
use gasketlab::scalar::{int, rat};
use gasketlab::{Rational, Scalar};

/// Lattice points `k ∈ N^{d+1}` with `Σ k = total`.
fn compositions(parts: usize, total: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .flat_map(|first| {
            compositions(parts - 1, total - first).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Effective energy on the corners of the level-`l` subdivision of the
/// `d`-simplex with unit conductances, for corner data `u`, by plain
/// Gauss-Seidel relaxation in `f64`.
fn traced_energy_oracle(d: usize, l: usize, u: &[f64]) -> f64 {
    let points = compositions(d + 1, l);
    let index = |p: &[usize]| points.iter().position(|q| q == p).unwrap();
    let mut edges = Vec::new();
    for k in compositions(d + 1, l - 1) {
        let verts: Vec<usize> = (0..=d)
            .map(|i| {
                let mut p = k.clone();
                p[i] += 1;
                index(&p)
            })
            .collect();
        for a in 0..verts.len() {
            for b in a + 1..verts.len() {
                edges.push((verts[a], verts[b]));
            }
        }
    }
    let n = points.len();
    let corner = |p: &[usize]| p.iter().position(|&c| c == l);
    let mut f = vec![0.0; n];
    let mut fixed = vec![false; n];
    for (v, p) in points.iter().enumerate() {
        if let Some(i) = corner(p) {
            f[v] = u[i];
            fixed[v] = true;
        }
    }
    let mut nbrs = vec![Vec::new(); n];
    for &(a, b) in &edges {
        nbrs[a].push(b);
        nbrs[b].push(a);
    }
    for _ in 0..20_000 {
        for v in 0..n {
            if !fixed[v] {
                f[v] = nbrs[v].iter().map(|&w| f[w]).sum::<f64>() / nbrs[v].len() as f64;
            }
        }
    }
    edges.iter().map(|&(a, b)| (f[a] - f[b]).powi(2)).sum()
}

#[test]
fn renormalization_matches_relaxation_oracle() {
    for (d, l) in [(3, 2), (2, 3), (2, 2), (3, 3)] {
        let u: Vec<f64> = (0..=d).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        // the base form gives Q(e_0, e_0) = d
        let oracle = traced_energy_oracle(d, l, &u) / d as f64;
        let r = renormalization_factor(d, l).unwrap().to_f64();
        assert!((oracle - r).abs() < 1e-10, "d={d} l={l}: {oracle} vs {r}");
    }
}

#[test]
fn three_dimensional_level_two_factor() {
    assert_eq!(renormalization_factor(3, 2).unwrap(), rat(2, 3));
}

#[test]
fn cell_energies_recompose_the_form() {
    let u = [rat(3, 7), int(-2), rat(5, 3), int(1)];
    for (d, l) in [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3)] {
        let hd = extension_matrices(d, l).unwrap();
        let u = &u[..=d];
        let total: Rational = hd
            .extension
            .iter()
            .map(|a| {
                let x = a.mul_vec(u);
                q_form(&x, &x) / &hd.r
            })
            .sum();
        assert_eq!(total, q_form(u, u), "d={d} l={l}");
    }
}

#[test]
fn extension_rows_are_averages() {
    for (d, l) in [(2, 2), (2, 3), (3, 2), (4, 2)] {
        let hd = extension_matrices(d, l).unwrap();
        for a in &hd.extension {
            for i in 0..a.rows() {
                let row = a.row(i);
                assert!(row.iter().all(|x| *x >= int(0)));
                assert_eq!(row.iter().sum::<Rational>(), int(1));
            }
        }
    }
}

#[test]
fn harmonic_values_stay_between_boundary_extremes() {
    let g = Gasket::new(GasketSpec::seeded(2, &[(2, 0.5), (3, 0.5)], 1).unwrap()).unwrap();
    let u = vec![rat(-1, 2), int(2), rat(1, 3)];
    for (_, values) in g.harmonic_values::<Rational>(4, &u).unwrap() {
        for x in values {
            assert!(x >= rat(-1, 2) && x <= int(2));
        }
    }
}

#[test]
fn standard_gasket_level_two_has_fifteen_vertices() {
    let g = Gasket::new(GasketSpec::homogeneous(2, 2).unwrap()).unwrap();
    let net = level_network(&g, 2).unwrap();
    assert_eq!(net.num_vertices(), 15);
    assert_eq!(net.cells().len(), 9);
    assert!(net.is_connected());
}

fn constancy(spec: GasketSpec, max_exact: usize, max_float: usize) {
    let g = Gasket::new(spec).unwrap();
    let d = g.dimension();
    let u: Vec<Rational> = (0..=d).map(|i| rat(i as i64 * i as i64 - 1, i as i64 + 2)).collect();
    let q = q_form(&u, &u);
    for m in 0..=max_float {
        let net = level_network(&g, m).unwrap();
        if m <= max_exact {
            let fixed: Vec<(usize, Rational)> = net.boundary().iter().copied().zip(u.iter().cloned()).collect();
            assert_eq!(dirichlet_solve(&net, &fixed).unwrap().energy, q, "exact m={m}");
        }
        let fixed: Vec<(usize, f64)> = net.boundary().iter().copied().zip(u.iter().map(Scalar::to_f64)).collect();
        let e = dirichlet_solve(&net, &fixed).unwrap().energy;
        assert!((e - q.to_f64()).abs() <= 1e-12 * q.to_f64(), "float m={m}: {e}");
    }
}

#[test]
fn harmonic_energy_is_level_independent_homogeneous() {
    constancy(GasketSpec::homogeneous(2, 2).unwrap(), 6, 6);
}

#[test]
fn harmonic_energy_is_level_independent_mixed() {
    constancy(GasketSpec::seeded(2, &[(2, 0.5), (3, 0.5)], 1).unwrap(), 4, 6);
}

#[test]
fn harmonic_energy_is_level_independent_three_dimensional() {
    constancy(GasketSpec::homogeneous(3, 2).unwrap(), 4, 5);
}
