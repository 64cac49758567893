//! Level-`m` conductance networks and Dirichlet problems on them.

use std::collections::{HashMap, VecDeque};

use super::{CellScalar, Gasket, Word};
use crate::error::{Error, Result};
use crate::scalar::{int, Rational, Scalar};
use crate::solver::SymmetricSystem;

/// How cell conductances are scaled when the network sits below a root
/// word `w0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Conductance `1 / r_v` for the continuation `v`, so `K_{w0}` carries
    /// its own renormalised energy.
    #[default]
    Root,
    /// Conductance `1 / r_{w0 v}`, the restriction of the global energy.
    Absolute,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkCell {
    /// Continuation below the network root.
    pub word: Word,
    pub vertices: Vec<usize>,
    pub conductance: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkEdge {
    pub a: usize,
    pub b: usize,
    pub conductance: Rational,
    /// Index of the cell contributing the edge, if any.
    pub cell: Option<usize>,
}

/// A finite resistor network. Networks built from a gasket carry integer
/// barycentric coordinates (relative to the root cell, common denominator
/// `denominator`) and their cell list.
#[derive(Clone, Debug)]
pub struct ConductanceNetwork {
    dimension: usize,
    num_vertices: usize,
    denominator: u128,
    coords: Vec<Vec<u128>>,
    cells: Vec<NetworkCell>,
    edges: Vec<NetworkEdge>,
    boundary: Vec<usize>,
    root: Word,
}

impl ConductanceNetwork {
    /// Ad hoc network on `num_vertices` vertices.
    pub fn from_edges(num_vertices: usize, edges: Vec<(usize, usize, Rational)>, boundary: Vec<usize>) -> Result<Self> {
        for &(a, b, ref c) in &edges {
            if a >= num_vertices || b >= num_vertices || a == b {
                return Err(Error::InvalidVertex(format!("edge ({a}, {b})")));
            }
            if *c <= int(0) {
                return Err(Error::InvalidParameter(format!("edge ({a}, {b}) has non-positive conductance")));
            }
        }
        if let Some(&v) = boundary.iter().find(|&&v| v >= num_vertices) {
            return Err(Error::InvalidVertex(format!("boundary vertex {v}")));
        }
        Ok(ConductanceNetwork {
            dimension: 0,
            num_vertices,
            denominator: 1,
            coords: Vec::new(),
            cells: Vec::new(),
            edges: edges
                .into_iter()
                .map(|(a, b, conductance)| NetworkEdge { a, b, conductance, cell: None })
                .collect(),
            boundary,
            root: Word::root(),
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn cells(&self) -> &[NetworkCell] {
        &self.cells
    }

    pub fn edges(&self) -> &[NetworkEdge] {
        &self.edges
    }

    /// Vertices of the root cell (`ψ_{w0}(V_0)`), or the declared boundary of
    /// an ad hoc network.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn root(&self) -> &Word {
        &self.root
    }

    pub fn denominator(&self) -> u128 {
        self.denominator
    }

    /// Scaled barycentric coordinates in the root frame (empty for ad hoc
    /// networks).
    pub fn coordinates(&self, v: usize) -> &[u128] {
        self.coords.get(v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn coordinates_f64(&self, v: usize) -> Vec<f64> {
        let den = self.denominator as f64;
        self.coordinates(v).iter().map(|&c| c as f64 / den).collect()
    }

    pub fn vertex_at(&self, scaled: &[u128]) -> Option<usize> {
        self.coords.iter().position(|c| c.as_slice() == scaled)
    }

    pub fn system<S: Scalar>(&self) -> SymmetricSystem<S> {
        SymmetricSystem::laplacian(
            self.num_vertices,
            self.edges
                .iter()
                .map(|e| (e.a, e.b, S::from_rational(&e.conductance))),
        )
    }

    /// `Σ c_xy (f(x) - f(y))^2` over the edges.
    pub fn energy<S: Scalar>(&self, f: &[S]) -> S {
        self.edges.iter().fold(S::zero(), |acc, e| {
            let diff = f[e.a].clone() - f[e.b].clone();
            acc + S::from_rational(&e.conductance) * diff.clone() * diff
        })
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_vertices];
        for e in &self.edges {
            adj[e.a].push(e.b);
            adj[e.b].push(e.a);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.num_vertices == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.num_vertices];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.num_vertices
    }
}

/// The level-`m` network of the whole gasket.
pub fn level_network(gasket: &Gasket, m: usize) -> Result<ConductanceNetwork> {
    level_network_with(gasket, m, &Word::root(), Normalization::Root)
}

/// Level-`m` network of `K_root`: cells `root·v` with `|v| = m`.
pub fn level_network_with(
    gasket: &Gasket,
    m: usize,
    root: &Word,
    normalization: Normalization,
) -> Result<ConductanceNetwork> {
    let d = gasket.dimension();
    let overflow = || Error::InvalidParameter(format!("coordinates at depth {m} overflow 128-bit integers"));
    let base = gasket.level_lcm();
    let mut denominator = 1u128;
    for _ in 0..m {
        denominator = denominator.checked_mul(base).ok_or_else(overflow)?;
    }
    let start_verts: Vec<Vec<u128>> = (0..=d)
        .map(|k| (0..=d).map(|j| u128::from(j == k)).collect())
        .collect();
    let init = CellState {
        r: int(1),
        den: 1,
        verts: start_verts,
        overflow: false,
    };
    let cells = gasket.descendants(root, m, init, |parent, letter| {
        let level = gasket.level(letter.level);
        let sub = &level.harmonic.subdivision;
        let l = letter.level as u128;
        let mut overflow = parent.overflow;
        let den = parent.den.checked_mul(l).unwrap_or_else(|| {
            overflow = true;
            1
        });
        let verts = sub
            .cell_vertices(letter.cell_index())
            .iter()
            .map(|&vid| {
                let bary = sub.vertex_scaled(vid);
                (0..=d)
                    .map(|coord| {
                        bary.iter().zip(&parent.verts).fold(0u128, |acc, (&b, p)| {
                            let term = (b as u128).checked_mul(p[coord]);
                            match term.and_then(|t| acc.checked_add(t)) {
                                Some(v) => v,
                                None => {
                                    overflow = true;
                                    0
                                }
                            }
                        })
                    })
                    .collect()
            })
            .collect();
        CellState {
            r: &parent.r * &level.harmonic.r,
            den,
            verts,
            overflow,
        }
    })?;

    let scale_root = match normalization {
        Normalization::Root => int(1),
        Normalization::Absolute => gasket.r_of(root),
    };
    let mut index: HashMap<Vec<u128>, usize> = HashMap::new();
    let mut coords: Vec<Vec<u128>> = Vec::new();
    let mut intern = |c: Vec<u128>, coords: &mut Vec<Vec<u128>>| -> usize {
        *index.entry(c.clone()).or_insert_with(|| {
            coords.push(c);
            coords.len() - 1
        })
    };
    for k in 0..=d {
        let c: Vec<u128> = (0..=d).map(|j| if j == k { denominator } else { 0 }).collect();
        intern(c, &mut coords);
    }
    let mut net_cells = Vec::with_capacity(cells.len());
    let mut edges = Vec::new();
    for (word, state) in cells {
        if state.overflow {
            return Err(overflow());
        }
        let factor = denominator / state.den;
        let mut vertices = Vec::with_capacity(d + 1);
        for v in state.verts {
            let scaled: Option<Vec<u128>> = v.iter().map(|&x| x.checked_mul(factor)).collect();
            vertices.push(intern(scaled.ok_or_else(overflow)?, &mut coords));
        }
        let conductance = (&state.r * &scale_root).recip();
        let cell = net_cells.len();
        for i in 0..=d {
            for j in i + 1..=d {
                edges.push(NetworkEdge {
                    a: vertices[i],
                    b: vertices[j],
                    conductance: conductance.clone(),
                    cell: Some(cell),
                });
            }
        }
        net_cells.push(NetworkCell {
            word: Word(word.letters()[root.len()..].to_vec()),
            vertices,
            conductance,
        });
    }
    Ok(ConductanceNetwork {
        dimension: d,
        num_vertices: coords.len(),
        denominator,
        coords,
        cells: net_cells,
        edges,
        boundary: (0..=d).collect(),
        root: root.clone(),
    })
}

#[derive(Clone, Debug)]
struct CellState {
    r: Rational,
    den: u128,
    verts: Vec<Vec<u128>>,
    overflow: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirichletSolution<S> {
    pub potentials: Vec<S>,
    pub energy: S,
    /// Relative residual of the iterative solve; 0 for exact solves.
    pub relative_residual: f64,
}

/// Energy-minimising extension of the prescribed `boundary` values.
pub fn dirichlet_solve<S: CellScalar>(
    network: &ConductanceNetwork,
    boundary: &[(usize, S)],
) -> Result<DirichletSolution<S>> {
    if boundary.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let n = network.num_vertices();
    let mut fixed: Vec<Option<S>> = vec![None; n];
    for (v, x) in boundary {
        if *v >= n {
            return Err(Error::InvalidVertex(format!("vertex {v} is not in the network ({n} vertices)")));
        }
        fixed[*v] = Some(x.clone());
    }
    if !network.is_connected() {
        return Err(Error::DisconnectedNetwork);
    }
    if fixed.iter().all(Option::is_some) {
        let potentials: Vec<S> = fixed.into_iter().map(Option::unwrap).collect();
        let energy = network.energy(&potentials);
        return Ok(DirichletSolution {
            potentials,
            energy,
            relative_residual: 0.0,
        });
    }
    let deduped: Vec<(usize, S)> = fixed
        .iter()
        .enumerate()
        .filter_map(|(v, x)| x.clone().map(|x| (v, x)))
        .collect();
    let (potentials, relative_residual) = S::solve_dirichlet(&network.system(), &deduped)?;
    let energy = network.energy(&potentials);
    Ok(DirichletSolution {
        potentials,
        energy,
        relative_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gasket::GasketSpec;
    use crate::scalar::rat;

    #[test]
    fn triangle_example() {
        let net = ConductanceNetwork::from_edges(
            3,
            vec![(0, 1, int(1)), (1, 2, int(1)), (0, 2, int(1))],
            vec![0, 1],
        )
        .unwrap();
        let sol = dirichlet_solve(&net, &[(0, int(1)), (1, int(0))]).unwrap();
        assert_eq!(sol.potentials, vec![int(1), int(0), rat(1, 2)]);
        assert_eq!(sol.energy, rat(3, 2));
        let fsol = dirichlet_solve(&net, &[(0, 1.0), (1, 0.0)]).unwrap();
        assert!((fsol.energy - 1.5).abs() < 1e-12);
    }

    #[test]
    fn error_cases() {
        let net = ConductanceNetwork::from_edges(4, vec![(0, 1, int(1)), (2, 3, int(1))], vec![0]).unwrap();
        assert!(matches!(dirichlet_solve(&net, &[(0, int(1))]), Err(Error::DisconnectedNetwork)));
        assert!(matches!(dirichlet_solve::<Rational>(&net, &[]), Err(Error::EmptyBoundary)));
        assert!(matches!(dirichlet_solve(&net, &[(9, int(1))]), Err(Error::InvalidVertex(_))));
    }

    #[test]
    fn level_one_network_of_sierpinski_gasket() {
        let g = Gasket::new(GasketSpec::homogeneous(2, 2).unwrap()).unwrap();
        let net = level_network(&g, 1).unwrap();
        assert_eq!(net.num_vertices(), 6);
        assert_eq!(net.cells().len(), 3);
        assert_eq!(net.edges().len(), 9);
        assert!(net.cells().iter().all(|c| c.conductance == rat(5, 3)));
        assert_eq!(net.coordinates(0), &[2, 0, 0]);
        let sol = dirichlet_solve(&net, &[(0, int(1)), (1, int(0)), (2, int(0))]).unwrap();
        // energy of the harmonic function equals Q(e_1) = 2 on the level-0 graph
        assert_eq!(sol.energy, int(2));
        let base = level_network(&g, 0).unwrap();
        assert_eq!(base.num_vertices(), 3);
        assert!(base.cells()[0].word.is_empty());
    }

    #[test]
    fn absolute_normalization_scales_conductance() {
        let g = Gasket::new(GasketSpec::homogeneous(2, 3).unwrap()).unwrap();
        let root: Word = "2^3".parse().unwrap();
        let rel = level_network_with(&g, 1, &root, Normalization::Root).unwrap();
        let abs = level_network_with(&g, 1, &root, Normalization::Absolute).unwrap();
        assert_eq!(rel.cells()[0].conductance, rat(15, 7));
        assert_eq!(abs.cells()[0].conductance, rat(225, 49));
        assert_eq!(rel.cells()[0].word.to_string(), "1^3");
    }
}
