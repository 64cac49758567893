//! Relative capacities on cell networks and the energy/capacity balance
//! constants of harmonic functions.
//!
//! Below a word `w` the cell `K_w` is split into the `d + 1` corner chains
//! `w v^(i)`, `v^(i) = i^{l_1} i^{l_2} … i^{l_N}` (each letter the corner cell
//! at the current label), and the inner part `V`. Capacities are computed on
//! level networks below `w` with potential 0 on `ψ_w(V_0)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::energy::energy_mass;
use crate::error::{Error, Result};
use crate::gasket::{dirichlet_solve, level_network_with, CellScalar, ConductanceNetwork, Gasket, Letter, Normalization, Word};
use crate::par;
use crate::scalar::{format_rational, int, rat, rational_from_f64, ArithmeticMode, Rational, Scalar};
use crate::solver::{EliminationOrder, SymmetricSystem};

/// Vertices of the depth-`N` network below `w` that lie in the closure of
/// `K_w` minus the corner chains.
#[derive(Clone, Debug)]
pub struct InnerSetDescriptor {
    pub word: Word,
    pub depth: usize,
    /// `v^(i)` for each corner `i`, relative to `w`.
    pub corner_chains: Vec<Word>,
    pub network: ConductanceNetwork,
    pub inner: Vec<usize>,
}

impl InnerSetDescriptor {
    pub fn excluded_words(&self) -> Vec<Word> {
        self.corner_chains.iter().map(|v| self.word.concat(v)).collect()
    }
}

/// Corner chain of length `n` at corner `i` below `w`.
pub fn corner_chain(g: &Gasket, w: &Word, i: usize, n: usize) -> Word {
    let mut full = w.clone();
    for _ in 0..n {
        let level = g.label(&full);
        full = full.child(Letter::new(i as u32 + 1, level));
    }
    Word(full.letters()[w.len()..].to_vec())
}

/// Splits the vertices of a network below `w` (depth at least `N`) into the
/// inner set and the free corner-interior vertices.
fn classify(network: &ConductanceNetwork, chains: &[Word]) -> (Vec<usize>, Vec<usize>) {
    let n = network.num_vertices();
    let mut inner = vec![false; n];
    for cell in network.cells() {
        let in_corner = chains.iter().position(|c| cell.word.starts_with(c));
        match in_corner {
            None => cell.vertices.iter().for_each(|&v| inner[v] = true),
            Some(i) => {
                // vertex j of the corner cell itself sits at the end of the
                // j-corner continuation below it
                let chain_len = chains[i].len();
                let rest = &cell.word.letters()[chain_len..];
                for j in 0..cell.vertices.len() {
                    if rest.iter().all(|l| l.cell_index() == j) {
                        inner[cell.vertices[j]] = true;
                    }
                }
            }
        }
    }
    for &b in network.boundary() {
        inner[b] = false;
    }
    let boundary: Vec<bool> = (0..n).map(|v| network.boundary().contains(&v)).collect();
    let inner_ids = (0..n).filter(|&v| inner[v]).collect();
    let free = (0..n).filter(|&v| !inner[v] && !boundary[v]).collect();
    (inner_ids, free)
}

pub fn inner_set(g: &Gasket, w: &Word, n: usize) -> Result<InnerSetDescriptor> {
    g.check_admissible(w)?;
    if n == 0 {
        return Err(Error::InvalidParameter("inner sets need N >= 1".into()));
    }
    let corner_chains: Vec<Word> = (0..=g.dimension()).map(|i| corner_chain(g, w, i, n)).collect();
    let network = level_network_with(g, n, w, Normalization::Root)?;
    let (inner, _) = classify(&network, &corner_chains);
    if inner.is_empty() {
        return Err(Error::EmptyInnerSet);
    }
    Ok(InnerSetDescriptor {
        word: w.clone(),
        depth: n,
        corner_chains,
        network,
        inner,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityLevel<S> {
    pub refinement: usize,
    pub network_depth: usize,
    pub vertices: usize,
    pub value: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityResult<S> {
    pub target: String,
    pub levels: Vec<CapacityLevel<S>>,
    /// Equilibrium potential on the finest network (empty when only the
    /// value was needed).
    pub potential: Vec<S>,
}

impl<S: Scalar> CapacityResult<S> {
    pub fn finest(&self) -> &S {
        &self.levels.last().expect("at least one refinement").value
    }

    /// Exact comparison in exact mode, `1e-12` relative slack in float mode.
    pub fn is_non_increasing(&self) -> bool {
        self.levels.windows(2).all(|p| {
            if S::is_exact() {
                p[1].value <= p[0].value
            } else {
                p[1].value.to_f64() <= p[0].value.to_f64() * (1.0 + 1e-12)
            }
        })
    }

    /// `(c_K - c_{K-1}) / c_{K-1}`, 0 without a previous level.
    pub fn last_relative_change(&self) -> f64 {
        match self.levels.as_slice() {
            [.., a, b] => (b.value.to_f64() - a.value.to_f64()) / a.value.to_f64(),
            _ => 0.0,
        }
    }
}

/// `Cp(V; U)` below `desc.word` for refinements `k = 0..=refinement`.
pub fn relative_capacity<S: CellScalar>(
    g: &Gasket,
    desc: &InnerSetDescriptor,
    refinement: usize,
    normalization: Normalization,
) -> Result<CapacityResult<S>> {
    let mut levels = Vec::with_capacity(refinement + 1);
    let mut potential = Vec::new();
    for k in 0..=refinement {
        let depth = desc.depth + k;
        let net = level_network_with(g, depth, &desc.word, normalization)?;
        let (inner, _) = classify(&net, &desc.corner_chains);
        let fixed: Vec<(usize, S)> = net
            .boundary()
            .iter()
            .map(|&b| (b, S::zero()))
            .chain(inner.iter().map(|&v| (v, S::one())))
            .collect();
        let sol = dirichlet_solve(&net, &fixed)?;
        levels.push(CapacityLevel {
            refinement: k,
            network_depth: depth,
            vertices: net.num_vertices(),
            value: sol.energy,
        });
        potential = sol.potentials;
    }
    Ok(CapacityResult {
        target: format!("inner set of `{}` at depth {}", desc.word, desc.depth),
        levels,
        potential,
    })
}

/// Closed form of the inner-set capacity: each corner cell `K_{w v^(i)}`
/// carries the harmonic function that is 0 at its outer corner and 1 at its
/// other `d` vertices, of energy `d / r_{v^(i)}`.
pub fn corner_capacity_formula(g: &Gasket, desc: &InnerSetDescriptor, normalization: Normalization) -> Rational {
    let d = int(g.dimension() as i64);
    let scale = match normalization {
        Normalization::Root => int(1),
        Normalization::Absolute => g.r_of(&desc.word).recip(),
    };
    desc.excluded_words()
        .iter()
        .map(|full| &d * &g.r_of(full).recip() * g.r_of(&desc.word))
        .sum::<Rational>()
        * scale
}

/// `Cp({x}; U)` for the vertex `x` of the depth-`base_depth` network below `w`.
pub fn point_capacity<S: CellScalar>(
    g: &Gasket,
    w: &Word,
    base_depth: usize,
    x: usize,
    refinement: usize,
    normalization: Normalization,
) -> Result<CapacityResult<S>> {
    let base = level_network_with(g, base_depth, w, normalization)?;
    if x >= base.num_vertices() || base.boundary().contains(&x) {
        return Err(Error::InvalidVertex(format!(
            "vertex {x} is not a non-boundary vertex of the depth-{base_depth} network"
        )));
    }
    let coords = base.coordinates(x).to_vec();
    let mut levels = Vec::with_capacity(refinement + 1);
    let mut potential = Vec::new();
    for k in 0..=refinement {
        let net = if k == 0 {
            base.clone()
        } else {
            level_network_with(g, base_depth + k, w, normalization)?
        };
        let id = locate(&net, &base, &coords)?;
        let fixed: Vec<(usize, S)> = net
            .boundary()
            .iter()
            .map(|&b| (b, S::zero()))
            .chain(std::iter::once((id, S::one())))
            .collect();
        let sol = dirichlet_solve(&net, &fixed)?;
        levels.push(CapacityLevel {
            refinement: k,
            network_depth: base_depth + k,
            vertices: net.num_vertices(),
            value: sol.energy,
        });
        potential = sol.potentials;
    }
    Ok(CapacityResult {
        target: format!("vertex {x} of the depth-{base_depth} network below `{w}`"),
        levels,
        potential,
    })
}

fn locate(net: &ConductanceNetwork, base: &ConductanceNetwork, coords: &[u128]) -> Result<usize> {
    let factor = net.denominator() / base.denominator();
    let scaled: Vec<u128> = coords.iter().map(|c| c * factor).collect();
    net.vertex_at(&scaled)
        .ok_or_else(|| Error::InvalidVertex("vertex missing from refined network".into()))
}

/// Point capacities of several vertices of the depth-`base_depth` network,
/// sharing one elimination per refinement.
pub fn point_capacities<S: CellScalar>(
    g: &Gasket,
    w: &Word,
    base_depth: usize,
    xs: &[usize],
    refinement: usize,
    normalization: Normalization,
) -> Result<Vec<CapacityResult<S>>> {
    let base = level_network_with(g, base_depth, w, normalization)?;
    for &x in xs {
        if x >= base.num_vertices() || base.boundary().contains(&x) {
            return Err(Error::InvalidVertex(format!("vertex {x}")));
        }
    }
    let coords: Vec<Vec<u128>> = xs.iter().map(|&x| base.coordinates(x).to_vec()).collect();
    let mut out: Vec<CapacityResult<S>> = xs
        .iter()
        .map(|x| CapacityResult {
            target: format!("vertex {x} of the depth-{base_depth} network below `{w}`"),
            levels: Vec::new(),
            potential: Vec::new(),
        })
        .collect();
    for k in 0..=refinement {
        let net = if k == 0 {
            base.clone()
        } else {
            level_network_with(g, base_depth + k, w, normalization)?
        };
        if !net.is_connected() {
            return Err(Error::DisconnectedNetwork);
        }
        let ids: Vec<usize> = coords.iter().map(|c| locate(&net, &base, c)).collect::<Result<_>>()?;
        let mut keep = ids.clone();
        keep.extend_from_slice(net.boundary());
        let reduced = net.system::<S>().schur_complement(&keep, EliminationOrder::MinimumDegree)?;
        let reduced = SymmetricSystem::from_dense(&reduced);
        let nb = net.boundary().len();
        for (slot, res) in out.iter_mut().enumerate() {
            let mut keep_one = vec![slot];
            keep_one.extend(xs.len()..xs.len() + nb);
            let m = reduced.schur_complement(&keep_one, EliminationOrder::MinimumDegree)?;
            res.levels.push(CapacityLevel {
                refinement: k,
                network_depth: base_depth + k,
                vertices: net.num_vertices(),
                value: m[(0, 0)].clone(),
            });
        }
    }
    Ok(out)
}

/// Configuration of a balance report.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct A3Config {
    /// Depth of the sampled words.
    pub depth: usize,
    /// Corner-chain length `N`.
    pub corner_depth: usize,
    /// Harmonic functions per word.
    pub samples: usize,
    /// Upper bound on sampled words (equispaced in enumeration order).
    pub max_words: usize,
    /// Inner vertices per word whose point capacity is computed.
    pub points_per_word: usize,
    pub refinement: usize,
    pub seed: u64,
}

impl A3Config {
    pub fn new(depth: usize, corner_depth: usize) -> Self {
        A3Config {
            depth,
            corner_depth,
            samples: 64,
            max_words: 16,
            points_per_word: 8,
            refinement: 1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct A3Sample {
    pub word: String,
    pub sample_id: usize,
    pub nu_u: f64,
    pub nu_v: f64,
    pub osc: f64,
    pub cap_rel: f64,
    pub cap_pt: f64,
    pub ratio_a: f64,
    pub ratio_b: f64,
    pub ratio_c: f64,
    /// `ν_h(U) ≤ 2 ν_h(V)`, decided exactly.
    pub half_energy_inner: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct WordCapacity {
    pub word: String,
    pub cap_rel: Vec<f64>,
    pub cap_rel_exact: Option<String>,
    pub cap_pt_min: Vec<f64>,
    pub points: usize,
    pub non_increasing: bool,
    pub relative_change_rel: f64,
    pub relative_change_pt: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct A3Report {
    pub spec_digest: String,
    pub config: A3Config,
    pub arithmetic_mode: ArithmeticMode,
    /// Capacities use conductances `1 / r_{w v}` so all constants are
    /// invariant under rescaling of the base cell.
    pub normalization: String,
    pub oscillation: String,
    pub words: Vec<WordCapacity>,
    pub samples: Vec<A3Sample>,
    pub c_a: f64,
    pub c_b: f64,
    pub c_c: f64,
    /// Exact check of `C_a ≤ 2` on every sample.
    pub half_energy_inner_all: bool,
    pub capacities_non_increasing: bool,
}

/// Words of `tilde W_m` used by a report: all of them when they fit, else
/// `max` equispaced in enumeration order.
pub fn sample_words(g: &Gasket, m: usize, max: usize) -> Result<Vec<Word>> {
    let all = g.enumerate_words(m)?;
    let count = all.len();
    if count <= max {
        return Ok(all.into_iter().map(|r| r.word).collect());
    }
    Ok((0..max).map(|i| all[i * count / max].word.clone()).collect())
}

/// Seeded directions on the unit sphere of `R^{d+1}`, converted exactly.
pub fn sphere_samples(d: usize, count: usize, seed: u64, stream: u64) -> Vec<Vec<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = (0..=d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let u: Vec<Rational> = x
            .iter()
            .map(|v| rational_from_f64(v / norm).expect("finite sample"))
            .collect();
        // constants carry no energy
        if u.iter().all(|c| *c == u[0]) {
            continue;
        }
        out.push(u);
    }
    out
}

fn pick_points(inner: &[usize], count: usize) -> Vec<usize> {
    if inner.len() <= count {
        return inner.to_vec();
    }
    (0..count).map(|i| inner[i * inner.len() / count]).collect()
}

struct WordOutcome {
    capacity: WordCapacity,
    samples: Vec<A3Sample>,
}

fn word_outcome<S: CellScalar>(g: &Gasket, w: &Word, index: usize, cfg: &A3Config) -> Result<WordOutcome> {
    let desc = inner_set(g, w, cfg.corner_depth)?;
    let rel = relative_capacity::<S>(g, &desc, cfg.refinement, Normalization::Absolute)?;
    let points = pick_points(&desc.inner, cfg.points_per_word);
    let pts = point_capacities::<S>(g, w, cfg.corner_depth, &points, cfg.refinement, Normalization::Absolute)?;
    let cap_rel = rel.finest().to_f64();
    let cap_pt = pts
        .iter()
        .map(|p| p.finest().to_f64())
        .fold(f64::INFINITY, f64::min);
    let cap_pt_min: Vec<f64> = (0..=cfg.refinement)
        .map(|k| pts.iter().map(|p| p.levels[k].value.to_f64()).fold(f64::INFINITY, f64::min))
        .collect();
    let pt_change = match cap_pt_min.as_slice() {
        [.., a, b] => (b - a) / a,
        _ => 0.0,
    };
    let non_increasing = rel.is_non_increasing() && pts.iter().all(CapacityResult::is_non_increasing);
    let excluded = desc.excluded_words();
    let a_w = g.chain_matrix::<Rational>(w)?;
    let mut samples = Vec::with_capacity(cfg.samples);
    for (sample_id, u) in sphere_samples(g.dimension(), cfg.samples, cfg.seed, index as u64)
        .into_iter()
        .enumerate()
    {
        let nu_u = energy_mass(g, w, &u)?;
        let corners: Rational = excluded
            .iter()
            .map(|x| energy_mass(g, x, &u))
            .sum::<Result<Rational>>()?;
        let nu_v = &nu_u - corners;
        let values = a_w.mul_vec(&u);
        let max = values.iter().max().expect("non-empty").clone();
        let min = values.iter().min().expect("non-empty").clone();
        let osc = (max - min).to_f64();
        let (nu_u_f, nu_v_f) = (nu_u.to_f64(), nu_v.to_f64());
        samples.push(A3Sample {
            word: w.encode(),
            sample_id,
            nu_u: nu_u_f,
            nu_v: nu_v_f,
            osc,
            cap_rel,
            cap_pt,
            ratio_a: nu_u_f / nu_v_f,
            ratio_b: cap_rel * osc * osc / nu_u_f,
            ratio_c: nu_u_f / (cap_pt * osc * osc),
            half_energy_inner: nu_u <= rat(2, 1) * nu_v,
        });
    }
    Ok(WordOutcome {
        capacity: WordCapacity {
            word: w.encode(),
            cap_rel: rel.levels.iter().map(|l| l.value.to_f64()).collect(),
            cap_rel_exact: rel.finest().as_exact().map(format_rational),
            cap_pt_min,
            points: points.len(),
            non_increasing,
            relative_change_rel: rel.last_relative_change(),
            relative_change_pt: pt_change,
        },
        samples,
    })
}

/// Empirical balance constants over sampled words of depth `cfg.depth`.
pub fn a3_report<S: CellScalar>(g: &Gasket, cfg: &A3Config) -> Result<A3Report> {
    if cfg.samples == 0 || cfg.max_words == 0 {
        return Err(Error::InvalidParameter("sample counts must be at least 1".into()));
    }
    let words = sample_words(g, cfg.depth, cfg.max_words)?;
    let indexed: Vec<(usize, Word)> = words.into_iter().enumerate().collect();
    let outcomes = par::try_map(&indexed, |(i, w)| word_outcome::<S>(g, w, *i, cfg))?;
    let mut report = A3Report {
        spec_digest: g.spec().digest(),
        config: cfg.clone(),
        arithmetic_mode: if S::is_exact() { ArithmeticMode::Exact } else { ArithmeticMode::Float },
        normalization: "absolute".into(),
        oscillation: "max minus min of the cell vertex values".into(),
        words: Vec::with_capacity(outcomes.len()),
        samples: Vec::new(),
        c_a: 0.0,
        c_b: 0.0,
        c_c: 0.0,
        half_energy_inner_all: true,
        capacities_non_increasing: true,
    };
    for o in outcomes {
        report.capacities_non_increasing &= o.capacity.non_increasing;
        report.words.push(o.capacity);
        for s in o.samples {
            report.c_a = report.c_a.max(s.ratio_a);
            report.c_b = report.c_b.max(s.ratio_b);
            report.c_c = report.c_c.max(s.ratio_c);
            report.half_energy_inner_all &= s.half_energy_inner;
            report.samples.push(s);
        }
    }
    Ok(report)
}

impl A3Sample {
    /// Row of the per-sample CSV.
    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.word.clone(),
            self.sample_id.to_string(),
            self.nu_u.to_string(),
            self.nu_v.to_string(),
            self.osc.to_string(),
            self.cap_rel.to_string(),
            self.cap_pt.to_string(),
            self.ratio_a.to_string(),
            self.ratio_b.to_string(),
            self.ratio_c.to_string(),
        ]
    }
}

pub const A3_CSV_HEADER: [&str; 10] = [
    "word", "sample_id", "nu_U", "nu_V", "osc", "cap_rel", "cap_pt", "ratio_a", "ratio_b", "ratio_c",
];
