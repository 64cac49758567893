//! Inhomogeneous gaskets: the word tree cut out by a labelling rule, the
//! per-word weights `r_w` and `μ(K_w)`, extension-matrix chains and
//! harmonic functions.

mod network;
mod spec;
mod word;

use std::collections::BTreeMap;

pub use network::{
    dirichlet_solve, level_network, level_network_with, ConductanceNetwork, DirichletSolution,
    NetworkCell, NetworkEdge, Normalization,
};
pub use spec::{GasketSpec, LabelHash, Labeling, MeasureSpec};
pub use word::{Letter, Word};

use crate::error::{Error, Result};
use crate::harmonic::{extension_matrices, HarmonicCellData};
use crate::matrix::Matrix;
use crate::par;
use crate::scalar::{int, Rational, Scalar};
use crate::solver::{dirichlet_residual, harmonic_extension, EliminationOrder, SymmetricSystem};

pub const DEFAULT_WORD_BUDGET: usize = 10_000_000;

/// Largest relative residual accepted from a float-mode Dirichlet solve.
pub const FLOAT_RESIDUAL_TOL: f64 = 1e-12;

/// Per-level tables shared by every cell with that label.
#[derive(Clone, Debug)]
pub struct LevelData {
    pub harmonic: HarmonicCellData,
    pub ext_f64: Vec<Matrix<f64>>,
    pub r_f64: f64,
    /// `μ` weight of each letter of this level.
    pub letter_mu: Vec<Rational>,
    pub letter_mu_f64: Vec<f64>,
}

impl LevelData {
    pub fn num_cells(&self) -> usize {
        self.harmonic.num_cells()
    }
}

/// Scalars the cell-level algorithms can run in.
pub trait CellScalar: Scalar {
    fn extension(level: &LevelData, cell: usize) -> &Matrix<Self>;
    fn factor(level: &LevelData) -> Self;
    fn letter_mu(level: &LevelData, cell: usize) -> Self;
    /// Dirichlet problem on a Laplacian system; returns the potentials and
    /// the achieved relative residual (0 for exact solves).
    fn solve_dirichlet(sys: &SymmetricSystem<Self>, fixed: &[(usize, Self)]) -> Result<(Vec<Self>, f64)>;
}

impl CellScalar for Rational {
    fn extension(level: &LevelData, cell: usize) -> &Matrix<Self> {
        &level.harmonic.extension[cell]
    }
    fn factor(level: &LevelData) -> Self {
        level.harmonic.r.clone()
    }
    fn letter_mu(level: &LevelData, cell: usize) -> Self {
        level.letter_mu[cell].clone()
    }
    fn solve_dirichlet(sys: &SymmetricSystem<Self>, fixed: &[(usize, Self)]) -> Result<(Vec<Self>, f64)> {
        let fixed: Vec<(usize, Vec<Rational>)> = fixed.iter().map(|(v, x)| (*v, vec![x.clone()])).collect();
        let sol = harmonic_extension(sys, &fixed, 1, EliminationOrder::MinimumDegree)?;
        Ok((sol.into_iter().map(|mut v| v.remove(0)).collect(), 0.0))
    }
}

impl CellScalar for f64 {
    fn extension(level: &LevelData, cell: usize) -> &Matrix<Self> {
        &level.ext_f64[cell]
    }
    fn factor(level: &LevelData) -> Self {
        level.r_f64
    }
    fn letter_mu(level: &LevelData, cell: usize) -> Self {
        level.letter_mu_f64[cell]
    }
    fn solve_dirichlet(sys: &SymmetricSystem<Self>, fixed: &[(usize, Self)]) -> Result<(Vec<Self>, f64)> {
        let rows: Vec<(usize, Vec<f64>)> = fixed.iter().map(|&(v, x)| (v, vec![x])).collect();
        let values: Vec<f64> = harmonic_extension(sys, &rows, 1, EliminationOrder::MinimumDegree)?
            .into_iter()
            .map(|v| v[0])
            .collect();
        let mut is_fixed = vec![false; sys.len()];
        for &(v, _) in fixed {
            is_fixed[v] = true;
        }
        let residual = dirichlet_residual(sys, &values, &is_fixed);
        if residual.is_nan() || residual > FLOAT_RESIDUAL_TOL {
            return Err(Error::Solver(format!("relative residual {residual:e} above {FLOAT_RESIDUAL_TOL:e}")));
        }
        Ok((values, residual))
    }
}

/// A word of `tilde W_m` with its resistance scaling and measure.
#[derive(Clone, Debug, PartialEq)]
pub struct WordRecord {
    pub word: Word,
    pub r: Rational,
    pub mu: Rational,
}

struct Node<T> {
    word: Word,
    hash: Option<LabelHash>,
    state: T,
}

/// A gasket specification together with the harmonic data of its levels.
#[derive(Clone, Debug)]
pub struct Gasket {
    spec: GasketSpec,
    levels: BTreeMap<u32, LevelData>,
    budget: usize,
}

/// Subtrees smaller than this are not worth splitting across threads.
const SPLIT_WIDTH: usize = 64;

impl Gasket {
    pub fn new(spec: GasketSpec) -> Result<Self> {
        spec.validate()?;
        let d = spec.dimension;
        let mut levels = BTreeMap::new();
        for &l in &spec.levels {
            let harmonic = extension_matrices(d, l as usize)?;
            let n = harmonic.num_cells();
            let letter_mu = match &spec.measure {
                MeasureSpec::Natural => vec![Rational::new(1.into(), (n as i64).into()); n],
                MeasureSpec::LetterWeights(map) => map[&l].clone(),
            };
            let ext_f64 = harmonic.extension.iter().map(Matrix::to_f64).collect();
            levels.insert(
                l,
                LevelData {
                    r_f64: harmonic.r.to_f64(),
                    harmonic,
                    ext_f64,
                    letter_mu_f64: letter_mu.iter().map(Scalar::to_f64).collect(),
                    letter_mu,
                },
            );
        }
        Ok(Gasket {
            spec,
            levels,
            budget: DEFAULT_WORD_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn spec(&self) -> &GasketSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension
    }

    pub fn level(&self, l: u32) -> &LevelData {
        &self.levels[&l]
    }

    pub fn levels(&self) -> impl Iterator<Item = (&u32, &LevelData)> {
        self.levels.iter()
    }

    /// Least common multiple of the levels; coordinates at depth `m` have a
    /// denominator dividing its `m`-th power.
    pub fn level_lcm(&self) -> u128 {
        self.spec.levels.iter().fold(1u128, |acc, &l| {
            let g = num_integer::gcd(acc, l as u128);
            acc / g * l as u128
        })
    }

    fn root_hash(&self, root: &Word) -> Option<LabelHash> {
        self.spec
            .seed()
            .map(|s| LabelHash::start(s).feed(root.encode().as_bytes()))
    }

    fn label_of_node<T>(&self, node: &Node<T>) -> u32 {
        self.spec.label_with_hash(&node.word, node.hash)
    }

    pub fn label(&self, word: &Word) -> u32 {
        self.spec.label_with_hash(word, self.root_hash(word))
    }

    /// Every letter's level must be the label of its prefix.
    pub fn check_admissible(&self, word: &Word) -> Result<()> {
        let mut prefix = Word::root();
        let mut hash = self.root_hash(&prefix);
        for letter in word.letters() {
            let expected = self.spec.label_with_hash(&prefix, hash);
            if letter.level != expected {
                return Err(Error::InadmissibleWord {
                    word: word.encode(),
                    reason: format!("letter {letter} after `{prefix}` must have level {expected}"),
                });
            }
            let n = self.levels[&letter.level].num_cells();
            if letter.cell as usize > n {
                return Err(Error::InadmissibleWord {
                    word: word.encode(),
                    reason: format!("cell {} exceeds N({}) = {n}", letter.cell, letter.level),
                });
            }
            hash = hash.map(|h| h.extend(prefix.is_empty(), &letter.to_string()));
            prefix = prefix.child(*letter);
        }
        Ok(())
    }

    /// `r_w = Π r^(l_j)`.
    pub fn r_of(&self, word: &Word) -> Rational {
        word.letters()
            .iter()
            .map(|l| self.levels[&l.level].harmonic.r.clone())
            .product()
    }

    pub fn mu_of(&self, word: &Word) -> Rational {
        word.letters()
            .iter()
            .map(|l| self.levels[&l.level].letter_mu[l.cell_index()].clone())
            .product()
    }

    fn children<T>(&self, node: &Node<T>, step: &(impl Fn(&T, &Letter) -> T + Sync)) -> Vec<Node<T>> {
        let level = self.label_of_node(node);
        let n = self.levels[&level].num_cells() as u32;
        (1..=n)
            .map(|c| {
                let letter = Letter::new(c, level);
                Node {
                    hash: node.hash.map(|h| h.extend(node.word.is_empty(), &letter.to_string())),
                    word: node.word.child(letter),
                    state: step(&node.state, &letter),
                }
            })
            .collect()
    }

    /// Number of admissible words of length `depth` below `root`; fails once
    /// the count passes the budget.
    pub fn count_words(&self, root: &Word, depth: usize) -> Result<usize> {
        self.check_admissible(root)?;
        fn rec(g: &Gasket, node: &Node<()>, remaining: usize, acc: &mut usize) -> bool {
            if remaining == 0 {
                *acc += 1;
                return *acc <= g.budget;
            }
            let kids = g.children(node, &|_, _| ());
            if remaining == 1 {
                *acc += kids.len();
                return *acc <= g.budget;
            }
            kids.iter().all(|k| rec(g, k, remaining - 1, acc))
        }
        let root_node = Node {
            word: root.clone(),
            hash: self.root_hash(root),
            state: (),
        };
        let mut count = 0usize;
        if rec(self, &root_node, depth, &mut count) {
            Ok(count)
        } else {
            Err(Error::BudgetExceeded {
                count,
                budget: self.budget,
            })
        }
    }

    /// Vertices of the depth-`depth` network below `root`. Cells meet only
    /// at vertices, so each subdivided cell contributes its `V(l) - (d + 1)`
    /// new points.
    pub fn count_vertices(&self, root: &Word, depth: usize) -> Result<usize> {
        self.count_words(root, depth)?;
        fn rec(g: &Gasket, node: &Node<()>, remaining: usize) -> usize {
            if remaining == 0 {
                return 0;
            }
            let level = g.label_of_node(node);
            let added = g.levels[&level].harmonic.subdivision.num_vertices() - (g.dimension() + 1);
            added
                + g.children(node, &|_, _| ())
                    .iter()
                    .map(|k| rec(g, k, remaining - 1))
                    .sum::<usize>()
        }
        let root_node = Node {
            word: root.clone(),
            hash: self.root_hash(root),
            state: (),
        };
        Ok(self.dimension() + 1 + rec(self, &root_node, depth))
    }

    /// Folds over the depth-`depth` descendants of `root` in lexicographic
    /// order. `step` derives a child's state from its parent's; subtrees are
    /// folded independently (in parallel when enabled) and joined in order
    /// with `combine`.
    #[allow(clippy::too_many_arguments)]
    pub fn fold_cells<T, A, Step, Fold, Zero, Combine>(
        &self,
        root: &Word,
        depth: usize,
        init: T,
        step: Step,
        zero: Zero,
        fold: Fold,
        combine: Combine,
    ) -> Result<A>
    where
        T: Send + Sync,
        A: Send,
        Step: Fn(&T, &Letter) -> T + Sync + Send,
        Fold: Fn(A, &Word, &T) -> A + Sync + Send,
        Zero: Fn() -> A + Sync + Send,
        Combine: Fn(A, A) -> A,
    {
        self.count_words(root, depth)?;
        let mut frontier = vec![Node {
            word: root.clone(),
            hash: self.root_hash(root),
            state: init,
        }];
        let mut reached = 0;
        while reached < depth && frontier.len() < SPLIT_WIDTH {
            frontier = frontier.iter().flat_map(|n| self.children(n, &step)).collect();
            reached += 1;
        }
        let remaining = depth - reached;
        fn dfs<T, A>(
            g: &Gasket,
            node: &Node<T>,
            remaining: usize,
            acc: A,
            step: &(impl Fn(&T, &Letter) -> T + Sync),
            fold: &impl Fn(A, &Word, &T) -> A,
        ) -> A {
            if remaining == 0 {
                return fold(acc, &node.word, &node.state);
            }
            g.children(node, step)
                .iter()
                .fold(acc, |a, k| dfs(g, k, remaining - 1, a, step, fold))
        }
        let parts = par::map(&frontier, |node| dfs(self, node, remaining, zero(), &step, &fold));
        let mut iter = parts.into_iter();
        let first = iter.next().unwrap_or_else(&zero);
        Ok(iter.fold(first, combine))
    }

    /// Depth-`depth` descendants of `root` with a derived state each.
    pub fn descendants<T, Step>(&self, root: &Word, depth: usize, init: T, step: Step) -> Result<Vec<(Word, T)>>
    where
        T: Send + Sync + Clone,
        Step: Fn(&T, &Letter) -> T + Sync + Send,
    {
        self.fold_cells(
            root,
            depth,
            init,
            step,
            Vec::new,
            |mut acc: Vec<(Word, T)>, w, t| {
                acc.push((w.clone(), t.clone()));
                acc
            },
            |mut a, mut b| {
                a.append(&mut b);
                a
            },
        )
    }

    /// `tilde W_m` in lexicographic order with `r_w` and `μ(K_w)`.
    pub fn enumerate_words(&self, m: usize) -> Result<Vec<WordRecord>> {
        self.enumerate_below(&Word::root(), m)
    }

    /// Continuations of length `m` below `root`; weights are those of the
    /// full words `root·v`.
    pub fn enumerate_below(&self, root: &Word, m: usize) -> Result<Vec<WordRecord>> {
        let init = (self.r_of(root), self.mu_of(root));
        let rows = self.descendants(root, m, init, |(r, mu), letter| {
            let level = &self.levels[&letter.level];
            (r * &level.harmonic.r, mu * &level.letter_mu[letter.cell_index()])
        })?;
        Ok(rows
            .into_iter()
            .map(|(word, (r, mu))| WordRecord { word, r, mu })
            .collect())
    }

    /// `Σ_{w ∈ tilde W_m} μ(K_w)`, streamed without materialising the words.
    pub fn total_mass(&self, m: usize) -> Result<Rational> {
        self.fold_cells(
            &Word::root(),
            m,
            int(1),
            |mu, letter| mu * &self.levels[&letter.level].letter_mu[letter.cell_index()],
            || int(0),
            |acc, _, mu| acc + mu,
            |a, b| a + b,
        )
    }

    /// `A_w = A_{w_m} ⋯ A_{w_1}`; identity for the root.
    pub fn chain_matrix<S: CellScalar>(&self, word: &Word) -> Result<Matrix<S>> {
        self.check_admissible(word)?;
        Ok(self.chain_unchecked(Matrix::identity(self.dimension() + 1), word.letters()))
    }

    /// Chain of `letters` applied after `start` (no admissibility check).
    pub fn chain_unchecked<S: CellScalar>(&self, start: Matrix<S>, letters: &[Letter]) -> Matrix<S> {
        letters.iter().fold(start, |acc, l| self.step_matrix(&acc, l))
    }

    pub fn step_matrix<S: CellScalar>(&self, parent: &Matrix<S>, letter: &Letter) -> Matrix<S> {
        S::extension(&self.levels[&letter.level], letter.cell_index()).mul(parent)
    }

    pub fn step_vector<S: CellScalar>(&self, parent: &[S], letter: &Letter) -> Vec<S> {
        S::extension(&self.levels[&letter.level], letter.cell_index()).mul_vec(parent)
    }

    pub fn letter_factor<S: CellScalar>(&self, letter: &Letter) -> S {
        S::factor(&self.levels[&letter.level])
    }

    pub fn letter_mass<S: CellScalar>(&self, letter: &Letter) -> S {
        S::letter_mu(&self.levels[&letter.level], letter.cell_index())
    }

    /// Values `A_w u` of the harmonic function with boundary data `u` on the
    /// vertices of every depth-`m` cell.
    pub fn harmonic_values<S: CellScalar>(&self, m: usize, u: &[S]) -> Result<Vec<(Word, Vec<S>)>> {
        self.harmonic_values_below(&Word::root(), m, u)
    }

    /// Same, for the harmonic function on `K_root` with boundary data `u` on
    /// `ψ_root(V_0)`.
    pub fn harmonic_values_below<S: CellScalar>(
        &self,
        root: &Word,
        m: usize,
        u: &[S],
    ) -> Result<Vec<(Word, Vec<S>)>> {
        if u.len() != self.dimension() + 1 {
            return Err(Error::InvalidParameter(format!(
                "boundary vector needs {} entries",
                self.dimension() + 1
            )));
        }
        self.descendants(root, m, u.to_vec(), |v, letter| self.step_vector(v, letter))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::q_form;
    use crate::scalar::rat;

    fn sg() -> Gasket {
        Gasket::new(GasketSpec::homogeneous(2, 2).unwrap()).unwrap()
    }

    #[test]
    fn vertex_count_matches_built_networks() {
        assert_eq!(sg().count_vertices(&Word::root(), 2).unwrap(), 15);
        let g = Gasket::new(GasketSpec::seeded(2, &[(2, 0.5), (3, 0.5)], 1).unwrap()).unwrap();
        let w: Word = "1^3".parse().unwrap();
        for root in [Word::root(), w] {
            for m in 0..=4 {
                let net = level_network_with(&g, m, &root, Normalization::Root).unwrap();
                assert_eq!(g.count_vertices(&root, m).unwrap(), net.num_vertices());
            }
        }
    }

    #[test]
    fn enumerate_examples() {
        let g = sg();
        let words = g.enumerate_words(2).unwrap();
        assert_eq!(words.len(), 9);
        assert!(words.iter().all(|w| w.r == rat(9, 25) && w.mu == rat(1, 9)));
        assert_eq!(words[0].word.to_string(), "1^2.1^2");
        assert_eq!(words[8].word.to_string(), "3^2.3^2");

        let root = g.enumerate_words(0).unwrap();
        assert_eq!(root, vec![WordRecord { word: Word::root(), r: int(1), mu: int(1) }]);

        let mixed = Gasket::new(
            GasketSpec::from_json_str(
                r#"{"dimension":2,"levels":[2,3],"labeling":{"type":"explicit","entries":[{"word":"","label":3}],"default":2}}"#,
            )
            .unwrap(),
        )
        .unwrap();
        let depth1 = mixed.enumerate_words(1).unwrap();
        assert_eq!(depth1.len(), 6);
        assert!(depth1.iter().all(|w| w.r == rat(7, 15) && w.mu == rat(1, 6)));
        assert_eq!(mixed.enumerate_words(2).unwrap().len(), 18);
    }

    #[test]
    fn budget_is_enforced() {
        let g = sg().with_budget(100);
        assert!(g.enumerate_words(4).is_ok());
        assert!(matches!(g.enumerate_words(5), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn mass_is_one() {
        let g = Gasket::new(GasketSpec::seeded(2, &[(2, 0.5), (3, 0.5)], 3).unwrap()).unwrap();
        for m in 0..=4 {
            let sum: Rational = g.enumerate_words(m).unwrap().iter().map(|w| w.mu.clone()).sum();
            assert_eq!(sum, int(1));
            assert_eq!(g.total_mass(m).unwrap(), int(1));
        }
    }

    #[test]
    fn chain_matrix_order() {
        let g = sg();
        assert_eq!(g.chain_matrix::<Rational>(&Word::root()).unwrap(), Matrix::identity(3));
        let a1 = g.chain_matrix::<Rational>(&"1^2".parse().unwrap()).unwrap();
        assert_eq!(a1, g.level(2).harmonic.extension[0]);
        // cells 2 and 3 do not commute
        let a2 = &g.level(2).harmonic.extension[1];
        let a3 = &g.level(2).harmonic.extension[2];
        let w = g.chain_matrix::<Rational>(&"2^2.3^2".parse().unwrap()).unwrap();
        assert_eq!(w, a3.mul(a2));
        assert_ne!(a3.mul(a2), a2.mul(a3));
        assert!(matches!(
            g.chain_matrix::<Rational>(&"1^3".parse().unwrap()),
            Err(Error::InadmissibleWord { .. })
        ));
        assert!(matches!(
            g.chain_matrix::<Rational>(&"4^2".parse().unwrap()),
            Err(Error::InadmissibleWord { .. })
        ));
    }

    #[test]
    fn harmonic_values_examples() {
        let g = sg();
        let c = vec![rat(3, 7); 3];
        for (_, v) in g.harmonic_values(3, &c).unwrap() {
            assert_eq!(v, c);
        }
        let u = vec![int(1), int(0), int(0)];
        let vals = g.harmonic_values(1, &u).unwrap();
        assert_eq!(vals[0].1, g.level(2).harmonic.extension[0].mul_vec(&u));
    }

    #[test]
    fn energy_of_harmonic_function_is_constant() {
        let g = sg();
        let u = vec![int(2), rat(-1, 3), int(0)];
        for m in 0..=4 {
            let total: Rational = g
                .enumerate_words(m)
                .unwrap()
                .iter()
                .zip(g.harmonic_values(m, &u).unwrap())
                .map(|(rec, (_, v))| q_form(&v, &v) / &rec.r)
                .sum();
            assert_eq!(total, q_form(&u, &u));
        }
    }
}
