//! Expression trees over feature terminals and `{+, -, *, pdiv}`.
//!
//! Trees are stored as a flat prefix-order node list. Every function is
//! binary, so the extent of the subtree rooted at any position can be found
//! by a single forward scan, which keeps subtree crossover and mutation to
//! slice splicing.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

/// Denominators with a smaller magnitude make protected division return 1.
pub const PROTECTED_DIV_EPS: f64 = 1e-9;

/// Probability that a non-root node above the depth target becomes a
/// function when growing a tree.
const GROW_FUNCTION_PROB: f64 = 0.5;

/// One attempt plus three retries before a variation falls back to a copy.
const VARIATION_ATTEMPTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    /// Protected division.
    Div,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "pdiv",
        }
    }

    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        let v = match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => {
                if b.abs() < PROTECTED_DIV_EPS {
                    1.0
                } else {
                    a / b
                }
            }
        };
        // Saturate on overflow so finite inputs always give finite outputs.
        v.clamp(-f64::MAX, f64::MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Var(usize),
    Func(Op),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseTreeError {
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token `{0}`")]
    UnexpectedToken(String),
    #[error("trailing input after expression")]
    Trailing,
}

/// A program: a binary expression tree in prefix order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProgramTree {
    nodes: Vec<Node>,
}

impl ProgramTree {
    /// Wraps a prefix node list. Panics if it is not exactly one complete
    /// expression.
    pub fn from_prefix(nodes: Vec<Node>) -> Self {
        assert!(!nodes.is_empty(), "empty tree");
        let tree = ProgramTree { nodes };
        assert_eq!(tree.subtree_end(0), tree.nodes.len(), "malformed prefix list");
        tree
    }

    pub fn leaf(feature: usize) -> Self {
        ProgramTree {
            nodes: vec![Node::Var(feature)],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Node count.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Exclusive end of the subtree rooted at `start`.
    pub fn subtree_end(&self, start: usize) -> usize {
        let mut open = 1usize;
        let mut i = start;
        while open > 0 {
            match self.nodes[i] {
                Node::Var(_) => open -= 1,
                Node::Func(_) => open += 1,
            }
            i += 1;
        }
        i
    }

    /// Depth of every node, root at 0.
    pub fn node_depths(&self) -> Vec<usize> {
        let mut depths = Vec::with_capacity(self.nodes.len());
        // Stack of depths awaiting a child.
        let mut pending: Vec<usize> = vec![0];
        for node in &self.nodes {
            let d = pending.pop().expect("well-formed tree");
            depths.push(d);
            if let Node::Func(_) = node {
                pending.push(d + 1);
                pending.push(d + 1);
            }
        }
        depths
    }

    /// Height of the tree; a single leaf has depth 0.
    pub fn depth(&self) -> usize {
        self.node_depths().into_iter().max().unwrap_or(0)
    }

    /// Largest feature index referenced, if any.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Var(f) => Some(*f),
                Node::Func(_) => None,
            })
            .max()
    }

    pub fn internal_positions(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i], Node::Func(_)))
            .collect()
    }

    pub fn leaf_positions(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i], Node::Var(_)))
            .collect()
    }

    pub fn subtree(&self, start: usize) -> ProgramTree {
        ProgramTree {
            nodes: self.nodes[start..self.subtree_end(start)].to_vec(),
        }
    }

    /// Copy of `self` with the subtree at `at` replaced by `donor`'s subtree
    /// at `from`.
    pub fn splice(&self, at: usize, donor: &ProgramTree, from: usize) -> ProgramTree {
        let end = self.subtree_end(at);
        let donor_end = donor.subtree_end(from);
        let mut nodes = Vec::with_capacity(self.nodes.len() - (end - at) + (donor_end - from));
        nodes.extend_from_slice(&self.nodes[..at]);
        nodes.extend_from_slice(&donor.nodes[from..donor_end]);
        nodes.extend_from_slice(&self.nodes[end..]);
        ProgramTree { nodes }
    }

    pub fn within_limits(&self, params: &GpParams) -> bool {
        self.len() <= params.max_length && self.depth() <= params.max_depth
    }

    /// Runs the program on every row. `columns[j]` holds feature `j` for all
    /// rows; the output has one entry per row.
    pub fn evaluate(&self, columns: &[Vec<f64>]) -> Vec<f64> {
        let rows = columns.first().map_or(0, Vec::len);
        let mut stack: Vec<Vec<f64>> = Vec::with_capacity(self.depth() + 2);
        let mut spare: Vec<Vec<f64>> = Vec::new();
        for node in self.nodes.iter().rev() {
            match *node {
                Node::Var(f) => {
                    let mut buf = spare.pop().unwrap_or_else(|| Vec::with_capacity(rows));
                    buf.clear();
                    buf.extend_from_slice(&columns[f]);
                    stack.push(buf);
                }
                Node::Func(op) => {
                    let mut left = stack.pop().expect("well-formed tree");
                    let right = stack.pop().expect("well-formed tree");
                    for (l, &r) in left.iter_mut().zip(&right) {
                        *l = op.apply(*l, r);
                    }
                    spare.push(right);
                    stack.push(left);
                }
            }
        }
        stack.pop().expect("well-formed tree")
    }

    /// Evaluates the program on a single input row.
    pub fn evaluate_row(&self, row: &[f64]) -> f64 {
        let mut stack: Vec<f64> = Vec::with_capacity(self.depth() + 2);
        for node in self.nodes.iter().rev() {
            match *node {
                Node::Var(f) => stack.push(row[f]),
                Node::Func(op) => {
                    let l = stack.pop().expect("well-formed tree");
                    let r = stack.pop().expect("well-formed tree");
                    stack.push(op.apply(l, r));
                }
            }
        }
        stack.pop().expect("well-formed tree")
    }

    fn fmt_at(&self, i: usize, f: &mut fmt::Formatter<'_>) -> Result<usize, fmt::Error> {
        match self.nodes[i] {
            Node::Var(v) => {
                write!(f, "x{v}")?;
                Ok(i + 1)
            }
            Node::Func(op) => {
                write!(f, "({} ", op.symbol())?;
                let next = self.fmt_at(i + 1, f)?;
                f.write_str(" ")?;
                let next = self.fmt_at(next, f)?;
                f.write_str(")")?;
                Ok(next)
            }
        }
    }
}

/// Prefix notation, e.g. `(+ (pdiv x3 x1) x0)`.
impl fmt::Display for ProgramTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(0, f).map(|_| ())
    }
}

impl FromStr for ProgramTree {
    type Err = ParseTreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let spaced = s.replace('(', " ( ").replace(')', " ) ");
        let mut tokens = spaced.split_whitespace().peekable();
        let mut nodes = Vec::new();
        parse_expr(&mut tokens, &mut nodes)?;
        if tokens.next().is_some() {
            return Err(ParseTreeError::Trailing);
        }
        Ok(ProgramTree { nodes })
    }
}

fn parse_expr<'a, I>(tokens: &mut std::iter::Peekable<I>, out: &mut Vec<Node>) -> Result<(), ParseTreeError>
where
    I: Iterator<Item = &'a str>,
{
    let tok = tokens.next().ok_or(ParseTreeError::UnexpectedEnd)?;
    if tok == "(" {
        let sym = tokens.next().ok_or(ParseTreeError::UnexpectedEnd)?;
        let op = Op::ALL
            .into_iter()
            .find(|op| op.symbol() == sym || (sym == "%" && *op == Op::Div))
            .ok_or_else(|| ParseTreeError::UnexpectedToken(sym.to_string()))?;
        out.push(Node::Func(op));
        parse_expr(tokens, out)?;
        parse_expr(tokens, out)?;
        match tokens.next() {
            Some(")") => Ok(()),
            Some(t) => Err(ParseTreeError::UnexpectedToken(t.to_string())),
            None => Err(ParseTreeError::UnexpectedEnd),
        }
    } else if let Some(idx) = tok.strip_prefix('x').and_then(|d| d.parse().ok()) {
        out.push(Node::Var(idx));
        Ok(())
    } else {
        Err(ParseTreeError::UnexpectedToken(tok.to_string()))
    }
}

/// GP run parameters. Defaults follow the benchmark setup: population 500,
/// 50 generations, crossover 0.6 / mutation 0.4, initial depths 1..=5,
/// maximum depth 8 and length 800, 90% internal crossover points.
#[derive(Debug, Clone, PartialEq)]
pub struct GpParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub init_depth_min: usize,
    pub init_depth_max: usize,
    pub max_depth: usize,
    pub max_length: usize,
    /// Probability of picking an internal node as a crossover point.
    pub internal_node_bias: f64,
}

impl Default for GpParams {
    fn default() -> Self {
        GpParams {
            population_size: 500,
            generations: 50,
            crossover_rate: 0.6,
            mutation_rate: 0.4,
            init_depth_min: 1,
            init_depth_max: 5,
            max_depth: 8,
            max_length: 800,
            internal_node_bias: 0.9,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("crossover rate {0} and mutation rate {1} must be in [0, 1] and sum to 1")]
    Rates(f64, f64),
    #[error("initial depth range {0}..={1} must satisfy min <= max <= max depth {2}")]
    Depths(usize, usize, usize),
    #[error("population size must be at least 2, got {0}")]
    Population(usize),
    #[error("internal node bias {0} must be in [0, 1]")]
    Bias(f64),
}

impl GpParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.crossover_rate)
            || !unit(self.mutation_rate)
            || (self.crossover_rate + self.mutation_rate - 1.0).abs() > 1e-9
        {
            return Err(ParamsError::Rates(self.crossover_rate, self.mutation_rate));
        }
        if self.init_depth_min > self.init_depth_max || self.init_depth_max > self.max_depth {
            return Err(ParamsError::Depths(
                self.init_depth_min,
                self.init_depth_max,
                self.max_depth,
            ));
        }
        if self.population_size < 2 {
            return Err(ParamsError::Population(self.population_size));
        }
        if !unit(self.internal_node_bias) {
            return Err(ParamsError::Bias(self.internal_node_bias));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMethod {
    Grow,
    Full,
}

fn random_op<R: Rng + ?Sized>(rng: &mut R) -> Op {
    Op::ALL[rng.random_range(0..Op::ALL.len())]
}

fn build<R: Rng + ?Sized>(
    method: InitMethod,
    depth: usize,
    target: usize,
    root_is_function: bool,
    n_features: usize,
    rng: &mut R,
    out: &mut Vec<Node>,
) {
    let function = depth < target
        && match method {
            InitMethod::Full => true,
            InitMethod::Grow => (depth == 0 && root_is_function) || rng.random_bool(GROW_FUNCTION_PROB),
        };
    if function {
        out.push(Node::Func(random_op(rng)));
        build(method, depth + 1, target, root_is_function, n_features, rng, out);
        build(method, depth + 1, target, root_is_function, n_features, rng, out);
    } else {
        out.push(Node::Var(rng.random_range(0..n_features)));
    }
}

/// Generates one tree. `Full` puts every leaf at exactly `depth`; `Grow`
/// stops each branch at random but never exceeds `depth`. With
/// `root_is_function` a grown tree of target depth ≥ 1 has depth ≥ 1.
pub fn generate<R: Rng + ?Sized>(
    method: InitMethod,
    depth: usize,
    root_is_function: bool,
    n_features: usize,
    rng: &mut R,
) -> ProgramTree {
    assert!(n_features >= 1, "at least one feature required");
    let mut nodes = Vec::new();
    build(method, 0, depth, root_is_function, n_features, rng, &mut nodes);
    ProgramTree { nodes }
}

/// Ramped half-and-half: even-indexed trees use grow and odd-indexed trees
/// use full, and each grow/full pair takes the next depth in the cycle
/// `init_depth_min..=init_depth_max`.
pub fn ramped_half_and_half<R: Rng + ?Sized>(
    n: usize,
    params: &GpParams,
    n_features: usize,
    rng: &mut R,
) -> Vec<ProgramTree> {
    let span = params.init_depth_max - params.init_depth_min + 1;
    (0..n)
        .map(|k| {
            let method = if k % 2 == 0 { InitMethod::Grow } else { InitMethod::Full };
            let depth = params.init_depth_min + (k / 2) % span;
            let mut tree = generate(method, depth, true, n_features, rng);
            // A full tree at depth 8 has 511 nodes, so this only triggers for
            // unusual parameter choices.
            while !tree.within_limits(params) {
                tree = generate(InitMethod::Grow, depth, true, n_features, rng);
            }
            tree
        })
        .collect()
}

fn pick_point<R: Rng + ?Sized>(tree: &ProgramTree, internal_bias: f64, rng: &mut R) -> usize {
    let internal = tree.internal_positions();
    if internal.is_empty() {
        return rng.random_range(0..tree.len());
    }
    let leaves = tree.leaf_positions();
    if rng.random_bool(internal_bias) {
        internal[rng.random_range(0..internal.len())]
    } else {
        leaves[rng.random_range(0..leaves.len())]
    }
}

/// Offspring of a limit-checked variation: the first candidate within the
/// limits, or a copy of `fallback` after every attempt failed.
pub fn with_retries<F>(fallback: &ProgramTree, params: &GpParams, mut attempt: F) -> ProgramTree
where
    F: FnMut() -> ProgramTree,
{
    for _ in 0..VARIATION_ATTEMPTS {
        let candidate = attempt();
        if candidate.within_limits(params) {
            return candidate;
        }
    }
    fallback.clone()
}

/// Subtree crossover producing a single child: a subtree of `p2` replaces a
/// subtree of `p1`. Points are internal with probability
/// `internal_node_bias`.
pub fn subtree_crossover<R: Rng + ?Sized>(
    p1: &ProgramTree,
    p2: &ProgramTree,
    params: &GpParams,
    rng: &mut R,
) -> ProgramTree {
    with_retries(p1, params, || {
        let at = pick_point(p1, params.internal_node_bias, rng);
        let from = pick_point(p2, params.internal_node_bias, rng);
        p1.splice(at, p2, from)
    })
}

/// Replaces a uniformly chosen node with a grown subtree of depth at most
/// `init_depth_max`.
pub fn subtree_mutation<R: Rng + ?Sized>(
    p: &ProgramTree,
    params: &GpParams,
    n_features: usize,
    rng: &mut R,
) -> ProgramTree {
    with_retries(p, params, || {
        let at = rng.random_range(0..p.len());
        let depth = rng.random_range(0..=params.init_depth_max);
        let fresh = generate(InitMethod::Grow, depth, false, n_features, rng);
        p.splice(at, &fresh, 0)
    })
}
