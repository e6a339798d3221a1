//! Tanner graph representation of an LDPC code.
//!
//! The graph stores both adjacency directions of the parity-check matrix
//! **H**. Edges are numbered in check-major order: the edges of check node
//! `m` occupy the contiguous id range [`TannerGraph::check_edges`], in the
//! order the row lists its variable nodes. Decoder message buffers are
//! indexed by these edge ids.
//!
//! Graphs are read from and written to the alist format used by the
//! published MacKay code tables, and random `(d_v, d_c)`-regular ensembles can
//! be sampled with [`random_regular_graph`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Structural problems with a parity-check matrix.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph has no variable or check nodes")]
    Empty,
    #[error("check {check} references variable {var}, but there are only {n_vars} variables")]
    IndexOutOfRange {
        check: usize,
        var: usize,
        n_vars: usize,
    },
    #[error("check {check} lists variable {var} more than once")]
    DuplicateEdge { check: usize, var: usize },
    #[error("check {check} has degree {degree}; every check needs degree at least 2")]
    CheckDegreeTooSmall { check: usize, degree: usize },
    #[error("variable {var} is not connected to any check")]
    IsolatedVariable { var: usize },
}

/// Errors from [`parse_alist`]. Line numbers are 1-based physical lines.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlistError {
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: expected {expected} entries, found {found}")]
    LengthMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: index {index} out of range 1..={max}")]
    IndexOutOfRange {
        line: usize,
        index: usize,
        max: usize,
    },
    #[error(
        "line {line}: column lists and row lists disagree on edge (check {check}, variable {var})"
    )]
    TransposeMismatch {
        line: usize,
        check: usize,
        var: usize,
    },
    #[error("line {line}: unexpected end of file")]
    UnexpectedEof { line: usize },
    #[error("line {line}: {source}")]
    Graph {
        line: usize,
        #[source]
        source: GraphError,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructionError {
    #[error("{n_vars} variables of degree {d_v} give {sockets} sockets, not divisible by check degree {d_c}")]
    NotDivisible {
        n_vars: usize,
        d_v: usize,
        d_c: usize,
        sockets: usize,
    },
    #[error("invalid degrees d_v={d_v}, d_c={d_c} for {n_vars} variables")]
    InvalidDegrees {
        n_vars: usize,
        d_v: usize,
        d_c: usize,
    },
    #[error("could not remove duplicate edges after {attempts} repair attempts")]
    DuplicatesUnresolved { attempts: usize },
    #[error("{remaining} length-4 cycles left after {attempts} swap attempts")]
    CyclesUnresolved { remaining: usize, attempts: usize },
}

/// Sparse bipartite graph of an LDPC code (the rows and columns of **H**).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    n_vars: usize,
    check_offsets: Vec<usize>,
    /// Variable endpoint of each edge, check-major.
    edge_var: Vec<usize>,
    /// Check endpoint of each edge.
    edge_check: Vec<usize>,
    var_offsets: Vec<usize>,
    /// Edge ids incident to each variable, ordered by check index.
    var_edge_ids: Vec<usize>,
    var_checks: Vec<usize>,
}

impl TannerGraph {
    /// Builds a graph from the row lists of **H** (0-based variable indices).
    pub fn from_check_lists(n_vars: usize, checks: &[Vec<usize>]) -> Result<Self, GraphError> {
        if n_vars == 0 || checks.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut check_offsets = Vec::with_capacity(checks.len() + 1);
        let mut edge_var = Vec::new();
        let mut edge_check = Vec::new();
        let mut seen = vec![usize::MAX; n_vars];
        check_offsets.push(0);
        for (m, row) in checks.iter().enumerate() {
            if row.len() < 2 {
                return Err(GraphError::CheckDegreeTooSmall {
                    check: m,
                    degree: row.len(),
                });
            }
            for &n in row {
                if n >= n_vars {
                    return Err(GraphError::IndexOutOfRange {
                        check: m,
                        var: n,
                        n_vars,
                    });
                }
                if seen[n] == m {
                    return Err(GraphError::DuplicateEdge { check: m, var: n });
                }
                seen[n] = m;
                edge_var.push(n);
                edge_check.push(m);
            }
            check_offsets.push(edge_var.len());
        }

        let mut var_degree = vec![0usize; n_vars];
        for &n in &edge_var {
            var_degree[n] += 1;
        }
        if let Some(var) = var_degree.iter().position(|&d| d == 0) {
            return Err(GraphError::IsolatedVariable { var });
        }
        let mut var_offsets = Vec::with_capacity(n_vars + 1);
        var_offsets.push(0);
        for d in &var_degree {
            var_offsets.push(var_offsets.last().unwrap() + d);
        }
        let mut fill = var_offsets[..n_vars].to_vec();
        let mut var_edge_ids = vec![0; edge_var.len()];
        let mut var_checks = vec![0; edge_var.len()];
        // Edges are visited in check order, so each variable's list comes out sorted by check.
        for (e, (&n, &m)) in edge_var.iter().zip(&edge_check).enumerate() {
            var_edge_ids[fill[n]] = e;
            var_checks[fill[n]] = m;
            fill[n] += 1;
        }

        Ok(Self {
            n_vars,
            check_offsets,
            edge_var,
            edge_check,
            var_offsets,
            var_edge_ids,
            var_checks,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_checks(&self) -> usize {
        self.check_offsets.len() - 1
    }

    pub fn n_edges(&self) -> usize {
        self.edge_var.len()
    }

    /// Variables participating in check `m`, in row order.
    pub fn check_neighbors(&self, m: usize) -> &[usize] {
        &self.edge_var[self.check_edges(m)]
    }

    /// Edge id range of check `m`.
    pub fn check_edges(&self, m: usize) -> Range<usize> {
        self.check_offsets[m]..self.check_offsets[m + 1]
    }

    /// Checks connected to variable `n`, in increasing check order.
    pub fn var_neighbors(&self, n: usize) -> &[usize] {
        &self.var_checks[self.var_offsets[n]..self.var_offsets[n + 1]]
    }

    /// Edge ids incident to variable `n`, aligned with [`Self::var_neighbors`].
    pub fn var_edges(&self, n: usize) -> &[usize] {
        &self.var_edge_ids[self.var_offsets[n]..self.var_offsets[n + 1]]
    }

    pub fn check_degree(&self, m: usize) -> usize {
        self.check_offsets[m + 1] - self.check_offsets[m]
    }

    pub fn var_degree(&self, n: usize) -> usize {
        self.var_offsets[n + 1] - self.var_offsets[n]
    }

    /// `(check, variable)` endpoints of edge `e`.
    pub fn edge_endpoints(&self, e: usize) -> (usize, usize) {
        (self.edge_check[e], self.edge_var[e])
    }

    /// Edge id of `(m, n)`, if the two nodes are adjacent.
    pub fn edge(&self, m: usize, n: usize) -> Option<usize> {
        self.check_edges(m).find(|&e| self.edge_var[e] == n)
    }

    /// Syndrome weight of a hard-decision word: number of unsatisfied checks.
    pub fn syndrome_weight(&self, bits: &[u8]) -> usize {
        (0..self.n_checks())
            .filter(|&m| {
                self.check_neighbors(m)
                    .iter()
                    .fold(0u8, |acc, &n| acc ^ (bits[n] & 1))
                    != 0
            })
            .count()
    }

    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        self.syndrome_weight(bits) == 0
    }

    pub fn check_lists(&self) -> Vec<Vec<usize>> {
        (0..self.n_checks())
            .map(|m| self.check_neighbors(m).to_vec())
            .collect()
    }
}

/// Edge-perspective degree distribution `λ(x)`, `ρ(x)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DegreeDistribution {
    /// Degree `i` to fraction of edges attached to degree-`i` variables.
    pub lambda: BTreeMap<usize, f64>,
    /// Degree `j` to fraction of edges attached to degree-`j` checks.
    pub rho: BTreeMap<usize, f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("{side} coefficients sum to {sum}, expected 1")]
    NotNormalized { side: &'static str, sum: f64 },
    #[error("{side} coefficient for degree {degree} is {value}, outside [0, 1]")]
    OutOfRange {
        side: &'static str,
        degree: usize,
        value: f64,
    },
    #[error("{side} has an edge fraction on invalid degree {degree}")]
    InvalidDegree { side: &'static str, degree: usize },
}

impl DegreeDistribution {
    const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(
        lambda: BTreeMap<usize, f64>,
        rho: BTreeMap<usize, f64>,
    ) -> Result<Self, DistributionError> {
        Self::validate("lambda", &lambda, 1)?;
        Self::validate("rho", &rho, 2)?;
        Ok(Self { lambda, rho })
    }

    /// Point masses at `d_v` and `d_c`.
    pub fn regular(d_v: usize, d_c: usize) -> Result<Self, DistributionError> {
        Self::new(BTreeMap::from([(d_v, 1.0)]), BTreeMap::from([(d_c, 1.0)]))
    }

    fn validate(
        side: &'static str,
        coeffs: &BTreeMap<usize, f64>,
        min_degree: usize,
    ) -> Result<(), DistributionError> {
        for (&degree, &value) in coeffs {
            if !(0.0..=1.0).contains(&value) {
                return Err(DistributionError::OutOfRange {
                    side,
                    degree,
                    value,
                });
            }
            if degree < min_degree && value > 0.0 {
                return Err(DistributionError::InvalidDegree { side, degree });
            }
        }
        let sum: f64 = coeffs.values().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(DistributionError::NotNormalized { side, sum });
        }
        Ok(())
    }

    pub fn max_var_degree(&self) -> usize {
        self.lambda
            .iter()
            .filter(|(_, &v)| v > 0.0)
            .map(|(&d, _)| d)
            .max()
            .unwrap_or(0)
    }

    pub fn max_check_degree(&self) -> usize {
        self.rho
            .iter()
            .filter(|(_, &v)| v > 0.0)
            .map(|(&d, _)| d)
            .max()
            .unwrap_or(0)
    }

    /// Design rate `1 - ∫ρ / ∫λ`.
    pub fn design_rate(&self) -> f64 {
        let int_lambda: f64 = self.lambda.iter().map(|(&i, &l)| l / i as f64).sum();
        let int_rho: f64 = self.rho.iter().map(|(&j, &r)| r / j as f64).sum();
        1.0 - int_rho / int_lambda
    }
}

/// Edge-perspective degree distribution of a graph.
pub fn degree_distribution(g: &TannerGraph) -> DegreeDistribution {
    let edges = g.n_edges() as f64;
    let mut lambda = BTreeMap::new();
    for n in 0..g.n_vars() {
        *lambda.entry(g.var_degree(n)).or_insert(0.0) += g.var_degree(n) as f64;
    }
    let mut rho = BTreeMap::new();
    for m in 0..g.n_checks() {
        *rho.entry(g.check_degree(m)).or_insert(0.0) += g.check_degree(m) as f64;
    }
    for v in lambda.values_mut().chain(rho.values_mut()) {
        *v /= edges;
    }
    DegreeDistribution { lambda, rho }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next non-blank line as `(line number, integers)`.
    fn next_ints(&mut self) -> Result<(usize, Vec<usize>), AlistError> {
        for (idx, raw) in self.inner.by_ref() {
            let line = idx + 1;
            self.last = line;
            if raw.trim().is_empty() {
                continue;
            }
            let ints = raw
                .split_whitespace()
                .map(|tok| tok.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| AlistError::MalformedHeader {
                    line,
                    reason: format!("{e} in {raw:?}"),
                })?;
            return Ok((line, ints));
        }
        Err(AlistError::UnexpectedEof {
            line: self.last + 1,
        })
    }
}

fn expect_len(line: usize, found: usize, expected: usize) -> Result<(), AlistError> {
    if found != expected {
        return Err(AlistError::LengthMismatch {
            line,
            expected,
            found,
        });
    }
    Ok(())
}

/// Reads an alist file. Zero padding in the neighbor lists is accepted and
/// dropped.
pub fn parse_alist(text: &str) -> Result<TannerGraph, AlistError> {
    let mut lines = Lines::new(text);

    let (line, header) = lines.next_ints()?;
    let [n_vars, n_checks] = header[..] else {
        return Err(AlistError::MalformedHeader {
            line,
            reason: "expected \"N M\"".into(),
        });
    };
    if n_vars == 0 || n_checks == 0 {
        return Err(AlistError::Graph {
            line,
            source: GraphError::Empty,
        });
    }
    let (line, maxima) = lines.next_ints()?;
    let [max_col, max_row] = maxima[..] else {
        return Err(AlistError::MalformedHeader {
            line,
            reason: "expected \"max_col_deg max_row_deg\"".into(),
        });
    };

    let (line, col_degrees) = lines.next_ints()?;
    expect_len(line, col_degrees.len(), n_vars)?;
    if let Some(var) = col_degrees.iter().position(|&d| d == 0) {
        return Err(AlistError::Graph {
            line,
            source: GraphError::IsolatedVariable { var },
        });
    }
    if let Some(&d) = col_degrees.iter().find(|&&d| d > max_col) {
        return Err(AlistError::LengthMismatch {
            line,
            expected: max_col,
            found: d,
        });
    }
    let (line, row_degrees) = lines.next_ints()?;
    expect_len(line, row_degrees.len(), n_checks)?;
    if let Some(&d) = row_degrees.iter().find(|&&d| d > max_row) {
        return Err(AlistError::LengthMismatch {
            line,
            expected: max_row,
            found: d,
        });
    }

    let mut read_list =
        |degree: usize, max_index: usize| -> Result<(usize, Vec<usize>), AlistError> {
            let (line, raw) = lines.next_ints()?;
            let entries: Vec<usize> = raw.into_iter().filter(|&x| x != 0).collect();
            expect_len(line, entries.len(), degree)?;
            if let Some(&index) = entries.iter().find(|&&x| x > max_index) {
                return Err(AlistError::IndexOutOfRange {
                    line,
                    index,
                    max: max_index,
                });
            }
            Ok((line, entries.into_iter().map(|x| x - 1).collect()))
        };

    let mut columns = Vec::with_capacity(n_vars);
    for &d in &col_degrees {
        columns.push(read_list(d, n_checks)?);
    }
    let mut rows = Vec::with_capacity(n_checks);
    for &d in &row_degrees {
        rows.push(read_list(d, n_vars)?);
    }

    let last_row_line = rows.last().map_or(lines.last, |(l, _)| *l);
    let checks: Vec<Vec<usize>> = rows.iter().map(|(_, r)| r.clone()).collect();
    let graph = TannerGraph::from_check_lists(n_vars, &checks).map_err(|source| {
        let line = match &source {
            GraphError::IndexOutOfRange { check, .. }
            | GraphError::DuplicateEdge { check, .. }
            | GraphError::CheckDegreeTooSmall { check, .. } => rows[*check].0,
            _ => last_row_line,
        };
        AlistError::Graph { line, source }
    })?;

    // Column lists must describe the same edge set as the rows.
    for (n, (line, col)) in columns.iter().enumerate() {
        let mut listed = col.clone();
        listed.sort_unstable();
        if let Some(w) = listed.windows(2).find(|w| w[0] == w[1]) {
            return Err(AlistError::Graph {
                line: *line,
                source: GraphError::DuplicateEdge {
                    check: w[0],
                    var: n,
                },
            });
        }
        if listed.as_slice() != graph.var_neighbors(n) {
            let check = listed
                .iter()
                .zip(graph.var_neighbors(n))
                .find(|(a, b)| a != b)
                .map_or_else(|| listed.first().copied().unwrap_or(0), |(a, _)| *a);
            return Err(AlistError::TransposeMismatch {
                line: *line,
                check,
                var: n,
            });
        }
    }
    Ok(graph)
}

/// Writes a graph in alist format, zero-padding lists to the maximum degree.
pub fn serialize_alist(g: &TannerGraph) -> String {
    let col_deg: Vec<usize> = (0..g.n_vars()).map(|n| g.var_degree(n)).collect();
    let row_deg: Vec<usize> = (0..g.n_checks()).map(|m| g.check_degree(m)).collect();
    let max_col = col_deg.iter().copied().max().unwrap_or(0);
    let max_row = row_deg.iter().copied().max().unwrap_or(0);

    let join = |xs: &mut dyn Iterator<Item = usize>| {
        xs.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    };
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", g.n_vars(), g.n_checks());
    let _ = writeln!(out, "{max_col} {max_row}");
    let _ = writeln!(out, "{}", join(&mut col_deg.iter().copied()));
    let _ = writeln!(out, "{}", join(&mut row_deg.iter().copied()));
    for n in 0..g.n_vars() {
        let padded = g
            .var_neighbors(n)
            .iter()
            .map(|&m| m + 1)
            .chain(std::iter::repeat(0));
        let _ = writeln!(out, "{}", join(&mut padded.take(max_col)));
    }
    for m in 0..g.n_checks() {
        let padded = g
            .check_neighbors(m)
            .iter()
            .map(|&n| n + 1)
            .chain(std::iter::repeat(0));
        let _ = writeln!(out, "{}", join(&mut padded.take(max_row)));
    }
    out
}

/// Samples a `(d_v, d_c)`-regular graph by random socket permutation.
///
/// Double edges left by the permutation are repaired by swapping one of the
/// offending sockets with a randomly chosen socket of another check, accepted
/// only when neither check ends up with a duplicate.
pub fn random_regular_graph(
    n_vars: usize,
    d_v: usize,
    d_c: usize,
    seed: u64,
) -> Result<TannerGraph, ConstructionError> {
    if n_vars == 0 || d_v == 0 || d_c < 2 {
        return Err(ConstructionError::InvalidDegrees { n_vars, d_v, d_c });
    }
    let sockets = n_vars * d_v;
    if !sockets.is_multiple_of(d_c) {
        return Err(ConstructionError::NotDivisible {
            n_vars,
            d_v,
            d_c,
            sockets,
        });
    }
    if d_c > n_vars {
        return Err(ConstructionError::InvalidDegrees { n_vars, d_v, d_c });
    }
    let n_checks = sockets / d_c;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<usize> = (0..n_vars)
        .flat_map(|n| std::iter::repeat_n(n, d_v))
        .collect();
    slots.shuffle(&mut rng);

    let has_dup = |slots: &[usize], m: usize, skip: usize, candidate: usize| {
        slots[m * d_c..(m + 1) * d_c]
            .iter()
            .enumerate()
            .any(|(k, &v)| m * d_c + k != skip && v == candidate)
    };

    let max_attempts = 100 * sockets;
    let mut attempts = 0;
    loop {
        // First socket (in check order) that repeats a variable earlier in its check.
        let bad = (0..sockets).find(|&s| {
            let m = s / d_c;
            slots[m * d_c..s].contains(&slots[s])
        });
        let Some(s) = bad else { break };
        let m = s / d_c;
        loop {
            attempts += 1;
            if attempts > max_attempts {
                return Err(ConstructionError::DuplicatesUnresolved {
                    attempts: max_attempts,
                });
            }
            let t = rng.random_range(0..sockets);
            let other = t / d_c;
            if other == m {
                continue;
            }
            if !has_dup(&slots, m, s, slots[t]) && !has_dup(&slots, other, t, slots[s]) {
                slots.swap(s, t);
                break;
            }
        }
    }

    let checks: Vec<Vec<usize>> = slots.chunks(d_c).map(|c| c.to_vec()).collect();
    debug_assert_eq!(checks.len(), n_checks);
    Ok(TannerGraph::from_check_lists(n_vars, &checks)
        .expect("regular construction yields a valid graph"))
}

/// Number of length-4 cycles: pairs of checks sharing two variables.
pub fn count_four_cycles(g: &TannerGraph) -> usize {
    let mut shared = vec![0usize; g.n_checks()];
    let mut total = 0;
    for m in 0..g.n_checks() {
        shared.iter_mut().for_each(|c| *c = 0);
        for &n in g.check_neighbors(m) {
            for &other in g.var_neighbors(n) {
                if other > m {
                    shared[other] += 1;
                }
            }
        }
        total += shared
            .iter()
            .map(|&c| c * c.saturating_sub(1) / 2)
            .sum::<usize>();
    }
    total
}

/// Removes length-4 cycles by swapping variables between pairs of checks,
/// keeping every degree. Each swap is kept only if it lowers the cycle count.
pub fn remove_four_cycles(
    g: &TannerGraph,
    seed: u64,
    max_swaps: usize,
) -> Result<TannerGraph, ConstructionError> {
    let mut checks = g.check_lists();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = g.clone();
    let mut cycles = count_four_cycles(&current);
    let mut attempts = 0;
    while cycles > 0 {
        attempts += 1;
        if attempts > max_swaps {
            return Err(ConstructionError::CyclesUnresolved {
                remaining: cycles,
                attempts: max_swaps,
            });
        }
        let (m1, m2) = (
            rng.random_range(0..checks.len()),
            rng.random_range(0..checks.len()),
        );
        if m1 == m2 {
            continue;
        }
        let (k1, k2) = (
            rng.random_range(0..checks[m1].len()),
            rng.random_range(0..checks[m2].len()),
        );
        let (v1, v2) = (checks[m1][k1], checks[m2][k2]);
        if checks[m1].contains(&v2) || checks[m2].contains(&v1) {
            continue;
        }
        checks[m1][k1] = v2;
        checks[m2][k2] = v1;
        let candidate =
            TannerGraph::from_check_lists(g.n_vars(), &checks).expect("swap keeps the graph valid");
        let after = count_four_cycles(&candidate);
        if after < cycles {
            cycles = after;
            current = candidate;
        } else {
            checks[m1][k1] = v1;
            checks[m2][k2] = v2;
        }
    }
    Ok(current)
}
