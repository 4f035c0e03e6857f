//! 3-SAT → assembly reduction, used to generate hard instances.
//!
//! Each variable `u_i` becomes the vertex set `{u_i, ¬u_i}`, each clause
//! `c_j` the singleton `{c_j}`, and each clause also contributes one
//! single-predicate edge set `E_j`. Placing `E_j` between `c_j` and a vertex
//! for one of its literals costs 0; every other placement costs 1. The
//! optimum is 0 exactly when the formula is satisfiable.

use super::{CandidateSets, CondensedBipartiteGraph, EdgeSet, QueryGraph, Vertex, VertexSet};
use crate::embedding::{CondensedCost, Direction};
use crate::error::{Error, Result};
use crate::store::ItemId;

/// CNF with exactly three DIMACS-style literals per clause (`3` is `u_3`,
/// `-3` is `¬u_3`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<[i32; 3]>,
}

impl Cnf {
    pub fn new(num_vars: usize, clauses: Vec<[i32; 3]>) -> Result<Self> {
        let cnf = Cnf { num_vars, clauses };
        cnf.validate()?;
        Ok(cnf)
    }

    fn validate(&self) -> Result<()> {
        for (j, clause) in self.clauses.iter().enumerate() {
            for &lit in clause {
                if lit == 0 || lit.unsigned_abs() as usize > self.num_vars {
                    return Err(Error::Invalid(format!(
                        "clause {} has literal {lit} outside 1..={}",
                        j + 1,
                        self.num_vars
                    )));
                }
            }
        }
        Ok(())
    }

    /// `assignment[i]` is the value of variable `i + 1`.
    pub fn evaluate(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter()
                .any(|&lit| assignment[lit.unsigned_abs() as usize - 1] == (lit > 0))
        })
    }

    /// Reads the truth assignment off an assembled query graph of the reduced
    /// instance (`u_i` chosen means true).
    pub fn decode_assignment(&self, query: &QueryGraph) -> Vec<bool> {
        (0..self.num_vars)
            .map(|i| query.vertices[i].vertex == Vertex::Entity(literal_vertex(i, true)))
            .collect()
    }
}

fn literal_vertex(var: usize, positive: bool) -> ItemId {
    ItemId((2 * var + usize::from(!positive)) as u32)
}

/// Parses DIMACS CNF (`c` comments, `p cnf <vars> <clauses>`, zero-terminated
/// clauses). Every clause must have exactly three literals.
pub fn parse_dimacs(text: &str) -> Result<Cnf> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    let mut current_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            let f: Vec<&str> = line.split_whitespace().collect();
            let parsed = match f.as_slice() {
                ["p", "cnf", v, c] => v.parse().ok().zip(c.parse().ok()),
                _ => None,
            };
            header = Some(
                parsed.ok_or_else(|| Error::parse(idx + 1, "expected `p cnf <vars> <clauses>`"))?,
            );
            continue;
        }
        let (num_vars, _) =
            header.ok_or_else(|| Error::parse(idx + 1, "clause before `p cnf` header"))?;
        for tok in line.split_whitespace() {
            let lit: i32 = tok
                .parse()
                .map_err(|_| Error::parse(idx + 1, format!("bad literal `{tok}`")))?;
            if lit == 0 {
                if current.len() != 3 {
                    return Err(Error::parse(
                        idx + 1,
                        format!("clause has {} literals, expected 3", current.len()),
                    ));
                }
                clauses.push([current[0], current[1], current[2]]);
                current.clear();
                continue;
            }
            if lit.unsigned_abs() as usize > num_vars {
                return Err(Error::parse(
                    idx + 1,
                    format!("literal {lit} exceeds {num_vars} variables"),
                ));
            }
            if current.is_empty() {
                current_line = idx + 1;
            }
            current.push(lit);
        }
    }
    let (num_vars, declared) = header.ok_or_else(|| Error::parse(0, "missing `p cnf` header"))?;
    if !current.is_empty() {
        return Err(Error::parse(current_line, "unterminated clause"));
    }
    if clauses.len() != declared {
        return Err(Error::parse(
            0,
            format!(
                "header declares {declared} clauses, found {}",
                clauses.len()
            ),
        ));
    }
    Cnf::new(num_vars, clauses)
}

pub fn reduce_3sat(cnf: &Cnf) -> Result<CondensedBipartiteGraph> {
    cnf.validate()?;
    let p = cnf.num_vars;
    let q = cnf.clauses.len();
    let mut vertex_sets: Vec<VertexSet> = (0..p)
        .map(|i| VertexSet {
            members: vec![
                Vertex::Entity(literal_vertex(i, true)),
                Vertex::Entity(literal_vertex(i, false)),
            ],
            term: None,
        })
        .collect();
    vertex_sets.extend((0..q).map(|j| VertexSet {
        members: vec![Vertex::Entity(ItemId((2 * p + j) as u32))],
        term: None,
    }));
    let edge_sets = (0..q)
        .map(|j| EdgeSet {
            predicates: vec![ItemId((2 * p + q + j) as u32)],
            term: None,
        })
        .collect();
    let sets = CandidateSets {
        vertex_sets,
        edge_sets,
    };

    // does placing E_j on (set a, member x)–(set b, member y) satisfy clause j?
    let joins = |j: usize, (a, x): (usize, usize), (b, _): (usize, usize)| {
        b == p + j
            && a < p
            && cnf.clauses[j]
                .iter()
                .any(|&lit| lit.unsigned_abs() as usize - 1 == a && usize::from(lit < 0) == x)
    };
    CondensedBipartiteGraph::from_weights(sets, |sets, node, j| {
        let zero = joins(j, node.first, node.second) || joins(j, node.second, node.first);
        Ok(CondensedCost {
            cost: if zero { 0.0 } else { 1.0 },
            predicate: sets.edge_sets[j].predicates[0],
            direction: Direction::Forward,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembler::{solve_qga, LowerBound};

    #[test]
    fn satisfiable_single_clause_has_zero_optimum() {
        let cnf = Cnf::new(3, vec![[1, 2, -3]]).unwrap();
        let g = reduce_3sat(&cnf).unwrap();
        let sol = solve_qga(&g, LowerBound::Greedy).solution.unwrap();
        assert_eq!(sol.cost, 0.0);
        assert!(cnf.evaluate(&cnf.decode_assignment(&sol.query)));
    }

    #[test]
    fn contradiction_costs_at_least_one() {
        let cnf = Cnf::new(1, vec![[1, 1, 1], [-1, -1, -1]]).unwrap();
        let g = reduce_3sat(&cnf).unwrap();
        for bound in LowerBound::ALL {
            assert!(solve_qga(&g, bound).solution.unwrap().cost >= 1.0);
        }
    }

    #[test]
    fn dimacs_parsing() {
        let cnf = parse_dimacs("c demo\np cnf 3 2\n1 -2 3 0\n-1 2\n 3 0\n").unwrap();
        assert_eq!(cnf.num_vars, 3);
        assert_eq!(cnf.clauses, vec![[1, -2, 3], [-1, 2, 3]]);
        assert!(parse_dimacs("p cnf 2 1\n1 2 0\n").is_err());
        assert!(parse_dimacs("p cnf 2 1\n1 2 3 0\n").is_err());
        assert!(parse_dimacs("1 2 3 0\n").is_err());
        assert!(parse_dimacs("p cnf 3 2\n1 2 3 0\n").is_err());
        assert!(Cnf::new(2, vec![[1, 0, 2]]).is_err());
    }
}
