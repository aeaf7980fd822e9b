//! Coupling graph between arms, its Laplacian spectrum and cut capacities.
//!
//! Two arms whose periods share a factor can be kept in phase, and every
//! round they are pulled apart loses the reward they would deliver jointly to
//! the residents they share. The coupling weight measures that loss per
//! round; a low cut between the pulled set and the rest keeps it small.

use std::collections::VecDeque;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Instance, TravelNetwork};
use crate::periods::PeriodAssignment;

/// Default relative tolerance for grouping equal eigenvalues.
pub const MULTIPLICITY_TOL: f64 = 1e-8;

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Per-round synchronization loss between arms `v` and `w`.
pub fn coupling_weight(
    network: &TravelNetwork,
    periods: &PeriodAssignment,
    v: usize,
    w: usize,
) -> Result<f64> {
    let (Some(tv), Some(tw)) = (periods.period(v), periods.period(w)) else {
        return Err(Error::Precondition(format!(
            "arms {v} and {w} must both have a period"
        )));
    };
    if v == w {
        return Ok(0.0);
    }
    let g = gcd(tv, tw);
    if g == 1 {
        return Ok(0.0);
    }
    let lcm = (tv / g * tw) as f64;
    let overlap: f64 = (0..network.size())
        .filter(|&u| network.weight(u, v) > 0.0 && network.weight(u, w) > 0.0)
        .map(|u| network.weight(v, u) * network.weight(w, u))
        .sum();
    Ok(overlap / lcm)
}

/// Weighted undirected graph over the arms that have a period. Local index
/// `i` corresponds to location `nodes[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    pub nodes: Vec<usize>,
    weights: Vec<f64>,
}

impl CouplingGraph {
    pub fn from_weights(nodes: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if weights.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: weights.len(),
            });
        }
        Ok(Self { nodes, weights })
    }

    /// Graph on `n` nodes with the given undirected weighted edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut weights = vec![0.0; n * n];
        for &(a, b, w) in edges {
            weights[a * n + b] = w;
            weights[b * n + a] = w;
        }
        Self {
            nodes: (0..n).collect(),
            weights,
        }
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.weights[a * self.nodes.len() + b]
    }

    pub fn is_edgeless(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }

    /// Local index of a location id.
    pub fn local(&self, location: usize) -> Option<usize> {
        self.nodes.iter().position(|&v| v == location)
    }

    /// Writes `u,v,weight` for every positive edge, using location ids.
    pub fn write_edge_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["u", "v", "weight"])?;
        let n = self.size();
        for a in 0..n {
            for b in a + 1..n {
                let x = self.weight(a, b);
                if x > 0.0 {
                    w.write_record([
                        self.nodes[a].to_string(),
                        self.nodes[b].to_string(),
                        x.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn build_coupling_graph(instance: &Instance, periods: &PeriodAssignment) -> Result<CouplingGraph> {
    let nodes = periods.assigned();
    if nodes.is_empty() {
        return Err(Error::Precondition("no arm has a period".into()));
    }
    let n = nodes.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            (0..n)
                .map(|b| coupling_weight(&instance.network, periods, nodes[a], nodes[b]))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    CouplingGraph::from_weights(nodes, rows.concat())
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        Self {
            n: rows.len(),
            data: rows.concat(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.n + j] = x;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Degree matrix minus weights.
pub fn laplacian(graph: &CouplingGraph) -> DenseMatrix {
    let n = graph.size();
    let mut l = DenseMatrix::zeros(n);
    for a in 0..n {
        let mut deg = 0.0;
        for b in 0..n {
            if a != b {
                let w = graph.weight(a, b);
                l.set(a, b, -w);
                deg += w;
            }
        }
        l.set(a, a, deg);
    }
    l
}

/// Eigenvalues in ascending order with matching unit eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi eigensolver for dense symmetric matrices.
pub fn symmetric_eigen(matrix: &DenseMatrix) -> Result<Eigen> {
    const MAX_SWEEPS: usize = 100;
    let n = matrix.n;
    let scale = matrix.data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 0..n {
        for j in i + 1..n {
            if (matrix.get(i, j) - matrix.get(j, i)).abs() > 1e-10 * (1.0 + scale) {
                return Err(Error::Precondition(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }

    let mut a = matrix.clone();
    let mut v = DenseMatrix::zeros(n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    let target = f64::EPSILON * matrix.frobenius();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a.get(k, p), a.get(k, q));
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let (apk, aqk) = (a.get(p, k), a.get(q, k));
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for k in 0..n {
                    let (vkp, vkq) = (v.get(k, p), v.get(k, q));
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)).then(i.cmp(&j)));
    Ok(Eigen {
        values: order.iter().map(|&i| a.get(i, i)).collect(),
        vectors: order
            .iter()
            .map(|&j| (0..n).map(|i| v.get(i, j)).collect())
            .collect(),
    })
}

/// Connected components over positive-weight edges, as sorted local indices.
pub fn connected_components(graph: &CouplingGraph) -> Vec<Vec<usize>> {
    let n = graph.size();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            for b in 0..n {
                if !seen[b] && graph.weight(a, b) > 0.0 {
                    seen[b] = true;
                    comp.push(b);
                    queue.push_back(b);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Eigenvectors spanning the Laplacian's second-smallest eigenvalue.
#[derive(Debug, Clone)]
pub struct FiedlerSet {
    pub vectors: Vec<Vec<f64>>,
    pub eigenvalue: f64,
}

/// For a connected graph, every eigenvector whose eigenvalue is within
/// `tol · (1 + |λ₂|)` of the second-smallest one. For a graph with several
/// components that eigenvalue is 0 and its eigenspace is spanned by the
/// normalized component indicators, one per component, which are returned
/// directly instead of an arbitrary rotation of them.
pub fn fiedler_set(graph: &CouplingGraph, tol: f64) -> Result<FiedlerSet> {
    let n = graph.size();
    let components = connected_components(graph);
    if n < 2 || components.len() > 1 {
        let vectors = components
            .iter()
            .map(|c| {
                let x = 1.0 / (c.len() as f64).sqrt();
                let mut e = vec![0.0; n];
                for &i in c {
                    e[i] = x;
                }
                e
            })
            .collect();
        return Ok(FiedlerSet {
            vectors,
            eigenvalue: 0.0,
        });
    }
    let eig = symmetric_eigen(&laplacian(graph))?;
    let lambda2 = eig.values[1];
    let band = tol * (1.0 + lambda2.abs());
    let vectors = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .skip(1)
        .filter(|(l, _)| (*l - lambda2).abs() <= band)
        .map(|(_, x)| x.clone())
        .collect();
    Ok(FiedlerSet {
        vectors,
        eigenvalue: lambda2,
    })
}

/// Total weight of edges with exactly one endpoint in `set` (local indices);
/// infinite for the empty set.
pub fn cut_capacity(graph: &CouplingGraph, set: &[usize]) -> f64 {
    if set.is_empty() {
        return f64::INFINITY;
    }
    let n = graph.size();
    let mut inside = vec![false; n];
    for &i in set {
        inside[i] = true;
    }
    let mut cut = 0.0;
    for &a in set {
        for b in 0..n {
            if !inside[b] {
                cut += graph.weight(a, b);
            }
        }
    }
    cut
}
