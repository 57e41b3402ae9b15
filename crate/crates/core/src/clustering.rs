//! Affinity propagation over a square, possibly asymmetric, similarity
//! matrix. The number of clusters follows from the preference values.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative size of the index bias used to break exact ties.
const TIE_BREAK: f64 = 1e-12;

/// Entry `(i, j)` is how similar point `j` looks from point `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix(Array2<f64>);

impl SimilarityMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::shape("square matrix", format!("{:?}", values.dim())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("similarity matrix has non-finite entries".into()));
        }
        Ok(Self(values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::shape("square matrix", "ragged rows"));
        }
        Self::new(Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]))
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[[i, j]]
    }

    pub fn off_diagonal(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    out.push(self.0[[i, j]]);
                }
            }
        }
        out
    }
}

/// Self-similarity placed on the diagonal before message passing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    /// Median of all off-diagonal similarities.
    #[default]
    Median,
    Uniform(f64),
    PerPoint(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApConfig {
    pub damping: f64,
    pub max_iterations: usize,
    pub convergence_iterations: usize,
    pub preference: Preference,
}

impl Default for ApConfig {
    fn default() -> Self {
        Self {
            damping: 0.7,
            max_iterations: 500,
            convergence_iterations: 30,
            preference: Preference::Median,
        }
    }
}

impl ApConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..1.0).contains(&self.damping) {
            return Err(Error::config("damping", "must lie in [0.5, 1)"));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations", "must be >= 1"));
        }
        if self.convergence_iterations == 0 {
            return Err(Error::config("convergence_iterations", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub exemplar: usize,
    pub members: Vec<usize>,
}

/// A partition of `0..n` with one exemplar per part.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub exemplar_of: Vec<usize>,
    /// Ordered by exemplar index; members ascending.
    pub clusters: Vec<Cluster>,
    pub converged: bool,
    pub iterations_used: usize,
}

impl ClusterAssignment {
    pub fn from_exemplars(exemplar_of: Vec<usize>, converged: bool, iterations_used: usize) -> Self {
        let mut exemplars: Vec<usize> = exemplar_of.clone();
        exemplars.sort_unstable();
        exemplars.dedup();
        let clusters = exemplars
            .into_iter()
            .map(|e| Cluster {
                exemplar: e,
                members: (0..exemplar_of.len()).filter(|&i| exemplar_of[i] == e).collect(),
            })
            .collect();
        Self {
            exemplar_of,
            clusters,
            converged,
            iterations_used,
        }
    }

    /// Everyone in one cluster led by point 0.
    pub fn single(n: usize) -> Self {
        Self::from_exemplars(vec![0; n], true, 0)
    }

    /// Every point on its own.
    pub fn singletons(n: usize) -> Self {
        Self::from_exemplars((0..n).collect(), true, 0)
    }

    pub fn len(&self) -> usize {
        self.exemplar_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplar_of.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_index_of(&self, point: usize) -> usize {
        let e = self.exemplar_of[point];
        self.clusters.iter().position(|c| c.exemplar == e).expect("exemplar has a cluster")
    }

    /// Member sets only, each sorted, sorted by first member.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut g: Vec<Vec<usize>> = self.clusters.iter().map(|c| c.members.clone()).collect();
        g.sort();
        g
    }

    /// True when the member sets equal `groups`, irrespective of order.
    pub fn same_partition(&self, groups: &[Vec<usize>]) -> bool {
        let mut want: Vec<Vec<usize>> = groups
            .iter()
            .map(|g| {
                let mut g = g.clone();
                g.sort_unstable();
                g
            })
            .collect();
        want.sort();
        self.groups() == want
    }

    pub fn exemplars(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.exemplar).collect()
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-point preference vector for `mode`.
pub fn preference_from(s: &SimilarityMatrix, mode: &Preference) -> Result<Vec<f64>> {
    let n = s.len();
    match mode {
        Preference::Median => Ok(vec![median(s.off_diagonal()); n]),
        Preference::Uniform(p) => Ok(vec![*p; n]),
        Preference::PerPoint(v) if v.len() == n => Ok(v.clone()),
        Preference::PerPoint(v) => Err(Error::shape(format!("{n} preferences"), v.len())),
    }
}

/// Index of the largest value, lowest index on ties.
fn argmax_by(n: usize, f: impl Fn(usize) -> f64) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..n {
        let v = f(i);
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Responsibility/availability message passing with damping.
///
/// Convergence means the exemplar set was unchanged for
/// `convergence_iterations` consecutive iterations. Hitting
/// `max_iterations` first is not an error; the assignment is returned with
/// `converged = false`.
pub fn affinity_propagation(s: &SimilarityMatrix, cfg: &ApConfig) -> Result<ClusterAssignment> {
    cfg.validate()?;
    let n = s.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if n == 1 {
        return Ok(ClusterAssignment::from_exemplars(vec![0], true, 0));
    }
    let pref = preference_from(s, &cfg.preference)?;
    let mut sim = s.values().clone();
    for i in 0..n {
        sim[[i, i]] = pref[i];
    }
    // Exactly tied candidates make the messages oscillate forever. A bias far
    // below any meaningful difference breaks ties toward the lower index.
    let (lo, hi) = sim.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let tie_eps = TIE_BREAK * (hi - lo).max(1.0);
    let mut sim_msg = sim.clone();
    for ((_, k), v) in sim_msg.indexed_iter_mut() {
        *v -= tie_eps * k as f64;
    }

    let lam = cfg.damping;
    let mut r = Array2::<f64>::zeros((n, n));
    let mut a = Array2::<f64>::zeros((n, n));
    let conv = cfg.convergence_iterations;
    let mut history = vec![vec![false; n]; conv];
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..cfg.max_iterations {
        iterations = it + 1;
        // responsibilities
        for i in 0..n {
            let mut first = (usize::MAX, f64::NEG_INFINITY);
            let mut second = f64::NEG_INFINITY;
            for k in 0..n {
                let v = a[[i, k]] + sim_msg[[i, k]];
                if v > first.1 {
                    second = first.1;
                    first = (k, v);
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..n {
                let competitor = if k == first.0 { second } else { first.1 };
                let fresh = sim_msg[[i, k]] - competitor;
                r[[i, k]] = lam * r[[i, k]] + (1.0 - lam) * fresh;
            }
        }
        // availabilities
        for k in 0..n {
            let positive: f64 = (0..n).filter(|&i| i != k).map(|i| r[[i, k]].max(0.0)).sum();
            for i in 0..n {
                let fresh = if i == k {
                    positive
                } else {
                    (r[[k, k]] + positive - r[[i, k]].max(0.0)).min(0.0)
                };
                a[[i, k]] = lam * a[[i, k]] + (1.0 - lam) * fresh;
            }
        }

        let is_exemplar: Vec<bool> = (0..n).map(|k| a[[k, k]] + r[[k, k]] > 0.0).collect();
        let count = is_exemplar.iter().filter(|&&e| e).count();
        history[it % conv] = is_exemplar;
        if it + 1 >= conv {
            let stable = (0..n).all(|k| {
                let hits = history.iter().filter(|h| h[k]).count();
                hits == 0 || hits == conv
            });
            if stable && count > 0 {
                converged = true;
                break;
            }
        }
    }

    let mut exemplars: Vec<usize> = (0..n).filter(|&k| a[[k, k]] + r[[k, k]] > 0.0).collect();
    if exemplars.is_empty() {
        let best = argmax_by(n, |k| a[[k, k]] + r[[k, k]]);
        return Ok(ClusterAssignment::from_exemplars(vec![best; n], converged, iterations));
    }

    let assign = |exemplars: &[usize]| -> Vec<usize> {
        (0..n)
            .map(|i| match exemplars.iter().position(|&e| e == i) {
                Some(c) => c,
                None => argmax_by(exemplars.len(), |c| sim[[i, exemplars[c]]]),
            })
            .collect()
    };
    // Move each exemplar to the member with the largest summed similarity
    // from the rest of its cluster, then reassign.
    let labels = assign(&exemplars);
    for (c, e) in exemplars.iter_mut().enumerate() {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        let j = argmax_by(members.len(), |j| members.iter().map(|&i| sim[[i, members[j]]]).sum());
        *e = members[j];
    }
    let labels = assign(&exemplars);
    let exemplar_of = labels.iter().map(|&c| exemplars[c]).collect();
    Ok(ClusterAssignment::from_exemplars(exemplar_of, converged, iterations))
}
