//! Verdicts on the existence of non-trivial non-negative solutions of
//!
//! ```text
//! (-Δ)^m u ≥ ± (Ψ(|x|) * u^p) u^q   in R^N
//! ```
//!
//! and of the coupled systems built from it. Only proven criteria are
//! applied; anything outside them is reported as inconclusive.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernels::{integral_condition_ii1, tail_condition_ii2, Decision, Kernel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    /// `(-Δ)^m u ≥ (Ψ * u^p) u^q`.
    Plus,
    /// `(-Δ)^m u ≥ -(Ψ * u^p) u^q`.
    Minus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    #[serde(rename = "N")]
    pub n: u32,
    pub m: u32,
    pub sign: Sign,
    pub kernel: Kernel,
    pub p: f64,
    pub q: f64,
}

impl ProblemParams {
    pub fn riesz(n: u32, m: u32, sign: Sign, alpha: f64, p: f64, q: f64) -> Self {
        Self { n, m, sign, kernel: Kernel::riesz(alpha), p, q }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(invalid(format!("N = {} and m = {} must both be at least 1", self.n, self.m)));
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(invalid(format!("p = {} must be positive and finite", self.p)));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(invalid(format!("q = {} must be positive and finite", self.q)));
        }
        self.kernel.validate(self.n).map_err(|e| invalid(format!("kernel: {e}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    NoNontrivialSolution,
    ExistsNontrivial,
    Inconclusive,
}

/// One evaluated criterion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub id: String,
    pub condition: String,
    pub satisfied: bool,
    /// Whether a satisfied clause settles the verdict.
    pub decisive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub clauses: Vec<Clause>,
}

const REL_EPS: f64 = 1e-12;

fn ge(a: f64, b: f64) -> bool {
    a >= b - REL_EPS * b.abs().max(1.0)
}

fn gt(a: f64, b: f64) -> bool {
    a > b + REL_EPS * b.abs().max(1.0)
}

fn decision_text(d: Decision) -> &'static str {
    match d {
        Decision::Holds => "holds",
        Decision::Fails => "fails",
        Decision::Inconclusive => "undetermined",
    }
}

/// Thresholds of the sharp existence region for the Riesz kernel:
/// `min{p,q} > (N-α)/(N-2m)` and `p+q > (2N-α)/(N-2m)`.
pub fn region_thresholds(n: u32, m: u32, alpha: f64) -> (f64, f64) {
    let d = (n - 2 * m) as f64;
    let nf = n as f64;
    ((nf - alpha) / d, (2.0 * nf - alpha) / d)
}

pub fn in_existence_region(n: u32, m: u32, alpha: f64, p: f64, q: f64) -> bool {
    let (lo, sum) = region_thresholds(n, m, alpha);
    gt(p.min(q), lo) && gt(p + q, sum)
}

/// Applies the known criteria in order and returns the strongest verdict.
pub fn classify_single(params: &ProblemParams) -> Result<Verdict> {
    params.validate()?;
    let ProblemParams { n, m, sign, ref kernel, p, q } = *params;
    let mut clauses = Vec::new();
    let mut no_solution = false;
    let push = |clauses: &mut Vec<Clause>, id: &str, condition: String, satisfied: bool, decisive: bool| {
        clauses.push(Clause { id: id.to_string(), condition, satisfied, decisive });
    };

    if sign == Sign::Minus {
        let sat = ge(p + q, 2.0) || (n > 2 * m && ge(p, 1.0));
        push(
            &mut clauses,
            "minus-sign",
            format!("negative nonlinearity: p+q = {} ≥ 2, or N > 2m with p = {p} ≥ 1", p + q),
            sat,
            true,
        );
        let status = if sat { Status::NoNontrivialSolution } else { Status::Inconclusive };
        return Ok(Verdict { status, clauses });
    }

    let exponents_ok = ge(p, 1.0) || ge(p + q, 2.0);
    if n <= 2 {
        let sat = exponents_ok;
        push(&mut clauses, "low-dimension", format!("N = {n} ≤ 2 with p ≥ 1 or p+q ≥ 2"), sat, true);
        no_solution |= sat;
    }
    if n > 2 * m {
        let ii1 = integral_condition_ii1(kernel, n, m, p);
        let sat = exponents_ok && ii1.holds();
        push(
            &mut clauses,
            "tail-integral",
            format!(
                "p ≥ 1 or p+q ≥ 2, and ∫_{{|y|>1}} |y|^(-p(N-2m)) Ψ(|y|) dy = ∞ with p(N-2m) = {} (divergence {})",
                p * (n - 2 * m) as f64,
                decision_text(ii1)
            ),
            sat,
            true,
        );
        no_solution |= sat;

        let tau = p + q;
        let ii2 = tail_condition_ii2(kernel, n, m, tau);
        let sat = ge(tau, 2.0) && ii2.holds();
        push(
            &mut clauses,
            "tail-limsup",
            format!(
                "p+q = {tau} ≥ 2 and limsup r^(2N-(N-2m)(p+q)) Ψ(r) > 0 with exponent 2N-(N-2m)(p+q) = {} (limsup positivity {})",
                2.0 * n as f64 - (n - 2 * m) as f64 * tau,
                decision_text(ii2)
            ),
            sat,
            true,
        );
        no_solution |= sat;

        if let Kernel::RieszPower { alpha } = *kernel {
            if ge(p, 1.0) && gt(q, 1.0) {
                let (lo, sum) = region_thresholds(n, m, alpha);
                let inside = in_existence_region(n, m, alpha, p, q);
                push(
                    &mut clauses,
                    "riesz-region",
                    format!(
                        "Riesz kernel with p ≥ 1, q > 1: solutions exist iff min{{p,q}} = {} > (N-α)/(N-2m) = {lo} and p+q = {} > (2N-α)/(N-2m) = {sum}",
                        p.min(q),
                        p + q
                    ),
                    inside,
                    true,
                );
                if !no_solution {
                    let status = if inside { Status::ExistsNontrivial } else { Status::NoNontrivialSolution };
                    return Ok(Verdict { status, clauses });
                }
            }
        }
    }
    let status = if no_solution { Status::NoNontrivialSolution } else { Status::Inconclusive };
    if clauses.is_empty() {
        push(&mut clauses, "no-criterion", format!("no known criterion covers N = {n}, m = {m}"), false, false);
    }
    Ok(Verdict { status, clauses })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingForm {
    /// `(-Δ)^m u_i ≥ Σ_j e_ij (Ψ_ij * u_j^{p_ij}) u_j^{q_ij}`.
    Cross,
    /// `(-Δ)^m u_i ≥ Σ_j e_ij (Ψ_ij * u_j^{p_ij}) u_i^{q_ij}`.
    SelfCoupled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    #[serde(rename = "N")]
    pub dim: u32,
    pub m: u32,
    pub form: CouplingForm,
    pub adjacency: Vec<Vec<u8>>,
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub kernels: Vec<Vec<Kernel>>,
}

impl SystemSpec {
    pub fn nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes();
        if n == 0 {
            return Err(invalid("a system needs at least one node"));
        }
        if self.m == 0 || self.dim <= 2 * self.m {
            return Err(invalid(format!("systems need m ≥ 1 and N > 2m (N = {}, m = {})", self.dim, self.m)));
        }
        let square = |name: &str, rows: usize, cols: &dyn Fn(usize) -> usize| -> Result<()> {
            if rows != n || (0..rows).any(|i| cols(i) != n) {
                return Err(invalid(format!("{name} must be {n}×{n}")));
            }
            Ok(())
        };
        square("adjacency", self.adjacency.len(), &|i| self.adjacency[i].len())?;
        square("p", self.p.len(), &|i| self.p[i].len())?;
        square("q", self.q.len(), &|i| self.q[i].len())?;
        square("kernels", self.kernels.len(), &|i| self.kernels[i].len())?;
        for i in 0..n {
            for j in 0..n {
                let e = self.adjacency[i][j];
                if e > 1 || e != self.adjacency[j][i] {
                    return Err(invalid(format!("adjacency must be symmetric 0/1 (entry {i},{j})")));
                }
                if !(self.p[i][j] > 0.0 && self.q[i][j] > 0.0) || !self.p[i][j].is_finite() || !self.q[i][j].is_finite() {
                    return Err(invalid(format!("exponents at {i},{j} must be positive and finite")));
                }
                self.kernels[i][j].validate(self.dim).map_err(|e| invalid(format!("kernel {i},{j}: {e}")))?;
            }
        }
        Ok(())
    }

    /// The same system with nodes relabelled: new node `i` is old node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let pick = |m: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            perm.iter().map(|&i| perm.iter().map(|&j| m[i][j]).collect()).collect()
        };
        Self {
            dim: self.dim,
            m: self.m,
            form: self.form,
            adjacency: perm.iter().map(|&i| perm.iter().map(|&j| self.adjacency[i][j]).collect()).collect(),
            p: pick(&self.p),
            q: pick(&self.q),
            kernels: perm.iter().map(|&i| perm.iter().map(|&j| self.kernels[i][j].clone()).collect()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    MustVanish,
    Unconstrained,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuralVerdict {
    /// Only the zero solution.
    AllVanish,
    /// At most one component is non-zero, and it is poly-superharmonic.
    AtMostOneNonzero,
    /// Some components or pairs are constrained, but not all.
    Partial,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCheck {
    pub k: usize,
    pub l: usize,
    pub exponents_ok: bool,
    pub tail_kl: Decision,
    pub tail_lk: Decision,
    pub qualifies: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemVerdict {
    pub nodes: Vec<NodeStatus>,
    /// Pairs `(k, l)` of which at most one component is non-zero.
    pub exclusive_pairs: Vec<(usize, usize)>,
    pub verdict: StructuralVerdict,
    pub edges: Vec<EdgeCheck>,
    pub explanation: String,
}

/// Node-by-node consequences of the pairwise Liouville criteria.
pub fn classify_system(spec: &SystemSpec) -> Result<SystemVerdict> {
    spec.validate()?;
    let n = spec.nodes();
    let (dim, m) = (spec.dim, spec.m);
    let mut nodes = vec![NodeStatus::Unconstrained; n];
    let mut exclusive = Vec::new();
    let mut edges = Vec::new();
    for k in 0..n {
        for l in k..n {
            if spec.adjacency[k][l] != 1 {
                continue;
            }
            let (tau_kl, tau_lk) = (spec.p[k][l] + spec.q[k][l], spec.p[l][k] + spec.q[l][k]);
            let exponents_ok = match spec.form {
                CouplingForm::Cross => ge(tau_kl, 2.0) && ge(tau_lk, 2.0),
                CouplingForm::SelfCoupled => [spec.p[k][l], spec.q[k][l], spec.p[l][k], spec.q[l][k]]
                    .iter()
                    .all(|&x| ge(x, 1.0)),
            };
            let tail_kl = tail_condition_ii2(&spec.kernels[k][l], dim, m, tau_kl);
            let tail_lk = tail_condition_ii2(&spec.kernels[l][k], dim, m, tau_lk);
            let qualifies = exponents_ok && tail_kl.holds() && tail_lk.holds();
            if qualifies {
                match spec.form {
                    CouplingForm::Cross => {
                        nodes[k] = NodeStatus::MustVanish;
                        nodes[l] = NodeStatus::MustVanish;
                    }
                    CouplingForm::SelfCoupled if k == l => nodes[k] = NodeStatus::MustVanish,
                    CouplingForm::SelfCoupled => exclusive.push((k, l)),
                }
            }
            edges.push(EdgeCheck { k, l, exponents_ok, tail_kl, tail_lk, qualifies });
        }
    }

    let alive: Vec<usize> = (0..n).filter(|&i| nodes[i] == NodeStatus::Unconstrained).collect();
    let excluded = |a: usize, b: usize| exclusive.contains(&(a.min(b), a.max(b)));
    let pairwise_exclusive = alive.iter().enumerate().all(|(x, &a)| alive[x + 1..].iter().all(|&b| excluded(a, b)));
    let any_constraint = alive.len() < n || !exclusive.is_empty();
    let (verdict, explanation) = if alive.is_empty() {
        (
            StructuralVerdict::AllVanish,
            "every node belongs to an adjacent pair meeting the exponent and tail hypotheses, so the only non-negative solution is (0,…,0)".to_string(),
        )
    } else if any_constraint && pairwise_exclusive {
        (
            StructuralVerdict::AtMostOneNonzero,
            format!(
                "nodes {alive:?} are pairwise mutually exclusive and the rest vanish: at most one component is non-zero, and that component is poly-superharmonic"
            ),
        )
    } else if any_constraint {
        let vanish: Vec<usize> = (0..n).filter(|&i| nodes[i] == NodeStatus::MustVanish).collect();
        (
            StructuralVerdict::Partial,
            format!("nodes {vanish:?} vanish and pairs {exclusive:?} cannot both be non-zero; the remaining components are not determined"),
        )
    } else {
        (StructuralVerdict::Inconclusive, "no adjacent pair meets the exponent and tail hypotheses".to_string())
    };
    Ok(SystemVerdict { nodes, exclusive_pairs: exclusive, verdict, edges, explanation })
}

/// Boundary curves of the existence region and a verdict grid over
/// `[p_lo, p_hi]²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionTable {
    /// `(p, q_min, q_diagonal)`: the lines `q = (N-α)/(N-2m)` and `p + q = (2N-α)/(N-2m)`.
    pub boundary: Vec<(f64, f64, f64)>,
    /// `(p, q, status)`.
    pub grid: Vec<(f64, f64, Status)>,
}

impl RegionTable {
    pub fn boundary_csv(&self) -> String {
        let mut s = String::from("p,q_min,q_diagonal\n");
        for (p, a, b) in &self.boundary {
            s.push_str(&format!("{p},{a},{b}\n"));
        }
        s
    }

    pub fn grid_csv(&self) -> String {
        let mut s = String::from("p,q,verdict\n");
        for (p, q, st) in &self.grid {
            let label = match st {
                Status::ExistsNontrivial => "exists",
                Status::NoNontrivialSolution => "no_nontrivial_solution",
                Status::Inconclusive => "inconclusive",
            };
            s.push_str(&format!("{p},{q},{label}\n"));
        }
        s
    }
}

pub fn region_boundary_csv(n: u32, m: u32, alpha: f64, p_range: (f64, f64), samples: usize) -> Result<RegionTable> {
    if samples == 0 {
        return Err(invalid("samples must be at least 1"));
    }
    if n <= 2 * m {
        return Err(invalid(format!("region needs N > 2m (N = {n}, m = {m})")));
    }
    if !(alpha > 0.0 && alpha < n as f64) {
        return Err(invalid(format!("α = {alpha} must lie in (0, N)")));
    }
    let (lo, hi) = p_range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(invalid(format!("p range [{lo}, {hi}] must be positive and ordered")));
    }
    let (qmin, sum) = region_thresholds(n, m, alpha);
    let at = |i: usize| if samples == 1 { lo } else { lo + (hi - lo) * i as f64 / (samples - 1) as f64 };
    let boundary = (0..samples).map(|i| (at(i), qmin, sum - at(i))).collect();
    let grid = (0..samples * samples)
        .into_par_iter()
        .map(|idx| {
            let (p, q) = (at(idx / samples), at(idx % samples));
            let v = classify_single(&ProblemParams::riesz(n, m, Sign::Plus, alpha, p, q))?;
            Ok((p, q, v.status))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionTable { boundary, grid })
}
