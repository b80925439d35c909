//! Checkers for the necessary and sufficient conditions on `(α, w)` under
//! which the cosine sequence `C^(n)` is topologically transitive or chaotic.
//!
//! Every checker works on one finite set `K` and returns a
//! [`CriterionReport`]. Verdicts only ever state what the underlying
//! implication licenses: a necessary condition that holds is reported as
//! "consistent with", a sufficient condition that fails gives no
//! conclusion about the dynamics.
//!
//! On a finite `K` with counting measure, `‖χ_{K∖D_k}‖ → 0` forces
//! `D_k = K` eventually. The search therefore picks
//! `D_k = {x ∈ K : decay quantity at x ≤ θ_k}` with `θ_k = tol · 2^{-k}`
//! and records a term of the witness sequence each time `D_k = K`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::{aperiodicity_horizon, DynMap, Horizon, OperatorHandle, OrbitProducts};
use crate::error::{param, Error, Result};
use crate::grid::{CompactSet, GridFunction, Site};
use crate::norm::{indicator_norm, norm, SpaceNorm};
use crate::scalar::{NumericMode, Scalar};

/// Search limits shared by all checkers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    /// Largest `n_k` examined.
    pub max_n: u64,
    /// Largest number of series terms summed before giving up on a tail bound.
    pub l_max: u64,
    /// Target for every limit quantity.
    pub tol: f64,
    /// Number of witness terms collected once `D_k = K` is reached.
    pub max_terms: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_n: 200, l_max: 64, tol: 1e-8, max_terms: 5 }
    }
}

impl Budget {
    pub fn validate(&self) -> Result<()> {
        if self.max_n == 0 || self.l_max == 0 || self.max_terms == 0 {
            return param("budgets must be positive");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return param(format!("tolerance must be positive, got {}", self.tol));
        }
        Ok(())
    }

    fn threshold(&self, k: usize) -> f64 {
        self.tol * 0.5f64.powi(k as i32)
    }
}

/// Which condition a report is about. Serialized with stable identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionId {
    /// `‖χ_{D_k} ∏_{s=1}^{n_k} w∘α^{-s}‖ → 0`, necessary for dense periodic
    /// points with `S^n f → 0`.
    #[serde(rename = "Thm3.1-ii")]
    BackwardDecay,
    /// `‖χ_{D_k} (∏_{s=0}^{n_k-1} w∘α^s)^{-1}‖ → 0`, necessary for dense
    /// periodic points with `T^n f → 0`.
    #[serde(rename = "Thm3.5-ii")]
    ForwardDecay,
    /// Partition condition sufficient for topological transitivity.
    #[serde(rename = "Thm3.8-ii")]
    SufficientTransitive,
    /// Summability condition sufficient for chaos.
    #[serde(rename = "Cor3.9-ii")]
    SufficientChaotic,
    /// `inf w > 1` rules out chaos.
    #[serde(rename = "Cor3.2-bounds")]
    InfAboveOne,
    /// `sup w < 1` rules out chaos.
    #[serde(rename = "Cor3.6-bounds")]
    SupBelowOne,
    /// `inf w ≤ 1 ≤ sup w` is necessary for chaos.
    #[serde(rename = "Cor3.7-bracket")]
    BoundsBracket,
    /// `inf w < 1 < sup w` is necessary for chaos of the adjoint sequence.
    #[serde(rename = "Cor4.3-bounds")]
    AdjointBounds,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("serializable");
        f.write_str(v.as_str().expect("string id"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    SatisfiedWithWitness,
    RefutedWithCertificate,
    InconclusiveWithinBudget,
}

/// One term `(n_k, D_k)` of a decay witness.
#[derive(Clone, Debug, Serialize)]
pub struct DecayTerm {
    pub n: u64,
    pub d: CompactSet,
    pub threshold: f64,
    /// `‖χ_{D_k} · q_{n_k}‖` for the checked pointwise quantity `q`.
    pub value: Scalar,
    /// `‖χ_{K∖D_k}‖`
    pub residual: Scalar,
    /// `(site, q_{n_k}(site))` over `D_k`.
    pub per_site: Vec<(Site, Scalar)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecaySequenceData {
    pub terms: Vec<DecayTerm>,
    /// First `n` at which `D = K`, if reached within budget.
    pub full_set_reached_at: Option<u64>,
    /// Largest `|D|` seen before `D = K` (diagnostic for inconclusive runs).
    pub best_partial_size: usize,
}

impl DecaySequenceData {
    pub fn residual_norms(&self) -> Vec<Scalar> {
        self.terms.iter().map(|t| t.residual.clone()).collect()
    }
}

/// One term of a transitivity witness: `D = E ⊔ F` and the five quantities
/// that must vanish.
#[derive(Clone, Debug, Serialize)]
pub struct PartitionTerm {
    pub n: u64,
    pub e: CompactSet,
    pub f: CompactSet,
    pub residual: Scalar,
    /// `‖χ_D ∏_{s=1}^{n} w∘α^{-s}‖`
    pub d_backward: Scalar,
    /// `‖χ_D (∏_{s=0}^{n-1} w∘α^s)^{-1}‖`
    pub d_forward_inverse: Scalar,
    /// `‖χ_E ∏_{s=1}^{2n} w∘α^{-s}‖`
    pub e_backward_double: Scalar,
    /// `‖χ_F (∏_{s=0}^{2n-1} w∘α^s)^{-1}‖`
    pub f_forward_inverse_double: Scalar,
}

impl PartitionTerm {
    pub fn d(&self) -> CompactSet {
        self.e.union(&self.f)
    }

    pub fn max_quantity(&self) -> f64 {
        [&self.residual, &self.d_backward, &self.d_forward_inverse, &self.e_backward_double, &self.f_forward_inverse_double]
            .iter()
            .map(|v| v.to_f64())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionData {
    pub terms: Vec<PartitionTerm>,
    pub full_set_reached_at: Option<u64>,
}

/// A series `Σ_{l≥1} t_l` summed to `terms_used` terms with a geometric
/// bound on the rest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesBound {
    pub partial: f64,
    pub tail_bound: f64,
    pub terms_used: u64,
    /// Largest consecutive-term ratio over the certifying run.
    pub ratio: f64,
    pub certified: bool,
    /// The last observed ratios were all `> 1`.
    pub divergent: bool,
    /// Last summed term.
    pub last_term: f64,
}

impl SeriesBound {
    /// `partial + tail_bound`, infinite when uncertified.
    pub fn certified_sum(&self) -> f64 {
        if self.certified {
            self.partial + self.tail_bound
        } else {
            f64::INFINITY
        }
    }
}

/// Consecutive ratios `≤ r < 1` required before a geometric tail is trusted.
pub const RATIO_RUN: usize = 3;

/// Sums `term(1), term(2), ...` until a geometric tail bound
/// `t_L · r / (1 - r)` is certified and falls below `stop_tail`, or
/// `l_max` terms are used. Certification needs [`RATIO_RUN`] consecutive
/// ratios below 1; `r` is the largest ratio of that run.
pub fn sum_with_geometric_tail(mut term: impl FnMut(u64) -> f64, l_max: u64, stop_tail: f64) -> SeriesBound {
    let mut partial = 0.0;
    let mut prev: Option<f64> = None;
    let mut run = 0usize;
    let mut run_max = 0.0f64;
    let mut growing = 0usize;
    let mut last = 0.0;
    let mut used = 0;
    for l in 1..=l_max {
        let t = term(l);
        partial += t;
        used = l;
        last = t;
        if let Some(p) = prev {
            let ratio = if p == 0.0 {
                if t == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                t / p
            };
            if ratio < 1.0 {
                run += 1;
                run_max = run_max.max(ratio);
                growing = 0;
            } else {
                run = 0;
                run_max = 0.0;
                growing = if ratio > 1.0 { growing + 1 } else { 0 };
            }
        }
        prev = Some(t);
        if run >= RATIO_RUN {
            let tail = t * run_max / (1.0 - run_max);
            if tail <= stop_tail || t == 0.0 {
                return SeriesBound {
                    partial,
                    tail_bound: tail,
                    terms_used: l,
                    ratio: run_max,
                    certified: true,
                    divergent: false,
                    last_term: t,
                };
            }
        }
    }
    let certified = run >= RATIO_RUN;
    SeriesBound {
        partial,
        tail_bound: if certified { last * run_max / (1.0 - run_max) } else { f64::INFINITY },
        terms_used: used,
        ratio: run_max,
        certified,
        divergent: growing >= RATIO_RUN,
        last_term: last,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesTerm {
    pub n: u64,
    pub d: CompactSet,
    pub residual: Scalar,
    /// `Σ_l ‖χ_D ∏_{s=1}^{l n} w∘α^{-s}‖`
    pub backward_series: SeriesBound,
    /// `Σ_l ‖χ_D (∏_{s=0}^{l n - 1} w∘α^s)^{-1}‖`
    pub forward_inverse_series: SeriesBound,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesData {
    pub terms: Vec<SeriesTerm>,
    pub full_set_reached_at: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthTerm {
    pub n: u64,
    pub value: Scalar,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// `‖χ_D · base^n‖ = base^n ‖χ_D‖` lower-bounds the checked quantity
    /// for every admissible `D`, and diverges because `base > 1`.
    Growth { base: Scalar, norm_chi: Scalar, terms: Vec<GrowthTerm> },
    /// A certified weight bound on the wrong side of 1.
    WeightBound { inf: Scalar, sup: Scalar, reason: String },
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    Decay(DecaySequenceData),
    Partition(PartitionData),
    Series(SeriesData),
    Bounds { inf: Scalar, sup: Scalar },
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub condition_id: ConditionId,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    pub implication: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CriterionReport {
    pub fn is_satisfied(&self) -> bool {
        self.verdict == Verdict::SatisfiedWithWitness
    }

    pub fn is_refuted(&self) -> bool {
        self.verdict == Verdict::RefutedWithCertificate
    }

    pub fn is_inconclusive(&self) -> bool {
        self.verdict == Verdict::InconclusiveWithinBudget
    }
}

/// Refutes chaos from the certified weight bounds alone.
pub fn check_bounds_necessary(op: &OperatorHandle) -> CriterionReport {
    let inf = op.weight.inf_bound().clone();
    let sup = op.weight.sup_bound().clone();
    let one = Scalar::one();
    if inf > one {
        return CriterionReport {
            condition_id: ConditionId::InfAboveOne,
            verdict: Verdict::RefutedWithCertificate,
            witness: None,
            certificate: Some(Certificate::WeightBound {
                inf: inf.clone(),
                sup,
                reason: format!("inf w = {inf} > 1, so ‖S^n f‖ ≤ (inf w)^(-n) ‖f‖ → 0 for every f"),
            }),
            implication: "periodic points of (C^(n)) are not dense; (C^(n)) is not chaotic".into(),
            notes: vec![],
        };
    }
    if sup < one {
        return CriterionReport {
            condition_id: ConditionId::SupBelowOne,
            verdict: Verdict::RefutedWithCertificate,
            witness: None,
            certificate: Some(Certificate::WeightBound {
                inf,
                sup: sup.clone(),
                reason: format!("sup w = {sup} < 1, so ‖T^n f‖ ≤ (sup w)^n ‖f‖ → 0 for every f"),
            }),
            implication: "periodic points of (C^(n)) are not dense; (C^(n)) is not chaotic".into(),
            notes: vec![],
        };
    }
    CriterionReport {
        condition_id: ConditionId::BoundsBracket,
        verdict: Verdict::InconclusiveWithinBudget,
        witness: Some(Witness::Bounds { inf, sup }),
        certificate: None,
        implication: "the necessary bracket inf w ≤ 1 ≤ sup w holds; no conclusion about chaos".into(),
        notes: vec![],
    }
}

/// Per-site products `q_n(x)` at a fixed `n`, for the sites of `K` in order.
fn decay_values(orbit: &OrbitProducts, side: Side) -> Vec<Scalar> {
    match side {
        Side::Backward => orbit.backward().to_vec(),
        Side::ForwardInverse => orbit.forward().iter().map(Scalar::recip).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Backward,
    ForwardInverse,
}

fn restricted(dim: usize, mode: NumericMode, sites: &[Site], values: &[Scalar], keep: &[bool]) -> GridFunction {
    let entries = sites
        .iter()
        .zip(values)
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|((s, v), _)| (*s, v.clone()));
    GridFunction::from_entries(dim, mode, entries).expect("sites share the dimension of K")
}

fn subset(dim: usize, sites: &[Site], keep: &[bool]) -> CompactSet {
    CompactSet::from_sites(dim, sites.iter().zip(keep).filter(|(_, &k)| k).map(|(s, _)| *s))
        .expect("sites share the dimension of K")
}

struct Context {
    mode: NumericMode,
    chi_k: Scalar,
    notes: Vec<String>,
}

fn prepare(space: &SpaceNorm, op: &OperatorHandle, k: &CompactSet, budget: &Budget) -> Result<Context> {
    space.validate()?;
    budget.validate()?;
    if k.is_empty() {
        return param("the set K must be non-empty");
    }
    if k.dim() != op.dim() {
        return param(format!("K has dimension {} but the map has dimension {}", k.dim(), op.dim()));
    }
    let mut notes = Vec::new();
    match aperiodicity_horizon(&op.map, k, budget.max_n) {
        Ok(Horizon::Horizon(h)) => notes.push(format!("K ∩ α^n(K) = ∅ for n ≥ {h}")),
        Ok(Horizon::NotWithinBudget) => notes.push(format!("no aperiodicity horizon for K within n ≤ {}", budget.max_n)),
        Err(Error::NotAperiodic(msg)) => notes.push(format!("α is not aperiodic: {msg}")),
        Err(e) => return Err(e),
    }
    let mode = op.mode();
    let chi_k = indicator_norm(space, k, mode)?;
    Ok(Context { mode, chi_k, notes })
}

/// Lower-bound certificate `‖χ_K · base^n‖` on a doubling schedule of `n`.
fn growth_certificate(space: &SpaceNorm, k: &CompactSet, base: &Scalar, ctx: &Context, budget: &Budget) -> Result<Certificate> {
    let mut terms = Vec::new();
    let mut n = 1u64;
    while n <= budget.max_n.min(64) {
        let scaled = k.indicator(ctx.mode).scale(&base.powi(n as u32));
        terms.push(GrowthTerm { n, value: norm(space, &scaled)? });
        n *= 2;
    }
    Ok(Certificate::Growth { base: base.clone(), norm_chi: ctx.chi_k.clone(), terms })
}

fn check_decay(
    space: &SpaceNorm,
    op: &OperatorHandle,
    k: &CompactSet,
    budget: &Budget,
    side: Side,
) -> Result<CriterionReport> {
    let ctx = prepare(space, op, k, budget)?;
    let (condition_id, refuting_base, refuted_implication, satisfied_implication) = match side {
        Side::Backward => (
            ConditionId::BackwardDecay,
            (op.weight.inf_bound() > &Scalar::one()).then(|| op.weight.inf_bound().clone()),
            "the necessary decay condition fails on K: periodic points of (C^(n)) on which S^n → 0 \
             are not dense, and (C^(n)) is not chaotic",
            "the necessary decay condition holds on K; consistent with dense periodic points \
             on which S^n → 0 (no converse is claimed)",
        ),
        Side::ForwardInverse => (
            ConditionId::ForwardDecay,
            (op.weight.sup_bound() < &Scalar::one()).then(|| op.weight.sup_bound().recip()),
            "the necessary decay condition fails on K: periodic points of (C^(n)) on which T^n → 0 \
             are not dense, and (C^(n)) is not chaotic",
            "the necessary decay condition holds on K; consistent with dense periodic points \
             on which T^n → 0 (no converse is claimed)",
        ),
    };
    if let Some(base) = refuting_base {
        let certificate = growth_certificate(space, k, &base, &ctx, budget)?;
        return Ok(CriterionReport {
            condition_id,
            verdict: Verdict::RefutedWithCertificate,
            witness: None,
            certificate: Some(certificate),
            implication: refuted_implication.into(),
            notes: ctx.notes,
        });
    }

    let mut orbit = OrbitProducts::new(k);
    let sites = orbit.sites().to_vec();
    let mut data = DecaySequenceData { terms: Vec::new(), full_set_reached_at: None, best_partial_size: 0 };
    for n in 1..=budget.max_n {
        orbit.advance_to(op, n);
        let values = decay_values(&orbit, side);
        let threshold = budget.threshold(data.terms.len() + 1);
        let keep: Vec<bool> = values.iter().map(|v| v.to_f64() <= threshold).collect();
        let size = keep.iter().filter(|&&b| b).count();
        if size < sites.len() {
            data.best_partial_size = data.best_partial_size.max(size);
            continue;
        }
        data.full_set_reached_at.get_or_insert(n);
        let value = norm(space, &restricted(k.dim(), ctx.mode, &sites, &values, &keep))?;
        data.terms.push(DecayTerm {
            n,
            d: k.clone(),
            threshold,
            value,
            residual: Scalar::zero().in_mode(ctx.chi_k.mode()),
            per_site: sites.iter().copied().zip(values).collect(),
        });
        if data.terms.len() >= budget.max_terms {
            break;
        }
    }
    let satisfied = data.terms.iter().any(|t| t.value.to_f64() <= budget.tol);
    let mut notes = ctx.notes;
    if data.full_set_reached_at.is_none() {
        notes.push(format!(
            "D = K not reached for n ≤ {} (largest admissible D had {} of {} sites)",
            budget.max_n,
            data.best_partial_size,
            sites.len()
        ));
    }
    Ok(CriterionReport {
        condition_id,
        verdict: if satisfied { Verdict::SatisfiedWithWitness } else { Verdict::InconclusiveWithinBudget },
        implication: if satisfied {
            satisfied_implication.into()
        } else {
            "no witness within budget; no conclusion".into()
        },
        witness: Some(Witness::Decay(data)),
        certificate: None,
        notes,
    })
}

/// Searches for `(n_k, D_k)` with `‖χ_{D_k} ∏_{s=1}^{n_k} w∘α^{-s}‖ → 0`.
/// Refutes (with a growth certificate) when `inf w > 1`.
pub fn check_necessary_decay_s(
    space: &SpaceNorm,
    op: &OperatorHandle,
    k: &CompactSet,
    budget: &Budget,
) -> Result<CriterionReport> {
    check_decay(space, op, k, budget, Side::Backward)
}

/// Searches for `(n_k, D_k)` with `‖χ_{D_k} (∏_{s=0}^{n_k-1} w∘α^s)^{-1}‖ → 0`.
/// Refutes when `sup w < 1`.
pub fn check_necessary_decay_t(
    space: &SpaceNorm,
    op: &OperatorHandle,
    k: &CompactSet,
    budget: &Budget,
) -> Result<CriterionReport> {
    check_decay(space, op, k, budget, Side::ForwardInverse)
}

/// Base of a growth certificate that refutes a sufficient condition: every
/// admissible `D` carries a quantity at least `base^n ‖χ_D‖`.
fn sufficient_refuting_base(op: &OperatorHandle) -> Option<Scalar> {
    let one = Scalar::one();
    if op.weight.inf_bound() > &one {
        Some(op.weight.inf_bound().clone())
    } else if op.weight.sup_bound() < &one {
        Some(op.weight.sup_bound().recip())
    } else {
        None
    }
}

const SUFFICIENT_REFUTED: &str =
    "the sufficient condition fails on K; this gives no conclusion about the dynamics of (C^(n))";

/// Searches `n_k` and a partition `D_k = E_k ⊔ F_k` of `K` for which the
/// residual, both `D` quantities at `n_k` and the `E`/`F` quantities at
/// `2 n_k` all fall below `budget.tol`. Sites go to `E` when their backward
/// `2n`-product is at most their inverse forward `2n`-product.
pub fn check_sufficient_transitive(
    space: &SpaceNorm,
    op: &OperatorHandle,
    k: &CompactSet,
    budget: &Budget,
) -> Result<CriterionReport> {
    let ctx = prepare(space, op, k, budget)?;
    if let Some(base) = sufficient_refuting_base(op) {
        return Ok(CriterionReport {
            condition_id: ConditionId::SufficientTransitive,
            verdict: Verdict::RefutedWithCertificate,
            witness: None,
            certificate: Some(growth_certificate(space, k, &base, &ctx, budget)?),
            implication: SUFFICIENT_REFUTED.into(),
            notes: ctx.notes,
        });
    }
    let mut single = OrbitProducts::new(k);
    let mut double = OrbitProducts::new(k);
    let sites = single.sites().to_vec();
    let dim = k.dim();
    let mut data = PartitionData { terms: Vec::new(), full_set_reached_at: None };
    for n in 1..=budget.max_n {
        single.advance_to(op, n);
        double.advance_to(op, 2 * n);
        let b = decay_values(&single, Side::Backward);
        let fi = decay_values(&single, Side::ForwardInverse);
        let b2 = decay_values(&double, Side::Backward);
        let fi2 = decay_values(&double, Side::ForwardInverse);
        let threshold = budget.threshold(data.terms.len() + 1);
        let full = (0..sites.len()).all(|i| {
            b[i].to_f64() <= threshold
                && fi[i].to_f64() <= threshold
                && b2[i].to_f64().min(fi2[i].to_f64()) <= threshold
        });
        if !full {
            continue;
        }
        data.full_set_reached_at.get_or_insert(n);
        let all = vec![true; sites.len()];
        let in_e: Vec<bool> = (0..sites.len()).map(|i| b2[i] <= fi2[i]).collect();
        let in_f: Vec<bool> = in_e.iter().map(|e| !e).collect();
        data.terms.push(PartitionTerm {
            n,
            e: subset(dim, &sites, &in_e),
            f: subset(dim, &sites, &in_f),
            residual: Scalar::zero().in_mode(ctx.chi_k.mode()),
            d_backward: norm(space, &restricted(dim, ctx.mode, &sites, &b, &all))?,
            d_forward_inverse: norm(space, &restricted(dim, ctx.mode, &sites, &fi, &all))?,
            e_backward_double: norm(space, &restricted(dim, ctx.mode, &sites, &b2, &in_e))?,
            f_forward_inverse_double: norm(space, &restricted(dim, ctx.mode, &sites, &fi2, &in_f))?,
        });
        if data.terms.len() >= budget.max_terms {
            break;
        }
    }
    let satisfied = data.terms.iter().any(|t| t.max_quantity() <= budget.tol);
    Ok(CriterionReport {
        condition_id: ConditionId::SufficientTransitive,
        verdict: if satisfied { Verdict::SatisfiedWithWitness } else { Verdict::InconclusiveWithinBudget },
        implication: if satisfied {
            "the sufficient condition holds on K; if it holds on every finite K, \
             (C^(n)) is topologically transitive"
                .into()
        } else {
            "no witness within budget; no conclusion".into()
        },
        witness: Some(Witness::Partition(data)),
        certificate: None,
        notes: ctx.notes,
    })
}

/// Term norms `‖χ_D q_{l n}‖` of the two series, summed with certified
/// geometric tails.
pub fn series_bounds(
    space: &SpaceNorm,
    op: &OperatorHandle,
    d: &CompactSet,
    n: u64,
    l_max: u64,
    stop_tail: f64,
) -> Result<(SeriesBound, SeriesBound)> {
    let mode = op.mode();
    let mut orbit = OrbitProducts::new(d);
    let sites = orbit.sites().to_vec();
    let all = vec![true; sites.len()];
    let mut backward_norms: Vec<f64> = Vec::new();
    let mut forward_norms: Vec<f64> = Vec::new();
    let mut error = None;
    let mut fill = |l: u64, orbit: &mut OrbitProducts, side: Side, out: &mut Vec<f64>| -> f64 {
        while out.len() < l as usize {
            let m = out.len() as u64 + 1;
            orbit.advance_to(op, m * n);
            let values = decay_values(orbit, side);
            match norm(space, &restricted(d.dim(), mode, &sites, &values, &all)) {
                Ok(v) => out.push(v.to_f64()),
                Err(e) => {
                    error.get_or_insert(e);
                    out.push(f64::NAN);
                }
            }
        }
        out[l as usize - 1]
    };
    // both series share the orbit products, so evaluate the backward one first
    // to a fixed depth and then the forward one
    let backward = sum_with_geometric_tail(|l| fill(l, &mut orbit, Side::Backward, &mut backward_norms), l_max, stop_tail);
    let mut orbit = OrbitProducts::new(d);
    let forward =
        sum_with_geometric_tail(|l| fill(l, &mut orbit, Side::ForwardInverse, &mut forward_norms), l_max, stop_tail);
    if let Some(e) = error {
        return Err(e);
    }
    Ok((backward, forward))
}

/// Searches `n_k` with `D_k = K` for which both
/// `Σ_l ‖χ_D ∏_{s=1}^{l n} w∘α^{-s}‖` and `Σ_l ‖χ_D (∏_{s=0}^{l n-1} w∘α^s)^{-1}‖`
/// have certified sums below `budget.tol`.
pub fn check_sufficient_chaotic(
    space: &SpaceNorm,
    op: &OperatorHandle,
    k: &CompactSet,
    budget: &Budget,
) -> Result<CriterionReport> {
    let ctx = prepare(space, op, k, budget)?;
    if let Some(base) = sufficient_refuting_base(op) {
        let mut notes = ctx.notes.clone();
        notes.push("series not certifiable: terms grow geometrically".into());
        return Ok(CriterionReport {
            condition_id: ConditionId::SufficientChaotic,
            verdict: Verdict::RefutedWithCertificate,
            witness: None,
            certificate: Some(growth_certificate(space, k, &base, &ctx, budget)?),
            implication: SUFFICIENT_REFUTED.into(),
            notes,
        });
    }
    let mut orbit = OrbitProducts::new(k);
    let sites = orbit.sites().to_vec();
    let mut data = SeriesData { terms: Vec::new(), full_set_reached_at: None };
    let mut notes = ctx.notes;
    let stop_tail = budget.tol * 1e-3;
    for n in 1..=budget.max_n {
        orbit.advance_to(op, n);
        let b = decay_values(&orbit, Side::Backward);
        let fi = decay_values(&orbit, Side::ForwardInverse);
        let threshold = budget.threshold(data.terms.len() + 1);
        if !(0..sites.len()).all(|i| b[i].to_f64() <= threshold && fi[i].to_f64() <= threshold) {
            continue;
        }
        data.full_set_reached_at.get_or_insert(n);
        let (backward_series, forward_inverse_series) = series_bounds(space, op, k, n, budget.l_max, stop_tail)?;
        data.terms.push(SeriesTerm {
            n,
            d: k.clone(),
            residual: Scalar::zero().in_mode(ctx.chi_k.mode()),
            backward_series,
            forward_inverse_series,
        });
        if data.terms.len() >= budget.max_terms {
            break;
        }
    }
    let satisfied = data.terms.iter().any(|t| {
        t.backward_series.certified_sum() <= budget.tol && t.forward_inverse_series.certified_sum() <= budget.tol
    });
    if !satisfied {
        // diagnose the series at the last examined n
        let (b, f) = series_bounds(space, op, k, budget.max_n.min(8), budget.l_max, stop_tail)?;
        for (name, s) in [("backward", b), ("forward-inverse", f)] {
            if s.divergent {
                notes.push(format!("{name} series not certifiable: terms grow"));
            } else if !s.certified {
                notes.push(format!("{name} series not certifiable: no geometric decay within {} terms", s.terms_used));
            }
        }
    }
    Ok(CriterionReport {
        condition_id: ConditionId::SufficientChaotic,
        verdict: if satisfied { Verdict::SatisfiedWithWitness } else { Verdict::InconclusiveWithinBudget },
        implication: if satisfied {
            "the sufficient condition holds on K; if it holds on every finite K, (C^(n)) is chaotic \
             and in particular topologically transitive"
                .into()
        } else {
            "no certified witness within budget; no conclusion".into()
        },
        witness: Some(Witness::Series(data)),
        certificate: None,
        notes,
    })
}

/// Runs every checker on one instance.
pub fn check_all(space: &SpaceNorm, op: &OperatorHandle, k: &CompactSet, budget: &Budget) -> Result<Vec<CriterionReport>> {
    Ok(vec![
        check_bounds_necessary(op),
        check_necessary_decay_s(space, op, k, budget)?,
        check_necessary_decay_t(space, op, k, budget)?,
        check_sufficient_transitive(space, op, k, budget)?,
        check_sufficient_chaotic(space, op, k, budget)?,
    ])
}

/// Whether the map is a nonzero shift (the case every checker can certify).
pub fn is_nonzero_shift(map: &DynMap) -> bool {
    matches!(map, DynMap::Shift(a) if !a.is_origin())
}
