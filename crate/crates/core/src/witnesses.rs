//! Explicit vectors behind the sufficient conditions: transitivity
//! witnesses `v ≈ f` with `C^(n) v ≈ g`, and truncated periodic points.

use serde::Serialize;

use crate::criteria::RATIO_RUN;
use crate::dynamics::{apply_cosine, apply_s_pow, apply_t_pow, weight_product, OperatorHandle, ProductSide};
use crate::error::{param, Error, Result};
use crate::grid::{scale_restrict, CompactSet, GridFunction};
use crate::norm::{indicator_norm, norm, SpaceNorm};
use crate::scalar::Scalar;

/// Default target for the dropped series mass of a periodic point,
/// relative to `‖f‖`.
pub const DEFAULT_TAIL_FRACTION: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Construction {
    Transitivity { e: CompactSet, f: CompactSet, d: CompactSet },
    Periodic {
        d: CompactSet,
        truncation: u64,
        /// Certified bound on `Σ_{l>L} (‖T^{ln}(fχ_D)‖ + ‖S^{ln}(fχ_D)‖)`.
        tail_bound: f64,
        /// Largest consecutive-term ratio used for the tail.
        ratio: f64,
        /// `‖T^{ln}(fχ_D)‖ + ‖S^{ln}(fχ_D)‖` for `l = 1..=L`.
        term_norms: Vec<f64>,
        /// `‖fχ_D‖`
        base_norm: f64,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessBundle {
    #[serde(serialize_with = "serialize_function")]
    pub v: GridFunction,
    pub n: u64,
    pub construction: Construction,
}

fn serialize_function<S: serde::Serializer>(f: &GridFunction, s: S) -> std::result::Result<S::Ok, S::Error> {
    f.to_wire(false).serialize(s)
}

impl WitnessBundle {
    pub fn tail_bound(&self) -> Option<f64> {
        match &self.construction {
            Construction::Periodic { tail_bound, .. } => Some(*tail_bound),
            Construction::Transitivity { .. } => None,
        }
    }

    /// Bound on `‖C^(l n) v - v‖` that accounts for every series term the
    /// shift by `l n` moves across the truncation edge:
    /// `½ Σ_{j > L - l} (‖T^{jn}(fχ_D)‖ + ‖S^{jn}(fχ_D)‖)`.
    pub fn edge_bound(&self, l: u64) -> Option<f64> {
        let Construction::Periodic { tail_bound, term_norms, base_norm, .. } = &self.construction else {
            return None;
        };
        if l == 0 {
            return Some(0.0);
        }
        let big_l = term_norms.len() as u64;
        if l <= big_l {
            let inside: f64 = term_norms[(big_l - l) as usize..].iter().sum();
            return Some(0.5 * (inside + tail_bound));
        }
        // the edges overlap: every kept term can cross at most twice
        let kept: f64 = base_norm + term_norms.iter().sum::<f64>();
        Some(kept + 0.5 * tail_bound)
    }
}

fn check_same_dim(op: &OperatorHandle, f: &GridFunction, what: &str) -> Result<()> {
    if f.dim() != op.dim() {
        return param(format!("{what} has dimension {} but the map has dimension {}", f.dim(), op.dim()));
    }
    Ok(())
}

/// `v = fχ_D + 2 T^n(gχ_E) + 2 S^n(gχ_F)`.
pub fn build_transitivity_witness(
    op: &OperatorHandle,
    f: &GridFunction,
    g: &GridFunction,
    n: u64,
    e: &CompactSet,
    f_set: &CompactSet,
    d: &CompactSet,
) -> Result<WitnessBundle> {
    check_same_dim(op, f, "f")?;
    check_same_dim(op, g, "g")?;
    if n == 0 {
        return param("n must be positive");
    }
    if !e.is_disjoint(f_set) {
        return param("E and F overlap");
    }
    if e.union(f_set) != *d {
        return param("E ∪ F must equal D");
    }
    let two = Scalar::from_int(2);
    let v = scale_restrict(f, d)
        .add(&apply_t_pow(op, n, &scale_restrict(g, e)).scale(&two))
        .add(&apply_s_pow(op, n, &scale_restrict(g, f_set)).scale(&two));
    Ok(WitnessBundle {
        v,
        n,
        construction: Construction::Transitivity { e: e.clone(), f: f_set.clone(), d: d.clone() },
    })
}

/// `(‖v - f‖, ‖C^(n) v - g‖)`.
pub fn verify_transition(
    space: &SpaceNorm,
    op: &OperatorHandle,
    bundle: &WitnessBundle,
    f: &GridFunction,
    g: &GridFunction,
) -> Result<(Scalar, Scalar)> {
    let near = norm(space, &bundle.v.sub(f))?;
    let image = apply_cosine(op, bundle.n as i64, &bundle.v);
    let far = norm(space, &image.sub(g))?;
    Ok((near, far))
}

/// Upper bound on `‖v - f‖` for a transitivity witness over `K`:
/// `‖f‖_∞ ‖χ_{K∖D}‖ + 2‖g‖_∞ (‖χ_E ∏_{s=1}^{n} w∘α^{-s}‖ + ‖χ_F (∏_{s=0}^{n-1} w∘α^s)^{-1}‖)`.
pub fn transition_distance_bound(
    space: &SpaceNorm,
    op: &OperatorHandle,
    bundle: &WitnessBundle,
    f: &GridFunction,
    g: &GridFunction,
    k: &CompactSet,
) -> Result<f64> {
    let Construction::Transitivity { e, f: f_set, d } = &bundle.construction else {
        return param("not a transitivity witness");
    };
    let mode = op.mode();
    let n = bundle.n;
    let backward = e.indicator(mode).map_values(|x, v| v * &weight_product(op, n, ProductSide::Backward, x));
    let forward_inv = f_set
        .indicator(mode)
        .map_values(|x, v| v / &weight_product(op, n, ProductSide::Forward, x));
    let outside = indicator_norm(space, &k.difference(d), mode)?.to_f64();
    Ok(f.sup_abs().to_f64() * outside
        + 2.0 * g.sup_abs().to_f64() * (norm(space, &backward)?.to_f64() + norm(space, &forward_inv)?.to_f64()))
}

fn periodic_term_norms(space: &SpaceNorm, op: &OperatorHandle, base: &GridFunction, n: u64, count: u64) -> Result<Vec<f64>> {
    (1..=count)
        .map(|l| {
            let t = norm(space, &apply_t_pow(op, l * n, base))?.to_f64();
            let s = norm(space, &apply_s_pow(op, l * n, base))?.to_f64();
            Ok(t + s)
        })
        .collect()
}

/// Geometric tail `t_L r / (1 - r)` from the last ratios of `terms`, with
/// `r` the largest of the last `min(RATIO_RUN, L - 1)` ratios.
fn certified_tail(terms: &[f64]) -> Option<(f64, f64)> {
    let big_l = terms.len();
    if big_l < 2 {
        return None;
    }
    let last = terms[big_l - 1];
    if last == 0.0 {
        return Some((0.0, 0.0));
    }
    let run = RATIO_RUN.min(big_l - 1);
    let mut r = 0.0f64;
    for i in big_l - run..big_l {
        if terms[i - 1] == 0.0 {
            return None;
        }
        r = r.max(terms[i] / terms[i - 1]);
    }
    (r < 1.0).then(|| (last * r / (1.0 - r), r))
}

/// `v = fχ_D + Σ_{l=1}^{L} T^{ln}(fχ_D) + Σ_{l=1}^{L} S^{ln}(fχ_D)`, with a
/// certified bound on the dropped terms. Refuses when the term norms are not
/// geometrically decaying at `l = L`.
pub fn build_periodic_point(
    space: &SpaceNorm,
    op: &OperatorHandle,
    f: &GridFunction,
    d: &CompactSet,
    n: u64,
    truncation: u64,
) -> Result<WitnessBundle> {
    check_same_dim(op, f, "f")?;
    if n == 0 || truncation == 0 {
        return param("n and the truncation must be positive");
    }
    let base = scale_restrict(f, d);
    if base.is_zero() {
        return Ok(WitnessBundle {
            v: base,
            n,
            construction: Construction::Periodic {
                d: d.clone(),
                truncation,
                tail_bound: 0.0,
                ratio: 0.0,
                term_norms: vec![0.0; truncation as usize],
                base_norm: 0.0,
            },
        });
    }
    let term_norms = periodic_term_norms(space, op, &base, n, truncation.max(2))?;
    let Some((tail_bound, ratio)) = certified_tail(&term_norms) else {
        let growth: Vec<String> = term_norms.iter().map(|t| format!("{t:.3e}")).collect();
        return Err(Error::NotCertifiable(format!(
            "series terms ‖T^(ln) fχ_D‖ + ‖S^(ln) fχ_D‖ do not decay geometrically by l = {}: [{}]",
            term_norms.len(),
            growth.join(", ")
        )));
    };
    let mut term_norms = term_norms;
    // with L = 1 the certification looked one term ahead; that term is dropped too
    let tail_bound = if truncation == 1 { tail_bound + term_norms[1] } else { tail_bound };
    term_norms.truncate(truncation as usize);
    let base_norm = norm(space, &base)?.to_f64();
    let mut v = base.clone();
    for l in 1..=truncation {
        v = v.add(&apply_t_pow(op, l * n, &base)).add(&apply_s_pow(op, l * n, &base));
    }
    Ok(WitnessBundle {
        v,
        n,
        construction: Construction::Periodic { d: d.clone(), truncation, tail_bound, ratio, term_norms, base_norm },
    })
}

/// Smallest truncation `L ≤ l_max` whose certified tail is at most
/// `fraction · ‖f‖`.
pub fn choose_truncation(
    space: &SpaceNorm,
    op: &OperatorHandle,
    f: &GridFunction,
    d: &CompactSet,
    n: u64,
    fraction: f64,
    l_max: u64,
) -> Result<u64> {
    let base = scale_restrict(f, d);
    if base.is_zero() {
        return Ok(1);
    }
    let target = fraction * norm(space, f)?.to_f64();
    let terms = periodic_term_norms(space, op, &base, n, l_max.max(2))?;
    for big_l in 2..=terms.len() {
        if let Some((tail, _)) = certified_tail(&terms[..big_l]) {
            if tail <= target {
                return Ok(big_l as u64);
            }
        }
    }
    Err(Error::NotCertifiable(format!("no truncation L ≤ {l_max} brings the tail below {target:e}")))
}

/// `‖C^(l n) v - v‖`.
pub fn periodicity_residual(space: &SpaceNorm, op: &OperatorHandle, bundle: &WitnessBundle, l: u64) -> Result<Scalar> {
    if !matches!(bundle.construction, Construction::Periodic { .. }) {
        return param("not a periodic construction");
    }
    let m = (l * bundle.n) as i64;
    norm(space, &apply_cosine(op, m, &bundle.v).sub(&bundle.v))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: i64,
    pub target_id: usize,
    pub distance: f64,
}

/// `‖C^(n) v - t‖` for every `n` in `n_list` and every target.
pub fn orbit_trace(
    space: &SpaceNorm,
    op: &OperatorHandle,
    v: &GridFunction,
    targets: &[GridFunction],
    n_list: &[i64],
) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::with_capacity(targets.len() * n_list.len());
    for &n in n_list {
        let image = apply_cosine(op, n, v);
        for (target_id, t) in targets.iter().enumerate() {
            rows.push(TraceRow { n, target_id, distance: norm(space, &image.sub(t))?.to_f64() });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DynMap, WeightFn};
    use crate::grid::Site;
    use crate::scalar::NumericMode;

    fn half_line_op() -> OperatorHandle {
        OperatorHandle::new(
            DynMap::shift1(1),
            WeightFn::half_line(0, Scalar::ratio(1, 2), Scalar::from_int(2)).unwrap(),
        )
    }

    fn constant_op(c: i64) -> OperatorHandle {
        OperatorHandle::new(DynMap::shift1(1), WeightFn::constant(Scalar::from_int(c)).unwrap())
    }

    fn delta0() -> GridFunction {
        GridFunction::delta(Site::d1(0), Scalar::one())
    }

    #[test]
    fn zero_g_gives_restricted_f() {
        let op = half_line_op();
        let f = CompactSet::interval(-1, 1).indicator(NumericMode::Exact);
        let g = GridFunction::zero(1, NumericMode::Exact);
        let d = CompactSet::interval(0, 1);
        let b = build_transitivity_witness(&op, &f, &g, 3, &d, &CompactSet::empty(1), &d).unwrap();
        assert!(b.v.same_as(&scale_restrict(&f, &d)));
        let (near, far) = verify_transition(&SpaceNorm::l2(), &op, &b, &f, &g).unwrap();
        assert_eq!(near, norm(&SpaceNorm::l2(), &f.sub(&scale_restrict(&f, &d))).unwrap());
        assert_eq!(far, norm(&SpaceNorm::l2(), &apply_cosine(&op, 3, &scale_restrict(&f, &d))).unwrap());
    }

    #[test]
    fn unit_weight_witness_is_explicit_translate() {
        let op = constant_op(1);
        let f = GridFunction::from_entries(1, NumericMode::Exact, [(Site::d1(0), Scalar::from_int(3)), (Site::d1(2), Scalar::ratio(1, 3))]).unwrap();
        let g = GridFunction::from_entries(1, NumericMode::Exact, [(Site::d1(1), Scalar::from_int(5))]).unwrap();
        let d = CompactSet::interval(0, 2);
        let n = 4;
        let b = build_transitivity_witness(&op, &f, &g, n, &d, &CompactSet::empty(1), &d).unwrap();
        // T^n(gχ_D)(x) = g(x + n)
        let expected = f.add(&g.transport(|x| x.offset(&Site::d1(-1), n as i64), |_| Scalar::from_int(2)));
        assert!(b.v.same_as(&expected));
    }

    #[test]
    fn overlapping_partition_is_rejected() {
        let op = half_line_op();
        let f = delta0();
        let e = CompactSet::interval(0, 1);
        let fs = CompactSet::interval(1, 2);
        let r = build_transitivity_witness(&op, &f, &f, 2, &e, &fs, &e.union(&fs));
        assert!(matches!(r, Err(Error::Parameter(_))));
    }

    #[test]
    fn half_line_witness_within_bound() {
        let op = half_line_op();
        let k = CompactSet::interval(-1, 1);
        let f = k.indicator(NumericMode::Exact);
        let b = build_transitivity_witness(&op, &f, &f, 20, &k, &CompactSet::empty(1), &k).unwrap();
        let space = SpaceNorm::l2();
        let (near, _) = verify_transition(&space, &op, &b, &f, &f).unwrap();
        let bound = transition_distance_bound(&space, &op, &b, &f, &f, &k).unwrap();
        assert!(near.to_f64() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn periodic_point_examples() {
        let op = half_line_op();
        let space = SpaceNorm::l2();
        let d = CompactSet::interval(0, 0);
        let b = build_periodic_point(&space, &op, &delta0(), &d, 10, 12).unwrap();
        let tail = b.tail_bound().unwrap();
        // T-terms 2^{-10 l}, S-terms 2^{2 - 10 l}
        let r = 2f64.powi(-10);
        let exact_tail = 5.0 * r.powi(13) / (1.0 - r);
        assert!((tail - exact_tail).abs() <= 1e-12 * exact_tail);
        for l in 1..=5 {
            let res = periodicity_residual(&space, &op, &b, l).unwrap().to_f64();
            if l == 1 {
                assert!(res <= 1e-30);
            }
            assert!(res <= b.edge_bound(l).unwrap() * (1.0 + 1e-9));
        }
        assert_eq!(periodicity_residual(&space, &op, &b, 0).unwrap().to_f64(), 0.0);

        let z = build_periodic_point(&space, &op, &GridFunction::zero(1, NumericMode::Exact), &d, 10, 12).unwrap();
        assert!(z.v.is_zero());
        assert_eq!(z.tail_bound(), Some(0.0));

        let refused = build_periodic_point(&space, &constant_op(2), &delta0(), &d, 3, 8);
        assert!(matches!(refused, Err(Error::NotCertifiable(_))));
    }

    #[test]
    fn truncation_change_within_tail() {
        let op = half_line_op();
        let space = SpaceNorm::l2();
        let d = CompactSet::interval(-1, 1);
        let f = d.indicator(NumericMode::Exact);
        let a = build_periodic_point(&space, &op, &f, &d, 4, 6).unwrap();
        let b = build_periodic_point(&space, &op, &f, &d, 4, 11).unwrap();
        let diff = norm(&space, &a.v.sub(&b.v)).unwrap().to_f64();
        assert!(diff <= a.tail_bound().unwrap());
        let l = choose_truncation(&space, &op, &f, &d, 4, DEFAULT_TAIL_FRACTION, 64).unwrap();
        let c = build_periodic_point(&space, &op, &f, &d, 4, l).unwrap();
        assert!(c.tail_bound().unwrap() <= DEFAULT_TAIL_FRACTION * norm(&space, &f).unwrap().to_f64());
    }

    #[test]
    fn orbit_trace_rows() {
        let op = constant_op(1);
        let rows = orbit_trace(&SpaceNorm::l2(), &op, &delta0(), &[delta0()], &[0, 1, 2]).unwrap();
        assert_eq!(rows[0], TraceRow { n: 0, target_id: 0, distance: 0.0 });
        // ½(δ_{-1} + δ_1) - δ_0
        assert!((rows[1].distance - 1.5f64.sqrt()).abs() < 1e-15);
    }
}
