//! Dual side: functionals `φ(f) = Σ_x f(x) g_φ(x)` with finitely supported
//! representing sequences, the adjoint powers of `T` and `S`, and the
//! adjoint cosine sequence.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::criteria::{Certificate, ConditionId, CriterionReport, Verdict, Witness};
use crate::dynamics::{map_pow, weight_product, DynMap, OperatorHandle, ProductSide, WeightFn};
use crate::error::{param, Result};
use crate::grid::{GridFunction, GridFunctionWire};
use crate::norm::{norm, SpaceNorm};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct DualFunctional {
    pub repr: GridFunction,
}

impl Serialize for DualFunctional {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.repr.to_wire(true).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DualFunctional {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = GridFunctionWire::deserialize(d)?;
        let repr = GridFunction::from_wire(&wire).map_err(serde::de::Error::custom)?;
        Ok(DualFunctional { repr })
    }
}

impl DualFunctional {
    pub fn new(repr: GridFunction) -> DualFunctional {
        DualFunctional { repr }
    }

    pub fn same_as(&self, other: &DualFunctional) -> bool {
        self.repr.same_as(&other.repr)
    }

    pub fn add(&self, other: &DualFunctional) -> DualFunctional {
        DualFunctional::new(self.repr.add(&other.repr))
    }

    pub fn scale(&self, c: &Scalar) -> DualFunctional {
        DualFunctional::new(self.repr.scale(c))
    }
}

/// `Σ_x f(x) g_φ(x)`.
pub fn pair(phi: &DualFunctional, f: &GridFunction) -> Scalar {
    let (small, large) = if phi.repr.len() <= f.len() { (&phi.repr, f) } else { (f, &phi.repr) };
    let mut acc = Scalar::zero().in_mode(phi.repr.mode().join(f.mode()));
    for (x, v) in small.iter() {
        let u = large.get(x);
        if !u.is_zero() {
            acc = &acc + &(v * &u);
        }
    }
    acc
}

/// Multiplier for [`weight_multiply_functional`].
#[derive(Clone, Copy, Debug)]
pub enum Multiplier<'a> {
    Function(&'a GridFunction),
    Weight(&'a WeightFn),
}

/// `φ_g(f) = φ(g f)`: the representing sequence becomes `g · g_φ`.
pub fn weight_multiply_functional(phi: &DualFunctional, g: Multiplier<'_>) -> DualFunctional {
    let repr = match g {
        Multiplier::Function(h) => phi.repr.map_values(|x, v| v * &h.get(x)),
        Multiplier::Weight(w) => phi.repr.map_values(|x, v| v * &w.eval(x)),
    };
    DualFunctional::new(repr)
}

/// `φ ∘ U_α^n` with `U_α f = f ∘ α`: the representing sequence moves from
/// `x` to `α^n(x)`.
pub fn precompose_translation(phi: &DualFunctional, map: &DynMap, n: i64) -> DualFunctional {
    DualFunctional::new(phi.repr.transport(|x| map_pow(map, n, x), |_| Scalar::one()))
}

/// `(T^n)^* φ`, with `repr_ψ(α^n x) = ∏_{s=0}^{n-1} w(α^s x) · repr_φ(x)`.
pub fn adjoint_t_pow(op: &OperatorHandle, n: u64, phi: &DualFunctional) -> DualFunctional {
    if n == 0 {
        return phi.clone();
    }
    let repr = phi.repr.transport(
        |x| map_pow(&op.map, n as i64, x),
        |x| weight_product(op, n, ProductSide::Forward, x),
    );
    DualFunctional::new(repr)
}

/// `(S^n)^* φ`, with `repr_ψ(α^{-n} x) = repr_φ(x) / ∏_{s=0}^{n-1} w(α^{s-n} x)`.
pub fn adjoint_s_pow(op: &OperatorHandle, n: u64, phi: &DualFunctional) -> DualFunctional {
    if n == 0 {
        return phi.clone();
    }
    let repr = phi.repr.transport(
        |x| map_pow(&op.map, -(n as i64), x),
        |x| weight_product(op, n, ProductSide::Forward, &map_pow(&op.map, -(n as i64), x)).recip(),
    );
    DualFunctional::new(repr)
}

/// `(C^(n))^* φ = ½((T^{|n|})^* φ + (S^{|n|})^* φ)`.
pub fn adjoint_cosine(op: &OperatorHandle, n: i64, phi: &DualFunctional) -> DualFunctional {
    if n == 0 {
        return phi.clone();
    }
    let m = n.unsigned_abs();
    adjoint_t_pow(op, m, phi).add(&adjoint_s_pow(op, m, phi)).scale(&Scalar::ratio(1, 2))
}

/// `‖g_φ‖_q` for `ℓ^p` with `1/p + 1/q = 1`; other spaces have no closed-form
/// dual norm here.
pub fn dual_norm(space: &SpaceNorm, phi: &DualFunctional) -> Result<Scalar> {
    match space.dual_lp() {
        Some(dual) => norm(&dual, &phi.repr),
        None => param("dual norms are only available for ℓ^p spaces"),
    }
}

/// Refutes chaos of the adjoint cosine sequence from the weight bounds:
/// it needs `inf w < 1 < sup w`.
pub fn check_adjoint_bounds(op: &OperatorHandle) -> CriterionReport {
    let inf = op.weight.inf_bound().clone();
    let sup = op.weight.sup_bound().clone();
    let one = Scalar::one();
    let reason = if sup <= one {
        Some(format!("sup w = {sup} ≤ 1, so ‖(T^n)^* φ‖ ≤ ‖φ‖ (sup w)^n does not grow"))
    } else if inf >= one {
        Some(format!("inf w = {inf} ≥ 1, so ‖(S^n)^* φ‖ ≤ ‖φ‖ (inf w)^(-n) does not grow"))
    } else {
        None
    };
    match reason {
        Some(reason) => CriterionReport {
            condition_id: ConditionId::AdjointBounds,
            verdict: Verdict::RefutedWithCertificate,
            witness: None,
            certificate: Some(Certificate::WeightBound { inf, sup, reason }),
            implication: "the adjoint cosine sequence is not chaotic".into(),
            notes: vec![],
        },
        None => CriterionReport {
            condition_id: ConditionId::AdjointBounds,
            verdict: Verdict::InconclusiveWithinBudget,
            witness: Some(Witness::Bounds { inf, sup }),
            certificate: None,
            implication: "the strict bracket inf w < 1 < sup w holds; no conclusion about the adjoint sequence".into(),
            notes: vec![],
        },
    }
}
