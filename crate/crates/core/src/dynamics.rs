//! Weighted translation operators `T f = w · (f ∘ α)`, their inverses
//! `S = T^{-1}`, integer powers, and the cosine sequence
//! `C^(n) = ½ (T^n + S^n)`.
//!
//! Powers are evaluated in closed form:
//!
//! ```text
//! T^n f = (∏_{j=0}^{n-1} w ∘ α^j) · (f ∘ α^n)
//! S^n f = (∏_{j=1}^{n}   w ∘ α^{-j})^{-1} · (f ∘ α^{-n})
//! ```
//!
//! The value of `T^n f` at `α^{-n}(y)` is therefore `f(y)` times the
//! backward product at `y`, and the value of `S^n f` at `α^n(y)` is `f(y)`
//! divided by the forward product at `y`. Only the support of `f` is
//! visited.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::grid::{CompactSet, GridFunction, Site};
use crate::scalar::{NumericMode, Scalar};

type SiteFn = Arc<dyn Fn(&Site) -> Site + Send + Sync>;

/// A bijection of `Z^d` together with its inverse.
#[derive(Clone)]
pub enum DynMap {
    /// `x ↦ x + a`
    Shift(Site),
    Custom(CustomMap),
}

#[derive(Clone)]
pub struct CustomMap {
    dim: usize,
    name: String,
    forward: SiteFn,
    backward: SiteFn,
}

impl CustomMap {
    /// `forward` and `backward` must be mutually inverse; [`DynMap::check_inverse_on`]
    /// samples that contract.
    pub fn new(
        dim: usize,
        name: impl Into<String>,
        forward: impl Fn(&Site) -> Site + Send + Sync + 'static,
        backward: impl Fn(&Site) -> Site + Send + Sync + 'static,
    ) -> CustomMap {
        CustomMap { dim, name: name.into(), forward: Arc::new(forward), backward: Arc::new(backward) }
    }
}

impl fmt::Debug for DynMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynMap::Shift(a) => write!(f, "Shift({a:?})"),
            DynMap::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

impl DynMap {
    pub fn shift1(a: i64) -> DynMap {
        DynMap::Shift(Site::d1(a))
    }

    pub fn shift(a: &[i64]) -> Result<DynMap> {
        Ok(DynMap::Shift(Site::new(a)?))
    }

    pub fn identity(dim: usize) -> DynMap {
        DynMap::Shift(Site::origin(dim))
    }

    pub fn dim(&self) -> usize {
        match self {
            DynMap::Shift(a) => a.dim(),
            DynMap::Custom(c) => c.dim,
        }
    }

    pub fn forward(&self, x: &Site) -> Site {
        match self {
            DynMap::Shift(a) => x.offset(a, 1),
            DynMap::Custom(c) => (c.forward)(x),
        }
    }

    pub fn backward(&self, x: &Site) -> Site {
        match self {
            DynMap::Shift(a) => x.offset(a, -1),
            DynMap::Custom(c) => (c.backward)(x),
        }
    }

    /// `α^n(x)` for any integer `n`.
    pub fn pow(&self, n: i64, x: &Site) -> Site {
        match self {
            DynMap::Shift(a) => x.offset(a, n),
            DynMap::Custom(_) => {
                let mut y = *x;
                for _ in 0..n.unsigned_abs() {
                    y = if n > 0 { self.forward(&y) } else { self.backward(&y) };
                }
                y
            }
        }
    }

    pub fn inverse(&self) -> DynMap {
        match self {
            DynMap::Shift(a) => DynMap::Shift(Site::origin(a.dim()).offset(a, -1)),
            DynMap::Custom(c) => DynMap::Custom(CustomMap {
                dim: c.dim,
                name: format!("inverse({})", c.name),
                forward: c.backward.clone(),
                backward: c.forward.clone(),
            }),
        }
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn after(&self, inner: &DynMap) -> DynMap {
        match (self, inner) {
            (DynMap::Shift(a), DynMap::Shift(b)) => DynMap::Shift(a.offset(b, 1)),
            _ => {
                let (outer_f, inner_f) = (self.clone(), inner.clone());
                let (outer_b, inner_b) = (self.clone(), inner.clone());
                DynMap::Custom(CustomMap::new(
                    self.dim(),
                    format!("{self:?}∘{inner:?}"),
                    move |x| outer_f.forward(&inner_f.forward(x)),
                    move |x| inner_b.backward(&outer_b.backward(x)),
                ))
            }
        }
    }

    pub fn is_identity_shift(&self) -> bool {
        matches!(self, DynMap::Shift(a) if a.is_origin())
    }

    /// Checks `backward ∘ forward = id = forward ∘ backward` on `sites`.
    pub fn check_inverse_on(&self, sites: &CompactSet) -> Result<()> {
        for x in sites.iter() {
            if self.backward(&self.forward(x)) != *x || self.forward(&self.backward(x)) != *x {
                return param(format!("{self:?} is not inverted by its backward map at {x:?}"));
            }
        }
        Ok(())
    }

    pub fn image(&self, n: i64, set: &CompactSet) -> CompactSet {
        set.map(|x| self.pow(n, x))
    }
}

/// `α^n(x)`.
pub fn map_pow(map: &DynMap, n: i64, x: &Site) -> Site {
    map.pow(n, x)
}

#[derive(Clone)]
enum WeightKind {
    Constant(Scalar),
    /// `low` where the first coordinate is `<= threshold`, `high` elsewhere.
    HalfLine { threshold: i64, low: Scalar, high: Scalar },
    Table { values: BTreeMap<Site, Scalar>, default: Scalar },
    Expr(Arc<dyn Fn(&Site) -> Scalar + Send + Sync>),
    Product(Arc<WeightFn>, Arc<WeightFn>),
    /// `w ∘ α`
    Pullback(Arc<WeightFn>, DynMap),
    Reciprocal(Arc<WeightFn>),
}

/// A weight `w` with certified bounds `0 < inf ≤ w(x) ≤ sup < ∞`.
#[derive(Clone)]
pub struct WeightFn {
    kind: WeightKind,
    inf: Scalar,
    sup: Scalar,
}

impl fmt::Debug for WeightFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            WeightKind::Constant(c) => format!("Constant({c})"),
            WeightKind::HalfLine { threshold, low, high } => {
                format!("HalfLine(x <= {threshold}: {low}, else {high})")
            }
            WeightKind::Table { values, default } => format!("Table({} entries, default {default})", values.len()),
            WeightKind::Expr(_) => "Expr".to_string(),
            WeightKind::Product(a, b) => format!("({a:?})·({b:?})"),
            WeightKind::Pullback(w, m) => format!("({w:?})∘{m:?}"),
            WeightKind::Reciprocal(w) => format!("1/({w:?})"),
        };
        write!(f, "{kind} in [{}, {}]", self.inf, self.sup)
    }
}

fn require_positive(v: &Scalar, what: &str) -> Result<()> {
    if !v.is_positive() || !v.to_f64().is_finite() {
        return param(format!("{what} must be positive and finite, got {v}"));
    }
    Ok(())
}

impl WeightFn {
    pub fn constant(c: Scalar) -> Result<WeightFn> {
        require_positive(&c, "constant weight")?;
        Ok(WeightFn { inf: c.clone(), sup: c.clone(), kind: WeightKind::Constant(c) })
    }

    pub fn half_line(threshold: i64, low: Scalar, high: Scalar) -> Result<WeightFn> {
        require_positive(&low, "low-side weight")?;
        require_positive(&high, "high-side weight")?;
        Ok(WeightFn {
            inf: low.clone().min(high.clone()),
            sup: low.clone().max(high.clone()),
            kind: WeightKind::HalfLine { threshold, low, high },
        })
    }

    /// Tabulated values with a fallback `default` off the table.
    pub fn table(values: BTreeMap<Site, Scalar>, default: Scalar) -> Result<WeightFn> {
        require_positive(&default, "default weight")?;
        for (s, v) in &values {
            require_positive(v, &format!("weight at {s:?}"))?;
        }
        let inf = values.values().cloned().fold(default.clone(), Scalar::min);
        let sup = values.values().cloned().fold(default.clone(), Scalar::max);
        Ok(WeightFn { kind: WeightKind::Table { values, default }, inf, sup })
    }

    /// A weight given by an evaluator. The declared bounds are checked on
    /// `sample`; they cannot be certified off the sample.
    pub fn expr(
        eval: impl Fn(&Site) -> Scalar + Send + Sync + 'static,
        inf: Scalar,
        sup: Scalar,
        sample: &CompactSet,
    ) -> Result<WeightFn> {
        require_positive(&inf, "lower weight bound")?;
        require_positive(&sup, "upper weight bound")?;
        for x in sample.iter() {
            let v = eval(x);
            if v < inf || v > sup {
                return param(format!("weight {v} at {x:?} escapes declared bounds [{inf}, {sup}]"));
            }
        }
        Ok(WeightFn { kind: WeightKind::Expr(Arc::new(eval)), inf, sup })
    }

    /// Pointwise product `a · b`.
    pub fn product(a: &WeightFn, b: &WeightFn) -> WeightFn {
        if let (WeightKind::Constant(x), WeightKind::Constant(y)) = (&a.kind, &b.kind) {
            let c = x * y;
            return WeightFn { inf: c.clone(), sup: c.clone(), kind: WeightKind::Constant(c) };
        }
        WeightFn {
            inf: &a.inf * &b.inf,
            sup: &a.sup * &b.sup,
            kind: WeightKind::Product(Arc::new(a.clone()), Arc::new(b.clone())),
        }
    }

    /// `w ∘ α`.
    pub fn pullback(&self, map: &DynMap) -> WeightFn {
        if matches!(self.kind, WeightKind::Constant(_)) || map.is_identity_shift() {
            return self.clone();
        }
        WeightFn {
            inf: self.inf.clone(),
            sup: self.sup.clone(),
            kind: WeightKind::Pullback(Arc::new(self.clone()), map.clone()),
        }
    }

    /// `1 / w`.
    pub fn reciprocal(&self) -> WeightFn {
        let kind = match &self.kind {
            WeightKind::Constant(c) => WeightKind::Constant(c.recip()),
            _ => WeightKind::Reciprocal(Arc::new(self.clone())),
        };
        WeightFn { kind, inf: self.sup.recip(), sup: self.inf.recip() }
    }

    pub fn eval(&self, x: &Site) -> Scalar {
        match &self.kind {
            WeightKind::Constant(c) => c.clone(),
            WeightKind::HalfLine { threshold, low, high } => {
                if x.coords()[0] <= *threshold {
                    low.clone()
                } else {
                    high.clone()
                }
            }
            WeightKind::Table { values, default } => values.get(x).unwrap_or(default).clone(),
            WeightKind::Expr(e) => e(x),
            WeightKind::Product(a, b) => a.eval(x) * b.eval(x),
            WeightKind::Pullback(w, m) => w.eval(&m.forward(x)),
            WeightKind::Reciprocal(w) => w.eval(x).recip(),
        }
    }

    pub fn inf_bound(&self) -> &Scalar {
        &self.inf
    }

    pub fn sup_bound(&self) -> &Scalar {
        &self.sup
    }

    pub fn as_constant(&self) -> Option<&Scalar> {
        match &self.kind {
            WeightKind::Constant(c) => Some(c),
            _ => None,
        }
    }

    /// True when every value the weight can produce is an exact rational.
    pub fn is_exact(&self) -> bool {
        match &self.kind {
            WeightKind::Constant(c) => c.is_exact(),
            WeightKind::HalfLine { low, high, .. } => low.is_exact() && high.is_exact(),
            WeightKind::Table { values, default } => default.is_exact() && values.values().all(Scalar::is_exact),
            WeightKind::Expr(_) => false,
            WeightKind::Product(a, b) => a.is_exact() && b.is_exact(),
            WeightKind::Pullback(w, _) | WeightKind::Reciprocal(w) => w.is_exact(),
        }
    }

    /// The same weight with every value converted to `f64`.
    pub fn to_float(&self) -> WeightFn {
        let kind = match &self.kind {
            WeightKind::Constant(c) => WeightKind::Constant(c.to_float()),
            WeightKind::HalfLine { threshold, low, high } => {
                WeightKind::HalfLine { threshold: *threshold, low: low.to_float(), high: high.to_float() }
            }
            WeightKind::Table { values, default } => WeightKind::Table {
                values: values.iter().map(|(s, v)| (*s, v.to_float())).collect(),
                default: default.to_float(),
            },
            WeightKind::Expr(e) => {
                let e = e.clone();
                WeightKind::Expr(Arc::new(move |x| e(x).to_float()))
            }
            WeightKind::Product(a, b) => WeightKind::Product(Arc::new(a.to_float()), Arc::new(b.to_float())),
            WeightKind::Pullback(w, m) => WeightKind::Pullback(Arc::new(w.to_float()), m.clone()),
            WeightKind::Reciprocal(w) => WeightKind::Reciprocal(Arc::new(w.to_float())),
        };
        WeightFn { kind, inf: self.inf.to_float(), sup: self.sup.to_float() }
    }
}

/// JSON/TOML form of a weight, e.g.
/// `{"kind":"halfline","threshold":0,"low":"1/2","high":"2"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightSpec {
    Constant { value: Scalar },
    HalfLine { threshold: i64, low: Scalar, high: Scalar },
    Table { values: Vec<(Vec<i64>, Scalar)>, default: Scalar },
}

impl WeightSpec {
    pub fn build(&self) -> Result<WeightFn> {
        match self {
            WeightSpec::Constant { value } => WeightFn::constant(value.clone()),
            WeightSpec::HalfLine { threshold, low, high } => {
                WeightFn::half_line(*threshold, low.clone(), high.clone())
            }
            WeightSpec::Table { values, default } => {
                let values = values
                    .iter()
                    .map(|(c, v)| Ok((Site::new(c)?, v.clone())))
                    .collect::<Result<BTreeMap<_, _>>>()?;
                WeightFn::table(values, default.clone())
            }
        }
    }
}

/// JSON/TOML form of a map: `{"kind":"shift","a":[1]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MapSpec {
    Shift { a: Vec<i64> },
}

impl MapSpec {
    pub fn build(&self) -> Result<DynMap> {
        match self {
            MapSpec::Shift { a } => DynMap::shift(a),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductSide {
    /// `∏_{s=0}^{n-1} w(α^s x)`
    Forward,
    /// `∏_{s=1}^{n} w(α^{-s} x)`
    Backward,
}

/// The pair `(α, w)` defining `T_{α,w}`.
#[derive(Clone, Debug)]
pub struct OperatorHandle {
    pub map: DynMap,
    pub weight: WeightFn,
}

impl OperatorHandle {
    pub fn new(map: DynMap, weight: WeightFn) -> OperatorHandle {
        OperatorHandle { map, weight }
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    /// The handle of `S_{α,w} = T_{α^{-1}, 1/(w ∘ α^{-1})}`.
    pub fn inverse(&self) -> OperatorHandle {
        let inv = self.map.inverse();
        OperatorHandle { weight: self.weight.pullback(&inv).reciprocal(), map: inv }
    }

    pub fn to_float(&self) -> OperatorHandle {
        OperatorHandle { map: self.map.clone(), weight: self.weight.to_float() }
    }

    /// Numeric mode in which products of this weight are computed.
    pub fn mode(&self) -> NumericMode {
        if self.weight.is_exact() {
            NumericMode::Exact
        } else {
            NumericMode::Float
        }
    }
}

fn has_closed_form(op: &OperatorHandle) -> bool {
    op.weight.as_constant().is_some()
        || matches!((&op.map, &op.weight.kind), (DynMap::Shift(_), WeightKind::HalfLine { .. }))
}

/// Number of `s ∈ [s_lo, s_hi]` with `start + s·step ≤ threshold`.
fn count_at_or_below(start: i64, step: i64, s_lo: i64, s_hi: i64, threshold: i64) -> i64 {
    if s_hi < s_lo {
        return 0;
    }
    let gap = threshold - start;
    let count = match step.signum() {
        0 => {
            if gap >= 0 {
                s_hi - s_lo + 1
            } else {
                0
            }
        }
        1 => s_hi.min(gap.div_euclid(step)) - s_lo + 1,
        _ => {
            let first = -gap.div_euclid(-step);
            s_hi - s_lo.max(first) + 1
        }
    };
    count.clamp(0, s_hi - s_lo + 1)
}

/// Running product of `n` weights along the orbit of `x`, stepping by
/// direct evaluation. Used as the generic path and as the test oracle for
/// the closed forms.
pub fn weight_product_iterated(op: &OperatorHandle, n: u64, side: ProductSide, x: &Site) -> Scalar {
    let mut acc = Scalar::one();
    match side {
        ProductSide::Forward => {
            let mut y = *x;
            for _ in 0..n {
                acc = acc * op.weight.eval(&y);
                y = op.map.forward(&y);
            }
        }
        ProductSide::Backward => {
            let mut y = *x;
            for _ in 0..n {
                y = op.map.backward(&y);
                acc = acc * op.weight.eval(&y);
            }
        }
    }
    acc
}

/// `∏_{s=0}^{n-1} w(α^s x)` (forward) or `∏_{s=1}^{n} w(α^{-s} x)` (backward).
/// The empty product (`n = 0`) is 1.
pub fn weight_product(op: &OperatorHandle, n: u64, side: ProductSide, x: &Site) -> Scalar {
    if let Some(c) = op.weight.as_constant() {
        return c.powi(n as u32);
    }
    if let (DynMap::Shift(a), WeightKind::HalfLine { threshold, low, high }) = (&op.map, &op.weight.kind) {
        let n = n as i64;
        let (step, s_lo, s_hi) = match side {
            ProductSide::Forward => (a.coords()[0], 0, n - 1),
            ProductSide::Backward => (-a.coords()[0], 1, n),
        };
        let lows = count_at_or_below(x.coords()[0], step, s_lo, s_hi, *threshold);
        return low.powi(lows as u32) * high.powi((n - lows) as u32);
    }
    weight_product_iterated(op, n, side, x)
}

/// `T f = w · (f ∘ α)`.
pub fn apply_t(op: &OperatorHandle, f: &GridFunction) -> GridFunction {
    f.transport(|y| op.map.backward(y), |y| op.weight.eval(&op.map.backward(y)))
}

/// `S f = (f ∘ α^{-1}) / (w ∘ α^{-1})`.
pub fn apply_s(op: &OperatorHandle, f: &GridFunction) -> GridFunction {
    f.transport(|y| op.map.forward(y), |y| op.weight.eval(y).recip())
}

/// `T^n f` in closed form.
pub fn apply_t_pow(op: &OperatorHandle, n: u64, f: &GridFunction) -> GridFunction {
    if n == 0 {
        return f.clone();
    }
    f.transport(
        |y| op.map.pow(-(n as i64), y),
        |y| weight_product(op, n, ProductSide::Backward, y),
    )
}

/// `S^n f` in closed form.
pub fn apply_s_pow(op: &OperatorHandle, n: u64, f: &GridFunction) -> GridFunction {
    if n == 0 {
        return f.clone();
    }
    f.transport(
        |y| op.map.pow(n as i64, y),
        |y| weight_product(op, n, ProductSide::Forward, y).recip(),
    )
}

/// `T^n` for `n ≥ 0`, `S^{-n}` for `n < 0`.
pub fn apply_group_pow(op: &OperatorHandle, n: i64, f: &GridFunction) -> GridFunction {
    if n >= 0 {
        apply_t_pow(op, n as u64, f)
    } else {
        apply_s_pow(op, n.unsigned_abs(), f)
    }
}

/// `C^(n) f = ½ (T^{|n|} f + S^{|n|} f)`.
pub fn apply_cosine(op: &OperatorHandle, n: i64, f: &GridFunction) -> GridFunction {
    let m = n.unsigned_abs();
    if m == 0 {
        return f.clone();
    }
    let half = Scalar::ratio(1, 2);
    apply_t_pow(op, m, f).add(&apply_s_pow(op, m, f)).scale(&half)
}

/// The handle of `T_{op2} ∘ T_{op1} = T_{α₁∘α₂, w₂ · (w₁∘α₂)}`.
pub fn compose_ops(op2: &OperatorHandle, op1: &OperatorHandle) -> Result<OperatorHandle> {
    if op1.dim() != op2.dim() {
        return param(format!("cannot compose operators of dimensions {} and {}", op2.dim(), op1.dim()));
    }
    Ok(OperatorHandle {
        map: op1.map.after(&op2.map),
        weight: WeightFn::product(&op2.weight, &op1.weight.pullback(&op2.map)),
    })
}

/// Running forward and backward weight products along the orbits of a
/// fixed set of sites, for one operator. Extending from length `n` to `m`
/// costs `m - n` weight evaluations per site unless a closed form applies.
#[derive(Clone, Debug)]
pub struct OrbitProducts {
    sites: Vec<Site>,
    len: u64,
    forward: Vec<Scalar>,
    forward_cursor: Vec<Site>,
    backward: Vec<Scalar>,
    backward_cursor: Vec<Site>,
}

impl OrbitProducts {
    pub fn new(sites: &CompactSet) -> OrbitProducts {
        let sites: Vec<Site> = sites.iter().copied().collect();
        OrbitProducts {
            len: 0,
            forward: vec![Scalar::one(); sites.len()],
            forward_cursor: sites.clone(),
            backward: vec![Scalar::one(); sites.len()],
            backward_cursor: sites.clone(),
            sites,
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    /// Extends products to length `n` (never shrinks).
    pub fn advance_to(&mut self, op: &OperatorHandle, n: u64) {
        if n <= self.len {
            return;
        }
        let steps = n - self.len;
        if has_closed_form(op) {
            for (i, s) in self.sites.iter().enumerate() {
                self.forward[i] = weight_product(op, n, ProductSide::Forward, s);
                self.backward[i] = weight_product(op, n, ProductSide::Backward, s);
            }
        } else {
            for i in 0..self.sites.len() {
                for _ in 0..steps {
                    let f = &mut self.forward_cursor[i];
                    self.forward[i] = &self.forward[i] * &op.weight.eval(f);
                    *f = op.map.forward(f);
                    let b = &mut self.backward_cursor[i];
                    *b = op.map.backward(b);
                    self.backward[i] = &self.backward[i] * &op.weight.eval(b);
                }
            }
        }
        self.len = n;
    }

    pub fn forward(&self) -> &[Scalar] {
        &self.forward
    }

    pub fn backward(&self) -> &[Scalar] {
        &self.backward
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Horizon {
    /// `K ∩ α^n(K) = ∅` for every `n ≥ N` (for custom maps: every `N ≤ n ≤ budget`).
    Horizon(u64),
    NotWithinBudget,
}

/// Smallest `N` after which the iterates of `K` never meet `K` again.
pub fn aperiodicity_horizon(map: &DynMap, set: &CompactSet, budget: u64) -> Result<Horizon> {
    if set.is_empty() {
        return param("aperiodicity horizon needs a non-empty set");
    }
    match map {
        DynMap::Shift(a) => {
            if a.is_origin() {
                return Err(Error::NotAperiodic("the zero shift is the identity".into()));
            }
            // K ∩ (K + n a) ≠ ∅ iff n a is a difference of two points of K
            let sites: Vec<&Site> = set.iter().collect();
            let mut last = 0u64;
            for x in &sites {
                for y in &sites {
                    if let Some(n) = positive_multiple(&x.sub(y), a) {
                        last = last.max(n);
                    }
                }
            }
            Ok(Horizon::Horizon(last + 1))
        }
        DynMap::Custom(_) => {
            let mut image = set.clone();
            let mut last = 0u64;
            for n in 1..=budget {
                image = image.map(|x| map.forward(x));
                if !image.is_disjoint(set) {
                    last = n;
                }
            }
            if last == budget {
                Ok(Horizon::NotWithinBudget)
            } else {
                Ok(Horizon::Horizon(last + 1))
            }
        }
    }
}

/// `Some(n)` when `delta = n · step` with `n ≥ 1`.
fn positive_multiple(delta: &Site, step: &Site) -> Option<u64> {
    let mut ratio: Option<i64> = None;
    for (&d, &s) in delta.coords().iter().zip(step.coords()) {
        if s == 0 {
            if d != 0 {
                return None;
            }
            continue;
        }
        if d % s != 0 {
            return None;
        }
        let r = d / s;
        if ratio.is_some_and(|q| q != r) {
            return None;
        }
        ratio = Some(r);
    }
    ratio.filter(|&r| r >= 1).map(|r| r as u64)
}
