//! Solid, translation-invariant norms on finitely supported functions.
//!
//! Three families are provided:
//!
//! * weighted-free `ℓ^p`, `1 ≤ p ≤ ∞`;
//! * Orlicz sequence norms, computed as the Luxemburg norm
//!   `inf { λ > 0 : Σ Φ(|f(x)| / λ) ≤ 1 }`. The Luxemburg and Orlicz norms are
//!   equivalent within a factor of two, so every limit-to-zero condition
//!   evaluated with one holds for the other;
//! * a discrete Morrey norm `sup_B |B|^{1/p - 1/q} (Σ_{y ∈ B} |f(y)|^q)^{1/q}`
//!   over axis-aligned boxes `B ⊆ Z^d`, with `|B|` the number of lattice points.
//!
//! Exact rational results are returned where the value is rational by
//! construction (`ℓ^1`, `ℓ^∞`, Morrey with `p = q = 1`). Everything else is
//! an `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::grid::{CompactSet, GridFunction, Site};
use crate::scalar::{NumericMode, Scalar};

/// Registered Young functions. Both are convex, vanish at 0, are strictly
/// increasing on `(0, ∞)` and satisfy the Δ₂ condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "young", rename_all = "kebab-case")]
pub enum YoungFunction {
    /// `Φ(t) = t^p`
    Power { p: f64 },
    /// `Φ(t) = t^p · ln(1 + t)`
    PowerLog { p: f64 },
}

impl YoungFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            YoungFunction::Power { p } => t.powf(p),
            YoungFunction::PowerLog { p } => t.powf(p) * t.ln_1p(),
        }
    }

    fn validate(&self) -> Result<()> {
        let p = match *self {
            YoungFunction::Power { p } | YoungFunction::PowerLog { p } => p,
        };
        if !(p >= 1.0 && p.is_finite()) {
            return param(format!("Young function exponent must satisfy 1 <= p < inf, got {p}"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpaceNorm {
    Lp {
        #[serde(with = "exponent")]
        p: f64,
    },
    Orlicz {
        #[serde(flatten)]
        young: YoungFunction,
        #[serde(default = "default_orlicz_tol")]
        tol: f64,
    },
    Morrey {
        p: f64,
        q: f64,
    },
}

fn default_orlicz_tol() -> f64 {
    1e-12
}

impl SpaceNorm {
    pub fn lp(p: f64) -> Result<SpaceNorm> {
        let n = SpaceNorm::Lp { p };
        n.validate()?;
        Ok(n)
    }

    pub fn l1() -> SpaceNorm {
        SpaceNorm::Lp { p: 1.0 }
    }

    pub fn l2() -> SpaceNorm {
        SpaceNorm::Lp { p: 2.0 }
    }

    pub fn linf() -> SpaceNorm {
        SpaceNorm::Lp { p: f64::INFINITY }
    }

    pub fn orlicz(young: YoungFunction, tol: f64) -> Result<SpaceNorm> {
        let n = SpaceNorm::Orlicz { young, tol };
        n.validate()?;
        Ok(n)
    }

    pub fn morrey(p: f64, q: f64) -> Result<SpaceNorm> {
        let n = SpaceNorm::Morrey { p, q };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SpaceNorm::Lp { p } => {
                if !(p >= 1.0) {
                    return param(format!("l^p needs 1 <= p <= inf, got p = {p}"));
                }
            }
            SpaceNorm::Orlicz { young, tol } => {
                young.validate()?;
                if !(tol > 0.0 && tol < 1.0) {
                    return param(format!("Luxemburg tolerance must lie in (0, 1), got {tol}"));
                }
            }
            SpaceNorm::Morrey { p, q } => {
                if !(q >= 1.0 && p.is_finite()) {
                    return param(format!("Morrey norm needs 1 <= q <= p < inf, got p = {p}, q = {q}"));
                }
                if q > p {
                    return param(format!("Morrey norm needs q <= p, got p = {p}, q = {q}"));
                }
            }
        }
        Ok(())
    }

    /// Conjugate exponent for `ℓ^p`, used by pairing bounds.
    pub fn dual_lp(&self) -> Option<SpaceNorm> {
        match *self {
            SpaceNorm::Lp { p } if p == 1.0 => Some(SpaceNorm::linf()),
            SpaceNorm::Lp { p } if p.is_infinite() => Some(SpaceNorm::l1()),
            SpaceNorm::Lp { p } => Some(SpaceNorm::Lp { p: p / (p - 1.0) }),
            _ => None,
        }
    }
}

mod exponent {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(v as f64),
            Raw::Num(v) => Ok(v),
            Raw::Text(t) if t.eq_ignore_ascii_case("inf") => Ok(f64::INFINITY),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// `‖f‖` for the given norm.
pub fn norm(space: &SpaceNorm, f: &GridFunction) -> Result<Scalar> {
    space.validate()?;
    Ok(match *space {
        SpaceNorm::Lp { p } => lp_norm(p, f),
        SpaceNorm::Orlicz { young, tol } => Scalar::Float(luxemburg_norm(young, f, tol)?),
        SpaceNorm::Morrey { p, q } => morrey_norm(p, q, f)?,
    })
}

/// `‖χ_E‖`.
pub fn indicator_norm(space: &SpaceNorm, set: &CompactSet, mode: NumericMode) -> Result<Scalar> {
    norm(space, &set.indicator(mode))
}

fn integer_exponent(p: f64) -> Option<u32> {
    (p.fract() == 0.0 && (1.0..=64.0).contains(&p)).then_some(p as u32)
}

/// Left fold of `|v|^p` in iteration order. Exact when every value is exact
/// and `p` is a small integer.
fn power_sum<'a>(values: impl Iterator<Item = &'a Scalar>, p: f64, mode: NumericMode) -> Scalar {
    match (mode, integer_exponent(p)) {
        (NumericMode::Exact, Some(k)) => {
            values.fold(Scalar::zero(), |acc, v| acc + v.abs().powi(k))
        }
        _ => Scalar::Float(values.fold(0.0, |acc, v| acc + v.to_f64().abs().powf(p))),
    }
}

/// `sum^{1/p}`.
fn root(sum: Scalar, p: f64) -> Scalar {
    if p == 1.0 {
        sum
    } else if p == 2.0 {
        Scalar::Float(sum.to_f64().sqrt())
    } else {
        Scalar::Float(sum.to_f64().powf(1.0 / p))
    }
}

pub fn lp_norm(p: f64, f: &GridFunction) -> Scalar {
    if p.is_infinite() {
        return f.sup_abs();
    }
    root(power_sum(f.iter().map(|(_, v)| v), p, f.mode()), p)
}

/// Luxemburg norm `inf { λ > 0 : Σ Φ(|f(x)| / λ) ≤ 1 }`, located by
/// bracketing and bisection to relative width `tol`.
pub fn luxemburg_norm(young: YoungFunction, f: &GridFunction, tol: f64) -> Result<f64> {
    young.validate()?;
    if !(tol > 0.0) {
        return param(format!("tolerance must be positive, got {tol}"));
    }
    if f.is_zero() {
        return Ok(0.0);
    }
    let values: Vec<f64> = f.iter().map(|(_, v)| v.to_f64().abs()).collect();
    let modular = |lambda: f64| values.iter().map(|&v| young.eval(v / lambda)).sum::<f64>();

    let start = values.iter().copied().fold(0.0, f64::max);
    let (mut lo, mut hi) = (start, start);
    // modular is strictly decreasing in λ; widen until it straddles 1.
    for _ in 0..2100 {
        if modular(hi) <= 1.0 {
            break;
        }
        hi *= 2.0;
    }
    for _ in 0..2100 {
        if modular(lo) > 1.0 {
            break;
        }
        lo *= 0.5;
    }
    assert!(
        modular(hi) <= 1.0 && modular(lo) > 1.0,
        "Luxemburg bracket failed for finite support"
    );
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if modular(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Discrete Morrey norm over axis-aligned boxes.
///
/// Because `1/p - 1/q ≤ 0`, shrinking a box to the bounding box of the
/// support points it contains never lowers its value, so only boxes whose
/// faces pass through support coordinates are enumerated.
pub fn morrey_norm(p: f64, q: f64, f: &GridFunction) -> Result<Scalar> {
    SpaceNorm::Morrey { p, q }.validate()?;
    let mode = f.mode();
    if f.is_zero() {
        return Ok(Scalar::zero().in_mode(mode));
    }
    let exponent = 1.0 / p - 1.0 / q;
    let value = |count: i64, sum: Scalar| -> Scalar {
        let local = root(sum, q);
        if exponent == 0.0 {
            local
        } else {
            Scalar::Float((count as f64).powf(exponent) * local.to_f64())
        }
    };
    let entries: Vec<(&Site, &Scalar)> = f.iter().collect();
    let mut best: Option<Scalar> = None;
    let mut offer = |v: Scalar| {
        best = Some(match best.take() {
            Some(b) => b.max(v),
            None => v,
        });
    };
    match f.dim() {
        1 => {
            // entries are sorted by coordinate
            for i in 0..entries.len() {
                let mut sum = power_sum(std::iter::empty(), q, mode);
                for j in i..entries.len() {
                    sum = sum + power_sum(std::iter::once(entries[j].1), q, mode);
                    let count = entries[j].0.coords()[0] - entries[i].0.coords()[0] + 1;
                    offer(value(count, sum.clone()));
                }
            }
        }
        _ => {
            let mut xs: Vec<i64> = entries.iter().map(|(s, _)| s.coords()[0]).collect();
            let mut ys: Vec<i64> = entries.iter().map(|(s, _)| s.coords()[1]).collect();
            xs.sort_unstable();
            xs.dedup();
            ys.sort_unstable();
            ys.dedup();
            for (a, &x0) in xs.iter().enumerate() {
                for &x1 in &xs[a..] {
                    for (b, &y0) in ys.iter().enumerate() {
                        for &y1 in &ys[b..] {
                            let inside = entries.iter().filter(|(s, _)| {
                                let c = s.coords();
                                (x0..=x1).contains(&c[0]) && (y0..=y1).contains(&c[1])
                            });
                            let sum = power_sum(inside.map(|(_, v)| *v), q, mode);
                            if sum.is_zero() {
                                continue;
                            }
                            offer(value((x1 - x0 + 1) * (y1 - y0 + 1), sum));
                        }
                    }
                }
            }
        }
    }
    Ok(best.expect("non-empty support yields a box"))
}
