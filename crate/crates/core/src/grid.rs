//! Lattice sites, finitely supported functions on `Z^d` and finite site sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::scalar::{NumericMode, Scalar};

pub const MAX_DIM: usize = 2;

/// A point of `Z^d`, `d` in {1, 2}. Unused coordinates are zero.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site {
    coords: [i64; MAX_DIM],
    dim: u8,
}

impl Site {
    pub fn d1(x: i64) -> Site {
        Site { coords: [x, 0], dim: 1 }
    }

    pub fn d2(x: i64, y: i64) -> Site {
        Site { coords: [x, y], dim: 2 }
    }

    pub fn new(coords: &[i64]) -> Result<Site> {
        match coords {
            [x] => Ok(Site::d1(*x)),
            [x, y] => Ok(Site::d2(*x, *y)),
            _ => param(format!("site dimension must be 1 or 2, got {}", coords.len())),
        }
    }

    pub fn origin(dim: usize) -> Site {
        Site { coords: [0; MAX_DIM], dim: dim as u8 }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim()]
    }

    pub fn is_origin(&self) -> bool {
        self.coords == [0; MAX_DIM]
    }

    /// `self + n * step`, coordinatewise.
    pub fn offset(&self, step: &Site, n: i64) -> Site {
        debug_assert_eq!(self.dim, step.dim);
        let mut coords = self.coords;
        for (c, s) in coords.iter_mut().zip(step.coords) {
            *c += n * s;
        }
        Site { coords, dim: self.dim }
    }

    pub fn sub(&self, other: &Site) -> Site {
        self.offset(other, -1)
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

impl Serialize for Site {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Site {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<i64>::deserialize(d)?;
        Site::new(&v).map_err(serde::de::Error::custom)
    }
}

/// A finite set of sites of one dimension.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CompactSet {
    dim: usize,
    sites: BTreeSet<Site>,
}

impl CompactSet {
    pub fn empty(dim: usize) -> CompactSet {
        CompactSet { dim, sites: BTreeSet::new() }
    }

    pub fn from_sites(dim: usize, sites: impl IntoIterator<Item = Site>) -> Result<CompactSet> {
        let sites: BTreeSet<Site> = sites.into_iter().collect();
        if let Some(bad) = sites.iter().find(|s| s.dim() != dim) {
            return param(format!("site {bad:?} does not have dimension {dim}"));
        }
        Ok(CompactSet { dim, sites })
    }

    /// `{lo, ..., hi}` in `Z`.
    pub fn interval(lo: i64, hi: i64) -> CompactSet {
        CompactSet { dim: 1, sites: (lo..=hi).map(Site::d1).collect() }
    }

    pub fn rect(x: (i64, i64), y: (i64, i64)) -> CompactSet {
        let sites = (x.0..=x.1).flat_map(|i| (y.0..=y.1).map(move |j| Site::d2(i, j))).collect();
        CompactSet { dim: 2, sites }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.sites.contains(s)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Site> + '_ {
        self.sites.iter()
    }

    pub fn union(&self, other: &CompactSet) -> CompactSet {
        CompactSet { dim: self.dim, sites: self.sites.union(&other.sites).copied().collect() }
    }

    pub fn intersection(&self, other: &CompactSet) -> CompactSet {
        CompactSet { dim: self.dim, sites: self.sites.intersection(&other.sites).copied().collect() }
    }

    pub fn difference(&self, other: &CompactSet) -> CompactSet {
        CompactSet { dim: self.dim, sites: self.sites.difference(&other.sites).copied().collect() }
    }

    pub fn is_disjoint(&self, other: &CompactSet) -> bool {
        self.sites.is_disjoint(&other.sites)
    }

    pub fn is_subset(&self, other: &CompactSet) -> bool {
        self.sites.is_subset(&other.sites)
    }

    pub fn map(&self, f: impl Fn(&Site) -> Site) -> CompactSet {
        CompactSet { dim: self.dim, sites: self.sites.iter().map(f).collect() }
    }

    /// The characteristic function `χ_A` with value 1 in `mode`.
    pub fn indicator(&self, mode: NumericMode) -> GridFunction {
        let one = Scalar::one().in_mode(mode);
        GridFunction {
            dim: self.dim,
            mode,
            entries: self.sites.iter().map(|s| (*s, one.clone())).collect(),
        }
    }
}

impl Serialize for CompactSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.sites.iter())
    }
}

/// A finitely supported scalar function on `Z^d`.
///
/// Exact zeros are never stored, and float entries below
/// [`crate::scalar::FLOAT_ZERO_CUTOFF`] are dropped. All entries share the
/// function's numeric mode; inserting a float promotes the whole function.
#[derive(Clone, Debug)]
pub struct GridFunction {
    dim: usize,
    mode: NumericMode,
    entries: BTreeMap<Site, Scalar>,
}

impl GridFunction {
    pub fn zero(dim: usize, mode: NumericMode) -> GridFunction {
        GridFunction { dim, mode, entries: BTreeMap::new() }
    }

    pub fn delta(site: Site, value: Scalar) -> GridFunction {
        let mode = value.mode();
        GridFunction::from_entries(site.dim(), mode, [(site, value)]).expect("single site")
    }

    /// Builds a function from `(site, value)` pairs. Repeated sites are summed.
    /// The result is in `mode` unless a float value forces float mode.
    pub fn from_entries(
        dim: usize,
        mode: NumericMode,
        entries: impl IntoIterator<Item = (Site, Scalar)>,
    ) -> Result<GridFunction> {
        if dim == 0 || dim > MAX_DIM {
            return param(format!("dimension must be 1 or 2, got {dim}"));
        }
        let mut map: BTreeMap<Site, Scalar> = BTreeMap::new();
        let mut mode = mode;
        for (site, value) in entries {
            if site.dim() != dim {
                return param(format!("site {site:?} does not have dimension {dim}"));
            }
            mode = mode.join(value.mode());
            match map.get_mut(&site) {
                Some(v) => *v = &*v + &value,
                None => {
                    map.insert(site, value);
                }
            }
        }
        Ok(GridFunction::normalized(dim, mode, map))
    }

    fn normalized(dim: usize, mode: NumericMode, mut entries: BTreeMap<Site, Scalar>) -> GridFunction {
        if mode == NumericMode::Float {
            for v in entries.values_mut() {
                if v.is_exact() {
                    *v = v.to_float();
                }
            }
        }
        entries.retain(|_, v| !v.is_zero());
        GridFunction { dim, mode, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> NumericMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, site: &Site) -> Scalar {
        self.entries.get(site).cloned().unwrap_or_else(|| Scalar::zero().in_mode(self.mode))
    }

    /// Entries in increasing site order.
    pub fn iter(&self) -> impl Iterator<Item = (&Site, &Scalar)> + '_ {
        self.entries.iter()
    }

    pub fn support(&self) -> CompactSet {
        CompactSet { dim: self.dim, sites: self.entries.keys().copied().collect() }
    }

    pub fn to_float(&self) -> GridFunction {
        GridFunction::normalized(self.dim, NumericMode::Float, self.entries.clone())
    }

    pub fn in_mode(&self, mode: NumericMode) -> GridFunction {
        match mode {
            NumericMode::Exact => self.clone(),
            NumericMode::Float => self.to_float(),
        }
    }

    /// Applies `f` to every stored value and renormalizes.
    pub fn map_values(&self, f: impl Fn(&Site, &Scalar) -> Scalar) -> GridFunction {
        let mut mode = self.mode;
        let entries: BTreeMap<Site, Scalar> = self
            .entries
            .iter()
            .map(|(s, v)| {
                let nv = f(s, v);
                mode = mode.join(nv.mode());
                (*s, nv)
            })
            .collect();
        GridFunction::normalized(self.dim, mode, entries)
    }

    /// Moves every entry: the value at `s` lands at `relocate(s)`, scaled by
    /// `factor(s)`. `relocate` must be injective.
    pub fn transport(
        &self,
        relocate: impl Fn(&Site) -> Site,
        factor: impl Fn(&Site) -> Scalar,
    ) -> GridFunction {
        let mut mode = self.mode;
        let entries: BTreeMap<Site, Scalar> = self
            .entries
            .iter()
            .map(|(s, v)| {
                let nv = &factor(s) * v;
                mode = mode.join(nv.mode());
                (relocate(s), nv)
            })
            .collect();
        debug_assert_eq!(entries.len(), self.entries.len(), "relocation is not injective");
        GridFunction::normalized(self.dim, mode, entries)
    }

    pub fn scale(&self, c: &Scalar) -> GridFunction {
        self.map_values(|_, v| c * v)
    }

    pub fn abs(&self) -> GridFunction {
        self.map_values(|_, v| v.abs())
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &GridFunction, op: impl Fn(&Scalar, &Scalar) -> Scalar) -> GridFunction {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mode = self.mode.join(other.mode);
        let zero = Scalar::zero().in_mode(mode);
        let mut entries = BTreeMap::new();
        let sites: BTreeSet<&Site> = self.entries.keys().chain(other.entries.keys()).collect();
        for s in sites {
            let a = self.entries.get(s).unwrap_or(&zero);
            let b = other.entries.get(s).unwrap_or(&zero);
            entries.insert(*s, op(a, b));
        }
        GridFunction::normalized(self.dim, mode, entries)
    }

    /// `f · χ_A`.
    pub fn restrict(&self, set: &CompactSet) -> GridFunction {
        let entries = self
            .entries
            .iter()
            .filter(|(s, _)| set.contains(s))
            .map(|(s, v)| (*s, v.clone()))
            .collect();
        GridFunction { dim: self.dim, mode: self.mode, entries }
    }

    /// `sup |f|`; zero for the zero function.
    pub fn sup_abs(&self) -> Scalar {
        self.entries
            .values()
            .map(Scalar::abs)
            .fold(Scalar::zero().in_mode(self.mode), Scalar::max)
    }

    /// Exact structural equality: same sites and equal values.
    pub fn same_as(&self, other: &GridFunction) -> bool {
        self.dim == other.dim
            && self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|((s, a), (t, b))| s == t && a == b)
    }

    /// Largest `|self(x) - other(x)|` divided by `max(1, sup |other|)`.
    pub fn max_rel_diff(&self, other: &GridFunction) -> f64 {
        let diff = self.sub(other).sup_abs().to_f64();
        diff / other.sup_abs().to_f64().max(1.0)
    }

    pub fn to_wire(&self, dual: bool) -> GridFunctionWire {
        GridFunctionWire {
            mode: self.mode,
            dim: self.dim,
            dual,
            entries: self.entries.iter().map(|(s, v)| (s.coords().to_vec(), v.to_string())).collect(),
        }
    }

    pub fn from_wire(wire: &GridFunctionWire) -> Result<GridFunction> {
        let entries = wire
            .entries
            .iter()
            .map(|(c, v)| Ok((Site::new(c)?, v.parse::<Scalar>()?)))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::from_entries(wire.dim, wire.mode, entries)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_wire(false)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<GridFunction> {
        let wire: GridFunctionWire = serde_json::from_str(text)?;
        if wire.dual {
            return Err(Error::Parse("expected a function, found a dual functional".into()));
        }
        GridFunction::from_wire(&wire)
    }
}

impl Serialize for GridFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_wire(false).serialize(s)
    }
}

/// JSON shape: `{"mode": "exact", "dim": 1, "entries": [[[0], "1/2"], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridFunctionWire {
    pub mode: NumericMode,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub dual: bool,
    pub entries: Vec<(Vec<i64>, String)>,
}

/// `f · χ_A`.
pub fn scale_restrict(f: &GridFunction, set: &CompactSet) -> GridFunction {
    f.restrict(set)
}
