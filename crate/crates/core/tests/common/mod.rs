//! Random instances and direct-from-definition oracles shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use cosdyn::{CompactSet, DynMap, GridFunction, NumericMode, OperatorHandle, Scalar, Site, WeightFn};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn positive_ratio(rng: &mut impl Rng) -> Scalar {
    Scalar::ratio(rng.gen_range(1..=6), rng.gen_range(1..=6))
}

pub fn signed_ratio(rng: &mut impl Rng) -> Scalar {
    Scalar::ratio(rng.gen_range(-9..=9), rng.gen_range(1..=7))
}

pub fn random_site(rng: &mut impl Rng, dim: usize, radius: i64) -> Site {
    if dim == 1 {
        Site::d1(rng.gen_range(-radius..=radius))
    } else {
        Site::d2(rng.gen_range(-radius..=radius), rng.gen_range(-radius..=radius))
    }
}

pub fn random_function(rng: &mut impl Rng, dim: usize, radius: i64, max_len: usize) -> GridFunction {
    let len = rng.gen_range(1..=max_len);
    let entries: Vec<_> = (0..len).map(|_| (random_site(rng, dim, radius), signed_ratio(rng))).collect();
    GridFunction::from_entries(dim, NumericMode::Exact, entries).unwrap()
}

pub fn random_weight(rng: &mut impl Rng, dim: usize) -> WeightFn {
    match rng.gen_range(0..3) {
        0 => WeightFn::constant(positive_ratio(rng)).unwrap(),
        1 => WeightFn::half_line(rng.gen_range(-3..=3), positive_ratio(rng), positive_ratio(rng)).unwrap(),
        _ => {
            let mut values = BTreeMap::new();
            for _ in 0..rng.gen_range(1..=6) {
                values.insert(random_site(rng, dim, 4), positive_ratio(rng));
            }
            WeightFn::table(values, positive_ratio(rng)).unwrap()
        }
    }
}

pub fn random_shift(rng: &mut impl Rng, dim: usize) -> DynMap {
    loop {
        let a: Vec<i64> = (0..dim).map(|_| rng.gen_range(-2..=2)).collect();
        if a.iter().any(|&c| c != 0) {
            return DynMap::shift(&a).unwrap();
        }
    }
}

pub fn random_op(rng: &mut impl Rng, dim: usize) -> OperatorHandle {
    let map = random_shift(rng, dim);
    OperatorHandle::new(map, random_weight(rng, dim))
}

/// `(T f)(x) = w(x) f(α(x))`, evaluated at every site of `window`.
pub fn oracle_t(op: &OperatorHandle, f: &GridFunction, window: &CompactSet) -> GridFunction {
    let entries = window.iter().filter_map(|x| {
        let v = f.get(&op.map.forward(x));
        (!v.is_zero()).then(|| (*x, &op.weight.eval(x) * &v))
    });
    GridFunction::from_entries(f.dim(), f.mode(), entries).unwrap()
}

/// `(S f)(x) = f(α^{-1}(x)) / w(α^{-1}(x))`, evaluated on `window`.
pub fn oracle_s(op: &OperatorHandle, f: &GridFunction, window: &CompactSet) -> GridFunction {
    let entries = window.iter().filter_map(|x| {
        let y = op.map.backward(x);
        let v = f.get(&y);
        (!v.is_zero()).then(|| (*x, &v / &op.weight.eval(&y)))
    });
    GridFunction::from_entries(f.dim(), f.mode(), entries).unwrap()
}

/// Sites within `radius` (sup distance) of the origin.
pub fn window(dim: usize, radius: i64) -> CompactSet {
    if dim == 1 {
        CompactSet::interval(-radius, radius)
    } else {
        CompactSet::rect((-radius, radius), (-radius, radius))
    }
}

/// `n`-fold application of a one-step oracle on a window wide enough to
/// hold every intermediate support.
pub fn oracle_pow(
    step: fn(&OperatorHandle, &GridFunction, &CompactSet) -> GridFunction,
    op: &OperatorHandle,
    n: u64,
    f: &GridFunction,
    radius: i64,
) -> GridFunction {
    let w = window(f.dim(), radius);
    (0..n).fold(f.clone(), |g, _| step(op, &g, &w))
}
