use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};

use num_bigint::BigUint;

use super::{depth_window, max_leaves, ClassCount, CoverReport, LambdaSpec, Method};
use crate::error::{Error, Result};
use crate::loglength::{ll_cmp, LogLength};
use crate::models::LengthFunction;
use crate::symbolic::{Beta, Word};

/// Levels above which the DFS forks.
const PARALLEL_DEPTH: usize = 10;

#[derive(Clone, Debug)]
pub struct OracleOptions {
    pub collect_members: bool,
    pub max_leaves: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { collect_members: false, max_leaves: max_leaves() }
    }
}

#[derive(Default)]
struct Found {
    classes: BTreeMap<(usize, usize, usize), u64>,
    members: Vec<Word>,
}

impl Found {
    fn merge(mut self, other: Found) -> Found {
        for (k, v) in other.classes {
            *self.classes.entry(k).or_insert(0) += v;
        }
        self.members.extend(other.members);
        self
    }
}

enum Key {
    /// `(n, N1, N2)` of the member.
    Split(Beta),
    /// `(n, L1, 0)` for localized counts.
    Ones,
    /// `(n, 0, 0)`.
    Level,
}

impl Key {
    fn of(&self, w: &Word) -> (usize, usize, usize) {
        match self {
            Key::Split(b) => {
                let (n1, n2) = w.ones_split(*b);
                (w.len(), n1, n2)
            }
            Key::Ones => (w.len(), w.ones(), 0),
            Key::Level => (w.len(), 0, 0),
        }
    }
}

struct Dfs<'a, L: LengthFunction + ?Sized> {
    model: &'a L,
    prefix: Word,
    /// `rho * l(u)`: a member `w` has `l(u w) <= target`.
    target: LogLength,
    key: Key,
    collect: bool,
    leaves: AtomicU64,
    limit: u64,
    abort: AtomicBool,
}

impl<'a, L: LengthFunction + ?Sized> Dfs<'a, L> {
    fn visit(&self, w: Word) -> Result<Found> {
        if self.abort.load(AtomicOrdering::Relaxed) {
            return Ok(Found::default());
        }
        let l = self.model.length(&self.prefix.concat(&w))?;
        if ll_cmp(&l, &self.target) != Ordering::Greater {
            let seen = self.leaves.fetch_add(1, AtomicOrdering::Relaxed) + 1;
            if seen > self.limit {
                self.abort.store(true, AtomicOrdering::Relaxed);
            }
            let mut f = Found::default();
            f.classes.insert(self.key.of(&w), 1);
            if self.collect {
                f.members.push(w);
            }
            return Ok(f);
        }
        let (a, b) = (w.child(0), w.child(1));
        if w.len() < PARALLEL_DEPTH {
            let (x, y) = rayon::join(|| self.visit(a), || self.visit(b));
            Ok(x?.merge(y?))
        } else {
            Ok(self.visit(a)?.merge(self.visit(b)?))
        }
    }
}

/// Depth-first enumeration of `Lambda(rho)` (or `Lambda^{*,u}(rho)`) for any
/// length function. `beta` selects the `(n, N1, N2)` histogram keys.
pub fn lambda_oracle_generic<L: LengthFunction + ?Sized>(
    model: &L,
    rho: &LogLength,
    prefix: Option<&Word>,
    beta: Option<Beta>,
    opts: &OracleOptions,
) -> Result<CoverReport> {
    let (n_min, _) = depth_window(model, rho);
    // every member has length at least n_min, so at least 2^n_min leaves
    if n_min >= 64 || (1u64 << n_min) > opts.max_leaves {
        return Err(Error::TooLarge { estimated: format!("2^{n_min}"), limit: opts.max_leaves });
    }
    let (prefix, target, key) = match prefix {
        Some(u) => (u.clone(), rho.mul(&model.length(u)?), Key::Ones),
        None => (Word::empty(), rho.clone(), beta.map_or(Key::Level, Key::Split)),
    };
    let dfs = Dfs {
        model,
        prefix,
        target,
        key,
        collect: opts.collect_members,
        leaves: AtomicU64::new(0),
        limit: opts.max_leaves,
        abort: AtomicBool::new(false),
    };
    // the root itself never qualifies since rho < 1
    let (x, y) = rayon::join(|| dfs.visit(Word::repeat(0, 1)), || dfs.visit(Word::repeat(1, 1)));
    let found = x?.merge(y?);
    if dfs.abort.load(AtomicOrdering::Relaxed) {
        return Err(Error::TooLarge { estimated: format!("more than {}", opts.max_leaves), limit: opts.max_leaves });
    }
    let mut levels: BTreeMap<usize, BigUint> = BTreeMap::new();
    let classes: Vec<ClassCount> = found
        .classes
        .iter()
        .map(|(&(n, n1, n2), &c)| {
            *levels.entry(n).or_default() += BigUint::from(c);
            ClassCount { n, n1, n2, count: BigUint::from(c) }
        })
        .collect();
    let bounds = (
        levels.keys().next().copied().unwrap_or(0),
        levels.keys().next_back().copied().unwrap_or(0),
    );
    let mut members = found.members;
    members.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.bits().cmp(b.bits())));
    Ok(CoverReport::new(levels, classes, bounds, Method::Oracle, opts.collect_members.then_some(members)))
}

/// [`lambda_oracle_generic`] for a built-in model.
pub fn lambda_oracle(spec: &LambdaSpec, opts: &OracleOptions) -> Result<CoverReport> {
    lambda_oracle_generic(spec.model, &spec.rho, spec.prefix.as_ref(), spec.model.beta(), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::Rho;
    use crate::models::{McMullenModel, Model, SymmetricModel};
    use num_rational::BigRational;
    use num_traits::One;

    fn mc() -> Model {
        Model::McMullen(McMullenModel::new(Beta::half(), 128).unwrap())
    }

    fn members(r: &CoverReport) -> Vec<String> {
        r.members.as_ref().unwrap().iter().map(|w| w.to_string()).collect()
    }

    fn opts() -> OracleOptions {
        OracleOptions { collect_members: true, ..Default::default() }
    }

    #[test]
    fn examples() {
        let m = mc();
        let r = lambda_oracle(&LambdaSpec::new(&m, Rho::pow2(1).0).unwrap(), &opts()).unwrap();
        assert_eq!(members(&r), vec!["0", "1"]);

        // l(0) = 1/128 ties with rho; l(1) = 2^-1/2 / 128 is smaller
        let rho = LogLength::int_pow_i(128, -1);
        let l1 = m.length(&"1".parse().unwrap()).unwrap();
        assert_eq!(ll_cmp(&l1, &rho), Ordering::Less);
        let r = lambda_oracle(&LambdaSpec::new(&m, rho).unwrap(), &opts()).unwrap();
        assert_eq!(r.count, BigUint::from(2u32));

        let thirds = Model::Symmetric(SymmetricModel::constant(BigRational::new(1.into(), 3.into())).unwrap());
        let ninth = LogLength::int_pow_i(3, -2);
        let r = lambda_oracle(&LambdaSpec::new(&thirds, ninth).unwrap(), &opts()).unwrap();
        assert_eq!(members(&r), vec!["00", "01", "10", "11"]);
    }

    #[test]
    fn completeness_and_bounds() {
        let m = mc();
        for k in [3i64, 9, 14, 20] {
            let rho = Rho::pow2(k).0;
            let r = lambda_oracle(&LambdaSpec::new(&m, rho.clone()).unwrap(), &opts()).unwrap();
            assert_eq!(r.kraft_sum(), BigRational::one());
            let lower = rho.mul(&LogLength::int_pow_i(256, -1));
            for w in r.members.as_ref().unwrap() {
                let l = m.length(w).unwrap();
                assert_ne!(ll_cmp(&l, &rho), Ordering::Greater);
                assert_eq!(ll_cmp(&l, &lower), Ordering::Greater);
                let parent = m.length(&w.remove_last().unwrap()).unwrap();
                assert_eq!(ll_cmp(&parent, &rho), Ordering::Greater);
            }
        }
    }

    #[test]
    fn guard_trips() {
        let thirds = Model::Symmetric(SymmetricModel::constant(BigRational::new(1.into(), 3.into())).unwrap());
        let spec = LambdaSpec::new(&thirds, LogLength::int_pow_i(3, -12)).unwrap();
        let o = OracleOptions { collect_members: false, max_leaves: 1000 };
        assert!(matches!(lambda_oracle(&spec, &o), Err(Error::TooLarge { .. })));
        let o = OracleOptions { collect_members: false, max_leaves: 5000 };
        assert_eq!(lambda_oracle(&spec, &o).unwrap().count, BigUint::from(4096u32));
    }

    #[test]
    fn localized_is_complete() {
        let m = mc();
        let spec = LambdaSpec::localized(&m, Rho::pow2(16).0, "0110".parse().unwrap()).unwrap();
        let r = lambda_oracle(&spec, &opts()).unwrap();
        assert_eq!(r.kraft_sum(), BigRational::one());
    }
}
