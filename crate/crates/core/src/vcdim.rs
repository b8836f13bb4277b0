//! Brute-force shattering over the reals and the translated-set construction
//! showing that a top-expert mixture of `n` experts from a family of VC
//! dimension `m` shatters `n·m` points.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::moe::{BinaryClassifier, PiecewiseHypothesis};
use crate::numerics::Rng;

/// Largest point set whose labelings are enumerated exhaustively.
pub const MAX_POINTS: usize = 22;

/// Strictly increasing finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet(Vec<f64>);

impl PointSet {
    /// Sorts the input; rejects duplicates and non-finite values.
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("point sets must be finite".into()));
        }
        points.sort_by(f64::total_cmp);
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("point sets must not repeat a point".into()));
        }
        Ok(PointSet(points))
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `max − min`, zero for fewer than two points.
    pub fn span(&self) -> f64 {
        match (self.0.first(), self.0.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn translate(&self, c: f64) -> PointSet {
        PointSet(self.0.iter().map(|x| x + c).collect())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.0.iter().any(|&p| p == x)
    }

    /// Cut points separating every pair of neighbours, plus one beyond each
    /// end. Any labeling a threshold or interval can produce on the set is
    /// produced by one with endpoints in this list.
    fn cuts(&self) -> Vec<f64> {
        let p = &self.0;
        if p.is_empty() {
            return vec![0.0];
        }
        let mut cuts = Vec::with_capacity(p.len() + 1);
        cuts.push(p[0] - 1.0);
        cuts.extend(p.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        cuts.push(p[p.len() - 1] + 1.0);
        cuts
    }
}

impl fmt::Display for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// A member of one of the searchable families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classifier {
    /// `a·x + b > 0` with `a ∈ {−1, +1}`.
    Threshold { a: f64, b: f64 },
    /// `lo ≤ x ≤ hi`.
    Interval { lo: f64, hi: f64 },
    /// The interval indicator that is never 1.
    EmptyInterval,
    Constant(bool),
}

impl Classifier {
    pub fn eval(&self, x: f64) -> bool {
        match *self {
            Classifier::Threshold { a, b } => a * x + b > 0.0,
            Classifier::Interval { lo, hi } => lo <= x && x <= hi,
            Classifier::EmptyInterval => false,
            Classifier::Constant(c) => c,
        }
    }

    /// The classifier `x ↦ self(x − c)`, expressed in the same family.
    pub fn translate(&self, c: f64) -> Classifier {
        match *self {
            Classifier::Threshold { a, b } => Classifier::Threshold { a, b: b - a * c },
            Classifier::Interval { lo, hi } => Classifier::Interval { lo: lo + c, hi: hi + c },
            other => other,
        }
    }

    pub fn family(&self) -> ClassifierFamily {
        match self {
            Classifier::Threshold { .. } => ClassifierFamily::AffineThreshold,
            Classifier::Interval { .. } | Classifier::EmptyInterval => ClassifierFamily::Interval,
            Classifier::Constant(_) => ClassifierFamily::Constant,
        }
    }
}

impl BinaryClassifier for Classifier {
    fn classify(&self, x: f64) -> bool {
        self.eval(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassifierFamily {
    AffineThreshold,
    Interval,
    Constant,
}

impl ClassifierFamily {
    pub const ALL: [ClassifierFamily; 3] = [ClassifierFamily::AffineThreshold, ClassifierFamily::Interval, ClassifierFamily::Constant];

    /// Every member needed to realize any achievable labeling of `pts`.
    pub fn candidates(&self, pts: &PointSet) -> Vec<Classifier> {
        match self {
            ClassifierFamily::AffineThreshold => pts
                .cuts()
                .into_iter()
                .flat_map(|t| [Classifier::Threshold { a: 1.0, b: -t }, Classifier::Threshold { a: -1.0, b: t }])
                .collect(),
            ClassifierFamily::Interval => {
                let cuts = pts.cuts();
                let mut out = vec![Classifier::EmptyInterval];
                for i in 0..cuts.len() {
                    for j in i + 1..cuts.len() {
                        out.push(Classifier::Interval { lo: cuts[i], hi: cuts[j] });
                    }
                }
                out
            }
            ClassifierFamily::Constant => vec![Classifier::Constant(false), Classifier::Constant(true)],
        }
    }

    /// A member reproducing `labels` on `pts`, if one exists.
    pub fn realize(&self, pts: &PointSet, labels: &[bool]) -> Option<Classifier> {
        debug_assert_eq!(pts.len(), labels.len());
        self.candidates(pts)
            .into_iter()
            .find(|c| pts.points().iter().zip(labels).all(|(&x, &y)| c.eval(x) == y))
    }
}

impl fmt::Display for ClassifierFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierFamily::AffineThreshold => "affine-thresholds",
            ClassifierFamily::Interval => "intervals",
            ClassifierFamily::Constant => "constant",
        })
    }
}

impl FromStr for ClassifierFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "affine-thresholds" | "thresholds" => Ok(ClassifierFamily::AffineThreshold),
            "intervals" => Ok(ClassifierFamily::Interval),
            "constant" => Ok(ClassifierFamily::Constant),
            other => Err(Error::Config(format!("unknown classifier family `{other}`"))),
        }
    }
}

/// Bit `i` of `code` is the label of point `i`.
pub fn labeling(code: u64, m: usize) -> Vec<bool> {
    (0..m).map(|i| code >> i & 1 == 1).collect()
}

fn check_cap(m: usize) -> Result<()> {
    if m > MAX_POINTS {
        return Err(Error::CapExceeded { size: m, cap: MAX_POINTS });
    }
    Ok(())
}

/// First labeling of `pts` the family cannot realize, if any.
pub fn unrealizable_labeling(family: ClassifierFamily, pts: &PointSet) -> Result<Option<Vec<bool>>> {
    check_cap(pts.len())?;
    let m = pts.len();
    let code = (0..1u64 << m)
        .into_par_iter()
        .find_first(|&code| family.realize(pts, &labeling(code, m)).is_none());
    Ok(code.map(|c| labeling(c, m)))
}

/// Whether every labeling of `pts` is realized by some family member.
pub fn shatters(family: ClassifierFamily, pts: &PointSet) -> Result<bool> {
    Ok(unrealizable_labeling(family, pts)?.is_none())
}

#[derive(Debug, Clone, PartialEq)]
pub struct VcdBound {
    pub m: usize,
    /// A shattered set of size `m`.
    pub witness: PointSet,
}

/// Largest `m ≤ max_m` for which a searched point set of size `m` is
/// shattered. Candidates are the integers `0..m` followed by `budget`
/// random sets drawn from `seed`. The search stops at the first size with
/// no shattered candidate.
pub fn vcd_lower_bound(family: ClassifierFamily, max_m: usize, budget: usize, seed: u64) -> Result<VcdBound> {
    check_cap(max_m)?;
    let mut rng = Rng::new(seed);
    let mut best = VcdBound { m: 0, witness: PointSet(Vec::new()) };
    for m in 1..=max_m {
        let mut candidates = vec![PointSet((0..m).map(|i| i as f64).collect())];
        for _ in 0..budget {
            let pts: Vec<f64> = (0..m).map(|_| rng.uniform(-10.0, 10.0)).collect();
            if let Ok(p) = PointSet::new(pts) {
                candidates.push(p);
            }
        }
        let mut found = None;
        for c in candidates {
            if shatters(family, &c)? {
                found = Some(c);
                break;
            }
        }
        match found {
            Some(witness) => best = VcdBound { m, witness },
            None => break,
        }
    }
    Ok(best)
}

/// `n` pairwise-disjoint translates of a base set.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslatedSets {
    sets: Vec<PointSet>,
    /// Cumulative shift of each set relative to the base; the first is 0.
    offsets: Vec<f64>,
}

impl TranslatedSets {
    pub fn sets(&self) -> &[PointSet] {
        &self.sets
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn total_points(&self) -> usize {
        self.sets.iter().map(PointSet::len).sum()
    }

    /// All points in set order.
    pub fn union(&self) -> Vec<f64> {
        self.sets.iter().flat_map(|s| s.points().iter().copied()).collect()
    }
}

/// `X¹ = base` and `Xⁱ = Xⁱ⁻¹ + cᵢ`, where `cᵢ` is the smallest positive
/// multiple of `span(base) + 1` that keeps `Xⁱ` clear of all earlier sets.
pub fn build_translated_sets(base: &PointSet, n: usize) -> Result<TranslatedSets> {
    if base.is_empty() {
        return Err(Error::EmptyInput("base point set"));
    }
    if n == 0 {
        return Err(Error::Config("need at least one translated set".into()));
    }
    let unit = base.span() + 1.0;
    let mut sets = vec![base.clone()];
    let mut offsets = vec![0.0];
    while sets.len() < n {
        let prev = sets.last().unwrap();
        let mut k = 1.0;
        let next = loop {
            let cand = prev.translate(k * unit);
            let clear = sets.iter().all(|s| cand.points().iter().all(|&x| !s.contains(x)) && cand.points()[0] > s.points()[s.len() - 1]);
            if clear {
                break cand;
            }
            k += 1.0;
        };
        offsets.push(offsets.last().unwrap() + k * unit);
        sets.push(next);
    }
    Ok(TranslatedSets { sets, offsets })
}

/// Builds the top-expert hypothesis reproducing `labels` on the union of the
/// translated sets. Set `j` gets the half-open cell between the midpoints to
/// its neighbours and the expert `e(x − offsetⱼ)`, where `e` realizes the
/// `j`-th label block on the untranslated points. The last set takes the
/// catch-all cell.
pub fn build_piecewise_hypothesis(ts: &TranslatedSets, labels: &[bool], family: ClassifierFamily) -> Result<PiecewiseHypothesis<Classifier>> {
    if labels.len() != ts.total_points() {
        return Err(Error::DimensionMismatch { expected: ts.total_points(), got: labels.len() });
    }
    let mut experts = Vec::with_capacity(ts.len());
    let mut start = 0;
    for (set, &offset) in ts.sets.iter().zip(&ts.offsets) {
        let block = &labels[start..start + set.len()];
        start += set.len();
        let base = PointSet(set.points().iter().map(|x| x - offset).collect());
        let e = family
            .realize(&base, block)
            .ok_or_else(|| Error::Unrealizable { labels: block.to_vec() })?;
        experts.push(e.translate(offset));
    }
    let last = experts.pop().unwrap();
    let mut pieces = Vec::with_capacity(experts.len());
    let mut lo = f64::NEG_INFINITY;
    for (j, e) in experts.into_iter().enumerate() {
        let hi = 0.5 * (ts.sets[j].points()[ts.sets[j].len() - 1] + ts.sets[j + 1].points()[0]);
        pieces.push((vec![(lo, hi)], e));
        lo = hi;
    }
    Ok(PiecewiseHypothesis::new(pieces, last))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropositionReport {
    pub family: ClassifierFamily,
    pub n: usize,
    pub m: usize,
    /// Shattered base set of size `m`.
    pub witness: PointSet,
    /// The `n·m` construction points.
    pub points: Vec<f64>,
    pub labelings_checked: u64,
    /// First labeling no constructed hypothesis reproduced.
    pub failure: Option<Vec<bool>>,
}

impl PropositionReport {
    pub fn ok(&self) -> bool {
        self.failure.is_none() && self.labelings_checked == 1u64 << self.points.len()
    }

    /// `n=..,m=..,points=..,labelings_checked=..,ok=..`
    pub fn summary_line(&self) -> String {
        format!("n={},m={},points={},labelings_checked={},ok={}", self.n, self.m, self.points.len(), self.labelings_checked, self.ok())
    }
}

impl fmt::Display for PropositionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "family: {}", self.family)?;
        writeln!(f, "base set shattered by the family (m = {}): {}", self.m, self.witness)?;
        let pts: Vec<String> = self.points.iter().map(|x| x.to_string()).collect();
        writeln!(f, "{} experts, {} construction points: {}", self.n, self.points.len(), pts.join(", "))?;
        let total = 1u64 << self.points.len();
        match &self.failure {
            None => writeln!(f, "all {}/{} labelings realized by a piecewise hypothesis", self.labelings_checked, total)?,
            Some(l) => {
                let bits: String = l.iter().map(|&b| if b { '1' } else { '0' }).collect();
                writeln!(f, "labeling {bits} NOT realized")?
            }
        }
        write!(f, "{}", self.summary_line())
    }
}

/// Seed of the random candidate sets in [`verify_proposition`].
pub const SEARCH_SEED: u64 = 0x5eed;
pub const SEARCH_BUDGET: usize = 64;

/// Checks that `n` experts from `family` shatter `n·m` points, `m` being
/// the family's searched VC lower bound: every labeling of the translated
/// construction is reproduced by its piecewise hypothesis.
pub fn verify_proposition(n: usize, family: ClassifierFamily) -> Result<PropositionReport> {
    if n == 0 {
        return Err(Error::Config("need at least one expert".into()));
    }
    let bound = vcd_lower_bound(family, (MAX_POINTS / n).min(8), SEARCH_BUDGET, SEARCH_SEED)?;
    if bound.m == 0 {
        return Err(Error::Config(format!("{family} shatters no point")));
    }
    check_cap(n * bound.m)?;
    let ts = build_translated_sets(&bound.witness, n)?;
    let points = ts.union();
    let total = 1u64 << points.len();
    let failure = (0..total).into_par_iter().find_first(|&code| {
        let labels = labeling(code, points.len());
        match build_piecewise_hypothesis(&ts, &labels, family) {
            Ok(h) => points.iter().zip(&labels).any(|(&x, &y)| h.classify(x) != y),
            Err(_) => true,
        }
    });
    let labelings_checked = match failure {
        Some(code) => code + 1,
        None => total,
    };
    Ok(PropositionReport {
        family,
        n,
        m: bound.m,
        witness: bound.witness,
        labelings_checked,
        failure: failure.map(|c| labeling(c, points.len())),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ps(v: &[f64]) -> PointSet {
        PointSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn point_set_validation() {
        assert_eq!(ps(&[2.0, 0.0, 1.0]).points(), &[0.0, 1.0, 2.0]);
        assert!(PointSet::new(vec![1.0, 1.0]).is_err());
        assert!(PointSet::new(vec![f64::NAN]).is_err());
        assert_eq!(ps(&[0.0, 3.0]).span(), 3.0);
    }

    #[test]
    fn threshold_shattering_examples() {
        assert!(shatters(ClassifierFamily::AffineThreshold, &ps(&[0.0, 1.0])).unwrap());
        let three = ps(&[0.0, 1.0, 2.0]);
        assert!(!shatters(ClassifierFamily::AffineThreshold, &three).unwrap());
        assert!(ClassifierFamily::AffineThreshold.realize(&three, &[true, false, true]).is_none());
        // an interval cannot produce (1, 0, 1) either
        assert!(ClassifierFamily::Interval.realize(&three, &[true, false, true]).is_none());
    }

    #[test]
    fn empty_set_is_shattered_by_everything() {
        for f in ClassifierFamily::ALL {
            assert!(shatters(f, &PointSet(vec![])).unwrap());
        }
    }

    #[test]
    fn cap_enforced() {
        let big = PointSet((0..23).map(f64::from).collect());
        assert!(matches!(shatters(ClassifierFamily::Constant, &big), Err(Error::CapExceeded { size: 23, cap: 22 })));
    }

    #[test]
    fn vc_lower_bounds() {
        let b = |f| vcd_lower_bound(f, 5, 32, 1).unwrap().m;
        assert_eq!(b(ClassifierFamily::AffineThreshold), 2);
        assert_eq!(b(ClassifierFamily::Interval), 2);
        assert_eq!(b(ClassifierFamily::Constant), 1);
    }

    #[test]
    fn translated_sets_span_plus_one_rule() {
        let ts = build_translated_sets(&ps(&[0.0, 1.0]), 2).unwrap();
        assert_eq!(ts.sets(), &[ps(&[0.0, 1.0]), ps(&[2.0, 3.0])]);
        assert_eq!(ts.offsets(), &[0.0, 2.0]);
        assert!(build_translated_sets(&PointSet(vec![]), 2).is_err());
    }

    #[test]
    fn single_set_hypothesis_is_the_base_classifier() {
        let base = ps(&[0.0, 1.0]);
        let ts = build_translated_sets(&base, 1).unwrap();
        let h = build_piecewise_hypothesis(&ts, &[false, true], ClassifierFamily::AffineThreshold).unwrap();
        let e = ClassifierFamily::AffineThreshold.realize(&base, &[false, true]).unwrap();
        assert_eq!(h.len(), 1);
        for x in [-3.0, 0.0, 0.4, 0.6, 1.0, 9.0] {
            assert_eq!(h.classify(x), e.eval(x));
        }
    }

    #[test]
    fn two_threshold_experts_alternate() {
        let ts = build_translated_sets(&ps(&[0.0, 1.0]), 2).unwrap();
        let labels = [false, true, true, false];
        let h = build_piecewise_hypothesis(&ts, &labels, ClassifierFamily::AffineThreshold).unwrap();
        for (x, y) in [0.0, 1.0, 2.0, 3.0].into_iter().zip(labels) {
            assert_eq!(h.classify(x), y, "x = {x}");
        }
    }

    #[test]
    fn all_sixteen_labelings_for_two_by_two() {
        let ts = build_translated_sets(&ps(&[0.0, 1.0]), 2).unwrap();
        for code in 0..16 {
            let labels = labeling(code, 4);
            let h = build_piecewise_hypothesis(&ts, &labels, ClassifierFamily::AffineThreshold).unwrap();
            for (x, y) in ts.union().into_iter().zip(&labels) {
                assert_eq!(h.classify(x), *y);
            }
        }
    }

    #[test]
    fn unrealizable_block_is_an_error() {
        let ts = build_translated_sets(&ps(&[0.0, 1.0, 2.0]), 2).unwrap();
        let labels = [true, false, true, false, false, false];
        assert!(matches!(
            build_piecewise_hypothesis(&ts, &labels, ClassifierFamily::AffineThreshold),
            Err(Error::Unrealizable { .. })
        ));
    }

    #[test]
    fn proposition_examples() {
        let r = verify_proposition(2, ClassifierFamily::AffineThreshold).unwrap();
        assert!(r.ok());
        assert_eq!((r.m, r.points.len(), r.labelings_checked), (2, 4, 16));
        assert_eq!(r.summary_line(), "n=2,m=2,points=4,labelings_checked=16,ok=true");
        let r = verify_proposition(3, ClassifierFamily::AffineThreshold).unwrap();
        assert!(r.ok() && r.labelings_checked == 64);
        let r = verify_proposition(2, ClassifierFamily::Interval).unwrap();
        assert!(r.ok() && r.labelings_checked == 16);
    }

    #[test]
    fn one_expert_reduces_to_shattering() {
        for f in ClassifierFamily::ALL {
            let r = verify_proposition(1, f).unwrap();
            assert!(r.ok());
            assert!(shatters(f, &r.witness).unwrap());
        }
    }

    #[test]
    fn proposition_holds_up_to_twelve_points() {
        for f in [ClassifierFamily::AffineThreshold, ClassifierFamily::Interval, ClassifierFamily::Constant] {
            for n in 1..=12 {
                let m = if f == ClassifierFamily::Constant { 1 } else { 2 };
                if n * m > 12 {
                    continue;
                }
                let r = verify_proposition(n, f).unwrap();
                assert!(r.ok(), "{f} n={n}: {r}");
            }
        }
    }

    #[test]
    fn threshold_translation_rederived() {
        // a(x − c) + b = a·x + (b − a·c)
        for (a, b, c) in [(1.0, -0.5, 2.0), (-1.0, 0.5, 4.0), (1.0, 1.5, -3.0)] {
            let t = Classifier::Threshold { a, b }.translate(c);
            assert_eq!(t, Classifier::Threshold { a, b: b - a * c });
            assert_eq!(t.family(), ClassifierFamily::AffineThreshold);
            for x in [-5.0, -1.0, 0.0, 0.3, 2.5, 6.0] {
                assert_eq!(t.eval(x), Classifier::Threshold { a, b }.eval(x - c));
            }
        }
    }

    proptest! {
        #[test]
        fn supersets_of_unshattered_sets_are_unshattered(
            pts in proptest::collection::btree_set(-50i32..50, 1..7),
            extra in proptest::collection::btree_set(-50i32..50, 0..4),
            fam in 0usize..3,
        ) {
            let f = ClassifierFamily::ALL[fam];
            let small = PointSet::new(pts.iter().map(|&v| v as f64).collect()).unwrap();
            let big = PointSet::new(pts.union(&extra).map(|&v| v as f64).collect()).unwrap();
            if !shatters(f, &small).unwrap() {
                prop_assert!(!shatters(f, &big).unwrap());
            }
        }

        #[test]
        fn translated_sets_disjoint_with_full_union(
            base in proptest::collection::btree_set(-20i32..20, 1..=3),
            scale in 0.1f64..10.0,
            n in 1usize..=5,
        ) {
            let base = PointSet::new(base.iter().map(|&v| v as f64 * scale).collect()).unwrap();
            let ts = build_translated_sets(&base, n).unwrap();
            prop_assert_eq!(ts.len(), n);
            let mut all = ts.union();
            prop_assert_eq!(all.len(), n * base.len());
            all.sort_by(f64::total_cmp);
            all.dedup();
            prop_assert_eq!(all.len(), n * base.len());
            for i in 0..n {
                for j in i + 1..n {
                    prop_assert!(ts.sets()[i].points().iter().all(|&x| !ts.sets()[j].contains(x)));
                }
            }
        }

        #[test]
        fn translate_commutes_with_eval(lo in -5.0f64..5.0, w in 0.0f64..5.0, c in -10.0f64..10.0, x in -20.0f64..20.0) {
            let e = Classifier::Interval { lo, hi: lo + w };
            prop_assert_eq!(e.translate(c).eval(x + c), e.eval(x));
        }
    }
}
