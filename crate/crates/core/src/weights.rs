//! Exact arithmetic over client sample-size vectors.
//!
//! Sample sizes are integers and every decision about them (the maximal weight
//! proportion, the truncation bound, the trade-off curve) is made with exact
//! big-integer / rational arithmetic. Floating point only shows up when a curve
//! is printed.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// `num / den` as an exact rational.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parse `"3/8"`, `"0.125"`, `"1"` or `"1e-3"` into an exact rational.
///
/// Decimal input is read digit by digit so that `"0.1"` is exactly `1/10`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("0{int_part}{frac_part}").parse().map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        Rational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Exact rational of an `f64` via its shortest decimal representation, so
/// that a configured `0.1` means `1/10` rather than the nearest binary double.
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::Parse(format!("not a finite number: {x}")));
    }
    parse_rational(&format!("{x}"))
}

/// Format with exactly `digits` fractional digits, rounding half away from zero.
pub fn format_decimal(r: &Rational, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10u32), digits);
    let scaled = r * Rational::from_integer(scale.clone());
    let half = ratio(1, 2);
    let rounded = if scaled.is_negative() {
        -((-scaled) + half).floor()
    } else {
        (scaled + half).floor()
    }
    .to_integer();
    let negative = rounded.is_negative();
    let (int_part, frac_part) = rounded.abs().div_rem(&scale);
    let sign = if negative { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{:0>width$}", frac_part.to_string(), width = digits)
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn check_unit_interval(p: &Rational, what: &str) -> Result<()> {
    if p.is_negative() || *p > Rational::one() {
        return Err(Error::InvalidProportion(format!("{what}={p} is not in [0, 1]")));
    }
    Ok(())
}

/// Client sample sizes, sorted ascending, with the client id that declared
/// each value carried alongside.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightVector {
    values: Vec<u64>,
    ids: Vec<u64>,
}

impl WeightVector {
    /// Ids default to the original positions `0..K`.
    pub fn new(values: Vec<u64>) -> Result<Self> {
        let ids = (0..values.len() as u64).collect();
        Self::with_ids(values, ids)
    }

    /// Sorts by value. The sort is stable, so clients declaring equal sizes
    /// keep their input order.
    pub fn with_ids(values: Vec<u64>, ids: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyWeights);
        }
        if ids.len() != values.len() {
            return Err(Error::IdLengthMismatch { ids: ids.len(), values: values.len() });
        }
        if values.iter().all(|&v| v == 0) {
            return Err(Error::ZeroTotalWeight);
        }
        let mut seen = ids.clone();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateId(w[0]));
        }
        let mut pairs: Vec<(u64, u64)> = values.into_iter().zip(ids).collect();
        pairs.sort_by_key(|&(v, _)| v);
        let (values, ids) = pairs.into_iter().unzip();
        Ok(Self { values, ids })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> BigInt {
        self.values.iter().map(|&v| BigInt::from(v)).sum()
    }

    pub fn min(&self) -> u64 {
        self.values[0]
    }

    pub fn max(&self) -> u64 {
        self.values[self.values.len() - 1]
    }

    /// `(id, value)` pairs in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.ids.iter().copied().zip(self.values.iter().copied())
    }

    pub fn weight_of(&self, id: u64) -> Option<u64> {
        self.iter().find(|&(i, _)| i == id).map(|(_, v)| v)
    }

    /// One integer per line, in sorted order.
    pub fn to_weights_file(&self) -> String {
        self.values.iter().map(|v| format!("{v}\n")).collect()
    }

    /// One nonnegative integer per line; blank lines and `#` comments are ignored.
    pub fn parse_weights_file(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let v = content.parse::<u64>().map_err(|_| {
                Error::Parse(format!("line {}: expected a nonnegative integer, got {content:?}", lineno + 1))
            })?;
            values.push(v);
        }
        Self::new(values)
    }
}

/// Assumed Byzantine client proportion `alpha` and tolerated Byzantine weight
/// proportion `alpha_star`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncationQuery {
    alpha: Rational,
    alpha_star: Rational,
}

impl TruncationQuery {
    pub fn new(alpha: Rational, alpha_star: Rational) -> Result<Self> {
        check_unit_interval(&alpha, "alpha")?;
        if !alpha_star.is_positive() || alpha_star >= Rational::one() {
            return Err(Error::InvalidProportion(format!("alpha*={alpha_star} is not in (0, 1)")));
        }
        Ok(Self { alpha, alpha_star })
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    pub fn alpha_star(&self) -> &Rational {
        &self.alpha_star
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TruncationStatus {
    Solved { u_star: u64 },
    NoTruncationNeeded,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncationOutcome {
    pub status: TruncationStatus,
    /// mwp of the resulting vector at alpha; `None` when infeasible.
    pub achieved_mwp: Option<Rational>,
}

impl TruncationOutcome {
    pub fn u_star(&self) -> Option<u64> {
        match self.status {
            TruncationStatus::Solved { u_star } => Some(u_star),
            _ => None,
        }
    }
}

/// Index (0-based) of the first element of the top-`p` set: element `i`
/// (1-based) is in the set iff `i > (1 - p) K`.
fn top_start(len: usize, p: &Rational) -> usize {
    let threshold = (Rational::one() - p) * Rational::from_integer(BigInt::from(len));
    threshold.floor().to_integer().to_usize().unwrap_or(0).min(len)
}

/// Prefix sums over a sorted vector, so that sums over truncated vectors are
/// O(1) once the number of untouched elements is known.
struct Prefix<'a> {
    values: &'a [u64],
    sums: Vec<BigInt>,
}

impl<'a> Prefix<'a> {
    fn new(values: &'a [u64]) -> Self {
        let mut sums = Vec::with_capacity(values.len() + 1);
        let mut acc = BigInt::zero();
        sums.push(acc.clone());
        for &v in values {
            acc += v;
            sums.push(acc.clone());
        }
        Self { values, sums }
    }

    fn len(&self) -> usize {
        self.values.len()
    }

    /// `(top sum, total)` of `trunc(v, cap)`, where `untouched` is the number
    /// of values `<= cap`.
    fn trunc_sums(&self, cap: u64, untouched: usize, top: usize) -> (BigInt, BigInt) {
        let k = self.len();
        let capped = BigInt::from(cap) * BigInt::from(k - untouched);
        let total = &self.sums[untouched] + &capped;
        let top_sum = if top >= untouched {
            BigInt::from(cap) * BigInt::from(k - top)
        } else {
            &self.sums[untouched] - &self.sums[top] + capped
        };
        (top_sum, total)
    }

    fn untouched(&self, cap: u64) -> usize {
        self.values.partition_point(|&v| v <= cap)
    }

    /// `mwp(trunc(v, cap), alpha) <= alpha_star`, decided by cross-multiplying.
    fn satisfies(&self, cap: u64, untouched: usize, top: usize, alpha_star: &Rational) -> bool {
        let (top_sum, total) = self.trunc_sums(cap, untouched, top);
        top_sum * alpha_star.denom() <= alpha_star.numer() * total
    }

    /// Closed-form maximal cap on `[n_u, n_{u+1}]` (`u` 1-based). On that
    /// interval mwp is `(a + bU) / (c + dU)`.
    fn interval_cap(&self, u: usize, top: usize, alpha_star: &Rational) -> Result<u64> {
        let k = self.len();
        let a = Rational::from_integer(&self.sums[u] - &self.sums[top.min(u)]);
        let b = Rational::from_integer(BigInt::from(k - top.max(u)));
        let c = Rational::from_integer(self.sums[u].clone());
        let d = Rational::from_integer(BigInt::from(k - u));
        let denominator = d * alpha_star - b;
        // The bound is an upper bound on U only when the denominator is negative.
        if !denominator.is_negative() {
            return Err(Error::DegenerateInterval { index: u });
        }
        let cap = ((a - c * alpha_star) / denominator).floor().to_integer();
        if cap.is_negative() {
            return Err(Error::DegenerateInterval { index: u });
        }
        cap.to_u64().ok_or(Error::DegenerateInterval { index: u })
    }
}

/// Maximal weight proportion: the share of the total weight held by the
/// heaviest `p`-fraction of the entries.
pub fn mwp(v: &WeightVector, p: &Rational) -> Result<Rational> {
    check_unit_interval(p, "p")?;
    let total = v.total();
    if total.is_zero() {
        return Err(Error::ZeroTotalWeight);
    }
    let start = top_start(v.len(), p);
    let top: BigInt = v.values[start..].iter().map(|&x| BigInt::from(x)).sum();
    Ok(Rational::new(top, total))
}

/// Element-wise `min(n_k, cap)`. Order and ids are unchanged. A zero cap is
/// rejected because it leaves no weight at all.
pub fn truncate(v: &WeightVector, cap: u64) -> Result<WeightVector> {
    if cap == 0 {
        return Err(Error::ZeroTotalWeight);
    }
    Ok(WeightVector {
        values: v.values.iter().map(|&x| x.min(cap)).collect(),
        ids: v.ids.clone(),
    })
}

/// Largest integer `U` in `[n_u, n_{u+1}]` (`u` is 1-based) with
/// `mwp(trunc(v, U), alpha) <= alpha_star`, via the closed form
/// `floor((a - c alpha*) / (d alpha* - b))`.
///
/// Meaningful when truncating at `n_u` satisfies the constraint and truncating
/// at `n_{u+1}` violates it. When `d alpha* - b >= 0` the constraint cannot
/// bind from above on this interval and `DegenerateInterval` is returned.
pub fn interval_solve(v: &WeightVector, u: usize, q: &TruncationQuery) -> Result<u64> {
    if u == 0 || u >= v.len() {
        return Err(Error::IntervalIndex { index: u, len: v.len() });
    }
    let prefix = Prefix::new(&v.values);
    prefix.interval_cap(u, top_start(v.len(), &q.alpha), &q.alpha_star)
}

/// The maximal truncation bound `U*` for the query.
///
/// Walks the sorted values from the top down to the first breakpoint whose
/// truncation satisfies the bound, then finishes inside that interval with
/// [`interval_solve`]'s closed form.
pub fn solve_u_star(v: &WeightVector, q: &TruncationQuery) -> Result<TruncationOutcome> {
    let k = v.len();
    let prefix = Prefix::new(&v.values);
    let top = top_start(k, &q.alpha);
    let alpha_star = &q.alpha_star;

    if prefix.satisfies(v.max(), k, top, alpha_star) {
        return Ok(TruncationOutcome {
            status: TruncationStatus::NoTruncationNeeded,
            achieved_mwp: Some(mwp(v, &q.alpha)?),
        });
    }
    // Every cap in [1, n_1] gives the same (flattened) proportions.
    let floor_cap = v.min().max(1);
    if !prefix.satisfies(floor_cap, prefix.untouched(floor_cap), top, alpha_star) {
        return Ok(TruncationOutcome { status: TruncationStatus::Infeasible, achieved_mwp: None });
    }
    let u = (1..k)
        .rev()
        .take_while(|&u| v.values[u - 1] >= floor_cap)
        .find(|&u| {
            let cap = v.values[u - 1];
            prefix.satisfies(cap, prefix.untouched(cap), top, alpha_star)
        })
        .expect("a feasible floor implies a satisfying breakpoint at or above it");
    let u_star = prefix.interval_cap(u, top, alpha_star)?;
    Ok(TruncationOutcome {
        status: TruncationStatus::Solved { u_star },
        achieved_mwp: Some(mwp(&truncate(v, u_star)?, &q.alpha)?),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TradeoffPoint {
    pub alpha: Rational,
    pub u_star: u64,
}

/// `(alpha, U*)` pairs for one `alpha_star`, alpha strictly decreasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TradeoffCurve {
    pub alpha_star: Rational,
    pub points: Vec<TradeoffPoint>,
}

impl TradeoffCurve {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `alpha,u_star` with alpha printed to six decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,u_star\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", format_decimal(&p.alpha, 6), p.u_star));
        }
        out
    }
}

/// Sweep alpha over the grid `j/K` from the largest value not above
/// `alpha_star` down to `1/K`, reporting `U*` wherever truncation is both
/// needed and feasible.
///
/// Mirrors the nested loop that walks the breakpoint index `u` up while alpha
/// steps down: both only move one way, so the sweep is linear in K after the
/// prefix sums.
pub fn tradeoff_report(v: &WeightVector, alpha_star: &Rational) -> Result<TradeoffCurve> {
    if !alpha_star.is_positive() || *alpha_star >= Rational::one() {
        return Err(Error::InvalidProportion(format!("alpha*={alpha_star} is not in (0, 1)")));
    }
    let k = v.len();
    let prefix = Prefix::new(&v.values);
    let kk = BigInt::from(k);
    let alpha_of = |j: usize| Rational::new(BigInt::from(j), kk.clone());
    // top_start for alpha = j/K is exactly K - j.
    let mut j = (alpha_star * Rational::from_integer(kk.clone()))
        .floor()
        .to_integer()
        .to_usize()
        .unwrap_or(0)
        .min(k);

    let floor_cap = v.min().max(1);
    let floor_untouched = prefix.untouched(floor_cap);
    while j >= 1 && !prefix.satisfies(floor_cap, floor_untouched, k - j, alpha_star) {
        j -= 1;
    }

    let mut points = Vec::new();
    let mut u = 1;
    // Number of values <= n_{u+1}; only ever grows.
    let mut untouched = 0;
    while u < k && j >= 1 {
        let cap = v.values[u];
        while untouched < k && v.values[untouched] <= cap {
            untouched += 1;
        }
        if cap > 0 && !prefix.satisfies(cap, untouched, k - j, alpha_star) {
            let u_star = prefix.interval_cap(u, k - j, alpha_star)?;
            points.push(TradeoffPoint { alpha: alpha_of(j), u_star });
            j -= 1;
        } else {
            u += 1;
        }
    }
    Ok(TradeoffCurve { alpha_star: alpha_star.clone(), points })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PreprocessMode {
    Passthrough,
    Ignore,
    Truncate(TruncationQuery),
}

impl PreprocessMode {
    pub fn name(&self) -> &'static str {
        match self {
            PreprocessMode::Passthrough => "passthrough",
            PreprocessMode::Ignore => "ignore",
            PreprocessMode::Truncate(_) => "truncate",
        }
    }
}

impl fmt::Display for PreprocessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Turn declared sizes into aggregation weights. Ids stay attached to their
/// weights.
pub fn preprocess(declared: &WeightVector, mode: &PreprocessMode) -> Result<WeightVector> {
    match mode {
        PreprocessMode::Passthrough => Ok(declared.clone()),
        PreprocessMode::Ignore => Ok(WeightVector { values: vec![1; declared.len()], ids: declared.ids.clone() }),
        PreprocessMode::Truncate(q) => match solve_u_star(declared, q)?.status {
            TruncationStatus::Solved { u_star } => truncate(declared, u_star),
            TruncationStatus::NoTruncationNeeded => Ok(declared.clone()),
            TruncationStatus::Infeasible => Err(Error::PreprocessInfeasible),
        },
    }
}
