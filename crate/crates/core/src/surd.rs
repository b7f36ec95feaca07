//! Continued fractions of quadratic surds, convergents, the orbit
//! decomposition of the convergent vectors, Pell solutions, form automorphs
//! and orbit representatives on quadrics Q(x, y) = t.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factor::{factor_big, Factorizer, DEFAULT_RHO_BUDGET};
use crate::figure::{Denominator, FigureDataset, FigureMeta, FigurePoint, Marker, RefLine, PROTOCOL_NOTE};
use crate::orbits::{is_hyperbolic, ln_big, Mat2Q};

/// Partial quotients examined before giving up on a Pell solution.
pub const PELL_HORIZON: usize = 100_000;

fn isqrt(n: i128) -> i128 {
    if n <= 0 {
        0
    } else {
        (n as u128).sqrt() as i128
    }
}

fn is_square(n: i128) -> bool {
    n >= 0 && isqrt(n).pow(2) == n
}

/// (P + √D) / Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SurdSpec {
    pub p: i64,
    pub q: i64,
    pub d: u64,
}

impl SurdSpec {
    pub fn new(p: i64, q: i64, d: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidInput("Q must be nonzero".into()));
        }
        if d == 0 || is_square(i128::from(d)) {
            return Err(Error::InvalidInput(format!(
                "D = {d} is a perfect square; the number is rational"
            )));
        }
        Ok(SurdSpec { p, q, d })
    }

    pub fn sqrt(d: u64) -> Result<Self> {
        SurdSpec::new(0, 1, d)
    }

    pub fn golden_ratio() -> Self {
        SurdSpec { p: 1, q: 2, d: 5 }
    }

    pub fn value(&self) -> f64 {
        (self.p as f64 + (self.d as f64).sqrt()) / self.q as f64
    }

    /// Equivalent (P, Q, D) with Q | D − P².
    fn normalized(&self) -> (i128, i128, i128) {
        let (p, q, d) = (i128::from(self.p), i128::from(self.q), i128::from(self.d));
        if (d - p * p) % q == 0 {
            (p, q, d)
        } else {
            (p * q.abs(), q * q.abs(), d * q * q)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CfExpansion {
    pub preperiod: Vec<i64>,
    pub period: Vec<i64>,
}

impl CfExpansion {
    pub fn term(&self, i: usize) -> i64 {
        if i < self.preperiod.len() {
            self.preperiod[i]
        } else {
            self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }
}

/// Expansion by the (P, Q) state recurrence; the first repeated state
/// closes the minimal period.
pub fn cf_expand(surd: &SurdSpec) -> Result<CfExpansion> {
    SurdSpec::new(surd.p, surd.q, surd.d)?;
    let (mut p, mut q, d) = surd.normalized();
    let s = isqrt(d);
    let mut seen: HashMap<(i128, i128), usize> = HashMap::new();
    let mut terms: Vec<i64> = Vec::new();
    loop {
        if let Some(&start) = seen.get(&(p, q)) {
            let period = terms.split_off(start);
            return Ok(CfExpansion {
                preperiod: terms,
                period,
            });
        }
        seen.insert((p, q), terms.len());
        // √D lies strictly between s and s + 1
        let a = if q > 0 {
            Integer::div_floor(&(p + s), &q)
        } else {
            Integer::div_floor(&(p + s + 1), &q)
        };
        terms.push(i64::try_from(a).map_err(|_| Error::InvalidInput("partial quotient overflows i64".into()))?);
        p = a * q - p;
        q = (d - p * p) / q;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Convergent {
    pub n: u32,
    #[serde(serialize_with = "ser_display")]
    pub p: BigInt,
    #[serde(serialize_with = "ser_display")]
    pub q: BigInt,
}

fn ser_display<S: serde::Serializer, T: std::fmt::Display>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Integer 2×2 matrix `[[a, b], [c, d]]` used for convergent products.
type IMat = [BigInt; 4];

fn imul(m: &IMat, o: &IMat) -> IMat {
    [
        &m[0] * &o[0] + &m[1] * &o[2],
        &m[0] * &o[1] + &m[1] * &o[3],
        &m[2] * &o[0] + &m[3] * &o[2],
        &m[2] * &o[1] + &m[3] * &o[3],
    ]
}

fn swap() -> IMat {
    [BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero()]
}

fn quotient_matrix(a: i64) -> IMat {
    [BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::from(a)]
}

/// Right-multiplies `[[x, y], [z, w]]` by `[[0, 1], [1, a]]` in place.
fn push_quotient(m: &mut IMat, a: i64) {
    let x = std::mem::take(&mut m[1]);
    let z = std::mem::take(&mut m[3]);
    m[1] = &m[0] + &x * a;
    m[0] = x;
    m[3] = &m[2] + &z * a;
    m[2] = z;
}

/// Convergents p_n/q_n for n = 0..n_max−1, read off the second column of
/// `[[0,1],[1,0]]·[[0,1],[1,a_0]]⋯[[0,1],[1,a_n]]`.
pub fn convergents(cf: &CfExpansion, n_max: u32) -> Vec<Convergent> {
    let mut m = swap();
    (0..n_max)
        .map(|n| {
            push_quotient(&mut m, cf.term(n as usize));
            Convergent {
                n,
                p: m[1].clone(),
                q: m[3].clone(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurdOrbits {
    pub gamma: Mat2Q,
    /// `[[0,1],[1,0]]` times the preperiod quotient matrices.
    pub m: Mat2Q,
    /// v_j = (p_{k+j}, q_{k+j}) for j = 0..ℓ−1, with k + 1 the preperiod
    /// length; v_0 = (1, 0) for a purely periodic expansion.
    pub reps: Vec<(BigInt, BigInt)>,
    /// Shift property checked for indices up to this one.
    pub checked_until: u32,
}

fn to_q(m: &IMat) -> Mat2Q {
    Mat2Q::from_bigints(m[0].clone(), m[1].clone(), m[2].clone(), m[3].clone())
}

/// γ = M·(period product)·M⁻¹ and orbit representatives, verifying
/// γ·(p_n, q_n) = (p_{n+ℓ}, q_{n+ℓ}) for k <= n <= `check_until`.
pub fn surd_orbit_decomposition(cf: &CfExpansion, check_until: u32) -> Result<SurdOrbits> {
    if cf.period.is_empty() {
        return Err(Error::InvalidInput("expansion has an empty period".into()));
    }
    let mut m = swap();
    for &a in &cf.preperiod {
        m = imul(&m, &quotient_matrix(a));
    }
    let mut per = [BigInt::one(), BigInt::zero(), BigInt::zero(), BigInt::one()];
    let mut reps = Vec::with_capacity(cf.period.len());
    let mut partial = m.clone();
    for &a in &cf.period {
        reps.push((partial[1].clone(), partial[3].clone()));
        per = imul(&per, &quotient_matrix(a));
        push_quotient(&mut partial, a);
    }
    let mq = to_q(&m);
    let gamma = mq.mul(&to_q(&per)).mul(&mq.inverse()?);

    let ell = cf.period.len() as u32;
    let start = (cf.preperiod.len() as u32).saturating_sub(1);
    let conv = convergents(cf, check_until + ell + 1);
    for n in start..=check_until {
        let c = &conv[n as usize];
        let next = &conv[(n + ell) as usize];
        let (x, y) = gamma.apply(&(c.p.clone(), c.q.clone()));
        if !x.is_integer() || !y.is_integer() || x.to_integer() != next.p || y.to_integer() != next.q {
            return Err(Error::Consistency(format!(
                "shift property fails at n = {n}: γ·({}, {}) != ({}, {})",
                c.p, c.q, next.p, next.q
            )));
        }
    }
    Ok(SurdOrbits {
        gamma,
        m: mq,
        reps,
        checked_until: check_until,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self> {
        let f = QuadForm { a, b, c };
        let d = f.discriminant();
        if d <= 0 || is_square(d) {
            return Err(Error::InvalidInput(format!(
                "discriminant {d} must be positive and not a square"
            )));
        }
        Ok(f)
    }

    pub fn discriminant(&self) -> i128 {
        i128::from(self.b).pow(2) - 4 * i128::from(self.a) * i128::from(self.c)
    }

    pub fn eval(&self, x: &BigInt, y: &BigInt) -> BigInt {
        self.a * x * x + self.b * x * y + self.c * y * y
    }

    fn eval_i128(&self, x: i128, y: i128) -> i128 {
        i128::from(self.a) * x * x + i128::from(self.b) * x * y + i128::from(self.c) * y * y
    }

    /// Coefficients of Q(αx + βy, γx + δy) for g = [[α, β], [γ, δ]].
    pub fn transform(&self, g: &[BigInt; 4]) -> [BigInt; 3] {
        let (a, b, c) = (BigInt::from(self.a), BigInt::from(self.b), BigInt::from(self.c));
        let [al, be, ga, de] = g;
        [
            &a * al * al + &b * al * ga + &c * ga * ga,
            BigInt::from(2) * &a * al * be + &b * (al * de + be * ga) + BigInt::from(2) * &c * ga * de,
            &a * be * be + &b * be * de + &c * de * de,
        ]
    }
}

type PellBuild = fn(&BigInt, &BigInt) -> (BigInt, BigInt);

/// Least (t, u) with u > 0 and t² − D u² = 4.
pub fn pell_fundamental(d: u64) -> Result<(BigInt, BigInt)> {
    let di = i128::from(d);
    if d == 0 || is_square(di) {
        return Err(Error::InvalidInput(format!("D = {d} must be a positive non-square")));
    }
    let (surd, build): (SurdSpec, PellBuild) = match d % 4 {
        // t = 2p + q, u = q from convergents of (−1 + √D)/2
        1 => (SurdSpec { p: -1, q: 2, d }, |p, q| (BigInt::from(2) * p + q, q.clone())),
        // t = 2p, u = q from convergents of √(D/4)
        0 => (SurdSpec { p: 0, q: 1, d: d / 4 }, |p, q| {
            (BigInt::from(2) * p, q.clone())
        }),
        // t and u both even: t = 2p, u = 2q from convergents of √D
        _ => (SurdSpec { p: 0, q: 1, d }, |p, q| {
            (BigInt::from(2) * p, BigInt::from(2) * q)
        }),
    };
    let cf = cf_expand(&surd)?;
    let four = BigInt::from(4);
    let dd = BigInt::from(d);
    let mut m = swap();
    for i in 0..PELL_HORIZON {
        push_quotient(&mut m, cf.term(i));
        let (t, u) = build(&m[1], &m[3]);
        if u.is_positive() && t.is_positive() && &t * &t - &dd * &u * &u == four {
            return Ok((t, u));
        }
    }
    Err(Error::NoConvergence(format!(
        "no solution of t² − {d}u² = 4 within {PELL_HORIZON} partial quotients"
    )))
}

/// γ_Q = [[(t − Bu)/2, −Cu], [Au, (t + Bu)/2]], verified to preserve Q.
pub fn automorph(form: &QuadForm) -> Result<Mat2Q> {
    let f = QuadForm::new(form.a, form.b, form.c)?;
    let d = u64::try_from(f.discriminant()).map_err(|_| Error::InvalidInput("discriminant too large".into()))?;
    let (t, u) = pell_fundamental(d)?;
    let two = BigInt::from(2);
    let bu = &u * f.b;
    let g = [(&t - &bu) / &two, -(&u * f.c), &u * f.a, (&t + &bu) / &two];
    let [a, b, c] = f.transform(&g);
    if a != BigInt::from(f.a) || b != BigInt::from(f.b) || c != BigInt::from(f.c) {
        return Err(Error::Consistency(format!(
            "automorph does not preserve ({}, {}, {})",
            f.a, f.b, f.c
        )));
    }
    let [a, b, c, d] = g;
    Ok(Mat2Q::from_bigints(a, b, c, d))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QuadricOptions {
    /// Accept t that is not square-free.
    pub allow_non_square_free: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuadricReps {
    pub form: QuadForm,
    pub t: i64,
    pub height: i64,
    pub solutions_in_box: usize,
    /// One point per orbit of ⟨γ_Q, −I⟩ found inside the box: the
    /// lexicographically least point with x > 0, or x = 0 and y > 0.
    /// Orbits are merged only through steps that stay inside the box.
    pub reps: Vec<(i64, i64)>,
    /// Orbit of each representative, as (rep, member) pairs.
    #[serde(skip)]
    pub members: BTreeMap<(i64, i64), Vec<(i64, i64)>>,
}

fn square_free(t: i64) -> Result<bool> {
    let r = factor_big(&BigUint::from(t.unsigned_abs()), DEFAULT_RHO_BUDGET)?;
    Ok(r.prime_factors.windows(2).all(|w| w[0] != w[1]))
}

/// Solutions of Q(x, y) = t with |x|, |y| <= height, reduced modulo
/// ⟨γ_Q, −I⟩ as far as the box allows.
pub fn quadric_orbit_reps(form: &QuadForm, t: i64, height: i64, opts: QuadricOptions) -> Result<QuadricReps> {
    let f = QuadForm::new(form.a, form.b, form.c)?;
    if t == 0 {
        return Err(Error::InvalidInput("t must be nonzero".into()));
    }
    if !opts.allow_non_square_free && !square_free(t)? {
        return Err(Error::InvalidInput(format!(
            "t = {t} is not square-free; orbit finiteness assumes a square-free t"
        )));
    }
    if height < 0 {
        return Err(Error::InvalidInput("height must be non-negative".into()));
    }
    let h = i128::from(height);
    let ti = i128::from(t);
    let (a, b, c) = (i128::from(f.a), i128::from(f.b), i128::from(f.c));
    let d = f.discriminant();
    let mut sols: Vec<(i128, i128)> = Vec::new();
    for y in -h..=h {
        if a != 0 {
            // a x² + b y x + (c y² − t) = 0
            let disc = d * y * y + 4 * a * ti;
            if !is_square(disc) {
                continue;
            }
            let s = isqrt(disc);
            for root in [-b * y + s, -b * y - s] {
                if root % (2 * a) == 0 {
                    let x = root / (2 * a);
                    if x.abs() <= h {
                        sols.push((x, y));
                    }
                }
            }
        } else if y != 0 {
            let num = ti - c * y * y;
            if num % (b * y) == 0 {
                let x = num / (b * y);
                if x.abs() <= h {
                    sols.push((x, y));
                }
            }
        }
    }
    sols.sort_unstable();
    sols.dedup();
    debug_assert!(sols.iter().all(|&(x, y)| f.eval_i128(x, y) == ti));

    let g = automorph(&f)?;
    let gi = g
        .to_integers()
        .ok_or_else(|| Error::Consistency("automorph is not integral".into()))?;
    let index: HashMap<(i128, i128), usize> = sols.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut parent: Vec<usize> = (0..sols.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (i, &(x, y)) in sols.iter().enumerate() {
        let (bx, by) = (BigInt::from(x), BigInt::from(y));
        let nx = &gi[0] * &bx + &gi[1] * &by;
        let ny = &gi[2] * &bx + &gi[3] * &by;
        let mut neighbours = vec![(-x, -y)];
        if let (Ok(nx), Ok(ny)) = (i128::try_from(nx), i128::try_from(ny)) {
            neighbours.push((nx, ny));
        }
        for v in neighbours {
            if let Some(&j) = index.get(&v) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<(i64, i64)>> = BTreeMap::new();
    for (i, &(x, y)) in sols.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push((x as i64, y as i64));
    }
    let mut members = BTreeMap::new();
    for pts in groups.into_values() {
        let rep = *pts
            .iter()
            .filter(|&&(x, y)| x > 0 || (x == 0 && y > 0))
            .min()
            .expect("every orbit meets the half-plane through −I");
        members.insert(rep, pts);
    }
    Ok(QuadricReps {
        form: f,
        t,
        height,
        solutions_in_box: sols.len(),
        reps: members.keys().copied().collect(),
        members,
    })
}

/// Series Ω(p_n q_n)/log n with log log |p_n q_n| as a companion column
/// and a β_2 reference line. Indices n < 2 and zero products are skipped.
pub fn surd_ratio_series(surd: &SurdSpec, n_max: u32, budget: u64) -> Result<FigureDataset> {
    let cf = cf_expand(surd)?;
    let mut factorizer = Factorizer::new(budget).with_prime_pool();
    let mut memo: HashMap<BigUint, crate::factor::OmegaEstimate> = HashMap::new();
    let mut omega = |v: &BigUint| -> Result<crate::factor::OmegaEstimate> {
        if let Some(o) = memo.get(v) {
            return Ok(*o);
        }
        let o = factorizer.omega_protocol(v, None)?;
        memo.insert(v.clone(), o);
        Ok(o)
    };
    let mut points = Vec::new();
    for c in convergents(&cf, n_max) {
        if c.n < 2 || c.p.is_zero() || c.q.is_zero() {
            continue;
        }
        let o = omega(c.p.magnitude())? + omega(c.q.magnitude())?;
        let l = ln_big(c.p.magnitude()) + ln_big(c.q.magnitude());
        let log_index = f64::from(c.n).ln();
        points.push(FigurePoint {
            index: u64::from(c.n),
            omega: o.value,
            exact: o.exact,
            log_index,
            log_log: (l > 1.0).then(|| l.ln()),
            ratio: f64::from(o.value) / log_index,
            marker: Marker::Plain,
        });
    }
    let meta = FigureMeta {
        figure: None,
        title: format!("({} + sqrt {})/{}: Omega(p_n q_n) / log n", surd.p, surd.d, surd.q),
        series: "convergents".into(),
        denominator: Denominator::LogIndex,
        protocol: PROTOCOL_NOTE.into(),
        unresolved_points: 0,
    };
    Ok(FigureDataset::new(meta, vec![RefLine::beta(2)?], points))
}

/// Whether the decomposition matrix of an expansion is hyperbolic.
pub fn surd_gamma_is_hyperbolic(cf: &CfExpansion) -> Result<bool> {
    Ok(is_hyperbolic(&surd_orbit_decomposition(cf, 0)?.gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::{iterate_orbit, named_orbit, IterateOptions};
    use num_rational::BigRational;
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bi(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn random_surds(count: usize, seed: u64) -> Vec<SurdSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        while out.len() < count {
            let d = 2 + rng.next_u64() % 999;
            if is_square(i128::from(d)) {
                continue;
            }
            let p = (rng.next_u64() % 41) as i64 - 20;
            let mut q = (rng.next_u64() % 21) as i64 - 10;
            if q == 0 {
                q = 1;
            }
            out.push(SurdSpec::new(p, q, d).unwrap());
        }
        out
    }

    #[test]
    fn expansion_examples() {
        let cf = cf_expand(&SurdSpec::sqrt(2).unwrap()).unwrap();
        assert_eq!((cf.preperiod.as_slice(), cf.period.as_slice()), (&[1][..], &[2][..]));
        let cf = cf_expand(&SurdSpec::golden_ratio()).unwrap();
        assert!(cf.preperiod.is_empty());
        assert_eq!(cf.period, vec![1]);
        assert!(SurdSpec::sqrt(4).is_err());
        assert!(SurdSpec::new(1, 0, 2).is_err());
        let cf = cf_expand(&SurdSpec::sqrt(7).unwrap()).unwrap();
        assert_eq!((cf.preperiod, cf.period), (vec![2], vec![1, 1, 1, 4]));
        // (−5 + √2)/1 has a negative leading term
        let cf = cf_expand(&SurdSpec::new(-5, 1, 2).unwrap()).unwrap();
        assert_eq!(cf.preperiod, vec![-4]);
        assert_eq!(cf.period, vec![2]);
    }

    #[test]
    fn expansions_converge_to_value() {
        for s in random_surds(40, 1) {
            let cf = cf_expand(&s).unwrap();
            let alpha = s.value();
            for c in convergents(&cf, 12) {
                let p = c.p.to_string().parse::<f64>().unwrap();
                let q = c.q.to_string().parse::<f64>().unwrap();
                assert!((alpha - p / q).abs() <= 1.0 / (q * q) + 1e-9, "{s:?} n={}", c.n);
            }
        }
    }

    #[test]
    fn period_is_minimal() {
        for s in random_surds(200, 2) {
            let per = cf_expand(&s).unwrap().period;
            let l = per.len();
            for d in (1..l).filter(|d| l.is_multiple_of(*d)) {
                assert!((0..l).any(|i| per[i] != per[i % d]), "{s:?} {per:?}");
            }
        }
    }

    #[test]
    fn sqrt2_convergents() {
        let cf = cf_expand(&SurdSpec::sqrt(2).unwrap()).unwrap();
        let conv = convergents(&cf, 40);
        let first: Vec<(i64, i64)> = conv[..4]
            .iter()
            .map(|c| (c.p.to_string().parse().unwrap(), c.q.to_string().parse().unwrap()))
            .collect();
        assert_eq!(first, vec![(1, 1), (3, 2), (7, 5), (17, 12)]);
        // p_n = 2 p_{n−1} + p_{n−2}
        let (mut p0, mut q0, mut p1, mut q1) = (bi(1), bi(0), bi(1), bi(1));
        for c in &conv[1..] {
            let (p2, q2) = (&p1 * 2 + &p0, &q1 * 2 + &q0);
            assert_eq!((&c.p, &c.q), (&p2, &q2));
            let pell = &p2 * &p2 - bi(2) * &q2 * &q2;
            assert!(pell == bi(1) || pell == bi(-1));
            (p0, q0, p1, q1) = (p1, q1, p2, q2);
        }
    }

    #[test]
    fn golden_convergents_are_fibonacci_ratios() {
        let cf = cf_expand(&SurdSpec::golden_ratio()).unwrap();
        for c in convergents(&cf, 60) {
            let n = u64::from(c.n);
            assert_eq!(*c.p.magnitude(), crate::sequences::fibonacci(n + 2));
            assert_eq!(*c.q.magnitude(), crate::sequences::fibonacci(n + 1));
        }
    }

    #[test]
    fn determinant_is_unit() {
        for s in random_surds(20, 3) {
            let conv = convergents(&cf_expand(&s).unwrap(), 501);
            let (mut pp, mut qp) = (bi(1), bi(0));
            for c in &conv {
                let det = &c.p * &qp - &pp * &c.q;
                assert!(det == bi(1) || det == bi(-1), "{s:?} n={}", c.n);
                assert!(c.p.gcd(&c.q).is_one());
                pp = c.p.clone();
                qp = c.q.clone();
            }
        }
    }

    #[test]
    fn decomposition_examples() {
        let cf = cf_expand(&SurdSpec::sqrt(2).unwrap()).unwrap();
        let dec = surd_orbit_decomposition(&cf, 50).unwrap();
        assert_eq!(dec.gamma, Mat2Q::from_integers(1, 2, 1, 1));
        assert_eq!(dec.reps, vec![(bi(1), bi(1))]);
        let v = (bi(3), bi(2));
        let once = dec.gamma.apply(&v);
        assert_eq!((once.0.to_integer(), once.1.to_integer()), (bi(7), bi(5)));
        let twice = dec.gamma.pow(2).apply(&v);
        assert_eq!((twice.0.to_integer(), twice.1.to_integer()), (bi(17), bi(12)));
        assert!(is_hyperbolic(&dec.gamma));

        let cf = cf_expand(&SurdSpec::golden_ratio()).unwrap();
        let dec = surd_orbit_decomposition(&cf, 50).unwrap();
        assert_eq!(dec.gamma, Mat2Q::from_integers(1, 1, 1, 0));
        assert_eq!(dec.reps, vec![(bi(1), bi(0))]);
        assert!(surd_gamma_is_hyperbolic(&cf).unwrap());
    }

    #[test]
    fn shift_property_on_random_surds() {
        for s in random_surds(20, 4) {
            let cf = cf_expand(&s).unwrap();
            let dec = surd_orbit_decomposition(&cf, 400).unwrap();
            assert_eq!(dec.reps.len(), cf.period.len());
            assert!(is_hyperbolic(&dec.gamma));
        }
    }

    fn brute_pell(d: u64, limit: u64) -> Option<(u64, u64)> {
        (1..=limit).find_map(|u| {
            let t2 = u128::from(d) * u128::from(u) * u128::from(u) + 4;
            let t = t2.sqrt();
            (t * t == t2).then_some((t as u64, u))
        })
    }

    #[test]
    fn pell_matches_brute_force() {
        assert_eq!(pell_fundamental(20).unwrap(), (bi(18), bi(4)));
        assert_eq!(pell_fundamental(5).unwrap(), (bi(3), bi(1)));
        assert_eq!(pell_fundamental(12).unwrap(), (bi(4), bi(1)));
        assert_eq!(pell_fundamental(2).unwrap(), (bi(6), bi(4)));
        assert!(pell_fundamental(16).is_err());
        const LIMIT: u64 = 100_000;
        for d in 2..=500u64 {
            if is_square(i128::from(d)) {
                continue;
            }
            let (t, u) = pell_fundamental(d).unwrap();
            assert_eq!(&t * &t - BigInt::from(d) * &u * &u, bi(4));
            match brute_pell(d, LIMIT) {
                Some((bt, bu)) => assert_eq!((t, u), (bi(bt as i64), bi(bu as i64)), "D={d}"),
                None => assert!(u > bi(LIMIT as i64), "D={d}"),
            }
        }
    }

    #[test]
    fn automorph_examples() {
        let f = QuadForm::new(1, 0, -5).unwrap();
        let g = automorph(&f).unwrap();
        assert_eq!(g, Mat2Q::from_integers(9, 20, 4, 9));
        assert_eq!(g.det(), BigRational::one());
        for v in [(bi(1), bi(0)), (bi(0), bi(1))] {
            let (x, y) = g.apply(&v);
            assert_eq!(f.eval(&x.to_integer(), &y.to_integer()), f.eval(&v.0, &v.1));
        }
        let g = automorph(&QuadForm::new(1, 0, -2).unwrap()).unwrap();
        assert_eq!(g, Mat2Q::from_integers(3, 4, 2, 3));
        assert!(QuadForm::new(1, 0, 1).is_err());
        assert!(QuadForm::new(1, 2, 1).is_err());
        assert!(QuadForm::new(0, 2, 0).is_err());
    }

    #[test]
    fn automorphs_preserve_random_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut small = |m: u64| (rng.next_u64() % (2 * m + 1)) as i64 - m as i64;
        let mut forms = 0;
        while forms < 20 {
            let Ok(f) = QuadForm::new(small(9), small(9), small(9)) else {
                continue;
            };
            forms += 1;
            let g = automorph(&f).unwrap();
            assert_eq!(g.det(), BigRational::one());
            for _ in 0..100 {
                let v = (bi(small(1000)), bi(small(1000)));
                let (x, y) = g.apply(&v);
                assert_eq!(f.eval(&x.to_integer(), &y.to_integer()), f.eval(&v.0, &v.1), "{f:?}");
            }
        }
    }

    fn brute_solutions(f: &QuadForm, t: i64, h: i64) -> usize {
        let mut n = 0;
        for x in -h..=h {
            for y in -h..=h {
                if f.eval_i128(i128::from(x), i128::from(y)) == i128::from(t) {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn quadric_pell_four() {
        let f = QuadForm::new(1, 0, -5).unwrap();
        let opts = QuadricOptions {
            allow_non_square_free: true,
        };
        assert!(quadric_orbit_reps(&f, 4, 200, QuadricOptions::default()).is_err());
        let r = quadric_orbit_reps(&f, 4, 200, opts).unwrap();
        assert_eq!(r.solutions_in_box, brute_solutions(&f, 4, 200));
        assert_eq!(r.reps, vec![(2, 0), (3, -1), (3, 1)]);
        let r = quadric_orbit_reps(&f, -4, 200, opts).unwrap();
        assert_eq!(r.solutions_in_box, brute_solutions(&f, -4, 200));
        assert_eq!(r.reps, vec![(1, -1), (1, 1), (4, -2)]);
        // (L_n, F_n) for n = 1..11 all lie in the box
        for n in 1..=11u64 {
            let l: i64 = crate::sequences::lucas(n).to_string().parse().unwrap();
            let fi: i64 = crate::sequences::fibonacci(n).to_string().parse().unwrap();
            let t = if n % 2 == 0 { 4 } else { -4 };
            let r = quadric_orbit_reps(&f, t, 200, opts).unwrap();
            assert!(r.members.values().any(|m| m.contains(&(l, fi))), "n={n}");
        }
    }

    #[test]
    fn quadric_examples() {
        let f = QuadForm::new(1, 0, -2).unwrap();
        let r = quadric_orbit_reps(&f, -1, 20, QuadricOptions::default()).unwrap();
        assert_eq!(r.reps.len(), 1);
        let orbit = &r.members[&r.reps[0]];
        assert!(orbit.contains(&(1, 1)) && orbit.contains(&(7, 5)));

        let f5 = QuadForm::new(1, 0, -5).unwrap();
        let r = quadric_orbit_reps(&f5, 3, 200, QuadricOptions::default()).unwrap();
        assert!(r.reps.is_empty());
        assert!(quadric_orbit_reps(&f5, 0, 10, QuadricOptions::default()).is_err());
    }

    #[test]
    fn representatives_and_iterates_lie_on_quadric() {
        let forms = [
            (1, 0, -5, -1),
            (2, 1, -2, 7),
            (1, 1, -1, -5),
            (3, 0, -7, 5),
            (2, 3, -1, 6),
        ];
        for (a, b, c, t) in forms {
            let f = QuadForm::new(a, b, c).unwrap();
            let opts = QuadricOptions {
                allow_non_square_free: true,
            };
            let r = quadric_orbit_reps(&f, t, 60, opts).unwrap();
            assert_eq!(r.solutions_in_box, brute_solutions(&f, t, 60), "{f:?}");
            let g = automorph(&f).unwrap();
            for &(x, y) in &r.reps {
                let mut v = (bi(x), bi(y));
                for _ in 0..=5 {
                    assert_eq!(f.eval(&v.0, &v.1), bi(t));
                    let (nx, ny) = g.apply(&v);
                    v = (nx.to_integer(), ny.to_integer());
                }
            }
        }
    }

    #[test]
    fn golden_series_matches_fibonacci_orbit() {
        let ds = surd_ratio_series(&SurdSpec::golden_ratio(), 60, DEFAULT_RHO_BUDGET).unwrap();
        assert_eq!(ds.points.first().unwrap().index, 2);
        let orbit = iterate_orbit(
            &named_orbit("consecutive_fibonacci").unwrap(),
            62,
            IterateOptions::default(),
        )
        .unwrap();
        for p in &ds.points {
            // (p_n, q_n) = (F_{n+2}, F_{n+1}) is orbit point n + 1
            let o = orbit[p.index as usize + 1].omega.unwrap();
            assert_eq!(p.omega, o.value);
            assert!((p.ratio - f64::from(p.omega) / (p.index as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn sqrt2_series_fully_factored() {
        let ds = surd_ratio_series(&SurdSpec::sqrt(2).unwrap(), 61, DEFAULT_RHO_BUDGET).unwrap();
        assert_eq!(ds.points.len(), 59);
        assert_eq!(ds.meta.unresolved_points, 0);
        assert_eq!(ds.lines[0].k, 2);
    }
}
