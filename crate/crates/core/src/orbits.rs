//! Orbits of integer vectors under powers of a 2×2 rational matrix, with
//! Ω statistics of the product of the coordinates.

use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factor::{EntryRef, FactorTables, Factorizer, OmegaEstimate, DEFAULT_RHO_BUDGET};
use crate::sequences::{fibonacci, lucas, mersenne};

/// Iterates checked for integrality when an orbit spec is built.
pub const INTEGRALITY_HORIZON: u32 = 50;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mat2Q {
    pub a: BigRational,
    pub b: BigRational,
    pub c: BigRational,
    pub d: BigRational,
}

fn q(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn parse_q(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidInput(format!("`{s}` is not a rational number"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

impl Mat2Q {
    pub fn new(a: BigRational, b: BigRational, c: BigRational, d: BigRational) -> Self {
        Mat2Q { a, b, c, d }
    }

    pub fn from_integers(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2Q::new(q(a), q(b), q(c), q(d))
    }

    pub fn from_bigints(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Self {
        Mat2Q::new(
            BigRational::from_integer(a),
            BigRational::from_integer(b),
            BigRational::from_integer(c),
            BigRational::from_integer(d),
        )
    }

    /// Parses `a,b,c,d` in row-major order; entries may be fractions `p/q`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::InvalidInput(format!(
                "matrix `{s}` must have four comma-separated entries"
            )));
        }
        Ok(Mat2Q::new(
            parse_q(parts[0])?,
            parse_q(parts[1])?,
            parse_q(parts[2])?,
            parse_q(parts[3])?,
        ))
    }

    pub fn identity() -> Self {
        Mat2Q::from_integers(1, 0, 0, 1)
    }

    pub fn trace(&self) -> BigRational {
        &self.a + &self.d
    }

    pub fn det(&self) -> BigRational {
        &self.a * &self.d - &self.b * &self.c
    }

    /// tr² − 4·det.
    pub fn discriminant(&self) -> BigRational {
        let t = self.trace();
        &t * &t - self.det() * q(4)
    }

    pub fn mul(&self, o: &Mat2Q) -> Mat2Q {
        Mat2Q::new(
            &self.a * &o.a + &self.b * &o.c,
            &self.a * &o.b + &self.b * &o.d,
            &self.c * &o.a + &self.d * &o.c,
            &self.c * &o.b + &self.d * &o.d,
        )
    }

    pub fn pow(&self, mut e: u32) -> Mat2Q {
        let mut base = self.clone();
        let mut acc = Mat2Q::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn inverse(&self) -> Result<Mat2Q> {
        let det = self.det();
        if det.is_zero() {
            return Err(Error::InvalidInput("singular matrix".into()));
        }
        Ok(Mat2Q::new(
            &self.d / &det,
            -&self.b / &det,
            -&self.c / &det,
            &self.a / &det,
        ))
    }

    pub fn neg(&self) -> Mat2Q {
        Mat2Q::new(-&self.a, -&self.b, -&self.c, -&self.d)
    }

    pub fn apply(&self, v: &(BigInt, BigInt)) -> (BigRational, BigRational) {
        let x = BigRational::from_integer(v.0.clone());
        let y = BigRational::from_integer(v.1.clone());
        (&self.a * &x + &self.b * &y, &self.c * &x + &self.d * &y)
    }

    pub fn is_integral(&self) -> bool {
        [&self.a, &self.b, &self.c, &self.d].iter().all(|e| e.is_integer())
    }

    /// Entries as integers when all are integral.
    pub fn to_integers(&self) -> Option<[BigInt; 4]> {
        self.is_integral().then(|| {
            [
                self.a.to_integer(),
                self.b.to_integer(),
                self.c.to_integer(),
                self.d.to_integer(),
            ]
        })
    }

    /// `(L, L·γ)` with L the least common denominator of the entries.
    fn scaled(&self) -> (BigInt, [BigInt; 4]) {
        let entries = [&self.a, &self.b, &self.c, &self.d];
        let l = entries.iter().fold(BigInt::one(), |l, e| l.lcm(e.denom()));
        let scale = |e: &BigRational| e.numer() * (&l / e.denom());
        (
            l.clone(),
            [scale(&self.a), scale(&self.b), scale(&self.c), scale(&self.d)],
        )
    }
}

impl fmt::Display for Mat2Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// Two distinct real eigenvalues.
pub fn is_hyperbolic(gamma: &Mat2Q) -> bool {
    gamma.discriminant().is_positive()
}

/// Which term of a classical sequence a coordinate equals at point n:
/// `sequence[mult·n + offset]`, up to sign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeqCoord {
    pub label: &'static str,
    pub mult: u64,
    pub offset: u64,
}

impl SeqCoord {
    pub fn index(&self, n: u32) -> u64 {
        self.mult * u64::from(n) + self.offset
    }

    pub fn value(&self, n: u32) -> BigUint {
        let i = self.index(n);
        match self.label {
            "F" => fibonacci(i),
            "L" => lucas(i),
            "M" => mersenne(i),
            other => unreachable!("no sequence `{other}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitSpec {
    pub label: Option<String>,
    pub gamma: Mat2Q,
    pub v0: (BigInt, BigInt),
    /// Sequence terms behind the coordinates, for named orbits.
    pub coords: Option<[SeqCoord; 2]>,
}

impl OrbitSpec {
    pub fn new(gamma: Mat2Q, v0: (BigInt, BigInt), label: Option<String>) -> Result<Self> {
        if v0.0.is_zero() && v0.1.is_zero() {
            return Err(Error::InvalidInput("base vector must be nonzero".into()));
        }
        if gamma.det().is_zero() {
            return Err(Error::InvalidInput("matrix must be invertible".into()));
        }
        let spec = OrbitSpec {
            label,
            gamma,
            v0,
            coords: None,
        };
        let mut it = spec.iter_points();
        for n in 0..=INTEGRALITY_HORIZON {
            it.next()
                .ok_or_else(|| Error::InvalidInput(format!("orbit leaves the integer lattice at step {n}")))??;
        }
        Ok(spec)
    }

    pub fn name(&self) -> &str {
        self.label.as_deref().unwrap_or("custom")
    }

    /// Exact iterates γⁿ·v0 for n = 0, 1, 2, ...
    pub fn iter_points(&self) -> OrbitIter {
        let (scale, m) = self.gamma.scaled();
        OrbitIter {
            scale,
            m,
            cur: self.v0.clone(),
            n: 0,
            pending: None,
            done: false,
        }
    }
}

pub struct OrbitIter {
    scale: BigInt,
    m: [BigInt; 4],
    cur: (BigInt, BigInt),
    n: u32,
    pending: Option<Error>,
    done: bool,
}

impl Iterator for OrbitIter {
    type Item = Result<(BigInt, BigInt)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if let Some(e) = self.pending.take() {
            self.done = true;
            return Some(Err(e));
        }
        let (x, y) = &self.cur;
        let nx = &self.m[0] * x + &self.m[1] * y;
        let ny = &self.m[2] * x + &self.m[3] * y;
        let (qx, rx) = nx.div_rem(&self.scale);
        let (qy, ry) = ny.div_rem(&self.scale);
        self.n += 1;
        if rx.is_zero() && ry.is_zero() {
            Some(Ok(std::mem::replace(&mut self.cur, (qx, qy))))
        } else {
            self.pending = Some(Error::InvalidInput(format!(
                "orbit leaves the integer lattice at step {}",
                self.n
            )));
            Some(Ok(self.cur.clone()))
        }
    }
}

/// Orbits studied in the numerical examples.
pub const NAMED_ORBITS: [&str; 5] = [
    "fibonacci_lucas",
    "consecutive_fibonacci",
    "consecutive_lucas",
    "even_fibonacci",
    "consecutive_mersenne",
];

/// Point n of each named orbit:
///
/// | label | γ | v0 | point n |
/// |---|---|---|---|
/// | fibonacci_lucas | [[1/2,1/2],[5/2,1/2]] | (1,1) | (F_{n+1}, L_{n+1}) |
/// | consecutive_fibonacci | [[1,1],[1,0]] | (1,0) | (F_{n+1}, F_n) |
/// | consecutive_lucas | [[1,1],[1,0]] | (1,2) | (L_{n+1}, L_n) |
/// | even_fibonacci | [[3,1],[-1,0]] | (1,0) | (F_{2n+2}, -F_{2n}) |
/// | consecutive_mersenne | [[3,-2],[1,0]] | (1,0) | (M_{n+1}, M_n) |
pub fn named_orbit(label: &str) -> Result<OrbitSpec> {
    let half = |v: i64| BigRational::new(BigInt::from(v), BigInt::from(2));
    let c = |label, mult, offset| SeqCoord { label, mult, offset };
    let (gamma, v0, coords) = match label {
        "fibonacci_lucas" => (
            Mat2Q::new(half(1), half(1), half(5), half(1)),
            (1, 1),
            [c("F", 1, 1), c("L", 1, 1)],
        ),
        "consecutive_fibonacci" => (Mat2Q::from_integers(1, 1, 1, 0), (1, 0), [c("F", 1, 1), c("F", 1, 0)]),
        "consecutive_lucas" => (Mat2Q::from_integers(1, 1, 1, 0), (1, 2), [c("L", 1, 1), c("L", 1, 0)]),
        "even_fibonacci" => (Mat2Q::from_integers(3, 1, -1, 0), (1, 0), [c("F", 2, 2), c("F", 2, 0)]),
        "consecutive_mersenne" => (Mat2Q::from_integers(3, -2, 1, 0), (1, 0), [c("M", 1, 1), c("M", 1, 0)]),
        other => {
            return Err(Error::Unknown {
                kind: "orbit",
                name: other.to_string(),
            })
        }
    };
    let mut spec = OrbitSpec::new(gamma, (BigInt::from(v0.0), BigInt::from(v0.1)), Some(label.to_string()))?;
    spec.coords = Some(coords);
    Ok(spec)
}

/// Natural log of a positive big integer.
pub fn ln_big(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 64 {
        return v.to_u64().map_or(f64::NAN, |x| (x as f64).ln());
    }
    let shift = bits - 64;
    let top = (v >> shift).to_u64().unwrap_or(u64::MAX) as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// log log |xy|, absent when |xy| <= e.
pub fn log_log_product(x: &BigInt, y: &BigInt) -> Option<f64> {
    if x.is_zero() || y.is_zero() {
        return None;
    }
    let l = ln_big(x.magnitude()) + ln_big(y.magnitude());
    (l > 1.0).then(|| l.ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitPoint {
    pub n: u32,
    #[serde(serialize_with = "ser_display")]
    pub x: BigInt,
    #[serde(serialize_with = "ser_display")]
    pub y: BigInt,
    /// Ω(|xy|), absent when xy = 0.
    pub omega: Option<OmegaEstimate>,
    pub log_log: Option<f64>,
    pub ratio: Option<f64>,
    pub running_min: Option<f64>,
}

fn ser_display<S: serde::Serializer, T: fmt::Display>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

impl OrbitPoint {
    pub fn f_value(&self) -> BigInt {
        &self.x * &self.y
    }

    pub fn x_digits(&self) -> usize {
        digits(&self.x)
    }

    pub fn y_digits(&self) -> usize {
        digits(&self.y)
    }
}

pub fn digits(v: &BigInt) -> usize {
    v.magnitude().to_str_radix(10).len()
}

#[derive(Debug, Clone, Copy)]
pub struct IterateOptions<'a> {
    pub budget: u64,
    pub tables: Option<&'a FactorTables>,
    /// Iterate non-hyperbolic matrices too.
    pub allow_non_hyperbolic: bool,
}

impl Default for IterateOptions<'_> {
    fn default() -> Self {
        IterateOptions {
            budget: DEFAULT_RHO_BUDGET,
            tables: None,
            allow_non_hyperbolic: false,
        }
    }
}

/// Ω of each coordinate, memoized by value and by table index.
struct OmegaSource<'a> {
    factorizer: Factorizer,
    tables: Option<&'a FactorTables>,
    memo: HashMap<BigUint, OmegaEstimate>,
}

impl<'a> OmegaSource<'a> {
    fn new(budget: u64, tables: Option<&'a FactorTables>) -> Self {
        OmegaSource {
            factorizer: Factorizer::new(budget).with_prime_pool(),
            tables,
            memo: HashMap::new(),
        }
    }

    fn omega(&mut self, v: &BigUint, coord: Option<(&SeqCoord, u32)>) -> Result<OmegaEstimate> {
        if let Some(o) = self.memo.get(v) {
            return Ok(*o);
        }
        let entry = match (self.tables, coord) {
            (Some(t), Some((c, n))) => t.lookup(c.label, c.index(n)).map(|e| EntryRef {
                label: c.label,
                index: c.index(n),
                entry: e,
            }),
            _ => None,
        };
        let o = self.factorizer.omega_protocol(v, entry)?;
        self.memo.insert(v.clone(), o);
        Ok(o)
    }
}

/// Points n = 0..n_max−1 of the orbit with Ω(|xy|), ratio Ω/log log|xy|
/// and its running minimum.
pub fn iterate_orbit(spec: &OrbitSpec, n_max: u32, opts: IterateOptions<'_>) -> Result<Vec<OrbitPoint>> {
    if !opts.allow_non_hyperbolic && !is_hyperbolic(&spec.gamma) {
        return Err(Error::InvalidInput(format!(
            "{} is not hyperbolic (tr² − 4 det = {})",
            spec.gamma,
            spec.gamma.discriminant()
        )));
    }
    let mut source = OmegaSource::new(opts.budget, opts.tables);
    let mut running: Option<f64> = None;
    let mut out = Vec::with_capacity(n_max as usize);
    for (n, point) in (0..n_max).zip(spec.iter_points()) {
        let (x, y) = point?;
        let omega = if x.is_zero() || y.is_zero() {
            None
        } else {
            let cx = spec.coords.as_ref().map(|c| (&c[0], n));
            let cy = spec.coords.as_ref().map(|c| (&c[1], n));
            Some(source.omega(x.magnitude(), cx)? + source.omega(y.magnitude(), cy)?)
        };
        let log_log = log_log_product(&x, &y);
        let ratio = match (omega, log_log) {
            (Some(o), Some(l)) => Some(f64::from(o.value) / l),
            _ => None,
        };
        if let Some(r) = ratio {
            running = Some(running.map_or(r, |m: f64| m.min(r)));
        }
        out.push(OrbitPoint {
            n,
            x,
            y,
            omega,
            log_log,
            ratio,
            running_min: running,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub n_max: u64,
    pub checked: u64,
    /// Indices with L² − 5F² = +4 and = −4.
    pub pell_plus: u64,
    pub pell_minus: u64,
}

/// Checks F_{2n} = F_n L_n, L_n² − 5F_n² = 4(−1)^n and
/// M_{2ℓ} = M_ℓ(M_ℓ + 2) for 1 <= n, ℓ <= n_max.
pub fn verify_identities(n_max: u64) -> Result<IdentityReport> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let len = 2 * n_max as usize + 1;
    let mut f = vec![BigInt::zero(), BigInt::one()];
    let mut l = vec![BigInt::from(2), BigInt::one()];
    while f.len() < len {
        let i = f.len();
        f.push(&f[i - 1] + &f[i - 2]);
        l.push(&l[i - 1] + &l[i - 2]);
    }
    let mut report = IdentityReport {
        n_max,
        checked: 0,
        pell_plus: 0,
        pell_minus: 0,
    };
    let fail = |what: String| Err(Error::Consistency(what));
    let mut m = BigInt::one();
    let mut m2 = BigInt::from(3);
    for n in 1..=n_max as usize {
        if f[2 * n] != &f[n] * &l[n] {
            return fail(format!("F_{} != F_{n} L_{n}", 2 * n));
        }
        let pell = &l[n] * &l[n] - BigInt::from(5) * &f[n] * &f[n];
        let want = if n % 2 == 0 { 4 } else { -4 };
        if pell != BigInt::from(want) {
            return fail(format!("L_{n}² − 5F_{n}² = {pell}, expected {want}"));
        }
        if want > 0 {
            report.pell_plus += 1;
        } else {
            report.pell_minus += 1;
        }
        // m = M_n, m2 = M_{2n}
        if m2 != &m * (&m + 2) {
            return fail(format!("M_{} != M_{n}(M_{n} + 2)", 2 * n));
        }
        m = m * 2 + 1;
        m2 = m2 * 4 + 3;
        report.checked += 1;
    }
    Ok(report)
}
