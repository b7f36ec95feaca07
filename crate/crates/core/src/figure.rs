//! Ratio-series datasets with β reference lines, and their CSV/SVG forms.

use std::fmt::Write as _;
use std::io::{self, Write};

use serde::Serialize;

use crate::beta::solve_beta;
use crate::error::{Error, Result};
use crate::factor::{FactorTables, DEFAULT_RHO_BUDGET};
use crate::orbits::{iterate_orbit, named_orbit, IterateOptions, OrbitPoint, OrbitSpec};

/// Figure datasets skip points until log log|xy| exceeds this.
pub const MIN_LOG_LOG: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// log log |xy|
    LogLogProduct,
    /// log n
    LogIndex,
}

impl Denominator {
    pub fn as_str(self) -> &'static str {
        match self {
            Denominator::LogLogProduct => "log_log_product",
            Denominator::LogIndex => "log_index",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Marker {
    Plain,
    Even,
    Odd,
}

impl Marker {
    pub fn as_str(self) -> &'static str {
        match self {
            Marker::Plain => "plain",
            Marker::Even => "even",
            Marker::Odd => "odd",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigurePoint {
    pub index: u64,
    pub omega: u32,
    pub exact: bool,
    pub log_index: f64,
    pub log_log: Option<f64>,
    pub ratio: f64,
    pub marker: Marker,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefLine {
    pub k: u32,
    pub beta: f64,
    pub label: String,
}

impl RefLine {
    pub fn beta(k: u32) -> Result<Self> {
        Ok(RefLine {
            k,
            beta: solve_beta(k)?.beta,
            label: format!("beta_{k}"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureMeta {
    pub figure: Option<u8>,
    pub title: String,
    pub series: String,
    pub denominator: Denominator,
    pub protocol: String,
    /// Points whose Ω includes unresolved composites counted as two.
    pub unresolved_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureDataset {
    pub meta: FigureMeta,
    pub lines: Vec<RefLine>,
    pub points: Vec<FigurePoint>,
}

pub const PROTOCOL_NOTE: &str = "composites with no known factor count as two primes";

impl FigureDataset {
    pub fn new(meta: FigureMeta, lines: Vec<RefLine>, points: Vec<FigurePoint>) -> Self {
        let mut meta = meta;
        meta.unresolved_points = points.iter().filter(|p| !p.exact).count();
        FigureDataset { meta, lines, points }
    }

    /// Minimum ratio over points with index in `lo..=hi`.
    pub fn min_ratio(&self, lo: u64, hi: u64) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| (lo..=hi).contains(&p.index))
            .map(|p| p.ratio)
            .min_by(f64::total_cmp)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "index,omega,exact,log_index,log_log,ratio,marker")?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{:.6},{},{:.6},{}",
                p.index,
                p.omega,
                p.exact,
                p.log_index,
                p.log_log.map(|v| format!("{v:.6}")).unwrap_or_default(),
                p.ratio,
                p.marker.as_str()
            )?;
        }
        Ok(())
    }

    /// Self-contained SVG scatter plot. The first line is a version comment.
    pub fn to_svg(&self) -> String {
        const W: f64 = 800.0;
        const H: f64 = 500.0;
        const L: f64 = 60.0;
        const R: f64 = 20.0;
        const T: f64 = 40.0;
        const B: f64 = 50.0;
        let x_min = self.points.iter().map(|p| p.index).min().unwrap_or(0) as f64;
        let x_max = (self.points.iter().map(|p| p.index).max().unwrap_or(1) as f64).max(x_min + 1.0);
        let y_top = self
            .points
            .iter()
            .map(|p| p.ratio)
            .chain(self.lines.iter().map(|l| l.beta))
            .fold(1.0f64, f64::max)
            * 1.05;
        let sx = |x: f64| L + (x - x_min) / (x_max - x_min) * (W - L - R);
        let sy = |y: f64| H - B - y / y_top * (H - T - B);

        let mut s = String::new();
        let _ = writeln!(s, "<!-- toral {} -->", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            xml_escape(&self.meta.title)
        );
        let _ = writeln!(
            s,
            r#"<path d="M{L} {T} V{:.1} H{:.1}" fill="none" stroke="black"/>"#,
            H - B,
            W - R
        );
        for i in 0..=5 {
            let x = x_min + (x_max - x_min) * f64::from(i) / 5.0;
            let y = y_top * f64::from(i) / 5.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.0}</text>"#,
                sx(x),
                H - B + 18.0,
                x
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.2}</text>"#,
                L - 6.0,
                sy(y) + 4.0,
                y
            );
        }
        let ylabel = match self.meta.denominator {
            Denominator::LogLogProduct => "Omega / log log |xy|",
            Denominator::LogIndex => "Omega / log n",
        };
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">{ylabel}</text>"#,
            H / 2.0,
            H / 2.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">n</text>"#,
            W / 2.0,
            H - 10.0
        );
        for p in &self.points {
            let (r, fill) = match p.marker {
                Marker::Even => (3.0, "#c0392b"),
                Marker::Odd => (1.2, "#1f4e79"),
                Marker::Plain => (1.5, "#1f4e79"),
            };
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="{r}" fill="{fill}"/>"#,
                sx(p.index as f64),
                sy(p.ratio)
            );
        }
        for l in &self.lines {
            let y = sy(l.beta);
            let _ = writeln!(
                s,
                r##"<line x1="{L}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="#2e7d32" stroke-dasharray="6 4"/>"##,
                W - R
            );
            let _ = writeln!(
                s,
                r##"<text x="{:.1}" y="{:.2}" text-anchor="end" fill="#2e7d32">{} = {:.6}</text>"##,
                W - R - 4.0,
                y - 4.0,
                xml_escape(&l.label),
                l.beta
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Figure dataset from orbit points. `index_offset` maps orbit step n to
/// the plotted index n + offset.
pub fn dataset_from_orbit(
    points: &[OrbitPoint],
    meta: FigureMeta,
    lines: Vec<RefLine>,
    index_offset: u64,
    parity_marks: bool,
) -> FigureDataset {
    let pts = points
        .iter()
        .filter_map(|p| {
            let omega = p.omega?;
            let index = u64::from(p.n) + index_offset;
            let log_index = (index as f64).ln();
            let ratio = match meta.denominator {
                Denominator::LogLogProduct => {
                    let l = p.log_log.filter(|&l| l > MIN_LOG_LOG)?;
                    f64::from(omega.value) / l
                }
                Denominator::LogIndex => {
                    if index < 2 {
                        return None;
                    }
                    f64::from(omega.value) / log_index
                }
            };
            let marker = match (parity_marks, index % 2) {
                (false, _) => Marker::Plain,
                (true, 0) => Marker::Even,
                (true, _) => Marker::Odd,
            };
            Some(FigurePoint {
                index,
                omega: omega.value,
                exact: omega.exact,
                log_index,
                log_log: p.log_log,
                ratio,
                marker,
            })
        })
        .collect();
    FigureDataset::new(meta, lines, pts)
}

/// Ratio series of an orbit with β_k reference lines.
pub fn ratio_series_figure(
    spec: &OrbitSpec,
    n_max: u32,
    beta_lines: &[u32],
    opts: IterateOptions<'_>,
) -> Result<FigureDataset> {
    let points = iterate_orbit(spec, n_max, opts)?;
    let lines = beta_lines.iter().map(|&k| RefLine::beta(k)).collect::<Result<_>>()?;
    let meta = FigureMeta {
        figure: None,
        title: format!("{}: Omega(xy) / log log |xy|", spec.name()),
        series: spec.name().to_string(),
        denominator: Denominator::LogLogProduct,
        protocol: PROTOCOL_NOTE.into(),
        unresolved_points: 0,
    };
    Ok(dataset_from_orbit(&points, meta, lines, 0, false))
}

/// How one of the six figures is built.
#[derive(Debug, Clone, Copy)]
pub struct FigureRecipe {
    pub id: u8,
    pub orbit: &'static str,
    pub title: &'static str,
    pub betas: &'static [u32],
    pub denominator: Denominator,
    pub index_offset: u64,
    pub parity_marks: bool,
    /// Largest plotted index that is factored without tables by default.
    pub self_factor_limit: u64,
}

pub const FIGURES: [FigureRecipe; 6] = [
    FigureRecipe {
        id: 1,
        orbit: "fibonacci_lucas",
        title: "n vs Omega(F_n L_n) / log log(F_n L_n)",
        betas: &[2],
        denominator: Denominator::LogLogProduct,
        index_offset: 1,
        parity_marks: false,
        self_factor_limit: 400,
    },
    FigureRecipe {
        id: 2,
        orbit: "consecutive_fibonacci",
        title: "n vs Omega(F_n F_n+1) / log log(F_n F_n+1)",
        betas: &[3],
        denominator: Denominator::LogLogProduct,
        index_offset: 0,
        parity_marks: false,
        self_factor_limit: 400,
    },
    FigureRecipe {
        id: 3,
        orbit: "consecutive_lucas",
        title: "n vs Omega(L_n L_n+1) / log log(L_n L_n+1)",
        betas: &[2],
        denominator: Denominator::LogLogProduct,
        index_offset: 0,
        parity_marks: false,
        self_factor_limit: 400,
    },
    FigureRecipe {
        id: 4,
        orbit: "fibonacci_lucas",
        title: "n vs Omega(F_n L_n) / log log(F_n L_n), even n large marks",
        betas: &[2, 3],
        denominator: Denominator::LogLogProduct,
        index_offset: 1,
        parity_marks: true,
        self_factor_limit: 400,
    },
    FigureRecipe {
        id: 5,
        orbit: "even_fibonacci",
        title: "n vs Omega(F_2n F_2n+2) / log log(F_2n F_2n+2)",
        betas: &[4, 5],
        denominator: Denominator::LogLogProduct,
        index_offset: 0,
        parity_marks: false,
        self_factor_limit: 200,
    },
    FigureRecipe {
        id: 6,
        orbit: "consecutive_mersenne",
        title: "n vs Omega(M_n M_n+1) / log n",
        betas: &[3],
        denominator: Denominator::LogIndex,
        index_offset: 0,
        parity_marks: false,
        self_factor_limit: 400,
    },
];

pub fn figure_recipe(id: u8) -> Result<&'static FigureRecipe> {
    FIGURES.iter().find(|f| f.id == id).ok_or_else(|| Error::Unknown {
        kind: "figure",
        name: id.to_string(),
    })
}

/// Builds figure `id` for plotted indices up to `n_max`. Beyond the
/// recipe's self-factoring limit every coordinate must come from `tables`;
/// otherwise the missing indices are reported.
pub fn reproduce_figure(id: u8, tables: Option<&FactorTables>, n_max: u64, budget: u64) -> Result<FigureDataset> {
    let recipe = figure_recipe(id)?;
    let spec = named_orbit(recipe.orbit)?;
    let steps = (n_max + 1).saturating_sub(recipe.index_offset);
    let steps = u32::try_from(steps).map_err(|_| Error::InvalidInput(format!("n_max {n_max} too large")))?;

    if n_max > recipe.self_factor_limit {
        let coords = spec.coords.as_ref().expect("named orbits carry sequence coordinates");
        let lo = recipe.self_factor_limit + 1 - recipe.index_offset;
        let missing: Vec<u64> = (lo..u64::from(steps))
            .filter(|&n| {
                let n = n as u32;
                coords
                    .iter()
                    .any(|c| c.index(n) > 0 && tables.and_then(|t| t.lookup(c.label, c.index(n))).is_none())
            })
            .map(|n| n + recipe.index_offset)
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingTables(missing));
        }
    }

    let opts = IterateOptions {
        budget,
        tables,
        allow_non_hyperbolic: false,
    };
    let points = iterate_orbit(&spec, steps, opts)?;
    let lines = recipe.betas.iter().map(|&k| RefLine::beta(k)).collect::<Result<_>>()?;
    let meta = FigureMeta {
        figure: Some(id),
        title: format!("Figure {id}: {}", recipe.title),
        series: recipe.orbit.to_string(),
        denominator: recipe.denominator,
        protocol: PROTOCOL_NOTE.into(),
        unresolved_points: 0,
    };
    Ok(dataset_from_orbit(
        &points,
        meta,
        lines,
        recipe.index_offset,
        recipe.parity_marks,
    ))
}

/// [`reproduce_figure`] with the default rho budget.
pub fn reproduce_figure_default(id: u8, tables: Option<&FactorTables>, n_max: u64) -> Result<FigureDataset> {
    reproduce_figure(id, tables, n_max, DEFAULT_RHO_BUDGET)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::ingest_factor_table;
    use crate::sequences::fibonacci;

    #[test]
    fn empty_dataset_is_valid() {
        let spec = named_orbit("fibonacci_lucas").unwrap();
        let ds = ratio_series_figure(&spec, 0, &[2], IterateOptions::default()).unwrap();
        assert!(ds.points.is_empty());
        let mut csv = Vec::new();
        ds.write_csv(&mut csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "index,omega,exact,log_index,log_log,ratio,marker\n"
        );
        let svg = ds.to_svg();
        assert!(svg.starts_with("<!-- toral") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn lines_match_beta() {
        for f in FIGURES {
            let ds = reproduce_figure_default(f.id, None, 30).unwrap();
            let ks: Vec<u32> = ds.lines.iter().map(|l| l.k).collect();
            assert_eq!(ks, f.betas);
            for l in &ds.lines {
                assert_eq!(l.beta, solve_beta(l.k).unwrap().beta);
            }
        }
        assert!(figure_recipe(7).is_err());
    }

    #[test]
    fn ratios_recompute_from_columns() {
        for id in [1, 6] {
            let ds = reproduce_figure_default(id, None, 60).unwrap();
            for p in &ds.points {
                let den = match ds.meta.denominator {
                    Denominator::LogLogProduct => p.log_log.unwrap(),
                    Denominator::LogIndex => p.log_index,
                };
                assert!(den > MIN_LOG_LOG);
                assert!((p.ratio - f64::from(p.omega) / den).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn figure_one_indices_follow_sequence() {
        let ds = reproduce_figure_default(1, None, 40).unwrap();
        assert_eq!(ds.points.last().unwrap().index, 40);
        // F_10 L_10 = 55 · 123
        let p = ds.points.iter().find(|p| p.index == 10).unwrap();
        assert_eq!(p.omega, 4);
        assert!((p.ratio - 4.0 / (6765f64).ln().ln()).abs() < 1e-12);
    }

    #[test]
    fn figure_four_marks_parity() {
        let ds = reproduce_figure_default(4, None, 30).unwrap();
        for p in &ds.points {
            let want = if p.index % 2 == 0 { Marker::Even } else { Marker::Odd };
            assert_eq!(p.marker, want);
        }
        assert_eq!(ds.lines.len(), 2);
    }

    #[test]
    fn figure_six_uses_log_index() {
        let ds = reproduce_figure_default(6, None, 40).unwrap();
        assert_eq!(ds.meta.denominator, Denominator::LogIndex);
        assert_eq!(ds.points.first().unwrap().index, 2);
        // M_12 M_13: 3²·5·7·13 and the prime 8191
        let p = ds.points.iter().find(|p| p.index == 12).unwrap();
        assert_eq!(p.omega, 6);
    }

    #[test]
    fn missing_tables_are_listed() {
        match reproduce_figure_default(5, None, 203) {
            Err(Error::MissingTables(idx)) => assert_eq!(idx, vec![201, 202, 203]),
            other => panic!("{other:?}"),
        }
        let mut text = String::new();
        for i in [402u64, 404] {
            text.push_str(&format!("F {i} C{}\n", fibonacci(i).to_string().len()));
        }
        let tables = ingest_factor_table(text.as_bytes()).unwrap();
        let ds = reproduce_figure(5, Some(&tables), 201, 1 << 12).unwrap();
        let last = ds.points.last().unwrap();
        assert_eq!(last.index, 201);
        assert_eq!((last.omega, last.exact), (4, false));
        assert!(ds.meta.unresolved_points >= 1);
    }

    #[test]
    fn csv_is_deterministic() {
        let render = || {
            let mut out = Vec::new();
            reproduce_figure_default(2, None, 50)
                .unwrap()
                .write_csv(&mut out)
                .unwrap();
            out
        };
        assert_eq!(render(), render());
    }
}
