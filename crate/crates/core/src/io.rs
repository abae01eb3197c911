//! Text formats for spaces, lattices, weights, reports, stopping trees and
//! certificates.
//!
//! All formats are line based. Blank lines and lines starting with `#` are
//! ignored on input. Numbers are written in shortest round-trip form, so a
//! write/read cycle is lossless and output bytes depend only on the values.
//!
//! # Space
//!
//! ```text
//! space <n> <dim> <metric>
//! <id> <x_1> ... <x_dim> <mass>          # n lines, ids 0..n-1 in order
//! matrix                                 # explicit-matrix only
//! <i> <rho(i,0)> ... <rho(i,i-1)>        # i = 1..n-1
//! ```
//!
//! `<metric>` is `euclidean`, `linf`, `snowflake:<exponent>` or
//! `explicit-matrix`; the latter has `dim = 0`.
//!
//! # Lattice
//!
//! ```text
//! lattice <delta> <r0> <R0> <seed>
//! <level> <cube_id> <parent_id|-> <center> <member_count> <member_ids...>
//! ```
//!
//! Cube ids run `0..` in file order; children are rebuilt from parent links.
//!
//! # Weight
//!
//! ```text
//! <point_id> <value>                      # one line per point
//! ```
//!
//! # Records
//!
//! Reports, tree summaries and certificates are `key = value` lines under a
//! `[kind]` header line.

use std::fmt::{self, Display};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gehring::GehringCertificate;
use crate::lattice::{DyadicCube, DyadicLattice};
use crate::space::{FiniteSpace, Metric};
use crate::stopping::{CubeMeans, StopKind, StoppingTree};
use crate::weights::{CharacteristicReport, Weight};

/// Shortest round-trip decimal form; `inf`, `-inf` and `nan` for non-finite values.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error.to_string()))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            None
        } else {
            Some((i + 1, l.split_whitespace().collect()))
        }
    })
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn num<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| parse_err(line, format!("cannot read {tok:?}")))
}

fn float(line: usize, tok: &str) -> Result<f64> {
    match tok {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => num(line, tok),
    }
}

fn parse_metric(line: usize, tag: &str) -> Result<Option<Metric>> {
    match tag {
        "euclidean" => Ok(Some(Metric::Euclidean)),
        "linf" => Ok(Some(Metric::Linf)),
        "explicit-matrix" => Ok(None),
        _ => match tag.strip_prefix("snowflake:") {
            Some(e) => Ok(Some(Metric::Snowflake(float(line, e)?))),
            None => Err(parse_err(line, format!("unknown metric {tag:?}"))),
        },
    }
}

pub fn format_space(space: &FiniteSpace) -> String {
    let mut s = format!("space {} {} {}\n", space.len(), space.dim(), space.metric().tag());
    for i in 0..space.len() {
        s.push_str(&i.to_string());
        for c in space.coords(i) {
            s.push(' ');
            s.push_str(&fmt_f64(*c));
        }
        s.push(' ');
        s.push_str(&fmt_f64(space.mass(i)));
        s.push('\n');
    }
    if let Metric::Explicit(m) = space.metric() {
        let n = space.len();
        s.push_str("matrix\n");
        for i in 1..n {
            s.push_str(&i.to_string());
            for j in 0..i {
                s.push(' ');
                s.push_str(&fmt_f64(m[i * n + j]));
            }
            s.push('\n');
        }
    }
    s
}

/// Parses a space file; axiom violations surface as [`Error::InvalidSpace`].
pub fn parse_space(text: &str) -> Result<FiniteSpace> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(0, "empty space file"))?;
    if header.len() != 4 || header[0] != "space" {
        return Err(parse_err(hl, "expected `space <n> <dim> <metric>`"));
    }
    let n: usize = num(hl, header[1])?;
    let dim: usize = num(hl, header[2])?;
    let metric = parse_metric(hl, header[3])?;
    if metric.is_none() && dim != 0 {
        return Err(parse_err(hl, "explicit-matrix spaces have dim 0"));
    }
    let mut coords = Vec::with_capacity(n);
    let mut masses = Vec::with_capacity(n);
    for expect in 0..n {
        let (ln, toks) = lines.next().ok_or_else(|| parse_err(0, format!("missing point {expect}")))?;
        if toks.len() != dim + 2 {
            return Err(parse_err(ln, format!("expected id, {dim} coordinates and a mass")));
        }
        if num::<usize>(ln, toks[0])? != expect {
            return Err(parse_err(ln, format!("expected point id {expect}")));
        }
        coords.push(toks[1..=dim].iter().map(|t| float(ln, t)).collect::<Result<Vec<_>>>()?);
        masses.push(float(ln, toks[dim + 1])?);
    }
    let metric = match metric {
        Some(m) => m,
        None => {
            let (ml, toks) = lines.next().ok_or_else(|| parse_err(0, "missing matrix block"))?;
            if toks != ["matrix"] {
                return Err(parse_err(ml, "expected `matrix`"));
            }
            let mut m = vec![0.0; n * n];
            for i in 1..n {
                let (ln, toks) = lines.next().ok_or_else(|| parse_err(0, format!("missing matrix row {i}")))?;
                if toks.len() != i + 1 || num::<usize>(ln, toks[0])? != i {
                    return Err(parse_err(ln, format!("expected row {i} with {i} distances")));
                }
                for j in 0..i {
                    let d = float(ln, toks[j + 1])?;
                    m[i * n + j] = d;
                    m[j * n + i] = d;
                }
            }
            coords.clear();
            Metric::Explicit(m)
        }
    };
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "unexpected trailing content"));
    }
    FiniteSpace::new(coords, masses, metric)
}

pub fn format_lattice(lattice: &DyadicLattice) -> String {
    let mut s = format!(
        "lattice {} {} {} {}\n",
        fmt_f64(lattice.delta()),
        fmt_f64(lattice.r0()),
        fmt_f64(lattice.big_r0()),
        lattice.seed()
    );
    for (id, c) in lattice.cubes().iter().enumerate() {
        let parent = c.parent.map_or("-".to_string(), |p| p.to_string());
        s.push_str(&format!("{} {} {} {} {}", c.level, id, parent, c.center, c.members.len()));
        for m in &c.members {
            s.push(' ');
            s.push_str(&m.to_string());
        }
        s.push('\n');
    }
    s
}

pub fn parse_lattice(text: &str, space: &FiniteSpace) -> Result<DyadicLattice> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(0, "empty lattice file"))?;
    if header.len() != 5 || header[0] != "lattice" {
        return Err(parse_err(hl, "expected `lattice <delta> <r0> <R0> <seed>`"));
    }
    let delta = float(hl, header[1])?;
    let r0 = float(hl, header[2])?;
    let big_r0 = float(hl, header[3])?;
    let seed: u64 = num(hl, header[4])?;
    let mut cubes: Vec<DyadicCube> = Vec::new();
    for (ln, toks) in lines {
        if toks.len() < 5 {
            return Err(parse_err(ln, "expected `level id parent center count members...`"));
        }
        let level: i32 = num(ln, toks[0])?;
        if num::<usize>(ln, toks[1])? != cubes.len() {
            return Err(parse_err(ln, format!("expected cube id {}", cubes.len())));
        }
        let parent = match toks[2] {
            "-" => None,
            t => Some(num::<usize>(ln, t)?),
        };
        let center: usize = num(ln, toks[3])?;
        let count: usize = num(ln, toks[4])?;
        if toks.len() != 5 + count {
            return Err(parse_err(ln, format!("member count {count} does not match the line")));
        }
        let mut members = toks[5..].iter().map(|t| num::<usize>(ln, t)).collect::<Result<Vec<_>>>()?;
        members.sort_unstable();
        cubes.push(DyadicCube { level, center, members, parent, children: Vec::new() });
    }
    for id in 0..cubes.len() {
        if let Some(p) = cubes[id].parent {
            if p >= cubes.len() {
                return Err(Error::arg(format!("cube {id} names missing parent {p}")));
            }
            cubes[p].children.push(id);
        }
    }
    DyadicLattice::from_cubes(space, delta, seed, r0, big_r0, cubes)
}

pub fn format_weight(weight: &Weight) -> String {
    weight.values().iter().enumerate().map(|(i, v)| format!("{i} {}\n", fmt_f64(*v))).collect()
}

/// Parses a weight file for a space with `n` points; every id must appear once.
pub fn parse_weight(text: &str, n: usize) -> Result<Weight> {
    let mut values = vec![None; n];
    for (ln, toks) in content_lines(text) {
        if toks.len() != 2 {
            return Err(parse_err(ln, "expected `point_id value`"));
        }
        let id: usize = num(ln, toks[0])?;
        if id >= n {
            return Err(parse_err(ln, format!("point {id} outside a space of {n} points")));
        }
        if values[id].is_some() {
            return Err(parse_err(ln, format!("point {id} given twice")));
        }
        values[id] = Some(float(ln, toks[1])?);
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| parse_err(0, format!("no value for point {i}"))))
        .collect::<Result<Vec<_>>>()?;
    Weight::new(values)
}

/// Ordered `key = value` fields under a `[kind]` header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Record {
    pub kind: String,
    pub fields: Vec<(String, String)>,
}

impl Record {
    pub fn new(kind: impl Into<String>) -> Self {
        Record { kind: kind.into(), fields: Vec::new() }
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Display) -> &mut Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    pub fn push_f64(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.push(key, fmt_f64(value))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|f| f.0 == key).map(|f| f.1.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| float(0, v).ok())
    }

    /// Parses every record in a text, in order.
    pub fn parse_all(text: &str) -> Result<Vec<Record>> {
        let mut out: Vec<Record> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(kind) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                out.push(Record::new(kind));
                continue;
            }
            let (k, v) = match line.strip_suffix(" =") {
                Some(k) => (k, ""),
                None => line.split_once(" = ").ok_or_else(|| parse_err(i + 1, "expected `key = value`"))?,
            };
            out.last_mut()
                .ok_or_else(|| parse_err(i + 1, "field before any `[kind]` header"))?
                .fields
                .push((k.to_string(), v.to_string()));
        }
        Ok(out)
    }
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}]", self.kind)?;
        for (k, v) in &self.fields {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map_or("-".to_string(), |v| v.to_string())
}

pub fn report_record(report: &CharacteristicReport) -> Record {
    let mut r = Record::new("characteristic");
    r.push("class", report.class)
        .push_f64("exponent", report.exponent)
        .push("sigma", opt(report.sigma.map(fmt_f64)))
        .push_f64("value", report.value)
        .push("witness", opt(report.witness))
        .push("family_size", report.family_size)
        .push("skipped", report.skipped)
        .push("truncated", report.truncated);
    r
}

pub fn certificate_record(cert: &GehringCertificate) -> Record {
    let mut r = Record::new("certificate");
    r.push("mode", cert.mode)
        .push_f64("p", cert.p)
        .push_f64("rh_char", cert.rh_char)
        .push_f64("D", cert.d)
        .push_f64("lambda", cert.lambda)
        .push_f64("lambda_threshold", cert.lambda_threshold)
        .push("lambda_above_threshold", cert.lambda_above_threshold())
        .push_f64("c", cert.c)
        .push_f64("a", cert.a)
        .push_f64("a_literal", cert.a_literal)
        .push_f64("epsilon", cert.epsilon)
        .push_f64("A", cert.big_a)
        .push_f64("summability", cert.summability())
        .push_f64("char_bound", cert.char_bound)
        .push("remark_holds", cert.remark_holds);
    let p = &cert.provenance;
    r.push("lattice_seed", opt(p.lattice_seed))
        .push("depth", opt(p.depth.map(|(a, b)| format!("{a}..{b}"))))
        .push("cubes", opt(p.cubes))
        .push("points", opt(p.points));
    r
}

fn kind_tag(kind: Option<StopKind>) -> &'static str {
    match kind {
        None => "root",
        Some(StopKind::High) => "high",
        Some(StopKind::Low) => "low",
    }
}

/// One line per node (`generation cube_id kind mean ratio_to_root`) then a
/// summary line `summary c_measured=<c> masses=<m_0>,<m_1>,...`.
pub fn format_tree(tree: &StoppingTree, means: &CubeMeans, c_measured: f64) -> String {
    let root_mean = tree.nodes[0].mean;
    let mut s = String::from("# generation cube_id kind mean ratio_to_root\n");
    for g in &tree.generations {
        for &i in g {
            let node = &tree.nodes[i];
            s.push_str(&format!(
                "{} {} {} {} {}\n",
                node.generation,
                node.cube,
                kind_tag(node.kind),
                fmt_f64(node.mean),
                fmt_f64(node.mean / root_mean)
            ));
        }
    }
    let masses: Vec<String> = tree.generation_masses(means).iter().map(|m| fmt_f64(*m)).collect();
    s.push_str(&format!("summary c_measured={} masses={}\n", fmt_f64(c_measured), masses.join(",")));
    s
}

/// `generation,mass` series of a tree.
pub fn tree_mass_csv(tree: &StoppingTree, means: &CubeMeans) -> String {
    let mut s = String::from("generation,mass\n");
    for (n, m) in tree.generation_masses(means).iter().enumerate() {
        s.push_str(&format!("{n},{}\n", fmt_f64(*m)));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice_auto;

    #[test]
    fn space_round_trip() {
        let space = FiniteSpace::new(
            vec![vec![0.0, 0.1], vec![1.0 / 3.0, 2.0], vec![-1e-300, 5.5]],
            vec![0.5, 0.25, 1.0 / 7.0],
            Metric::Linf,
        )
        .unwrap();
        let text = format_space(&space);
        let back = parse_space(&text).unwrap();
        assert_eq!(format_space(&back), text);
        assert_eq!(back.coords(1), space.coords(1));
        assert_eq!(back.mass(2), space.mass(2));
    }

    #[test]
    fn explicit_round_trip() {
        let m = vec![0.0, 1.0, 2.5, 1.0, 0.0, 1.5, 2.5, 1.5, 0.0];
        let space = FiniteSpace::new(vec![], vec![1.0; 3], Metric::Explicit(m)).unwrap();
        let text = format_space(&space);
        assert!(text.contains("matrix\n1 1\n2 2.5 1.5\n"));
        let back = parse_space(&text).unwrap();
        assert_eq!(back.distance(0, 2), 2.5);
    }

    #[test]
    fn bad_mass_names_the_point() {
        let err = parse_space("space 2 1 euclidean\n0 0 1\n1 1 -2\n").unwrap_err();
        assert_eq!(err, Error::InvalidSpace { reason: "point 1 has mass -2".into() });
        let err = parse_space("space 2 1 euclidean\n0 0 1\n1 x 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn lattice_round_trip() {
        let space =
            FiniteSpace::new((0..20).map(|i| vec![i as f64 * 0.37]).collect(), vec![1.0; 20], Metric::Euclidean)
                .unwrap();
        let lat = build_lattice_auto(&space, 0.5, 3).unwrap();
        let text = format_lattice(&lat);
        let back = parse_lattice(&text, &space).unwrap();
        assert_eq!(back.cubes(), lat.cubes());
        assert_eq!(format_lattice(&back), text);
    }

    #[test]
    fn weight_round_trip_and_errors() {
        let w = Weight::new(vec![0.0, 1.5, 1e-20]).unwrap();
        assert_eq!(parse_weight(&format_weight(&w), 3).unwrap(), w);
        assert!(matches!(parse_weight("0 1\n0 2\n", 2), Err(Error::Parse { line: 2, .. })));
        assert!(parse_weight("0 1\n", 2).is_err());
    }

    #[test]
    fn records() {
        let mut r = Record::new("x");
        r.push("path", "a b").push_f64("v", 0.1).push("empty", "").push("q=1.5", "x=1");
        let text = r.to_string();
        let back = Record::parse_all(&text).unwrap();
        assert_eq!(back, vec![r]);
        assert_eq!(back[0].get_f64("v"), Some(0.1));
    }

    #[test]
    fn atomic_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.txt");
        write_atomic(&path, "hello\n").unwrap();
        write_atomic(&path, "again\n").unwrap();
        assert_eq!(read_text(&path).unwrap(), "again\n");
    }
}
