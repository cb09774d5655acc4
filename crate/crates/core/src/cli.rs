//! File formats and the `solve` / `verify` / `gen` / `bench` commands.
//!
//! Exit codes: 0 success, 1 verification failure, 2 parse error, 3 semantic
//! error, 4 capability error (the chosen algorithm cannot handle the instance).

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::{ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::instances::{embed_grid_graph, random_points, GridGraph, Parity};
use crate::norms::{
    build_tunnel_system, build_tunnel_system_quasi, four_facet_to_l1_transform, make_l1, make_linf, Point,
    PolyhedralNorm, QuasiNorm, TunnelSystem,
};
use crate::numeric::{format_scalar, parse_scalar, Scalar};
use crate::oracle::{
    brute_force_max_tour, brute_force_max_tour_directed, DistanceTable, MAX_DIRECTED, MAX_UNDIRECTED,
};
use crate::planar::solve_planar_detailed;
use crate::tour::{check_permutation, cycle_length};
use crate::tunneling::{solve_quasi_detailed, solve_tunnels_detailed, validate_selection, EdgeSelection, End, TypedEdge};

pub const FORMAT_VERSION: u32 = 1;

/// Relative tolerance when comparing floating-point tour lengths.
const FLOAT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid instance: {0}")]
    Semantic(String),
    #[error("unsupported: {0}")]
    Capability(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Semantic(_) => 3,
            CliError::Capability(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Semantic(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// A coordinate: exact rational (JSON integer or `"p/q"` string) or a float.
#[derive(Debug, Clone, PartialEq)]
pub enum Number {
    Exact(Scalar),
    Float(f64),
}

impl Number {
    pub fn int(v: i64) -> Self {
        Number::Exact(crate::numeric::int(v))
    }

    fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(v) => crate::numeric::to_f64(v),
            Number::Float(f) => *f,
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(v) => f.write_str(&format_scalar(v)),
            Number::Float(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Number::Exact(v) if v.is_integer() => match v.to_integer().to_i64() {
                Some(i) => s.serialize_i64(i),
                None => s.serialize_str(&format_scalar(v)),
            },
            Number::Exact(v) => s.serialize_str(&format_scalar(v)),
            Number::Float(v) => s.serialize_f64(*v),
        }
    }
}

struct NumberVisitor;

impl Visitor<'_> for NumberVisitor {
    type Value = Number;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an integer, a \"p/q\" string or a float")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Number, E> {
        Ok(Number::int(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Number, E> {
        Ok(Number::Exact(Scalar::from_integer(v.into())))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Number, E> {
        Ok(Number::Float(v))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Number, E> {
        parse_scalar(v).map(Number::Exact).map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Number, D::Error> {
        d.deserialize_any(NumberVisitor)
    }
}

/// Tour length: exact lengths are always written as strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Length(pub Number);

impl Serialize for Length {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match &self.0 {
            Number::Exact(v) => s.serialize_str(&format_scalar(v)),
            Number::Float(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Length {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Length, D::Error> {
        Number::deserialize(d).map(Length)
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Distance descriptor. Polyhedral norms list one vector per pair of opposite
/// facets; quasi-norms list every facet vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    L1,
    Linf,
    Polyhedral(Vec<Vec<Number>>),
    Quasi(Vec<Vec<Number>>),
    EuclideanFloat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub version: u32,
    pub dimension: usize,
    pub points: Vec<Vec<Number>>,
    pub metric: Metric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parity: Option<Vec<Parity>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndTag {
    F,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionEdge {
    pub city: usize,
    pub tunnel: usize,
    pub end: EndTag,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolutionMetadata {
    /// Written as a string since ranks can exceed 64 bits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identifier_rank: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Vec<SelectionEdge>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub version: u32,
    pub algorithm: String,
    pub tour: Vec<usize>,
    pub length: Length,
    #[serde(default)]
    pub metadata: SolutionMetadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Auto,
    Tunnel,
    Planar,
    Oracle,
    Quasi,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::Auto => "auto",
            Algorithm::Tunnel => "tunnel",
            Algorithm::Planar => "planar",
            Algorithm::Oracle => "oracle",
            Algorithm::Quasi => "quasi",
        }
    }
}

/// A validated instance.
#[derive(Debug, Clone)]
pub enum Problem {
    Norm { points: Vec<Point>, norm: PolyhedralNorm },
    Quasi { points: Vec<Point>, qnorm: QuasiNorm },
    Float { points: Vec<Vec<f64>> },
}

impl Problem {
    pub fn n(&self) -> usize {
        match self {
            Problem::Norm { points, .. } | Problem::Quasi { points, .. } => points.len(),
            Problem::Float { points } => points.len(),
        }
    }

    /// Tunnel system of an exact instance; quasi-norms give a directed one.
    pub fn tunnel_system(&self) -> CliResult<TunnelSystem> {
        match self {
            Problem::Norm { points, norm } => Ok(build_tunnel_system(norm, points)?),
            Problem::Quasi { points, qnorm } => Ok(build_tunnel_system_quasi(qnorm, points)?),
            Problem::Float { .. } => Err(CliError::Capability("floating-point instances have no tunnel system".into())),
        }
    }
}

fn exact_vec(v: &[Number], what: &str) -> CliResult<Vec<Scalar>> {
    v.iter()
        .map(|c| match c {
            Number::Exact(s) => Ok(s.clone()),
            Number::Float(_) => Err(CliError::Semantic(format!("{what} must be exact, found a float"))),
        })
        .collect()
}

impl InstanceFile {
    pub fn from_points(points: &[Point], metric: Metric) -> Self {
        InstanceFile {
            version: FORMAT_VERSION,
            dimension: points.first().map_or(0, Point::dim),
            points: points.iter().map(|p| p.coords.iter().cloned().map(Number::Exact).collect()).collect(),
            metric,
            parity: None,
        }
    }

    pub fn problem(&self) -> CliResult<Problem> {
        if self.version != FORMAT_VERSION {
            return Err(CliError::Semantic(format!("unsupported format version {}", self.version)));
        }
        let d = self.dimension;
        if d == 0 {
            return Err(CliError::Semantic("dimension must be positive".into()));
        }
        if let Some(p) = self.points.iter().find(|p| p.len() != d) {
            return Err(CliError::Semantic(Error::DimensionMismatch { expected: d, found: p.len() }.to_string()));
        }
        if let Some(par) = &self.parity {
            if par.len() != self.points.len() {
                return Err(CliError::Semantic("parity tags and points differ in count".into()));
            }
        }
        let exact_points = || -> CliResult<Vec<Point>> {
            self.points.iter().map(|p| exact_vec(p, "coordinates").map(Point::new)).collect()
        };
        let vectors = |vs: &[Vec<Number>]| -> CliResult<Vec<Vec<Scalar>>> {
            vs.iter().map(|v| exact_vec(v, "facet vectors")).collect()
        };
        Ok(match &self.metric {
            Metric::L1 => Problem::Norm { points: exact_points()?, norm: make_l1(d)? },
            Metric::Linf => Problem::Norm { points: exact_points()?, norm: make_linf(d)? },
            Metric::Polyhedral(vs) => Problem::Norm { points: exact_points()?, norm: PolyhedralNorm::new(d, vectors(vs)?)? },
            Metric::Quasi(vs) => Problem::Quasi { points: exact_points()?, qnorm: QuasiNorm::new(d, vectors(vs)?)? },
            Metric::EuclideanFloat => {
                Problem::Float { points: self.points.iter().map(|p| p.iter().map(Number::to_f64).collect()).collect() }
            }
        })
    }
}

pub fn parse_instance(text: &str) -> CliResult<InstanceFile> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

pub fn parse_solution(text: &str) -> CliResult<SolutionFile> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("formats serialize infallibly") + "\n"
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn selection_to_file(sel: &EdgeSelection) -> Vec<SelectionEdge> {
    sel.typed_edges
        .iter()
        .map(|e| SelectionEdge {
            city: e.city,
            tunnel: e.tunnel,
            end: match e.end {
                End::Front => EndTag::F,
                End::Back => EndTag::B,
            },
        })
        .collect()
}

fn planar_capable(norm: &PolyhedralNorm) -> bool {
    four_facet_to_l1_transform(norm).is_ok()
}

/// Solves an instance with the requested algorithm.
///
/// `auto` uses the planar solver for two-dimensional norms with four facets,
/// the directed tunnel solver for quasi-norms, the tunnel solver for other
/// norms, and the brute-force oracle for small floating-point instances.
pub fn solve_instance(inst: &InstanceFile, algorithm: Algorithm) -> CliResult<SolutionFile> {
    let problem = inst.problem()?;
    let n = problem.n();
    let chosen = match (&problem, algorithm) {
        (Problem::Norm { norm, .. }, Algorithm::Auto) if planar_capable(norm) => Algorithm::Planar,
        (Problem::Norm { .. }, Algorithm::Auto) => Algorithm::Tunnel,
        (Problem::Quasi { .. }, Algorithm::Auto) => Algorithm::Quasi,
        (Problem::Float { .. }, Algorithm::Auto) => Algorithm::Oracle,
        (_, a) => a,
    };
    let mut metadata = SolutionMetadata::default();
    let (tour, length) = match (&problem, chosen) {
        (Problem::Float { points }, Algorithm::Oracle) => {
            if !(3..=MAX_UNDIRECTED).contains(&n) {
                return Err(CliError::Capability(format!(
                    "floating-point instances are solved by brute force only, for 3 to {MAX_UNDIRECTED} points"
                )));
            }
            let table = DistanceTable::from_fn(n, true, |a, b| euclid(&points[a], &points[b]))?;
            let t = brute_force_max_tour(&table)?;
            (t.order, Number::Float(t.length))
        }
        (Problem::Float { .. }, a) => {
            return Err(CliError::Capability(format!("algorithm {} needs exact coordinates", a.name())));
        }
        (Problem::Norm { points, norm }, Algorithm::Planar) => {
            if norm.dimension() != 2 || !planar_capable(norm) {
                return Err(CliError::Capability("planar solver needs a 2D norm with 4 facets".into()));
            }
            let sol = solve_planar_detailed(points, norm)?;
            metadata.case = Some(sol.case.label().to_string());
            (sol.tour.order, Number::Exact(sol.tour.length))
        }
        (Problem::Quasi { .. }, Algorithm::Planar | Algorithm::Tunnel) => {
            return Err(CliError::Capability(format!(
                "algorithm {} handles symmetric norms only; use quasi",
                chosen.name()
            )));
        }
        (_, Algorithm::Tunnel | Algorithm::Quasi) => {
            let ts = problem.tunnel_system()?;
            let sol = if chosen == Algorithm::Tunnel { solve_tunnels_detailed(&ts)? } else { solve_quasi_detailed(&ts)? };
            metadata.identifier_rank = sol.identifier_rank.map(|r| r.to_string());
            metadata.selection = sol.selection.as_ref().map(selection_to_file);
            (sol.tour.order, Number::Exact(sol.tour.length))
        }
        (_, Algorithm::Oracle) => {
            let ts = problem.tunnel_system()?;
            let table = DistanceTable::from_tunnels(&ts)?;
            let cap = if ts.is_symmetric() { MAX_UNDIRECTED } else { MAX_DIRECTED };
            if !(3..=cap).contains(&n) {
                return Err(CliError::Capability(format!("oracle handles 3 to {cap} points, got {n}")));
            }
            let t = if ts.is_symmetric() { brute_force_max_tour(&table)? } else { brute_force_max_tour_directed(&table)? };
            (t.order, Number::Exact(t.length))
        }
        (_, Algorithm::Auto) => unreachable!("auto is resolved above"),
    };
    Ok(SolutionFile { version: FORMAT_VERSION, algorithm: chosen.name().to_string(), tour, length: Length(length), metadata })
}

/// Outcome of checking a solution against its instance.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub ok: bool,
    pub recomputed_length: Number,
    pub problems: Vec<String>,
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", if self.ok { "OK" } else { "FAILED" })?;
        writeln!(f, "recomputed length: {}", self.recomputed_length)?;
        for p in &self.problems {
            writeln!(f, "- {p}")?;
        }
        Ok(())
    }
}

/// Recomputes the tour length exactly and replays the edge selection if present.
pub fn verify_solution(inst: &InstanceFile, sol: &SolutionFile) -> CliResult<VerifyReport> {
    let problem = inst.problem()?;
    let n = problem.n();
    let mut problems = Vec::new();
    if let Err(e) = check_permutation(&sol.tour, n) {
        return Ok(VerifyReport { ok: false, recomputed_length: Number::int(0), problems: vec![e.to_string()] });
    }
    let recomputed = match &problem {
        Problem::Float { points } => {
            let len = cycle_length(&sol.tour, |a, b| euclid(&points[a], &points[b]));
            let claimed = sol.length.0.to_f64();
            if (len - claimed).abs() > FLOAT_TOLERANCE * len.abs().max(1.0) {
                problems.push(format!("claimed length {claimed} but the tour measures {len}"));
            }
            Number::Float(len)
        }
        _ => {
            let ts = problem.tunnel_system()?;
            let len = cycle_length(&sol.tour, |a, b| ts.distance(a, b));
            match &sol.length.0 {
                Number::Exact(claimed) if *claimed == len => {}
                claimed => problems.push(format!("claimed length {claimed} but the tour measures {}", format_scalar(&len))),
            }
            if let Some(edges) = &sol.metadata.selection {
                let ts = if sol.algorithm == "quasi" { ts.to_directed() } else { ts };
                replay_selection(&ts, edges, &len, &mut problems);
            }
            Number::Exact(len)
        }
    };
    Ok(VerifyReport { ok: problems.is_empty(), recomputed_length: recomputed, problems })
}

fn replay_selection(ts: &TunnelSystem, edges: &[SelectionEdge], len: &Scalar, problems: &mut Vec<String>) {
    if edges.iter().any(|e| e.city >= ts.n_cities() || e.tunnel >= ts.n_tunnels()) {
        problems.push("selection refers to a city or tunnel that does not exist".into());
        return;
    }
    let typed_edges: Vec<TypedEdge> = edges
        .iter()
        .map(|e| TypedEdge {
            city: e.city,
            tunnel: e.tunnel,
            end: match e.end {
                EndTag::F => End::Front,
                EndTag::B => End::Back,
            },
        })
        .collect();
    let weight = typed_edges.iter().fold(Scalar::zero(), |acc, e| {
        acc + match e.end {
            End::Front => ts.front(e.city, e.tunnel),
            End::Back => ts.back(e.city, e.tunnel),
        }
    });
    let sel = EdgeSelection { typed_edges, weight };
    if !validate_selection(ts, &sel) {
        problems.push("edge selection violates the degree, balance or connectivity condition".into());
    } else if sel.weight != *len {
        problems.push(format!("edge selection weighs {} but the tour measures {}", format_scalar(&sel.weight), format_scalar(len)));
    }
}

pub fn solve_command(input: &Path, algorithm: Algorithm) -> CliResult<SolutionFile> {
    solve_instance(&parse_instance(&read_file(input)?)?, algorithm)
}

pub fn verify_command(instance: &Path, solution: &Path) -> CliResult<VerifyReport> {
    let inst = parse_instance(&read_file(instance)?)?;
    let sol = parse_solution(&read_file(solution)?)?;
    verify_solution(&inst, &sol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RandomMetric {
    L1,
    Linf,
    /// Asymmetric triangle quasi-norm (2D only).
    Triangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridShape {
    Rectangle,
    Ring,
    Path,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GenRequest {
    Random { n: usize, dimension: usize, bound: i64, metric: RandomMetric, seed: u64 },
    GridSphere { shape: GridShape, width: usize, height: usize, n: usize, seed: u64 },
}

pub fn gen_command(req: &GenRequest) -> CliResult<InstanceFile> {
    match *req {
        GenRequest::Random { n, dimension, bound, metric, seed } => {
            if n == 0 || dimension == 0 {
                return Err(CliError::Semantic("need at least one point and one dimension".into()));
            }
            let metric = match metric {
                RandomMetric::L1 => Metric::L1,
                RandomMetric::Linf => Metric::Linf,
                RandomMetric::Triangle if dimension == 2 => Metric::Quasi(
                    QuasiNorm::triangle()
                        .facets()
                        .iter()
                        .map(|v| v.iter().cloned().map(Number::Exact).collect())
                        .collect(),
                ),
                RandomMetric::Triangle => {
                    return Err(CliError::Capability("the triangle quasi-norm is two-dimensional".into()))
                }
            };
            Ok(InstanceFile::from_points(&random_points(n, dimension, bound, seed), metric))
        }
        GenRequest::GridSphere { shape, width, height, n, seed } => {
            let g = match shape {
                GridShape::Rectangle => GridGraph::rectangle(width, height),
                GridShape::Ring => GridGraph::ring(width, height),
                GridShape::Path => GridGraph::path(n),
                GridShape::Random => GridGraph::random_connected(n, seed),
            }?;
            let emb = embed_grid_graph(&g)?;
            Ok(InstanceFile {
                version: FORMAT_VERSION,
                dimension: 3,
                points: emb.points.iter().map(|p| p.iter().map(|&c| Number::Float(c)).collect()).collect(),
                metric: Metric::EuclideanFloat,
                parity: Some(emb.parity),
            })
        }
    }
}

/// Median wall time of `repeats` runs for each size, on seeded random planar points.
pub fn bench_command(algorithm: Algorithm, sizes: &[usize], repeats: usize, seed: u64) -> CliResult<Vec<(usize, Duration)>> {
    if !matches!(algorithm, Algorithm::Planar | Algorithm::Tunnel) {
        return Err(CliError::Capability("bench supports the planar and tunnel solvers".into()));
    }
    let norm = make_l1(2)?;
    sizes
        .iter()
        .map(|&n| {
            let points = random_points(n, 2, 1_000_000, seed ^ n as u64);
            let mut times = Vec::with_capacity(repeats.max(1));
            for _ in 0..repeats.max(1) {
                let start = Instant::now();
                match algorithm {
                    Algorithm::Planar => {
                        solve_planar_detailed(&points, &norm)?;
                    }
                    _ => {
                        solve_tunnels_detailed(&build_tunnel_system(&norm, &points)?)?;
                    }
                }
                times.push(start.elapsed());
            }
            times.sort();
            Ok((n, times[times.len() / 2]))
        })
        .collect()
}

/// Parses `"1e4,2e4,50000"` into sizes.
pub fn parse_sizes(text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(|s| {
            let v: f64 = s.trim().parse().map_err(|_| CliError::Parse(format!("bad size {s:?}")))?;
            if v < 1.0 || v.fract() != 0.0 || v > 1e9 {
                return Err(CliError::Parse(format!("size {s:?} is not a positive integer")));
            }
            Ok(v as usize)
        })
        .collect()
}

#[derive(Debug, Parser)]
#[command(name = "maxtsp", version, about = "Exact maximum traveling salesman tours under polyhedral distances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve an instance file.
    Solve {
        #[arg(long, value_enum, default_value = "auto")]
        algorithm: Algorithm,
        #[arg(long)]
        input: PathBuf,
        /// Defaults to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a solution against its instance.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Generate an instance file.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dimension: usize,
        #[arg(long, default_value_t = 20)]
        bound: i64,
        #[arg(long, value_enum, default_value = "l1")]
        metric: RandomMetric,
        #[arg(long, value_enum, default_value = "rectangle")]
        shape: GridShape,
        #[arg(long, default_value_t = 2)]
        width: usize,
        #[arg(long, default_value_t = 3)]
        height: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Time a solver on random instances; prints CSV of size and seconds.
    Bench {
        #[arg(long, value_enum, default_value = "planar")]
        algorithm: Algorithm,
        #[arg(long, default_value = "1e4,2e4,4e4")]
        sizes: String,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Random,
    GridSphere,
}

fn emit(text: &str, output: Option<&Path>, out: &mut dyn Write) -> CliResult<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Semantic(format!("{}: {e}", path.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| CliError::Semantic(e.to_string())),
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> CliResult<i32> {
    match command {
        Command::Solve { algorithm, input, output } => {
            let sol = solve_command(&input, algorithm)?;
            emit(&to_json(&sol), output.as_deref(), out)?;
            Ok(0)
        }
        Command::Verify { instance, solution } => {
            let report = verify_command(&instance, &solution)?;
            emit(&report.to_string(), None, out)?;
            Ok(if report.ok { 0 } else { CliError::Verification(String::new()).exit_code() })
        }
        Command::Gen { kind, n, dimension, bound, metric, shape, width, height, seed, output } => {
            let req = match kind {
                GenKind::Random => GenRequest::Random { n, dimension, bound, metric, seed },
                GenKind::GridSphere => GenRequest::GridSphere { shape, width, height, n, seed },
            };
            emit(&to_json(&gen_command(&req)?), output.as_deref(), out)?;
            Ok(0)
        }
        Command::Bench { algorithm, sizes, repeats, seed } => {
            let rows = bench_command(algorithm, &parse_sizes(&sizes)?, repeats, seed)?;
            let mut csv = String::from("n,seconds\n");
            for (n, t) in rows {
                csv.push_str(&format!("{n},{:.6}\n", t.as_secs_f64()));
            }
            emit(&csv, None, out)?;
            Ok(0)
        }
    }
}

/// Runs the command line, writing results to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ratio;

    fn square() -> InstanceFile {
        let pts: Vec<Point> = [(0, 0), (1, 0), (0, 1), (1, 1)].iter().map(|&(x, y)| Point::from_ints(&[x, y])).collect();
        InstanceFile::from_points(&pts, Metric::L1)
    }

    #[test]
    fn number_formats() {
        let inst = parse_instance(
            r#"{"version":1,"dimension":2,"points":[[1,"3/6"],[" -4/2 ",2.5]],"metric":{"polyhedral":[[1,0],[0,1]]}}"#,
        )
        .unwrap();
        assert_eq!(inst.points[0][1], Number::Exact(ratio(1, 2)));
        assert_eq!(inst.points[1][0], Number::int(-2));
        assert_eq!(inst.points[1][1], Number::Float(2.5));
        let text = to_json(&inst);
        assert!(text.contains("\"1/2\""));
        assert_eq!(parse_instance(&text).unwrap(), inst);
        assert!(matches!(inst.problem(), Err(CliError::Semantic(_))));
    }

    #[test]
    fn metric_tags() {
        for (m, tag) in [(Metric::L1, "\"l1\""), (Metric::Linf, "\"linf\""), (Metric::EuclideanFloat, "\"euclidean-float\"")] {
            assert_eq!(serde_json::to_string(&m).unwrap(), tag);
        }
        let q = serde_json::to_string(&Metric::Quasi(vec![vec![Number::int(1), Number::int(0)]])).unwrap();
        assert_eq!(q, r#"{"quasi":[[1,0]]}"#);
    }

    #[test]
    fn square_auto_and_oracle_agree() {
        let auto = solve_instance(&square(), Algorithm::Auto).unwrap();
        assert_eq!(auto.algorithm, "planar");
        assert_eq!(auto.length, Length(Number::int(6)));
        assert!(auto.metadata.case.is_some());
        assert!(to_json(&auto).contains("\"length\": \"6\""));
        let oracle = solve_instance(&square(), Algorithm::Oracle).unwrap();
        assert_eq!(oracle.length, auto.length);
        let tunnel = solve_instance(&square(), Algorithm::Tunnel).unwrap();
        assert!(tunnel.metadata.identifier_rank.is_some() && tunnel.metadata.selection.is_some());
        for sol in [auto, oracle, tunnel] {
            assert!(verify_solution(&square(), &sol).unwrap().ok);
            assert_eq!(parse_solution(&to_json(&sol)).unwrap(), sol);
        }
    }

    #[test]
    fn tampering_is_caught() {
        let sol = solve_instance(&square(), Algorithm::Tunnel).unwrap();
        let mut bad_len = sol.clone();
        bad_len.length = Length(Number::int(7));
        assert!(!verify_solution(&square(), &bad_len).unwrap().ok);
        let mut bad_tour = sol.clone();
        bad_tour.tour = vec![0, 1, 3, 2];
        let report = verify_solution(&square(), &bad_tour).unwrap();
        assert!(!report.ok);
        assert_eq!(report.recomputed_length, Number::int(4));
        let mut bad_sel = sol.clone();
        bad_sel.metadata.selection.as_mut().unwrap()[0].end = match sol.metadata.selection.as_ref().unwrap()[0].end {
            EndTag::F => EndTag::B,
            EndTag::B => EndTag::F,
        };
        assert!(!verify_solution(&square(), &bad_sel).unwrap().ok);
        let mut dup = sol;
        dup.tour = vec![0, 0, 1, 2];
        assert!(!verify_solution(&square(), &dup).unwrap().ok);
    }

    #[test]
    fn capability_and_semantic_errors() {
        let tri = gen_command(&GenRequest::Random { n: 5, dimension: 2, bound: 5, metric: RandomMetric::Triangle, seed: 3 }).unwrap();
        assert_eq!(solve_instance(&tri, Algorithm::Tunnel).unwrap_err().exit_code(), 4);
        assert_eq!(solve_instance(&tri, Algorithm::Planar).unwrap_err().exit_code(), 4);
        let auto = solve_instance(&tri, Algorithm::Auto).unwrap();
        assert_eq!(auto.length, solve_instance(&tri, Algorithm::Oracle).unwrap().length);
        assert!(verify_solution(&tri, &auto).unwrap().ok);
        let big = gen_command(&GenRequest::Random { n: 12, dimension: 3, bound: 5, metric: RandomMetric::Linf, seed: 3 }).unwrap();
        assert_eq!(solve_instance(&big, Algorithm::Oracle).unwrap_err().exit_code(), 4);
        assert_eq!(solve_instance(&big, Algorithm::Planar).unwrap_err().exit_code(), 4);
        assert_eq!(solve_instance(&big, Algorithm::Auto).unwrap().algorithm, "tunnel");
        let mut ragged = square();
        ragged.points[1].push(Number::int(3));
        assert_eq!(ragged.problem().unwrap_err().exit_code(), 3);
        assert_eq!(parse_instance("{not json").unwrap_err().exit_code(), 2);
        assert_eq!(parse_instance(r#"{"version":1,"dimension":2,"points":[],"metric":"l3"}"#).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn grid_sphere_generation() {
        let req = GenRequest::GridSphere { shape: GridShape::Rectangle, width: 2, height: 3, n: 0, seed: 0 };
        let inst = gen_command(&req).unwrap();
        assert_eq!(inst.metric, Metric::EuclideanFloat);
        assert_eq!(inst.points.len(), 6);
        assert_eq!(inst.parity.as_ref().unwrap().iter().filter(|&&p| p == Parity::Even).count(), 3);
        let text = to_json(&inst);
        assert_eq!(text, to_json(&gen_command(&req).unwrap()));
        assert_eq!(parse_instance(&text).unwrap(), inst);
        let sol = solve_instance(&inst, Algorithm::Auto).unwrap();
        assert_eq!(sol.algorithm, "oracle");
        assert!(verify_solution(&inst, &sol).unwrap().ok);
        assert_eq!(solve_instance(&inst, Algorithm::Tunnel).unwrap_err().exit_code(), 4);
    }

    #[test]
    fn sizes_and_bench() {
        assert_eq!(parse_sizes("1e4, 2e4,7").unwrap(), vec![10_000, 20_000, 7]);
        assert!(parse_sizes("1.5").is_err());
        assert!(parse_sizes("x").is_err());
        let rows = bench_command(Algorithm::Planar, &[50, 100], 1, 1).unwrap();
        assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![50, 100]);
        assert_eq!(bench_command(Algorithm::Oracle, &[5], 1, 1).unwrap_err().exit_code(), 4);
    }

    #[test]
    fn command_line_exit_codes() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(run(["maxtsp", "gen", "random", "--n", "6", "--seed", "4"], &mut out, &mut err), 0);
        assert!(parse_instance(std::str::from_utf8(&out).unwrap()).is_ok());
        assert_eq!(run(["maxtsp", "frobnicate"], &mut Vec::new(), &mut err), 2);
        assert_eq!(run(["maxtsp", "solve", "--input", "/nonexistent/x.json"], &mut Vec::new(), &mut Vec::new()), 2);
        assert_eq!(run(["maxtsp", "bench", "--sizes", "100", "--repeats", "1"], &mut Vec::new(), &mut Vec::new()), 0);
    }
}
