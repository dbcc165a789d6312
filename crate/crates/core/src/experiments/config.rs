//! Study configuration.
//!
//! One `key = value` pair per line; `#` starts a comment. Numbers accept the
//! forms `1.5`, `pi`, `2pi`, `pi/2`, `3*pi/4`. Only `f` is required.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `domain` | `interval` | `interval` or `rectangle` |
//! | `a`, `b` | `0`, `pi` | interval ends |
//! | `lx`, `ly` | `pi`, `pi` | rectangle sides |
//! | `partition` | `left` / `bottom:0:lx/2` | Dirichlet arcs, `edge:t0:t1; …`, a bare edge, or `all` |
//! | `family_anchor` | `bottom:lx/2` | anchor of the moving family, `edge:t` |
//! | `family_direction` | `ccw` | `ccw` or `cw` |
//! | `epsilon` | `|∂Ω|/20` | lower end of the α range |
//! | `alphas` | evenly spaced | comma list |
//! | `alpha_count` | `6` | number of evenly spaced α values |
//! | `s` | `0.75` | fractional order in (1/2, 1) |
//! | `f` | required | `constant[:c]`, `mode:j`, `bump[:x:y:w]`, `step[:x0]`, `csv:path` |
//! | `n` | `129` / `33` | nodes per axis |
//! | `modes` | `auto` | eigenpairs kept |
//! | `cyl_height` | `auto` | `8/√λ_1` when `auto` |
//! | `cyl_levels` | `128` / `32` | cells in `y` |
//! | `cyl_grading` | `2` | grading exponent `q` |
//! | `p` | `2` | exponent of the `L^∞` check |
//! | `gamma` | `0.4` | Hölder exponent |
//! | `radius` | `auto` | largest oscillation radius |
//! | `radius_count` | `5` | number of radii |
//! | `radius_factor` | `4` | ratio between radii |
//! | `refine` | `true` | run the refined equivalence level |
//! | `seed` | `0xF2AC` | sampling seed |
//! | `lemma_tuples` | `20` | parameter tuples per iteration lemma |

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{make_domain, BoundaryArc, BoundaryPartition, Direction, DomainSpec, Edge, MovingFamily};
use crate::regularity::PAIR_SEED;
use crate::spectral::FracParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FProfile {
    Constant { value: f64 },
    Mode { index: usize },
    Bump { center: [f64; 2], width: f64 },
    Step { x0: f64 },
    Csv { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub anchor_edge: Edge,
    pub anchor_t: f64,
    pub direction: Direction,
    pub epsilon: f64,
}

impl FamilySpec {
    pub fn build(&self, domain: DomainSpec) -> Result<MovingFamily> {
        MovingFamily::new(domain, self.anchor_edge, self.anchor_t, self.direction, self.epsilon)
    }
}

/// Fully resolved configuration; every default is filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub domain: DomainSpec,
    pub partition: BoundaryPartition,
    pub family: Option<FamilySpec>,
    pub alphas: Vec<f64>,
    pub s: f64,
    pub f: FProfile,
    pub n: usize,
    pub modes: Option<usize>,
    pub cyl_height: Option<f64>,
    pub cyl_levels: usize,
    pub cyl_grading: f64,
    pub p: f64,
    pub gamma: f64,
    pub radius: Option<f64>,
    pub radius_count: usize,
    pub radius_factor: f64,
    pub refine: bool,
    pub seed: u64,
    pub lemma_tuples: usize,
}

impl StudyConfig {
    /// Defaults for a domain with the given load.
    pub fn defaults(domain: DomainSpec, f: FProfile) -> Result<Self> {
        let text = match domain {
            DomainSpec::Interval { a, b } => format!("domain = interval\na = {a}\nb = {b}\n"),
            DomainSpec::Rectangle { lx, ly } => format!("domain = rectangle\nlx = {lx}\nly = {ly}\n"),
        };
        let mut cfg = parse_config_str(&(text + "f = constant\n"))?;
        cfg.f = f;
        Ok(cfg)
    }

    /// Flat `key = value` rendering that parses back to the same config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        match self.domain {
            DomainSpec::Interval { a, b } => {
                put("domain", "interval".into());
                put("a", a.to_string());
                put("b", b.to_string());
            }
            DomainSpec::Rectangle { lx, ly } => {
                put("domain", "rectangle".into());
                put("lx", lx.to_string());
                put("ly", ly.to_string());
            }
        }
        put("partition", format_partition(&self.partition));
        if let Some(fam) = &self.family {
            put("family_anchor", format!("{}:{}", fam.anchor_edge.name(), fam.anchor_t));
            put(
                "family_direction",
                match fam.direction {
                    Direction::CounterClockwise => "ccw".into(),
                    Direction::Clockwise => "cw".into(),
                },
            );
            put("epsilon", fam.epsilon.to_string());
            put("alphas", self.alphas.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", "));
        }
        put("s", self.s.to_string());
        put(
            "f",
            match &self.f {
                FProfile::Constant { value } => format!("constant:{value}"),
                FProfile::Mode { index } => format!("mode:{index}"),
                FProfile::Bump { center, width } => format!("bump:{}:{}:{}", center[0], center[1], width),
                FProfile::Step { x0 } => format!("step:{x0}"),
                FProfile::Csv { path } => format!("csv:{path}"),
            },
        );
        put("n", self.n.to_string());
        put("modes", self.modes.map_or("auto".into(), |m| m.to_string()));
        put("cyl_height", self.cyl_height.map_or("auto".into(), |y| y.to_string()));
        put("cyl_levels", self.cyl_levels.to_string());
        put("cyl_grading", self.cyl_grading.to_string());
        put("p", self.p.to_string());
        put("gamma", self.gamma.to_string());
        put("radius", self.radius.map_or("auto".into(), |r| r.to_string()));
        put("radius_count", self.radius_count.to_string());
        put("radius_factor", self.radius_factor.to_string());
        put("refine", self.refine.to_string());
        put("seed", format!("{:#x}", self.seed));
        put("lemma_tuples", self.lemma_tuples.to_string());
        out
    }
}

const KEYS: &[&str] = &[
    "domain",
    "a",
    "b",
    "lx",
    "ly",
    "partition",
    "family_anchor",
    "family_direction",
    "epsilon",
    "alphas",
    "alpha_count",
    "s",
    "f",
    "n",
    "modes",
    "cyl_height",
    "cyl_levels",
    "cyl_grading",
    "p",
    "gamma",
    "radius",
    "radius_count",
    "radius_factor",
    "refine",
    "seed",
    "lemma_tuples",
];

pub fn parse_config(path: &Path) -> Result<StudyConfig> {
    parse_config_str(&std::fs::read_to_string(path)?)
}

/// Parses `1.5`, `pi`, `2pi`, `pi/2`, `3*pi/4`, `-pi`.
pub fn parse_number(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    let lower = t.to_ascii_lowercase();
    if let Some(pos) = lower.find("pi") {
        let (pre, post) = (&lower[..pos], &lower[pos + 2..]);
        let pre = pre.trim().trim_end_matches('*').trim();
        let coef = match pre {
            "" => 1.0,
            "-" => -1.0,
            p => p.parse::<f64>().ok()?,
        };
        let post = post.trim();
        let div = if post.is_empty() {
            1.0
        } else {
            post.strip_prefix('/')?.trim().parse::<f64>().ok()?
        };
        let v = coef * PI / div;
        return v.is_finite().then_some(v);
    }
    let v = t.parse::<f64>().ok()?;
    v.is_finite().then_some(v)
}

fn parse_seed(text: &str) -> Option<u64> {
    let t = text.trim();
    match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => t.parse().ok(),
    }
}

/// Parses a Dirichlet set: `;`-separated `edge:t0:t1` triples, bare edge
/// names (whole edge, or an endpoint in 1D), or `all`.
pub fn parse_partition(domain: DomainSpec, text: &str) -> Result<BoundaryPartition> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("all") {
        return BoundaryPartition::full(domain);
    }
    if t.is_empty() || t.eq_ignore_ascii_case("none") {
        return BoundaryPartition::new(domain, Vec::new());
    }
    let mut arcs = Vec::new();
    for piece in t.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let parts: Vec<&str> = piece.split(':').map(str::trim).collect();
        let edge = Edge::parse(parts[0]).ok_or_else(|| Error::InvalidPartition(format!("unknown edge `{}`", parts[0])))?;
        let arc = match (domain, parts.len()) {
            (DomainSpec::Interval { .. }, 1) => BoundaryArc::point(edge),
            (DomainSpec::Rectangle { .. }, 1) => BoundaryArc::full(&domain, edge),
            (DomainSpec::Rectangle { .. }, 3) => {
                let num = |s: &str| parse_number(s).ok_or_else(|| Error::InvalidPartition(format!("bad number `{s}`")));
                BoundaryArc::new(edge, num(parts[1])?, num(parts[2])?)
            }
            _ => return Err(Error::InvalidPartition(format!("cannot read `{piece}`"))),
        };
        arcs.push(arc);
    }
    BoundaryPartition::new(domain, arcs)
}

fn format_partition(part: &BoundaryPartition) -> String {
    if part.dirichlet.is_empty() {
        return "none".into();
    }
    part.dirichlet
        .iter()
        .map(|a| match part.domain {
            DomainSpec::Interval { .. } => a.edge.name().to_string(),
            DomainSpec::Rectangle { .. } => format!("{}:{}:{}", a.edge.name(), a.t0, a.t1),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn parse_profile(text: &str) -> Option<FProfile> {
    let t = text.trim();
    let (head, rest) = t.split_once(':').unwrap_or((t, ""));
    let args: Vec<&str> = if rest.is_empty() { Vec::new() } else { rest.split(':').collect() };
    match head.trim() {
        "constant" => match args.as_slice() {
            [] => Some(FProfile::Constant { value: 1.0 }),
            [c] => Some(FProfile::Constant { value: parse_number(c)? }),
            _ => None,
        },
        "mode" => match args.as_slice() {
            [j] => {
                let index: usize = j.trim().parse().ok()?;
                (index >= 1).then_some(FProfile::Mode { index })
            }
            _ => None,
        },
        "bump" => match args.as_slice() {
            [] => Some(FProfile::Bump {
                center: [f64::NAN, f64::NAN],
                width: f64::NAN,
            }),
            [x, y, w] => {
                let width = parse_number(w)?;
                (width > 0.0).then_some(FProfile::Bump {
                    center: [parse_number(x)?, parse_number(y)?],
                    width,
                })
            }
            _ => None,
        },
        "step" => match args.as_slice() {
            [] => Some(FProfile::Step { x0: f64::NAN }),
            [x] => Some(FProfile::Step { x0: parse_number(x)? }),
            _ => None,
        },
        "csv" => (!rest.trim().is_empty()).then(|| FProfile::Csv {
            path: rest.trim().to_string(),
        }),
        _ => None,
    }
}

pub fn parse_config_str(text: &str) -> Result<StudyConfig> {
    let mut raw: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(Error::Config {
                line: lineno,
                msg: format!("expected `key = value`, found `{body}`"),
            });
        };
        let key = k.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Config {
                line: lineno,
                msg: format!("unknown key `{key}`"),
            });
        }
        if let Some((first, _)) = raw.insert(key, (lineno, v.trim())) {
            return Err(Error::Config {
                line: lineno,
                msg: format!("`{key}` already set on line {first}"),
            });
        }
    }
    let bad = |key: &str, msg: String| {
        let line = raw.get(key).map_or(0, |e| e.0);
        Error::Config { line, msg }
    };
    let number = |key: &str| -> Result<Option<f64>> {
        match raw.get(key) {
            None => Ok(None),
            Some(&(line, v)) => parse_number(v).map(Some).ok_or(Error::Config {
                line,
                msg: format!("`{key}`: cannot read number `{v}`"),
            }),
        }
    };
    let count = |key: &str| -> Result<Option<usize>> {
        match raw.get(key) {
            None => Ok(None),
            Some(&(_, "auto")) => Ok(None),
            Some(&(line, v)) => v.parse().map(Some).map_err(|_| Error::Config {
                line,
                msg: format!("`{key}`: expected a nonnegative integer, found `{v}`"),
            }),
        }
    };
    let auto_number = |key: &str| -> Result<Option<f64>> {
        match raw.get(key) {
            Some(&(_, "auto")) => Ok(None),
            _ => number(key),
        }
    };

    let domain = match raw.get("domain").map(|e| e.1).unwrap_or("interval") {
        "interval" => DomainSpec::Interval {
            a: number("a")?.unwrap_or(0.0),
            b: number("b")?.unwrap_or(PI),
        },
        "rectangle" => DomainSpec::Rectangle {
            lx: number("lx")?.unwrap_or(PI),
            ly: number("ly")?.unwrap_or(PI),
        },
        other => return Err(bad("domain", format!("unknown domain `{other}`"))),
    };
    let domain = make_domain(domain).map_err(|e| bad("domain", e.to_string()))?;
    let dim = domain.dim();

    let partition = match raw.get("partition") {
        Some(&(line, v)) => parse_partition(domain, v).map_err(|e| Error::Config { line, msg: e.to_string() })?,
        None => match domain {
            DomainSpec::Interval { .. } => BoundaryPartition::new(domain, vec![BoundaryArc::point(Edge::Left)])?,
            DomainSpec::Rectangle { lx, .. } => BoundaryPartition::new(domain, vec![BoundaryArc::new(Edge::Bottom, 0.0, 0.5 * lx)])?,
        },
    };

    let (family, alphas) = match domain {
        DomainSpec::Interval { .. } => {
            for key in ["family_anchor", "family_direction", "epsilon", "alphas", "alpha_count"] {
                if raw.contains_key(key) {
                    return Err(bad(key, format!("`{key}` needs a rectangle domain")));
                }
            }
            (None, Vec::new())
        }
        DomainSpec::Rectangle { lx, .. } => {
            let (anchor_edge, anchor_t) = match raw.get("family_anchor") {
                None => (Edge::Bottom, 0.5 * lx),
                Some(&(line, v)) => {
                    let err = || Error::Config {
                        line,
                        msg: format!("`family_anchor`: expected `edge:t`, found `{v}`"),
                    };
                    let (e, t) = v.split_once(':').ok_or_else(err)?;
                    (Edge::parse(e.trim()).ok_or_else(err)?, parse_number(t).ok_or_else(err)?)
                }
            };
            let direction = match raw.get("family_direction").map(|e| e.1).unwrap_or("ccw") {
                "ccw" | "counterclockwise" => Direction::CounterClockwise,
                "cw" | "clockwise" => Direction::Clockwise,
                other => return Err(bad("family_direction", format!("expected `ccw` or `cw`, found `{other}`"))),
            };
            let perimeter = domain.boundary_measure();
            let epsilon = number("epsilon")?.unwrap_or(perimeter / 20.0);
            let spec = FamilySpec {
                anchor_edge,
                anchor_t,
                direction,
                epsilon,
            };
            let fam = spec.build(domain).map_err(|e| bad("family_anchor", e.to_string()))?;
            let alphas = match raw.get("alphas") {
                Some(&(line, v)) => {
                    let mut out = Vec::new();
                    for tok in v.split(',') {
                        out.push(parse_number(tok).ok_or(Error::Config {
                            line,
                            msg: format!("`alphas`: cannot read `{}`", tok.trim()),
                        })?);
                    }
                    out
                }
                None => {
                    let k = count("alpha_count")?.unwrap_or(6);
                    if k < 2 {
                        return Err(bad("alpha_count", "need at least two α values".into()));
                    }
                    (0..k).map(|i| epsilon + (perimeter - epsilon) * i as f64 / (k - 1) as f64).collect()
                }
            };
            if alphas.windows(2).any(|w| w[1] <= w[0]) {
                return Err(bad("alphas", "α values must be strictly increasing".into()));
            }
            for &a in &alphas {
                fam.partition_at(a).map_err(|e| bad("alphas", e.to_string()))?;
            }
            (Some(spec), alphas)
        }
    };

    let s = number("s")?.unwrap_or(0.75);
    FracParams::new(s, dim).map_err(|e| bad("s", e.to_string()))?;

    let f = match raw.get("f") {
        None => return Err(Error::MissingField("f".into())),
        Some(&(line, v)) => parse_profile(v).ok_or(Error::Config {
            line,
            msg: format!("`f`: unknown profile `{v}`"),
        })?,
    };
    let f = fill_profile_defaults(f, domain);

    let n = count("n")?.unwrap_or(if dim == 1 { 129 } else { 33 });
    if n < 3 {
        return Err(bad("n", format!("need at least 3 nodes per axis, got {n}")));
    }
    let modes = count("modes")?;
    let cyl_height = auto_number("cyl_height")?;
    if cyl_height.is_some_and(|y| !(y > 0.0)) {
        return Err(bad("cyl_height", "height must be positive".into()));
    }
    let cyl_levels = count("cyl_levels")?.unwrap_or(if dim == 1 { 128 } else { 32 });
    if cyl_levels < 8 {
        return Err(bad("cyl_levels", format!("need at least 8 levels, got {cyl_levels}")));
    }
    let cyl_grading = number("cyl_grading")?.unwrap_or(2.0);
    if !(cyl_grading >= 1.0) {
        return Err(bad("cyl_grading", format!("grading {cyl_grading} must be >= 1")));
    }
    let p = number("p")?.unwrap_or(2.0);
    let pmin = dim as f64 / (2.0 * s);
    if !(p > pmin) {
        return Err(bad("p", format!("p = {p} must exceed N/(2s) = {pmin}")));
    }
    let gamma = number("gamma")?.unwrap_or(0.4);
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(bad("gamma", format!("γ = {gamma} must lie in (0, 1)")));
    }
    let radius = auto_number("radius")?;
    if radius.is_some_and(|r| !(r > 0.0)) {
        return Err(bad("radius", "radius must be positive".into()));
    }
    let radius_count = count("radius_count")?.unwrap_or(5);
    if radius_count < 4 {
        return Err(bad("radius_count", "need at least 4 radii".into()));
    }
    let radius_factor = number("radius_factor")?.unwrap_or(4.0);
    if !(radius_factor > 1.0) {
        return Err(bad("radius_factor", "radius factor must exceed 1".into()));
    }
    let refine = match raw.get("refine").map(|e| e.1).unwrap_or("true") {
        "true" | "yes" | "1" => true,
        "false" | "no" | "0" => false,
        other => return Err(bad("refine", format!("expected true/false, found `{other}`"))),
    };
    let seed = match raw.get("seed") {
        None => PAIR_SEED,
        Some(&(line, v)) => parse_seed(v).ok_or(Error::Config {
            line,
            msg: format!("`seed`: cannot read `{v}`"),
        })?,
    };
    let lemma_tuples = count("lemma_tuples")?.unwrap_or(20);

    Ok(StudyConfig {
        domain,
        partition,
        family,
        alphas,
        s,
        f,
        n,
        modes,
        cyl_height,
        cyl_levels,
        cyl_grading,
        p,
        gamma,
        radius,
        radius_count,
        radius_factor,
        refine,
        seed,
        lemma_tuples,
    })
}

fn fill_profile_defaults(f: FProfile, domain: DomainSpec) -> FProfile {
    let (lo, hi, ly) = match domain {
        DomainSpec::Interval { a, b } => (a, b, 0.0),
        DomainSpec::Rectangle { lx, ly } => (0.0, lx, ly),
    };
    match f {
        FProfile::Bump { width, .. } if width.is_nan() => FProfile::Bump {
            center: [0.5 * (lo + hi), 0.5 * ly],
            width: 0.2 * (hi - lo).hypot(ly),
        },
        FProfile::Step { x0 } if x0.is_nan() => FProfile::Step { x0: 0.5 * (lo + hi) },
        other => other,
    }
}
