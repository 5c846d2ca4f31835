//! `key = value` configuration files and the settings of each subcommand.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! A key may appear once. Each subcommand reads the keys it knows and
//! rejects the rest, so a typo never silently falls back to a default.
//!
//! Keys shared by the field-based subcommands:
//!
//! | key    | meaning                                           | default |
//! |--------|---------------------------------------------------|---------|
//! | `spec` | passage-time law, see [`crate::text`]             | required |
//! | `seed` | master seed                                       | `0` |
//! | `box`  | explicit box `lo .. hi`, e.g. `-5,-5 .. 5,5`      | |
//! | `d`    | dimension, used with `side`                       | `2` |
//! | `side` | side `L`: `[-floor(L/2), L - floor(L/2)]^d`       | required without `box` |

use std::collections::BTreeMap;

use fpp_core::experiment::{ExperimentConfig, ExperimentKind, SigmaPlacement, TargetMode};
use fpp_core::game::PursuerPolicy;
use fpp_core::geodesic::Direction;
use fpp_core::useful::PcEntry;
use fpp_core::{DistributionSpec, LatticeBox, PcTable, Vertex};

use crate::error::{LabError, LabResult};
use crate::text::{parse_intervals, parse_num, parse_spec, parse_vertex};

/// Parsed configuration text.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> LabResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| LabError::config(format!("line {}: expected key = value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(LabError::config(format!("line {}: bad key {k:?}", i + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(LabError::config(format!("line {}: key {k} given twice", i + 1)));
            }
        }
        Ok(KvConfig { entries })
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Canonical text: sorted keys, one `key = value` per line.
    pub fn echo(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    fn reader(&self) -> Reader<'_> {
        Reader { cfg: self, seen: Vec::new() }
    }
}

fn need<T>(key: &str, v: LabResult<Option<T>>) -> LabResult<T> {
    v?.ok_or_else(|| LabError::config(format!("missing key {key}")))
}

/// Tracks which keys a subcommand consumed.
struct Reader<'a> {
    cfg: &'a KvConfig,
    seen: Vec<&'static str>,
}

impl Reader<'_> {
    fn raw(&mut self, key: &'static str) -> Option<&str> {
        self.seen.push(key);
        self.cfg.get(key)
    }

    fn req(&mut self, key: &'static str) -> LabResult<&str> {
        self.raw(key).ok_or_else(|| LabError::config(format!("missing key {key}")))
    }

    fn parsed<T>(&mut self, key: &'static str, f: impl FnOnce(&str) -> LabResult<T>) -> LabResult<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => f(v).map(Some).map_err(|e| LabError::config(format!("{key}: {e}"))),
        }
    }

    fn f64(&mut self, key: &'static str) -> LabResult<Option<f64>> {
        self.parsed(key, parse_num)
    }

    fn u64(&mut self, key: &'static str) -> LabResult<Option<u64>> {
        self.parsed(key, |v| v.parse::<u64>().map_err(|_| LabError::config(format!("not an unsigned integer: {v:?}"))))
    }

    fn bool(&mut self, key: &'static str) -> LabResult<Option<bool>> {
        self.parsed(key, |v| match v {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(LabError::config(format!("not a boolean: {v:?}"))),
        })
    }

    fn vertex(&mut self, key: &'static str) -> LabResult<Option<Vertex>> {
        self.parsed(key, parse_vertex)
    }

    fn finish(self, command: &str) -> LabResult<()> {
        let unknown: Vec<&str> = self
            .cfg
            .entries
            .keys()
            .map(String::as_str)
            .filter(|k| !self.seen.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            let mut known = self.seen.clone();
            known.sort_unstable();
            known.dedup();
            Err(LabError::config(format!(
                "unknown key(s) for {command}: {}; accepted: {}",
                unknown.join(", "),
                known.join(", ")
            )))
        }
    }
}

/// Law, seed and box shared by the field-based subcommands.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSettings {
    pub spec: DistributionSpec,
    pub seed: u64,
    pub bx: LatticeBox,
}

fn field_settings(r: &mut Reader<'_>) -> LabResult<FieldSettings> {
    let spec = parse_spec(r.req("spec")?)?;
    let seed = r.u64("seed")?.unwrap_or(0);
    let d = r.u64("d")?;
    let side = r.parsed("side", |v| v.parse::<i64>().map_err(|_| LabError::config(format!("not an integer: {v:?}"))))?;
    let bx = match r.raw("box") {
        Some(text) => {
            if d.is_some() || side.is_some() {
                return Err(LabError::config("give either box or d/side, not both"));
            }
            let (lo, hi) = text
                .split_once("..")
                .ok_or_else(|| LabError::config(format!("box: expected `lo .. hi`, got {text:?}")))?;
            LatticeBox::from_corners(parse_vertex(lo)?, parse_vertex(hi)?)?
        }
        None => {
            let d = d.unwrap_or(2) as usize;
            let side = side.ok_or_else(|| LabError::config("missing key side (or box)"))?;
            centered_box(d, side)?
        }
    };
    Ok(FieldSettings { spec, seed, bx })
}

/// `[-floor(L/2), L - floor(L/2)]^d`.
pub fn centered_box(d: usize, side: i64) -> LabResult<LatticeBox> {
    if side < 1 {
        return Err(LabError::config(format!("side must be positive, got {side}")));
    }
    let lo = vec![-(side / 2); d];
    let hi = vec![side - side / 2; d];
    Ok(LatticeBox::new(&lo, &hi)?)
}

/// Binary or text field dump.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldFormat {
    Csv,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleSettings {
    pub field: FieldSettings,
    pub format: FieldFormat,
}

impl SampleSettings {
    /// Keys: shared keys plus `format = csv | binary`.
    pub fn from_config(cfg: &KvConfig) -> LabResult<Self> {
        let mut r = cfg.reader();
        let field = field_settings(&mut r)?;
        let format = match r.raw("format").unwrap_or("csv") {
            "csv" => FieldFormat::Csv,
            "binary" => FieldFormat::Binary,
            other => return Err(LabError::config(format!("format must be csv or binary, got {other:?}"))),
        };
        r.finish("sample")?;
        Ok(SampleSettings { field, format })
    }
}

/// Point-to-point queries; `m` is required by `restricted` only.
#[derive(Clone, Debug, PartialEq)]
pub struct QuerySettings {
    pub field: FieldSettings,
    pub from: Vertex,
    pub to: Vertex,
    pub m: Option<f64>,
}

impl QuerySettings {
    /// Keys: shared keys plus `from`, `to` and, when `restricted`, `m`.
    pub fn from_config(cfg: &KvConfig, restricted: bool) -> LabResult<Self> {
        let mut r = cfg.reader();
        let field = field_settings(&mut r)?;
        let from = r.vertex("from")?.unwrap_or_else(|| Vertex::origin(field.bx.dim()));
        let to = need("to", r.vertex("to"))?;
        let m = if restricted { Some(need("m", r.f64("m"))?) } else { None };
        r.finish(if restricted { "restricted" } else { "geodesic" })?;
        Ok(QuerySettings { field, from, to, m })
    }
}

/// Cube scale and thresholds of the black-cube predicate.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeSettings {
    pub n: u64,
    pub m: f64,
    /// Bottom of the support unless overridden.
    pub r: f64,
    pub delta: f64,
}

fn cube_settings(r: &mut Reader<'_>, spec: &DistributionSpec) -> LabResult<CubeSettings> {
    let n = need("cube", r.u64("cube"))?;
    let m = need("m", r.f64("m"))?;
    let delta = need("delta", r.f64("delta"))?;
    let rr = r.f64("r")?.unwrap_or_else(|| spec.support_min());
    Ok(CubeSettings { n, m, r: rr, delta })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlackcubeSettings {
    pub field: FieldSettings,
    pub cube: CubeSettings,
}

impl BlackcubeSettings {
    /// Keys: shared keys plus `cube` (N), `m`, `delta`, optional `r`.
    pub fn from_config(cfg: &KvConfig) -> LabResult<Self> {
        let mut r = cfg.reader();
        let field = field_settings(&mut r)?;
        let cube = cube_settings(&mut r, &field.spec)?;
        r.finish("blackcube")?;
        Ok(BlackcubeSettings { field, cube })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShortcutSettings {
    pub field: FieldSettings,
    pub cube: CubeSettings,
    pub from: Vertex,
    pub to: Vertex,
    /// Search the restricted geodesic (default) or the plain one.
    pub restricted: bool,
}

impl ShortcutSettings {
    /// Keys: as `blackcube`, plus `from` (default origin), `to` and
    /// `path = restricted | geodesic`. The detour length `K` is `N / 4`, so
    /// `cube` must be a multiple of 4.
    pub fn from_config(cfg: &KvConfig) -> LabResult<Self> {
        let mut r = cfg.reader();
        let field = field_settings(&mut r)?;
        let cube = cube_settings(&mut r, &field.spec)?;
        if cube.n == 0 || cube.n % 4 != 0 {
            return Err(LabError::config(format!("cube must be a positive multiple of 4, got {}", cube.n)));
        }
        let from = r.vertex("from")?.unwrap_or_else(|| Vertex::origin(field.bx.dim()));
        let to = need("to", r.vertex("to"))?;
        let restricted = match r.raw("path").unwrap_or("restricted") {
            "restricted" => true,
            "geodesic" => false,
            other => return Err(LabError::config(format!("path must be restricted or geodesic, got {other:?}"))),
        };
        r.finish("shortcut")?;
        Ok(ShortcutSettings { field, cube, from, to, restricted })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameSettings {
    pub field: FieldSettings,
    pub m: f64,
    pub x_lambda: Vertex,
    /// Nearest escape position when absent.
    pub x_sigma: Option<Vertex>,
    pub policy: PursuerPolicy,
    pub direction: Direction,
    /// Ray length.
    pub horizon: u64,
    pub t_max: f64,
    /// Number of seeds in batch mode.
    pub batch: Option<u64>,
}

pub fn parse_policy(name: &str, seed: u64) -> LabResult<PursuerPolicy> {
    Ok(match name {
        "greedy" => PursuerPolicy::Greedy,
        "intercept" => PursuerPolicy::Intercept,
        "random-walk" | "random_walk" => PursuerPolicy::RandomWalk { seed },
        "stationary" => PursuerPolicy::Stationary,
        other => {
            return Err(LabError::config(format!(
                "unknown policy {other:?}; expected greedy, intercept, random-walk or stationary"
            )))
        }
    })
}

fn parse_direction(s: &str, d: usize) -> LabResult<Direction> {
    let (positive, rest) = match s.as_bytes().first() {
        Some(b'+') => (true, &s[1..]),
        Some(b'-') => (false, &s[1..]),
        _ => (true, s),
    };
    let axis = rest
        .strip_prefix('e')
        .and_then(|a| a.parse::<usize>().ok())
        .filter(|a| (1..=d).contains(a))
        .ok_or_else(|| LabError::config(format!("direction must look like +e1 .. -e{d}, got {s:?}")))?;
    Ok(Direction { axis, positive })
}

impl GameSettings {
    /// Keys: shared keys plus `m`, `horizon`, and optional `x_lambda`
    /// (default origin), `x_sigma`, `policy` (default greedy),
    /// `direction` (default `+e1`), `t_max`, `batch`.
    pub fn from_config(cfg: &KvConfig) -> LabResult<Self> {
        let mut r = cfg.reader();
        let field = field_settings(&mut r)?;
        let d = field.bx.dim();
        let m = need("m", r.f64("m"))?;
        let horizon = need("horizon", r.u64("horizon"))?;
        let x_lambda = r.vertex("x_lambda")?.unwrap_or_else(|| Vertex::origin(d));
        let x_sigma = r.vertex("x_sigma")?;
        let policy = parse_policy(r.raw("policy").unwrap_or("greedy"), field.seed)?;
        let direction = parse_direction(r.raw("direction").unwrap_or("+e1"), d)?;
        let t_max = r.f64("t_max")?.unwrap_or(f64::INFINITY);
        let batch = r.u64("batch")?;
        if batch == Some(0) {
            return Err(LabError::config("batch must be at least 1"));
        }
        r.finish("game")?;
        Ok(GameSettings { field, m, x_lambda, x_sigma, policy, direction, horizon, t_max, batch })
    }
}

/// An experiment together with the thresholds used by its hypothesis check.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSettings {
    pub config: ExperimentConfig,
    pub pc: PcTable,
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> LabResult<T>) -> LabResult<Vec<T>> {
    s.split(',').map(|x| f(x.trim())).collect()
}

impl ExperimentSettings {
    /// Keys:
    ///
    /// * `experiment`: one of prop31, margin, heavy_edges, all_light,
    ///   black_visits, time_constant, game_batch, escape_decay;
    /// * `spec`, `seed`, `d` (default 2), `side` (default from `n`);
    /// * `n`: comma-separated radii; `replicas`;
    /// * `m`, `heavy_set` (e.g. `[0,0.5];(2,inf]`), `alpha`, `alpha_grid`;
    /// * `cube`, `delta`, `spacing` (`7N` / `14N` or a number);
    /// * `target` (axis | sphere), `allow_bounded`, `placement`
    ///   (nearest | random:R), `t_max`, `fit_correction`;
    /// * `pc_bond`, `pc_oriented`: threshold overrides for dimension `d`.
    pub fn from_config(cfg: &KvConfig) -> LabResult<Self> {
        let mut r = cfg.reader();
        let name = r.req("experiment")?;
        let kind = ExperimentKind::from_name(name).ok_or_else(|| {
            let known: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            LabError::config(format!("unknown experiment {name:?}; expected one of {}", known.join(", ")))
        })?;
        let spec = parse_spec(r.req("spec")?)?;
        let ns = parse_list(r.req("n")?, |x| {
            x.parse::<u64>().map_err(|_| LabError::config(format!("n: not an unsigned integer: {x:?}")))
        })?;
        let replicas = need("replicas", r.u64("replicas"))?;
        let seed = r.u64("seed")?.unwrap_or(0);
        let mut c = ExperimentConfig::new(kind, spec, ns, replicas, seed);
        if let Some(d) = r.u64("d")? {
            c.d = d as usize;
        }
        c.side = r.parsed("side", |v| v.parse::<i64>().map_err(|_| LabError::config(format!("not an integer: {v:?}"))))?;
        c.m = r.f64("m")?;
        c.heavy_set = r.parsed("heavy_set", parse_intervals)?;
        if let Some(a) = r.f64("alpha")? {
            c.alpha = a;
        }
        if let Some(grid) = r.parsed("alpha_grid", |v| parse_list(v, parse_num))? {
            c.alpha_grid = grid;
        }
        c.cube = r.u64("cube")?;
        c.delta = r.f64("delta")?;
        c.spacing = match r.raw("spacing") {
            None => None,
            Some(v) => {
                let n = c.cube.ok_or_else(|| LabError::config("spacing needs cube"))?;
                Some(match v {
                    "7N" => fpp_core::renorm::selection_spacing(n),
                    "14N" => fpp_core::renorm::property_spacing(n),
                    other => other
                        .parse::<u64>()
                        .map_err(|_| LabError::config(format!("spacing must be 7N, 14N or a number, got {other:?}")))?,
                })
            }
        };
        if let Some(t) = r.raw("target") {
            c.target = match t {
                "axis" => TargetMode::Axis,
                "sphere" => TargetMode::Sphere,
                other => return Err(LabError::config(format!("target must be axis or sphere, got {other:?}"))),
            };
        }
        if let Some(b) = r.bool("allow_bounded")? {
            c.allow_bounded = b;
        }
        if let Some(p) = r.raw("placement") {
            c.placement = match p.split_once(':') {
                None if p == "nearest" => SigmaPlacement::Nearest,
                Some(("random", radius)) => SigmaPlacement::Random {
                    radius: radius
                        .trim()
                        .parse()
                        .map_err(|_| LabError::config(format!("placement radius: {radius:?}")))?,
                },
                _ => return Err(LabError::config(format!("placement must be nearest or random:R, got {p:?}"))),
            };
        }
        if let Some(t) = r.f64("t_max")? {
            c.t_max = t;
        }
        if let Some(b) = r.bool("fit_correction")? {
            c.fit_correction = b;
        }
        let mut pc = PcTable::default();
        let bond = r.f64("pc_bond")?;
        let oriented = r.f64("pc_oriented")?;
        if bond.is_some() || oriented.is_some() {
            let current = pc.get(c.d).cloned();
            let pick = |given: Option<f64>, old: Option<f64>, key: &str| {
                given.or(old).ok_or_else(|| LabError::config(format!("{key} needed: no default for d = {}", c.d)))
            };
            let entry = PcEntry {
                bond: pick(bond, current.as_ref().map(|e| e.bond), "pc_bond")?,
                oriented: pick(oriented, current.as_ref().map(|e| e.oriented), "pc_oriented")?,
                source: "configuration override".into(),
            };
            pc.set(c.d, entry)?;
        }
        r.finish("experiment")?;
        Ok(ExperimentSettings { config: c, pc })
    }
}
