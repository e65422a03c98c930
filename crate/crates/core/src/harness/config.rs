//! Experiment configuration: JSON or TOML, checked into runtime objects with
//! errors that name the offending key path.

use super::gspec::GSpec;
use crate::moduli::{Modulus, Role};
use crate::num::{fmt_q, nat, parse_q, q, qi, Nat, Q};
use crate::schemas::{bruck, bruck_presets, halpern, resolvent_sequence, wittmann_rates_harmonic, PointSeq, ResolventPath, Schedule};
use crate::spaces::{map_library, FeasibleSet, MapInstance, Point, SolverOptions, Space};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use std::fmt;
use std::path::Path;
use std::rc::Rc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config key `{}`: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
}

mod rat {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        S(String),
        I(i64),
        F(f64),
    }

    fn conv<E: serde::de::Error>(r: Raw) -> Result<Q, E> {
        match r {
            Raw::S(s) => parse_q(&s).map_err(E::custom),
            Raw::I(i) => Ok(qi(i)),
            Raw::F(x) => parse_q(&x.to_string()).map_err(E::custom),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        conv(Raw::deserialize(d)?)
    }

    pub fn serialize<S: serde::Serializer>(v: &Q, s: S) -> Result<S::Ok, S::Error> {
        fmt_q(v).serialize(s)
    }

    pub mod opt {
        use super::*;
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Q>, D::Error> {
            Option::<Raw>::deserialize(d)?.map(conv).transpose()
        }
        pub fn serialize<S: serde::Serializer>(v: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
            v.as_ref().map(fmt_q).serialize(s)
        }
    }
}

/// Natural numbers as JSON integers or decimal strings (`"1000000000"`, `"1e9"`).
mod natstr {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        I(u64),
        S(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Nat>, D::Error> {
        use serde::de::Error;
        match Option::<Raw>::deserialize(d)? {
            None => Ok(None),
            Some(Raw::I(i)) => Ok(Some(nat(i))),
            Some(Raw::S(s)) => {
                let v = parse_q(&s).map_err(D::Error::custom)?;
                if v.is_negative() || !v.is_integer() {
                    return Err(D::Error::custom(format!("`{s}` is not a natural number")));
                }
                Ok(Some(v.to_integer().to_biguint().expect("nonnegative")))
            }
        }
    }

    pub fn serialize<S: serde::Serializer>(v: &Option<Nat>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|n| n.to_string()).serialize(s)
    }
}

fn two() -> Q {
    qi(2)
}
fn unit_box() -> FeasibleSet {
    FeasibleSet::Box {
        lo: Q::zero(),
        hi: qi(1),
    }
}
fn canonical() -> String {
    "canonical".into()
}
fn harmonic() -> String {
    "harmonic".into()
}
fn default_horizon() -> u64 {
    10_000
}
fn default_eta() -> String {
    "hilbert-eta".into()
}
fn default_tau() -> String {
    "identity-tau".into()
}
fn default_solver_tol() -> Q {
    q(1, 1_000_000_000)
}
fn default_prefix() -> u64 {
    200
}
fn default_projection() -> Q {
    q(1, 100)
}
fn default_t_close() -> Q {
    q(999, 1000)
}
fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub dim: usize,
    #[serde(default = "two", with = "rat")]
    pub p: Q,
    /// Norm bound on the feasible set; derived from `set` when absent.
    #[serde(default)]
    pub b: Option<u64>,
    #[serde(default = "unit_box")]
    pub set: FeasibleSet,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub name: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SchemaSpec {
    Resolvent {
        #[serde(default)]
        anchor: Option<Point>,
        #[serde(default = "canonical")]
        schedule: String,
    },
    Halpern {
        #[serde(default)]
        x0: Option<Point>,
        #[serde(default)]
        u: Option<Point>,
        #[serde(default = "harmonic")]
        lambda: String,
    },
    Bruck {
        #[serde(default)]
        x1: Option<Point>,
        #[serde(default = "harmonic")]
        preset: String,
    },
}

impl Default for SchemaSpec {
    fn default() -> Self {
        SchemaSpec::Resolvent {
            anchor: None,
            schedule: canonical(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuliSpec {
    #[serde(default = "default_eta")]
    pub eta: String,
    #[serde(default = "default_tau")]
    pub tau: String,
    /// Modulus of uniform continuity of T; the map's own when absent.
    #[serde(default)]
    pub theta: Option<String>,
}

impl Default for ModuliSpec {
    fn default() -> Self {
        ModuliSpec {
            eta: default_eta(),
            tau: default_tau(),
            theta: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_solver_tol", with = "rat")]
    pub solver: Q,
    /// Prefix length for the residual-law check.
    #[serde(default = "default_prefix")]
    pub residual_prefix: u64,
    /// Allowed distance between the resolvent point and the metric projection.
    #[serde(default = "default_projection", with = "rat")]
    pub projection: Q,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solver: default_solver_tol(),
            residual_prefix: default_prefix(),
            projection: default_projection(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RealizerMode {
    #[default]
    Derived,
    Custom,
    Skip,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomConstants {
    #[serde(with = "rat")]
    pub u: Q,
    #[serde(with = "rat")]
    pub nu1: Q,
    #[serde(with = "rat")]
    pub nu2: Q,
    #[serde(with = "rat")]
    pub delta: Q,
}

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RealizerSpec {
    #[serde(default)]
    pub mode: RealizerMode,
    #[serde(default, with = "natstr")]
    pub fuel: Option<Nat>,
    #[serde(default)]
    pub custom: Option<CustomConstants>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SunnySpec {
    pub anchors: Vec<Point>,
    #[serde(default)]
    pub fixed_points: Vec<Point>,
    #[serde(default = "default_t_close", with = "rat")]
    pub t_close: Q,
    /// Compare against the metric projection onto Fix(T) (affine maps, p = 2).
    #[serde(default = "yes")]
    pub projection: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub space: SpaceSpec,
    pub map: MapSpec,
    #[serde(default)]
    pub schema: SchemaSpec,
    #[serde(default)]
    pub moduli: ModuliSpec,
    #[serde(default, with = "rat::opt")]
    pub epsilon: Option<Q>,
    #[serde(default)]
    pub g: Option<String>,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    /// Fuel for the bound.
    #[serde(default, with = "natstr")]
    pub fuel: Option<Nat>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub realizer: RealizerSpec,
    #[serde(default)]
    pub sunny: Option<SunnySpec>,
}

/// Parses a JSON or TOML document (TOML when `toml` is set) into a list of
/// experiments. A document is one experiment, or `{experiments = [...]}` with
/// an optional `defaults` table merged under each entry.
pub fn parse_config(text: &str, toml: bool) -> Result<Vec<ExperimentConfig>, ConfigError> {
    let value: Value = if toml {
        ::toml::from_str(text).map_err(|e| err("", format!("TOML syntax: {}", e.message())))?
    } else {
        serde_json::from_str(text).map_err(|e| err("", format!("JSON syntax: {e}")))?
    };
    let Value::Object(mut top) = value else {
        return Err(err("", "top level must be a table/object"));
    };
    let Some(list) = top.remove("experiments") else {
        return Ok(vec![from_value(Value::Object(top), "")?]);
    };
    let defaults = top.remove("defaults").unwrap_or(Value::Object(Default::default()));
    if let Some(k) = top.keys().next() {
        return Err(err(k.clone(), "unknown key next to `experiments` (use `defaults`)"));
    }
    let Value::Array(items) = list else {
        return Err(err("experiments", "must be an array"));
    };
    if items.is_empty() {
        return Err(err("experiments", "must not be empty"));
    }
    items
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let mut merged = defaults.clone();
            merge(&mut merged, v);
            from_value(merged, &format!("experiments[{i}]"))
        })
        .collect()
}

pub fn load_config(path: &Path) -> Result<Vec<ExperimentConfig>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| err("", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, path.extension().is_some_and(|e| e == "toml"))
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o,
    }
}

fn join(prefix: &str, path: &str) -> String {
    match (prefix.is_empty(), path.is_empty() || path == ".") {
        (_, true) => prefix.to_string(),
        (true, false) => path.to_string(),
        (false, false) if path.starts_with('[') => format!("{prefix}{path}"),
        _ => format!("{prefix}.{path}"),
    }
}

fn from_value(v: Value, prefix: &str) -> Result<ExperimentConfig, ConfigError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        err(join(prefix, &path), e.into_inner().to_string())
    })
}

/// The iterative scheme behind an experiment.
pub enum Scheme {
    Resolvent {
        path: Rc<ResolventPath>,
        schedule: Schedule,
        anchor: Point,
    },
    Halpern,
    Bruck,
}

/// A checked, runnable experiment.
pub struct Experiment {
    pub name: String,
    pub space: Space,
    pub map: MapInstance,
    pub scheme: Scheme,
    pub seq: Rc<dyn PointSeq>,
    pub eta: Modulus,
    pub tau: Modulus,
    pub theta: Modulus,
    pub eps: Option<Q>,
    pub g: Option<GSpec>,
    pub horizon: u64,
    pub fuel: Nat,
    pub seed: u64,
    pub tol: Tolerances,
    pub opts: SolverOptions,
    pub realizer: RealizerSpec,
    pub sunny: Option<SunnySpec>,
    pub config: ExperimentConfig,
}

/// Bruck iterates are indexed from 1; this view starts them at 0.
struct FromOne(Rc<dyn PointSeq>);

impl PointSeq for FromOne {
    fn point(&self, n: &Nat) -> crate::eval::Eval<Point> {
        self.0.point(&(n + 1u32))
    }
    fn space(&self) -> &Space {
        self.0.space()
    }
}

fn derived_b(set: &FeasibleSet, dim: usize) -> u64 {
    let r = match set {
        FeasibleSet::Box { lo, hi } => {
            let m = if lo.abs() > hi.abs() { lo.abs() } else { hi.abs() };
            crate::num::q_to_f64(&m) * (dim as f64).sqrt()
        }
        FeasibleSet::Ball { radius } => crate::num::q_to_f64(radius),
    };
    (r - 1e-12).ceil().max(1.0) as u64
}

fn point_at(space: &Space, p: &Option<Point>, path: &str) -> Result<Point, ConfigError> {
    let pt = p.clone().unwrap_or_else(|| Point::zeros(space.dim));
    if pt.dim() != space.dim {
        return Err(err(path, format!("has dimension {}, space has {}", pt.dim(), space.dim)));
    }
    if !space.contains(&pt) {
        return Err(err(path, format!("{pt} lies outside the feasible set")));
    }
    Ok(pt)
}

fn modulus(key: &str, role: Role, path: &str) -> Result<Modulus, ConfigError> {
    Modulus::preset(key, role).map_err(|e| err(path, e.to_string()))
}

impl ExperimentConfig {
    /// Checks the config and builds the runtime objects. `prefix` is prepended
    /// to error paths (e.g. `experiments[2]`).
    pub fn build(&self, prefix: &str) -> Result<Experiment, ConfigError> {
        let at = |k: &str| join(prefix, k);
        let s = &self.space;
        let b = match s.b {
            Some(b) => b,
            None => derived_b(&s.set, s.dim),
        };
        let space = Space::new(s.dim, s.p.clone(), b, s.set.clone()).map_err(|e| err(at("space"), e.to_string()))?;
        let map = map_library(&self.map.name, &self.map.params).map_err(|e| err(at("map"), e.to_string()))?;
        if let Some(d) = map.dim() {
            if d != space.dim {
                return Err(err(at("map"), format!("map acts on dimension {d}, space has {}", space.dim)));
            }
        }
        if let Some(e) = &self.epsilon {
            if !e.is_positive() || e > &qi(2) {
                return Err(err(at("epsilon"), format!("{} is outside (0, 2]", fmt_q(e))));
            }
        }
        let g = match &self.g {
            Some(t) => Some(t.parse::<GSpec>().map_err(|m| err(at("g"), m))?),
            None => None,
        };
        if self.horizon == 0 {
            return Err(err(at("horizon"), "must be at least 1"));
        }
        let fuel = self.fuel.clone().unwrap_or_else(crate::bound::theta::default_fuel);
        if fuel.is_zero() {
            return Err(err(at("fuel"), "must be positive"));
        }
        if !self.tolerances.solver.is_positive() {
            return Err(err(at("tolerances.solver"), "must be positive"));
        }
        let eta = modulus(&self.moduli.eta, Role::Convexity, &at("moduli.eta"))?;
        let tau = modulus(&self.moduli.tau, Role::Smoothness, &at("moduli.tau"))?;
        let theta = match &self.moduli.theta {
            Some(k) => modulus(k, Role::Continuity, &at("moduli.theta"))?,
            None => map.theta.clone(),
        };
        let opts = SolverOptions {
            tol: self.tolerances.solver.clone(),
            seed: self.seed,
            ..SolverOptions::default()
        };
        let (scheme, seq): (Scheme, Rc<dyn PointSeq>) = match &self.schema {
            SchemaSpec::Resolvent { anchor, schedule } => {
                let anchor = point_at(&space, anchor, &at("schema.anchor"))?;
                let schedule = match schedule.as_str() {
                    "canonical" => Schedule::canonical(),
                    "shifted" => Schedule::shifted(),
                    other => match other.strip_prefix("table:") {
                        Some(p) => Schedule::from_table(Path::new(p)).map_err(|m| err(at("schema.schedule"), m))?,
                        None => return Err(err(at("schema.schedule"), format!("unknown schedule `{other}`"))),
                    },
                };
                let path = Rc::new(resolvent_sequence(&space, &map, &anchor, &schedule, &opts));
                (
                    Scheme::Resolvent {
                        path: path.clone(),
                        schedule,
                        anchor,
                    },
                    path,
                )
            }
            SchemaSpec::Halpern { x0, u, lambda } => {
                let x0 = point_at(&space, x0, &at("schema.x0"))?;
                let u = point_at(&space, u, &at("schema.u"))?;
                if lambda != "harmonic" {
                    return Err(err(at("schema.lambda"), format!("unknown rate family `{lambda}` (only `harmonic`)")));
                }
                (Scheme::Halpern, Rc::new(halpern(&space, &map, &x0, &u, &wittmann_rates_harmonic())))
            }
            SchemaSpec::Bruck { x1, preset } => {
                let x1 = point_at(&space, x1, &at("schema.x1"))?;
                let (_, l, t) = bruck_presets()
                    .into_iter()
                    .find(|(n, _, _)| n == preset)
                    .ok_or_else(|| err(at("schema.preset"), format!("unknown Bruck preset `{preset}`")))?;
                let inner: Rc<dyn PointSeq> = Rc::new(bruck(&space, &map, &x1, l, t));
                (Scheme::Bruck, Rc::new(FromOne(inner)))
            }
        };
        if self.realizer.mode == RealizerMode::Custom && self.realizer.custom.is_none() {
            return Err(err(at("realizer.custom"), "required when realizer.mode = \"custom\""));
        }
        if let Some(c) = &self.realizer.custom {
            for (k, v) in [("u", &c.u), ("nu1", &c.nu1), ("nu2", &c.nu2), ("delta", &c.delta)] {
                if !v.is_positive() {
                    return Err(err(at(&format!("realizer.custom.{k}")), "must be positive"));
                }
            }
        }
        if let Some(sn) = &self.sunny {
            for (i, p) in sn.anchors.iter().enumerate() {
                point_at(&space, &Some(p.clone()), &at(&format!("sunny.anchors[{i}]")))?;
            }
            for (i, p) in sn.fixed_points.iter().enumerate() {
                if p.dim() != space.dim {
                    return Err(err(at(&format!("sunny.fixed_points[{i}]")), "dimension mismatch"));
                }
            }
            if !(sn.t_close.is_positive() && sn.t_close < qi(1)) {
                return Err(err(at("sunny.t_close"), "must lie in (0, 1)"));
            }
        }
        let name = self.name.clone().unwrap_or_else(|| {
            let kind = match &self.schema {
                SchemaSpec::Resolvent { .. } => "resolvent",
                SchemaSpec::Halpern { .. } => "halpern",
                SchemaSpec::Bruck { .. } => "bruck",
            };
            format!("{}/{kind}/d{}", self.map.name, space.dim)
        });
        Ok(Experiment {
            name,
            space,
            map,
            scheme,
            seq,
            eta,
            tau,
            theta,
            eps: self.epsilon.clone(),
            g,
            horizon: self.horizon,
            fuel,
            seed: self.seed,
            tol: self.tolerances.clone(),
            opts,
            realizer: self.realizer.clone(),
            sunny: self.sunny.clone(),
            config: self.clone(),
        })
    }
}

impl fmt::Debug for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Experiment").field("name", &self.name).field("config", &self.config).finish()
    }
}

impl Experiment {
    pub fn b(&self) -> u64 {
        self.space.b
    }

    /// Fuel for the realizer path.
    pub fn realizer_fuel(&self) -> Nat {
        self.realizer.fuel.clone().unwrap_or_else(|| nat(100_000_000))
    }

    pub fn realizer_fuel_u64(&self) -> u64 {
        self.realizer_fuel().to_u64().unwrap_or(u64::MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const AFFINE: &str = r#"{
        "space": {"dim": 1},
        "map": {"name": "affine-1d", "params": {"slope": "-2", "intercept": "1"}},
        "epsilon": "1/10",
        "g": "const:10"
    }"#;

    #[test]
    fn minimal_json_builds_with_defaults() {
        let cfgs = parse_config(AFFINE, false).unwrap();
        assert_eq!(cfgs.len(), 1);
        let e = cfgs[0].build("").unwrap();
        assert_eq!(e.horizon, 10_000);
        assert_eq!(e.b(), 1);
        assert_eq!(e.eps, Some(q(1, 10)));
        assert_eq!(e.g, Some(GSpec::Const(10)));
        assert_eq!(e.fuel, nat(1_000_000_000));
        assert!(matches!(e.scheme, Scheme::Resolvent { .. }));
        assert_eq!(e.seq.point_u64(1).unwrap(), Point::from_ratios(&[(1, 4)]));
    }

    #[test]
    fn toml_batch_with_defaults() {
        let text = r#"
            [defaults]
            epsilon = "1/2"
            g = "const:5"
            [defaults.space]
            dim = 2
            [[experiments]]
            name = "proj"
            map = { name = "coordinate-projection", params = { dim = 2, zero = [1] } }
            [[experiments]]
            map = { name = "rational-rotation", params = { cos = "3/5", sin = "4/5" } }
            space = { dim = 2, set = { kind = "ball", radius = 1 } }
            schema = { kind = "halpern", x0 = ["1/2", 0], u = ["1/2", 0] }
        "#;
        let cfgs = parse_config(text, true).unwrap();
        assert_eq!(cfgs.len(), 2);
        let a = cfgs[0].build("experiments[0]").unwrap();
        assert_eq!(a.name, "proj");
        let b = cfgs[1].build("experiments[1]").unwrap();
        assert!(matches!(b.scheme, Scheme::Halpern));
        assert_eq!(b.eps, Some(q(1, 2)));
    }

    #[test]
    fn errors_name_key_paths() {
        let bad_dim = AFFINE.replace(r#""dim": 1"#, r#""dim": "one""#);
        assert_eq!(parse_config(&bad_dim, false).unwrap_err().path, "space.dim");
        let unknown = AFFINE.replace(r#""g": "const:10""#, r#""g": "const:10", "gg": 1"#);
        let e = parse_config(&unknown, false).unwrap_err();
        assert!(e.message.contains("gg"), "{e}");
        let bad_g = AFFINE.replace("const:10", "cubic:3");
        assert_eq!(parse_config(&bad_g, false).unwrap()[0].build("").unwrap_err().path, "g");
        let bad_eps = AFFINE.replace("1/10", "3");
        assert_eq!(parse_config(&bad_eps, false).unwrap()[0].build("").unwrap_err().path, "epsilon");
        let batch = format!(r#"{{"experiments": [{AFFINE}, {{"space": {{"dim": 1}}, "map": {{"name": 5}}}}]}}"#);
        assert_eq!(parse_config(&batch, false).unwrap_err().path, "experiments[1].map.name");
        let bad_anchor = AFFINE.replace(r#""g": "const:10""#, r#""g": "const:10", "schema": {"kind": "resolvent", "anchor": [2]}"#);
        assert_eq!(parse_config(&bad_anchor, false).unwrap()[0].build("x").unwrap_err().path, "x.schema.anchor");
        let bad_kind = AFFINE.replace(r#""g": "const:10""#, r#""g": "const:10", "schema": {"kind": "mann"}"#);
        assert_eq!(parse_config(&bad_kind, false).unwrap_err().path, "schema.kind");
        let custom = AFFINE.replace(r#""g": "const:10""#, r#""g": "const:10", "realizer": {"mode": "custom"}"#);
        assert_eq!(parse_config(&custom, false).unwrap()[0].build("").unwrap_err().path, "realizer.custom");
        let syntax = parse_config("{", false).unwrap_err();
        assert!(syntax.message.starts_with("JSON syntax"));
    }

    #[test]
    fn fuel_accepts_big_decimal_strings() {
        let doc = r#"{"space": {"dim": 1}, "map": {"name": "affine-1d", "params": {"slope": -2, "intercept": 1}}, "fuel": "1e30"}"#;
        let e = parse_config(doc, false).unwrap()[0].build("").unwrap();
        assert_eq!(e.fuel.to_string(), format!("1{}", "0".repeat(30)));
        let zero = doc.replace("1e30", "0");
        assert_eq!(parse_config(&zero, false).unwrap()[0].build("").unwrap_err().path, "fuel");
    }

    #[test]
    fn bruck_view_starts_at_one() {
        let doc = r#"{"space": {"dim": 1}, "map": {"name": "affine-1d", "params": {"slope": "1/2"}},
                      "schema": {"kind": "bruck", "x1": [1]}}"#;
        let e = parse_config(doc, false).unwrap()[0].build("").unwrap();
        assert_eq!(e.seq.point_u64(0).unwrap(), Point::from_ints(&[1]));
    }
}
