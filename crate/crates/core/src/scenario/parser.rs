//! Recursive-descent parser for `.adt` scenario files.
//!
//! Parsing happens in two passes. The first turns tokens into untyped blocks
//! of `key: value` pairs; the second lowers those blocks into a typed
//! [`ScenarioSpec`], reporting unknown keys, duplicates and type mismatches
//! with source positions.

use std::collections::HashMap;

use super::lexer::{tokenize, Tok, Token};
use super::types::*;
use super::validate::{validate, VarType};
use crate::pipeline::NodeId;

#[derive(Debug, Clone)]
struct RawValue {
    kind: RawKind,
    pos: Pos,
}

#[derive(Debug, Clone)]
enum RawKind {
    Number(f64),
    Str(String),
    Ident(String),
    Var(String),
    List(Vec<RawValue>),
}

impl RawKind {
    fn type_name(&self) -> &'static str {
        match self {
            RawKind::Number(_) => "number",
            RawKind::Str(_) => "string",
            RawKind::Ident(_) => "identifier",
            RawKind::Var(_) => "variable",
            RawKind::List(_) => "list",
        }
    }
}

#[derive(Debug, Clone)]
struct RawPair {
    key: String,
    key_pos: Pos,
    value: RawValue,
}

#[derive(Debug, Clone)]
struct RawBlock {
    kind: String,
    pos: Pos,
    label: Option<(String, Pos)>,
    pairs: Vec<RawPair>,
}

#[derive(Debug, Clone)]
enum RawItem {
    Scenario { name: String, pos: Pos },
    Block(RawBlock),
    Sweep { variable: String, pos: Pos, values: RawValue },
}

const BLOCK_KEYWORDS: &[&str] = &["scenario", "road", "ego", "agent", "fault", "mission", "sweep"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<Token, Diagnostic> {
        let t = self.next();
        if std::mem::discriminant(&t.tok) == std::mem::discriminant(want) {
            Ok(t)
        } else {
            Err(Diagnostic::error(t.pos, format!("expected {what}, found {}", t.tok.describe())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos), Diagnostic> {
        let t = self.next();
        match t.tok {
            Tok::Ident(s) => Ok((s, t.pos)),
            other => Err(Diagnostic::error(t.pos, format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn items(&mut self) -> Vec<RawItem> {
        let mut items = Vec::new();
        loop {
            if self.peek().tok == Tok::Eof {
                return items;
            }
            match self.item() {
                Ok(item) => items.push(item),
                Err(d) => {
                    self.diags.push(d);
                    self.recover();
                }
            }
        }
    }

    /// Skip to the next block keyword outside of any braces.
    fn recover(&mut self) {
        let mut depth = 0i32;
        loop {
            match &self.peek().tok {
                Tok::Eof => return,
                Tok::LBrace | Tok::LBracket => depth += 1,
                Tok::RBrace | Tok::RBracket => depth -= 1,
                Tok::Ident(s) if depth <= 0 && BLOCK_KEYWORDS.contains(&s.as_str()) => return,
                _ => {}
            }
            self.next();
        }
    }

    fn item(&mut self) -> Result<RawItem, Diagnostic> {
        let (kw, pos) = self.ident("a block keyword")?;
        match kw.as_str() {
            "scenario" => {
                let t = self.next();
                match t.tok {
                    Tok::Str(name) => Ok(RawItem::Scenario { name, pos }),
                    other => Err(Diagnostic::error(
                        t.pos,
                        format!("expected scenario name string, found {}", other.describe()),
                    )),
                }
            }
            "road" | "ego" => {
                let pairs = self.body()?;
                Ok(RawItem::Block(RawBlock { kind: kw, pos, label: None, pairs }))
            }
            "agent" | "mission" | "fault" => {
                let what = match kw.as_str() {
                    "agent" => "agent name",
                    "mission" => "mission kind",
                    _ => "fault kind",
                };
                let label = self.ident(what)?;
                let pairs = self.body()?;
                Ok(RawItem::Block(RawBlock { kind: kw, pos, label: Some(label), pairs }))
            }
            "sweep" => {
                let t = self.next();
                let variable = match t.tok {
                    Tok::Ident(s) | Tok::Var(s) => s,
                    other => {
                        return Err(Diagnostic::error(
                            t.pos,
                            format!("expected sweep variable name, found {}", other.describe()),
                        ))
                    }
                };
                let (kw_in, in_pos) = self.ident("`in`")?;
                if kw_in != "in" {
                    return Err(Diagnostic::error(in_pos, format!("expected `in`, found `{kw_in}`")));
                }
                let values = self.value()?;
                Ok(RawItem::Sweep { variable, pos, values })
            }
            other => Err(Diagnostic::error(pos, format!("unknown block `{other}`"))),
        }
    }

    fn body(&mut self) -> Result<Vec<RawPair>, Diagnostic> {
        self.expect(&Tok::LBrace, "`{`")?;
        let mut pairs = Vec::new();
        loop {
            if self.peek().tok == Tok::RBrace {
                self.next();
                return Ok(pairs);
            }
            let (key, key_pos) = self.ident("a key or `}`")?;
            self.expect(&Tok::Colon, "`:`")?;
            let value = self.value()?;
            pairs.push(RawPair { key, key_pos, value });
            let t = self.next();
            match t.tok {
                Tok::Comma => {}
                Tok::RBrace => return Ok(pairs),
                other => {
                    return Err(Diagnostic::error(t.pos, format!("expected `,` or `}}`, found {}", other.describe())))
                }
            }
        }
    }

    fn value(&mut self) -> Result<RawValue, Diagnostic> {
        let t = self.next();
        let kind = match t.tok {
            Tok::Number(n) => RawKind::Number(n),
            Tok::Str(s) => RawKind::Str(s),
            Tok::Ident(s) => RawKind::Ident(s),
            Tok::Var(s) => RawKind::Var(s),
            Tok::LBracket => {
                let mut items = Vec::new();
                loop {
                    if self.peek().tok == Tok::RBracket {
                        self.next();
                        break;
                    }
                    items.push(self.value()?);
                    let sep = self.next();
                    match sep.tok {
                        Tok::Comma => {}
                        Tok::RBracket => break,
                        other => {
                            return Err(Diagnostic::error(
                                sep.pos,
                                format!("expected `,` or `]`, found {}", other.describe()),
                            ))
                        }
                    }
                }
                RawKind::List(items)
            }
            other => return Err(Diagnostic::error(t.pos, format!("expected a value, found {}", other.describe()))),
        };
        Ok(RawValue { kind, pos: t.pos })
    }
}

/// Reads typed keys out of one block, then reports whatever was left over.
struct KeyReader<'a> {
    block: String,
    path: String,
    pos: Pos,
    pairs: HashMap<String, &'a RawPair>,
    order: Vec<&'a str>,
    consumed: Vec<String>,
}

impl<'a> KeyReader<'a> {
    fn new(block: &'a RawBlock, display: String, path: String, lw: &mut Lowerer) -> Self {
        let mut pairs = HashMap::new();
        let mut order = Vec::new();
        for p in &block.pairs {
            if pairs.contains_key(&p.key) {
                lw.error(p.key_pos, format!("duplicate key `{}` in `{display}`", p.key));
                continue;
            }
            lw.source.insert(format!("{path}.{}", p.key), p.value.pos);
            pairs.insert(p.key.clone(), p);
            order.push(p.key.as_str());
        }
        lw.source.insert(path.clone(), block.pos);
        Self { block: display, path, pos: block.pos, pairs, order, consumed: Vec::new() }
    }

    fn take(&mut self, key: &str) -> Option<&'a RawPair> {
        let p = self.pairs.get(key).copied();
        if p.is_some() {
            self.consumed.push(key.to_string());
        }
        p
    }

    fn has(&self, key: &str) -> bool {
        self.pairs.contains_key(key)
    }

    fn missing(&self, lw: &mut Lowerer, key: &str) {
        lw.error(self.pos, format!("missing required key `{key}` in `{}`", self.block));
    }

    fn f64(&mut self, lw: &mut Lowerer, key: &str, default: Option<f64>) -> Param<f64> {
        let Some(pair) = self.take(key) else {
            if default.is_none() {
                self.missing(lw, key);
            }
            return Param::Lit(default.unwrap_or(0.0));
        };
        match &pair.value.kind {
            RawKind::Number(n) => Param::Lit(*n),
            RawKind::Var(v) => lw.var(v, VarType::Number, pair.value.pos),
            other => {
                lw.error(
                    pair.value.pos,
                    format!("type mismatch: `{key}` expects a number, found {}", other.type_name()),
                );
                Param::Lit(default.unwrap_or(0.0))
            }
        }
    }

    fn integer(&mut self, lw: &mut Lowerer, key: &str, default: Option<u64>, max: u64) -> Param<u64> {
        let Some(pair) = self.take(key) else {
            if default.is_none() {
                self.missing(lw, key);
            }
            return Param::Lit(default.unwrap_or(0));
        };
        match &pair.value.kind {
            RawKind::Number(n) => match as_integer(*n, max) {
                Some(i) => Param::Lit(i),
                None => {
                    lw.error(
                        pair.value.pos,
                        format!("type mismatch: `{key}` expects a non-negative integer, found {n}"),
                    );
                    Param::Lit(default.unwrap_or(0))
                }
            },
            RawKind::Var(v) => lw.var(v, VarType::integer(max), pair.value.pos),
            other => {
                lw.error(
                    pair.value.pos,
                    format!("type mismatch: `{key}` expects a non-negative integer, found {}", other.type_name()),
                );
                Param::Lit(default.unwrap_or(0))
            }
        }
    }

    fn u32(&mut self, lw: &mut Lowerer, key: &str, default: Option<u32>) -> Param<u32> {
        match self.integer(lw, key, default.map(u64::from), u64::from(u32::MAX)) {
            Param::Lit(v) => Param::Lit(v as u32),
            Param::Var(v) => Param::Var(v),
        }
    }

    fn ident(&mut self, lw: &mut Lowerer, key: &str) -> Option<(String, Pos)> {
        let pair = self.take(key)?;
        match &pair.value.kind {
            RawKind::Ident(s) => Some((s.clone(), pair.value.pos)),
            other => {
                lw.error(
                    pair.value.pos,
                    format!("type mismatch: `{key}` expects an identifier, found {}", other.type_name()),
                );
                None
            }
        }
    }

    fn node(&mut self, lw: &mut Lowerer, key: &str) -> Param<NodeId> {
        let Some(pair) = self.take(key) else {
            self.missing(lw, key);
            return Param::Lit(NodeId::Control);
        };
        match &pair.value.kind {
            RawKind::Ident(s) => match NodeId::from_name(s) {
                Some(n) => Param::Lit(n),
                None => {
                    lw.error(
                        pair.value.pos,
                        format!("unknown pipeline node `{s}` (expected perception, planning or control)"),
                    );
                    Param::Lit(NodeId::Control)
                }
            },
            RawKind::Var(v) => lw.var(v, VarType::Node, pair.value.pos),
            other => {
                lw.error(
                    pair.value.pos,
                    format!("type mismatch: `{key}` expects a node name, found {}", other.type_name()),
                );
                Param::Lit(NodeId::Control)
            }
        }
    }

    fn finish(self, lw: &mut Lowerer) {
        for key in &self.order {
            if !self.consumed.iter().any(|c| c == key) {
                let pos = self.pairs[*key].key_pos;
                lw.error(pos, format!("unknown key `{key}` in `{}`", self.block));
            }
        }
        let _ = self.path;
    }
}

fn as_integer(n: f64, max: u64) -> Option<u64> {
    if n >= 0.0 && n.fract() == 0.0 && n <= max as f64 {
        Some(n as u64)
    } else {
        None
    }
}

struct Lowerer {
    diags: Vec<Diagnostic>,
    source: SourceMap,
}

impl Lowerer {
    fn error(&mut self, pos: Pos, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(pos, msg));
    }

    fn var<T>(&mut self, name: &str, _ty: VarType, _pos: Pos) -> Param<T> {
        Param::Var(name.to_string())
    }

    fn dims(&mut self, r: &mut KeyReader<'_>) -> VehicleDims {
        VehicleDims {
            length: r.f64(self, "length", Some(DEFAULT_LENGTH)),
            width: r.f64(self, "width", Some(DEFAULT_WIDTH)),
            wheelbase: r.f64(self, "wheelbase", Some(DEFAULT_WHEELBASE)),
        }
    }

    fn road(&mut self, b: &RawBlock) -> RoadDecl {
        let mut r = KeyReader::new(b, "road".into(), "road".into(), self);
        let lane_count = r.u32(self, "lanes", None);
        let lane_width = r.f64(self, "lane_width", None);
        let mut segments = Vec::new();
        match r.take("segments") {
            None => segments.push(SegmentDecl { length: Param::Lit(1000.0), curvature: Param::Lit(0.0) }),
            Some(pair) => match &pair.value.kind {
                RawKind::List(items) => {
                    for (i, item) in items.iter().enumerate() {
                        self.source.insert(format!("road.segments[{i}]"), item.pos);
                        match &item.kind {
                            RawKind::List(pair) if pair.len() == 2 => {
                                let length = self.scalar_f64(&pair[0], "segment length");
                                let curvature = self.scalar_f64(&pair[1], "segment curvature");
                                segments.push(SegmentDecl { length, curvature });
                            }
                            _ => self.error(item.pos, "each segment must be a `[length, curvature]` pair"),
                        }
                    }
                }
                other => self.error(
                    pair.value.pos,
                    format!(
                        "type mismatch: `segments` expects a list of [length, curvature], found {}",
                        other.type_name()
                    ),
                ),
            },
        }
        r.finish(self);
        RoadDecl { lane_count, lane_width, segments }
    }

    fn scalar_f64(&mut self, v: &RawValue, what: &str) -> Param<f64> {
        match &v.kind {
            RawKind::Number(n) => Param::Lit(*n),
            RawKind::Var(name) => self.var(name, VarType::Number, v.pos),
            other => {
                self.error(v.pos, format!("type mismatch: {what} expects a number, found {}", other.type_name()));
                Param::Lit(0.0)
            }
        }
    }

    fn ego(&mut self, b: &RawBlock) -> EgoDecl {
        let mut r = KeyReader::new(b, "ego".into(), "ego".into(), self);
        let lane = r.u32(self, "lane", None);
        let s = r.f64(self, "s", None);
        let speed = r.f64(self, "speed", None);
        let dims = self.dims(&mut r);
        r.finish(self);
        EgoDecl { lane, s, speed, dims }
    }

    fn agent(&mut self, b: &RawBlock, index: usize) -> AgentDecl {
        let (name, _) = b.label.clone().unwrap_or_default();
        let path = format!("agent[{index}]");
        let mut r = KeyReader::new(b, format!("agent {name}"), path, self);
        let lane = r.u32(self, "lane", None);
        let s = r.f64(self, "s", None);
        let speed = r.f64(self, "speed", None);
        let behavior = match r.ident(self, "behavior") {
            None => BehaviorDecl::Cruise,
            Some((kind, pos)) => match kind.as_str() {
                "cruise" => BehaviorDecl::Cruise,
                "stop" => BehaviorDecl::Stop,
                "emergency_brake" => {
                    BehaviorDecl::EmergencyBrake { at: r.f64(self, "at", None), decel: r.f64(self, "decel", None) }
                }
                "cut_in" => BehaviorDecl::CutIn {
                    at: r.f64(self, "at", None),
                    target_lane: r.u32(self, "target_lane", None),
                    duration: r.f64(self, "duration", None),
                },
                other => {
                    self.error(
                        pos,
                        format!("unknown behavior `{other}` (expected cruise, emergency_brake, cut_in or stop)"),
                    );
                    BehaviorDecl::Cruise
                }
            },
        };
        let dims = self.dims(&mut r);
        r.finish(self);
        AgentDecl { name, lane, s, speed, behavior, dims }
    }

    fn mission(&mut self, b: &RawBlock) -> MissionDecl {
        let (kind_name, kind_pos) = b.label.clone().unwrap_or_default();
        let kind = MissionKind::from_keyword(&kind_name).unwrap_or_else(|| {
            self.error(kind_pos, format!("unknown mission kind `{kind_name}` (expected follow, turn or overtake)"));
            MissionKind::Follow
        });
        let mut r = KeyReader::new(b, format!("mission {kind_name}"), "mission".into(), self);
        let target_s = r.f64(self, "target_s", None);
        let timeout = r.f64(self, "timeout", None);
        r.finish(self);
        MissionDecl { kind, target_s, timeout }
    }

    fn fault(&mut self, b: &RawBlock, index: usize) -> Option<FaultDecl> {
        let (kind, kind_pos) = b.label.clone().unwrap_or_default();
        let path = format!("fault[{index}]");
        let mut r = KeyReader::new(b, format!("fault {kind}"), path, self);
        let decl = match kind.as_str() {
            "sensor.drop" => FaultDecl::SensorDrop {
                rate: r.f64(self, "rate", None),
                delay_sigma: r.f64(self, "delay_sigma", Some(0.0)),
            },
            "sensor.shift" => FaultDecl::SensorShift {
                x: r.f64(self, "x", Some(0.0)),
                y: r.f64(self, "y", Some(0.0)),
                z: r.f64(self, "z", Some(0.0)),
                yaw: r.f64(self, "yaw", Some(0.0)),
                pitch: r.f64(self, "pitch", Some(0.0)),
                roll: r.f64(self, "roll", Some(0.0)),
                translation_sigma: r.f64(self, "translation_sigma", Some(0.0)),
                rotation_sigma: r.f64(self, "rotation_sigma", Some(0.0)),
            },
            "sensor.noise" => FaultDecl::SensorNoise {
                position_sigma: r.f64(self, "position_sigma", Some(0.0)),
                yaw_sigma: r.f64(self, "yaw_sigma", Some(0.0)),
            },
            "compute.bitflip" => {
                let node = r.node(self, "node");
                let target = if r.has("index") {
                    FlipTarget::Fixed {
                        index: r.u32(self, "index", None),
                        bit: r.u32(self, "bit", None),
                        tick: r.integer(self, "tick", None, u64::MAX >> 11),
                    }
                } else {
                    let count = r.u32(self, "count", None);
                    let (tick_lo, tick_hi) = self.tick_range(&mut r);
                    FlipTarget::Random { count, tick_lo, tick_hi }
                };
                FaultDecl::ComputeBitflip { node, target }
            }
            "compute.stuck" => FaultDecl::ComputeStuck {
                node: r.node(self, "node"),
                index: r.u32(self, "index", None),
                value: r.f64(self, "value", None),
                tick: r.integer(self, "tick", None, u64::MAX >> 11),
            },
            other => {
                self.error(
                    kind_pos,
                    format!(
                        "unknown fault kind `{other}` (expected sensor.drop, sensor.shift, sensor.noise, compute.bitflip or compute.stuck)"
                    ),
                );
                return None;
            }
        };
        r.finish(self);
        Some(decl)
    }

    fn tick_range(&mut self, r: &mut KeyReader<'_>) -> (Param<u64>, Param<u64>) {
        let max = u64::MAX >> 11;
        let Some(pair) = r.take("tick") else {
            r.missing(self, "tick");
            return (Param::Lit(0), Param::Lit(0));
        };
        let one = |lw: &mut Lowerer, v: &RawValue| -> Param<u64> {
            match &v.kind {
                RawKind::Number(n) => match as_integer(*n, max) {
                    Some(i) => Param::Lit(i),
                    None => {
                        lw.error(v.pos, format!("type mismatch: `tick` expects a non-negative integer, found {n}"));
                        Param::Lit(0)
                    }
                },
                RawKind::Var(name) => lw.var(name, VarType::integer(max), v.pos),
                other => {
                    lw.error(
                        v.pos,
                        format!("type mismatch: `tick` expects an integer or [lo, hi], found {}", other.type_name()),
                    );
                    Param::Lit(0)
                }
            }
        };
        match &pair.value.kind {
            RawKind::List(items) if items.len() == 2 => (one(self, &items[0]), one(self, &items[1])),
            RawKind::List(_) => {
                self.error(pair.value.pos, "`tick` range must be `[lo, hi]`");
                (Param::Lit(0), Param::Lit(0))
            }
            _ => {
                let t = one(self, &pair.value);
                (t.clone(), t)
            }
        }
    }

    fn sweep(&mut self, variable: &str, pos: Pos, values: &RawValue, index: usize) -> Option<SweepAxis> {
        self.source.insert(format!("sweep[{index}]"), pos);
        self.source.insert(format!("sweep[{index}].values"), values.pos);
        let RawKind::List(items) = &values.kind else {
            self.error(
                values.pos,
                format!("sweep `{variable}` expects a list of values, found {}", values.kind.type_name()),
            );
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            match &item.kind {
                RawKind::Number(n) => out.push(Value::Number(*n)),
                RawKind::Str(s) => out.push(Value::Str(s.clone())),
                RawKind::Ident(s) => out.push(Value::Ident(s.clone())),
                other => {
                    self.error(
                        item.pos,
                        format!("sweep values must be numbers, strings or identifiers, found {}", other.type_name()),
                    );
                    return None;
                }
            }
        }
        Some(SweepAxis { variable: variable.to_string(), values: out })
    }
}

/// Parses and validates scenario text. Warnings are discarded on success;
/// use [`check_scenario`] to see them.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, Vec<Diagnostic>> {
    let (spec, diags) = check_scenario(text);
    match spec {
        Some(spec) => Ok(spec),
        None => Err(diags),
    }
}

/// Parses and validates, returning the spec (when error-free) together with
/// every diagnostic, warnings included.
pub fn check_scenario(text: &str) -> (Option<ScenarioSpec>, Vec<Diagnostic>) {
    let tokens = match tokenize(text) {
        Ok(t) => t,
        Err(d) => return (None, vec![d]),
    };
    let mut parser = Parser { tokens, pos: 0, diags: Vec::new() };
    let items = parser.items();
    let mut lw = Lowerer { diags: parser.diags, source: SourceMap::default() };

    let mut name: Option<String> = None;
    let mut road = None;
    let mut ego = None;
    let mut mission = None;
    let mut agents = Vec::new();
    let mut faults = Vec::new();
    let mut sweeps = Vec::new();
    let mut fault_index = 0;

    for item in &items {
        match item {
            RawItem::Scenario { name: n, pos } => {
                if name.is_some() {
                    lw.error(*pos, "duplicate `scenario` declaration");
                } else {
                    lw.source.insert("scenario", *pos);
                    name = Some(n.clone());
                }
            }
            RawItem::Block(b) => match b.kind.as_str() {
                "road" => {
                    if road.is_some() {
                        lw.error(b.pos, "duplicate `road` block");
                    } else {
                        road = Some(lw.road(b));
                    }
                }
                "ego" => {
                    if ego.is_some() {
                        lw.error(b.pos, "duplicate `ego` block");
                    } else {
                        ego = Some(lw.ego(b));
                    }
                }
                "mission" => {
                    if mission.is_some() {
                        lw.error(b.pos, "duplicate `mission` block");
                    } else {
                        mission = Some(lw.mission(b));
                    }
                }
                "agent" => {
                    let idx = agents.len();
                    agents.push(lw.agent(b, idx));
                }
                "fault" => {
                    if let Some(f) = lw.fault(b, fault_index) {
                        faults.push(f);
                        fault_index += 1;
                    }
                }
                _ => unreachable!("parser only yields known block kinds"),
            },
            RawItem::Sweep { variable, pos, values } => {
                if let Some(axis) = lw.sweep(variable, *pos, values, sweeps.len()) {
                    sweeps.push(axis);
                }
            }
        }
    }

    let eof = super::lexer::eof_pos(text);
    let first = Pos::new(1, 1);
    if name.is_none() {
        lw.error(first, "missing `scenario \"name\"` declaration");
    }
    if road.is_none() {
        lw.error(eof, "missing `road` block");
    }
    if ego.is_none() {
        lw.error(eof, "missing `ego` block");
    }
    if mission.is_none() {
        lw.error(eof, "missing `mission` block");
    }
    let (Some(name), Some(road), Some(ego), Some(mission)) = (name, road, ego, mission) else {
        return (None, lw.diags);
    };
    let spec = ScenarioSpec { name, road, ego, agents, mission, faults, sweeps, source: lw.source };
    let mut diags = lw.diags;
    if diags.iter().any(Diagnostic::is_error) {
        return (None, diags);
    }
    diags.extend(validate(&spec));
    if diags.iter().any(Diagnostic::is_error) {
        (None, diags)
    } else {
        (Some(spec), diags)
    }
}
