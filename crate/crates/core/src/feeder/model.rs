use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use super::FeederError;

pub type C64 = Complex64;
pub type Mat3 = [[C64; 3]; 3];

pub const FT_PER_MILE: f64 = 5280.0;
pub const ZERO3: Mat3 = [[C64::new(0.0, 0.0); 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_char(c: char) -> Option<Phase> {
        match c.to_ascii_lowercase() {
            'a' => Some(Phase::A),
            'b' => Some(Phase::B),
            'c' => Some(Phase::C),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(["a", "b", "c"][self.index()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct PhaseSet(u8);

impl PhaseSet {
    pub const ABC: PhaseSet = PhaseSet(0b111);

    pub fn single(p: Phase) -> Self {
        PhaseSet(1 << p.index())
    }

    pub fn contains(self, p: Phase) -> bool {
        self.0 & (1 << p.index()) != 0
    }

    pub fn is_subset(self, other: PhaseSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Phase> {
        Phase::ALL.into_iter().filter(move |&p| self.contains(p))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn parse(s: &str) -> Option<PhaseSet> {
        let mut bits = 0u8;
        for c in s.chars() {
            let p = Phase::from_char(c)?;
            if bits & (1 << p.index()) != 0 {
                return None;
            }
            bits |= 1 << p.index();
        }
        (bits != 0).then_some(PhaseSet(bits))
    }
}

impl fmt::Display for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.iter() {
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: String,
    pub kv_ll: f64,
    pub phases: PhaseSet,
}

impl Bus {
    /// Line-to-neutral base voltage, V.
    pub fn base_ln_volts(&self) -> f64 {
        self.kv_ll * 1000.0 / libm::sqrt(3.0)
    }
}

/// Per-mile series impedance (ohm) and shunt susceptance (uS).
#[derive(Debug, Clone, PartialEq)]
pub struct LineCode {
    pub name: String,
    pub phases: PhaseSet,
    pub z_per_mile: Mat3,
    pub b_us_per_mile: [[f64; 3]; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub enum BranchKind {
    Line { length_ft: f64, code: usize },
    Switch { closed: bool },
    /// Grounded-wye to grounded-wye, impedance on the rated base.
    Transformer { kva: f64, kv_high: f64, kv_low: f64, r_pct: f64, x_pct: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub kind: BranchKind,
    pub phases: PhaseSet,
    /// Fixed per-phase tap ratios applied at the sending end.
    pub regulator: Option<[f64; 3]>,
}

impl Branch {
    pub fn is_open(&self) -> bool {
        matches!(self.kind, BranchKind::Switch { closed: false })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connection {
    Wye,
    /// Phase A, B, C columns hold the AB, BC, CA loads.
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadModel {
    ConstantPower,
    ConstantImpedance,
    ConstantCurrent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpotLoad {
    pub bus: usize,
    pub connection: Connection,
    pub model: LoadModel,
    /// kW + j kvar per phase (or phase pair for delta).
    pub kva: [C64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributedLoad {
    pub branch: usize,
    pub connection: Connection,
    pub model: LoadModel,
    pub kva: [C64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Capacitor {
    pub bus: usize,
    pub phase: Phase,
    pub kvar: f64,
}

/// Radial three-phase feeder. Branch `k` of `parent[b]` feeds bus `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeederModel {
    pub buses: Vec<Bus>,
    pub linecodes: Vec<LineCode>,
    pub branches: Vec<Branch>,
    pub loads: Vec<SpotLoad>,
    pub distributed: Vec<DistributedLoad>,
    pub capacitors: Vec<Capacitor>,
    pub source: usize,
    pub source_pu: f64,
    parent: Vec<Option<usize>>,
    order: Vec<usize>,
}

impl FeederModel {
    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Branch feeding each bus through closed elements.
    pub fn parent(&self, bus: usize) -> Option<usize> {
        self.parent[bus]
    }

    /// Energized buses in breadth-first order from the source.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Buses cut off from the source by open switches.
    pub fn disconnected(&self) -> Vec<&str> {
        let mut live = vec![false; self.buses.len()];
        for &b in &self.order {
            live[b] = true;
        }
        self.buses.iter().zip(live).filter(|(_, l)| !l).map(|(b, _)| b.id.as_str()).collect()
    }

    /// Same network with every spot and distributed load removed.
    pub fn without_loads(&self) -> FeederModel {
        FeederModel { loads: Vec::new(), distributed: Vec::new(), ..self.clone() }
    }

    fn link(&mut self) {
        let n = self.buses.len();
        let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (k, br) in self.branches.iter().enumerate() {
            if !br.is_open() {
                children[br.from].push((k, br.to));
                children[br.to].push((k, br.from));
            }
        }
        self.parent = vec![None; n];
        self.order.clear();
        let mut seen = vec![false; n];
        seen[self.source] = true;
        self.order.push(self.source);
        let mut head = 0;
        while head < self.order.len() {
            let b = self.order[head];
            head += 1;
            for &(k, nb) in &children[b] {
                if !seen[nb] {
                    seen[nb] = true;
                    self.parent[nb] = Some(k);
                    self.order.push(nb);
                }
            }
        }
    }
}

struct Parser {
    model: FeederModel,
    source_seen: bool,
    /// Union-find over buses for the radiality check.
    uf: Vec<usize>,
}

fn err(line: usize, message: impl Into<String>) -> FeederError {
    FeederError::Parse { line, message: message.into() }
}

fn num(line: usize, tok: Option<&str>, what: &str) -> Result<f64, FeederError> {
    let t = tok.ok_or_else(|| err(line, alloc::format!("missing {what}")))?;
    let v: f64 = t.parse().map_err(|_| err(line, alloc::format!("bad {what} `{t}`")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(err(line, alloc::format!("non-finite {what}")))
    }
}

fn complex(line: usize, tok: Option<&str>) -> Result<C64, FeederError> {
    let t = tok.ok_or_else(|| err(line, "missing impedance entry"))?;
    let (re, im) = t.split_once(',').ok_or_else(|| err(line, alloc::format!("impedance entry `{t}` is not re,im")))?;
    Ok(C64::new(num(line, Some(re), "resistance")?, num(line, Some(im), "reactance")?))
}

impl Parser {
    fn find(&mut self, bus: usize) -> usize {
        let mut r = bus;
        while self.uf[r] != r {
            self.uf[r] = self.uf[self.uf[r]];
            r = self.uf[r];
        }
        r
    }

    fn bus(&self, line: usize, tok: Option<&str>) -> Result<usize, FeederError> {
        let id = tok.ok_or_else(|| err(line, "missing bus id"))?;
        self.model.bus_index(id).ok_or_else(|| FeederError::UnknownBus { line, bus: id.to_string() })
    }

    fn add_branch(&mut self, line: usize, from: usize, to: usize, kind: BranchKind, phases: PhaseSet) -> Result<(), FeederError> {
        if from == to {
            return Err(err(line, "branch connects a bus to itself"));
        }
        for b in [from, to] {
            if !phases.is_subset(self.model.buses[b].phases) {
                return Err(FeederError::PhaseMismatch { line, bus: self.model.buses[b].id.clone() });
            }
        }
        let (rf, rt) = (self.find(from), self.find(to));
        if rf == rt {
            return Err(FeederError::Cycle {
                line,
                from: self.model.buses[from].id.clone(),
                to: self.model.buses[to].id.clone(),
            });
        }
        self.uf[rf] = rt;
        self.model.branches.push(Branch { from, to, kind, phases, regulator: None });
        Ok(())
    }

    fn per_phase_kva<'a>(&self, line: usize, toks: &mut impl Iterator<Item = &'a str>) -> Result<[C64; 3], FeederError> {
        let mut kva = [C64::new(0.0, 0.0); 3];
        for s in &mut kva {
            *s = C64::new(num(line, toks.next(), "kW")?, num(line, toks.next(), "kvar")?);
        }
        Ok(kva)
    }

    fn conn_model(line: usize, c: Option<&str>, m: Option<&str>) -> Result<(Connection, LoadModel), FeederError> {
        let conn = match c {
            Some("Y") | Some("y") => Connection::Wye,
            Some("D") | Some("d") => Connection::Delta,
            other => return Err(err(line, alloc::format!("connection must be Y or D, got {other:?}"))),
        };
        let model = match m.map(|s| s.to_ascii_uppercase()).as_deref() {
            Some("PQ") => LoadModel::ConstantPower,
            Some("Z") => LoadModel::ConstantImpedance,
            Some("I") => LoadModel::ConstantCurrent,
            other => return Err(err(line, alloc::format!("load model must be PQ, Z or I, got {other:?}"))),
        };
        Ok((conn, model))
    }

    fn check_load_phases(&self, line: usize, bus: usize, conn: Connection, kva: &[C64; 3]) -> Result<(), FeederError> {
        let have = self.model.buses[bus].phases;
        for p in Phase::ALL {
            if kva[p.index()] == C64::new(0.0, 0.0) {
                continue;
            }
            let needs = match conn {
                Connection::Wye => PhaseSet::single(p),
                Connection::Delta => PhaseSet(PhaseSet::single(p).0 | PhaseSet::single(Phase::ALL[(p.index() + 1) % 3]).0),
            };
            if !needs.is_subset(have) {
                return Err(FeederError::PhaseMismatch { line, bus: self.model.buses[bus].id.clone() });
            }
        }
        Ok(())
    }

    fn statement(&mut self, line: usize, text: &str) -> Result<(), FeederError> {
        let mut toks = text.split_whitespace();
        let Some(kw) = toks.next() else { return Ok(()) };
        match kw {
            "bus" => {
                let id = toks.next().ok_or_else(|| err(line, "missing bus id"))?;
                if self.model.bus_index(id).is_some() {
                    return Err(err(line, alloc::format!("bus {id} declared twice")));
                }
                let kv_ll = num(line, toks.next(), "kV")?;
                if kv_ll <= 0.0 {
                    return Err(err(line, "bus kV must be positive"));
                }
                let ph = toks.next().ok_or_else(|| err(line, "missing phases"))?;
                let phases = PhaseSet::parse(ph).ok_or_else(|| err(line, alloc::format!("bad phases `{ph}`")))?;
                self.model.buses.push(Bus { id: id.to_string(), kv_ll, phases });
                self.uf.push(self.uf.len());
            }
            "source" => {
                self.model.source = self.bus(line, toks.next())?;
                self.model.source_pu = num(line, toks.next(), "source voltage")?;
                self.source_seen = true;
            }
            "linecode" => {
                let name = toks.next().ok_or_else(|| err(line, "missing linecode name"))?.to_string();
                let ph = toks.next().ok_or_else(|| err(line, "missing phases"))?;
                let phases = PhaseSet::parse(ph).ok_or_else(|| err(line, alloc::format!("bad phases `{ph}`")))?;
                let idx: Vec<usize> = phases.iter().map(Phase::index).collect();
                let pairs: Vec<(usize, usize)> =
                    (0..idx.len()).flat_map(|i| (i..idx.len()).map(move |j| (i, j))).map(|(i, j)| (idx[i], idx[j])).collect();
                if toks.next() != Some("z") {
                    return Err(err(line, "expected `z` before impedance entries"));
                }
                let mut z = ZERO3;
                for &(i, j) in &pairs {
                    let v = complex(line, toks.next())?;
                    z[i][j] = v;
                    z[j][i] = v;
                }
                let mut b = [[0.0; 3]; 3];
                match toks.next() {
                    None => {}
                    Some("b") => {
                        for &(i, j) in &pairs {
                            let v = num(line, toks.next(), "susceptance")?;
                            b[i][j] = v;
                            b[j][i] = v;
                        }
                    }
                    Some(t) => return Err(err(line, alloc::format!("unexpected `{t}` in linecode"))),
                }
                for &i in &idx {
                    if z[i][i].re < 0.0 || z[i][i] == C64::new(0.0, 0.0) {
                        return Err(err(line, "impedance matrix needs a positive diagonal"));
                    }
                }
                self.model.linecodes.push(LineCode { name, phases, z_per_mile: z, b_us_per_mile: b });
            }
            "line" => {
                let from = self.bus(line, toks.next())?;
                let to = self.bus(line, toks.next())?;
                let length_ft = num(line, toks.next(), "length")?;
                if length_ft <= 0.0 {
                    return Err(err(line, "line length must be positive"));
                }
                let code_name = toks.next().ok_or_else(|| err(line, "missing linecode"))?;
                let code = self
                    .model
                    .linecodes
                    .iter()
                    .position(|c| c.name == code_name)
                    .ok_or_else(|| err(line, alloc::format!("unknown linecode {code_name}")))?;
                let phases = self.model.linecodes[code].phases;
                self.add_branch(line, from, to, BranchKind::Line { length_ft, code }, phases)?;
            }
            "switch" => {
                let from = self.bus(line, toks.next())?;
                let to = self.bus(line, toks.next())?;
                let closed = match toks.next() {
                    Some("closed") => true,
                    Some("open") => false,
                    other => return Err(err(line, alloc::format!("switch state must be closed or open, got {other:?}"))),
                };
                let phases = PhaseSet(self.model.buses[from].phases.0 & self.model.buses[to].phases.0);
                self.add_branch(line, from, to, BranchKind::Switch { closed }, phases)?;
            }
            "transformer" => {
                let from = self.bus(line, toks.next())?;
                let to = self.bus(line, toks.next())?;
                let kva = num(line, toks.next(), "kVA")?;
                let kv_high = num(line, toks.next(), "high-side kV")?;
                let kv_low = num(line, toks.next(), "low-side kV")?;
                let r_pct = num(line, toks.next(), "R%")?;
                let x_pct = num(line, toks.next(), "X%")?;
                if kva <= 0.0 || kv_high <= 0.0 || kv_low <= 0.0 {
                    return Err(err(line, "transformer ratings must be positive"));
                }
                let phases = self.model.buses[from].phases;
                self.add_branch(line, from, to, BranchKind::Transformer { kva, kv_high, kv_low, r_pct, x_pct }, phases)?;
            }
            "regulator" => {
                let from = self.bus(line, toks.next())?;
                let to = self.bus(line, toks.next())?;
                let mut taps = [1.0; 3];
                for t in &mut taps {
                    *t = num(line, toks.next(), "tap ratio")?;
                    if *t <= 0.0 {
                        return Err(err(line, "tap ratio must be positive"));
                    }
                }
                let br = self
                    .model
                    .branches
                    .iter_mut()
                    .find(|b| b.from == from && b.to == to)
                    .ok_or_else(|| err(line, "regulator must sit on a declared branch"))?;
                br.regulator = Some(taps);
            }
            "capacitor" => {
                let bus = self.bus(line, toks.next())?;
                let ph = toks.next().ok_or_else(|| err(line, "missing phase"))?;
                let phase = ph.chars().next().and_then(Phase::from_char).filter(|_| ph.len() == 1);
                let phase = phase.ok_or_else(|| err(line, alloc::format!("bad phase `{ph}`")))?;
                if !self.model.buses[bus].phases.contains(phase) {
                    return Err(FeederError::PhaseMismatch { line, bus: self.model.buses[bus].id.clone() });
                }
                let kvar = num(line, toks.next(), "kvar")?;
                self.model.capacitors.push(Capacitor { bus, phase, kvar });
            }
            "load" => {
                let bus = self.bus(line, toks.next())?;
                let (connection, model) = Self::conn_model(line, toks.next(), toks.next())?;
                let kva = self.per_phase_kva(line, &mut toks)?;
                self.check_load_phases(line, bus, connection, &kva)?;
                self.model.loads.push(SpotLoad { bus, connection, model, kva });
            }
            "distload" => {
                let from = self.bus(line, toks.next())?;
                let to = self.bus(line, toks.next())?;
                let branch = self
                    .model
                    .branches
                    .iter()
                    .position(|b| b.from == from && b.to == to)
                    .ok_or_else(|| err(line, "distributed load must sit on a declared branch"))?;
                let (connection, model) = Self::conn_model(line, toks.next(), toks.next())?;
                let kva = self.per_phase_kva(line, &mut toks)?;
                self.check_load_phases(line, from, connection, &kva)?;
                self.check_load_phases(line, to, connection, &kva)?;
                self.model.distributed.push(DistributedLoad { branch, connection, model, kva });
            }
            other => return Err(err(line, alloc::format!("unknown keyword `{other}`"))),
        }
        if let Some(t) = toks.next() {
            return Err(err(line, alloc::format!("trailing token `{t}`")));
        }
        Ok(())
    }
}

/// Parses the line-oriented feeder format. `#` starts a comment.
pub fn parse_feeder(text: &str) -> Result<FeederModel, FeederError> {
    let mut p = Parser {
        model: FeederModel {
            buses: Vec::new(),
            linecodes: Vec::new(),
            branches: Vec::new(),
            loads: Vec::new(),
            distributed: Vec::new(),
            capacitors: Vec::new(),
            source: 0,
            source_pu: 1.0,
            parent: Vec::new(),
            order: Vec::new(),
        },
        source_seen: false,
        uf: Vec::new(),
    };
    for (k, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        p.statement(k + 1, body)?;
    }
    if p.model.buses.is_empty() {
        return Err(err(0, "no buses declared"));
    }
    if !p.source_seen {
        return Err(err(0, "no source declared"));
    }
    p.model.link();
    Ok(p.model)
}
