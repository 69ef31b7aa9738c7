use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// Sparse row `sum(coeff * x) <sense> rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Linear objective to minimise.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Objective {
    pub coeffs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Objective {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }
}

/// Decision variable families of the microgrid model, in the fixed
/// per-slot declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    PGrid,
    PChB,
    PDisB,
    PG2v,
    PV2g,
    SocB,
    SocEv,
    PHvac,
    PLight,
    TSet,
    Phi,
    B1,
    D1,
    E1,
    E2,
    /// Epigraph variable for the peak grid draw; not slot-indexed.
    PPeak,
}

impl Symbol {
    /// The fifteen slot-indexed families in declaration order.
    pub const PER_SLOT: [Symbol; 15] = [
        Symbol::PGrid,
        Symbol::PChB,
        Symbol::PDisB,
        Symbol::PG2v,
        Symbol::PV2g,
        Symbol::SocB,
        Symbol::SocEv,
        Symbol::PHvac,
        Symbol::PLight,
        Symbol::TSet,
        Symbol::Phi,
        Symbol::B1,
        Symbol::D1,
        Symbol::E1,
        Symbol::E2,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Symbol::PGrid => "p_grid",
            Symbol::PChB => "p_ch_b",
            Symbol::PDisB => "p_dis_b",
            Symbol::PG2v => "p_g2v",
            Symbol::PV2g => "p_v2g",
            Symbol::SocB => "soc_b",
            Symbol::SocEv => "soc_ev",
            Symbol::PHvac => "p_hvac",
            Symbol::PLight => "p_light",
            Symbol::TSet => "t_set",
            Symbol::Phi => "phi",
            Symbol::B1 => "b1",
            Symbol::D1 => "d1",
            Symbol::E1 => "e1",
            Symbol::E2 => "e2",
            Symbol::PPeak => "p_peak",
        }
    }

    pub fn is_binary(self) -> bool {
        matches!(self, Symbol::B1 | Symbol::D1 | Symbol::E1 | Symbol::E2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarKey {
    pub symbol: Symbol,
    pub slot: Option<usize>,
}

impl VarKey {
    pub fn at(symbol: Symbol, slot: usize) -> Self {
        VarKey { symbol, slot: Some(slot) }
    }

    pub fn scalar(symbol: Symbol) -> Self {
        VarKey { symbol, slot: None }
    }
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.slot {
            Some(s) => write!(f, "{}_{}", self.symbol.tag(), s),
            None => f.write_str(self.symbol.tag()),
        }
    }
}

/// Solver-agnostic mixed-integer program: minimise `objective` subject to
/// `constraints`, variable bounds and integrality.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MilpProblem {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
    index: BTreeMap<VarKey, usize>,
}

impl MilpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, kind: VarKind) -> usize {
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            VarKind::Continuous => (lower, upper),
        };
        self.variables.push(Variable { name: name.into(), lower, upper, kind });
        self.variables.len() - 1
    }

    /// Declares a keyed variable; the name is derived from the key.
    pub fn add_keyed_var(&mut self, key: VarKey, lower: f64, upper: f64, kind: VarKind) -> usize {
        let j = self.add_var(alloc::format!("{key}"), lower, upper, kind);
        let prev = self.index.insert(key, j);
        debug_assert!(prev.is_none(), "duplicate key {key}");
        j
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.variables.len()));
        self.constraints.push(Constraint { name: name.into(), coeffs, sense, rhs });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, coeffs: Vec<(usize, f64)>, constant: f64) {
        self.objective = Objective { coeffs, constant };
    }

    pub fn var(&self, key: VarKey) -> Option<usize> {
        self.index.get(&key).copied()
    }

    pub fn index(&self) -> &BTreeMap<VarKey, usize> {
        &self.index
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_binary(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn binaries(&self) -> impl Iterator<Item = usize> + '_ {
        self.variables.iter().enumerate().filter(|(_, v)| v.kind == VarKind::Binary).map(|(j, _)| j)
    }

    /// Same problem with every binary relaxed to a continuous variable on [0, 1].
    pub fn relaxed(&self) -> MilpProblem {
        let mut p = self.clone();
        for v in &mut p.variables {
            v.kind = VarKind::Continuous;
        }
        p
    }

    /// Copy with each `(variable, value)` fixed through its bounds.
    pub fn with_fixed(&self, fixes: &[(usize, f64)]) -> MilpProblem {
        let mut p = self.clone();
        for &(j, v) in fixes {
            p.variables[j].lower = v;
            p.variables[j].upper = v;
        }
        p
    }

    /// Objective scaled by `factor`, for scale-invariance checks.
    pub fn with_scaled_objective(&self, factor: f64) -> MilpProblem {
        let mut p = self.clone();
        for c in &mut p.objective.coeffs {
            c.1 *= factor;
        }
        p.objective.constant *= factor;
        p
    }

    /// Checks the structural invariants: column references in range, binary
    /// bounds within [0, 1], and the key index a bijection onto its variables.
    pub fn check_structure(&self) -> Result<(), String> {
        let n = self.variables.len();
        for c in &self.constraints {
            if let Some(&(j, _)) = c.coeffs.iter().find(|&&(j, _)| j >= n) {
                return Err(alloc::format!("row {} references undeclared column {j}", c.name));
            }
        }
        if let Some(&(j, _)) = self.objective.coeffs.iter().find(|&&(j, _)| j >= n) {
            return Err(alloc::format!("objective references undeclared column {j}"));
        }
        for v in &self.variables {
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(alloc::format!("binary {} has bounds [{}, {}]", v.name, v.lower, v.upper));
            }
        }
        let mut seen = alloc::vec![false; n];
        for (key, &j) in &self.index {
            if j >= n || seen[j] {
                return Err(alloc::format!("index entry {key} is not injective"));
            }
            seen[j] = true;
            if self.variables[j].name != alloc::format!("{key}") {
                return Err(alloc::format!("index entry {key} points at {}", self.variables[j].name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// An iteration or node limit stopped the search. Any incumbent found is
    /// still reported.
    IterationLimit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterationLimit => "iteration limit",
        };
        f.write_str(s)
    }
}

/// Result of a MILP solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    /// One value per variable; empty when no feasible point is known.
    pub values: Vec<f64>,
    pub objective_value: f64,
    /// Branch-and-bound nodes evaluated, root included.
    pub nodes: usize,
    /// Relative gap between incumbent and best bound at termination.
    pub gap: f64,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn without_values(status: SolveStatus, nodes: usize) -> Self {
        Solution { status, values: Vec::new(), objective_value: f64::NAN, nodes, gap: f64::INFINITY }
    }
}
