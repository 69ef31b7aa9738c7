//! Forward-backward sweep on the phase frame, in volts and amps.

use alloc::vec;
use alloc::vec::Vec;

use super::model::{BranchKind, Connection, FeederModel, LoadModel, Mat3, Phase, C64, FT_PER_MILE, ZERO3};
use super::FeederError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Largest per-unit voltage update accepted as converged.
    pub tol_pu: f64,
    pub max_iterations: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { tol_pu: 1e-6, max_iterations: 100 }
    }
}

/// Extra constant-power wye load per bus and phase, kW + j kvar.
/// Negative real part is generation.
#[derive(Debug, Clone, PartialEq)]
pub struct Injections {
    kva: Vec<[C64; 3]>,
}

impl Injections {
    pub fn none(f: &FeederModel) -> Self {
        Injections { kva: vec![[C64::new(0.0, 0.0); 3]; f.buses.len()] }
    }

    pub fn add(&mut self, bus: usize, phase: Phase, kva: C64) {
        self.kva[bus][phase.index()] += kva;
    }

    pub fn get(&self, bus: usize, phase: Phase) -> C64 {
        self.kva[bus][phase.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlow {
    /// Line-to-neutral voltage per bus and phase, V. Zero on absent phases.
    pub voltages: Vec<[C64; 3]>,
    /// Current entering the receiving bus of each branch, A.
    pub branch_currents: Vec<[C64; 3]>,
    /// Current drawn at each bus by loads, capacitors and line charging, A.
    pub bus_currents: Vec<[C64; 3]>,
    /// Power delivered by the source, kVA per phase.
    pub source_kva: [C64; 3],
    pub iterations: usize,
    pub residual_pu: f64,
    base: Vec<f64>,
}

impl PowerFlow {
    pub fn v_pu(&self, bus: usize, phase: Phase) -> C64 {
        self.voltages[bus][phase.index()] / self.base[bus]
    }
}

struct LoadTerm {
    bus: usize,
    connection: Connection,
    model: LoadModel,
    va: [C64; 3],
}

fn mat_vec(m: &Mat3, v: &[C64; 3]) -> [C64; 3] {
    let mut out = [C64::new(0.0, 0.0); 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    }
    out
}

fn load_current(model: LoadModel, s: C64, v: C64, v_rated: f64) -> C64 {
    if s == C64::new(0.0, 0.0) {
        return C64::new(0.0, 0.0);
    }
    match model {
        LoadModel::ConstantPower => (s / v).conj(),
        LoadModel::ConstantImpedance => v * s.conj() / (v_rated * v_rated),
        LoadModel::ConstantCurrent => C64::from_polar(s.norm() / v_rated, v.arg() - s.arg()),
    }
}

impl FeederModel {
    /// Series impedance of a branch, ohm, referred to its receiving side.
    pub fn branch_series_z(&self, k: usize) -> Mat3 {
        match self.branches[k].kind {
            BranchKind::Line { length_ft, code } => {
                let mut z = self.linecodes[code].z_per_mile;
                for row in &mut z {
                    for e in row.iter_mut() {
                        *e *= length_ft / FT_PER_MILE;
                    }
                }
                z
            }
            BranchKind::Switch { .. } => ZERO3,
            BranchKind::Transformer { kva, kv_low, r_pct, x_pct, .. } => {
                let zt = C64::new(r_pct, x_pct) / 100.0 * (kv_low * kv_low * 1000.0 / kva);
                let mut z = ZERO3;
                for p in self.branches[k].phases.iter() {
                    z[p.index()][p.index()] = zt;
                }
                z
            }
        }
    }

    fn turns(&self, k: usize) -> f64 {
        match self.branches[k].kind {
            BranchKind::Transformer { kv_high, kv_low, .. } => kv_high / kv_low,
            _ => 1.0,
        }
    }
}

/// Solves the feeder with its own loads plus `extra`.
pub fn power_flow(f: &FeederModel, extra: &Injections, opts: &FlowOptions) -> Result<PowerFlow, FeederError> {
    let cut = f.disconnected();
    if !cut.is_empty() {
        return Err(FeederError::Disconnected(cut.into_iter().map(Into::into).collect()));
    }
    let n = f.buses.len();
    let nb = f.branches.len();
    let base: Vec<f64> = f.buses.iter().map(|b| b.base_ln_volts()).collect();

    // Orient each energized branch away from the source.
    let mut upstream = vec![usize::MAX; nb];
    for &v in f.order() {
        if let Some(k) = f.parent(v) {
            let br = &f.branches[k];
            let u = if br.to == v { br.from } else { br.to };
            let directional = br.regulator.is_some() || matches!(br.kind, BranchKind::Transformer { .. });
            if br.to != v && directional {
                return Err(FeederError::Orientation { from: f.buses[br.from].id.clone(), to: f.buses[br.to].id.clone() });
            }
            upstream[k] = u;
        }
    }

    let z: Vec<Mat3> = (0..nb).map(|k| f.branch_series_z(k)).collect();
    let turns: Vec<f64> = (0..nb).map(|k| f.turns(k)).collect();
    let mut shunt = vec![[[C64::new(0.0, 0.0); 3]; 3]; n];
    for br in &f.branches {
        if let BranchKind::Line { length_ft, code } = br.kind {
            let half = 0.5 * length_ft / FT_PER_MILE * 1e-6;
            let b = &f.linecodes[code].b_us_per_mile;
            for bus in [br.from, br.to] {
                for i in 0..3 {
                    for j in 0..3 {
                        shunt[bus][i][j] += C64::new(0.0, b[i][j] * half);
                    }
                }
            }
        }
    }
    for c in &f.capacitors {
        let i = c.phase.index();
        shunt[c.bus][i][i] += C64::new(0.0, c.kvar * 1000.0 / (base[c.bus] * base[c.bus]));
    }

    let mut loads: Vec<LoadTerm> = f
        .loads
        .iter()
        .map(|l| LoadTerm { bus: l.bus, connection: l.connection, model: l.model, va: l.kva.map(|s| s * 1000.0) })
        .collect();
    for d in &f.distributed {
        let br = &f.branches[d.branch];
        for bus in [br.from, br.to] {
            loads.push(LoadTerm { bus, connection: d.connection, model: d.model, va: d.kva.map(|s| s * 500.0) });
        }
    }
    for (bus, kva) in extra.kva.iter().enumerate() {
        if kva.iter().any(|s| *s != C64::new(0.0, 0.0)) {
            loads.push(LoadTerm {
                bus,
                connection: Connection::Wye,
                model: LoadModel::ConstantPower,
                va: kva.map(|s| s * 1000.0),
            });
        }
    }
    for l in &loads {
        for p in Phase::ALL {
            if l.va[p.index()] != C64::new(0.0, 0.0) && !f.buses[l.bus].phases.contains(p) {
                return Err(FeederError::AbsentPhase { bus: f.buses[l.bus].id.clone(), phase: p });
            }
        }
    }

    let a = C64::from_polar(1.0, 2.0 * core::f64::consts::PI / 3.0);
    let vs = f.source_pu * base[f.source];
    let mut v = vec![[C64::new(0.0, 0.0); 3]; n];
    let src_phases = f.buses[f.source].phases;
    for (i, rot) in [C64::new(1.0, 0.0), a.conj(), a].into_iter().enumerate() {
        if src_phases.contains(Phase::ALL[i]) {
            v[f.source][i] = rot * vs;
        }
    }
    let mut i_branch = vec![[C64::new(0.0, 0.0); 3]; nb];
    let mut i_bus = vec![[C64::new(0.0, 0.0); 3]; n];

    let forward = |v: &mut Vec<[C64; 3]>, i_branch: &[[C64; 3]]| -> f64 {
        let mut delta: f64 = 0.0;
        for &bus in &f.order()[1..] {
            let k = f.parent(bus).expect("energized bus has a feeding branch");
            let br = &f.branches[k];
            let mut send = v[upstream[k]];
            if let Some(taps) = br.regulator {
                for (s, t) in send.iter_mut().zip(taps) {
                    *s *= t;
                }
            }
            let drop = mat_vec(&z[k], &i_branch[k]);
            for p in br.phases.iter() {
                let i = p.index();
                let new = send[i] / turns[k] - drop[i];
                delta = delta.max((new - v[bus][i]).norm() / base[bus]);
                v[bus][i] = new;
            }
        }
        delta
    };
    forward(&mut v, &i_branch);

    let mut residual = f64::INFINITY;
    for iteration in 1..=opts.max_iterations {
        for cur in i_bus.iter_mut() {
            *cur = [C64::new(0.0, 0.0); 3];
        }
        for l in &loads {
            let vb = &v[l.bus];
            let cur = &mut i_bus[l.bus];
            match l.connection {
                Connection::Wye => {
                    for i in 0..3 {
                        cur[i] += load_current(l.model, l.va[i], vb[i], base[l.bus]);
                    }
                }
                Connection::Delta => {
                    let v_ll = base[l.bus] * libm::sqrt(3.0);
                    for i in 0..3 {
                        let j = (i + 1) % 3;
                        let id = load_current(l.model, l.va[i], vb[i] - vb[j], v_ll);
                        cur[i] += id;
                        cur[j] -= id;
                    }
                }
            }
        }
        for bus in 0..n {
            let ish = mat_vec(&shunt[bus], &v[bus]);
            for i in 0..3 {
                i_bus[bus][i] += ish[i];
            }
            if f.buses[bus].phases.iter().any(|p| v[bus][p.index()].norm() < 1e-3 * base[bus]) {
                return Err(FeederError::Collapse { bus: f.buses[bus].id.clone() });
            }
        }

        // Backward: accumulate currents toward the source.
        let mut acc = i_bus.clone();
        for &bus in f.order()[1..].iter().rev() {
            let k = f.parent(bus).expect("energized bus has a feeding branch");
            let br = &f.branches[k];
            let mut here = acc[bus];
            for p in Phase::ALL {
                if !br.phases.contains(p) {
                    here[p.index()] = C64::new(0.0, 0.0);
                }
            }
            i_branch[k] = here;
            let mut up = here.map(|c| c / turns[k]);
            if let Some(taps) = br.regulator {
                for (c, t) in up.iter_mut().zip(taps) {
                    *c *= t;
                }
            }
            for i in 0..3 {
                acc[upstream[k]][i] += up[i];
            }
        }

        residual = forward(&mut v, &i_branch);
        if !residual.is_finite() {
            break;
        }
        if residual < opts.tol_pu {
            let mut source_kva = [C64::new(0.0, 0.0); 3];
            for i in 0..3 {
                source_kva[i] = v[f.source][i] * acc[f.source][i].conj() / 1000.0;
            }
            return Ok(PowerFlow {
                voltages: v,
                branch_currents: i_branch,
                bus_currents: i_bus,
                source_kva,
                iterations: iteration,
                residual_pu: residual,
                base,
            });
        }
    }
    Err(FeederError::Diverged { iterations: opts.max_iterations, residual })
}
