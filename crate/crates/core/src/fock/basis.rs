use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scales::{ModeSet, Species};

/// Particle-number caps of the truncated Fock space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub massive: usize,
    /// `None` keeps every neutrino configuration.
    pub neutrino: Option<usize>,
    pub boson_total: usize,
    pub boson_per_mode: usize,
}

/// Fermionic sign convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FermionSigns {
    /// One Jordan-Wigner string over all fermions: massive modes first, then neutrinos
    /// in descending `|p|`. Massive and neutrino operators anticommute.
    JordanWigner,
    /// Separate strings per species; massive and neutrino operators commute.
    /// Deliberately wrong, kept as a negative control.
    SectorLocal,
}

/// Ladder direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Create,
    Annihilate,
}

#[derive(Debug, Clone)]
struct BosonTable {
    states: Vec<Vec<u8>>,
    /// `[state * modes + mode] -> (target, amplitude)`.
    lower: Vec<Option<(usize, f64)>>,
    raise: Vec<Option<(usize, f64)>>,
}

#[derive(Debug, Clone)]
struct FermionTable {
    states: Vec<u64>,
    index: HashMap<u64, usize>,
    cap: usize,
}

/// Occupation-number basis of the truncated Fock space `F_b (x) F_c (x) F_a`.
///
/// The state `(ib, ic, ia)` has index `(ib * n_c + ic) * n_a + ia`.
#[derive(Debug, Clone)]
pub struct FockBasis {
    pub b_modes: Arc<ModeSet>,
    pub c_modes: Arc<ModeSet>,
    pub a_modes: Arc<ModeSet>,
    pub caps: Caps,
    pub signs: FermionSigns,
    b: FermionTable,
    c: FermionTable,
    a: BosonTable,
}

fn binomial_sum(n: usize, cap: usize) -> u128 {
    let mut total = 0u128;
    let mut term = 1u128;
    for k in 0..=cap.min(n) {
        total += term;
        term = term * (n - k) as u128 / (k + 1) as u128;
    }
    total
}

fn boson_count(modes: usize, per_mode: usize, total: usize) -> u128 {
    // ways[t] = number of configurations with total occupation t
    let mut ways = vec![0u128; total + 1];
    ways[0] = 1;
    for _ in 0..modes {
        let mut next = vec![0u128; total + 1];
        for (t, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for n in 0..=per_mode.min(total - t) {
                next[t + n] += w;
            }
        }
        ways = next;
    }
    ways.iter().sum()
}

fn fermion_table(modes: usize, cap: usize) -> FermionTable {
    let mut states: Vec<u64> = (0..(1u64 << modes)).filter(|m| m.count_ones() as usize <= cap).collect();
    states.sort_by_key(|m| (m.count_ones(), *m));
    let index = states.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    FermionTable { states, index, cap }
}

fn boson_table(modes: usize, per_mode: usize, total: usize) -> BosonTable {
    let mut states: Vec<Vec<u8>> = vec![vec![]];
    for _ in 0..modes {
        let mut next = Vec::new();
        for s in &states {
            let used: usize = s.iter().map(|&x| x as usize).sum();
            for n in 0..=per_mode.min(total - used) {
                let mut t = s.clone();
                t.push(n as u8);
                next.push(t);
            }
        }
        states = next;
    }
    states.sort_by(|x, y| {
        let (sx, sy): (usize, usize) = (x.iter().map(|&v| v as usize).sum(), y.iter().map(|&v| v as usize).sum());
        sx.cmp(&sy).then_with(|| y.cmp(x))
    });
    let index: HashMap<Vec<u8>, usize> = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let mut lower = vec![None; states.len() * modes];
    let mut raise = vec![None; states.len() * modes];
    for (i, s) in states.iter().enumerate() {
        for m in 0..modes {
            if s[m] > 0 {
                let mut t = s.clone();
                t[m] -= 1;
                lower[i * modes + m] = Some((index[&t], (s[m] as f64).sqrt()));
            }
            let mut t = s.clone();
            t[m] += 1;
            if let Some(&j) = index.get(&t) {
                raise[i * modes + m] = Some((j, (t[m] as f64).sqrt()));
            }
        }
    }
    BosonTable { states, lower, raise }
}

/// Number of basis states without enumerating them.
pub fn basis_dimension(nb: usize, nc: usize, na: usize, caps: &Caps) -> u128 {
    binomial_sum(nb, caps.massive)
        * binomial_sum(nc, caps.neutrino.unwrap_or(nc))
        * boson_count(na, caps.boson_per_mode, caps.boson_total)
}

/// Enumerate the occupation basis; fails if the dimension exceeds `limit`.
pub fn enumerate_basis(
    b_modes: Arc<ModeSet>,
    c_modes: Arc<ModeSet>,
    a_modes: Arc<ModeSet>,
    caps: Caps,
    signs: FermionSigns,
    limit: usize,
) -> Result<FockBasis> {
    for (set, want) in [
        (&b_modes, Species::MassiveFermion),
        (&c_modes, Species::Neutrino),
        (&a_modes, Species::Boson),
    ] {
        if set.species != want {
            return Err(Error::GridMismatch(format!("expected {} modes", want.name())));
        }
    }
    for (set, name) in [(&b_modes, "massive"), (&c_modes, "neutrino")] {
        if set.len() > 63 {
            return Err(Error::param(name, "at most 63 fermion modes are supported"));
        }
    }
    if caps.boson_per_mode > 255 {
        return Err(Error::param("boson_per_mode", "must be at most 255"));
    }
    let dim = basis_dimension(b_modes.len(), c_modes.len(), a_modes.len(), &caps);
    if dim > limit as u128 {
        return Err(Error::DimensionTooLarge { dim: dim.min(usize::MAX as u128) as usize, limit });
    }
    let b = fermion_table(b_modes.len(), caps.massive);
    let c = fermion_table(c_modes.len(), caps.neutrino.unwrap_or(c_modes.len()));
    let a = boson_table(a_modes.len(), caps.boson_per_mode, caps.boson_total);
    Ok(FockBasis { b_modes, c_modes, a_modes, caps, signs, b, c, a })
}

impl FockBasis {
    pub fn dim(&self) -> usize {
        self.b.states.len() * self.c.states.len() * self.a.states.len()
    }

    pub fn n_b_states(&self) -> usize {
        self.b.states.len()
    }

    pub fn n_c_states(&self) -> usize {
        self.c.states.len()
    }

    pub fn n_a_states(&self) -> usize {
        self.a.states.len()
    }

    #[inline]
    pub fn decode(&self, idx: usize) -> (usize, usize, usize) {
        let na = self.a.states.len();
        let nc = self.c.states.len();
        (idx / (nc * na), (idx / na) % nc, idx % na)
    }

    #[inline]
    pub fn encode(&self, ib: usize, ic: usize, ia: usize) -> usize {
        (ib * self.c.states.len() + ic) * self.a.states.len() + ia
    }

    pub fn b_state(&self, ib: usize) -> u64 {
        self.b.states[ib]
    }

    pub fn c_state(&self, ic: usize) -> u64 {
        self.c.states[ic]
    }

    pub fn a_state(&self, ia: usize) -> &[u8] {
        &self.a.states[ia]
    }

    pub fn c_index(&self, mask: u64) -> Option<usize> {
        self.c.index.get(&mask).copied()
    }

    pub fn b_index(&self, mask: u64) -> Option<usize> {
        self.b.index.get(&mask).copied()
    }

    /// True if the neutrino cap can exclude states (it truncates the neutrino Fock space).
    pub fn neutrino_cap_binds(&self) -> bool {
        self.c.cap < self.c_modes.len()
    }

    pub fn mode_count(&self, species: Species) -> usize {
        match species {
            Species::MassiveFermion => self.b_modes.len(),
            Species::Neutrino => self.c_modes.len(),
            Species::Boson => self.a_modes.len(),
        }
    }

    /// Particle number of `species` in basis state `idx`.
    pub fn occupation(&self, idx: usize, species: Species) -> usize {
        let (ib, ic, ia) = self.decode(idx);
        match species {
            Species::MassiveFermion => self.b.states[ib].count_ones() as usize,
            Species::Neutrino => self.c.states[ic].count_ones() as usize,
            Species::Boson => self.a.states[ia].iter().map(|&n| n as usize).sum(),
        }
    }

    /// True if one more particle of `species` fits in mode `mode` of state `idx`
    /// (ignoring Pauli blocking), i.e. the state lies strictly inside the caps.
    pub fn is_interior(&self, idx: usize, species: Species, mode: usize) -> bool {
        let (_, _, ia) = self.decode(idx);
        match species {
            Species::MassiveFermion => self.occupation(idx, species) < self.b.cap,
            Species::Neutrino => self.occupation(idx, species) < self.c.cap,
            Species::Boson => {
                self.occupation(idx, species) < self.caps.boson_total
                    && (self.a.states[ia][mode] as usize) < self.caps.boson_per_mode
            }
        }
    }

    /// Apply a ladder operator of `species` on `mode` to basis state `idx`.
    ///
    /// Returns the target index and amplitude, or `None` if the result vanishes or leaves the caps.
    pub fn apply(&self, species: Species, mode: usize, dir: Ladder, idx: usize) -> Option<(usize, f64)> {
        let (ib, ic, ia) = self.decode(idx);
        match species {
            Species::MassiveFermion => {
                let mb = self.b.states[ib];
                let bit = 1u64 << mode;
                let occupied = mb & bit != 0;
                let target = match (dir, occupied) {
                    (Ladder::Create, false) => mb | bit,
                    (Ladder::Annihilate, true) => mb & !bit,
                    _ => return None,
                };
                let nb = self.b.index.get(&target)?;
                let sign = parity((mb & (bit - 1)).count_ones());
                Some((self.encode(*nb, ic, ia), sign))
            }
            Species::Neutrino => {
                let mc = self.c.states[ic];
                let bit = 1u64 << mode;
                let occupied = mc & bit != 0;
                let target = match (dir, occupied) {
                    (Ladder::Create, false) => mc | bit,
                    (Ladder::Annihilate, true) => mc & !bit,
                    _ => return None,
                };
                let nc = self.c.index.get(&target)?;
                let above = (mc >> (mode + 1)).count_ones();
                let string = match self.signs {
                    FermionSigns::JordanWigner => above + self.b.states[ib].count_ones(),
                    FermionSigns::SectorLocal => above,
                };
                Some((self.encode(ib, *nc, ia), parity(string)))
            }
            Species::Boson => {
                let na = self.a_modes.len();
                let table = match dir {
                    Ladder::Create => &self.a.raise,
                    Ladder::Annihilate => &self.a.lower,
                };
                let (ja, amp) = table[ia * na + mode]?;
                Some((self.encode(ib, ic, ja), amp))
            }
        }
    }
}

#[inline]
fn parity(n: u32) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}
