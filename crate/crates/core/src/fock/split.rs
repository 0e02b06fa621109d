use std::sync::Arc;

use num_complex::Complex64;

use super::basis::{enumerate_basis, Caps, FockBasis};
use crate::error::{Error, Result};

/// Factorization `F = F^sigma (x) F_sigma` of the Fock space at neutrino scale `sigma`.
///
/// Neutrino modes with `|p| >= sigma` belong to the upper factor. The lower factor is the
/// full fermionic Fock space of the remaining modes, indexed by occupation mask.
#[derive(Debug, Clone)]
pub struct SectorSplit {
    pub sigma: f64,
    /// Basis of the upper factor.
    pub high: FockBasis,
    /// Indices (in the full neutrino mode set) of the upper modes.
    pub high_modes: Vec<usize>,
    /// Indices of the lower modes; always a prefix `0..L`.
    pub low_modes: Vec<usize>,
    /// `full index -> high index * 2^L + low mask`.
    forward: Vec<usize>,
    backward: Vec<usize>,
}

/// Split `basis` at scale `sigma`.
///
/// Fails when a neutrino cap truncates the space, since the tensor factorization is then lost.
pub fn sector_split(basis: &FockBasis, sigma: f64) -> Result<SectorSplit> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", "must be positive and finite"));
    }
    if basis.neutrino_cap_binds() {
        return Err(Error::SectorSplit("the neutrino cap truncates the Fock space".into()));
    }
    let modes = &basis.c_modes.modes;
    let low = modes.iter().take_while(|m| m.abs < sigma).count();
    if modes[low..].iter().any(|m| m.abs < sigma) {
        return Err(Error::SectorSplit("neutrino modes are not sorted by |p|".into()));
    }
    let high_modes: Vec<usize> = (low..modes.len()).collect();
    let low_modes: Vec<usize> = (0..low).collect();
    let c_high = Arc::new(basis.c_modes.subset(&high_modes));
    let caps = Caps { neutrino: None, ..basis.caps };
    let high = enumerate_basis(
        basis.b_modes.clone(),
        c_high,
        basis.a_modes.clone(),
        caps,
        basis.signs,
        usize::MAX,
    )?;
    let n_low = 1usize << low;
    let low_mask = (1u64 << low) - 1;
    let mut forward = vec![0; basis.dim()];
    let mut backward = vec![0; basis.dim()];
    for (idx, slot) in forward.iter_mut().enumerate() {
        let (ib, ic, ia) = basis.decode(idx);
        let mc = basis.c_state(ic);
        let hc = high.c_index(mc >> low).expect("upper factor is uncapped");
        let h = high.encode(ib, hc, ia);
        let p = h * n_low + (mc & low_mask) as usize;
        *slot = p;
        backward[p] = idx;
    }
    Ok(SectorSplit { sigma, high, high_modes, low_modes, forward, backward })
}

impl SectorSplit {
    pub fn low_dim(&self) -> usize {
        1 << self.low_modes.len()
    }

    /// Product index `(high, low mask)` of a full basis state.
    pub fn to_product(&self, idx: usize) -> (usize, u64) {
        let p = self.forward[idx];
        (p / self.low_dim(), (p % self.low_dim()) as u64)
    }

    /// Full basis index of the product state `|high> (x) |low mask>`.
    pub fn from_product(&self, high: usize, low: u64) -> usize {
        self.backward[high * self.low_dim() + low as usize]
    }

    /// Embed `psi (x) |low>` into the full space.
    pub fn embed(&self, psi: &[Complex64], low: u64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.forward.len()];
        for (h, &v) in psi.iter().enumerate() {
            out[self.from_product(h, low)] = v;
        }
        out
    }

    /// Free energy `sum |p_j|` of a lower occupation mask.
    pub fn low_energy(&self, mask: u64, c_modes: &crate::scales::ModeSet) -> f64 {
        self.low_modes.iter().filter(|&&j| mask >> j & 1 == 1).map(|&j| c_modes.modes[j].abs).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::basis::tests::{desk_caps, desk_modes};
    use crate::fock::basis::{FermionSigns, Ladder};
    use crate::scales::Species;

    #[test]
    fn split_is_a_permutation() {
        let (b, c, a) = desk_modes();
        let basis = enumerate_basis(b, c, a, desk_caps(None), FermionSigns::JordanWigner, 10_000).unwrap();
        for sigma in [0.01, 0.07, 0.5, 0.75, 1.0, 2.0] {
            let s = sector_split(&basis, sigma).unwrap();
            assert_eq!(s.high.dim() * s.low_dim(), basis.dim());
            let mut seen = vec![false; basis.dim()];
            for idx in 0..basis.dim() {
                let (h, l) = s.to_product(idx);
                assert_eq!(s.from_product(h, l), idx);
                assert!(!seen[h * s.low_dim() + l as usize]);
                seen[h * s.low_dim() + l as usize] = true;
            }
        }
    }

    #[test]
    fn upper_operators_transport_without_signs() {
        let (b, c, a) = desk_modes();
        let basis = enumerate_basis(b, c, a, desk_caps(None), FermionSigns::JordanWigner, 10_000).unwrap();
        let s = sector_split(&basis, 0.3).unwrap();
        let low = s.low_modes.len();
        for idx in 0..basis.dim() {
            let (h, l) = s.to_product(idx);
            for j in s.high_modes.clone() {
                let full = basis.apply(Species::Neutrino, j, Ladder::Create, idx);
                let part = s.high.apply(Species::Neutrino, j - low, Ladder::Create, h);
                match (full, part) {
                    (Some((t, sf)), Some((th, sh))) => {
                        assert_eq!(s.to_product(t), (th, l));
                        assert_eq!(sf, sh);
                    }
                    (None, None) => {}
                    other => panic!("{other:?}"),
                }
            }
        }
    }

    #[test]
    fn binding_cap_is_rejected() {
        let (b, c, a) = desk_modes();
        let basis = enumerate_basis(b, c, a, desk_caps(Some(2)), FermionSigns::JordanWigner, 10_000).unwrap();
        assert!(matches!(sector_split(&basis, 0.5), Err(Error::SectorSplit(_))));
    }
}
