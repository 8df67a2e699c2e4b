use crate::error::{Error, Result};
use crate::field::{Parity, PhysicalField, SpectralField};

use super::filter::DyadicFilterBank;

/// The three pieces of `a·b = T_a b + T_b a + R(a, b)`, in collocation form.
#[derive(Debug, Clone)]
pub struct BonyParts {
    pub para_ab: SpectralField,
    pub para_ba: SpectralField,
    pub remainder: SpectralField,
}

impl BonyParts {
    pub fn sum(&self) -> SpectralField {
        &(&self.para_ab + &self.para_ba) + &self.remainder
    }
}

/// Block `q` of the extended family: the catch-all at `q_min - 1`, else `Δ_q`.
pub fn extended_block(f: &SpectralField, q: i32, bank: &DyadicFilterBank) -> Result<SpectralField> {
    bank.check_grid(f)?;
    if q == bank.q_min() - 1 {
        Ok(f.map_modes(|i, _| bank.psi_low(i)))
    } else {
        Ok(f.map_modes(|i, _| bank.phi_at(q, i)))
    }
}

/// Paraproduct decomposition over the extended block family.
///
/// `T_a b = Σ_q S_{q-1} a Δ_q b` with `S_{q-1} = Σ_{j <= q-2} Δ_j`,
/// `R(a, b) = Σ_{|q-q'| <= 1} Δ_q a Δ_{q'} b`. Each piece is 2/3-truncated
/// when `dealias` is set, so the sum equals the truncated product.
pub fn bony_split(
    a: &SpectralField,
    b: &SpectralField,
    bank: &DyadicFilterBank,
    dealias: bool,
) -> Result<BonyParts> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    bank.check_grid(a)?;
    let lo = bank.q_min() - 1;
    let hi = bank.q_max();
    let blocks_of = |f: &SpectralField| -> Result<Vec<PhysicalField>> {
        (lo..=hi)
            .map(|q| Ok(extended_block(f, q, bank)?.to_physical()))
            .collect()
    };
    let ab = blocks_of(a)?;
    let bb = blocks_of(b)?;
    let n = ab.len();
    let zero = PhysicalField::combine(&[(0.0, &ab[0])]);

    let para = |x: &[PhysicalField], y: &[PhysicalField]| -> PhysicalField {
        let mut acc = zero.clone();
        let mut low = zero.clone();
        for q in 0..n {
            if q >= 2 {
                low = PhysicalField::combine(&[(1.0, &low), (1.0, &x[q - 2])]);
                acc = PhysicalField::combine(&[(1.0, &acc), (1.0, &low.mul(&y[q]))]);
            }
        }
        acc
    };
    let t_ab = para(&ab, &bb);
    let t_ba = para(&bb, &ab);
    let mut rem = zero.clone();
    for q in 0..n {
        let lo_q = q.saturating_sub(1);
        let hi_q = (q + 1).min(n - 1);
        let mut near = zero.clone();
        for qq in lo_q..=hi_q {
            near = PhysicalField::combine(&[(1.0, &near), (1.0, &bb[qq])]);
        }
        rem = PhysicalField::combine(&[(1.0, &rem), (1.0, &ab[q].mul(&near))]);
    }
    let finish = |p: &PhysicalField| {
        let f = SpectralField::from_physical(p, Parity::Collocation);
        if dealias {
            f.dealiased()
        } else {
            f
        }
    };
    Ok(BonyParts {
        para_ab: finish(&t_ab),
        para_ba: finish(&t_ba),
        remainder: finish(&rem),
    })
}
