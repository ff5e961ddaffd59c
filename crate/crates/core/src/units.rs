//! Unit conversion. Everything inside the library is in hartree atomic units;
//! kcal/mol only appears at the reporting boundary.

pub const HARTREE_TO_KCAL_PER_MOL: f64 = 627.509_474_063_1;

#[inline]
pub fn hartree_to_kcal(e: f64) -> f64 {
    e * HARTREE_TO_KCAL_PER_MOL
}

#[inline]
pub fn kcal_to_hartree(e: f64) -> f64 {
    e / HARTREE_TO_KCAL_PER_MOL
}
