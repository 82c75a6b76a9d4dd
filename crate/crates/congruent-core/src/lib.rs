//! Certification of congruent and non-congruent numbers for squarefree
//! products of odd primes: class-group criteria, 2-isogeny descent bounds,
//! quadratic-twist L-values, and explicit Heegner-point constructions.

pub mod certificate;
pub mod classgroup;
pub mod criterion;
pub mod descent;
pub mod heegner;
pub mod lfunction;
pub mod ntheory;
