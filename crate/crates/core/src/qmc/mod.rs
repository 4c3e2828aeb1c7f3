//! Polynomial lattice rules over `Z_b`, digit interlacing and CBC
//! construction of generating vectors.

mod cbc;
mod io;
mod lattice;
mod poly;

pub use cbc::{cbc_construct, cbc_construct_with_modulus, log_criterion, walsh_kernel, CbcMethod, CbcWeights};
pub use io::{format_vector, load_vector, parse_vector, save_vector};
pub use lattice::{
    classical_points, default_modulus, int_to_poly, interlace, interlace_values, vm_int, vm_map,
    GeneratingVector, PointKind, PointSet, MAX_MANTISSA_BITS,
};
pub use poly::{inverse, is_prime, GFPoly};
