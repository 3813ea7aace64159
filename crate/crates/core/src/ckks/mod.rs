//! Approximate arithmetic over encoded real and complex vectors.

mod encoder;
mod evaluator;
mod linear;
mod poly_eval;

pub use encoder::{decode_coeffs, encode_coeffs, round_to_poly, Encoder, Plaintext};
pub use evaluator::{conjugation_exponent, rotation_key_exponent, Evaluator, SCALE_TOLERANCE};
pub use linear::{apply_plain, bsgs_rotations, diagonals_of, LinearTransform};
pub use poly_eval::{eval_chebyshev, ChebyshevPoly};
