//! Bit strings, the location-map arithmetic coder, the container header and
//! the seeded payload generator.

mod arith;
mod bits;
mod header;
mod prng;

pub use arith::{arith_decode, arith_encode, MODEL_LIMIT};
pub use bits::{BitReader, BitString};
pub use header::{header_pack, header_unpack, Header, HEADER_BITS, MAGIC, VERSION};
pub use prng::{prng_payload, Lcg};
