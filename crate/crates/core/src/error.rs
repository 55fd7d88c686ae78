use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),

    #[error("unsupported bit depth (maxval {0}, only 255 is supported)")]
    UnsupportedBitDepth(u32),

    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    TruncatedPixels { expected: usize, found: usize },

    #[error("reserved rows ({reserved}) must be smaller than image height ({height})")]
    ReservedRowsTooLarge { reserved: usize, height: usize },

    #[error("{len} bits do not fit in a reserved region of {capacity} bits")]
    RegionTooSmall { len: usize, capacity: usize },

    #[error("codec desync")]
    CodecDesync,

    #[error("not a dPVO container")]
    NotAContainer,

    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),

    #[error("header needs 200 bits, got {0}")]
    ShortHeader(usize),

    #[error("corrupt overflow map")]
    CorruptOverflowMap,

    #[error("container inconsistent: {0}")]
    ContainerInconsistent(String),

    #[error("capacity exceeded: {requested} payload bits requested, at most {available} fit")]
    CapacityExceeded { requested: usize, available: usize },

    #[error("aux overflow: header and location maps need {needed} bits but at most {available} fit")]
    AuxOverflow { needed: usize, available: usize },

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
