use super::BitString;
use crate::error::{Error, Result};

/// "DPVO" in ASCII.
pub const MAGIC: u32 = 0x4450_564F;
pub const VERSION: u8 = 1;
pub const HEADER_BITS: usize = 200;

/// Fixed 200-bit container header, packed MSB-first in field order:
/// magic 32, version 8, reserved rows 16, data length 32, forward bits 32,
/// backward bits 32, location-map length 24, overflow-map length 24.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub version: u8,
    pub reserved_rows: u16,
    pub data_len: u32,
    pub fwd_bits: u32,
    pub bwd_bits: u32,
    /// 24-bit field.
    pub lm_clen: u32,
    /// 24-bit field.
    pub mou_clen: u32,
}

const FIELD_24_MAX: u32 = (1 << 24) - 1;

impl Header {
    pub fn lm_clen_fits(len: usize) -> bool {
        len <= FIELD_24_MAX as usize
    }
}

pub fn header_pack(h: &Header) -> BitString {
    assert!(h.lm_clen <= FIELD_24_MAX && h.mou_clen <= FIELD_24_MAX);
    let mut out = BitString::with_capacity(HEADER_BITS);
    out.push_uint(u64::from(MAGIC), 32);
    out.push_uint(u64::from(h.version), 8);
    out.push_uint(u64::from(h.reserved_rows), 16);
    out.push_uint(u64::from(h.data_len), 32);
    out.push_uint(u64::from(h.fwd_bits), 32);
    out.push_uint(u64::from(h.bwd_bits), 32);
    out.push_uint(u64::from(h.lm_clen), 24);
    out.push_uint(u64::from(h.mou_clen), 24);
    debug_assert_eq!(out.len(), HEADER_BITS);
    out
}

/// Parses the first 200 bits of `bits`; anything after is ignored.
pub fn header_unpack(bits: &BitString) -> Result<Header> {
    if bits.len() < HEADER_BITS {
        return Err(Error::ShortHeader(bits.len()));
    }
    let field = |pos: usize, width: u32| bits.read_uint(pos, width).expect("length checked");
    if field(0, 32) != u64::from(MAGIC) {
        return Err(Error::NotAContainer);
    }
    let version = field(32, 8) as u8;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    Ok(Header {
        version,
        reserved_rows: field(40, 16) as u16,
        data_len: field(56, 32) as u32,
        fwd_bits: field(88, 32) as u32,
        bwd_bits: field(120, 32) as u32,
        lm_clen: field(152, 24) as u32,
        mou_clen: field(176, 24) as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Header {
        Header {
            version: VERSION,
            reserved_rows: 3,
            data_len: 36_000,
            fwd_bits: 33_000,
            bwd_bits: 3_100,
            lm_clen: 900,
            mou_clen: 12,
        }
    }

    #[test]
    fn magic_bytes_lead() {
        let bytes = header_pack(&sample()).to_bytes();
        assert_eq!(bytes.len(), 25);
        assert_eq!(&bytes[..5], &[0x44, 0x50, 0x56, 0x4F, 0x01]);
        assert_eq!(&bytes[5..7], &[0x00, 0x03]);
    }

    #[test]
    fn wrong_magic() {
        let mut bits = header_pack(&sample());
        let flipped: BitString = bits.iter().enumerate().map(|(i, b)| b ^ (i == 3)).collect();
        bits = flipped;
        let err = header_unpack(&bits).unwrap_err();
        assert!(matches!(err, Error::NotAContainer));
        assert_eq!(err.to_string(), "not a dPVO container");
    }

    #[test]
    fn wrong_version_and_short_input() {
        let h = Header {
            version: 2,
            ..sample()
        };
        assert!(matches!(
            header_unpack(&header_pack(&h)),
            Err(Error::UnsupportedVersion(2))
        ));
        assert!(matches!(
            header_unpack(&BitString::zeros(199)),
            Err(Error::ShortHeader(199))
        ));
    }

    proptest! {
        #[test]
        fn pack_unpack(rr: u16, dl: u32, fb: u32, bb: u32, lm in 0u32..(1 << 24), mou in 0u32..(1 << 24)) {
            let h = Header {
                version: VERSION,
                reserved_rows: rr,
                data_len: dl,
                fwd_bits: fb,
                bwd_bits: bb,
                lm_clen: lm,
                mou_clen: mou,
            };
            let bits = header_pack(&h);
            prop_assert_eq!(bits.len(), HEADER_BITS);
            prop_assert_eq!(header_unpack(&bits).unwrap(), h);
        }
    }
}
