//! Grayscale rasters, binary PGM I/O, 1x3 block partitioning and the
//! reserved LSB region at the bottom of the image.

use crate::aux_codec::BitString;
use crate::error::{Error, Result};

/// An 8-bit grayscale image stored row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::MalformedHeader(format!(
                "zero-sized image {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::TruncatedPixels {
                expected: width * height,
                found: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(row, col));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.pixels[row * self.width + col] = value;
    }

    #[inline]
    pub(crate) fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn same_dimensions(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Number of rows available to block embedding once `reserved_rows`
    /// rows at the bottom are set aside.
    pub fn embeddable_rows(&self, reserved_rows: usize) -> Result<usize> {
        if reserved_rows >= self.height {
            return Err(Error::ReservedRowsTooLarge {
                reserved: reserved_rows,
                height: self.height,
            });
        }
        Ok(self.height - reserved_rows)
    }
}

/// Parses a binary (P5) PGM with maxval 255.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cursor = HeaderCursor { bytes, pos: 0 };
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::MalformedHeader("missing P5 magic".into()));
    }
    cursor.pos = 2;
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedBitDepth(maxval as u32));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => {
            return Err(Error::MalformedHeader(
                "expected whitespace after maxval".into(),
            ))
        }
    }
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "zero-sized image {width}x{height}"
        )));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::MalformedHeader("image dimensions overflow".into()))?;
    let raster = &bytes[cursor.pos..];
    if raster.len() < expected {
        return Err(Error::TruncatedPixels {
            expected,
            found: raster.len(),
        });
    }
    GrayImage::new(width, height, raster[..expected].to_vec())
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let start = self.pos;
        self.skip_whitespace_and_comments();
        if self.pos == start {
            return Err(Error::MalformedHeader(format!(
                "expected whitespace before {what}"
            )));
        }
        let digits_start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        let digits = &self.bytes[digits_start..self.pos];
        if digits.is_empty() {
            return Err(Error::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(digits)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("invalid {what}")))
    }
}

/// Serializes as canonical binary PGM: `P5\n<w> <h>\n255\n` + raster.
pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.pixels.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&img.pixels);
    out
}

/// A horizontal 1x3 block: three adjacent pixels of one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRef {
    pub index: usize,
    pub row: usize,
    /// Leftmost column; the block covers `col..col + 3`.
    pub col: usize,
    pub values: [u8; 3],
}

impl BlockRef {
    pub fn coords(&self) -> [(usize, usize); 3] {
        [
            (self.row, self.col),
            (self.row, self.col + 1),
            (self.row, self.col + 2),
        ]
    }
}

/// Block geometry for row-major 1xN tiling above the reserved rows.
///
/// Columns beyond the last full block in each row are never part of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockGrid {
    pub width: usize,
    pub rows: usize,
    pub block_len: usize,
}

impl BlockGrid {
    pub fn new(img: &GrayImage, reserved_rows: usize, block_len: usize) -> Result<Self> {
        assert!(block_len > 0);
        Ok(Self {
            width: img.width(),
            rows: img.embeddable_rows(reserved_rows)?,
            block_len,
        })
    }

    #[inline]
    pub fn blocks_per_row(&self) -> usize {
        self.width / self.block_len
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.blocks_per_row() * self.rows
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row and first column of block `k`.
    #[inline]
    pub fn origin(&self, k: usize) -> (usize, usize) {
        let per_row = self.blocks_per_row();
        (k / per_row, (k % per_row) * self.block_len)
    }

    /// Flat pixel offset of the first pixel of block `k`.
    #[inline]
    pub fn offset(&self, k: usize) -> usize {
        let (row, col) = self.origin(k);
        row * self.width + col
    }
}

/// Enumerates the 1x3 blocks of `img` row-major, skipping the bottom
/// `reserved_rows` rows and the `width % 3` leftover columns.
pub fn partition_blocks(img: &GrayImage, reserved_rows: usize) -> Result<Vec<BlockRef>> {
    let grid = BlockGrid::new(img, reserved_rows, 3)?;
    Ok((0..grid.len())
        .map(|k| {
            let (row, col) = grid.origin(k);
            let off = grid.offset(k);
            let p = img.pixels();
            BlockRef {
                index: k,
                row,
                col,
                values: [p[off], p[off + 1], p[off + 2]],
            }
        })
        .collect())
}

/// Sorts `values` ascending; equal values keep their original order.
///
/// Returns the sorted values and `perm`, where `perm[i]` is the original
/// position of the i-th smallest value.
pub fn sort_with_perm<T: Copy + Ord, const N: usize>(values: [T; N]) -> ([T; N], [usize; N]) {
    let mut perm: [usize; N] = std::array::from_fn(|i| i);
    // stable sort keeps index order among ties
    perm.sort_by_key(|&i| values[i]);
    (std::array::from_fn(|i| values[perm[i]]), perm)
}

/// A 1x3 block in ascending order together with its sorting permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SortedBlock {
    /// `values[0] <= values[1] <= values[2]`; widened so that prediction
    /// arithmetic never wraps.
    pub values: [i32; 3],
    /// `perm[i]` is the block position (0..3) holding `values[i]`.
    pub perm: [usize; 3],
    pub origin: BlockRef,
}

impl SortedBlock {
    /// Values restored to block order.
    pub fn unsorted(&self) -> [i32; 3] {
        let mut out = [0; 3];
        for (rank, &pos) in self.perm.iter().enumerate() {
            out[pos] = self.values[rank];
        }
        out
    }
}

pub fn sort_block(b: BlockRef) -> SortedBlock {
    let (values, perm) = sort_with_perm(b.values.map(i32::from));
    SortedBlock {
        values,
        perm,
        origin: b,
    }
}

/// Stores the (possibly modified) sorted values back at the block's pixels.
pub fn write_back(sb: &SortedBlock, img: &mut GrayImage) {
    for ((row, col), v) in sb.origin.coords().into_iter().zip(sb.unsorted()) {
        debug_assert!((0..=255).contains(&v), "pixel value {v} out of range");
        img.set(row, col, v as u8);
    }
}

/// Pixel position of the i-th bit of the reserved region. The region is
/// scanned left to right starting at the bottom row and moving upward.
#[inline]
pub fn region_position(width: usize, height: usize, i: usize) -> (usize, usize) {
    (height - 1 - i / width, i % width)
}

pub fn region_capacity(img: &GrayImage, reserved_rows: usize) -> usize {
    reserved_rows.min(img.height()) * img.width()
}

/// LSBs of the bottom `reserved_rows` rows, bottom row first.
pub fn lsb_region_read(img: &GrayImage, reserved_rows: usize) -> BitString {
    let n = region_capacity(img, reserved_rows);
    lsb_region_read_prefix(img, n)
}

/// The first `n` bits of the region scan (may span several rows).
pub fn lsb_region_read_prefix(img: &GrayImage, n: usize) -> BitString {
    let n = n.min(img.width() * img.height());
    (0..n)
        .map(|i| {
            let (row, col) = region_position(img.width(), img.height(), i);
            img.get(row, col) & 1 == 1
        })
        .collect()
}

/// Replaces the first `bits.len()` region LSBs; all other bits are untouched.
pub fn lsb_region_write(img: &mut GrayImage, reserved_rows: usize, bits: &BitString) -> Result<()> {
    let capacity = region_capacity(img, reserved_rows);
    if bits.len() > capacity {
        return Err(Error::RegionTooSmall {
            len: bits.len(),
            capacity,
        });
    }
    let (w, h) = (img.width(), img.height());
    for (i, bit) in bits.iter().enumerate() {
        let (row, col) = region_position(w, h, i);
        let v = img.get(row, col);
        img.set(row, col, (v & !1) | u8::from(bit));
    }
    Ok(())
}
