//! Forward phase: boundary preprocessing and minimum/maximum PVO prediction
//! error expansion on 1x3 blocks.

use crate::aux_codec::{BitReader, BitString};
use crate::error::{Error, Result};
use crate::image::{sort_block, write_back, BlockGrid, BlockRef, GrayImage, SortedBlock};
use crate::metrics::{Outcome, Trace};

pub const BLOCK_LEN: usize = 3;

/// One bit per block pixel above the reserved rows (row-major over the
/// `3 * floor(width / 3)` block columns); 1 marks a pixel moved off 0 or 255.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverflowMap {
    cols: usize,
    rows: usize,
    bits: BitString,
}

impl OverflowMap {
    pub fn empty(grid: &BlockGrid) -> Self {
        let cols = grid.blocks_per_row() * grid.block_len;
        Self {
            cols,
            rows: grid.rows,
            bits: BitString::zeros(cols * grid.rows),
        }
    }

    pub fn for_image(img: &GrayImage, reserved_rows: usize) -> Result<Self> {
        Ok(Self::empty(&BlockGrid::new(img, reserved_rows, BLOCK_LEN)?))
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        row < self.rows && col < self.cols && self.bits.as_slice()[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, bit: bool) {
        assert!(row < self.rows && col < self.cols);
        self.bits.set(row * self.cols + col, bit);
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// Boundary mapping applied before the forward phase.
#[inline]
pub fn boundary_shift(v: u8) -> u8 {
    match v {
        0 => 1,
        255 => 254,
        v => v,
    }
}

/// Moves 0 to 1 and 255 to 254 in every block pixel above the reserved rows.
pub fn preprocess(img: &GrayImage, reserved_rows: usize) -> Result<(GrayImage, OverflowMap)> {
    let grid = BlockGrid::new(img, reserved_rows, BLOCK_LEN)?;
    let mut out = img.clone();
    let map = preprocess_blocks(&mut out, &grid, grid.len());
    Ok((out, map))
}

/// Preprocesses only blocks `0..blocks`, in place.
pub fn preprocess_blocks(img: &mut GrayImage, grid: &BlockGrid, blocks: usize) -> OverflowMap {
    let mut flags = vec![false; grid.blocks_per_row() * grid.block_len * grid.rows];
    let cols = grid.blocks_per_row() * grid.block_len;
    let width = img.width();
    let px = img.pixels_mut();
    for k in 0..blocks.min(grid.len()) {
        let (row, col) = grid.origin(k);
        for c in col..col + grid.block_len {
            let v = px[row * width + c];
            let shifted = boundary_shift(v);
            if shifted != v {
                px[row * width + c] = shifted;
                flags[row * cols + c] = true;
            }
        }
    }
    OverflowMap {
        cols,
        rows: grid.rows,
        bits: flags.into(),
    }
}

/// Inverse of [`preprocess`].
pub fn postprocess_restore(
    img: &GrayImage,
    m: &OverflowMap,
    reserved_rows: usize,
) -> Result<GrayImage> {
    let grid = BlockGrid::new(img, reserved_rows, BLOCK_LEN)?;
    if m.dims() != (grid.rows, grid.blocks_per_row() * BLOCK_LEN) {
        return Err(Error::CorruptOverflowMap);
    }
    restore_with_map(img, m)
}

/// Applies an overflow map of any block geometry.
pub fn restore_with_map(img: &GrayImage, m: &OverflowMap) -> Result<GrayImage> {
    if m.rows > img.height() || m.cols > img.width() {
        return Err(Error::CorruptOverflowMap);
    }
    let mut out = img.clone();
    for (i, set) in m.bits.iter().enumerate() {
        if !set {
            continue;
        }
        let (row, col) = (i / m.cols, i % m.cols);
        let restored = match out.get(row, col) {
            254 => 255,
            1 => 0,
            _ => return Err(Error::CorruptOverflowMap),
        };
        out.set(row, col, restored);
    }
    Ok(out)
}

/// Prediction errors of a sorted block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForwardErrors {
    /// `x_s1 - x_s2`, never positive.
    pub e_min: i32,
    /// `x_s3 - x_s2`, never negative.
    pub e_max: i32,
}

pub fn forward_errors(values: [i32; 3]) -> ForwardErrors {
    ForwardErrors {
        e_min: values[0] - values[1],
        e_max: values[2] - values[1],
    }
}

/// Bits a block takes, from its (preprocessed) sorted values.
#[inline]
pub fn block_capacity(values: [i32; 3]) -> usize {
    let e = forward_errors(values);
    usize::from(e.e_min == -1) + usize::from(e.e_max == 1)
}

/// Up to two bits extracted from one block, minimum side first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BlockBits {
    bits: [bool; 2],
    len: usize,
}

impl BlockBits {
    fn push(&mut self, b: bool) {
        self.bits[self.len] = b;
        self.len += 1;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

fn embed_outcome(b: bool) -> Outcome {
    if b {
        Outcome::Embedded1
    } else {
        Outcome::Embedded0
    }
}

/// Embeds into one block. Returns the new block, the bits consumed and the
/// outcome for the minimum and maximum pixels.
fn embed_block_inner(sb: &SortedBlock, bits: &mut BitReader) -> (SortedBlock, usize, [Outcome; 2]) {
    let mut out = *sb;
    let e = forward_errors(sb.values);
    let mut consumed = 0;
    let mut outcome = [Outcome::Unchanged; 2];
    if e.e_min == -1 {
        let b = bits.next_bit();
        out.values[0] -= i32::from(b);
        consumed += 1;
        outcome[0] = embed_outcome(b);
    } else if e.e_min < -1 {
        out.values[0] -= 1;
        outcome[0] = Outcome::Shifted;
    }
    if e.e_max == 1 {
        let b = bits.next_bit();
        out.values[2] += i32::from(b);
        consumed += 1;
        outcome[1] = embed_outcome(b);
    } else if e.e_max > 1 {
        out.values[2] += 1;
        outcome[1] = Outcome::Shifted;
    }
    (out, consumed, outcome)
}

/// Embeds into one block, minimum side first. A reader that runs dry hands
/// out its fill bit, so this never fails.
pub fn fwd_embed_block(sb: &SortedBlock, bits: &mut BitReader) -> (SortedBlock, usize) {
    let (out, consumed, _) = embed_block_inner(sb, bits);
    (out, consumed)
}

/// Inverse of [`fwd_embed_block`]; `sb` is the sorted stego block.
pub fn fwd_extract_block(sb: &SortedBlock) -> (SortedBlock, BlockBits) {
    let mut out = *sb;
    let mut bits = BlockBits::default();
    let e = forward_errors(sb.values);
    match e.e_min {
        0 => {}
        -1 => bits.push(false),
        -2 => {
            bits.push(true);
            out.values[0] += 1;
        }
        _ => out.values[0] += 1,
    }
    match e.e_max {
        0 => {}
        1 => bits.push(false),
        2 => {
            bits.push(true);
            out.values[2] -= 1;
        }
        _ => out.values[2] -= 1,
    }
    (out, bits)
}

/// Result of the forward pass over an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ForwardOutcome {
    /// Bits taken from the payload plus zero padding.
    pub bits: usize,
    /// Blocks processed, counted from the first.
    pub blocks: usize,
    /// Zero bits appended to finish the last block.
    pub padding: usize,
}

#[inline]
fn block_at(img: &GrayImage, grid: &BlockGrid, k: usize) -> BlockRef {
    let (row, col) = grid.origin(k);
    let off = grid.offset(k);
    let p = img.pixels();
    BlockRef {
        index: k,
        row,
        col,
        values: [p[off], p[off + 1], p[off + 2]],
    }
}

/// Embeds `payload` block by block and stops once it is used up; the block
/// in which it runs out is finished with zero bits.
pub fn fwd_embed_image(
    img: &GrayImage,
    payload: &BitString,
    reserved_rows: usize,
) -> Result<(GrayImage, ForwardOutcome)> {
    fwd_embed_image_traced(img, payload, reserved_rows, None)
}

pub fn fwd_embed_image_traced(
    img: &GrayImage,
    payload: &BitString,
    reserved_rows: usize,
    mut trace: Option<&mut Trace>,
) -> Result<(GrayImage, ForwardOutcome)> {
    let grid = BlockGrid::new(img, reserved_rows, BLOCK_LEN)?;
    let mut out = img.clone();
    let mut reader = BitReader::new(payload, false);
    let mut bits = 0;
    let mut blocks = 0;
    for k in 0..grid.len() {
        if reader.is_exhausted() {
            break;
        }
        let sb = sort_block(block_at(&out, &grid, k));
        let (embedded, consumed, outcome) = embed_block_inner(&sb, &mut reader);
        write_back(&embedded, &mut out);
        if let Some(t) = trace.as_deref_mut() {
            let coords = sb.origin.coords();
            let (r, c) = coords[sb.perm[0]];
            t.set(r, c, outcome[0]);
            let (r, c) = coords[sb.perm[2]];
            t.set(r, c, outcome[1]);
        }
        bits += consumed;
        blocks += 1;
    }
    Ok((
        out,
        ForwardOutcome {
            bits,
            blocks,
            padding: reader.filled(),
        },
    ))
}

/// Undoes the first `blocks` blocks and returns the `fwd_bits` bits they
/// carried.
pub fn fwd_extract_image(
    img: &GrayImage,
    fwd_bits: usize,
    blocks: usize,
    reserved_rows: usize,
) -> Result<(GrayImage, BitString)> {
    let grid = BlockGrid::new(img, reserved_rows, BLOCK_LEN)?;
    if blocks > grid.len() {
        return Err(Error::ContainerInconsistent(format!(
            "{blocks} forward blocks recorded but the image has {}",
            grid.len()
        )));
    }
    let mut out = img.clone();
    let mut payload = BitString::with_capacity(fwd_bits);
    for k in 0..blocks {
        let sb = sort_block(block_at(&out, &grid, k));
        let (restored, bits) = fwd_extract_block(&sb);
        write_back(&restored, &mut out);
        payload.extend(bits.as_slice().iter().copied());
    }
    if payload.len() != fwd_bits {
        return Err(Error::ContainerInconsistent(format!(
            "forward phase carried {} bits, header says {fwd_bits}",
            payload.len()
        )));
    }
    Ok((out, payload))
}

fn preprocessed_sorted(img: &GrayImage, grid: &BlockGrid, k: usize) -> [i32; 3] {
    let b = block_at(img, grid, k);
    let mut v = b.values.map(|x| i32::from(boundary_shift(x)));
    v.sort_unstable();
    v
}

/// Bits the forward phase can carry. Boundary values are mapped on the fly,
/// so the image may be raw or already preprocessed.
pub fn fwd_capacity(img: &GrayImage, reserved_rows: usize) -> Result<usize> {
    let grid = BlockGrid::new(img, reserved_rows, BLOCK_LEN)?;
    Ok((0..grid.len())
        .map(|k| block_capacity(preprocessed_sorted(img, &grid, k)))
        .sum())
}

/// Number of leading blocks the forward phase processes for an `n`-bit
/// payload, and the bits (with padding) they consume.
pub fn fwd_plan(img: &GrayImage, reserved_rows: usize, n: usize) -> Result<ForwardOutcome> {
    let grid = BlockGrid::new(img, reserved_rows, BLOCK_LEN)?;
    let mut bits = 0;
    let mut blocks = 0;
    for k in 0..grid.len() {
        if bits >= n {
            break;
        }
        bits += block_capacity(preprocessed_sorted(img, &grid, k));
        blocks += 1;
    }
    Ok(ForwardOutcome {
        bits,
        blocks,
        padding: bits.saturating_sub(n),
    })
}
