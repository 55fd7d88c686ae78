//! Maximum-side PVO on 1xN blocks, kept as a comparison baseline.

use crate::aux_codec::{BitReader, BitString};
use crate::error::{Error, Result};
use crate::forward::{boundary_shift, ForwardOutcome};
use crate::image::{BlockGrid, GrayImage};

pub const DEFAULT_BLOCK_LEN: usize = 4;

/// A block in ascending order with its permutation (`perm[i]` is the block
/// position of the i-th smallest value).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiBlock {
    pub values: Vec<i32>,
    pub perm: Vec<usize>,
}

impl LiBlock {
    pub fn from_values(raw: &[i32]) -> Self {
        assert!(raw.len() >= 2, "blocks need at least two pixels");
        let mut perm: Vec<usize> = (0..raw.len()).collect();
        perm.sort_by_key(|&i| raw[i]);
        Self {
            values: perm.iter().map(|&i| raw[i]).collect(),
            perm,
        }
    }

    pub fn unsorted(&self) -> Vec<i32> {
        let mut out = vec![0; self.values.len()];
        for (rank, &pos) in self.perm.iter().enumerate() {
            out[pos] = self.values[rank];
        }
        out
    }

    /// `x_max - x_second`.
    pub fn error(&self) -> i32 {
        let n = self.values.len();
        self.values[n - 1] - self.values[n - 2]
    }
}

pub fn li_embed_block(blk: &LiBlock, bits: &mut BitReader) -> (LiBlock, usize) {
    let mut out = blk.clone();
    let n = blk.values.len();
    let e = blk.error();
    let consumed = match e {
        0 => 0,
        1 => {
            out.values[n - 1] += i32::from(bits.next_bit());
            1
        }
        _ => {
            out.values[n - 1] += 1;
            0
        }
    };
    (out, consumed)
}

pub fn li_extract_block(blk: &LiBlock) -> (LiBlock, Option<bool>) {
    let mut out = blk.clone();
    let n = blk.values.len();
    let bit = match blk.error() {
        0 => None,
        1 => Some(false),
        2 => {
            out.values[n - 1] -= 1;
            Some(true)
        }
        _ => {
            out.values[n - 1] -= 1;
            None
        }
    };
    (out, bit)
}

fn read_block(img: &GrayImage, grid: &BlockGrid, k: usize) -> LiBlock {
    let off = grid.offset(k);
    let raw: Vec<i32> = img.pixels()[off..off + grid.block_len]
        .iter()
        .map(|&v| i32::from(v))
        .collect();
    LiBlock::from_values(&raw)
}

fn store_block(img: &mut GrayImage, grid: &BlockGrid, k: usize, blk: &LiBlock) {
    let (row, col) = grid.origin(k);
    for (i, v) in blk.unsorted().into_iter().enumerate() {
        debug_assert!((0..=255).contains(&v));
        img.set(row, col + i, v as u8);
    }
}

/// Embeds until the payload runs out, finishing the last block with a zero.
pub fn li_embed_image(
    img: &GrayImage,
    payload: &BitString,
    reserved_rows: usize,
    block_len: usize,
) -> Result<(GrayImage, ForwardOutcome)> {
    let grid = BlockGrid::new(img, reserved_rows, block_len)?;
    let mut out = img.clone();
    let mut reader = BitReader::new(payload, false);
    let mut o = ForwardOutcome::default();
    for k in 0..grid.len() {
        if reader.is_exhausted() {
            break;
        }
        let (emb, n) = li_embed_block(&read_block(&out, &grid, k), &mut reader);
        store_block(&mut out, &grid, k, &emb);
        o.bits += n;
        o.blocks += 1;
    }
    o.padding = reader.filled();
    Ok((out, o))
}

pub fn li_extract_image(
    img: &GrayImage,
    bits: usize,
    blocks: usize,
    reserved_rows: usize,
    block_len: usize,
) -> Result<(GrayImage, BitString)> {
    let grid = BlockGrid::new(img, reserved_rows, block_len)?;
    if blocks > grid.len() {
        return Err(Error::ContainerInconsistent(format!(
            "{blocks} blocks recorded but the image has {}",
            grid.len()
        )));
    }
    let mut out = img.clone();
    let mut payload = BitString::with_capacity(bits);
    for k in 0..blocks {
        let (restored, bit) = li_extract_block(&read_block(&out, &grid, k));
        store_block(&mut out, &grid, k, &restored);
        payload.extend(bit);
    }
    if payload.len() != bits {
        return Err(Error::ContainerInconsistent(format!(
            "baseline blocks carried {} bits, header says {bits}",
            payload.len()
        )));
    }
    Ok((out, payload))
}

fn shifted_error(img: &GrayImage, grid: &BlockGrid, k: usize) -> i32 {
    let off = grid.offset(k);
    let mut v: Vec<u8> = img.pixels()[off..off + grid.block_len]
        .iter()
        .map(|&x| boundary_shift(x))
        .collect();
    v.sort_unstable();
    i32::from(v[v.len() - 1]) - i32::from(v[v.len() - 2])
}

pub fn li_capacity(img: &GrayImage, reserved_rows: usize, block_len: usize) -> Result<usize> {
    let grid = BlockGrid::new(img, reserved_rows, block_len)?;
    Ok((0..grid.len())
        .filter(|&k| shifted_error(img, &grid, k) == 1)
        .count())
}

/// Blocks and bits (with padding) an `n`-bit payload takes.
pub fn li_plan(
    img: &GrayImage,
    reserved_rows: usize,
    block_len: usize,
    n: usize,
) -> Result<ForwardOutcome> {
    let grid = BlockGrid::new(img, reserved_rows, block_len)?;
    let mut o = ForwardOutcome::default();
    for k in 0..grid.len() {
        if o.bits >= n {
            break;
        }
        o.bits += usize::from(shifted_error(img, &grid, k) == 1);
        o.blocks += 1;
    }
    o.padding = o.bits.saturating_sub(n);
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::preprocess_blocks;

    fn embed(raw: &[i32], bit: bool) -> (Vec<i32>, usize) {
        let payload: BitString = [bit].into_iter().collect();
        let mut r = BitReader::new(&payload, false);
        let (b, n) = li_embed_block(&LiBlock::from_values(raw), &mut r);
        (b.unsorted(), n)
    }

    #[test]
    fn block_examples() {
        assert_eq!(embed(&[160, 161, 162, 158], true), (vec![160, 161, 163, 158], 1));
        assert_eq!(embed(&[160, 161, 163, 158], true), (vec![160, 161, 164, 158], 0));
        assert_eq!(embed(&[5, 9, 9, 1], true), (vec![5, 9, 9, 1], 0));

        let (b, bit) = li_extract_block(&LiBlock::from_values(&[160, 161, 163, 158]));
        assert_eq!((b.unsorted(), bit), (vec![160, 161, 162, 158], Some(true)));
        let (b, bit) = li_extract_block(&LiBlock::from_values(&[160, 161, 164, 158]));
        assert_eq!((b.unsorted(), bit), (vec![160, 161, 163, 158], None));
        let (b, bit) = li_extract_block(&LiBlock::from_values(&[5, 9, 9, 1]));
        assert_eq!((b.unsorted(), bit), (vec![5, 9, 9, 1], None));
    }

    /// The maximum is the last largest entry, the prediction the largest of
    /// the others.
    fn oracle(v: [i32; 4], bit: bool) -> ([i32; 4], Option<bool>) {
        let hi = (0..4).max_by_key(|&i| (v[i], i)).unwrap();
        let second = (0..4).filter(|&i| i != hi).map(|i| v[i]).max().unwrap();
        let mut out = v;
        let used = match v[hi] - second {
            0 => None,
            1 => {
                out[hi] += i32::from(bit);
                Some(bit)
            }
            _ => {
                out[hi] += 1;
                None
            }
        };
        (out, used)
    }

    #[test]
    fn exhaustive_four_pixel_blocks() {
        for code in 0..10_000u32 {
            let v: [i32; 4] = std::array::from_fn(|i| (code / 10u32.pow(i as u32) % 10) as i32);
            for bit in [false, true] {
                let (stego, n) = embed(&v, bit);
                let (want, used) = oracle(v, bit);
                assert_eq!(stego, want.to_vec(), "{v:?} {bit}");
                assert_eq!(n, usize::from(used.is_some()));
                let (back, got) = li_extract_block(&LiBlock::from_values(&stego));
                assert_eq!(back.unsorted(), v.to_vec());
                assert_eq!(got, used);
            }
        }
    }

    #[test]
    fn image_round_trip() {
        let img = GrayImage::from_fn(13, 6, |r, c| ((r * 31 + c * 17) % 11) as u8 * 23);
        let payload: BitString = (0..20).map(|i| i % 3 == 0).collect();
        let grid = BlockGrid::new(&img, 1, 4).unwrap();
        let plan = li_plan(&img, 1, 4, payload.len()).unwrap();
        let mut pre = img.clone();
        preprocess_blocks(&mut pre, &grid, plan.blocks);
        let (stego, o) = li_embed_image(&pre, &payload, 1, 4).unwrap();
        assert_eq!(o, plan);
        let (back, bits) = li_extract_image(&stego, o.bits, o.blocks, 1, 4).unwrap();
        assert_eq!(back, pre);
        assert_eq!(bits.slice(0..payload.len().min(o.bits)), payload.slice(0..payload.len().min(o.bits)));
        assert!(li_capacity(&img, 1, 4).unwrap() >= o.bits - o.padding);
    }
}
