//! Backward phase: pairwise PVO over the forward-modified minimum and
//! maximum pixels, pulling them back toward their original values.

use crate::aux_codec::{BitReader, BitString};
use crate::error::{Error, Result};
use crate::forward::BLOCK_LEN;
use crate::image::{sort_block, BlockGrid, BlockRef, GrayImage};
use crate::metrics::{Outcome, Trace};

/// Per-block exclusion bits; 1 means the block's minimum (resp. maximum)
/// pixel is not in the backward set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SkipMap {
    pub min_bits: BitString,
    pub max_bits: BitString,
}

impl SkipMap {
    pub fn len(&self) -> usize {
        self.min_bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min_bits.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SetEntry {
    pub value: i32,
    pub row: usize,
    pub col: usize,
}

/// Selected pixels in block-scan order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PixelSet {
    pub entries: Vec<SetEntry>,
}

impl PixelSet {
    pub fn values(&self) -> Vec<i32> {
        self.entries.iter().map(|e| e.value).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pairs(&self) -> usize {
        self.entries.len() / 2
    }
}

/// Which blocks and which sides take part in the backward phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SetSelection {
    /// Only blocks `0..blocks` are considered.
    pub blocks: usize,
    pub min: bool,
    pub max: bool,
}

impl SetSelection {
    pub fn all() -> Self {
        Self {
            blocks: usize::MAX,
            min: true,
            max: true,
        }
    }
}

/// Extreme pixel of one block side in a stego image: its gap to the
/// middle pixel and its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideView {
    pub gap: i32,
    pub value: i32,
}

/// Side views of the considered blocks in scan order; switched-off sides
/// are `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StegoView {
    pub min: Vec<Option<SideView>>,
    pub max: Vec<Option<SideView>>,
    /// Blocks in the image, considered or not.
    pub total_blocks: usize,
}

struct Member {
    min: Option<SetEntry>,
    max: Option<SetEntry>,
    min_gap: i32,
    max_gap: i32,
}

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

fn members(img: &GrayImage, grid: &BlockGrid, k: usize) -> Member {
    let sb = sort_block(block_at(img, grid, k));
    let coords = sb.origin.coords();
    let entry = |rank: usize| {
        let (row, col) = coords[sb.perm[rank]];
        SetEntry {
            value: sb.values[rank],
            row,
            col,
        }
    };
    Member {
        min: Some(entry(0)),
        max: Some(entry(2)),
        min_gap: sb.values[1] - sb.values[0],
        max_gap: sb.values[2] - sb.values[1],
    }
}

fn selected_blocks(grid: &BlockGrid, sel: &SetSelection) -> usize {
    sel.blocks.min(grid.len())
}

/// Builds both sets over every block: a minimum pixel joins when
/// `mid - min > 1`, a maximum pixel when `max - mid > 1`.
pub fn collect_sets(img: &GrayImage, reserved_rows: usize) -> Result<(PixelSet, PixelSet, SkipMap)> {
    collect_sets_with(img, reserved_rows, &SetSelection::all())
}

/// As [`collect_sets`] restricted to `sel`. The skip map always covers
/// every block; unselected blocks and sides are marked skipped.
pub fn collect_sets_with(
    img: &GrayImage,
    reserved_rows: usize,
    sel: &SetSelection,
) -> Result<(PixelSet, PixelSet, SkipMap)> {
    let grid = BlockGrid::new(img, reserved_rows, BLOCK_LEN)?;
    let active = selected_blocks(&grid, sel);
    let mut x_min = PixelSet::default();
    let mut x_max = PixelSet::default();
    let mut lm = SkipMap {
        min_bits: BitString::with_capacity(grid.len()),
        max_bits: BitString::with_capacity(grid.len()),
    };
    for k in 0..grid.len() {
        if k >= active {
            lm.min_bits.push(true);
            lm.max_bits.push(true);
            continue;
        }
        let m = members(img, &grid, k);
        let take_min = sel.min && m.min_gap > 1;
        let take_max = sel.max && m.max_gap > 1;
        if take_min {
            x_min.entries.extend(m.min);
        }
        if take_max {
            x_max.entries.extend(m.max);
        }
        lm.min_bits.push(!take_min);
        lm.max_bits.push(!take_max);
    }
    Ok((x_min, x_max, lm))
}

/// Rebuilds the sets from the skip map alone (bit 0 = member).
pub fn sets_from_map(
    img: &GrayImage,
    reserved_rows: usize,
    lm: &SkipMap,
) -> Result<(PixelSet, PixelSet)> {
    let grid = BlockGrid::new(img, reserved_rows, BLOCK_LEN)?;
    if lm.min_bits.len() != grid.len() || lm.max_bits.len() != grid.len() {
        return Err(Error::ContainerInconsistent(format!(
            "skip map covers {} blocks, image has {}",
            lm.min_bits.len(),
            grid.len()
        )));
    }
    let mut x_min = PixelSet::default();
    let mut x_max = PixelSet::default();
    for k in 0..grid.len() {
        let skip_min = lm.min_bits.as_slice()[k];
        let skip_max = lm.max_bits.as_slice()[k];
        if skip_min && skip_max {
            continue;
        }
        let m = members(img, &grid, k);
        if !skip_min {
            x_min.entries.extend(m.min);
        }
        if !skip_max {
            x_max.entries.extend(m.max);
        }
    }
    Ok((x_min, x_max))
}

/// Side views of the considered blocks of a stego image.
pub fn stego_view(img: &GrayImage, reserved_rows: usize, sel: &SetSelection) -> Result<StegoView> {
    let grid = BlockGrid::new(img, reserved_rows, BLOCK_LEN)?;
    let active = selected_blocks(&grid, sel);
    let mut view = StegoView {
        min: Vec::with_capacity(active),
        max: Vec::with_capacity(active),
        total_blocks: grid.len(),
    };
    for k in 0..active {
        let m = members(img, &grid, k);
        let side = |gap: i32, e: Option<SetEntry>| SideView {
            gap,
            value: e.expect("always present").value,
        };
        view.min.push(sel.min.then(|| side(m.min_gap, m.min)));
        view.max.push(sel.max.then(|| side(m.max_gap, m.max)));
    }
    Ok(view)
}

/// Membership the decoder can settle without side information.
///
/// A set member only drops to gap 1 when the backward phase moves it: the
/// higher element of a minimum pair gains one, the lower element of a
/// maximum pair loses one. Its partner is then unmoved, so it keeps a gap of
/// at least 2, and the two stego values are at least 2 apart in the moving
/// direction. The partner is the pending element if there is one, otherwise
/// the next pixel with gap 2 or more. A gap-1 pixel whose would-be partner
/// violates this, or that has none, is skipped.
fn settle(
    views: &[Option<SideView>],
    next_wide: &[Option<usize>],
    k: usize,
    pending: Option<i32>,
    min_side: bool,
) -> Option<bool> {
    let v = views[k].expect("settled sides are active");
    match v.gap {
        0 => Some(true),
        1 => {
            let partner = pending.or_else(|| {
                next_wide[k].map(|j| views[j].expect("active").value)
            });
            let possible = partner.is_some_and(|p| {
                if min_side {
                    v.value >= p + 2
                } else {
                    v.value <= p - 2
                }
            });
            if possible {
                None
            } else {
                Some(true)
            }
        }
        _ => Some(false),
    }
}

fn walk_side(
    views: &[Option<SideView>],
    min_side: bool,
    total: usize,
    mut decide: impl FnMut(usize, Option<bool>) -> Result<bool>,
) -> Result<BitString> {
    // next_wide[k]: first j > k whose gap is at least 2
    let mut next_wide = vec![None; views.len()];
    let mut next = None;
    for k in (0..views.len()).rev() {
        next_wide[k] = next;
        if views[k].is_some_and(|v| v.gap >= 2) {
            next = Some(k);
        }
    }
    let mut bits = BitString::with_capacity(total);
    let mut pending: Option<i32> = None;
    for k in 0..total {
        let skip = match views.get(k).copied().flatten() {
            None => true,
            Some(v) => {
                let skip = decide(k, settle(views, &next_wide, k, pending, min_side))?;
                if !skip {
                    pending = match pending {
                        Some(_) => None,
                        None => Some(v.value),
                    };
                }
                skip
            }
        };
        bits.push(skip);
    }
    Ok(bits)
}

/// Skip bits the decoder cannot settle from the stego image: minimum side
/// first, then maximum side, each in block order.
pub fn skip_flags(view: &StegoView, lm: &SkipMap) -> BitString {
    let mut flags = BitString::new();
    for (views, truth, min_side) in [
        (&view.min, &lm.min_bits, true),
        (&view.max, &lm.max_bits, false),
    ] {
        walk_side(views, min_side, view.total_blocks, |k, settled| {
            let skip = truth.as_slice()[k];
            match settled {
                Some(s) => debug_assert_eq!(s, skip, "block {k}"),
                None => flags.push(skip),
            }
            Ok(skip)
        })
        .expect("encoder side never fails");
    }
    flags
}

/// Inverse of [`skip_flags`].
pub fn rebuild_skip_map(view: &StegoView, flags: &BitString) -> Result<SkipMap> {
    let mut it = flags.iter();
    let mut side = |views: &[Option<SideView>], min_side: bool| {
        walk_side(views, min_side, view.total_blocks, |_, settled| match settled {
            Some(s) => Ok(s),
            None => it
                .next()
                .ok_or_else(|| Error::ContainerInconsistent("too few skip flags".into())),
        })
    };
    let min_bits = side(&view.min, true)?;
    let max_bits = side(&view.max, false)?;
    if it.next().is_some() {
        return Err(Error::ContainerInconsistent("unused skip flags".into()));
    }
    Ok(SkipMap { min_bits, max_bits })
}

/// Ascending order of a pair with ties going to the first element.
#[inline]
fn pair_order(p: (i32, i32)) -> bool {
    // true when the second element is the lower one
    p.1 < p.0
}

fn outcome(b: bool) -> Outcome {
    if b {
        Outcome::Embedded1
    } else {
        Outcome::Embedded0
    }
}

/// Minimum-set pair: the higher pixel is predicted from the lower one and
/// raised by the bit (error 1) or by one (error above 1).
fn embed_min_inner(pair: (i32, i32), bits: &mut BitReader) -> ((i32, i32), usize, Outcome) {
    let swapped = pair_order(pair);
    let (lo, mut hi) = if swapped { (pair.1, pair.0) } else { pair };
    let e = hi - lo;
    let (consumed, o) = match e {
        0 => (0, Outcome::Unchanged),
        1 => {
            let b = bits.next_bit();
            hi += i32::from(b);
            (1, outcome(b))
        }
        _ => {
            hi += 1;
            (0, Outcome::Shifted)
        }
    };
    let out = if swapped { (hi, lo) } else { (lo, hi) };
    (out, consumed, o)
}

/// Maximum-set pair: the lower pixel is predicted from the higher one and
/// lowered by the bit (error -1) or by one (error below -1).
fn embed_max_inner(pair: (i32, i32), bits: &mut BitReader) -> ((i32, i32), usize, Outcome) {
    let swapped = pair_order(pair);
    let (mut lo, hi) = if swapped { (pair.1, pair.0) } else { pair };
    let e = lo - hi;
    let (consumed, o) = match e {
        0 => (0, Outcome::Unchanged),
        -1 => {
            let b = bits.next_bit();
            lo -= i32::from(b);
            (1, outcome(b))
        }
        _ => {
            lo -= 1;
            (0, Outcome::Shifted)
        }
    };
    let out = if swapped { (hi, lo) } else { (lo, hi) };
    (out, consumed, o)
}

pub fn bwd_embed_pair_min(pair: (i32, i32), bits: &mut BitReader) -> ((i32, i32), usize) {
    let (p, n, _) = embed_min_inner(pair, bits);
    (p, n)
}

pub fn bwd_embed_pair_max(pair: (i32, i32), bits: &mut BitReader) -> ((i32, i32), usize) {
    let (p, n, _) = embed_max_inner(pair, bits);
    (p, n)
}

pub fn bwd_extract_pair_min(pair: (i32, i32)) -> ((i32, i32), Option<bool>) {
    let swapped = pair_order(pair);
    let (lo, mut hi) = if swapped { (pair.1, pair.0) } else { pair };
    let bit = match hi - lo {
        0 => None,
        1 => Some(false),
        2 => {
            hi -= 1;
            Some(true)
        }
        _ => {
            hi -= 1;
            None
        }
    };
    (if swapped { (hi, lo) } else { (lo, hi) }, bit)
}

pub fn bwd_extract_pair_max(pair: (i32, i32)) -> ((i32, i32), Option<bool>) {
    let swapped = pair_order(pair);
    let (mut lo, hi) = if swapped { (pair.1, pair.0) } else { pair };
    let bit = match lo - hi {
        0 => None,
        -1 => Some(false),
        -2 => {
            lo += 1;
            Some(true)
        }
        _ => {
            lo += 1;
            None
        }
    };
    (if swapped { (hi, lo) } else { (lo, hi) }, bit)
}

/// Result of the backward pass.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BackwardOutcome {
    /// Bits carried, fill included.
    pub bits: usize,
    /// Fill bits used after the payload ran out.
    pub fill: usize,
    pub min_pairs: usize,
    pub max_pairs: usize,
    pub lm: SkipMap,
}

/// Runs the backward phase over every block with both sets.
pub fn bwd_embed_image(
    img: &GrayImage,
    payload: &BitString,
    reserved_rows: usize,
) -> Result<(GrayImage, BackwardOutcome)> {
    bwd_embed_image_with(img, payload, reserved_rows, &SetSelection::all(), None)
}

/// Processes every pair of the selected sets: first the minimum pairs, then
/// the maximum pairs. The pass always runs to the end; once the payload is
/// used up each embeddable pair takes a 1, which returns the pixel to its
/// pre-forward value.
pub fn bwd_embed_image_with(
    img: &GrayImage,
    payload: &BitString,
    reserved_rows: usize,
    sel: &SetSelection,
    mut trace: Option<&mut Trace>,
) -> Result<(GrayImage, BackwardOutcome)> {
    let (x_min, x_max, lm) = collect_sets_with(img, reserved_rows, sel)?;
    if let Some(t) = trace.as_deref_mut() {
        let grid = BlockGrid::new(img, reserved_rows, BLOCK_LEN)?;
        for k in 0..selected_blocks(&grid, sel) {
            let m = members(img, &grid, k);
            if sel.min && lm.min_bits.as_slice()[k] {
                let e = m.min.expect("always present");
                t.set(e.row, e.col, Outcome::Skipped);
            }
            if sel.max && lm.max_bits.as_slice()[k] {
                let e = m.max.expect("always present");
                t.set(e.row, e.col, Outcome::Skipped);
            }
        }
    }
    let mut out = img.clone();
    let mut reader = BitReader::new(payload, true);
    let mut bits = 0;
    type PairFn = fn((i32, i32), &mut BitReader) -> ((i32, i32), usize, Outcome);
    let passes: [(&PixelSet, PairFn); 2] = [(&x_min, embed_min_inner), (&x_max, embed_max_inner)];
    for (set, f) in passes {
        for pair in set.entries.chunks_exact(2) {
            let ((a, b), n, o) = f((pair[0].value, pair[1].value), &mut reader);
            bits += n;
            out.set(pair[0].row, pair[0].col, a as u8);
            out.set(pair[1].row, pair[1].col, b as u8);
            if let Some(t) = trace.as_deref_mut() {
                // the predicted element is the higher one in the minimum
                // set and the lower one in the maximum set
                let second_is_lower = pair_order((pair[0].value, pair[1].value));
                let predicted_second = second_is_lower != std::ptr::eq(set, &x_min);
                let e = if predicted_second { &pair[1] } else { &pair[0] };
                t.set(e.row, e.col, o);
            }
        }
    }
    Ok((
        out,
        BackwardOutcome {
            bits,
            fill: reader.filled(),
            min_pairs: x_min.pairs(),
            max_pairs: x_max.pairs(),
            lm,
        },
    ))
}

/// Inverse of the backward pass given its skip map; returns the forward
/// image and all `bwd_bits` carried bits (fill included).
pub fn bwd_extract_image(
    img: &GrayImage,
    lm: &SkipMap,
    bwd_bits: usize,
    reserved_rows: usize,
) -> Result<(GrayImage, BitString)> {
    let (x_min, x_max) = sets_from_map(img, reserved_rows, lm)?;
    let mut out = img.clone();
    let mut payload = BitString::with_capacity(bwd_bits);
    type PairFn = fn((i32, i32)) -> ((i32, i32), Option<bool>);
    let passes: [(&PixelSet, PairFn); 2] =
        [(&x_min, bwd_extract_pair_min), (&x_max, bwd_extract_pair_max)];
    for (set, f) in passes {
        for pair in set.entries.chunks_exact(2) {
            let ((a, b), bit) = f((pair[0].value, pair[1].value));
            if !(0..=255).contains(&a) || !(0..=255).contains(&b) {
                return Err(Error::ContainerInconsistent(
                    "backward pair restores out of range".into(),
                ));
            }
            out.set(pair[0].row, pair[0].col, a as u8);
            out.set(pair[1].row, pair[1].col, b as u8);
            payload.extend(bit);
        }
    }
    if payload.len() != bwd_bits {
        return Err(Error::ContainerInconsistent(format!(
            "backward phase carried {} bits, header says {bwd_bits}",
            payload.len()
        )));
    }
    Ok((out, payload))
}

/// Bits the backward phase carries on a forward-embedded image.
pub fn bwd_capacity(img: &GrayImage, reserved_rows: usize, sel: &SetSelection) -> Result<usize> {
    let (x_min, x_max, _) = collect_sets_with(img, reserved_rows, sel)?;
    let count = |set: &PixelSet, want: i32| {
        set.entries
            .chunks_exact(2)
            .filter(|p| {
                (p[0].value - p[1].value).abs() == want
            })
            .count()
    };
    Ok(count(&x_min, 1) + count(&x_max, 1))
}
