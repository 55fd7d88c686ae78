//! Encoder and decoder for the full container.
//!
//! The bottom `reserved_rows` rows hold, in their LSBs (bottom row first):
//! the 200-bit header, the location-map section, the overflow section and,
//! when the original region LSBs compress well, their compressed form.
//! Otherwise the original region LSBs travel at the front of the payload.

use crate::aux_codec::{
    arith_decode, arith_encode, header_pack, header_unpack, prng_payload, BitString, Header,
    HEADER_BITS, VERSION,
};
use crate::backward::{
    bwd_embed_image_with, bwd_extract_image, rebuild_skip_map, skip_flags, stego_view,
    SetSelection, SkipMap,
};
use crate::error::{Error, Result};
use crate::forward::{
    fwd_embed_image_traced, fwd_extract_image, fwd_plan, preprocess_blocks, restore_with_map,
    ForwardOutcome, OverflowMap, BLOCK_LEN,
};
use crate::image::{
    lsb_region_read, lsb_region_read_prefix, lsb_region_write, BlockGrid, GrayImage,
};
use crate::li::{li_embed_image, li_extract_image, li_plan, DEFAULT_BLOCK_LEN};
use crate::metrics::{psnr, Trace};

/// Which forward-modified pixels the backward phase pairs up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackwardSets {
    /// Only the maximum set.
    #[default]
    MaxOnly,
    /// Both the minimum and maximum sets.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Dpvo(BackwardSets),
    ForwardOnly,
    Li,
}

impl Default for Scheme {
    fn default() -> Self {
        Scheme::Dpvo(BackwardSets::default())
    }
}

impl Scheme {
    fn block_len(self) -> usize {
        match self {
            Scheme::Li => DEFAULT_BLOCK_LEN,
            _ => BLOCK_LEN,
        }
    }

    fn selection(self, blocks: usize) -> Option<SetSelection> {
        match self {
            Scheme::Dpvo(sets) => Some(SetSelection {
                blocks,
                min: sets == BackwardSets::Both,
                max: true,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmbedOptions {
    pub scheme: Scheme,
    /// Fixed number of reserved rows; grown automatically when `None`.
    pub reserved_rows: Option<usize>,
}

impl EmbedOptions {
    pub fn scheme(scheme: Scheme) -> Self {
        Self {
            scheme,
            reserved_rows: None,
        }
    }
}

/// How the original LSBs of the reserved region are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionBackup {
    /// Arithmetic-coded into the region after the maps.
    Compressed,
    /// Raw, at the front of the payload.
    InPayload,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedReport {
    pub scheme: Scheme,
    pub reserved_rows: usize,
    pub backup: RegionBackup,
    /// Payload bits carried by the PVO phases (user data plus the region
    /// backup when it travels in the payload).
    pub gross_bits: usize,
    /// User data bits.
    pub net_bits: usize,
    /// Header, maps, compressed region backup and in-payload backup.
    pub aux_bits: usize,
    pub lm_clen: usize,
    pub mou_clen: usize,
    pub region_backup_bits: usize,
    pub fwd_bits: usize,
    pub bwd_bits: usize,
    pub fwd_blocks: usize,
    pub padding: usize,
    pub fill: usize,
    pub psnr_db: f64,
}

const FLAG_MIN: u64 = 1;
const FLAG_MAX: u64 = 1 << 1;
const FLAG_COMPRESSED_BACKUP: u64 = 1 << 2;
const FLAG_LI: u64 = 1 << 3;
const FLAG_BITS: u32 = 8;
const BLOCKS_BITS: u32 = 32;
const LEN_BITS: u32 = 24;

/// Per-phase traces of one encode.
#[derive(Debug, Clone)]
pub struct EncodeTrace {
    pub forward: Trace,
    pub backward: Trace,
    /// Image after preprocessing and the forward phase.
    pub forward_image: GrayImage,
    /// Image after both phases, before the region LSBs are written.
    pub pvo_image: GrayImage,
    pub region_pixels: usize,
}

enum Shortfall {
    Capacity { requested: usize, available: usize },
    Aux { needed: usize },
}

/// Where the original region LSBs go for one attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Backup {
    /// All region LSBs, compressed, after the maps.
    Compressed,
    /// The first `n` region LSBs, raw, at the front of the payload.
    InPayload(usize),
}

struct Attempt {
    stego: GrayImage,
    report: EmbedReport,
    trace: Option<EncodeTrace>,
}

type AttemptResult = std::result::Result<Attempt, Shortfall>;

/// Embeds `data` with the default scheme.
pub fn encode(cover: &GrayImage, data: &BitString) -> Result<(GrayImage, EmbedReport)> {
    encode_with(cover, data, &EmbedOptions::default())
}

pub fn encode_with(
    cover: &GrayImage,
    data: &BitString,
    opts: &EmbedOptions,
) -> Result<(GrayImage, EmbedReport)> {
    let a = search(cover, opts, |r, backup| attempt(cover, data, r, backup, opts.scheme, false))?;
    Ok((a.stego, a.report))
}

/// As [`encode_with`], also returning per-phase traces.
pub fn encode_traced(
    cover: &GrayImage,
    data: &BitString,
    opts: &EmbedOptions,
) -> Result<(GrayImage, EmbedReport, EncodeTrace)> {
    let a = search(cover, opts, |r, backup| attempt(cover, data, r, backup, opts.scheme, true))?;
    Ok((a.stego, a.report, a.trace.expect("traced attempt")))
}

/// Embeds the longest payload drawn from the seeded generator that fits.
pub fn encode_max(
    cover: &GrayImage,
    opts: &EmbedOptions,
    seed: u64,
) -> Result<(GrayImage, EmbedReport, BitString)> {
    let mut chosen = BitString::new();
    let a = search(cover, opts, |r, backup| {
        let n = probe(cover, r, backup, opts.scheme, seed)?;
        let data = prng_payload(seed, n);
        let out = attempt(cover, &data, r, backup, opts.scheme, false)?;
        if out.is_ok() {
            chosen = data;
        }
        Ok(out)
    })?;
    Ok((a.stego, a.report, chosen))
}

/// Tries reserved-row counts from the smallest that holds a header upward.
/// For each count the compressed region backup is tried first, then the
/// in-payload backup with a backup length grown until it covers the aux
/// data.
fn search(
    cover: &GrayImage,
    opts: &EmbedOptions,
    mut run: impl FnMut(usize, Backup) -> Result<AttemptResult>,
) -> Result<Attempt> {
    let w = cover.width();
    let max_rows = cover.height().saturating_sub(1);
    let mut rows = opts.reserved_rows.unwrap_or_else(|| HEADER_BITS.div_ceil(w));
    if rows == 0 || rows > max_rows {
        return Err(match opts.reserved_rows {
            Some(r) if r > 0 => Error::ReservedRowsTooLarge {
                reserved: r,
                height: cover.height(),
            },
            _ => Error::AuxOverflow {
                needed: HEADER_BITS,
                available: max_rows * w,
            },
        });
    }
    let mut capacity: Option<(usize, usize)> = None;
    loop {
        let region = rows * w;
        let mut overflow: Option<usize> = None;
        let mut note = |sf: Shortfall, overflow: &mut Option<usize>| match sf {
            Shortfall::Capacity {
                requested,
                available,
            } => {
                let best = capacity.map_or(available, |(_, a)| a.max(available));
                capacity = Some((requested, best));
            }
            Shortfall::Aux { needed } => {
                *overflow = Some(overflow.map_or(needed, |n: usize| n.min(needed)));
            }
        };

        match run(rows, Backup::Compressed)? {
            Ok(a) => return Ok(a),
            Err(sf) => note(sf, &mut overflow),
        }

        let mut backup_len = (HEADER_BITS + 128).min(region);
        // smallest aux need seen above the current backup length; a
        // capacity miss with slack retries once at exactly that length
        let mut tight: Option<usize> = None;
        for _ in 0..16 {
            match run(rows, Backup::InPayload(backup_len))? {
                Ok(a) => return Ok(a),
                Err(Shortfall::Aux { needed }) if needed <= region && needed > backup_len => {
                    tight = Some(needed);
                    backup_len = (needed + needed / 64 + 8).min(region);
                }
                Err(Shortfall::Capacity { .. }) if tight.is_some_and(|t| t < backup_len) => {
                    backup_len = tight.take().expect("checked");
                }
                Err(sf) => {
                    note(sf, &mut overflow);
                    break;
                }
            }
        }

        let Some(needed) = overflow else { break };
        let next = (rows + 1).max(needed.div_ceil(w));
        if opts.reserved_rows.is_some() || next > max_rows {
            if capacity.is_none() {
                return Err(Error::AuxOverflow {
                    needed,
                    available: region,
                });
            }
            break;
        }
        rows = next;
    }
    let (requested, available) = capacity.expect("loop exits with a shortfall");
    Err(Error::CapacityExceeded {
        requested,
        available,
    })
}

/// Forward plan for the scheme.
fn plan(img: &GrayImage, r: usize, scheme: Scheme, n: usize) -> Result<ForwardOutcome> {
    match scheme {
        Scheme::Li => li_plan(img, r, DEFAULT_BLOCK_LEN, n),
        _ => fwd_plan(img, r, n),
    }
}

struct Phases {
    pre: GrayImage,
    forward: GrayImage,
    pvo: GrayImage,
    fwd: ForwardOutcome,
    bwd_bits: usize,
    bwd_fill: usize,
    lm: Option<SkipMap>,
    /// Payload bits actually carried (padding and fill excluded).
    carried: usize,
    traces: Option<(Trace, Trace)>,
}

fn run_phases(
    cover: &GrayImage,
    payload: &BitString,
    r: usize,
    scheme: Scheme,
    traced: bool,
) -> Result<Phases> {
    let grid = BlockGrid::new(cover, r, scheme.block_len())?;
    let p = plan(cover, r, scheme, payload.len())?;
    let mut pre = cover.clone();
    preprocess_blocks(&mut pre, &grid, p.blocks);

    let mut fwd_trace = traced.then(|| Trace::for_image(cover));
    let (forward, fwd) = match scheme {
        Scheme::Li => li_embed_image(&pre, payload, r, DEFAULT_BLOCK_LEN)?,
        _ => fwd_embed_image_traced(&pre, payload, r, fwd_trace.as_mut())?,
    };
    debug_assert_eq!(fwd, p);
    let fwd_carried = fwd.bits - fwd.padding;
    let rest = payload.slice(fwd_carried.min(payload.len())..payload.len());

    let mut bwd_trace = traced.then(|| Trace::for_image(cover));
    let (pvo, bwd_bits, bwd_fill, lm) = match scheme.selection(fwd.blocks) {
        Some(sel) => {
            let (img, o) = bwd_embed_image_with(&forward, &rest, r, &sel, bwd_trace.as_mut())?;
            (img, o.bits, o.fill, Some(o.lm))
        }
        None => (forward.clone(), 0, 0, None),
    };
    let carried = fwd_carried + bwd_bits - bwd_fill;
    Ok(Phases {
        pre,
        forward,
        pvo,
        fwd,
        bwd_bits,
        bwd_fill,
        lm,
        carried,
        traces: fwd_trace.zip(bwd_trace),
    })
}

fn backup_prefix(cover: &GrayImage, r: usize, backup: Backup) -> BitString {
    match backup {
        Backup::Compressed => BitString::new(),
        Backup::InPayload(n) => lsb_region_read(cover, r).slice(0..n),
    }
}

/// Largest data length that the PVO phases carry for this configuration.
fn probe(cover: &GrayImage, r: usize, backup: Backup, scheme: Scheme, seed: u64) -> Result<usize> {
    let grid = BlockGrid::new(cover, r, scheme.block_len())?;
    let prefix = backup_prefix(cover, r, backup);
    // blocks carry at most two bits and pairs one, so this is never used up
    let bound = grid.len() * grid.block_len + 64;
    let mut payload = prefix.clone();
    payload.extend_from(&prng_payload(seed, bound));
    let ph = run_phases(cover, &payload, r, scheme, false)?;
    Ok(ph.carried.saturating_sub(prefix.len()))
}

/// Pixels whose overflow flag is stored: block pixels of blocks
/// `0..blocks` whose preprocessed value is 1 or 254, in block order.
fn overflow_candidates(pre: &GrayImage, grid: &BlockGrid, blocks: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for k in 0..blocks {
        let (row, col) = grid.origin(k);
        for c in col..col + grid.block_len {
            if matches!(pre.get(row, c), 1 | 254) {
                out.push((row, c));
            }
        }
    }
    out
}

fn attempt(
    cover: &GrayImage,
    data: &BitString,
    r: usize,
    backup: Backup,
    scheme: Scheme,
    traced: bool,
) -> Result<AttemptResult> {
    let grid = BlockGrid::new(cover, r, scheme.block_len())?;
    let region_len = r * cover.width();
    let prefix = backup_prefix(cover, r, backup);
    let mut payload = prefix.clone();
    payload.extend_from(data);
    let ph = run_phases(cover, &payload, r, scheme, traced)?;
    if ph.carried < payload.len() {
        return Ok(Err(Shortfall::Capacity {
            requested: data.len(),
            available: ph.carried.saturating_sub(prefix.len()),
        }));
    }

    let mut flags = 0u64;
    let skip = match (scheme.selection(ph.fwd.blocks), &ph.lm) {
        (Some(sel), Some(lm)) => {
            flags |= FLAG_MAX;
            if sel.min {
                flags |= FLAG_MIN;
            }
            skip_flags(&stego_view(&ph.pvo, r, &sel)?, lm)
        }
        _ => BitString::new(),
    };
    if scheme == Scheme::Li {
        flags |= FLAG_LI;
    }
    let (backup_code, backup_field) = match backup {
        Backup::Compressed => {
            flags |= FLAG_COMPRESSED_BACKUP;
            let code = arith_encode(&lsb_region_read(cover, r));
            let n = code.len();
            (code, n)
        }
        Backup::InPayload(n) => (BitString::new(), n),
    };
    let skip_code = arith_encode(&skip);
    let mut lm_section = BitString::new();
    lm_section.push_uint(flags, FLAG_BITS);
    lm_section.push_uint(ph.fwd.blocks as u64, BLOCKS_BITS);
    if backup_field >= 1 << LEN_BITS || skip.len() >= 1 << LEN_BITS {
        return Ok(Err(Shortfall::Aux { needed: usize::MAX }));
    }
    lm_section.push_uint(backup_field as u64, LEN_BITS);
    lm_section.push_uint(skip.len() as u64, LEN_BITS);
    lm_section.extend_from(&skip_code);

    let candidates = overflow_candidates(&ph.pre, &grid, ph.fwd.blocks);
    let overflow_flags: BitString = candidates
        .iter()
        .map(|&(row, col)| cover.get(row, col) != ph.pre.get(row, col))
        .collect();
    let mou_section = arith_encode(&overflow_flags);

    let aux_len = HEADER_BITS + lm_section.len() + mou_section.len() + backup_code.len();
    let covered = match backup {
        Backup::Compressed => region_len,
        Backup::InPayload(n) => n,
    };
    if aux_len > region_len.min(covered) {
        return Ok(Err(Shortfall::Aux { needed: aux_len }));
    }
    let fits_u32 = |n: usize| u32::try_from(n).ok();
    let (Some(data_len), Some(fwd_bits), Some(bwd_bits), Some(rows)) = (
        fits_u32(data.len()),
        fits_u32(ph.fwd.bits),
        fits_u32(ph.bwd_bits),
        u16::try_from(r).ok(),
    ) else {
        return Ok(Err(Shortfall::Capacity {
            requested: data.len(),
            available: u32::MAX as usize,
        }));
    };
    if !Header::lm_clen_fits(lm_section.len()) || !Header::lm_clen_fits(mou_section.len()) {
        return Ok(Err(Shortfall::Aux { needed: usize::MAX }));
    }
    let header = Header {
        version: VERSION,
        reserved_rows: rows,
        data_len,
        fwd_bits,
        bwd_bits,
        lm_clen: lm_section.len() as u32,
        mou_clen: mou_section.len() as u32,
    };
    let mut region = header_pack(&header);
    region.extend_from(&lm_section);
    region.extend_from(&mou_section);
    region.extend_from(&backup_code);

    let mut stego = ph.pvo.clone();
    lsb_region_write(&mut stego, r, &region)?;

    let report = EmbedReport {
        scheme,
        reserved_rows: r,
        backup: match backup {
            Backup::Compressed => RegionBackup::Compressed,
            Backup::InPayload(_) => RegionBackup::InPayload,
        },
        gross_bits: ph.carried,
        net_bits: data.len(),
        aux_bits: aux_len + prefix.len(),
        lm_clen: lm_section.len(),
        mou_clen: mou_section.len(),
        region_backup_bits: backup_code.len() + prefix.len(),
        fwd_bits: ph.fwd.bits,
        bwd_bits: ph.bwd_bits,
        fwd_blocks: ph.fwd.blocks,
        padding: ph.fwd.padding,
        fill: ph.bwd_fill,
        psnr_db: psnr(cover, &stego)?,
    };
    let trace = ph.traces.map(|(forward, backward)| EncodeTrace {
        forward,
        backward,
        forward_image: ph.forward,
        pvo_image: ph.pvo,
        region_pixels: grid.rows * grid.blocks_per_row() * grid.block_len,
    });
    Ok(Ok(Attempt {
        stego,
        report,
        trace,
    }))
}

fn inconsistent(msg: impl Into<String>) -> Error {
    Error::ContainerInconsistent(msg.into())
}

/// Parsed container metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainerInfo {
    pub header: Header,
    pub scheme: Scheme,
    pub backup: RegionBackup,
    pub fwd_blocks: usize,
}

/// Reads the header and location-map flags without decoding.
pub fn inspect(stego: &GrayImage) -> Result<ContainerInfo> {
    let header = header_unpack(&lsb_region_read_prefix(stego, HEADER_BITS))?;
    let r = usize::from(header.reserved_rows);
    if r == 0 || r >= stego.height() {
        return Err(inconsistent(format!("{r} reserved rows in a {}-row image", stego.height())));
    }
    let region = lsb_region_read(stego, r);
    let lm_end = HEADER_BITS + header.lm_clen as usize;
    if lm_end + header.mou_clen as usize > region.len() {
        return Err(inconsistent("location maps overrun the reserved region"));
    }
    let field = |pos: usize, width: u32| {
        region
            .read_uint(pos, width)
            .filter(|_| pos + width as usize <= lm_end)
            .ok_or_else(|| inconsistent("location-map section too short"))
    };
    let flags = field(HEADER_BITS, FLAG_BITS)?;
    if flags & !(FLAG_MIN | FLAG_MAX | FLAG_COMPRESSED_BACKUP | FLAG_LI) != 0 {
        return Err(inconsistent(format!("unknown location-map flags {flags:#x}")));
    }
    let scheme = match (flags & FLAG_LI != 0, flags & FLAG_MAX != 0, flags & FLAG_MIN != 0) {
        (true, false, false) => Scheme::Li,
        (false, false, false) => Scheme::ForwardOnly,
        (false, true, false) => Scheme::Dpvo(BackwardSets::MaxOnly),
        (false, true, true) => Scheme::Dpvo(BackwardSets::Both),
        _ => return Err(inconsistent(format!("invalid scheme flags {flags:#x}"))),
    };
    let backup = if flags & FLAG_COMPRESSED_BACKUP != 0 {
        RegionBackup::Compressed
    } else {
        RegionBackup::InPayload
    };
    let fwd_blocks = field(HEADER_BITS + FLAG_BITS as usize, BLOCKS_BITS)? as usize;
    Ok(ContainerInfo {
        header,
        scheme,
        backup,
        fwd_blocks,
    })
}

/// Recovers the cover image and the embedded data.
pub fn decode(stego: &GrayImage) -> Result<(GrayImage, BitString)> {
    let info = inspect(stego)?;
    let h = info.header;
    let r = usize::from(h.reserved_rows);
    let scheme = info.scheme;
    let grid = BlockGrid::new(stego, r, scheme.block_len())?;
    let k = info.fwd_blocks;
    if k > grid.len() {
        return Err(inconsistent(format!("{k} forward blocks, image has {}", grid.len())));
    }
    let region = lsb_region_read(stego, r);
    let region_len = region.len();
    let lm_end = HEADER_BITS + h.lm_clen as usize;
    let mou_end = lm_end + h.mou_clen as usize;

    let mut pos = HEADER_BITS + (FLAG_BITS + BLOCKS_BITS) as usize;
    let mut len_field = || -> Result<usize> {
        let n = region
            .read_uint(pos, LEN_BITS)
            .filter(|_| pos + LEN_BITS as usize <= lm_end)
            .ok_or_else(|| inconsistent("location-map section too short"))?;
        pos += LEN_BITS as usize;
        Ok(n as usize)
    };
    let backup_field = len_field()?;
    let skip_count = len_field()?;
    let backup_clen = match info.backup {
        RegionBackup::Compressed => backup_field,
        RegionBackup::InPayload => 0,
    };
    if mou_end + backup_clen > region_len {
        return Err(inconsistent("region backup overruns the reserved region"));
    }
    let skip_code = region.slice(pos..lm_end);
    let mou_code = region.slice(lm_end..mou_end);
    let backup_code = region.slice(mou_end..mou_end + backup_clen);

    // backward phase
    let skip = arith_decode(&skip_code, skip_count)?;
    let (forward, tail) = match scheme.selection(k) {
        Some(sel) => {
            let lm = rebuild_skip_map(&stego_view(stego, r, &sel)?, &skip)?;
            bwd_extract_image(stego, &lm, h.bwd_bits as usize, r)?
        }
        None => {
            if h.bwd_bits != 0 || !skip.is_empty() {
                return Err(inconsistent("backward data in a single-phase container"));
            }
            (stego.clone(), BitString::new())
        }
    };

    // forward phase
    let (pre, head) = match scheme {
        Scheme::Li => li_extract_image(&forward, h.fwd_bits as usize, k, r, DEFAULT_BLOCK_LEN)?,
        _ => fwd_extract_image(&forward, h.fwd_bits as usize, k, r)?,
    };

    // boundary pixels
    let candidates = overflow_candidates(&pre, &grid, k);
    let flags = arith_decode(&mou_code, candidates.len())?;
    let mut map = OverflowMap::empty(&grid);
    for (&(row, col), set) in candidates.iter().zip(flags.iter()) {
        if set {
            map.set(row, col, true);
        }
    }
    let mut cover = restore_with_map(&pre, &map)?;

    // payload and region backup
    let mut payload = head;
    payload.extend_from(&tail);
    let data_len = h.data_len as usize;
    let (original_lsbs, data_start) = match info.backup {
        RegionBackup::Compressed => (arith_decode(&backup_code, region_len)?, 0),
        RegionBackup::InPayload => {
            if backup_field > region_len || payload.len() < backup_field {
                return Err(inconsistent("region backup length out of range"));
            }
            (payload.slice(0..backup_field), backup_field)
        }
    };
    if payload.len() < data_start + data_len {
        return Err(inconsistent(format!(
            "payload holds {} bits, {} needed",
            payload.len(),
            data_start + data_len
        )));
    }
    lsb_region_write(&mut cover, r, &original_lsbs)?;
    Ok((cover, payload.slice(data_start..data_start + data_len)))
}

/// Forward phase only, in the same container.
pub fn forward_only_encode(cover: &GrayImage, data: &BitString) -> Result<(GrayImage, EmbedReport)> {
    encode_with(cover, data, &EmbedOptions::scheme(Scheme::ForwardOnly))
}

pub fn forward_only_decode(stego: &GrayImage) -> Result<(GrayImage, BitString)> {
    let info = inspect(stego)?;
    if info.scheme != Scheme::ForwardOnly {
        return Err(inconsistent("not a forward-only container"));
    }
    decode(stego)
}

/// Capacity of a cover image.
///
/// `forward`, `backward` and `gross` count what the PVO phases carry over
/// the whole image with no reserved rows, i.e. ignoring every container
/// overhead. `net` is the longest user payload an actual container takes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacity {
    pub forward: usize,
    pub backward: usize,
    pub gross: usize,
    pub net: usize,
    pub reserved_rows: usize,
    /// PSNR of the container holding `net` bits.
    pub psnr_db: f64,
}

/// Bits the PVO phases of `scheme` carry over the whole image when fed a
/// payload longer than they can take. The backward count depends on the
/// forward bits, so it is measured with the seeded payload.
pub fn phase_capacity(cover: &GrayImage, scheme: Scheme, seed: u64) -> Result<(usize, usize)> {
    let grid = BlockGrid::new(cover, 0, scheme.block_len())?;
    let payload = prng_payload(seed, grid.len() * grid.block_len + 64);
    let ph = run_phases(cover, &payload, 0, scheme, false)?;
    let backward = ph.bwd_bits - ph.bwd_fill;
    Ok((ph.carried - backward, backward))
}

pub fn capacity(cover: &GrayImage, opts: &EmbedOptions, seed: u64) -> Result<Capacity> {
    let (forward, backward) = phase_capacity(cover, opts.scheme, seed)?;
    let (_, report, _) = encode_max(cover, opts, seed)?;
    Ok(Capacity {
        forward,
        backward,
        gross: forward + backward,
        net: report.net_bits,
        reserved_rows: report.reserved_rows,
        psnr_db: report.psnr_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn textured(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        GrayImage::from_fn(w, h, |r, c| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (60 + (r + c) / 2 + (s % 5) as usize) as u8
        })
    }

    fn round_trip(cover: &GrayImage, data: &BitString, opts: &EmbedOptions) -> EmbedReport {
        let (stego, report) = encode_with(cover, data, opts).unwrap();
        let (back, got) = decode(&stego).unwrap();
        assert!(back == *cover, "cover not restored");
        assert_eq!(&got, data);
        report
    }

    const SCHEMES: [Scheme; 4] = [
        Scheme::Dpvo(BackwardSets::MaxOnly),
        Scheme::Dpvo(BackwardSets::Both),
        Scheme::ForwardOnly,
        Scheme::Li,
    ];

    #[test]
    fn empty_payload() {
        let cover = textured(96, 96, 1);
        for scheme in SCHEMES {
            let r = round_trip(&cover, &BitString::new(), &EmbedOptions::scheme(scheme));
            assert_eq!(r.net_bits, 0);
            // only the region backup is carried, if anything
            let carried_backup = match r.backup {
                RegionBackup::Compressed => 0,
                RegionBackup::InPayload => r.region_backup_bits,
            };
            assert_eq!(r.gross_bits, carried_backup);
        }
    }

    #[test]
    fn report_accounting() {
        let cover = textured(128, 128, 2);
        for scheme in SCHEMES {
            let data = prng_payload(3, 700);
            let r = round_trip(&cover, &data, &EmbedOptions::scheme(scheme));
            assert_eq!(r.gross_bits, r.fwd_bits - r.padding + r.bwd_bits - r.fill);
            assert_eq!(r.net_bits, 700);
            assert!(r.gross_bits >= r.net_bits);
            let info = inspect(&encode_with(&cover, &data, &EmbedOptions::scheme(scheme)).unwrap().0).unwrap();
            assert_eq!(info.scheme, scheme);
            assert_eq!(info.fwd_blocks, r.fwd_blocks);
        }
    }

    #[test]
    fn odd_payload_pads_last_block() {
        let cover = textured(60, 40, 4);
        // single-bit payloads end inside a two-bit block often enough
        let padded = (1..40)
            .map(|n| round_trip(&cover, &prng_payload(n, n as usize), &EmbedOptions::scheme(Scheme::ForwardOnly)))
            .filter(|r| r.padding == 1)
            .count();
        assert!(padded > 0);
    }

    #[test]
    fn max_payload_round_trips() {
        let cover = textured(64, 64, 5);
        for scheme in SCHEMES {
            let opts = EmbedOptions::scheme(scheme);
            let (stego, report, data) = encode_max(&cover, &opts, 9).unwrap();
            assert_eq!(report.net_bits, data.len());
            assert_eq!(decode(&stego).unwrap(), (cover.clone(), data.clone()));
            let more = prng_payload(9, data.len() + 40);
            assert!(matches!(
                encode_with(&cover, &more, &opts),
                Err(Error::CapacityExceeded { .. })
            ));
        }
    }

    #[test]
    fn corrupted_magic() {
        let cover = textured(64, 64, 6);
        let (mut stego, _) = encode(&cover, &prng_payload(1, 50)).unwrap();
        // first header bit sits at the bottom-left pixel
        let (row, col) = (stego.height() - 1, 0);
        stego.set(row, col, stego.get(row, col) ^ 1);
        assert!(matches!(decode(&stego), Err(Error::NotAContainer)));
    }

    #[test]
    fn plain_image_is_not_a_container() {
        assert!(matches!(decode(&textured(32, 32, 7)), Err(Error::NotAContainer)));
    }

    #[test]
    fn forward_only_decoder_checks_scheme() {
        let cover = textured(96, 96, 8);
        let data = prng_payload(2, 120);
        let (stego, _) = encode(&cover, &data).unwrap();
        assert!(matches!(forward_only_decode(&stego), Err(Error::ContainerInconsistent(_))));
        let (stego, _) = forward_only_encode(&cover, &data).unwrap();
        assert_eq!(forward_only_decode(&stego).unwrap(), (cover, data));
    }

    #[test]
    fn fixed_reserved_rows() {
        let cover = textured(64, 64, 10);
        let data = prng_payload(4, 300);
        let opts = EmbedOptions {
            scheme: Scheme::default(),
            reserved_rows: Some(12),
        };
        assert_eq!(round_trip(&cover, &data, &opts).reserved_rows, 12);
        let too_many = EmbedOptions {
            reserved_rows: Some(64),
            ..opts
        };
        assert!(matches!(
            encode_with(&cover, &data, &too_many),
            Err(Error::ReservedRowsTooLarge { .. })
        ));
    }

    #[test]
    fn tiny_image_cannot_hold_header() {
        let cover = GrayImage::filled(6, 6, 100);
        assert!(matches!(
            encode(&cover, &BitString::new()),
            Err(Error::AuxOverflow { .. })
        ));
    }

    #[test]
    fn saturated_images() {
        for v in [0u8, 1, 254, 255] {
            let cover = GrayImage::filled(48, 48, v);
            let r = round_trip(&cover, &BitString::new(), &EmbedOptions::default());
            assert_eq!(r.backup, RegionBackup::Compressed);
        }
    }

    #[test]
    fn phase_capacity_adds_up() {
        let cover = textured(90, 90, 11);
        let (f, b) = phase_capacity(&cover, Scheme::ForwardOnly, 1).unwrap();
        assert_eq!(b, 0);
        let (f2, b2) = phase_capacity(&cover, Scheme::default(), 1).unwrap();
        assert_eq!(f, f2);
        assert!(b2 > 0);
        let c = capacity(&cover, &EmbedOptions::default(), 1).unwrap();
        assert_eq!(c.gross, f2 + b2);
        assert!(c.net < c.gross);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_round_trip(seed: u64, n in 0usize..400, s in 0usize..4) {
            let cover = textured(40, 36, seed);
            let data = prng_payload(seed, n);
            let opts = EmbedOptions::scheme(SCHEMES[s]);
            match encode_with(&cover, &data, &opts) {
                Ok((stego, _)) => prop_assert_eq!(decode(&stego).unwrap(), (cover, data)),
                Err(Error::CapacityExceeded { .. } | Error::AuxOverflow { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }
}
