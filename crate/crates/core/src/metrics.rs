//! Fidelity metrics, per-pixel embedding traces and rate-distortion sweeps.

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// What one phase did to a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Outcome {
    #[default]
    Unchanged,
    /// Excluded from the backward sets.
    Skipped,
    Embedded0,
    Embedded1,
    Shifted,
}

/// Per-pixel outcomes of one embedding phase over a whole image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    width: usize,
    outcomes: Vec<Outcome>,
}

impl Trace {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            outcomes: vec![Outcome::Unchanged; width * height],
        }
    }

    pub fn for_image(img: &GrayImage) -> Self {
        Self::new(img.width(), img.height())
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, o: Outcome) {
        self.outcomes[row * self.width + col] = o;
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Outcome {
        self.outcomes[row * self.width + col]
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }
}

/// Table-style pixel statistics for one phase (or both combined).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhaseStats {
    pub unchanged: usize,
    pub skipped: usize,
    pub embedded_0: usize,
    pub embedded_1: usize,
    pub shifted: usize,
    /// Pixels whose value differs between `before` and `after`.
    pub changed: usize,
    pub bits_embedded: usize,
    /// Rate denominator: pixels in the embeddable region.
    pub region_pixels: usize,
}

impl PhaseStats {
    pub fn rate(&self, count: usize) -> f64 {
        if self.region_pixels == 0 {
            0.0
        } else {
            count as f64 / self.region_pixels as f64
        }
    }

    /// Unchanged and skipped pixels together.
    pub fn untouched(&self) -> usize {
        self.unchanged + self.skipped
    }

    /// Embedded and shifted pixels together.
    pub fn expanded(&self) -> usize {
        self.bits_embedded + self.shifted
    }
}

/// Tallies a phase trace. `region_pixels` is the rate denominator; every
/// region pixel without a recorded outcome counts as unchanged.
pub fn phase_stats(
    before: &GrayImage,
    after: &GrayImage,
    trace: &Trace,
    region_pixels: usize,
) -> Result<PhaseStats> {
    check_dims(before, after)?;
    let mut s = PhaseStats {
        region_pixels,
        ..PhaseStats::default()
    };
    for o in trace.outcomes() {
        match o {
            Outcome::Unchanged => {}
            Outcome::Skipped => s.skipped += 1,
            Outcome::Embedded0 => s.embedded_0 += 1,
            Outcome::Embedded1 => s.embedded_1 += 1,
            Outcome::Shifted => s.shifted += 1,
        }
    }
    s.bits_embedded = s.embedded_0 + s.embedded_1;
    s.unchanged = region_pixels.saturating_sub(s.skipped + s.bits_embedded + s.shifted);
    s.changed = before
        .pixels()
        .iter()
        .zip(after.pixels())
        .filter(|(a, b)| a != b)
        .count();
    Ok(s)
}

fn check_dims(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if a.same_dimensions(b) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ))
    }
}

/// Mean squared error.
pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    check_dims(a, b)?;
    let sse: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = u64::from(x.abs_diff(y));
            d * d
        })
        .sum();
    Ok(sse as f64 / a.pixels().len() as f64)
}

/// Peak signal-to-noise ratio in dB with peak 255; identical images give
/// `f64::INFINITY`.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(psnr_from_mse(m))
}

pub fn psnr_from_mse(m: f64) -> f64 {
    if m == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / m).log10()
    }
}

/// Formats a PSNR value for reports; infinity prints as `inf`.
pub fn fmt_db(db: f64) -> String {
    if db.is_infinite() {
        "inf".to_string()
    } else {
        format!("{db:.4}")
    }
}

/// Pixels of the block region whose value differs between the images,
/// reported as shifted; the rest as unchanged.
pub fn overall_stats(cover: &GrayImage, after: &GrayImage, region_pixels: usize) -> Result<PhaseStats> {
    check_dims(cover, after)?;
    let changed = cover
        .pixels()
        .iter()
        .zip(after.pixels())
        .filter(|(a, b)| a != b)
        .count();
    Ok(PhaseStats {
        unchanged: region_pixels.saturating_sub(changed),
        shifted: changed,
        changed,
        region_pixels,
        ..PhaseStats::default()
    })
}

/// One rate-distortion sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RdRow {
    pub image: String,
    pub bits: usize,
    /// Bits carried by the two-phase container, `None` if it does not fit.
    pub gross: Option<usize>,
    pub net: Option<usize>,
    pub psnr_fwd: Option<f64>,
    pub psnr_two_phase: Option<f64>,
}

pub const RD_HEADER: [&str; 6] = ["image", "bits", "gross", "net", "psnr_fwd", "psnr_two_phase"];

fn feasible<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::CapacityExceeded { .. } | Error::AuxOverflow { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Embeds seeded payloads of each size with the forward-only scheme and
/// with `opts` (a two-phase scheme). Sizes that do not fit give empty cells.
pub fn rd_sweep(
    image: &str,
    img: &GrayImage,
    sizes: &[usize],
    seed: u64,
    opts: &crate::pipeline::EmbedOptions,
) -> Result<Vec<RdRow>> {
    use crate::pipeline::{encode_with, EmbedOptions, Scheme};
    let fwd_opts = EmbedOptions {
        scheme: Scheme::ForwardOnly,
        ..*opts
    };
    sizes
        .iter()
        .map(|&bits| {
            let data = crate::aux_codec::prng_payload(seed, bits);
            let two = feasible(encode_with(img, &data, opts))?;
            let fwd = feasible(encode_with(img, &data, &fwd_opts))?;
            Ok(RdRow {
                image: image.to_string(),
                bits,
                gross: two.as_ref().map(|(_, r)| r.gross_bits),
                net: two.as_ref().map(|(_, r)| r.net_bits),
                psnr_fwd: fwd.map(|(_, r)| r.psnr_db),
                psnr_two_phase: two.map(|(_, r)| r.psnr_db),
            })
        })
        .collect()
}

/// True when feasible two-phase PSNR values never rise with payload size.
pub fn rd_monotone(rows: &[RdRow]) -> bool {
    let mut sorted: Vec<&RdRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.bits);
    sorted
        .iter()
        .filter_map(|r| r.psnr_two_phase)
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| w[1] <= w[0])
}

/// Writes rows as CSV with a fixed header; missing cells read `infeasible`.
pub fn write_rd_csv<W: std::io::Write>(rows: &[RdRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(RD_HEADER).map_err(io)?;
    let cell = |v: Option<String>| v.unwrap_or_else(|| "infeasible".to_string());
    for r in rows {
        w.write_record([
            r.image.clone(),
            r.bits.to_string(),
            cell(r.gross.map(|v| v.to_string())),
            cell(r.net.map(|v| v.to_string())),
            cell(r.psnr_fwd.map(fmt_db)),
            cell(r.psnr_two_phase.map(fmt_db)),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
