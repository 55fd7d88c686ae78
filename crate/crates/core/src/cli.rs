//! Command-line surface.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::aux_codec::{prng_payload, BitString};
use crate::error::{Error, Result};
use crate::image::{read_pgm, write_pgm, GrayImage};
use crate::metrics::{fmt_db, overall_stats, phase_stats, rd_monotone, rd_sweep, write_rd_csv, PhaseStats};
use crate::pipeline::{
    capacity, decode, encode_max, encode_traced, encode_with, forward_only_decode, BackwardSets,
    EmbedOptions, EmbedReport, RegionBackup, Scheme,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CAPACITY: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_CONTAINER: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "dpvo", version, about = "Reversible data hiding with dual pixel-value-ordering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hide a payload in a cover image.
    Embed(EmbedArgs),
    /// Recover the cover image and payload from a stego image.
    Extract(ExtractArgs),
    /// Embed, extract and compare against the input.
    Verify(EmbedArgs),
    /// Print forward, backward, gross and net capacity.
    Capacity(SchemeArgs),
    /// Per-phase pixel statistics as CSV.
    Stats(EmbedArgs),
    /// Rate-distortion sweep as CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Dpvo,
    ForwardOnly,
    Li,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SetsArg {
    MaxOnly,
    Both,
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "dpvo")]
    pub scheme: SchemeArg,
    #[arg(long, value_enum, default_value = "max-only")]
    pub backward_sets: SetsArg,
    #[arg(long)]
    pub reserved_rows: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub common: SchemeArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Raw payload file, read most-significant bit first.
    #[arg(long, conflicts_with = "random_bits")]
    pub payload: Option<PathBuf>,
    /// Seeded pseudo-random payload of this many bits.
    #[arg(long)]
    pub random_bits: Option<usize>,
    /// Write CSV here instead of stdout (stats only).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Recovered cover image.
    #[arg(long)]
    pub out: PathBuf,
    /// Recovered payload, zero-padded to whole bytes.
    #[arg(long)]
    pub payload: PathBuf,
    /// Require a container of this scheme.
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Comma-separated payload sizes in bits.
    #[arg(long, value_delimiter = ',', default_values_t = [0usize, 5000, 10000, 15000, 20000, 25000, 30000])]
    pub sizes: Vec<usize>,
    #[arg(long, value_enum, default_value = "max-only")]
    pub backward_sets: SetsArg,
    #[arg(long)]
    pub reserved_rows: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

impl SchemeArgs {
    pub fn options(&self) -> EmbedOptions {
        EmbedOptions {
            scheme: scheme_of(self.scheme, self.backward_sets),
            reserved_rows: self.reserved_rows,
        }
    }
}

fn scheme_of(scheme: SchemeArg, sets: SetsArg) -> Scheme {
    match scheme {
        SchemeArg::Dpvo => Scheme::Dpvo(match sets {
            SetsArg::MaxOnly => BackwardSets::MaxOnly,
            SetsArg::Both => BackwardSets::Both,
        }),
        SchemeArg::ForwardOnly => Scheme::ForwardOnly,
        SchemeArg::Li => Scheme::Li,
    }
}

/// Exit status for a pipeline error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CapacityExceeded { .. }
        | Error::AuxOverflow { .. }
        | Error::RegionTooSmall { .. }
        | Error::ReservedRowsTooLarge { .. } => EXIT_CAPACITY,
        Error::MalformedHeader(_)
        | Error::UnsupportedBitDepth(_)
        | Error::TruncatedPixels { .. }
        | Error::DimensionMismatch(..)
        | Error::Io(_) => EXIT_IO,
        Error::CodecDesync
        | Error::NotAContainer
        | Error::UnsupportedVersion(_)
        | Error::ShortHeader(_)
        | Error::CorruptOverflowMap
        | Error::ContainerInconsistent(_) => EXIT_CONTAINER,
    }
}

/// Parses `args` and runs the command, writing reports to `out`.
pub fn run<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch<W: Write>(cmd: Command, out: &mut W) -> Result<i32> {
    match cmd {
        Command::Embed(a) => cmd_embed(&a, out),
        Command::Extract(a) => cmd_extract(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Capacity(a) => cmd_capacity(&a, out),
        Command::Stats(a) => cmd_stats(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
    }
}

fn load(path: &Path) -> Result<GrayImage> {
    read_pgm(&fs::read(path)?)
}

fn payload_of(a: &EmbedArgs) -> Result<Option<BitString>> {
    match (&a.payload, a.random_bits) {
        (Some(p), _) => Ok(Some(BitString::from_bytes(&fs::read(p)?))),
        (None, Some(n)) => Ok(Some(prng_payload(a.common.seed, n))),
        (None, None) => Ok(None),
    }
}

/// Embeds the requested payload, or the largest seeded payload that fits.
fn embed(cover: &GrayImage, a: &EmbedArgs) -> Result<(GrayImage, EmbedReport, BitString)> {
    let opts = a.common.options();
    match payload_of(a)? {
        Some(data) => {
            let (stego, report) = encode_with(cover, &data, &opts)?;
            Ok((stego, report, data))
        }
        None => encode_max(cover, &opts, a.common.seed),
    }
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Dpvo(BackwardSets::MaxOnly) => "dpvo-max-only",
        Scheme::Dpvo(BackwardSets::Both) => "dpvo-both",
        Scheme::ForwardOnly => "forward-only",
        Scheme::Li => "li",
    }
}

fn write_report<W: Write>(out: &mut W, r: &EmbedReport) -> io::Result<()> {
    let backup = match r.backup {
        RegionBackup::Compressed => "compressed",
        RegionBackup::InPayload => "in-payload",
    };
    writeln!(out, "scheme={}", scheme_name(r.scheme))?;
    writeln!(out, "gross={}", r.gross_bits)?;
    writeln!(out, "net={}", r.net_bits)?;
    writeln!(out, "aux={}", r.aux_bits)?;
    writeln!(out, "psnr={}", fmt_db(r.psnr_db))?;
    writeln!(out, "fwd_bits={}", r.fwd_bits)?;
    writeln!(out, "bwd_bits={}", r.bwd_bits)?;
    writeln!(out, "fwd_blocks={}", r.fwd_blocks)?;
    writeln!(out, "padding={}", r.padding)?;
    writeln!(out, "fill={}", r.fill)?;
    writeln!(out, "reserved_rows={}", r.reserved_rows)?;
    writeln!(out, "region_backup={backup}")?;
    writeln!(out, "region_backup_bits={}", r.region_backup_bits)?;
    writeln!(out, "lm_clen={}", r.lm_clen)?;
    writeln!(out, "mou_clen={}", r.mou_clen)
}

fn required_out(a: &EmbedArgs) -> Result<&Path> {
    a.out.as_deref().ok_or_else(|| {
        Error::Io(io::Error::new(io::ErrorKind::InvalidInput, "--out is required"))
    })
}

pub fn cmd_embed<W: Write>(a: &EmbedArgs, out: &mut W) -> Result<i32> {
    let target = required_out(a)?;
    let cover = load(&a.common.input)?;
    let (stego, report, _) = embed(&cover, a)?;
    fs::write(target, write_pgm(&stego))?;
    write_report(out, &report)?;
    Ok(EXIT_OK)
}

pub fn cmd_extract<W: Write>(a: &ExtractArgs, out: &mut W) -> Result<i32> {
    let stego = load(&a.input)?;
    let (cover, data) = match a.scheme {
        Some(SchemeArg::ForwardOnly) => forward_only_decode(&stego)?,
        Some(s) => {
            let info = crate::pipeline::inspect(&stego)?;
            let matches = matches!(
                (s, info.scheme),
                (SchemeArg::Dpvo, Scheme::Dpvo(_)) | (SchemeArg::Li, Scheme::Li)
            );
            if !matches {
                return Err(Error::ContainerInconsistent(format!(
                    "container holds a {} embedding",
                    scheme_name(info.scheme)
                )));
            }
            decode(&stego)?
        }
        None => decode(&stego)?,
    };
    fs::write(&a.out, write_pgm(&cover))?;
    fs::write(&a.payload, data.to_bytes())?;
    writeln!(out, "bits={}", data.len())?;
    Ok(EXIT_OK)
}

pub fn cmd_verify<W: Write>(a: &EmbedArgs, out: &mut W) -> Result<i32> {
    let cover = load(&a.common.input)?;
    let (stego, report, data) = embed(&cover, a)?;
    let (recovered, extracted) = decode(&stego)?;
    let ok = recovered == cover && extracted == data;
    write_report(out, &report)?;
    writeln!(out, "verified={ok}")?;
    Ok(if ok { EXIT_OK } else { EXIT_CONTAINER })
}

pub fn cmd_capacity<W: Write>(a: &SchemeArgs, out: &mut W) -> Result<i32> {
    let cover = load(&a.input)?;
    let c = capacity(&cover, &a.options(), a.seed)?;
    writeln!(out, "forward={}", c.forward)?;
    writeln!(out, "backward={}", c.backward)?;
    writeln!(out, "gross={}", c.gross)?;
    writeln!(out, "net={}", c.net)?;
    writeln!(out, "reserved_rows={}", c.reserved_rows)?;
    writeln!(out, "psnr={}", fmt_db(c.psnr_db))?;
    Ok(EXIT_OK)
}

fn sink(path: &Option<PathBuf>, out: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes)?,
        None => out.write_all(bytes)?,
    }
    Ok(())
}

fn image_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn cmd_stats<W: Write>(a: &EmbedArgs, out: &mut W) -> Result<i32> {
    let cover = load(&a.common.input)?;
    let opts = a.common.options();
    let data = match payload_of(a)? {
        Some(d) => d,
        None => encode_max(&cover, &opts, a.common.seed)?.2,
    };
    let (_, _, t) = encode_traced(&cover, &data, &opts)?;
    let fwd = phase_stats(&cover, &t.forward_image, &t.forward, t.region_pixels)?;
    let bwd = phase_stats(&t.forward_image, &t.pvo_image, &t.backward, t.region_pixels)?;
    let all = overall_stats(&cover, &t.pvo_image, t.region_pixels)?;

    let name = image_name(&a.common.input);
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(io::Error::other(e));
    w.write_record([
        "image", "phase", "region_pixels", "unchanged", "unchanged_rate", "skipped",
        "embedded_0", "embedded_1", "shifted", "shifted_rate", "bits",
    ])
    .map_err(csv_err)?;
    let row = |phase: &str, s: &PhaseStats| {
        vec![
            name.clone(),
            phase.to_string(),
            s.region_pixels.to_string(),
            s.unchanged.to_string(),
            format!("{:.6}", s.rate(s.unchanged)),
            s.skipped.to_string(),
            s.embedded_0.to_string(),
            s.embedded_1.to_string(),
            s.shifted.to_string(),
            format!("{:.6}", s.rate(s.shifted)),
            s.bits_embedded.to_string(),
        ]
    };
    for (phase, s) in [("forward", &fwd), ("backward", &bwd), ("overall", &all)] {
        w.write_record(row(phase, s)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(io::Error::other(e.to_string())))?;
    sink(&a.csv, out, &bytes)?;
    Ok(EXIT_OK)
}

pub fn cmd_bench<W: Write>(a: &BenchArgs, out: &mut W) -> Result<i32> {
    let opts = EmbedOptions {
        scheme: scheme_of(SchemeArg::Dpvo, a.backward_sets),
        reserved_rows: a.reserved_rows,
    };
    let mut rows = Vec::new();
    for path in &a.inputs {
        let img = load(path)?;
        let r = rd_sweep(&image_name(path), &img, &a.sizes, a.seed, &opts)?;
        if !rd_monotone(&r) {
            eprintln!("warning: PSNR rises with payload on {}", path.display());
        }
        rows.extend(r);
    }
    let mut bytes = Vec::new();
    write_rd_csv(&rows, &mut bytes)?;
    sink(&a.csv, out, &bytes)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::CapacityExceeded { requested: 2, available: 1 }), 2);
        assert_eq!(exit_code(&Error::UnsupportedBitDepth(65535)), 3);
        assert_eq!(exit_code(&Error::NotAContainer), 4);
        assert_eq!(exit_code(&Error::CodecDesync), 4);
    }

    #[test]
    fn payload_sources_are_exclusive() {
        let mut sink = Vec::new();
        let code = run(
            ["dpvo", "embed", "--in", "a.pgm", "--out", "b.pgm", "--payload", "p", "--random-bits", "3"],
            &mut sink,
        );
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn scheme_flags() {
        let cli = Cli::try_parse_from(["dpvo", "capacity", "--in", "x", "--backward-sets", "both"]).unwrap();
        let Command::Capacity(a) = cli.command else { panic!() };
        assert_eq!(a.options().scheme, Scheme::Dpvo(BackwardSets::Both));
        let cli = Cli::try_parse_from(["dpvo", "bench", "--in", "a", "--in", "b", "--sizes", "0,10"]).unwrap();
        let Command::Bench(b) = cli.command else { panic!() };
        assert_eq!((b.inputs.len(), b.sizes), (2, vec![0, 10]));
    }
}
