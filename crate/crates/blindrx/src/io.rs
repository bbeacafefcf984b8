//! On-disk format: interleaved little-endian f64 I/Q samples plus a JSON
//! sidecar carrying the metadata needed to interpret and reprocess them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::iq::{ChannelParams, IqStream};
use crate::modulation::ModClass;

/// Sidecar metadata stored next to the raw sample file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub sample_period: f64,
    pub oversampling: Option<usize>,
    pub class: Option<ModClass>,
    pub channel: Option<ChannelParams>,
    pub seed: Option<u64>,
    pub normalized: bool,
    pub n_samples: usize,
}

/// Write interleaved little-endian f64 I/Q.
pub fn write_iq(path: &Path, stream: &IqStream) -> Result<()> {
    let mut buf = Vec::with_capacity(stream.samples.len() * 16);
    for s in &stream.samples {
        buf.extend_from_slice(&s.re.to_le_bytes());
        buf.extend_from_slice(&s.im.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_iq(path: &Path) -> Result<Vec<Complex64>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 16 != 0 {
        return Err(Error::Malformed(format!(
            "{} has {} bytes, not a whole number of complex f64 samples",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect())
}

pub fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<()> {
    let json = serde_json::to_string_pretty(sidecar)?;
    fs::write(path, json)?;
    Ok(())
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Store a stream and its sidecar: `<base>.iq` and `<base>.json`.
pub fn save_stream(
    base: &Path,
    stream: &IqStream,
    class: Option<ModClass>,
    channel: Option<ChannelParams>,
    seed: Option<u64>,
) -> Result<()> {
    write_iq(&base.with_extension("iq"), stream)?;
    write_sidecar(
        &base.with_extension("json"),
        &Sidecar {
            sample_period: stream.sample_period,
            oversampling: stream.oversampling,
            class,
            channel,
            seed,
            normalized: stream.normalized,
            n_samples: stream.samples.len(),
        },
    )
}

/// Load `<base>.iq` + `<base>.json` back into a stream and its metadata.
pub fn load_stream(base: &Path) -> Result<(IqStream, Sidecar)> {
    let sidecar = read_sidecar(&base.with_extension("json"))?;
    let samples = read_iq(&base.with_extension("iq"))?;
    if samples.len() != sidecar.n_samples {
        return Err(Error::Malformed(format!(
            "sample count {} does not match sidecar ({})",
            samples.len(),
            sidecar.n_samples
        )));
    }
    let stream = IqStream {
        samples,
        sample_period: sidecar.sample_period,
        oversampling: sidecar.oversampling,
        normalized: sidecar.normalized,
    };
    Ok((stream, sidecar))
}

/// Write real samples as little-endian f64 (AM audio output).
pub fn write_f64(path: &Path, samples: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}
