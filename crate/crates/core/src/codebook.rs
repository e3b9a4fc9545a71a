//! Spherical stochastic codebooks.
//!
//! Message `i` owns a row of `keysPerRow` codewords, each drawn independently
//! and uniformly from the sphere of radius `√(nP)`. To send `i` the encoder
//! picks one codeword of the row uniformly at random; the key is private to
//! the encoder.
//!
//! Codeword `(i, t)` is a pure function of `(seed, i, t)`, so the table can be
//! held in memory or regenerated on every access with identical results.

use std::io::{Read, Write};
use std::ops::ControlFlow;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dot, ChannelParams, CodeParams, RealVector};
use crate::rng::{stream, wide, SimRng, Tag};

/// Default memory budget for materialized codebooks (1 GiB).
pub const DEFAULT_MEMORY_BUDGET: usize = 1 << 30;

/// Magic bytes of the binary export.
pub const EXPORT_MAGIC: [u8; 4] = *b"AVCB";
pub const EXPORT_VERSION: u32 = 1;
pub const EXPORT_HEADER_LEN: usize = 40;

/// How codewords are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum StorageMode {
    /// The whole table lives in memory.
    Materialized,
    /// Codewords are regenerated from the seed on every access.
    OnDemand,
    /// Rows are regenerated on demand, but the codebook is never scanned:
    /// decoding integrates analytically over the wrong rows, treating them as
    /// fresh draws from the random-code ensemble. This is the only option
    /// when `M · keysPerRow` is far beyond enumeration.
    Ensemble,
}

#[derive(Debug, Clone)]
enum Storage {
    Materialized { words: Vec<f64>, norms: Vec<f64> },
    Generated,
}

/// A spherical stochastic codebook.
#[derive(Debug, Clone)]
pub struct Codebook {
    params: ChannelParams,
    code: CodeParams,
    seed: u64,
    mode: StorageMode,
    storage: Storage,
}

/// The output of the stochastic encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    /// Message index, 1-based.
    pub message: u128,
    /// Key index, 1-based.
    pub key: u64,
    pub codeword: RealVector,
}

/// Draws a vector uniformly from the sphere of the given radius in `R^n`.
///
/// Normalizes a standard Gaussian vector; the (probability-zero) all-zero
/// draw is redrawn.
///
/// # Panics
///
/// Panics if `n == 0` or `radius` is not positive.
pub fn sample_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> RealVector {
    assert!(n >= 1, "sphere dimension must be positive");
    assert!(radius > 0.0 && radius.is_finite(), "sphere radius must be positive");
    let mut v = vec![0.0; n];
    loop {
        for x in v.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 0.0 {
            let c = radius / norm;
            v.iter_mut().for_each(|x| *x *= c);
            return v.into();
        }
    }
}

/// Largest `M · keysPerRow` that is decoded by exhaustive scan when the
/// storage mode is chosen automatically.
pub const ENUMERATION_ENVELOPE: f64 = (1u64 << 20) as f64;

/// Materialized storage inside the enumeration envelope, ensemble outside.
pub fn auto_storage(code: &CodeParams) -> StorageMode {
    if code.total_codewords() <= ENUMERATION_ENVELOPE {
        StorageMode::Materialized
    } else {
        StorageMode::Ensemble
    }
}

/// Builds a codebook with the default memory budget.
pub fn build_codebook(
    seed: u64,
    params: ChannelParams,
    code: CodeParams,
    mode: StorageMode,
) -> Result<Codebook> {
    build_codebook_with_budget(seed, params, code, mode, DEFAULT_MEMORY_BUDGET)
}

/// Builds a codebook; `memory_budget` (bytes) only constrains the
/// materialized mode.
pub fn build_codebook_with_budget(
    seed: u64,
    params: ChannelParams,
    code: CodeParams,
    mode: StorageMode,
    memory_budget: usize,
) -> Result<Codebook> {
    params.validate()?;
    let storage = match mode {
        StorageMode::Materialized => {
            let required = code.total_codewords() * (params.n as f64 + 1.0) * 8.0;
            if required > memory_budget as f64 {
                return Err(Error::Budget {
                    what: "materialized codebook (bytes)",
                    required,
                    budget: memory_budget as f64,
                });
            }
            let rows = code.messages() as usize;
            let keys = code.keys_per_row() as usize;
            let n = params.n;
            let radius = params.codeword_energy().sqrt();
            let mut words = Vec::with_capacity(rows * keys * n);
            let mut norms = Vec::with_capacity(rows * keys);
            for i in 1..=rows as u128 {
                for t in 1..=keys as u64 {
                    let w = sample_sphere(&mut codeword_stream(seed, i, t), n, radius);
                    norms.push(w.norm_sq());
                    words.extend_from_slice(&w);
                }
            }
            Storage::Materialized { words, norms }
        }
        StorageMode::OnDemand | StorageMode::Ensemble => Storage::Generated,
    };
    Ok(Codebook {
        params,
        code,
        seed,
        mode,
        storage,
    })
}

fn codeword_stream(seed: u64, message: u128, key: u64) -> SimRng {
    let [lo, hi] = wide(message);
    stream(seed, Tag::Codeword, &[lo, hi, key])
}

impl Codebook {
    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn code(&self) -> &CodeParams {
        &self.code
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> StorageMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn messages(&self) -> u128 {
        self.code.messages()
    }

    pub fn keys_per_row(&self) -> u64 {
        self.code.keys_per_row()
    }

    pub(crate) fn check_message(&self, i: u128) -> Result<()> {
        if i == 0 || i > self.messages() {
            return Err(Error::Index {
                what: "message",
                index: i,
                bound: self.messages(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_key(&self, t: u64) -> Result<()> {
        if t == 0 || t > self.keys_per_row() {
            return Err(Error::Index {
                what: "key",
                index: t as u128,
                bound: self.keys_per_row() as u128,
            });
        }
        Ok(())
    }

    /// Codeword `x(i, t)` (both indices 1-based).
    pub fn codeword(&self, i: u128, t: u64) -> Result<RealVector> {
        self.check_message(i)?;
        self.check_key(t)?;
        Ok(self.codeword_unchecked(i, t))
    }

    pub(crate) fn codeword_unchecked(&self, i: u128, t: u64) -> RealVector {
        match &self.storage {
            Storage::Materialized { words, .. } => {
                let n = self.n();
                let k = self.flat_index(i, t);
                words[k * n..(k + 1) * n].to_vec().into()
            }
            Storage::Generated => self.generate(i, t),
        }
    }

    fn generate(&self, i: u128, t: u64) -> RealVector {
        sample_sphere(
            &mut codeword_stream(self.seed, i, t),
            self.n(),
            self.params.codeword_energy().sqrt(),
        )
    }

    fn flat_index(&self, i: u128, t: u64) -> usize {
        (i as usize - 1) * self.keys_per_row() as usize + (t as usize - 1)
    }

    /// All codewords of row `i`, in key order.
    pub fn row(&self, i: u128) -> Result<Vec<RealVector>> {
        self.check_message(i)?;
        Ok((1..=self.keys_per_row())
            .map(|t| self.codeword_unchecked(i, t))
            .collect())
    }

    /// Whether every codeword can be visited (false in ensemble mode).
    pub fn is_scannable(&self) -> bool {
        self.mode != StorageMode::Ensemble
    }

    /// Visits every codeword in row-major order, passing `(i, t, x, ‖x‖²)`.
    /// Stops early when the visitor breaks.
    pub fn scan<F>(&self, mut visit: F) -> Result<ControlFlow<()>>
    where
        F: FnMut(u128, u64, &[f64], f64) -> ControlFlow<()>,
    {
        let keys = self.keys_per_row();
        match &self.storage {
            Storage::Materialized { words, norms } => {
                let n = self.n();
                for (k, (w, &norm)) in words.chunks_exact(n).zip(norms).enumerate() {
                    let i = (k as u64 / keys) as u128 + 1;
                    let t = k as u64 % keys + 1;
                    if visit(i, t, w, norm).is_break() {
                        return Ok(ControlFlow::Break(()));
                    }
                }
            }
            Storage::Generated => {
                if self.mode == StorageMode::Ensemble {
                    return Err(Error::Config(
                        "an ensemble-mode codebook cannot be scanned".into(),
                    ));
                }
                for i in 1..=self.messages() {
                    for t in 1..=keys {
                        let w = self.generate(i, t);
                        if visit(i, t, &w, w.norm_sq()).is_break() {
                            return Ok(ControlFlow::Break(()));
                        }
                    }
                }
            }
        }
        Ok(ControlFlow::Continue(()))
    }

    /// The stochastic encoder: picks a key uniformly from row `i`.
    pub fn encode<R: Rng + ?Sized>(&self, i: u128, rng: &mut R) -> Result<Transmission> {
        self.check_message(i)?;
        let key = rng.random_range(1..=self.keys_per_row());
        Ok(Transmission {
            message: i,
            key,
            codeword: self.codeword_unchecked(i, key),
        })
    }

    /// Writes the binary export: a 40-byte little-endian header (magic
    /// `AVCB`, version u32, n u64, M u64, keysPerRow u64, seed u64) followed
    /// by every coordinate as f64, row-major in `(i, t, coordinate)`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        if !self.is_scannable() {
            return Err(Error::Config("an ensemble-mode codebook cannot be exported".into()));
        }
        let messages = u64::try_from(self.messages())
            .map_err(|_| Error::Config("message count does not fit the export header".into()))?;
        out.write_all(&EXPORT_MAGIC)?;
        out.write_all(&EXPORT_VERSION.to_le_bytes())?;
        out.write_all(&(self.n() as u64).to_le_bytes())?;
        out.write_all(&messages.to_le_bytes())?;
        out.write_all(&self.keys_per_row().to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        let mut io_err = None;
        let _ = self.scan(|_, _, w, _| {
            for x in w {
                if let Err(e) = out.write_all(&x.to_le_bytes()) {
                    io_err = Some(e);
                    return ControlFlow::Break(());
                }
            }
            ControlFlow::Continue(())
        })?;
        match io_err {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    }
}

/// Header of a binary codebook export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExportHeader {
    pub version: u32,
    pub n: u64,
    pub messages: u64,
    pub keys_per_row: u64,
    pub seed: u64,
}

/// Reads a binary export back into its header and flat coordinate array.
pub fn read_binary<R: Read>(mut input: R) -> Result<(ExportHeader, Vec<f64>)> {
    let mut header = [0u8; EXPORT_HEADER_LEN];
    input.read_exact(&mut header)?;
    if header[..4] != EXPORT_MAGIC {
        return Err(Error::Config("not an AVCB codebook export".into()));
    }
    let u64_at = |k: usize| u64::from_le_bytes(header[k..k + 8].try_into().unwrap());
    let h = ExportHeader {
        version: u32::from_le_bytes(header[4..8].try_into().unwrap()),
        n: u64_at(8),
        messages: u64_at(16),
        keys_per_row: u64_at(24),
        seed: u64_at(32),
    };
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    let expected = h.n as u128 * h.messages as u128 * h.keys_per_row as u128 * 8;
    if body.len() as u128 != expected {
        return Err(Error::Config(format!(
            "export body has {} bytes, header implies {expected}",
            body.len()
        )));
    }
    let words = body
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok((h, words))
}
