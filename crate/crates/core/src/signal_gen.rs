//! Synthetic array snapshots for a half-wavelength uniform linear array.
//!
//! Every random draw goes through an [`RngStream`], a ChaCha stream keyed by
//! `(seed, stream_id)`. Monte Carlo trials use distinct stream ids, so the
//! order in which trials run never changes what they see.

use std::f64::consts::PI;
use std::io::{self, Read, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1, StandardNormal};

use crate::model::{Distribution, NoiseProfile, ScenarioConfig, SourceSpec};

/// Array response of a half-wavelength ULA: `a_k = exp(iπ k sin θ)`,
/// `k = 0…p-1`.
pub fn steering_vector(doa_deg: f64, p: usize) -> DVector<Complex64> {
    let phase = PI * doa_deg.to_radians().sin();
    DVector::from_iterator(p, (0..p).map(|k| Complex64::from_polar(1.0, phase * k as f64)))
}

/// `p × q` steering matrix, one column per source.
pub fn steering_matrix(sources: &[SourceSpec], p: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(p, sources.len());
    for (j, s) in sources.iter().enumerate() {
        a.set_column(j, &steering_vector(s.doa_deg, p));
    }
    a
}

/// Seed plus stream index of a reproducible random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Stream for trial `trial` of sweep point `point`.
    pub fn for_trial(seed: u64, point: u32, trial: u32) -> Self {
        Self::new(seed, (u64::from(point) << 32) | u64::from(trial))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Snapshots `x(t)` stored column-wise, `p × N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBlock {
    pub data: DMatrix<Complex64>,
}

impl SnapshotBlock {
    pub fn n_snapshots(&self) -> usize {
        self.data.ncols()
    }

    pub fn n_sensors(&self) -> usize {
        self.data.nrows()
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, power: f64) -> Complex64 {
    let scale = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

fn laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    let magnitude: f64 = Exp1.sample(rng);
    if rng.random::<bool>() {
        scale * magnitude
    } else {
        -scale * magnitude
    }
}

/// `q × N` source samples. Laplacian sources have independent Laplace real
/// and imaginary parts with scale `α = sqrt(power)/2`, so `E|s|² = 4α² = power`.
pub fn sample_sources<R: Rng + ?Sized>(cfg: &ScenarioConfig, n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let q = cfg.num_sources();
    let mut s = DMatrix::zeros(q, n);
    for t in 0..n {
        for (k, src) in cfg.sources.iter().enumerate() {
            s[(k, t)] = match cfg.distribution {
                Distribution::Gaussian => complex_normal(rng, src.power),
                Distribution::Laplacian => {
                    let alpha = src.power.sqrt() / 2.0;
                    Complex64::new(laplace(rng, alpha), laplace(rng, alpha))
                }
            };
        }
    }
    s
}

/// `p × N` circular complex Gaussian noise, row `i` with power `σ² + w_i`.
pub fn sample_noise<R: Rng + ?Sized>(noise: &NoiseProfile, n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let powers = noise.sensor_powers();
    let p = powers.len();
    let mut out = DMatrix::zeros(p, n);
    for t in 0..n {
        for (i, &power) in powers.iter().enumerate() {
            out[(i, t)] = complex_normal(rng, power);
        }
    }
    out
}

/// `x = A s + n` for given source and noise samples.
pub fn assemble_snapshots(cfg: &ScenarioConfig, sources: &DMatrix<Complex64>, noise: &DMatrix<Complex64>) -> SnapshotBlock {
    let data = if cfg.sources.is_empty() {
        noise.clone()
    } else {
        steering_matrix(&cfg.sources, cfg.p) * sources + noise
    };
    SnapshotBlock { data }
}

/// Draws `N` snapshots of `cfg` from `stream`: sources first, then noise.
pub fn generate_snapshots(cfg: &ScenarioConfig, n: usize, stream: RngStream) -> SnapshotBlock {
    let mut rng = stream.rng();
    let s = sample_sources(cfg, n, &mut rng);
    let noise = sample_noise(&cfg.noise, n, &mut rng);
    assemble_snapshots(cfg, &s, &noise)
}

const DUMP_MAGIC: [u8; 4] = *b"SNPB";

/// Writes a snapshot block as a 16-byte header (magic `SNPB`, `p` as u32 LE,
/// `N` as u64 LE) followed by row-major `p × N` interleaved `(re, im)`
/// little-endian f64 pairs.
pub fn write_snapshots<W: Write>(block: &SnapshotBlock, mut out: W) -> io::Result<()> {
    let p = u32::try_from(block.n_sensors()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "too many sensors"))?;
    out.write_all(&DUMP_MAGIC)?;
    out.write_all(&p.to_le_bytes())?;
    out.write_all(&(block.n_snapshots() as u64).to_le_bytes())?;
    for i in 0..block.n_sensors() {
        for t in 0..block.n_snapshots() {
            let z = block.data[(i, t)];
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    out.flush()
}

pub fn read_snapshots<R: Read>(mut input: R) -> io::Result<SnapshotBlock> {
    let invalid = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    if header[..4] != DUMP_MAGIC {
        return Err(invalid("bad snapshot file magic"));
    }
    let p = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    if p == 0 || n == 0 {
        return Err(invalid("snapshot file declares an empty block"));
    }
    let mut payload = Vec::new();
    input.read_to_end(&mut payload)?;
    if payload.len() != p * n * 16 {
        return Err(invalid("snapshot payload size does not match header"));
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut data = DMatrix::zeros(p, n);
    for i in 0..p {
        for t in 0..n {
            let re = values.next().unwrap();
            let im = values.next().unwrap();
            data[(i, t)] = Complex64::new(re, im);
        }
    }
    Ok(SnapshotBlock { data })
}
