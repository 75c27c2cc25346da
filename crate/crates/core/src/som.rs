//! Self-organizing map: lattice geometry, BMU search, kernel-weighted
//! neighborhood updates, epoch-based training.
//!
//! NOTE on the gaussian kernel sign: the neighborhood function is sometimes
//! quoted with a *positive* exponent, `e^(d²/2σ²)`, which grows without
//! bound and contradicts the neighborhood semantics. This implementation
//! uses the conventional negated form `exp(−d²/(2σ²))`.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Kernel weights below this are treated as zero: the unit is left out of
/// the update. Part of the update contract, not just an optimization.
pub const KERNEL_SKIP_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SomError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("data set is empty")]
    EmptyData,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    CodebookFormat {
        path: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    Rectangular,
    Hexagonal,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyKind::Rectangular => write!(f, "rectangular"),
            TopologyKind::Hexagonal => write!(f, "hexagonal"),
        }
    }
}

impl FromStr for TopologyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rectangular" => Ok(TopologyKind::Rectangular),
            "hexagonal" => Ok(TopologyKind::Hexagonal),
            other => Err(format!("unknown topology {other:?}")),
        }
    }
}

/// A `width × height` lattice of units, indexed row-major: unit `i` sits at
/// column `i % width`, row `i / width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SomTopology {
    pub kind: TopologyKind,
    pub width: usize,
    pub height: usize,
}

impl SomTopology {
    pub fn new(kind: TopologyKind, width: usize, height: usize) -> Result<Self, SomError> {
        if width == 0 || height == 0 {
            return Err(SomError::InvalidTopology(format!(
                "width and height must be >= 1, got {width}x{height}"
            )));
        }
        Ok(SomTopology {
            kind,
            width,
            height,
        })
    }

    pub fn unit_count(&self) -> usize {
        self.width * self.height
    }

    pub fn col_row(&self, index: usize) -> (usize, usize) {
        assert!(index < self.unit_count(), "unit index out of range");
        (index % self.width, index / self.width)
    }

    /// Planar position of a unit. Rectangular: `(col, row)`. Hexagonal:
    /// odd rows shift +0.5 in x and rows are √3/2 apart, so each interior
    /// unit has six neighbors at distance exactly 1.
    pub fn position(&self, index: usize) -> (f64, f64) {
        let (col, row) = self.col_row(index);
        match self.kind {
            TopologyKind::Rectangular => (col as f64, row as f64),
            TopologyKind::Hexagonal => {
                let offset = if row % 2 == 1 { 0.5 } else { 0.0 };
                (col as f64 + offset, row as f64 * 3f64.sqrt() / 2.0)
            }
        }
    }

    /// Euclidean distance between two units in the embedded plane.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (xi, yi) = self.position(i);
        let (xj, yj) = self.position(j);
        ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Gaussian,
    CutGaussian,
}

impl Kernel {
    pub fn evaluate(&self, d: f64, sigma: f64) -> f64 {
        match self {
            Kernel::Gaussian => kernel_gaussian(d, sigma),
            Kernel::CutGaussian => kernel_cutgaussian(d, sigma),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Gaussian => write!(f, "gaussian"),
            Kernel::CutGaussian => write!(f, "cutgaussian"),
        }
    }
}

impl FromStr for Kernel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gaussian" => Ok(Kernel::Gaussian),
            "cutgaussian" => Ok(Kernel::CutGaussian),
            other => Err(format!("unknown kernel {other:?}")),
        }
    }
}

/// `exp(−d²/(2σ²))`: 1 at the winner, strictly decreasing with lattice
/// distance (see the module note on the exponent sign).
pub fn kernel_gaussian(d: f64, sigma: f64) -> f64 {
    assert!(sigma > 0.0, "kernel sigma must be > 0");
    (-(d * d) / (2.0 * sigma * sigma)).exp()
}

/// Gaussian truncated to the closed ball `d ≤ σ`: the indicator
/// `1(σ − d)` is taken as 1 at `d = σ` so the exact-radius ring is kept.
pub fn kernel_cutgaussian(d: f64, sigma: f64) -> f64 {
    assert!(sigma > 0.0, "kernel sigma must be > 0");
    if d <= sigma {
        kernel_gaussian(d, sigma)
    } else {
        0.0
    }
}

/// SOM training schedule. `alpha` (learning rate) and `sigma`
/// (neighborhood radius) decay linearly from their initial to their final
/// value across all `epochs × |data|` update steps.
#[derive(Debug, Clone)]
pub struct SomTrainConfig {
    pub kernel: Kernel,
    pub epochs: usize,
    pub alpha0: f64,
    pub alpha_final: f64,
    pub sigma0: f64,
    pub sigma_final: f64,
    pub seed: u64,
}

impl SomTrainConfig {
    /// Conventional defaults for a given lattice: `alpha` 0.5 → 0.01,
    /// `sigma` max(width,height)/2 → 0.3, 300 epochs, gaussian kernel.
    /// The small final radius matters: it ends training in a near-pure
    /// vector-quantization phase, which is what brings the quantization
    /// error below the sampled initialization's. A final radius around 1
    /// keeps smoothing the map forever and QE typically ends up *worse*
    /// than the init.
    pub fn for_topology(topology: &SomTopology) -> Self {
        SomTrainConfig {
            kernel: Kernel::Gaussian,
            epochs: 300,
            alpha0: 0.5,
            alpha_final: 0.01,
            sigma0: topology.width.max(topology.height) as f64 / 2.0,
            sigma_final: 0.3,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), SomError> {
        let bad = |msg: String| Err(SomError::InvalidConfig(msg));
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return bad(format!("alpha0 must lie in (0,1], got {}", self.alpha0));
        }
        if self.alpha_final < 0.0 || self.alpha_final > self.alpha0 {
            return bad(format!(
                "alpha_final must lie in [0, alpha0], got {}",
                self.alpha_final
            ));
        }
        if self.sigma0 <= 0.0 || self.sigma_final <= 0.0 {
            return bad(format!(
                "sigma values must be > 0, got {} and {}",
                self.sigma0, self.sigma_final
            ));
        }
        if self.sigma_final > self.sigma0 {
            return bad(format!(
                "sigma_final must not exceed sigma0, got {} > {}",
                self.sigma_final, self.sigma0
            ));
        }
        Ok(())
    }
}

/// Quantization error after each completed epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct SomTrainRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    pub quantization_error: f64,
}

/// A lattice of units, each holding an n-dimensional reference vector.
/// The codebook is stored flat, row-major by unit index.
#[derive(Debug, Clone, PartialEq)]
pub struct SomMap {
    topology: SomTopology,
    dim: usize,
    codebook: Vec<f64>,
}

impl SomMap {
    /// Initializes every unit with a copy of a uniformly sampled (with
    /// replacement) data vector. Deterministic per seed.
    pub fn init(topology: SomTopology, data: &[Vec<f64>], seed: u64) -> Result<SomMap, SomError> {
        let dim = check_data(data)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut codebook = Vec::with_capacity(topology.unit_count() * dim);
        for _ in 0..topology.unit_count() {
            let pick = rng.random_range(0..data.len());
            codebook.extend_from_slice(&data[pick]);
        }
        Ok(SomMap {
            topology,
            dim,
            codebook,
        })
    }

    /// Rebuilds a map from raw parts (used by codebook files).
    pub fn from_codebook(
        topology: SomTopology,
        dim: usize,
        codebook: Vec<f64>,
    ) -> Result<SomMap, SomError> {
        if dim == 0 {
            return Err(SomError::InvalidTopology("dimension must be >= 1".into()));
        }
        if codebook.len() != topology.unit_count() * dim {
            return Err(SomError::DimensionMismatch {
                expected: topology.unit_count() * dim,
                found: codebook.len(),
            });
        }
        if codebook.iter().any(|v| !v.is_finite()) {
            return Err(SomError::InvalidConfig(
                "codebook contains non-finite values".into(),
            ));
        }
        Ok(SomMap {
            topology,
            dim,
            codebook,
        })
    }

    pub fn topology(&self) -> &SomTopology {
        &self.topology
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn unit_vector(&self, index: usize) -> &[f64] {
        assert!(index < self.topology.unit_count(), "unit index out of range");
        &self.codebook[index * self.dim..(index + 1) * self.dim]
    }

    /// All reference vectors, cloned unit by unit.
    pub fn codebook_vectors(&self) -> Vec<Vec<f64>> {
        (0..self.topology.unit_count())
            .map(|i| self.unit_vector(i).to_vec())
            .collect()
    }

    /// The unit whose reference vector is nearest to `x` (Euclidean); ties
    /// break toward the lowest unit index.
    pub fn find_bmu(&self, x: &[f64]) -> usize {
        assert_eq!(x.len(), self.dim, "input dimension mismatch");
        let mut best = 0;
        let mut best_sq = f64::INFINITY;
        for i in 0..self.topology.unit_count() {
            let sq = squared_distance(self.unit_vector(i), x);
            if sq < best_sq {
                best = i;
                best_sq = sq;
            }
        }
        best
    }

    /// One SOM update: finds the BMU `c` of `x` and moves every unit `i`
    /// with kernel weight `h_ci ≥ 1e−12` along `m_i += α·h_ci·(x − m_i)`.
    /// Returns the updated map, leaving `self` untouched.
    pub fn update_step(&self, x: &[f64], alpha: f64, sigma: f64, kernel: Kernel) -> SomMap {
        assert!((0.0..=1.0).contains(&alpha), "alpha must lie in [0,1]");
        let mut next = self.clone();
        let positions: Vec<(f64, f64)> = (0..self.topology.unit_count())
            .map(|i| self.topology.position(i))
            .collect();
        next.update_in_place(x, alpha, sigma, kernel, &positions);
        next
    }

    fn update_in_place(
        &mut self,
        x: &[f64],
        alpha: f64,
        sigma: f64,
        kernel: Kernel,
        positions: &[(f64, f64)],
    ) {
        let c = self.find_bmu(x);
        let (cx, cy) = positions[c];
        for (i, &(ix, iy)) in positions.iter().enumerate() {
            let d = ((ix - cx).powi(2) + (iy - cy).powi(2)).sqrt();
            let h = kernel.evaluate(d, sigma);
            if h < KERNEL_SKIP_THRESHOLD {
                continue;
            }
            let pull = alpha * h;
            let unit = &mut self.codebook[i * self.dim..(i + 1) * self.dim];
            for (m, xv) in unit.iter_mut().zip(x) {
                *m += pull * (xv - *m);
            }
        }
    }

    /// Mean distance from each data vector to its BMU's reference vector.
    pub fn quantization_error(&self, data: &[Vec<f64>]) -> f64 {
        assert!(!data.is_empty(), "quantization_error on empty data");
        let sum: f64 = data
            .iter()
            .map(|x| squared_distance(self.unit_vector(self.find_bmu(x)), x).sqrt())
            .sum();
        sum / data.len() as f64
    }

    /// Trains for `cfg.epochs` epochs. One epoch performs `|data|` update
    /// steps, each on a vector drawn uniformly at random with replacement;
    /// `alpha` and `sigma` decay linearly over all steps. Records the
    /// quantization error after every epoch. Returns the trained map.
    pub fn train(
        &self,
        data: &[Vec<f64>],
        cfg: &SomTrainConfig,
    ) -> Result<(SomMap, Vec<SomTrainRecord>), SomError> {
        let dim = check_data(data)?;
        if dim != self.dim {
            return Err(SomError::DimensionMismatch {
                expected: self.dim,
                found: dim,
            });
        }
        cfg.validate()?;

        let mut map = self.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let positions: Vec<(f64, f64)> = (0..self.topology.unit_count())
            .map(|i| self.topology.position(i))
            .collect();
        let total_steps = cfg.epochs * data.len();
        let mut t: usize = 0;
        let mut records = Vec::with_capacity(cfg.epochs);

        for epoch in 1..=cfg.epochs {
            for _ in 0..data.len() {
                let frac = if total_steps > 1 {
                    t as f64 / (total_steps - 1) as f64
                } else {
                    0.0
                };
                let alpha = cfg.alpha0 + (cfg.alpha_final - cfg.alpha0) * frac;
                let sigma = cfg.sigma0 + (cfg.sigma_final - cfg.sigma0) * frac;
                let x = &data[rng.random_range(0..data.len())];
                map.update_in_place(x, alpha, sigma, cfg.kernel, &positions);
                t += 1;
            }
            records.push(SomTrainRecord {
                epoch,
                quantization_error: map.quantization_error(data),
            });
        }
        Ok((map, records))
    }

    /// Writes the codebook: header `width height dim topology kernel`,
    /// then one reference vector per line in unit order, 17 significant
    /// digits. The kernel records how the map was trained.
    pub fn save(&self, path: impl AsRef<Path>, kernel: Kernel) -> Result<(), SomError> {
        let path = path.as_ref();
        let wrap = |source| SomError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = File::create(path).map_err(wrap)?;
        let mut w = BufWriter::new(file);
        (|| {
            writeln!(
                w,
                "{} {} {} {} {}",
                self.topology.width, self.topology.height, self.dim, self.topology.kind, kernel
            )?;
            for i in 0..self.topology.unit_count() {
                let line = self
                    .unit_vector(i)
                    .iter()
                    .map(|v| format!("{v:.16e}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                writeln!(w, "{line}")?;
            }
            w.flush()
        })()
        .map_err(wrap)
    }

    /// Reads a codebook written by [`save`](Self::save).
    pub fn load(path: impl AsRef<Path>) -> Result<(SomMap, Kernel), SomError> {
        let path = path.as_ref();
        let path_str = path.display().to_string();
        let file = File::open(path).map_err(|source| SomError::Io {
            path: path_str.clone(),
            source,
        })?;
        let fail = |line: usize, message: String| SomError::CodebookFormat {
            path: path_str.clone(),
            line,
            message,
        };

        let mut lines = BufReader::new(file).lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((i, Ok(line))) => {
                    if !line.trim().is_empty() {
                        break (i + 1, line);
                    }
                }
                Some((_, Err(source))) => {
                    return Err(SomError::Io {
                        path: path_str.clone(),
                        source,
                    })
                }
                None => return Err(fail(1, "empty codebook file".into())),
            }
        };

        let (hline, header) = header;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.len() != 5 {
            return Err(fail(
                hline,
                format!("header needs 5 fields (width height dim topology kernel), found {}", tokens.len()),
            ));
        }
        let parse_count = |t: &str, what: &str| {
            t.parse::<usize>()
                .map_err(|_| fail(hline, format!("bad {what} {t:?}")))
        };
        let width = parse_count(tokens[0], "width")?;
        let height = parse_count(tokens[1], "height")?;
        let dim = parse_count(tokens[2], "dim")?;
        let kind = TopologyKind::from_str(tokens[3]).map_err(|m| fail(hline, m))?;
        let kernel = Kernel::from_str(tokens[4]).map_err(|m| fail(hline, m))?;
        let topology =
            SomTopology::new(kind, width, height).map_err(|e| fail(hline, e.to_string()))?;

        let mut codebook = Vec::with_capacity(topology.unit_count() * dim);
        let mut seen = 0usize;
        for (i, line) in lines {
            let line = line.map_err(|source| SomError::Io {
                path: path_str.clone(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| fail(i + 1, format!("bad number {t:?}")))
                })
                .collect::<Result<_, _>>()?;
            if values.len() != dim {
                return Err(fail(
                    i + 1,
                    format!("expected {dim} components, found {}", values.len()),
                ));
            }
            codebook.extend_from_slice(&values);
            seen += 1;
        }
        if seen != topology.unit_count() {
            return Err(fail(
                hline,
                format!(
                    "expected {} codebook vectors, found {seen}",
                    topology.unit_count()
                ),
            ));
        }
        let map = SomMap::from_codebook(topology, dim, codebook)
            .map_err(|e| fail(hline, e.to_string()))?;
        Ok((map, kernel))
    }
}

fn check_data(data: &[Vec<f64>]) -> Result<usize, SomError> {
    if data.is_empty() {
        return Err(SomError::EmptyData);
    }
    let dim = data[0].len();
    if dim == 0 {
        return Err(SomError::InvalidConfig("data vectors are empty".into()));
    }
    for v in data {
        if v.len() != dim {
            return Err(SomError::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    Ok(dim)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Writes a quantization-error curve as CSV with header `epoch,qe`.
pub fn write_qe_curve_csv<W: Write>(w: &mut W, records: &[SomTrainRecord]) -> io::Result<()> {
    writeln!(w, "epoch,qe")?;
    for r in records {
        writeln!(w, "{},{}", r.epoch, r.quantization_error)?;
    }
    Ok(())
}
