//! On-disk layout of generated datasets.
//!
//! ```text
//! DIR/manifest.txt           key=value geometry, noise and seed record
//! DIR/system.txt             system-matrix metadata
//! DIR/train/phantom_0000.fimg
//! DIR/train/sinogram_0000.csv
//! DIR/test/...
//! ```
//!
//! Sinograms hold the raw noisy line integrals, one CSV line per angle.
//! Loading rebuilds the system matrix from the manifest and row-normalizes
//! both the matrix and every sinogram.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::feasibility::DropOperator;
use crate::ffpn::TrainSample;
use crate::geometry::{
    build_radon_matrix, generate_phantom_with, simulate_measurements_with, NoiseModel,
    PhantomConfig, RowScaling, ScanGeometry,
};
use crate::numerics::io::write_atomic;
use crate::numerics::{read_image, write_image, Image, Prng, Sinogram, SparseMatrix};

pub const MANIFEST_FORMAT: &str = "ffpn-dataset-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    fn id(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Test => 1,
        }
    }
}

/// Everything needed to regenerate a dataset bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub n_train: usize,
    pub n_test: usize,
    pub side: usize,
    pub angles: usize,
    pub beams: usize,
    pub noise: f64,
    pub noise_model: NoiseModel,
    pub seed: u64,
    pub ellipses: (usize, usize),
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            n_train: 200,
            n_test: 50,
            side: 32,
            angles: 15,
            beams: 45,
            noise: 0.015,
            noise_model: NoiseModel::PerRay,
            seed: 0,
            ellipses: PhantomConfig::default().ellipse_count,
        }
    }
}

/// Stream of the phantom (`kind = 0`) or noise (`kind = 1`) generator for
/// sample `index` of `split`.
pub fn sample_stream(split: Split, index: usize, kind: u64) -> u64 {
    (split.id() << 40) | ((index as u64) << 1) | kind
}

impl DatasetSpec {
    pub fn geometry(&self) -> Result<ScanGeometry> {
        ScanGeometry::new(self.angles, self.beams, self.side)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        if self.side < 8 {
            return Err(Error::invalid(format!("image side {} < 8", self.side)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid(format!("noise fraction {} must be >= 0", self.noise)));
        }
        if self.ellipses.0 > self.ellipses.1 {
            return Err(Error::invalid("ellipse count range is inverted"));
        }
        Ok(())
    }

    /// Phantom and raw noisy sinogram of one sample.
    pub fn sample(&self, raw: &SparseMatrix, split: Split, index: usize) -> Result<(Image, Sinogram)> {
        let config = PhantomConfig {
            ellipse_count: self.ellipses,
            ..PhantomConfig::default()
        };
        let mut rng = Prng::derive(self.seed, sample_stream(split, index, 0));
        let phantom = generate_phantom_with(&mut rng, &config, self.side)?;
        let mut rng = Prng::derive(self.seed, sample_stream(split, index, 1));
        let d = simulate_measurements_with(raw, phantom.data(), self.noise, self.noise_model, &mut rng)?;
        Ok((phantom, Sinogram::new(self.angles, self.beams, d)?))
    }

    pub fn to_manifest(&self) -> String {
        let mut out = format!(
            "format={MANIFEST_FORMAT}\nseed={}\nside={}\nangles={}\nbeams={}\nnoise={:?}\nnoise_model={}\nellipses_min={}\nellipses_max={}\nn_train={}\nn_test={}\n",
            self.seed,
            self.side,
            self.angles,
            self.beams,
            self.noise,
            self.noise_model,
            self.ellipses.0,
            self.ellipses.1,
            self.n_train,
            self.n_test
        );
        for split in [Split::Train, Split::Test] {
            let n = if split == Split::Train { self.n_train } else { self.n_test };
            for i in 0..n {
                out.push_str(&format!(
                    "sample={}/{},phantom_stream={},noise_stream={}\n",
                    split.dir_name(),
                    file_stem(i),
                    sample_stream(split, i, 0),
                    sample_stream(split, i, 1)
                ));
            }
        }
        out
    }

    pub fn from_manifest(text: &str) -> Result<Self> {
        let mut spec = DatasetSpec::default();
        let mut format = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("sample=") {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Malformed(format!("manifest line {}: {line:?}", lineno + 1)))?;
            let bad = || Error::Malformed(format!("manifest line {}: bad value for {key}", lineno + 1));
            match key {
                "format" => format = Some(value.to_string()),
                "seed" => spec.seed = value.parse().map_err(|_| bad())?,
                "side" => spec.side = value.parse().map_err(|_| bad())?,
                "angles" => spec.angles = value.parse().map_err(|_| bad())?,
                "beams" => spec.beams = value.parse().map_err(|_| bad())?,
                "noise" => spec.noise = value.parse().map_err(|_| bad())?,
                "noise_model" => spec.noise_model = value.parse()?,
                "ellipses_min" => spec.ellipses.0 = value.parse().map_err(|_| bad())?,
                "ellipses_max" => spec.ellipses.1 = value.parse().map_err(|_| bad())?,
                "n_train" => spec.n_train = value.parse().map_err(|_| bad())?,
                "n_test" => spec.n_test = value.parse().map_err(|_| bad())?,
                other => {
                    return Err(Error::Malformed(format!("unknown manifest key {other:?}")));
                }
            }
        }
        if format.as_deref() != Some(MANIFEST_FORMAT) {
            return Err(Error::Malformed(format!(
                "manifest format {format:?}, expected {MANIFEST_FORMAT}"
            )));
        }
        spec.validate()?;
        Ok(spec)
    }
}

pub fn file_stem(index: usize) -> String {
    format!("{index:04}")
}

pub fn phantom_name(index: usize) -> String {
    format!("phantom_{}.fimg", file_stem(index))
}

pub fn sinogram_name(index: usize) -> String {
    format!("sinogram_{}.csv", file_stem(index))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes the full dataset under `dir`.
pub fn write_dataset(dir: &Path, spec: &DatasetSpec) -> Result<()> {
    spec.validate()?;
    let geom = spec.geometry()?;
    let raw = build_radon_matrix(&geom)?;
    create_dir(dir)?;
    for split in [Split::Train, Split::Test] {
        let sub = dir.join(split.dir_name());
        create_dir(&sub)?;
        let n = if split == Split::Train { spec.n_train } else { spec.n_test };
        for i in 0..n {
            let (phantom, sino) = spec.sample(&raw, split, i)?;
            write_image(sub.join(phantom_name(i)), &phantom)?;
            write_atomic(sub.join(sinogram_name(i)), sino.to_csv().as_bytes())?;
        }
    }
    let kept = RowScaling::for_matrix(&raw).n_kept();
    let system = format!(
        "rows={}\ncols={}\nnnz={}\nnonzero_rows={kept}\ndetector_span={:?}\nangle_step=pi/{}\nrow_order=angle-major\n",
        raw.rows(),
        raw.cols(),
        raw.nnz(),
        geom.detector_span,
        geom.n_angles
    );
    write_atomic(dir.join("system.txt"), system.as_bytes())?;
    write_atomic(dir.join("manifest.txt"), spec.to_manifest().as_bytes())
}

/// A loaded split: row-normalized measurements with their phantoms.
#[derive(Debug, Clone)]
pub struct LoadedSplit {
    pub names: Vec<String>,
    pub samples: Vec<TrainSample>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub spec: DatasetSpec,
    /// Row-normalized system matrix.
    pub matrix: SparseMatrix,
    pub scaling: RowScaling,
}

impl Dataset {
    pub fn open(dir: &Path) -> Result<Self> {
        let manifest = dir.join("manifest.txt");
        let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
        let spec = DatasetSpec::from_manifest(&text)?;
        Dataset::from_spec(dir, spec)
    }

    pub fn from_spec(dir: &Path, spec: DatasetSpec) -> Result<Self> {
        let raw = build_radon_matrix(&spec.geometry()?)?;
        let scaling = RowScaling::for_matrix(&raw);
        let matrix = scaling.apply_matrix(&raw)?;
        Ok(Dataset {
            root: dir.to_path_buf(),
            spec,
            matrix,
            scaling,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.spec.side, self.spec.side)
    }

    pub fn drop_operator(&self, relaxation: f64) -> Result<DropOperator> {
        DropOperator::new(self.matrix.clone(), relaxation)
    }

    pub fn len(&self, split: Split) -> usize {
        match split {
            Split::Train => self.spec.n_train,
            Split::Test => self.spec.n_test,
        }
    }

    pub fn load(&self, split: Split) -> Result<LoadedSplit> {
        let sub = self.root.join(split.dir_name());
        let n = self.len(split);
        let mut names = Vec::with_capacity(n);
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let phantom = read_image(sub.join(phantom_name(i)))?;
            if phantom.shape() != self.shape() {
                return Err(Error::Malformed(format!(
                    "{} has shape {:?}, manifest says {:?}",
                    phantom_name(i),
                    phantom.shape(),
                    self.shape()
                )));
            }
            let path = sub.join(sinogram_name(i));
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let sino = Sinogram::from_csv(&text)?;
            if (sino.n_angles(), sino.n_beams()) != (self.spec.angles, self.spec.beams) {
                return Err(Error::Malformed(format!(
                    "{} is {}x{}, expected {}x{}",
                    sinogram_name(i),
                    sino.n_angles(),
                    sino.n_beams(),
                    self.spec.angles,
                    self.spec.beams
                )));
            }
            names.push(phantom_name(i));
            samples.push(TrainSample {
                data: self.scaling.apply_data(sino.data())?,
                truth: phantom.into_data(),
            });
        }
        Ok(LoadedSplit { names, samples })
    }
}
