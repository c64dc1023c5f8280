//! JSON file formats.
//!
//! A state file is
//! `{"format":"qstate-v1","kind":"density"|"pure","labels":[..],"dims":[..],"data":[[re,im],..]}`
//! with density data row-major and pure data in amplitude order. A marginal
//! additionally carries `"region":[..]`, the global sites it lives on, and a
//! bundle is `{"format":"qstate-bundle-v1","rdms":[..]}`.
//!
//! Floats are written with 17 significant digits so that every value reads
//! back bit-identically.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::bundle::RdmBundle;
use crate::error::{Error, Result};
use crate::state::{project_to_density, DensityMatrix, Region, Site, StateVector, SystemLayout, Tolerances};

pub const STATE_FORMAT: &str = "qstate-v1";
pub const BUNDLE_FORMAT: &str = "qstate-bundle-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Density,
    Pure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub format: String,
    pub kind: StateKind,
    pub labels: Vec<String>,
    pub dims: Vec<usize>,
    pub data: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleFile {
    pub format: String,
    pub rdms: Vec<StateFile>,
}

/// How strictly input states are checked.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReadOptions {
    pub tolerances: Tolerances,
    /// Route invalid inputs through the nearest-density-matrix projection instead of rejecting them.
    pub repair: bool,
}

fn complex(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn pair(z: &Complex64) -> [f64; 2] {
    [z.re, z.im]
}

impl StateFile {
    fn layout(&self) -> Result<SystemLayout> {
        if self.format != STATE_FORMAT {
            return Err(Error::Parse(format!("expected format \"{STATE_FORMAT}\", found \"{}\"", self.format)));
        }
        if self.labels.len() != self.dims.len() {
            return Err(Error::Parse(format!("{} labels for {} dims", self.labels.len(), self.dims.len())));
        }
        let sites = self.labels.iter().zip(&self.dims).map(|(l, &d)| Site { label: l.clone(), dim: d }).collect();
        SystemLayout::new(sites)
    }

    pub fn to_density(&self, opts: &ReadOptions) -> Result<DensityMatrix> {
        let layout = self.layout()?;
        let d = layout.total_dim();
        let m = match self.kind {
            StateKind::Density => {
                if self.data.len() != d * d {
                    return Err(Error::Parse(format!(
                        "density data has {} entries, expected {}",
                        self.data.len(),
                        d * d
                    )));
                }
                DMatrix::from_row_iterator(d, d, self.data.iter().map(|&v| complex(v)))
            }
            StateKind::Pure => {
                if self.data.len() != d {
                    return Err(Error::Parse(format!("pure data has {} amplitudes, expected {d}", self.data.len())));
                }
                let amps = nalgebra::DVector::from_iterator(d, self.data.iter().map(|&v| complex(v)));
                if !opts.repair {
                    StateVector::new(layout.clone(), amps.clone())?;
                }
                &amps * amps.adjoint()
            }
        };
        let state = if opts.repair {
            project_to_density(layout, &m)?
        } else {
            DensityMatrix::with_tolerances(layout, m, &opts.tolerances)?
        };
        match &self.region {
            Some(r) => state.on_region(r.clone()),
            None => Ok(state),
        }
    }

    pub fn from_density(state: &DensityMatrix, with_region: bool) -> Self {
        StateFile {
            format: STATE_FORMAT.into(),
            kind: StateKind::Density,
            labels: state.layout().labels(),
            dims: state.dims(),
            // nalgebra is column-major; transpose to emit rows.
            data: state.matrix().transpose().iter().map(pair).collect(),
            region: with_region.then(|| state.region().clone()),
        }
    }

    pub fn from_vector(v: &StateVector) -> Self {
        StateFile {
            format: STATE_FORMAT.into(),
            kind: StateKind::Pure,
            labels: v.layout().labels(),
            dims: v.layout().dims(),
            data: v.amplitudes().iter().map(pair).collect(),
            region: None,
        }
    }
}

fn is_default_region(state: &DensityMatrix) -> bool {
    state.region() == &Region::full(state.region().len())
}

pub fn parse_state(text: &str, opts: &ReadOptions) -> Result<DensityMatrix> {
    serde_json::from_str::<StateFile>(text)?.to_density(opts)
}

pub fn parse_bundle(text: &str, opts: &ReadOptions) -> Result<RdmBundle> {
    let file: BundleFile = serde_json::from_str(text)?;
    if file.format != BUNDLE_FORMAT {
        return Err(Error::Parse(format!("expected format \"{BUNDLE_FORMAT}\", found \"{}\"", file.format)));
    }
    let rdms = file
        .rdms
        .iter()
        .enumerate()
        .map(|(i, f)| {
            if f.region.is_none() {
                return Err(Error::Parse(format!("marginal {i} has no region")));
            }
            f.to_density(opts).map_err(|e| e.context(format!("marginal {i}")))
        })
        .collect::<Result<_>>()?;
    Ok(RdmBundle::new(rdms))
}

pub fn state_to_json(state: &DensityMatrix) -> Result<String> {
    to_string_precise(&StateFile::from_density(state, !is_default_region(state)))
}

pub fn vector_to_json(v: &StateVector) -> Result<String> {
    to_string_precise(&StateFile::from_vector(v))
}

pub fn bundle_to_json(bundle: &RdmBundle) -> Result<String> {
    let file = BundleFile {
        format: BUNDLE_FORMAT.into(),
        rdms: bundle.rdms().iter().map(|r| StateFile::from_density(r, true)).collect(),
    };
    to_string_precise(&file)
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn read_state(path: &Path, opts: &ReadOptions) -> Result<DensityMatrix> {
    parse_state(&read_text(path)?, opts).map_err(|e| e.context(path.display()))
}

pub fn read_bundle(path: &Path, opts: &ReadOptions) -> Result<RdmBundle> {
    parse_bundle(&read_text(path)?, opts).map_err(|e| e.context(path.display()))
}

/// Pretty JSON formatter that writes every float with 17 significant digits.
pub struct PreciseFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Default for PreciseFormatter<'_> {
    fn default() -> Self {
        PreciseFormatter { inner: PrettyFormatter::with_indent(b"  ") }
    }
}

/// `value` with 17 significant digits, in plain notation for moderate exponents.
pub fn format_f64(value: f64) -> String {
    if value == 0.0 {
        return if value.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let exp = value.abs().log10().floor() as i32;
    if (-5..16).contains(&exp) {
        let decimals = (16 - exp).max(1) as usize;
        format!("{value:.decimals$}")
    } else {
        format!("{value:.16e}")
    }
}

impl Formatter for PreciseFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn end_object_key<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.end_object_key(writer)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Serializes `value` as pretty JSON with 17-significant-digit floats.
pub fn to_string_precise<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PreciseFormatter::default());
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}
