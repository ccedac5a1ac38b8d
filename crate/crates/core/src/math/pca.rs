//! Principal component analysis for wide feature matrices.
//!
//! When the feature dimension exceeds the sample count the components are
//! obtained from the N×N Gram matrix of the centered samples and mapped back
//! to feature space (`u = Xcᵀ v / s`). Otherwise the D×D scatter matrix is
//! decomposed directly. Both paths accumulate in f64 over fixed-size column
//! blocks, so results do not depend on how the work is scheduled.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::eigen::symmetric_eigen;
use super::matrix::{dot, DenseMatrix};
use super::MathError;
use crate::io::{atomic_write, ByteReader, ByteWriter, FormatError};

pub const MFPC_MAGIC: &[u8; 4] = b"MFPC";
pub const MFPC_VERSION: u32 = 1;

/// Column block width for Gram / projection accumulation.
const BLOCK: usize = 2048;

/// Eigenvalues below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f32>,
    /// K×D, rows orthonormal.
    pub components: DenseMatrix,
    /// Singular values of the centered sample matrix, non-increasing.
    pub singular_values: Vec<f32>,
    pub explained_variance_ratio: Vec<f32>,
}

/// Which decomposition route [`pca_fit`] took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcaRoute {
    Gram,
    Covariance,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn num_components(&self) -> usize {
        self.components.rows()
    }

    pub fn total_evr(&self) -> f64 {
        self.explained_variance_ratio
            .iter()
            .map(|&v| f64::from(v))
            .sum()
    }

    /// Maps a K-vector of scores back to feature space.
    pub fn reconstruct(&self, scores: &[f32]) -> Result<Vec<f32>, MathError> {
        if scores.len() != self.num_components() {
            return Err(MathError::Shape(format!(
                "{} scores for {} components",
                scores.len(),
                self.num_components()
            )));
        }
        let mut out: Vec<f64> = self.mean.iter().map(|&v| f64::from(v)).collect();
        for (row, &s) in self.components.row_iter().zip(scores) {
            for (o, &c) in out.iter_mut().zip(row) {
                *o += f64::from(s) * f64::from(c);
            }
        }
        Ok(out.into_iter().map(|v| v as f32).collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.input_dim();
        let k = self.num_components();
        let mut w = ByteWriter::with_capacity(24 + 4 * (d + k * d + 2 * k));
        w.bytes(MFPC_MAGIC);
        w.u32(MFPC_VERSION);
        w.u64(d as u64);
        w.u64(k as u64);
        w.f32s(&self.mean);
        w.f32s(self.components.as_slice());
        w.f32s(&self.singular_values);
        w.f32s(&self.explained_variance_ratio);
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = ByteReader::new(bytes);
        r.magic(MFPC_MAGIC)?;
        let version = r.u32()?;
        if version != MFPC_VERSION {
            return Err(FormatError::Version(version));
        }
        let d = r.len_u64(4)?;
        let k = r.len_u64(4)?;
        let kd = k
            .checked_mul(d)
            .ok_or_else(|| FormatError::Invalid("K*D overflow".into()))?;
        let mean = r.f32s(d)?;
        let comps = r.f32s(kd)?;
        let singular_values = r.f32s(k)?;
        let explained_variance_ratio = r.f32s(k)?;
        r.finish()?;
        let components =
            DenseMatrix::from_vec(k, d, comps).map_err(|e| FormatError::Invalid(e.to_string()))?;
        if mean
            .iter()
            .chain(&singular_values)
            .chain(&explained_variance_ratio)
            .any(|v| !v.is_finite())
        {
            return Err(FormatError::Invalid("non-finite value".into()));
        }
        Ok(Self {
            mean,
            components,
            singular_values,
            explained_variance_ratio,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        Ok(atomic_write(path, &self.to_bytes())?)
    }

    pub fn read(path: &Path) -> Result<Self, FormatError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// Fits `k` principal components to the rows of `samples`.
pub fn pca_fit(samples: &DenseMatrix, k: usize) -> Result<PcaModel, MathError> {
    pca_fit_with_route(samples, k).map(|(m, _)| m)
}

pub fn pca_fit_with_route(
    samples: &DenseMatrix,
    k: usize,
) -> Result<(PcaModel, PcaRoute), MathError> {
    let (n, d) = samples.shape();
    if n < 2 {
        return Err(MathError::InvalidArgument(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    if k == 0 || k > (n - 1).min(d) {
        return Err(MathError::InvalidArgument(format!(
            "k = {k} outside 1..={} for {n} samples of dimension {d}",
            (n - 1).min(d)
        )));
    }
    if !samples.is_finite() {
        return Err(MathError::NonFinite("samples".into()));
    }

    let mean = column_mean(samples);
    let (route, eigvals, components) = if d > n {
        let (vals, comps) = fit_gram(samples, &mean, k)?;
        (PcaRoute::Gram, vals, comps)
    } else {
        let (vals, comps) = fit_covariance(samples, &mean, k)?;
        (PcaRoute::Covariance, vals, comps)
    };

    let total: f64 = eigvals.iter().map(|&v| v.max(0.0)).sum();
    let lead = eigvals[0].max(0.0);
    let rank = eigvals.iter().take_while(|&&v| v > lead * RANK_TOL).count();
    if k > rank || lead == 0.0 {
        return Err(MathError::RankDeficient { requested: k, rank });
    }

    let mut comp_rows = Vec::with_capacity(k * d);
    for mut row in components {
        orient(&mut row);
        comp_rows.extend(row.into_iter().map(|v| v as f32));
    }
    let singular_values = eigvals[..k]
        .iter()
        .map(|&v| v.max(0.0).sqrt() as f32)
        .collect();
    let explained_variance_ratio = eigvals[..k]
        .iter()
        .map(|&v| (v.max(0.0) / total) as f32)
        .collect();
    let model = PcaModel {
        mean: mean.iter().map(|&v| v as f32).collect(),
        components: DenseMatrix::from_vec(k, d, comp_rows)?,
        singular_values,
        explained_variance_ratio,
    };
    Ok((model, route))
}

/// Projects `x` onto the model's components: `components · (x − mean)`.
pub fn pca_transform(model: &PcaModel, x: &[f32]) -> Result<Vec<f32>, MathError> {
    if x.len() != model.input_dim() {
        return Err(MathError::Shape(format!(
            "input of length {} for PCA of dimension {}",
            x.len(),
            model.input_dim()
        )));
    }
    let centered: Vec<f64> = x
        .iter()
        .zip(&model.mean)
        .map(|(&a, &m)| f64::from(a) - f64::from(m))
        .collect();
    let mut out = Vec::with_capacity(model.num_components());
    for row in model.components.row_iter() {
        let s: f64 = row
            .iter()
            .zip(&centered)
            .map(|(&c, &v)| f64::from(c) * v)
            .sum();
        out.push(s as f32);
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(MathError::NonFinite("projection".into()));
    }
    Ok(out)
}

fn column_mean(samples: &DenseMatrix) -> Vec<f64> {
    let (n, d) = samples.shape();
    let mut mean = vec![0.0f64; d];
    for row in samples.row_iter() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += f64::from(v);
        }
    }
    let inv = 1.0 / n as f64;
    mean.iter_mut().for_each(|m| *m *= inv);
    mean
}

/// Centered column block `[c0, c1)` as an n×(c1−c0) f64 matrix.
fn centered_block(samples: &DenseMatrix, mean: &[f64], c0: usize, c1: usize) -> Vec<f64> {
    let w = c1 - c0;
    let mut block = Vec::with_capacity(samples.rows() * w);
    for row in samples.row_iter() {
        block.extend(
            row[c0..c1]
                .iter()
                .zip(&mean[c0..c1])
                .map(|(&v, &m)| f64::from(v) - m),
        );
    }
    block
}

fn fit_gram(
    samples: &DenseMatrix,
    mean: &[f64],
    k: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), MathError> {
    let (n, d) = samples.shape();
    let mut gram = vec![0.0f64; n * n];
    let mut c0 = 0;
    while c0 < d {
        let c1 = (c0 + BLOCK).min(d);
        let block = centered_block(samples, mean, c0, c1);
        let w = c1 - c0;
        for i in 0..n {
            let ri = &block[i * w..(i + 1) * w];
            for j in 0..=i {
                gram[i * n + j] += dot(ri, &block[j * w..(j + 1) * w]);
            }
        }
        c0 = c1;
    }
    for i in 0..n {
        for j in 0..i {
            gram[j * n + i] = gram[i * n + j];
        }
    }

    let eig = symmetric_eigen(&gram, n)?;
    let lead = eig.values[0].max(0.0);
    let mut comps = vec![vec![0.0f64; d]; k];
    for (i, comp) in comps.iter_mut().enumerate() {
        let lambda = eig.values[i];
        if lambda <= lead * RANK_TOL {
            break;
        }
        let inv_s = 1.0 / lambda.sqrt();
        let v = eig.vector(i);
        let mut c0 = 0;
        while c0 < d {
            let c1 = (c0 + BLOCK).min(d);
            let block = centered_block(samples, mean, c0, c1);
            let w = c1 - c0;
            for (r, &vr) in v.iter().enumerate() {
                let row = &block[r * w..(r + 1) * w];
                for (o, &x) in comp[c0..c1].iter_mut().zip(row) {
                    *o += vr * x;
                }
            }
            c0 = c1;
        }
        comp.iter_mut().for_each(|x| *x *= inv_s);
    }
    Ok((eig.values, comps))
}

fn fit_covariance(
    samples: &DenseMatrix,
    mean: &[f64],
    k: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), MathError> {
    let d = samples.cols();
    let centered = centered_block(samples, mean, 0, d);
    let mut scatter = vec![0.0f64; d * d];
    for row in centered.chunks_exact(d) {
        for i in 0..d {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            let out = &mut scatter[i * d..i * d + i + 1];
            for (o, &rj) in out.iter_mut().zip(&row[..=i]) {
                *o += ri * rj;
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            scatter[j * d + i] = scatter[i * d + j];
        }
    }
    let eig = symmetric_eigen(&scatter, d)?;
    let comps = (0..k).map(|i| eig.vector(i).to_vec()).collect();
    Ok((eig.values, comps))
}

/// Flips `v` so its largest-magnitude entry is positive.
fn orient(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
