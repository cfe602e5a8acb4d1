//! Escape-set grid classification, fast-escaping and B_D masks, Julia
//! boundary extraction, and connectivity analysis of the escaping mask.
//!
//! Grid classes are finite-time approximations and are labelled as such in
//! all outputs; no pixel is ever forced into Escaping/Bounded.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{CatalogError, FunctionSpec};
use crate::scalar::Real;

/// Default cap on nx * ny.
pub const DEFAULT_PIXEL_BUDGET: usize = 1 << 24;

/// Term budget for product evaluations in ladder construction.
const LADDER_MAX_TERMS: u64 = 200_000;

/// Rectangle of the plane sampled at pixel centers.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub center_re: T,
    pub center_im: T,
    pub width: T,
    pub height: T,
    pub nx: u32,
    pub ny: u32,
    pub max_iter: u32,
    pub bailout: T,
    pub confirm_steps: u32,
}

/// Per-pixel classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PixelClass {
    /// First step whose modulus exceeded the bailout, with the exceedance
    /// confirmed over `confirm_steps` growing steps (overflow confirms
    /// immediately).
    Escaping {
        step: u32,
    },
    Bounded,
    Undetermined,
}

/// Ladder of iterated maximum-modulus logs log M^n(R), with overflow
/// bookkeeping.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LadderMeta {
    pub start_log: f64,
    pub len: u32,
    pub truncated: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct GridMeta {
    pub function_hash: String,
    pub fast: Option<LadderMeta>,
    pub bd: Option<LadderMeta>,
    pub include_n0: bool,
}

/// Classified grid with fast-escaping and B_D masks.
#[derive(Clone, Debug)]
pub struct EscapeGrid<T> {
    pub spec: GridSpec<T>,
    pub classes: Vec<PixelClass>,
    /// Length of the recorded orbit per pixel (index of its last computed
    /// point).
    pub orbit_len: Vec<u32>,
    pub fast_mask: Vec<bool>,
    pub bd_mask: Vec<bool>,
    pub meta: GridMeta,
}

/// Component structure of the escaping mask and bounded holes of its
/// complement (candidate "holes in I(f)").
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub escaping_components: usize,
    pub hole_components: usize,
    pub largest_component_fraction: f64,
    /// Inclusive pixel bounding boxes [x0, y0, x1, y1], one per hole.
    pub hole_bounding_boxes: Vec<[u32; 4]>,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GridError {
    #[error("pixel count {pixels} exceeds budget {budget}")]
    PixelBudgetExceeded { pixels: usize, budget: usize },
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("fast/bd mask requested on a grid of a different function")]
    FunctionMismatch,
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

impl<T: Real> GridSpec<T> {
    pub fn validate(&self, budget: usize) -> Result<(), GridError> {
        let pixels = self.nx as usize * self.ny as usize;
        if pixels == 0 {
            return Err(GridError::InvalidSpec("nx and ny must be positive".into()));
        }
        if pixels > budget {
            return Err(GridError::PixelBudgetExceeded { pixels, budget });
        }
        if !(self.width > T::zero() && self.height > T::zero()) {
            return Err(GridError::InvalidSpec(
                "width and height must be positive".into(),
            ));
        }
        if !(self.bailout >= T::cst(1e3)) {
            return Err(GridError::InvalidSpec(
                "bailout must be at least 1e3".into(),
            ));
        }
        if self.confirm_steps == 0 {
            return Err(GridError::InvalidSpec(
                "confirm_steps must be at least 1".into(),
            ));
        }
        if self.max_iter == 0 {
            return Err(GridError::InvalidSpec("max_iter must be positive".into()));
        }
        Ok(())
    }

    /// Pixel-center coordinate; row i counts from the top (im decreasing),
    /// column j from the left.
    pub fn pixel_center(&self, i: u32, j: u32) -> Complex<T> {
        let fx = (T::cst(j as f64) + T::cst(0.5)) / T::cst(self.nx as f64);
        let fy = (T::cst(i as f64) + T::cst(0.5)) / T::cst(self.ny as f64);
        Complex::new(
            self.center_re - self.width * T::cst(0.5) + self.width * fx,
            self.center_im + self.height * T::cst(0.5) - self.height * fy,
        )
    }
}

/// Classify every pixel center as Escaping / Bounded / Undetermined.
///
/// Escaping requires the bailout exceedance to be confirmed over
/// `confirm_steps` consecutive growing steps (overflow confirms at once);
/// Bounded requires the orbit to revisit |z| <= sqrt(bailout) in the second
/// half of the iteration budget; everything else is Undetermined.
pub fn classify_grid<T: Real>(
    f: &FunctionSpec<T>,
    spec: &GridSpec<T>,
) -> Result<EscapeGrid<T>, GridError> {
    classify_grid_with_budget(f, spec, DEFAULT_PIXEL_BUDGET)
}

pub fn classify_grid_with_budget<T: Real>(
    f: &FunctionSpec<T>,
    spec: &GridSpec<T>,
    budget: usize,
) -> Result<EscapeGrid<T>, GridError> {
    spec.validate(budget)?;
    let nx = spec.nx as usize;
    let ny = spec.ny as usize;
    let mut classes = vec![PixelClass::Undetermined; nx * ny];
    let mut orbit_len = vec![0u32; nx * ny];

    classes
        .par_chunks_mut(nx)
        .zip(orbit_len.par_chunks_mut(nx))
        .enumerate()
        .for_each(|(i, (class_row, len_row))| {
            for j in 0..nx {
                let z0 = spec.pixel_center(i as u32, j as u32);
                let (class, len) = classify_pixel(f, z0, spec);
                class_row[j] = class;
                len_row[j] = len;
            }
        });

    Ok(EscapeGrid {
        spec: *spec,
        classes,
        orbit_len,
        fast_mask: vec![false; nx * ny],
        bd_mask: vec![false; nx * ny],
        meta: GridMeta {
            function_hash: format!("{:016x}", f.stable_hash()),
            ..GridMeta::default()
        },
    })
}

/// One orbit: walk the pixel's forward orbit, applying the confirmation
/// policy. Returns the class and the recorded orbit length.
fn classify_pixel<T: Real>(
    f: &FunctionSpec<T>,
    z0: Complex<T>,
    spec: &GridSpec<T>,
) -> (PixelClass, u32) {
    let bailout = spec.bailout;
    let sqrt_bailout = bailout.sqrt();
    let half = spec.max_iter / 2;

    let mut z = z0;
    let mut norm = z.norm();
    let mut pending: Option<(u32, T, u32)> = None; // (first step, prev norm, confirmed)
    if norm > bailout {
        pending = Some((0, norm, 0));
    }
    let mut revisited_small = false;

    for step in 1..=spec.max_iter {
        let (next, log_abs) = match f.evaluate(z) {
            Ok(res) => (res.value, res.log_abs),
            Err(CatalogError::NonConvergentProduct { .. }) => {
                // argument too large for the term budget: far past bailout
                let first = pending.map(|(s, _, _)| s).unwrap_or(step);
                return (PixelClass::Escaping { step: first }, step);
            }
            Err(_) => return (PixelClass::Undetermined, step),
        };
        if log_abs >= T::log_saturation() {
            let first = pending.map(|(s, _, _)| s).unwrap_or(step);
            return (PixelClass::Escaping { step: first }, step);
        }
        z = next;
        norm = z.norm();

        match pending {
            Some((first, prev, confirmed)) => {
                if norm > bailout && norm > prev {
                    let confirmed = confirmed + 1;
                    if confirmed >= spec.confirm_steps {
                        return (PixelClass::Escaping { step: first }, step);
                    }
                    pending = Some((first, norm, confirmed));
                } else {
                    pending = None;
                }
            }
            None => {
                if norm > bailout {
                    pending = Some((step, norm, 0));
                }
            }
        }
        if step >= half && norm <= sqrt_bailout {
            revisited_small = true;
        }
    }

    if revisited_small {
        (PixelClass::Bounded, spec.max_iter)
    } else {
        (PixelClass::Undetermined, spec.max_iter)
    }
}

/// Iterated maximum-modulus ladder log M^n(start) for n = 1..=max_len,
/// truncated where the value leaves the scalar's range.
fn m_ladder<T: Real>(
    f: &FunctionSpec<T>,
    start_log: T,
    max_len: u32,
) -> Result<(Vec<T>, bool), GridError> {
    let mut ladder = Vec::with_capacity(max_len as usize);
    let mut cur = start_log;
    let mut truncated = false;
    for _ in 0..max_len {
        let next = if f.has_nonneg_coefficients() {
            f.log_modulus_budgeted(cur, T::zero(), LADDER_MAX_TERMS)
        } else {
            let r = cur.exp();
            if r.is_finite() {
                crate::profile::log_max_modulus(f, cur, 64)
                    .map(|m| m.log_max)
                    .map_err(|_| CatalogError::RadiusNotRepresentable {
                        log_r: cur.to_f64().unwrap_or(f64::NAN),
                    })
            } else {
                Err(CatalogError::RadiusNotRepresentable {
                    log_r: cur.to_f64().unwrap_or(f64::NAN),
                })
            }
        };
        match next {
            Ok(v) if v.is_finite() => {
                ladder.push(v);
                cur = v;
            }
            _ => {
                truncated = true;
                break;
            }
        }
    }
    Ok((ladder, truncated))
}

/// Per-pixel orbit log-moduli log |f^k(z0)| for k = 0..=len.
fn orbit_logs<T: Real>(f: &FunctionSpec<T>, z0: Complex<T>, len: u32) -> Vec<T> {
    let mut logs = Vec::with_capacity(len as usize + 1);
    let mut z = z0;
    logs.push(z.norm().ln());
    for _ in 1..=len {
        match f.evaluate(z) {
            Ok(res) => {
                logs.push(res.log_abs);
                if res.log_abs >= T::log_saturation() {
                    // orbit recording stopped here during classification
                    break;
                }
                z = res.value;
            }
            Err(_) => {
                logs.push(T::infinity());
                break;
            }
        }
    }
    logs
}

/// Mark pixels passing the fast-escaping test: some lag L <= l_max with
/// log |f^{n+L}(z)| > log M^n(R) for every n >= 1 with n + L within the
/// recorded orbit (comparisons limited to the ladder length when the
/// ladder overflowed; orbits too short to check any n stay unmarked).
pub fn classify_fast<T: Real>(
    f: &FunctionSpec<T>,
    grid: &mut EscapeGrid<T>,
    log_r: T,
    l_max: u32,
) -> Result<(), GridError> {
    if grid.meta.function_hash != format!("{:016x}", f.stable_hash()) {
        return Err(GridError::FunctionMismatch);
    }
    if l_max == 0 {
        return Err(GridError::InvalidSpec("l_max must be at least 1".into()));
    }
    let (ladder, truncated) = m_ladder(f, log_r, grid.spec.max_iter)?;
    grid.meta.fast = Some(LadderMeta {
        start_log: log_r.to_f64().unwrap_or(f64::NAN),
        len: ladder.len() as u32,
        truncated,
    });

    let nx = grid.spec.nx as usize;
    let spec = grid.spec;
    let classes = &grid.classes;
    let orbit_len = &grid.orbit_len;
    grid.fast_mask
        .par_chunks_mut(nx)
        .enumerate()
        .for_each(|(i, mask_row)| {
            for (j, slot) in mask_row.iter_mut().enumerate() {
                let idx = i * nx + j;
                if !matches!(classes[idx], PixelClass::Escaping { .. }) {
                    *slot = false;
                    continue;
                }
                let logs = orbit_logs(f, spec.pixel_center(i as u32, j as u32), orbit_len[idx]);
                let len = logs.len() as u32 - 1;
                *slot = (1..=l_max).any(|l| {
                    if len < l + 1 {
                        return false;
                    }
                    let mut checked = false;
                    for n in 1..=(len - l) {
                        let Some(&bound) = ladder.get(n as usize - 1) else {
                            break;
                        };
                        checked = true;
                        if logs[(n + l) as usize] <= bound {
                            return false;
                        }
                    }
                    checked
                });
            }
        });
    Ok(())
}

/// Mark pixels passing the B_D exclusion test against the conservative
/// disc over-approximation B(0, M^n(s)), s = |center| + radius: every
/// recorded orbit point must stay outside the corresponding ladder disc.
/// Marked pixels are additionally required to be fast (keeps the mask
/// chain B_D ⊆ A ⊆ I structural; the clip preserves soundness since both
/// masks under-approximate their sets).
pub fn classify_bd<T: Real>(
    f: &FunctionSpec<T>,
    grid: &mut EscapeGrid<T>,
    disc_center: Complex<T>,
    disc_radius: T,
    include_n0: bool,
) -> Result<(), GridError> {
    if grid.meta.function_hash != format!("{:016x}", f.stable_hash()) {
        return Err(GridError::FunctionMismatch);
    }
    if !(disc_radius > T::zero()) {
        return Err(GridError::InvalidSpec(
            "disc radius must be positive".into(),
        ));
    }
    let start_log = (disc_center.norm() + disc_radius).ln();
    let (ladder, truncated) = m_ladder(f, start_log, grid.spec.max_iter)?;
    grid.meta.bd = Some(LadderMeta {
        start_log: start_log.to_f64().unwrap_or(f64::NAN),
        len: ladder.len() as u32,
        truncated,
    });
    grid.meta.include_n0 = include_n0;

    let nx = grid.spec.nx as usize;
    let spec = grid.spec;
    let classes = &grid.classes;
    let orbit_len = &grid.orbit_len;
    let fast_mask = &grid.fast_mask;
    grid.bd_mask
        .par_chunks_mut(nx)
        .enumerate()
        .for_each(|(i, mask_row)| {
            for (j, slot) in mask_row.iter_mut().enumerate() {
                let idx = i * nx + j;
                if !matches!(classes[idx], PixelClass::Escaping { .. }) || !fast_mask[idx] {
                    *slot = false;
                    continue;
                }
                let logs = orbit_logs(f, spec.pixel_center(i as u32, j as u32), orbit_len[idx]);
                let len = logs.len() as u32 - 1;
                let mut ok = len >= 1;
                if include_n0 && logs[0] <= start_log {
                    ok = false;
                }
                if ok {
                    for n in 1..=len {
                        let Some(&bound) = ladder.get(n as usize - 1) else {
                            break;
                        };
                        if logs[n as usize] <= bound {
                            ok = false;
                            break;
                        }
                    }
                }
                *slot = ok;
            }
        });
    Ok(())
}

/// Check the mask inclusion chain bd ⊆ fast ⊆ Escaping exhaustively.
/// Returns the number of violations (0 on every correctly produced grid).
pub fn mask_inclusion_violations<T: Real>(grid: &EscapeGrid<T>) -> usize {
    let mut violations = 0;
    for idx in 0..grid.classes.len() {
        let escaping = matches!(grid.classes[idx], PixelClass::Escaping { .. });
        if grid.bd_mask[idx] && !grid.fast_mask[idx] {
            violations += 1;
        }
        if grid.fast_mask[idx] && !escaping {
            violations += 1;
        }
    }
    violations
}

/// Union-find with path compression and union by size.
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        UnionFind {
            parent: (0..len as u32).collect(),
            size: vec![1; len],
        }
    }

    pub fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    pub fn union(&mut self, a: u32, b: u32) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return;
        }
        if self.size[ra as usize] >= self.size[rb as usize] {
            self.parent[rb as usize] = ra;
            self.size[ra as usize] += self.size[rb as usize];
        } else {
            self.parent[ra as usize] = rb;
            self.size[rb as usize] += self.size[ra as usize];
        }
    }
}

/// Connected-component analysis of the escaping mask (4-connectivity) and
/// hole detection: non-escaping components not reachable from the frame.
#[allow(clippy::needless_range_loop)] // pixel index addresses several masks
pub fn connectivity<T: Real>(grid: &EscapeGrid<T>) -> ConnectivityReport {
    let nx = grid.spec.nx as usize;
    let ny = grid.spec.ny as usize;
    let escaping: Vec<bool> = grid
        .classes
        .iter()
        .map(|c| matches!(c, PixelClass::Escaping { .. }))
        .collect();

    // escaping components via union-find
    let mut uf = UnionFind::new(nx * ny);
    for i in 0..ny {
        for j in 0..nx {
            let idx = i * nx + j;
            if !escaping[idx] {
                continue;
            }
            if j + 1 < nx && escaping[idx + 1] {
                uf.union(idx as u32, (idx + 1) as u32);
            }
            if i + 1 < ny && escaping[idx + nx] {
                uf.union(idx as u32, (idx + nx) as u32);
            }
        }
    }
    let mut total_escaping = 0usize;
    let mut component_size: std::collections::HashMap<u32, usize> =
        std::collections::HashMap::new();
    for idx in 0..nx * ny {
        if escaping[idx] {
            total_escaping += 1;
            *component_size.entry(uf.find(idx as u32)).or_insert(0) += 1;
        }
    }
    let escaping_components = component_size.len();
    let largest = component_size.values().copied().max().unwrap_or(0);
    let largest_component_fraction = if total_escaping == 0 {
        0.0
    } else {
        largest as f64 / total_escaping as f64
    };

    // flood fill non-escaping pixels from the frame; what remains is a hole
    let mut exterior = vec![false; nx * ny];
    let mut stack = Vec::new();
    for j in 0..nx {
        for &i in &[0usize, ny - 1] {
            let idx = i * nx + j;
            if !escaping[idx] && !exterior[idx] {
                exterior[idx] = true;
                stack.push(idx);
            }
        }
    }
    for i in 0..ny {
        for &j in &[0usize, nx - 1] {
            let idx = i * nx + j;
            if !escaping[idx] && !exterior[idx] {
                exterior[idx] = true;
                stack.push(idx);
            }
        }
    }
    while let Some(idx) = stack.pop() {
        let (i, j) = (idx / nx, idx % nx);
        let mut visit = |ni: usize, nj: usize| {
            let nidx = ni * nx + nj;
            if !escaping[nidx] && !exterior[nidx] {
                exterior[nidx] = true;
                stack.push(nidx);
            }
        };
        if i > 0 {
            visit(i - 1, j);
        }
        if i + 1 < ny {
            visit(i + 1, j);
        }
        if j > 0 {
            visit(i, j - 1);
        }
        if j + 1 < nx {
            visit(i, j + 1);
        }
    }

    // group hole pixels into components with their bounding boxes
    let mut hole_label = vec![u32::MAX; nx * ny];
    let mut boxes: Vec<[u32; 4]> = Vec::new();
    for start in 0..nx * ny {
        if escaping[start] || exterior[start] || hole_label[start] != u32::MAX {
            continue;
        }
        let label = boxes.len() as u32;
        let mut bb = [u32::MAX, u32::MAX, 0u32, 0u32];
        let mut stack = vec![start];
        hole_label[start] = label;
        while let Some(idx) = stack.pop() {
            let (i, j) = ((idx / nx) as u32, (idx % nx) as u32);
            bb[0] = bb[0].min(j);
            bb[1] = bb[1].min(i);
            bb[2] = bb[2].max(j);
            bb[3] = bb[3].max(i);
            let mut visit = |nidx: usize| {
                if !escaping[nidx] && !exterior[nidx] && hole_label[nidx] == u32::MAX {
                    hole_label[nidx] = label;
                    stack.push(nidx);
                }
            };
            if idx >= nx {
                visit(idx - nx);
            }
            if idx + nx < nx * ny {
                visit(idx + nx);
            }
            if idx % nx > 0 {
                visit(idx - 1);
            }
            if idx % nx + 1 < nx {
                visit(idx + 1);
            }
        }
        boxes.push(bb);
    }

    ConnectivityReport {
        escaping_components,
        hole_components: boxes.len(),
        largest_component_fraction,
        hole_bounding_boxes: boxes,
    }
}

/// Boundary extraction: pixels whose class is Escaping with a 4-neighbor of
/// class Bounded or Undetermined, or vice versa (both sides of the
/// interface are marked).
pub fn julia_boundary<T: Real>(grid: &EscapeGrid<T>) -> Vec<bool> {
    let nx = grid.spec.nx as usize;
    let ny = grid.spec.ny as usize;
    let escaping: Vec<bool> = grid
        .classes
        .iter()
        .map(|c| matches!(c, PixelClass::Escaping { .. }))
        .collect();
    let mut boundary = vec![false; nx * ny];
    for i in 0..ny {
        for j in 0..nx {
            let idx = i * nx + j;
            let here = escaping[idx];
            let differs = (i > 0 && escaping[idx - nx] != here)
                || (i + 1 < ny && escaping[idx + nx] != here)
                || (j > 0 && escaping[idx - 1] != here)
                || (j + 1 < nx && escaping[idx + 1] != here);
            boundary[idx] = differs;
        }
    }
    boundary
}

/// Which mask a PPM export renders.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskKind {
    Class,
    Fast,
    Bd,
    JuliaBoundary,
}

/// Render a grid (or one of its masks) as a binary PPM (P6) image with the
/// fixed palette: Escaping graded light-to-dark blue by step, Bounded
/// black, Undetermined gray; mask pixels white over dimmed context.
#[allow(clippy::needless_range_loop)] // pixel index addresses several masks
pub fn write_ppm<T: Real>(grid: &EscapeGrid<T>, kind: MaskKind) -> Vec<u8> {
    let nx = grid.spec.nx as usize;
    let ny = grid.spec.ny as usize;
    let mut out = format!("P6\n{nx} {ny}\n255\n").into_bytes();
    let boundary = if kind == MaskKind::JuliaBoundary {
        julia_boundary(grid)
    } else {
        Vec::new()
    };
    let grade_cap = grid.spec.max_iter.max(1);
    for idx in 0..nx * ny {
        let rgb: [u8; 3] = match kind {
            MaskKind::Class => match grid.classes[idx] {
                PixelClass::Escaping { step } => {
                    let t = step.min(grade_cap) as f64 / grade_cap as f64;
                    let v = (235.0 - 175.0 * t) as u8;
                    [v, v, 255]
                }
                PixelClass::Bounded => [0, 0, 0],
                PixelClass::Undetermined => [128, 128, 128],
            },
            MaskKind::Fast | MaskKind::Bd => {
                let marked = if kind == MaskKind::Fast {
                    grid.fast_mask[idx]
                } else {
                    grid.bd_mask[idx]
                };
                if marked {
                    [255, 255, 255]
                } else if matches!(grid.classes[idx], PixelClass::Escaping { .. }) {
                    [60, 60, 140]
                } else {
                    [0, 0, 0]
                }
            }
            MaskKind::JuliaBoundary => {
                if boundary[idx] {
                    [255, 255, 255]
                } else {
                    [0, 0, 0]
                }
            }
        };
        out.extend_from_slice(&rgb);
    }
    out
}

impl<T: Real> EscapeGrid<T> {
    /// Assemble a grid from raw classes (synthetic masks in tests).
    pub fn from_classes(spec: GridSpec<T>, classes: Vec<PixelClass>) -> Self {
        let n = classes.len();
        assert_eq!(n, spec.nx as usize * spec.ny as usize);
        let orbit_len = classes
            .iter()
            .map(|c| match c {
                PixelClass::Escaping { step } => *step,
                _ => spec.max_iter,
            })
            .collect();
        EscapeGrid {
            spec,
            classes,
            orbit_len,
            fast_mask: vec![false; n],
            bd_mask: vec![false; n],
            meta: GridMeta::default(),
        }
    }
}
