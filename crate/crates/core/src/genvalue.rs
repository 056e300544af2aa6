//! The joint star-genvalue problem: `L+ P = alpha P` together with `L- P = 0`.
//!
//! `L+` carries the even kernel `g` and is symmetric on real (q,p) samples;
//! `L-` carries the odd kernel `f` and is skew. Solutions are found by
//! diagonalizing `L+` and keeping, inside each eigenvalue cluster, the
//! numerical null space of `L-`.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::eigen::{lowest_pairs, spectral_bounds, EigenMethod, EigenPairs};
use crate::error::{Error, Result};
use crate::grid::{char_from_density, density_from_char, Domain, Field, PhaseGrid};
use crate::observable::{ObservableSpec, DEFAULT_MAX_DEGREE};
use crate::operator::PmOperator;
use crate::star::{DeformationParams, Kernel};

/// Operator pair of one observable on one grid.
#[derive(Clone, Debug)]
pub struct GenvalueOperator {
    observable: ObservableSpec,
    params: DeformationParams,
    grid: PhaseGrid,
    plus: PmOperator,
    minus: PmOperator,
}

pub fn build_operators(
    observable: &ObservableSpec,
    grid: &PhaseGrid,
    params: &DeformationParams,
) -> Result<GenvalueOperator> {
    params.validate()?;
    grid.spec().validate()?;
    observable.validate(DEFAULT_MAX_DEGREE)?;
    if (params.hbar - grid.hbar()).abs() > 1e-15 * params.hbar.abs() {
        return Err(Error::Config(format!(
            "deformation hbar {} differs from grid hbar {}",
            params.hbar,
            grid.hbar()
        )));
    }
    let plus = PmOperator::for_observable(observable, grid, params, Kernel::Symmetric)?;
    let minus = PmOperator::for_observable(observable, grid, params, Kernel::Bracket)?;
    Ok(GenvalueOperator {
        observable: observable.clone(),
        params: *params,
        grid: grid.clone(),
        plus,
        minus,
    })
}

impl GenvalueOperator {
    pub fn observable(&self) -> &ObservableSpec {
        &self.observable
    }

    pub fn params(&self) -> &DeformationParams {
        &self.params
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn plus(&self) -> &PmOperator {
        &self.plus
    }

    pub fn minus(&self) -> &PmOperator {
        &self.minus
    }

    /// `L+` on a field of either domain; the result lives in the same domain.
    pub fn apply_plus(&self, field: &Field) -> Result<Field> {
        apply_in_domain(&self.plus, field)
    }

    pub fn apply_minus(&self, field: &Field) -> Result<Field> {
        apply_in_domain(&self.minus, field)
    }

    /// Same observable and parameters on another grid.
    pub fn rebuilt_on(&self, grid: &PhaseGrid) -> Result<GenvalueOperator> {
        let observable = match &self.observable {
            ObservableSpec::Polynomial(p) => ObservableSpec::Polynomial(p.clone()),
            ObservableSpec::Tabulated(t) => ObservableSpec::Tabulated(subsample(t, grid)?),
        };
        build_operators(&observable, grid, &self.params)
    }
}

fn apply_in_domain(op: &PmOperator, field: &Field) -> Result<Field> {
    match field.domain() {
        Domain::PositionMomentum => {
            // Complex samples act through their real and imaginary parts.
            op.grid().check_same(field.grid())?;
            let re: Vec<f64> = field.values().iter().map(|v| v.re).collect();
            let im: Vec<f64> = field.values().iter().map(|v| v.im).collect();
            let (a, b) = (op.apply(&re), op.apply(&im));
            let vals = a
                .into_iter()
                .zip(b)
                .map(|(x, y)| num_complex::Complex64::new(x, y))
                .collect();
            Field::new(field.grid(), Domain::PositionMomentum, vals)
        }
        Domain::Characteristic => {
            let pm = density_from_char(field)?;
            char_from_density(&apply_in_domain(op, &pm)?)
        }
    }
}

/// Restriction of a tabulated observable to a coarser grid over the same box.
fn subsample(table: &Field, coarse: &PhaseGrid) -> Result<Field> {
    let fine = table.grid();
    let (fq, fp) = (fine.n_q() / coarse.n_q(), fine.n_p() / coarse.n_p());
    if fq * coarse.n_q() != fine.n_q()
        || fp * coarse.n_p() != fine.n_p()
        || fine.spec().q_min != coarse.spec().q_min
        || fine.spec().p_min != coarse.spec().p_min
    {
        return Err(Error::Usage("coarse grid does not nest in the table grid".into()));
    }
    let vals = (0..coarse.n_q())
        .flat_map(|i| (0..coarse.n_p()).map(move |j| (i, j)))
        .map(|(i, j)| table.at(i * fq, j * fp))
        .collect();
    Field::new(coarse, Domain::PositionMomentum, vals)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Discrete,
    Continuous,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Bound on `||L+ v - alpha v|| / ||L+||` for unit `v`.
    pub tol_eig: f64,
    /// Bound on `||L- v|| / ||L-||`; also the null-space threshold.
    pub tol_constraint: f64,
    /// Relative width of an eigenvalue cluster.
    pub cluster_tol: f64,
    pub method: EigenMethod,
    /// Re-solve on a coarsened grid to label the spectrum.
    pub classify: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol_eig: 1e-8,
            tol_constraint: 1e-6,
            cluster_tol: 1e-6,
            method: EigenMethod::Auto,
            classify: true,
        }
    }
}

/// A cluster of `L+` eigenvalues that produced no admissible state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectedCluster {
    pub value: f64,
    pub size: usize,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// Pseudodensities normalized to unit integral.
    pub eigenfields: Vec<Field>,
    pub residual_plus: Vec<f64>,
    pub residual_minus: Vec<f64>,
    /// Dimension of the `L-` null space inside each accepted cluster.
    pub null_dimension: Vec<usize>,
    pub spectrum_kind: SpectrumKind,
    pub rejected: Vec<RejectedCluster>,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn is_degenerate(&self, i: usize) -> bool {
        self.null_dimension[i] > 1
    }
}

struct Accepted {
    value: f64,
    vector: Vec<f64>,
    residual_plus: f64,
    residual_minus: f64,
    null_dimension: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn operator_scale(op: &PmOperator) -> Result<f64> {
    if let Some(d) = op.as_diagonal() {
        return Ok(d.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE));
    }
    if op.is_zero() {
        return Ok(1.0);
    }
    match op.symmetry() {
        crate::operator::Symmetry::Symmetric => {
            let (lo, hi) = spectral_bounds(op, 40)?;
            Ok(lo.abs().max(hi.abs()))
        }
        crate::operator::Symmetry::Skew => Ok(op.norm_estimate(60)),
    }
}

/// Processes one cluster of eigenvectors; `Err` carries the rejection reason.
fn filter_cluster(
    op: &GenvalueOperator,
    pairs: &EigenPairs,
    range: std::ops::Range<usize>,
    scales: (f64, f64),
    opts: &SolveOptions,
) -> Result<std::result::Result<Accepted, String>> {
    let n = op.grid.len();
    let d = range.len();
    let (rho_plus, rho_minus) = scales;
    let cols: Vec<Vec<f64>> = range.clone().map(|j| pairs.vector(j)).collect();
    let null: Vec<Vec<f64>> = if op.minus.is_zero() {
        cols
    } else {
        let images: Vec<Vec<f64>> = cols.iter().map(|c| op.minus.apply(c)).collect();
        let gram = Mat::from_fn(d, d, |a, b| dot(&images[a], &images[b]));
        let evd = gram
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Accuracy(format!("cluster Gram eigensolve failed: {e:?}")))?;
        let mu = evd.S().column_vector();
        let w = evd.U();
        let threshold = opts.tol_constraint * rho_minus;
        let null: Vec<Vec<f64>> = (0..d)
            .filter(|&c| mu[c].max(0.0).sqrt() <= threshold)
            .map(|c| {
                let mut v = vec![0.0; n];
                for (a, col) in cols.iter().enumerate() {
                    let wa = w[(a, c)];
                    v.iter_mut().zip(col).for_each(|(x, y)| *x += wa * y);
                }
                v
            })
            .collect();
        if null.is_empty() {
            let smallest = mu[0].max(0.0).sqrt() / rho_minus;
            return Ok(Err(format!(
                "no vector passes the bracket constraint (smallest relative residual {smallest:.3e})"
            )));
        }
        null
    };
    // The normalizable direction: projection of the constant field.
    let weights: Vec<f64> = null.iter().map(|v| v.iter().sum()).collect();
    let wnorm = norm(&weights);
    if wnorm <= 1e-9 * (n as f64).sqrt() {
        return Ok(Err("bracket null space has zero total weight".into()));
    }
    let mut v = vec![0.0; n];
    for (vec, wt) in null.iter().zip(&weights) {
        v.iter_mut().zip(vec).for_each(|(x, y)| *x += wt / wnorm * y);
    }
    let vn = norm(&v);
    v.iter_mut().for_each(|x| *x /= vn);
    let lv = op.plus.apply(&v);
    let value = dot(&v, &lv);
    let rp = lv
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - value * b).powi(2))
        .sum::<f64>()
        .sqrt()
        / rho_plus;
    let rm = norm(&op.minus.apply(&v)) / rho_minus;
    if rp > opts.tol_eig {
        return Ok(Err(format!(
            "eigen residual {rp:.3e} exceeds tolerance {:.1e}",
            opts.tol_eig
        )));
    }
    Ok(Ok(Accepted {
        value,
        vector: v,
        residual_plus: rp,
        residual_minus: rm,
        null_dimension: null.len(),
    }))
}

fn solve_states(
    op: &GenvalueOperator,
    n_states: usize,
    opts: &SolveOptions,
) -> Result<(Vec<Accepted>, Vec<RejectedCluster>)> {
    let n = op.grid.len();
    let scales = (operator_scale(&op.plus)?, operator_scale(&op.minus)?);
    let mut want = (2 * n_states * n_states + n_states).max(8).min(n);
    loop {
        let pairs = lowest_pairs(&op.plus, want, opts.method, opts.tol_eig * 1e-2)?;
        let mut accepted = Vec::new();
        let mut rejected = Vec::new();
        let mut start = 0;
        let m = pairs.len();
        while start < m && accepted.len() < n_states {
            let base = pairs.values[start];
            let mut end = start + 1;
            while end < m && (pairs.values[end] - pairs.values[end - 1]).abs() <= opts.cluster_tol * base.abs().max(1.0)
            {
                end += 1;
            }
            if end == m && !pairs.complete {
                // The cluster may continue past the computed pairs.
                break;
            }
            match filter_cluster(op, &pairs, start..end, scales, opts)? {
                Ok(state) => accepted.push(state),
                Err(reason) => {
                    log::debug!("rejected cluster at {base}: {reason}");
                    rejected.push(RejectedCluster {
                        value: base,
                        size: end - start,
                        reason,
                    });
                }
            }
            start = end;
        }
        if accepted.len() >= n_states || pairs.complete || want >= n {
            return Ok((accepted, rejected));
        }
        want = (2 * want).min(n);
        log::debug!(
            "found {} of {n_states} states, widening to {want} pairs",
            accepted.len()
        );
    }
}

fn label_gaps(fine: &[f64], coarse: &[f64]) -> SpectrumKind {
    let count = fine.len().min(coarse.len());
    if count < 2 {
        return SpectrumKind::Discrete;
    }
    let mut discrete = 0;
    let mut continuous = 0;
    for i in 0..count - 1 {
        let gf = fine[i + 1] - fine[i];
        let gc = coarse[i + 1] - coarse[i];
        if gc.abs() < f64::MIN_POSITIVE {
            continue;
        }
        let r = gf / gc;
        if (r - 1.0).abs() <= 0.2 {
            discrete += 1;
        } else if r < 0.75 {
            continuous += 1;
        }
    }
    match (discrete, continuous) {
        (_, 0) => SpectrumKind::Discrete,
        (0, _) => SpectrumKind::Continuous,
        _ => SpectrumKind::Mixed,
    }
}

/// Up to `n_states` joint solutions, lowest first.
pub fn solve_spectrum(op: &GenvalueOperator, n_states: usize, opts: &SolveOptions) -> Result<SpectralResult> {
    if n_states == 0 {
        return Err(Error::Config("n_states must be positive".into()));
    }
    if !(opts.tol_eig > 0.0 && opts.tol_constraint > 0.0 && opts.cluster_tol > 0.0) {
        return Err(Error::Config("solver tolerances must be positive".into()));
    }
    let (states, rejected) = solve_states(op, n_states, opts)?;
    let spectrum_kind = if opts.classify {
        classify(op, &states, n_states, opts)?
    } else {
        SpectrumKind::Discrete
    };
    let cell = op.grid.cell_area();
    let mut result = SpectralResult {
        eigenvalues: Vec::new(),
        eigenfields: Vec::new(),
        residual_plus: Vec::new(),
        residual_minus: Vec::new(),
        null_dimension: Vec::new(),
        spectrum_kind,
        rejected,
    };
    for s in states {
        let total: f64 = s.vector.iter().sum::<f64>() * cell;
        let density: Vec<f64> = s.vector.iter().map(|v| v / total).collect();
        result.eigenvalues.push(s.value);
        result
            .eigenfields
            .push(Field::from_real(&op.grid, Domain::PositionMomentum, &density)?);
        result.residual_plus.push(s.residual_plus);
        result.residual_minus.push(s.residual_minus);
        result.null_dimension.push(s.null_dimension);
    }
    Ok(result)
}

fn classify(op: &GenvalueOperator, states: &[Accepted], n_states: usize, opts: &SolveOptions) -> Result<SpectrumKind> {
    const MIN_LEVELS: usize = 3;
    let Some(coarse_grid) = op.grid.coarsened(2) else {
        return Ok(SpectrumKind::Discrete);
    };
    let levels = n_states.max(MIN_LEVELS);
    let fine: Vec<f64> = if states.len() >= levels {
        states.iter().map(|s| s.value).collect()
    } else {
        solve_states(op, levels, opts)?.0.iter().map(|s| s.value).collect()
    };
    let coarse_op = op.rebuilt_on(&coarse_grid)?;
    let coarse: Vec<f64> = solve_states(&coarse_op, levels, opts)
        .map_err(|e| Error::Accuracy(format!("refinement check failed on the coarse grid: {e}")))?
        .0
        .iter()
        .map(|s| s.value)
        .collect();
    Ok(label_gaps(&fine, &coarse))
}

/// Shape of the level-set band used in classical mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LevelBand {
    /// Uniform weight on cells with `|A - alpha| <= 0.5 (|d_q A| dq + |d_p A| dp)`.
    Sharp,
    /// Weight `exp(-(A - alpha)^2 / (2 width^2))`, a smooth function of `A`.
    Smooth { width: f64 },
}

/// Classical eigen-density of `A` at level `alpha` with the sharp band.
pub fn classical_spectrum(observable: &ObservableSpec, grid: &PhaseGrid, alpha: f64) -> Result<Field> {
    classical_spectrum_with(observable, grid, alpha, LevelBand::Sharp)
}

pub fn classical_spectrum_with(
    observable: &ObservableSpec,
    grid: &PhaseGrid,
    alpha: f64,
    band: LevelBand,
) -> Result<Field> {
    observable.validate(u32::MAX)?;
    let a = observable.samples(grid)?;
    let (dqa, dpa) = gradients(observable, grid)?;
    let (dq, dp) = (grid.dq(), grid.dp());
    let weights: Vec<f64> = match band {
        LevelBand::Sharp => a
            .iter()
            .zip(dqa.iter().zip(&dpa))
            .map(|(&v, (&gq, &gp))| {
                // Constant observables fill the box when alpha matches to rounding.
                let tol = (0.5 * (gq.abs() * dq + gp.abs() * dp)).max(1e-12 * v.abs().max(1.0));
                if (v - alpha).abs() <= tol {
                    1.0
                } else {
                    0.0
                }
            })
            .collect(),
        LevelBand::Smooth { width } => {
            if !(width > 0.0) {
                return Err(Error::Config("level band width must be positive".into()));
            }
            a.iter()
                .map(|&v| (-(v - alpha).powi(2) / (2.0 * width * width)).exp())
                .collect()
        }
    };
    let total: f64 = weights.iter().sum::<f64>() * grid.cell_area();
    if !(total > 0.0) {
        return Err(Error::NoSupport(format!(
            "no grid cell lies on the level set A = {alpha}"
        )));
    }
    let density: Vec<f64> = weights.iter().map(|w| w / total).collect();
    Field::from_real(grid, Domain::PositionMomentum, &density)
}

/// Exact derivatives for polynomials, spectral ones for tables.
fn gradients(observable: &ObservableSpec, grid: &PhaseGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    match observable {
        ObservableSpec::Polynomial(poly) => {
            let dq = poly.derivative(1, 0);
            let dp = poly.derivative(0, 1);
            Ok((grid.sample(|q, p| dq.eval(q, p)), grid.sample(|q, p| dp.eval(q, p))))
        }
        ObservableSpec::Tabulated(t) => {
            grid.check_same(t.grid())?;
            Ok((
                spectral_derivative(grid, &t.real_parts(), true),
                spectral_derivative(grid, &t.real_parts(), false),
            ))
        }
    }
}

pub(crate) fn spectral_derivative(grid: &PhaseGrid, x: &[f64], along_q: bool) -> Vec<f64> {
    use num_complex::Complex64;
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let (nq, np) = (grid.n_q(), grid.n_p());
    if along_q {
        let kq = grid.wavenumbers_q();
        grid.fft_q(&mut buf, false);
        for i in 0..nq {
            for j in 0..np {
                buf[i * np + j] *= Complex64::new(0.0, kq[i] / nq as f64);
            }
        }
        grid.fft_q(&mut buf, true);
    } else {
        let kp = grid.wavenumbers_p();
        grid.fft_p(&mut buf, false);
        for i in 0..nq {
            for j in 0..np {
                buf[i * np + j] *= Complex64::new(0.0, kp[j] / np as f64);
            }
        }
        grid.fft_p(&mut buf, true);
    }
    buf.into_iter().map(|v| v.re).collect()
}

/// Quadrature of `P (d_q A d_p B - d_p A d_q B)` over the grid.
pub fn pb_expectation_check(a: &ObservableSpec, b: &ObservableSpec, density: &Field) -> Result<f64> {
    density.require(Domain::PositionMomentum)?;
    let grid = density.grid();
    let (aq, ap) = gradients(a, grid)?;
    let (bq, bp) = gradients(b, grid)?;
    let sum: f64 = density
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v.re * (aq[i] * bp[i] - ap[i] * bq[i]))
        .sum();
    Ok(sum * grid.cell_area())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::Polynomial;
    use rand::{Rng, SeedableRng};

    fn oscillator(n: usize, half_width: f64) -> GenvalueOperator {
        let g = PhaseGrid::square(n, half_width, 1.0).unwrap();
        build_operators(&Polynomial::harmonic(1.0).into(), &g, &DeformationParams::quantum(1.0)).unwrap()
    }

    #[test]
    fn oscillator_levels_on_a_small_grid() {
        let op = oscillator(32, 6.0);
        let res = solve_spectrum(&op, 3, &SolveOptions::default()).unwrap();
        assert_eq!(res.spectrum_kind, SpectrumKind::Discrete);
        for (n, e) in res.eigenvalues.iter().enumerate() {
            assert!((e - (n as f64 + 0.5)).abs() < 1e-6, "{n}: {e}");
        }
        for (i, f) in res.eigenfields.iter().enumerate() {
            assert!((f.integral().re - 1.0).abs() < 1e-12);
            assert!(res.residual_plus[i] <= 1e-8);
            assert!(res.residual_minus[i] <= 1e-6);
            assert!(!res.is_degenerate(i));
        }
        // Odd clusters of L+ (n+m odd) carry no stationary normalizable state.
        assert!(!res.rejected.is_empty());
    }

    #[test]
    fn shifting_the_observable_shifts_the_spectrum() {
        let g = PhaseGrid::square(24, 6.0, 1.0).unwrap();
        let params = DeformationParams::quantum(1.0);
        let h = Polynomial::harmonic(1.0);
        let opts = SolveOptions {
            classify: false,
            ..Default::default()
        };
        let a = solve_spectrum(&build_operators(&h.clone().into(), &g, &params).unwrap(), 2, &opts).unwrap();
        let shifted = h.add(&Polynomial::constant(2.5));
        let b = solve_spectrum(&build_operators(&shifted.into(), &g, &params).unwrap(), 2, &opts).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((y - x - 2.5).abs() < 1e-10);
        }
    }

    #[test]
    fn operators_commute_on_smooth_localized_fields() {
        let op = oscillator(48, 8.0);
        let g = op.grid().clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let c: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v = Field::from_fn(&g, |q, p| {
                (c[0] + c[1] * q + c[2] * p + c[3] * q * p + c[4] * q * q + c[5] * p * p)
                    * (-(q * q + p * p) / 2.0).exp()
            });
            let pm = op.apply_plus(&op.apply_minus(&v).unwrap()).unwrap();
            let mp = op.apply_minus(&op.apply_plus(&v).unwrap()).unwrap();
            assert!(pm.sub(&mp).unwrap().l2_norm() <= 1e-10 * v.l2_norm());
        }
    }

    #[test]
    fn characteristic_domain_application_matches_position_domain() {
        let op = oscillator(32, 6.0);
        let g = op.grid().clone();
        let v = Field::from_fn(&g, |q, p| (-(q - 0.3).powi(2) - p * p).exp());
        let direct = char_from_density(&op.apply_plus(&v).unwrap()).unwrap();
        let via = op.apply_plus(&char_from_density(&v).unwrap()).unwrap();
        assert!(direct.linf_distance(&via).unwrap() < 1e-12);
    }

    #[test]
    fn position_observable_has_a_continuous_ridge_spectrum() {
        let g = PhaseGrid::square(32, 8.0, 1.0).unwrap();
        let op = build_operators(&Polynomial::q().into(), &g, &DeformationParams::quantum(1.0)).unwrap();
        let res = solve_spectrum(&op, 3, &SolveOptions::default()).unwrap();
        assert_eq!(res.spectrum_kind, SpectrumKind::Continuous);
        for (i, e) in res.eigenvalues.iter().enumerate() {
            assert!((e - g.q(i)).abs() < 1e-14);
            let f = &res.eigenfields[i];
            let height = 1.0 / (g.dq() * (g.spec().p_max - g.spec().p_min));
            for qi in 0..g.n_q() {
                for pj in 0..g.n_p() {
                    let want = if qi == i { height } else { 0.0 };
                    assert!((f.at(qi, pj).re - want).abs() < 1e-10 * height);
                }
            }
        }
    }

    #[test]
    fn degree_above_cap_is_unsupported() {
        let g = PhaseGrid::square(8, 4.0, 1.0).unwrap();
        let a = Polynomial::zero().with_term(5, 0, 1.0);
        let err = build_operators(&a.into(), &g, &DeformationParams::quantum(1.0)).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn classical_level_sets() {
        let g = PhaseGrid::square(64, 8.0, 1.0).unwrap();
        let ridge = classical_spectrum(&Polynomial::q().into(), &g, g.q(40)).unwrap();
        for i in 0..g.n_q() {
            let want = if i == 40 { 1.0 / (g.dq() * 16.0) } else { 0.0 };
            assert!((ridge.at(i, 5).re - want).abs() < 1e-12);
        }
        let flat = classical_spectrum(&Polynomial::constant(3.0).into(), &g, 3.0).unwrap();
        assert!((flat.at(7, 9).re - 1.0 / 256.0).abs() < 1e-15);
        let err = classical_spectrum(&Polynomial::q().into(), &g, 100.0).unwrap_err();
        assert!(matches!(err, Error::NoSupport(_)));
    }

    #[test]
    fn bracket_expectations() {
        let g = PhaseGrid::square(128, 8.0, 1.0).unwrap();
        let h: ObservableSpec = Polynomial::harmonic(1.0).into();
        let ring = classical_spectrum_with(&h, &g, 4.0, LevelBand::Smooth { width: 1.0 }).unwrap();
        let r = pb_expectation_check(&h, &Polynomial::q().into(), &ring).unwrap();
        assert!(r.abs() < 1e-6, "{r}");
        assert_eq!(pb_expectation_check(&h, &h, &ring).unwrap(), 0.0);
        let r = pb_expectation_check(&Polynomial::q().into(), &Polynomial::p().into(), &ring).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }
}
