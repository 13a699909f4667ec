//! Fitting fuzzy regression coefficients.
//!
//! The model is `Y_i = sum_j A_j X_ij` with crisp positive inputs and
//! footprint-valued coefficients `A_j = [[a_low, a_up], b, [c_low, c_up]]`.
//! Coefficients are the solution of a quadratic program whose objective
//! combines four squared terms:
//!
//! - `I1`: widths of the footprint on both sides, `(a_up - a_low) X` and `(c_up - c_low) X`;
//! - `I2`: spread of the lower membership, `(c_low - a_up) X`;
//! - `I3`: distance between predicted and observed peaks;
//! - `I4`: the necessity spread `(c_low - a_low) X`.
//!
//! and whose constraints keep the predicted upper membership h-cut around
//! the observed one (possibility) and the predicted lower membership h-cut
//! inside the observed one (necessity).
//!
//! Note that `0 <= a_low` is enforced for every regressor, so only
//! nonnegative coefficient supports are representable.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{linear_combination, It2TriFou, Tt2Number};
use crate::hcut::{reduce, ReducedFou};
use crate::qp::{self, QpProblem, QpStatus, SolverConfig};

const FIELDS: usize = 5;
const A_LOW: usize = 0;
const A_UP: usize = 1;
const PEAK: usize = 2;
const C_LOW: usize = 3;
const C_UP: usize = 4;

fn var(j: usize, field: usize) -> usize {
    FIELDS * j + field
}

/// Fuzzy coefficients, one footprint per regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoefficientSet {
    coefficients: Vec<It2TriFou>,
}

impl CoefficientSet {
    pub fn new(coefficients: Vec<It2TriFou>) -> Result<Self> {
        for c in &coefficients {
            c.validate()?;
            if c.a_low < 0.0 {
                return Err(Error::Ordering(format!(
                    "coefficient supports must be nonnegative, got a_low = {}",
                    c.a_low
                )));
            }
        }
        Ok(Self { coefficients })
    }

    pub fn as_slice(&self) -> &[It2TriFou] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn peaks(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.peak).collect()
    }

    /// Flattened `(a_low, a_up, b, c_low, c_up)` per regressor.
    pub fn to_vector(&self) -> Vec<f64> {
        self.coefficients.iter().flat_map(|c| c.to_array()).collect()
    }
}

fn check_inputs(inputs: &[Vec<f64>], outputs: usize) -> Result<usize> {
    if inputs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    if inputs.len() != outputs {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            found: outputs,
        });
    }
    let q = inputs[0].len();
    if q == 0 {
        return Err(Error::InvalidProblem("at least one regressor is required".into()));
    }
    for row in inputs {
        if row.len() != q {
            return Err(Error::DimensionMismatch {
                expected: q,
                found: row.len(),
            });
        }
        if let Some(&bad) = row.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::NonPositiveInput(bad));
        }
    }
    Ok(q)
}

/// Crisp positive inputs with triangular type-2 observed outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionDataset {
    inputs: Vec<Vec<f64>>,
    outputs: Vec<Tt2Number>,
}

impl RegressionDataset {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<Tt2Number>) -> Result<Self> {
        check_inputs(&inputs, outputs.len())?;
        for o in &outputs {
            Tt2Number::new(o.fou, o.apex_fraction)?;
        }
        Ok(Self { inputs, outputs })
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Tt2Number] {
        &self.outputs
    }

    pub fn regressors(&self) -> usize {
        self.inputs[0].len()
    }

    /// Replaces every observed output by its footprint cut at level `h`.
    pub fn reduce(&self, h: f64) -> Result<It2Dataset> {
        let outputs = self
            .outputs
            .iter()
            .map(|t| reduce(t, h).map(|r| r.to_fou()))
            .collect::<Result<Vec<_>>>()?;
        It2Dataset::new(self.inputs.clone(), outputs)
    }
}

/// Crisp positive inputs with interval type-2 observed outputs
/// `(p_low, p_up, q, r_low, r_up)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct It2Dataset {
    inputs: Vec<Vec<f64>>,
    outputs: Vec<It2TriFou>,
}

impl It2Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<It2TriFou>) -> Result<Self> {
        check_inputs(&inputs, outputs.len())?;
        for o in &outputs {
            o.validate()?;
        }
        Ok(Self { inputs, outputs })
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[It2TriFou] {
        &self.outputs
    }

    pub fn regressors(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveMode {
    /// `I1 + I2 - I3 + I4`, signs as printed in the combined objective.
    PaperLiteral,
    /// `I1 + I2 + I3 - I4`: peak distance minimised, necessity spread maximised.
    #[default]
    TextConsistent,
}

/// Right-hand side of the necessity constraint on the right leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NecessitySign {
    /// `q + (1 - h)(r_low - q)`, mirroring the possibility constraint.
    #[default]
    Corrected,
    /// `q - (1 - h)(r_low - q)`.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermWeights {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
}

impl Default for TermWeights {
    fn default() -> Self {
        Self {
            i1: 1.0,
            i2: 1.0,
            i3: 1.0,
            i4: 1.0,
        }
    }
}

impl TermWeights {
    pub const ZERO: TermWeights = TermWeights {
        i1: 0.0,
        i2: 0.0,
        i3: 0.0,
        i4: 0.0,
    };

    /// Weights with the mode's signs applied.
    fn signed(&self, mode: ObjectiveMode) -> [f64; 4] {
        match mode {
            ObjectiveMode::PaperLiteral => [self.i1, self.i2, -self.i3, self.i4],
            ObjectiveMode::TextConsistent => [self.i1, self.i2, self.i3, -self.i4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub h: f64,
    pub term_weights: TermWeights,
    pub objective_mode: ObjectiveMode,
    pub necessity_sign: NecessitySign,
    pub solver: SolverConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            h: 0.4,
            term_weights: TermWeights::default(),
            objective_mode: ObjectiveMode::default(),
            necessity_sign: NecessitySign::default(),
            solver: SolverConfig::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.h) {
            return Err(Error::Config(format!("h must lie in [0, 1), got {}", self.h)));
        }
        let w = self.term_weights;
        if [w.i1, w.i2, w.i3, w.i4].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!("term weights must be nonnegative, got {w:?}")));
        }
        Ok(())
    }
}

/// Accumulates `w (l' x - t)^2` into `1/2 x'Hx + g'x + c`.
fn add_square(h: &mut DMatrix<f64>, g: &mut DVector<f64>, c: &mut f64, terms: &[(usize, f64)], target: f64, w: f64) {
    if w == 0.0 {
        return;
    }
    for &(i, li) in terms {
        for &(k, lk) in terms {
            h[(i, k)] += 2.0 * w * li * lk;
        }
        g[i] -= 2.0 * w * target * li;
    }
    *c += w * target * target;
}

/// Quadratic objective over the `5q` coefficient vector, without constraints.
///
/// `peaks` are the observed peak values `q_i`.
pub fn objective_terms(
    inputs: &[Vec<f64>],
    peaks: &[f64],
    weights: &TermWeights,
    mode: ObjectiveMode,
) -> Result<QpProblem> {
    let q = check_inputs(inputs, peaks.len())?;
    let dim = FIELDS * q;
    let mut h = DMatrix::zeros(dim, dim);
    let mut g = DVector::zeros(dim);
    let mut c = 0.0;
    let [w1, w2, w3, w4] = weights.signed(mode);

    let spread = |j: usize, hi: usize, lo: usize, x: f64| [(var(j, hi), x), (var(j, lo), -x)];
    for (row, &peak) in inputs.iter().zip(peaks) {
        for (j, &x) in row.iter().enumerate() {
            add_square(&mut h, &mut g, &mut c, &spread(j, A_UP, A_LOW, x), 0.0, w1);
            add_square(&mut h, &mut g, &mut c, &spread(j, C_UP, C_LOW, x), 0.0, w1);
            add_square(&mut h, &mut g, &mut c, &spread(j, C_LOW, A_UP, x), 0.0, w2);
            add_square(&mut h, &mut g, &mut c, &spread(j, C_LOW, A_LOW, x), 0.0, w4);
        }
        let fit: Vec<(usize, f64)> = row.iter().enumerate().map(|(j, &x)| (var(j, PEAK), x)).collect();
        add_square(&mut h, &mut g, &mut c, &fit, peak, w3);
    }
    QpProblem::new(h, g, c, DMatrix::zeros(0, dim), DVector::zeros(0))
}

/// What a constraint row encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ConstraintKind {
    /// Predicted upper membership reaches at least as far left as observed.
    PossibilityLeft { observation: usize },
    /// Predicted upper membership reaches at least as far right as observed.
    PossibilityRight { observation: usize },
    /// Predicted lower membership starts no further left than observed.
    NecessityLeft { observation: usize },
    /// Predicted lower membership ends no further right than observed.
    NecessityRight { observation: usize },
    /// `0 <= a_low` (link 0) or one link of `a_low <= a_up <= b <= c_low <= c_up`.
    Ordering { regressor: usize, link: usize },
}

impl std::fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintKind::PossibilityLeft { observation } => write!(f, "possibility left, observation {observation}"),
            ConstraintKind::PossibilityRight { observation } => write!(f, "possibility right, observation {observation}"),
            ConstraintKind::NecessityLeft { observation } => write!(f, "necessity left, observation {observation}"),
            ConstraintKind::NecessityRight { observation } => write!(f, "necessity right, observation {observation}"),
            ConstraintKind::Ordering { regressor, link } => write!(f, "ordering link {link} of regressor {regressor}"),
        }
    }
}

/// Linear inequality rows `A x <= b` over the coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRows {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub kinds: Vec<ConstraintKind>,
}

/// h-level inclusion constraints plus the coefficient ordering chain.
pub fn inclusion_constraints(data: &It2Dataset, h: f64, sign: NecessitySign) -> ConstraintRows {
    let n = data.len();
    let q = data.regressors();
    let dim = FIELDS * q;
    let rows = 4 * n + FIELDS * q;
    let mut a = DMatrix::zeros(rows, dim);
    let mut b = DVector::zeros(rows);
    let mut kinds = Vec::with_capacity(rows);
    let s = 1.0 - h;

    for (i, (x, obs)) in data.inputs.iter().zip(&data.outputs).enumerate() {
        let qi = obs.peak;
        let base = 4 * i;
        for (j, &xj) in x.iter().enumerate() {
            // h*By + (1-h)*Ay_low <= h*q + (1-h)*p_low
            a[(base, var(j, PEAK))] = h * xj;
            a[(base, var(j, A_LOW))] = s * xj;
            // h*By + (1-h)*Cy_up >= h*q + (1-h)*r_up
            a[(base + 1, var(j, PEAK))] = -h * xj;
            a[(base + 1, var(j, C_UP))] = -s * xj;
            // h*By + (1-h)*Ay_up >= h*q + (1-h)*p_up
            a[(base + 2, var(j, PEAK))] = -h * xj;
            a[(base + 2, var(j, A_UP))] = -s * xj;
            // h*By + (1-h)*Cy_low <= rhs
            a[(base + 3, var(j, PEAK))] = h * xj;
            a[(base + 3, var(j, C_LOW))] = s * xj;
        }
        b[base] = qi - s * (qi - obs.a_low);
        b[base + 1] = -(qi + s * (obs.c_up - qi));
        b[base + 2] = -(qi - s * (qi - obs.a_up));
        b[base + 3] = match sign {
            NecessitySign::Corrected => qi + s * (obs.c_low - qi),
            NecessitySign::AsPrinted => qi - s * (obs.c_low - qi),
        };
        kinds.extend([
            ConstraintKind::PossibilityLeft { observation: i },
            ConstraintKind::PossibilityRight { observation: i },
            ConstraintKind::NecessityLeft { observation: i },
            ConstraintKind::NecessityRight { observation: i },
        ]);
    }

    for j in 0..q {
        let r = 4 * n + FIELDS * j;
        a[(r, var(j, A_LOW))] = -1.0;
        for link in 1..FIELDS {
            a[(r + link, var(j, link - 1))] = 1.0;
            a[(r + link, var(j, link))] = -1.0;
        }
        kinds.extend((0..FIELDS).map(|link| ConstraintKind::Ordering { regressor: j, link }));
    }

    ConstraintRows { matrix: a, rhs: b, kinds }
}

/// Largest violation of the inclusion and ordering constraints by `coeffs`.
pub fn constraint_violation(data: &It2Dataset, coeffs: &CoefficientSet, h: f64, sign: NecessitySign) -> Result<f64> {
    if coeffs.len() != data.regressors() {
        return Err(Error::DimensionMismatch {
            expected: data.regressors(),
            found: coeffs.len(),
        });
    }
    let rows = inclusion_constraints(data, h, sign);
    let x = DVector::from_vec(coeffs.to_vector());
    Ok((&rows.matrix * x - &rows.rhs).iter().fold(0.0_f64, |m, &v| m.max(v)))
}

/// Assembled quadratic program for `data`.
pub fn build_problem(data: &It2Dataset, cfg: &FitConfig) -> Result<(QpProblem, Vec<ConstraintKind>)> {
    let peaks: Vec<f64> = data.outputs.iter().map(|o| o.peak).collect();
    let obj = objective_terms(&data.inputs, &peaks, &cfg.term_weights, cfg.objective_mode)?;
    let rows = inclusion_constraints(data, cfg.h, cfg.necessity_sign);
    let p = QpProblem::new(
        obj.hessian().clone(),
        obj.gradient_vec().clone(),
        obj.constant(),
        rows.matrix,
        rows.rhs,
    )?;
    Ok((p, rows.kinds))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub coefficients: CoefficientSet,
    /// Objective in the units of the data.
    pub objective_value: f64,
    pub kkt_residual: f64,
    pub status: QpStatus,
}

/// Per-column input scales and the output scale used to condition the QP.
struct Scaling {
    columns: Vec<f64>,
    output: f64,
}

impl Scaling {
    fn of(data: &It2Dataset) -> Self {
        let q = data.regressors();
        let columns = (0..q)
            .map(|j| data.inputs.iter().fold(0.0_f64, |m, r| m.max(r[j])))
            .collect();
        let output = data
            .outputs
            .iter()
            .fold(0.0_f64, |m, o| m.max(o.a_low.abs()).max(o.c_up.abs()));
        Self {
            columns,
            output: if output > 0.0 { output } else { 1.0 },
        }
    }

    fn apply(&self, data: &It2Dataset) -> It2Dataset {
        let inputs = data
            .inputs
            .iter()
            .map(|r| r.iter().zip(&self.columns).map(|(x, s)| x / s).collect())
            .collect();
        let k = self.output;
        let outputs = data
            .outputs
            .iter()
            .map(|o| It2TriFou {
                a_low: o.a_low / k,
                a_up: o.a_up / k,
                peak: o.peak / k,
                c_low: o.c_low / k,
                c_up: o.c_up / k,
            })
            .collect();
        It2Dataset { inputs, outputs }
    }

    /// Coefficients in data units from the scaled solution vector.
    fn unscale(&self, x: &[f64], tol: f64) -> Result<CoefficientSet> {
        let mut coeffs = Vec::with_capacity(self.columns.len());
        for (j, chunk) in x.chunks(FIELDS).enumerate() {
            // remove rounding-level breaks in the ordering chain
            let mut v = [0.0; FIELDS];
            let mut prev = 0.0_f64;
            for (k, &raw) in chunk.iter().enumerate() {
                if raw < prev - tol {
                    return Err(Error::Ordering(format!(
                        "solver returned coefficient {j} out of order by {}",
                        prev - raw
                    )));
                }
                prev = prev.max(raw);
                v[k] = prev;
            }
            let f = self.output / self.columns[j];
            coeffs.push(It2TriFou::from_array(v.map(|c| c * f))?);
        }
        CoefficientSet::new(coeffs)
    }
}

/// Fits coefficients to interval type-2 observations.
pub fn fit_it2fr(data: &It2Dataset, cfg: &FitConfig) -> Result<Fit> {
    cfg.validate()?;
    let scaling = Scaling::of(data);
    let scaled = scaling.apply(data);
    let (problem, kinds) = build_problem(&scaled, cfg)?;
    let sol = qp::solve(&problem, &cfg.solver);
    match sol.status {
        QpStatus::Infeasible => {
            let index = sol.blocking_constraint.unwrap_or(0);
            Err(Error::Infeasible {
                index,
                description: kinds.get(index).map_or_else(|| "artificial bound".into(), |k| k.to_string()),
            })
        }
        QpStatus::Unbounded => Err(Error::Unbounded),
        QpStatus::OptimalConvex | QpStatus::LocalStationary => Ok(Fit {
            coefficients: scaling.unscale(&sol.point, cfg.solver.feasibility_tol)?,
            objective_value: sol.objective_value * scaling.output * scaling.output,
            kkt_residual: sol.kkt_residual,
            status: sol.status,
        }),
    }
}

/// Fits coefficients to triangular type-2 observations by cutting every
/// observation at `cfg.h` and fitting the resulting footprints.
pub fn fit_tt2fr(data: &RegressionDataset, cfg: &FitConfig) -> Result<Fit> {
    cfg.validate()?;
    fit_it2fr(&data.reduce(cfg.h)?, cfg)
}

pub fn predict(coeffs: &CoefficientSet, x_row: &[f64]) -> Result<It2TriFou> {
    linear_combination(coeffs.as_slice(), x_row)
}

/// h-cut of a predicted footprint, anchored at its own peak, for reporting
/// the predicted membership band at level `h`.
pub fn predicted_reduction(predicted: &It2TriFou, apex_fraction: f64, h: f64) -> Result<ReducedFou> {
    reduce(&Tt2Number::new(*predicted, apex_fraction)?, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Defuzzifier {
    /// The abscissa with membership one.
    #[default]
    Peak,
    /// Mean of the upper and lower membership centroids.
    FouCentroid,
}

pub fn defuzzify(fou: &It2TriFou) -> f64 {
    fou.peak
}

pub fn defuzzify_with(fou: &It2TriFou, method: Defuzzifier) -> f64 {
    match method {
        Defuzzifier::Peak => defuzzify(fou),
        Defuzzifier::FouCentroid => 0.5 * (fou.umf().centroid() + fou.lmf().centroid()),
    }
}
